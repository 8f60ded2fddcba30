#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rankalign/dataset.hpp"
#include "rankalign/distx.hpp"
#include "rankalign/model.hpp"

namespace rankalign {

struct TrainConfig {
  double margin = 0.03;
  double learning_rate = 4e-4;
  std::size_t batch_size = 256;
  std::size_t max_epochs = 200;
  std::size_t patience = 10;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  PairScheme scheme = PairScheme::all_pairs;
  // Train one scale per layer on top of the initial head instead of every channel weight.
  bool per_layer = false;

  /// Throws ValidationError for out-of-range fields.
  void validate() const;
};

/// max(0, d_pos - d_neg + margin).
double hinge_loss(double d_pos, double d_neg, double margin);

struct LossAndGradient {
  double loss = 0.0;              // mean hinge loss over the batch
  std::vector<double> gradient;   // d(mean loss)/dw, flattened in schema order
  std::size_t active = 0;         // tuples with a strictly positive hinge
};

/// Tensors are looked up as (set_id, pos_id) and (set_id, neg_id). The hinge
/// corner contributes a zero subgradient.
LossAndGradient batch_loss_and_grad(const WeightHead& head, const DistanceArchive& archive,
                                    std::span<const PairTuple> tuples, double margin);

struct AdamState {
  explicit AdamState(std::size_t parameters) : m(parameters, 0.0), v(parameters, 0.0) {}

  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
};

/// One bias-corrected Adam update followed by clamping every parameter at 0.
/// Throws NumericError on a non-finite gradient.
void adam_step(std::span<double> params, AdamState& state, std::span<const double> gradient, const TrainConfig& config);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;  // mean over the epoch's tuples, each taken before its batch update
  double val_rho = 0.0;     // merged Spearman rho on the validation sets; NaN when undefined
  double weight_l1 = 0.0;

  bool operator==(const EpochRecord&) const = default;
};

struct TrainTrace {
  double initial_train_loss = 0.0;
  std::vector<EpochRecord> epochs;
  std::optional<std::size_t> best_epoch;
  WeightHead head;  // head after best_epoch, or the initial head when no epoch ran

  bool operator==(const TrainTrace&) const = default;
};

/// Fine-tunes `init` on all training-set pairs with seeded epoch shuffles,
/// keeping the head with the highest validation rho and stopping after
/// `patience` epochs without improvement.
TrainTrace fit(const DistanceArchive& archive, const std::vector<RankedSet>& sets, const SplitPlan& split,
               const TrainConfig& config, const WeightHead& init);

std::string trace_to_json(const TrainTrace& trace, const TrainConfig& config);

}  // namespace rankalign

#include "rankalign/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "rankalign/alignment.hpp"
#include "rankalign/error.hpp"
#include "rankalign/rng.hpp"

namespace rankalign {

namespace {

double l1_norm(std::span<const double> w) {
  double sum = 0.0;
  for (double x : w) sum += std::fabs(x);
  return sum;
}

double validation_rho(const WeightHead& head, const DistanceArchive& archive, const std::vector<RankedSet>& val) {
  try {
    return evaluate(head, archive, val).merged_rho;
  } catch (const NumericError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

// Maps optimizer parameters onto a head. Per-channel mode optimizes the
// weights directly; per-layer mode optimizes one non-negative scale per layer
// applied to the initial head's weights.
class Parameterization {
 public:
  Parameterization(const WeightHead& init, bool per_layer) : init_(init), per_layer_(per_layer) {}

  std::vector<double> initial() const {
    if (per_layer_) return std::vector<double>(init_.schema().layer_count(), 1.0);
    return {init_.weights().begin(), init_.weights().end()};
  }

  WeightHead head(std::span<const double> params) const {
    if (!per_layer_) return WeightHead(init_.schema(), {params.begin(), params.end()});
    const auto& schema = init_.schema();
    std::vector<double> w(init_.weights().begin(), init_.weights().end());
    for (std::size_t l = 0; l < schema.layer_count(); ++l)
      for (std::size_t c = 0; c < schema.channels(l); ++c) w[schema.offset(l) + c] *= params[l];
    return WeightHead(schema, std::move(w));
  }

  std::vector<double> chain(std::span<const double> weight_gradient) const {
    if (!per_layer_) return {weight_gradient.begin(), weight_gradient.end()};
    const auto& schema = init_.schema();
    std::vector<double> g(schema.layer_count(), 0.0);
    for (std::size_t l = 0; l < schema.layer_count(); ++l) {
      const auto base = init_.layer(l);
      for (std::size_t c = 0; c < base.size(); ++c) g[l] += base[c] * weight_gradient[schema.offset(l) + c];
    }
    return g;
  }

 private:
  const WeightHead& init_;
  bool per_layer_;
};

}  // namespace

void TrainConfig::validate() const {
  if (!(margin >= 0.0) || !std::isfinite(margin)) throw ValidationError("margin must be a finite value >= 0");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ValidationError("learning rate must be > 0");
  if (batch_size == 0) throw ValidationError("batch size must be positive");
  if (patience == 0) throw ValidationError("patience must be positive");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0)) throw ValidationError("adam beta1 must lie in (0, 1)");
  if (!(adam_beta2 > 0.0 && adam_beta2 < 1.0)) throw ValidationError("adam beta2 must lie in (0, 1)");
  if (!(adam_epsilon > 0.0)) throw ValidationError("adam epsilon must be > 0");
}

double hinge_loss(double d_pos, double d_neg, double margin) { return std::max(0.0, d_pos - d_neg + margin); }

LossAndGradient batch_loss_and_grad(const WeightHead& head, const DistanceArchive& archive,
                                    std::span<const PairTuple> tuples, double margin) {
  const auto& schema = head.schema();
  if (!(schema == archive.schema())) throw ValidationError("weight head schema does not match the archive schema");
  LossAndGradient out;
  out.gradient.assign(schema.parameter_count(), 0.0);
  if (tuples.empty()) return out;

  for (const auto& tuple : tuples) {
    const auto& pos = archive.at(tuple.set_id, tuple.pos_id);
    const auto& neg = archive.at(tuple.set_id, tuple.neg_id);
    const double arg = distance(head, pos) - distance(head, neg) + margin;
    if (!(arg > 0.0)) {
      if (std::isnan(arg)) throw NumericError("NaN loss for pair (" + tuple.set_id + ", " + tuple.pos_id + ", " + tuple.neg_id + ")");
      continue;
    }
    out.loss += arg;
    ++out.active;
    for (std::size_t l = 0; l < schema.layer_count(); ++l) {
      auto* g = out.gradient.data() + schema.offset(l);
      const auto& p = pos.values[l];
      const auto& n = neg.values[l];
      for (std::size_t c = 0; c < p.size(); ++c) g[c] += static_cast<double>(p[c]) - static_cast<double>(n[c]);
    }
  }
  const auto count = static_cast<double>(tuples.size());
  out.loss /= count;
  for (auto& g : out.gradient) g /= count;
  return out;
}

void adam_step(std::span<double> params, AdamState& state, std::span<const double> gradient, const TrainConfig& config) {
  if (params.size() != gradient.size() || state.m.size() != params.size()) {
    throw ValidationError("adam_step: parameter, gradient and state sizes differ");
  }
  for (std::size_t i = 0; i < gradient.size(); ++i) {
    if (!std::isfinite(gradient[i])) throw NumericError("non-finite gradient at parameter " + std::to_string(i));
  }
  ++state.step;
  const double b1 = config.adam_beta1;
  const double b2 = config.adam_beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * gradient[i];
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * gradient[i] * gradient[i];
    const double m_hat = state.m[i] / correction1;
    const double v_hat = state.v[i] / correction2;
    params[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.adam_epsilon);
    params[i] = std::max(params[i], 0.0);
  }
}

TrainTrace fit(const DistanceArchive& archive, const std::vector<RankedSet>& sets, const SplitPlan& split,
               const TrainConfig& config, const WeightHead& init) {
  config.validate();
  if (!(init.schema() == archive.schema())) throw ValidationError("initial head schema does not match the archive schema");
  if (split.train_set_ids.empty()) throw ValidationError("training partition is empty");
  const auto train_sets = select_sets(sets, split.train_set_ids);
  const auto val_sets = select_sets(sets, split.val_set_ids);
  auto tuples = build_pairs(train_sets, config.scheme);
  if (tuples.empty()) throw ValidationError("no training pairs");

  const Parameterization param(init, config.per_layer);
  std::vector<double> params = param.initial();
  AdamState state(params.size());

  TrainTrace trace;
  trace.head = init;
  trace.initial_train_loss = batch_loss_and_grad(init, archive, tuples, config.margin).loss;
  if (!std::isfinite(trace.initial_train_loss)) throw NumericError("initial training loss is not finite");

  double best_rho = -std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    SplitMix64 rng(config.seed + epoch);
    shuffle(std::span<PairTuple>(tuples), rng);

    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < tuples.size(); begin += config.batch_size) {
      const auto end = std::min(tuples.size(), begin + config.batch_size);
      const std::span<const PairTuple> batch(tuples.data() + begin, end - begin);
      const auto head = param.head(params);
      const auto lg = batch_loss_and_grad(head, archive, batch, config.margin);
      if (!std::isfinite(lg.loss)) throw NumericError("non-finite loss in epoch " + std::to_string(epoch));
      loss_sum += lg.loss * static_cast<double>(batch.size());
      adam_step(params, state, param.chain(lg.gradient), config);
    }

    auto head = param.head(params);  // re-validates non-negativity
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(tuples.size());
    rec.val_rho = val_sets.empty() ? std::numeric_limits<double>::quiet_NaN() : validation_rho(head, archive, val_sets);
    rec.weight_l1 = l1_norm(head.weights());
    trace.epochs.push_back(rec);

    if (rec.val_rho > best_rho) {
      best_rho = rec.val_rho;
      trace.best_epoch = epoch;
      trace.head = std::move(head);
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  return trace;
}

std::string trace_to_json(const TrainTrace& trace, const TrainConfig& config) {
  const auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::json epochs = nlohmann::json::array();
  for (const auto& e : trace.epochs) {
    epochs.push_back({{"epoch", e.epoch}, {"train_loss", num(e.train_loss)}, {"val_rho", num(e.val_rho)}, {"weight_l1", num(e.weight_l1)}});
  }
  nlohmann::json doc = {
      {"config",
       {{"margin", config.margin},
        {"learning_rate", config.learning_rate},
        {"batch_size", config.batch_size},
        {"max_epochs", config.max_epochs},
        {"patience", config.patience},
        {"seed", config.seed},
        {"adam_beta1", config.adam_beta1},
        {"adam_beta2", config.adam_beta2},
        {"adam_epsilon", config.adam_epsilon},
        {"pair_scheme", to_string(config.scheme)},
        {"per_layer", config.per_layer}}},
      {"initial_train_loss", num(trace.initial_train_loss)},
      {"best_epoch", trace.best_epoch ? nlohmann::json(*trace.best_epoch) : nlohmann::json(nullptr)},
      {"epochs", std::move(epochs)},
  };
  return doc.dump(2) + "\n";
}

}  // namespace rankalign

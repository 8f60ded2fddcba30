// rankalign: fine-tune perceptual distance weights on human rankings and
// measure metric/human alignment.
//
// Exit codes: 0 success, 2 input validation, 3 numerical failure, 4 I/O.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rankalign/alignment.hpp"
#include "rankalign/boot.hpp"
#include "rankalign/dataset.hpp"
#include "rankalign/distx.hpp"
#include "rankalign/error.hpp"
#include "rankalign/io.hpp"
#include "rankalign/manifest.hpp"
#include "rankalign/model.hpp"
#include "rankalign/synth.hpp"
#include "rankalign/train.hpp"

namespace fs = std::filesystem;
using namespace rankalign;
using nlohmann::json;

namespace {

enum ExitCode : int { kOk = 0, kValidation = 2, kNumeric = 3, kIo = 4 };

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

fs::path with_suffix(const fs::path& base, const std::string& suffix) { return fs::path(base.string() + suffix); }

fs::path manifest_path(const fs::path& out) { return with_suffix(out, ".manifest.json"); }

std::vector<std::size_t> parse_channel_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      const long v = std::stol(item, &used);
      if (used != item.size() || v <= 0) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw ValidationError("--layers expects comma-separated positive channel counts, got '" + text + "'");
    }
  }
  if (out.empty()) throw ValidationError("--layers must list at least one layer");
  return out;
}

// Restricts sets to one side of a split when requested.
std::vector<RankedSet> subset_sets(const std::vector<RankedSet>& sets, const std::string& split_path,
                                   const std::string& subset) {
  if (subset == "all") return sets;
  if (split_path.empty()) throw ValidationError("--subset " + subset + " requires --split");
  const auto plan = load_split(split_path);
  return select_sets(sets, subset == "train" ? plan.train_set_ids : plan.val_set_ids);
}

// ---- synth ----------------------------------------------------------------

struct SynthArgs {
  std::size_t sets = 200;
  std::size_t images_per_set = 10;
  std::string layers = "8,16,32";
  std::size_t noise_swaps = 0;
  std::uint64_t seed = 0;
  double value_scale = 0.1;
  std::string out_prefix;
};

int cmd_synth(const SynthArgs& a) {
  Stopwatch clock;
  SynthConfig config;
  config.set_count = a.sets;
  config.images_per_set = a.images_per_set;
  config.schema = make_schema(parse_channel_list(a.layers));
  config.noise_swaps = a.noise_swaps;
  config.seed = a.seed;
  config.value_scale = a.value_scale;
  const auto data = generate(config);

  const fs::path prefix(a.out_prefix);
  const auto archive_path = with_suffix(prefix, ".fdx");
  const auto rankings_path = with_suffix(prefix, ".rankings.jsonl");
  const auto hidden_path = with_suffix(prefix, ".hidden.json");
  const auto permuted_path = with_suffix(prefix, ".permuted.json");
  write_archive(data.archive, archive_path);
  save_rankings(data.sets, rankings_path);
  save_weights(data.hidden, hidden_path);
  save_weights(permuted_head(data.hidden, a.seed ^ 0x5eedULL), permuted_path);

  const json cfg = {{"sets", a.sets},           {"images_per_set", a.images_per_set}, {"layers", a.layers},
                    {"noise_swaps", a.noise_swaps}, {"seed", a.seed},                 {"value_scale", a.value_scale}};
  write_manifest({"synth", cfg.dump(), {}, {archive_path, rankings_path, hidden_path, permuted_path}, clock.seconds()},
                 manifest_path(prefix));
  std::cout << "synth: " << data.sets.size() << " sets x " << a.images_per_set << " images, "
            << data.archive.schema().parameter_count() << " parameters -> " << archive_path.string() << "\n";
  return kOk;
}

// ---- split ----------------------------------------------------------------

struct SplitArgs {
  std::string rankings;
  double train_fraction = 0.7;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_split(const SplitArgs& a) {
  Stopwatch clock;
  const auto sets = load_rankings(a.rankings);
  const auto plan = split_sets(sets, a.train_fraction, a.seed);
  save_split(plan, a.out);
  const json cfg = {{"train_fraction", a.train_fraction}, {"seed", a.seed}, {"prng", "splitmix64"}};
  write_manifest({"split", cfg.dump(), {{"rankings", a.rankings}}, {a.out}, clock.seconds()}, manifest_path(a.out));
  std::cout << "split: " << plan.train_set_ids.size() << " train / " << plan.val_set_ids.size() << " val sets\n";
  return kOk;
}

// ---- build-pairs ----------------------------------------------------------

struct PairsArgs {
  std::string rankings;
  std::string scheme = "all_pairs";
  std::string out;
};

int cmd_build_pairs(const PairsArgs& a) {
  Stopwatch clock;
  const auto scheme = parse_pair_scheme(a.scheme);
  const auto sets = load_rankings(a.rankings);
  const auto pairs = build_pairs(sets, scheme);
  save_pairs(pairs, a.out);
  const json cfg = {{"scheme", to_string(scheme)}};
  write_manifest({"build-pairs", cfg.dump(), {{"rankings", a.rankings}}, {a.out}, clock.seconds()}, manifest_path(a.out));
  std::cout << "build-pairs: " << pairs.size() << " tuples from " << sets.size() << " sets\n";
  return kOk;
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
  std::string distances;
  std::string rankings;
  std::string split;
  std::string init;
  std::string out;
  std::string trace;
  double train_fraction = 0.7;
  TrainConfig config;
  std::string scheme = "all_pairs";
};

int cmd_train(TrainArgs a) {
  Stopwatch clock;
  a.config.scheme = parse_pair_scheme(a.scheme);
  a.config.validate();
  const auto archive = read_archive(a.distances);
  const auto sets = load_rankings(a.rankings);

  RunManifest manifest;
  manifest.command = "train";
  manifest.inputs = {{"distances", a.distances}, {"rankings", a.rankings}};

  SplitPlan plan;
  if (!a.split.empty()) {
    plan = load_split(a.split);
    manifest.inputs.emplace_back("split", a.split);
  } else {
    plan = split_sets(sets, a.train_fraction, a.config.seed);
    const auto split_out = with_suffix(a.out, ".split.json");
    save_split(plan, split_out);
    manifest.outputs.push_back(split_out);
  }

  const WeightHead init = a.init.empty() ? WeightHead::constant(archive.schema(), 1.0) : load_weights(a.init);
  if (!a.init.empty()) manifest.inputs.emplace_back("init", a.init);

  const auto trace = fit(archive, sets, plan, a.config, init);
  const fs::path trace_path = a.trace.empty() ? with_suffix(a.out, ".trace.json") : fs::path(a.trace);
  save_weights(trace.head, a.out);
  write_text_file(trace_path, trace_to_json(trace, a.config));
  manifest.outputs.insert(manifest.outputs.begin(), {a.out, trace_path});

  auto cfg = json::parse(trace_to_json(trace, a.config)).at("config");
  cfg["train_fraction"] = a.train_fraction;
  cfg["init"] = a.init.empty() ? "all-ones" : a.init;
  manifest.config_json = cfg.dump();
  manifest.wall_seconds = clock.seconds();
  write_manifest(manifest, manifest_path(a.out));

  std::cout << "train: " << trace.epochs.size() << " epochs, initial loss " << trace.initial_train_loss;
  if (trace.best_epoch) {
    const auto& best = trace.epochs[*trace.best_epoch];
    std::cout << ", best epoch " << *trace.best_epoch << " (train loss " << best.train_loss << ", val rho " << best.val_rho << ")";
  }
  std::cout << " -> " << a.out << "\n";
  return kOk;
}

// ---- eval -----------------------------------------------------------------

struct EvalArgs {
  std::string distances;
  std::string rankings;
  std::string weights;
  std::string aggregate = "merged";
  bool raw_scores = false;
  double confidence = 0.95;
  std::string split;
  std::string subset = "all";
  std::string out;
};

int cmd_eval(const EvalArgs& a) {
  Stopwatch clock;
  const auto archive = read_archive(a.distances);
  const auto sets = subset_sets(load_rankings(a.rankings), a.split, a.subset);
  const auto head = load_weights(a.weights);
  EvalOptions options{parse_aggregate(a.aggregate), a.raw_scores, a.confidence};
  const auto report = evaluate(head, archive, sets, options);

  const fs::path out(a.out);
  const auto csv = fs::path(out).replace_extension(".csv");
  write_text_file(out, report_to_json(report));
  write_text_file(csv, report_to_csv(report));

  const json cfg = {{"aggregate", to_string(options.aggregate)}, {"raw_scores", a.raw_scores},
                    {"confidence", a.confidence},                {"subset", a.subset}};
  RunManifest manifest{"eval", cfg.dump(), {{"distances", a.distances}, {"rankings", a.rankings}, {"weights", a.weights}}, {out, csv}, 0.0};
  if (!a.split.empty()) manifest.inputs.emplace_back("split", a.split);
  manifest.wall_seconds = clock.seconds();
  write_manifest(manifest, manifest_path(out));

  std::cout << "eval (" << to_string(report.aggregate) << ", " << report.set_count << " sets, " << report.item_count
            << " items): rho = " << report.spearman_rho << " (p = " << report.spearman_p << "), ICC(2,k) = " << report.icc2k
            << " [" << report.icc_ci_low << ", " << report.icc_ci_high << "] (p = " << report.icc_p << "), Koo-Li "
            << report.koo_li_band << ", Cicchetti " << report.cicchetti_band << "\n";
  return kOk;
}

// ---- bootstrap ------------------------------------------------------------

struct BootArgs {
  std::string distances;
  std::string rankings;
  std::string weights_a;
  std::string weights_b;
  std::string split;
  std::string subset = "all";
  std::string deltas_csv;
  std::string out;
  BootstrapOptions options;
};

int cmd_bootstrap(const BootArgs& a) {
  Stopwatch clock;
  if (a.options.resamples < 100) throw ValidationError("--resamples must be at least 100");
  const auto archive = read_archive(a.distances);
  const auto sets = subset_sets(load_rankings(a.rankings), a.split, a.subset);
  const auto head_a = load_weights(a.weights_a);
  const auto head_b = load_weights(a.weights_b);
  const auto result = paired_bootstrap(archive, sets, head_a, head_b, a.options);

  write_text_file(a.out, bootstrap_to_json(result));
  RunManifest manifest{"bootstrap", "", {{"distances", a.distances}, {"rankings", a.rankings}, {"weights_a", a.weights_a}, {"weights_b", a.weights_b}}, {a.out}, 0.0};
  if (!a.deltas_csv.empty()) {
    write_text_file(a.deltas_csv, deltas_to_csv(result));
    manifest.outputs.emplace_back(a.deltas_csv);
  }
  if (!a.split.empty()) manifest.inputs.emplace_back("split", a.split);
  manifest.config_json = json{{"resamples", a.options.resamples}, {"seed", a.options.seed},
                              {"confidence", a.options.confidence}, {"subset", a.subset}, {"prng", "splitmix64"}}
                             .dump();
  manifest.wall_seconds = clock.seconds();
  write_manifest(manifest, manifest_path(a.out));

  std::cout << "bootstrap (" << result.resamples << " resamples): delta ICC = " << result.delta_icc_mean << " ["
            << result.ci_low << ", " << result.ci_high << "], p = " << result.p_value << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fine-tune perceptual distance weights on human rankings and measure alignment", "rankalign"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate planted-model synthetic archives and rankings");
  s->add_option("--sets", synth.sets, "Number of target sets")->capture_default_str();
  s->add_option("--images-per-set", synth.images_per_set, "Images per set")->capture_default_str();
  s->add_option("--layers", synth.layers, "Comma-separated channel counts")->capture_default_str();
  s->add_option("--noise-swaps", synth.noise_swaps, "Adjacent transpositions per human order")->capture_default_str();
  s->add_option("--seed", synth.seed, "Generator seed")->capture_default_str();
  s->add_option("--value-scale", synth.value_scale, "Tensor values ~ U[0, scale)")->capture_default_str();
  s->add_option("--out-prefix", synth.out_prefix, "Output path prefix")->required();

  SplitArgs split;
  auto* sp = app.add_subcommand("split", "Split sets into train/validation partitions");
  sp->add_option("--rankings", split.rankings)->required();
  sp->add_option("--train-fraction", split.train_fraction)->capture_default_str();
  sp->add_option("--seed", split.seed)->capture_default_str();
  sp->add_option("--out", split.out)->required();

  PairsArgs pairs;
  auto* bp = app.add_subcommand("build-pairs", "Convert rankings into pairwise training tuples");
  bp->add_option("--rankings", pairs.rankings)->required();
  bp->add_option("--scheme", pairs.scheme, "all_pairs or adjacent")->capture_default_str();
  bp->add_option("--out", pairs.out)->required();

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Fine-tune weights with the margin ranking loss");
  t->add_option("--distances", train.distances, "FDX archive")->required();
  t->add_option("--rankings", train.rankings)->required();
  t->add_option("--split", train.split, "Split document; computed from --seed when omitted");
  t->add_option("--train-fraction", train.train_fraction)->capture_default_str();
  t->add_option("--init", train.init, "Initial weights; all-ones when omitted");
  t->add_option("--lr", train.config.learning_rate)->capture_default_str();
  t->add_option("--batch", train.config.batch_size)->capture_default_str();
  t->add_option("--margin", train.config.margin)->capture_default_str();
  t->add_option("--epochs", train.config.max_epochs)->capture_default_str();
  t->add_option("--patience", train.config.patience)->capture_default_str();
  t->add_option("--seed", train.config.seed)->capture_default_str();
  t->add_option("--beta1", train.config.adam_beta1)->capture_default_str();
  t->add_option("--beta2", train.config.adam_beta2)->capture_default_str();
  t->add_option("--adam-eps", train.config.adam_epsilon)->capture_default_str();
  t->add_option("--scheme", train.scheme, "all_pairs or adjacent")->capture_default_str();
  t->add_flag("--per-layer", train.config.per_layer, "Train one scale per layer instead of per channel");
  t->add_option("--out", train.out, "Best weights")->required();
  t->add_option("--trace", train.trace, "Trace document; <out>.trace.json when omitted");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Measure alignment of a weight head with human rankings");
  e->add_option("--distances", eval.distances)->required();
  e->add_option("--rankings", eval.rankings)->required();
  e->add_option("--weights", eval.weights)->required();
  e->add_option("--aggregate", eval.aggregate, "merged or per-set")->capture_default_str();
  e->add_flag("--raw-scores", eval.raw_scores, "Merged rho against pooled raw distances");
  e->add_option("--confidence", eval.confidence)->capture_default_str();
  e->add_option("--split", eval.split);
  e->add_option("--subset", eval.subset, "all, train or val")->check(CLI::IsMember({"all", "train", "val"}))->capture_default_str();
  e->add_option("--out", eval.out, "Report document; CSV written beside it")->required();

  BootArgs boot;
  auto* b = app.add_subcommand("bootstrap", "Paired bootstrap of the ICC difference between two heads");
  b->add_option("--distances", boot.distances)->required();
  b->add_option("--rankings", boot.rankings)->required();
  b->add_option("--weights-a", boot.weights_a)->required();
  b->add_option("--weights-b", boot.weights_b)->required();
  b->add_option("--resamples", boot.options.resamples)->capture_default_str();
  b->add_option("--seed", boot.options.seed)->capture_default_str();
  b->add_option("--confidence", boot.options.confidence)->capture_default_str();
  b->add_option("--split", boot.split);
  b->add_option("--subset", boot.subset)->check(CLI::IsMember({"all", "train", "val"}))->capture_default_str();
  b->add_option("--deltas-csv", boot.deltas_csv, "Write per-resample deltas");
  b->add_option("--out", boot.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& ok) {
    return app.exit(ok);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kValidation;
  }

  try {
    if (*s) return cmd_synth(synth);
    if (*sp) return cmd_split(split);
    if (*bp) return cmd_build_pairs(pairs);
    if (*t) return cmd_train(train);
    if (*e) return cmd_eval(eval);
    if (*b) return cmd_bootstrap(boot);
  } catch (const ValidationError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kValidation;
  } catch (const NumericError& err) {
    std::cerr << "numerical failure: " << err.what() << "\n";
    return kNumeric;
  } catch (const IoError& err) {
    std::cerr << "i/o error: " << err.what() << "\n";
    return kIo;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return kOk;
}

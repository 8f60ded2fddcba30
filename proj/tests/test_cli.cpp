#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "rankalign/dataset.hpp"
#include "rankalign/distx.hpp"
#include "rankalign/io.hpp"
#include "rankalign/model.hpp"
#include "rankalign/synth.hpp"
#include "test_support.hpp"

using namespace rankalign;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Runs the CLI with stdout and stderr captured to `log`; returns the exit status.
int run(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("\"") + RANKALIGN_CLI + "\" " + args + " >\"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

std::size_t line_count(const fs::path& p) {
  const auto text = read_text_file(p);
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

const LayerSchema kOne({{"only", 1}});

// Example fixture: humans order A<B<C<D; the metric orders A, D, B, C.
void write_example(const fs::path& dir, bool second_set) {
  DistanceArchive archive(kOne);
  std::vector<RankedSet> sets{{"s1", "t1", {"A", "B", "C", "D"}, {"A", "B", "C", "D"}}};
  const std::pair<const char*, float> r1[] = {{"A", 0.1f}, {"B", 0.3f}, {"C", 0.4f}, {"D", 0.2f}};
  for (const auto& [id, v] : r1) archive.insert({"s1", id, {{v}}});
  if (second_set) {
    // Metric order D, B, A, C.
    sets.push_back({"s2", "t2", {"A", "B", "C", "D"}, {"A", "B", "C", "D"}});
    const std::pair<const char*, float> r2[] = {{"A", 0.3f}, {"B", 0.2f}, {"C", 0.4f}, {"D", 0.1f}};
    for (const auto& [id, v] : r2) archive.insert({"s2", id, {{v}}});
  }
  write_archive(archive, dir / "d.fdx");
  save_rankings(sets, dir / "r.jsonl");
  save_weights(WeightHead::constant(kOne, 1.0), dir / "w.json");
}

}  // namespace

TEST_CASE("cli: synth and build-pairs") {
  const auto dir = rankalign::testing::scratch_dir("cli_pairs");
  REQUIRE(run("synth --sets 3 --images-per-set 10 --layers 2,3 --out-prefix " + q(dir / "p"), dir / "log") == 0);
  for (const char* suffix : {".fdx", ".rankings.jsonl", ".hidden.json", ".permuted.json", ".manifest.json"})
    CHECK(fs::exists(dir / ("p" + std::string(suffix))));

  CHECK(run("build-pairs --rankings " + q(dir / "p.rankings.jsonl") + " --out " + q(dir / "all.jsonl"), dir / "log") == 0);
  CHECK(line_count(dir / "all.jsonl") == 3 * 45);
  CHECK(run("build-pairs --scheme adjacent --rankings " + q(dir / "p.rankings.jsonl") + " --out " + q(dir / "adj.jsonl"),
            dir / "log") == 0);
  CHECK(line_count(dir / "adj.jsonl") == 3 * 9);
  CHECK(fs::exists(dir / "adj.jsonl.manifest.json"));

  write_text_file(dir / "bad.jsonl",
                  "{\"set_id\": \"a\", \"target_id\": \"t\", \"images\": [\"x\", \"y\"], \"human_order\": [\"x\", \"y\"]}\n"
                  "{\"set_id\": \"b\", \"images\": [\"x\"\n");
  CHECK(run("build-pairs --rankings " + q(dir / "bad.jsonl") + " --out " + q(dir / "bad.jsonl"), dir / "log") == 2);
  CHECK(read_text_file(dir / "log").find("line 2") != std::string::npos);

  CHECK(run("build-pairs --rankings " + q(dir / "missing.jsonl") + " --out " + q(dir / "x.jsonl"), dir / "log") == 4);
  CHECK(run("build-pairs --scheme nonsense --rankings " + q(dir / "p.rankings.jsonl") + " --out " + q(dir / "x.jsonl"),
            dir / "log") == 2);
}

TEST_CASE("cli: train") {
  const auto dir = rankalign::testing::scratch_dir("cli_train");
  REQUIRE(run("synth --sets 30 --layers 4,8 --seed 3 --out-prefix " + q(dir / "p"), dir / "log") == 0);
  const std::string common = "train --distances " + q(dir / "p.fdx") + " --rankings " + q(dir / "p.rankings.jsonl");

  REQUIRE(run(common + " --epochs 0 --out " + q(dir / "zero.json"), dir / "log") == 0);
  CHECK(load_weights(dir / "zero.json") == WeightHead::constant(make_schema({4, 8}), 1.0));
  CHECK(fs::exists(dir / "zero.json.split.json"));
  CHECK(fs::exists(dir / "zero.json.trace.json"));

  REQUIRE(run(common + " --epochs 20 --seed 9 --out " + q(dir / "a.json"), dir / "log") == 0);
  REQUIRE(run(common + " --epochs 20 --seed 9 --split " + q(dir / "a.json.split.json") + " --out " + q(dir / "b.json"),
              dir / "log") == 0);
  CHECK(read_text_file(dir / "a.json") == read_text_file(dir / "b.json"));
  const auto trace = json::parse(read_text_file(dir / "a.json.trace.json"));
  CHECK(trace["epochs"].size() <= 20);
  const auto manifest = json::parse(read_text_file(dir / "a.json.manifest.json"));
  CHECK(manifest["command"] == "train");
  CHECK(manifest["inputs"][0]["role"] == "distances");
  CHECK(manifest["inputs"][0]["sha256"].get<std::string>().size() == 64);

  CHECK(run(common + " --lr -1 --out " + q(dir / "c.json"), dir / "log") == 2);
  CHECK(run(common + " --init " + q(dir / "p.fdx") + " --out " + q(dir / "c.json"), dir / "log") == 2);
}

TEST_CASE("cli: eval reproduces the worked example") {
  const auto dir = rankalign::testing::scratch_dir("cli_eval");
  write_example(dir, false);
  REQUIRE(run("eval --distances " + q(dir / "d.fdx") + " --rankings " + q(dir / "r.jsonl") + " --weights " +
                  q(dir / "w.json") + " --out " + q(dir / "rep.json"),
              dir / "log") == 0);
  const auto rep = json::parse(read_text_file(dir / "rep.json"));
  CHECK(rep["spearman_rho"].get<double>() == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(rep["icc2k"].get<double>() == doctest::Approx(0.64).epsilon(1e-12));
  CHECK(rep["anova"]["ms_r"].get<double>() == doctest::Approx(7.0 / 3.0).epsilon(1e-12));
  CHECK(rep["koo_li_band"] == "Moderate");
  CHECK(fs::exists(dir / "rep.csv"));
  CHECK(fs::exists(dir / "rep.json.manifest.json"));
}

TEST_CASE("cli: per-set aggregation differs from merged") {
  const auto dir = rankalign::testing::scratch_dir("cli_agg");
  write_example(dir, true);
  const std::string common = "eval --distances " + q(dir / "d.fdx") + " --rankings " + q(dir / "r.jsonl") +
                             " --weights " + q(dir / "w.json");
  REQUIRE(run(common + " --out " + q(dir / "merged.json"), dir / "log") == 0);
  REQUIRE(run(common + " --aggregate per-set --out " + q(dir / "per.json"), dir / "log") == 0);
  const auto merged = json::parse(read_text_file(dir / "merged.json"));
  const auto per = json::parse(read_text_file(dir / "per.json"));
  CHECK(per["spearman_rho"].get<double>() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(per["icc2k"].get<double>() == doctest::Approx((0.64 - 3.2) / 2).epsilon(1e-12));
  CHECK(merged["icc2k"].get<double>() != doctest::Approx(per["icc2k"].get<double>()));
  CHECK(per["per_set"]["s2"]["spearman_rho"].get<double>() == doctest::Approx(-0.4).epsilon(1e-12));

  CHECK(run(common + " --aggregate sideways --out " + q(dir / "x.json"), dir / "log") == 2);
  CHECK(run(common + " --subset val --out " + q(dir / "x.json"), dir / "log") == 2);
}

TEST_CASE("cli: bootstrap") {
  const auto dir = rankalign::testing::scratch_dir("cli_boot");
  REQUIRE(run("synth --sets 20 --layers 4,8 --noise-swaps 2 --out-prefix " + q(dir / "p"), dir / "log") == 0);
  const std::string common = "bootstrap --distances " + q(dir / "p.fdx") + " --rankings " + q(dir / "p.rankings.jsonl");
  REQUIRE(run(common + " --weights-a " + q(dir / "p.hidden.json") + " --weights-b " + q(dir / "p.hidden.json") +
                  " --resamples 200 --deltas-csv " + q(dir / "d.csv") + " --out " + q(dir / "same.json"),
              dir / "log") == 0);
  const auto same = json::parse(read_text_file(dir / "same.json"));
  CHECK(same["delta_icc_full"].get<double>() == 0.0);
  CHECK(same["ci_low"].get<double>() == 0.0);
  CHECK(same["ci_high"].get<double>() == 0.0);
  CHECK(same["p_value"].get<double>() == 1.0);
  CHECK(line_count(dir / "d.csv") == 201);

  const std::string ab = common + " --weights-a " + q(dir / "p.hidden.json") + " --weights-b " + q(dir / "p.permuted.json");
  REQUIRE(run(ab + " --resamples 300 --seed 4 --out " + q(dir / "x.json"), dir / "log") == 0);
  REQUIRE(run(ab + " --resamples 300 --seed 4 --out " + q(dir / "y.json"), dir / "log") == 0);
  auto x = json::parse(read_text_file(dir / "x.json"));
  auto y = json::parse(read_text_file(dir / "y.json"));
  CHECK(x == y);
  CHECK(fs::exists(dir / "x.json.manifest.json"));

  CHECK(run(ab + " --resamples 99 --out " + q(dir / "z.json"), dir / "log") == 2);
}

TEST_CASE("cli: usage errors exit 2") {
  const auto dir = rankalign::testing::scratch_dir("cli_usage");
  CHECK(run("eval", dir / "log") == 2);
  CHECK(run("no-such-command", dir / "log") == 2);
}

#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "hip/io.hpp"
#include "hip/simgen.hpp"
#include "test_util.hpp"

using namespace hip;
namespace fs = std::filesystem;

#ifndef HIP_CLI_PATH
#define HIP_CLI_PATH "hip"
#endif
#ifndef HIP_SCHEMA_DIR
#define HIP_SCHEMA_DIR "schemas"
#endif

namespace {

fs::path fresh_dir(const std::string& tag) {
  static int counter = 0;
  const fs::path dir = fs::temp_directory_path() /
                       ("hip_io_test_" + tag + "_" + std::to_string(::getpid()) +
                        "_" + std::to_string(counter++));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

CliResult run_cli(const std::string& args) {
  const fs::path dir = fresh_dir("cli_io");
  const fs::path out_file = dir / "stdout.txt";
  const fs::path err_file = dir / "stderr.txt";
  const std::string cmd = std::string(HIP_CLI_PATH) + " " + args + " > " +
                          out_file.string() + " 2> " + err_file.string();
  const int status = std::system(cmd.c_str());
  CliResult result;
  result.code = WEXITSTATUS(status);
  result.out = read_text(out_file);
  result.err = read_text(err_file);
  return result;
}

json load_schema(const std::string& name) {
  return read_json(fs::path(HIP_SCHEMA_DIR) / name);
}

void strip_timings(json& value) {
  if (value.is_object()) {
    value.erase("wall_ms");
    value.erase("elapsed_ms");
    value.erase("wall_s");
    for (auto& [key, child] : value.items()) strip_timings(child);
  } else if (value.is_array()) {
    for (auto& child : value) strip_timings(child);
  }
}

bool same_json_modulo_timings(const fs::path& a, const fs::path& b) {
  json ja = read_json(a);
  json jb = read_json(b);
  strip_timings(ja);
  strip_timings(jb);
  return ja == jb;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("csv round trip is exact") {
  const fs::path dir = fresh_dir("csv");
  Rng rng(1);
  Eigen::MatrixXd m(7, 3);
  for (Index i = 0; i < 7; ++i)
    for (Index j = 0; j < 3; ++j) m(i, j) = rng.normal() * std::pow(10.0, j - 1);
  m(0, 0) = 0.1;  // not exactly representable; shortest-round-trip must hold
  write_csv(dir / "m.csv", {"a", "b", "c"}, m);
  const Csv csv = read_csv(dir / "m.csv");
  CHECK(csv.header == std::vector<std::string>{"a", "b", "c"});
  CHECK(csv.values == m);
}

TEST_CASE("csv reader reports malformed rows with location") {
  const fs::path dir = fresh_dir("badcsv");
  write_text(dir / "bad.csv", "a,b\n1.0,2.0\n3.0\n");
  CHECK_THROWS_AS(read_csv(dir / "bad.csv"), DataError);
  write_text(dir / "nonnum.csv", "a,b\n1.0,oops\n");
  CHECK_THROWS_AS(read_csv(dir / "nonnum.csv"), DataError);
}

TEST_CASE("dataset write/load round trip preserves everything") {
  ScenarioSpec spec;
  spec.p = {12, 9};
  spec.n = {10, 11};
  spec.signal_count = 4;
  spec.family = Family::Zip;
  spec.seed = 3;
  const auto [data, truth] = generate_dataset(spec);
  const fs::path dir = fresh_dir("dataset");
  const fs::path manifest = write_dataset(dir, data);
  const MultiViewDataset loaded = load_dataset(manifest);
  CHECK(loaded.family() == Family::Zip);
  for (Index d = 0; d < 2; ++d) {
    CHECK(loaded.views[d].variables == data.views[d].variables);
    for (Index s = 0; s < 2; ++s) CHECK(loaded.x(d, s) == data.x(d, s));
  }
  for (Index s = 0; s < 2; ++s) {
    CHECK(loaded.outcome[s].counts == data.outcome[s].counts);
    CHECK(loaded.outcome[s].offsets == data.outcome[s].offsets);
  }
}

TEST_CASE("multiclass outcome round trip keeps labels and classes") {
  auto data = testutil::random_dataset(Family::MultiClass, {9, 8}, {4}, 4, 3);
  const fs::path dir = fresh_dir("mc");
  const fs::path manifest = write_dataset(dir, data);
  const MultiViewDataset loaded = load_dataset(manifest);
  for (Index s = 0; s < 2; ++s) {
    CHECK(loaded.outcome[s].labels == data.outcome[s].labels);
    CHECK(loaded.outcome[s].num_classes() == 3);
  }
}

TEST_CASE("model artifact json round trip") {
  ModelArtifact model;
  model.family = Family::Zip;
  model.k = 2;
  model.lambda_g = 0.75;
  model.lambda_xi = 1.25;
  model.gamma = {1, 0};
  model.seed = 42;
  model.view_names = {"genes", "proteins"};
  model.variable_names = {{"g1", "g2", "g3"}, {"p1", "p2"}};
  model.subgroup_names = {"m", "f"};
  model.n_top = {2, 1};
  model.standardization.mode = Standardization::Subgroup;
  ColumnStats stats;
  stats.mean = Eigen::VectorXd::LinSpaced(3, 0.0, 1.0);
  stats.scale = Eigen::VectorXd::Constant(3, 2.0);
  stats.constant = {0, 1, 0};
  model.standardization.stats = {{stats, stats}, {stats, stats}};
  model.union_by_view = {{0, 2}, {1}};
  model.subset_b = {{Eigen::MatrixXd::Random(2, 2), Eigen::MatrixXd::Random(2, 2)},
                    {Eigen::MatrixXd::Random(1, 2), Eigen::MatrixXd::Random(1, 2)}};
  model.theta = Eigen::MatrixXd::Random(2, 1);
  model.beta0 = Eigen::RowVectorXd::Random(1);
  model.tau = 0.21;
  model.ebic = {10.0, 11.0, 12.0};
  model.report = {{"training_metric", {{"metric", "d2"}, {"value", 0.5}}}};

  const json encoded = model_to_json(model);
  const ModelArtifact decoded = model_from_json(encoded);
  CHECK(decoded.family == Family::Zip);
  CHECK(decoded.lambda_xi == model.lambda_xi);
  CHECK(decoded.union_by_view == model.union_by_view);
  CHECK(decoded.subset_b[0][1] == model.subset_b[0][1]);
  CHECK(decoded.theta == model.theta);
  CHECK(decoded.beta0 == model.beta0);
  CHECK(decoded.tau == model.tau);
  CHECK(decoded.ebic.ebic05 == model.ebic.ebic05);
  CHECK(decoded.standardization.stats[1][0].scale == stats.scale);
  CHECK(decoded.standardization.stats[0][0].constant[1] == 1);
  CHECK(model_to_json(decoded) == encoded);
}

TEST_CASE("schema checker catches missing keys and type errors") {
  const json schema = load_schema("truth.schema.json");
  ScenarioSpec spec;
  spec.p = {8, 8};
  spec.n = {6, 6};
  spec.signal_count = 3;
  spec.seed = 9;
  Rng rng(spec.seed);
  const auto truth = generate_loadings(spec, rng);
  const json good = truth_to_json(truth, spec);
  CHECK(schema_violations(good, schema).empty());

  json missing = good;
  missing.erase("tau");
  CHECK_FALSE(schema_violations(missing, schema).empty());
  json wrong_type = good;
  wrong_type["k_true"] = "two";
  CHECK_FALSE(schema_violations(wrong_type, schema).empty());
  json bad_enum = good;
  bad_enum["family"] = "gaussian";
  CHECK_FALSE(schema_violations(bad_enum, schema).empty());
}

TEST_CASE("file digest is content-determined") {
  const fs::path dir = fresh_dir("digest");
  write_text(dir / "a.txt", "hello");
  write_text(dir / "b.txt", "hello");
  write_text(dir / "c.txt", "hellp");
  CHECK(file_digest(dir / "a.txt") == file_digest(dir / "b.txt"));
  CHECK(file_digest(dir / "a.txt") != file_digest(dir / "c.txt"));
  CHECK(file_digest(dir / "a.txt").size() == 16);
}

// ---- CLI end-to-end ----

TEST_CASE("cli simulate is byte-identical across reruns") {
  const fs::path a = fresh_dir("sim_a");
  const fs::path b = fresh_dir("sim_b");
  const std::string flags =
      "simulate --family zip --p 20,15 --n 12,13 --signal 4 --seed 7 --out ";
  CHECK(run_cli(flags + a.string()).code == 0);
  CHECK(run_cli(flags + b.string()).code == 0);
  for (const auto& entry : fs::directory_iterator(a)) {
    const std::string name = entry.path().filename().string();
    if (name == "run_manifest.json") continue;  // carries wall time and paths
    CHECK(read_text(entry.path()) == read_text(b / name));
  }

  const json manifest = read_json(a / "manifest.json");
  CHECK(schema_violations(manifest, load_schema("dataset_manifest.schema.json"))
            .empty());
  CHECK(schema_violations(read_json(a / "truth.json"),
                          load_schema("truth.schema.json"))
            .empty());
  CHECK(schema_violations(read_json(a / "run_manifest.json"),
                          load_schema("run_manifest.schema.json"))
            .empty());
}

TEST_CASE("cli fit writes a schema-valid model without a search section") {
  const fs::path data = fresh_dir("fit_data");
  REQUIRE(run_cli("simulate --family poisson --p 16,12 --n 14,15 --signal 4 "
                  "--seed 5 --out " +
                  data.string())
              .code == 0);
  const fs::path out = fresh_dir("fit_out");
  const auto result =
      run_cli("fit --data " + (data / "manifest.json").string() +
              " --lambda-g 0.5 --lambda-xi 0.5 --ntop 4 --seed 2 --iter-max 25"
              " --out " +
              out.string());
  CHECK(result.code == 0);
  const json model = read_json(out / "model.json");
  CHECK(schema_violations(model, load_schema("model.schema.json")).empty());
  CHECK_FALSE(model.at("report").contains("search"));
  CHECK(model.at("ebic").at("ebic0").get<double>() <=
        model.at("ebic").at("ebic1").get<double>());
}

TEST_CASE("cli predict on the training data reproduces the training metric") {
  const fs::path data = fresh_dir("pr_data");
  REQUIRE(run_cli("simulate --family zip --p 16,12 --n 18,16 --signal 4 "
                  "--seed 6 --out " +
                  data.string())
              .code == 0);
  const fs::path out = fresh_dir("pr_fit");
  REQUIRE(run_cli("fit --data " + (data / "manifest.json").string() +
                  " --lambda-g 0.75 --lambda-xi 0.75 --ntop 4 --seed 2 "
                  "--iter-max 25 --out " +
                  out.string())
              .code == 0);
  const fs::path pred = fresh_dir("pr_pred");
  REQUIRE(run_cli("predict --model " + (out / "model.json").string() +
                  " --data " + (data / "manifest.json").string() + " --out " +
                  pred.string())
              .code == 0);
  const json model = read_json(out / "model.json");
  const json metrics = read_json(pred / "metrics.json");
  CHECK(schema_violations(metrics, load_schema("metrics.schema.json")).empty());
  const double train = model.at("report").at("training_metric").at("value");
  const double predicted = metrics.at("value");
  CHECK(std::abs(train - predicted) < 1e-10);
  CHECK(fs::exists(pred / "predictions_subgroup1.csv"));
  CHECK(fs::exists(pred / "predictions_subgroup2.csv"));
}

TEST_CASE("cli predict without an outcome emits predictions and a notice") {
  const fs::path data = fresh_dir("noout_data");
  REQUIRE(run_cli("simulate --family poisson --p 10,8 --n 12,11 --signal 3 "
                  "--seed 8 --out " +
                  data.string())
              .code == 0);
  const fs::path fit_out = fresh_dir("noout_fit");
  REQUIRE(run_cli("fit --data " + (data / "manifest.json").string() +
                  " --ntop 3 --iter-max 15 --out " + fit_out.string())
              .code == 0);
  // strip the outcome section from a copy of the manifest
  json manifest = read_json(data / "manifest.json");
  manifest.erase("outcome");
  write_json(data / "manifest_noy.json", manifest);

  const fs::path pred = fresh_dir("noout_pred");
  const auto result =
      run_cli("predict --model " + (fit_out / "model.json").string() +
              " --data " + (data / "manifest_noy.json").string() + " --out " +
              pred.string());
  CHECK(result.code == 0);
  CHECK(result.out.find("no test outcome") != std::string::npos);
  CHECK(fs::exists(pred / "predictions_subgroup1.csv"));
  CHECK_FALSE(fs::exists(pred / "metrics.json"));
}

TEST_CASE("cli tune: 13 random candidates, jobs-invariant outputs") {
  const fs::path data = fresh_dir("tune_data");
  REQUIRE(run_cli("simulate --family zip --p 12,10 --n 12,13 --signal 3 "
                  "--seed 9 --out " +
                  data.string())
              .code == 0);
  const fs::path out1 = fresh_dir("tune_j1");
  const fs::path out4 = fresh_dir("tune_j4");
  const std::string base =
      "tune --data " + (data / "manifest.json").string() +
      " --mode random --steps 8 --range 0:2 --criterion ebic1 --ntop 3 "
      "--seed 3 --iter-max 6 --inner-cap 40 ";
  REQUIRE(run_cli(base + "--jobs 1 --out " + out1.string()).code == 0);
  REQUIRE(run_cli(base + "--jobs 4 --out " + out4.string()).code == 0);

  const json report = read_json(out1 / "search_report.json");
  CHECK(schema_violations(report, load_schema("search_report.schema.json"))
            .empty());
  CHECK(report.at("candidates").size() == 13);
  CHECK(same_json_modulo_timings(out1 / "search_report.json",
                                 out4 / "search_report.json"));
  CHECK(same_json_modulo_timings(out1 / "model.json", out4 / "model.json"));
  const json model = read_json(out1 / "model.json");
  CHECK(model.at("report").contains("search"));
}

TEST_CASE("cli evaluate scores selection against the generating truth") {
  const fs::path data = fresh_dir("eval_data");
  REQUIRE(run_cli("simulate --family poisson --p 14,11 --n 13,12 --signal 3 "
                  "--seed 10 --out " +
                  data.string())
              .code == 0);
  const fs::path fit_out = fresh_dir("eval_fit");
  REQUIRE(run_cli("fit --data " + (data / "manifest.json").string() +
                  " --ntop 3 --iter-max 20 --out " + fit_out.string())
              .code == 0);
  const fs::path metrics = fresh_dir("eval_out") / "selection_metrics.json";
  const auto result =
      run_cli("evaluate --model " + (fit_out / "model.json").string() +
              " --truth " + (data / "truth.json").string() + " --out " +
              metrics.string());
  CHECK(result.code == 0);
  const json parsed = read_json(metrics);
  CHECK(
      schema_violations(parsed, load_schema("selection_metrics.schema.json"))
          .empty());
  CHECK(parsed.at("per_block").size() == 4);
}

TEST_CASE("cli scree: rank-1 data suggests K = 1; bad threshold is usage") {
  // one subgroup, one true component, no noise: the stacked matrix is rank 1
  const fs::path data = fresh_dir("scree_data");
  REQUIRE(run_cli("simulate --family poisson --p 12,10 --n 14 --signal 3 "
                  "--k-true 1 --noise-sd 0 --seed 4 --out " +
                  data.string())
              .code == 0);
  const fs::path out = fresh_dir("scree_out");
  const auto result = run_cli("scree --data " +
                              (data / "manifest.json").string() +
                              " --threshold 0.2 --out " + out.string());
  CHECK(result.code == 0);
  const json scree = read_json(out / "scree.json");
  CHECK(schema_violations(scree, load_schema("scree.schema.json")).empty());
  CHECK(scree.at("suggestions").at("concatenated").get<int>() == 1);
  CHECK(fs::exists(out / "scree.csv"));

  const auto bad = run_cli("scree --data " + (data / "manifest.json").string() +
                           " --threshold 1.5 --out " + out.string());
  CHECK(bad.code == 2);
}

TEST_CASE("cli experiment with repeated seeds has zero-sd summary rows") {
  const fs::path out = fresh_dir("exp_out");
  const auto result = run_cli(
      "experiment --family zip --p 14,12 --n 13,12 --signal 3 --ntop 3 "
      "--replicates 2 --seed 5 --seed-stride 0 --mode grid --steps 2 "
      "--iter-max 10 --jobs 2 --out " +
      out.string());
  CHECK(result.code == 0);
  std::ifstream csv(out / "summary.csv");
  std::string line;
  std::getline(csv, line);
  CHECK(line == "metric,mean,sd,n");
  int rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    const auto first = line.find(',');
    const auto second = line.find(',', first + 1);
    const auto third = line.find(',', second + 1);
    const std::string sd = line.substr(second + 1, third - second - 1);
    CHECK(std::stod(sd) == 0.0);
  }
  CHECK(rows >= 5);
  CHECK(fs::exists(out / "replicates.csv"));
}

TEST_CASE("cli config file supplies defaults and flags override it") {
  const fs::path data = fresh_dir("cfg_data");
  REQUIRE(run_cli("simulate --family poisson --p 10,8 --n 12,11 --signal 3 "
                  "--seed 12 --out " +
                  data.string())
              .code == 0);
  const fs::path dir = fresh_dir("cfg");
  write_json(dir / "config.json",
             {{"k", 3}, {"lambda-g", 0.25}, {"iter-max", 5}, {"ntop", "3"}});

  const fs::path out_a = fresh_dir("cfg_a");
  REQUIRE(run_cli("fit --data " + (data / "manifest.json").string() +
                  " --config " + (dir / "config.json").string() + " --out " +
                  out_a.string())
              .code == 0);
  CHECK(read_json(out_a / "model.json").at("k").get<int>() == 3);
  CHECK(read_json(out_a / "model.json").at("lambda_g").get<double>() == 0.25);

  const fs::path out_b = fresh_dir("cfg_b");
  REQUIRE(run_cli("fit --data " + (data / "manifest.json").string() +
                  " --config " + (dir / "config.json").string() +
                  " --k 2 --out " + out_b.string())
              .code == 0);
  CHECK(read_json(out_b / "model.json").at("k").get<int>() == 2);
}

TEST_CASE("cli exit codes: usage 2, data 3, numerical 4") {
  CHECK(run_cli("fit --no-such-flag").code == 2);
  CHECK(run_cli("fit --data /nonexistent/manifest.json --out /tmp/x").code == 3);

  const fs::path data = fresh_dir("exit_data");
  REQUIRE(run_cli("simulate --family poisson --p 10,8 --n 12,11 --signal 3 "
                  "--seed 13 --out " +
                  data.string())
              .code == 0);
  // lambda large enough to overflow the penalty: every candidate fails
  const auto numerical =
      run_cli("tune --data " + (data / "manifest.json").string() +
              " --mode grid --steps 2 --range 1e307:1e308 --ntop 3 "
              "--iter-max 3 --out " +
              fresh_dir("exit_out").string());
  CHECK(numerical.code == 4);
}

}  // TEST_SUITE

// hip command-line tool: simulate, fit, tune, predict, evaluate, scree,
// experiment. Exit codes: 0 success (possibly with warnings), 2 usage,
// 3 data error, 4 numerical failure.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "hip/core.hpp"
#include "hip/io.hpp"
#include "hip/losses.hpp"
#include "hip/optim.hpp"
#include "hip/predict.hpp"
#include "hip/selection.hpp"
#include "hip/simgen.hpp"
#include "hip/types.hpp"

namespace fs = std::filesystem;
using hip::Index;
using hip::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// option plumbing

int env_jobs() {
  if (const char* v = std::getenv("HIP_JOBS")) {
    const int n = std::atoi(v);
    if (n >= 1) return n;
  }
  return 1;
}

std::vector<Index> parse_index_list(const std::string& text) {
  std::vector<Index> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(static_cast<Index>(std::stoll(item)));
  if (out.empty()) throw UsageError("expected a comma-separated integer list");
  return out;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (Index v : parse_index_list(text)) out.push_back(static_cast<int>(v));
  return out;
}

std::pair<double, double> parse_range(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos)
    throw UsageError("range must look like low:high, e.g. 0:2");
  return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
}

/// JSON config files mirror the long option names, flat per subcommand:
/// {"k": 3, "lambda-g": 0.25}. Applied only to options absent from the
/// command line, so flags always win.
void apply_json_config(CLI::App* cmd, const std::string& path) {
  if (path.empty()) return;
  const json cfg = hip::read_json(path);
  if (!cfg.is_object())
    throw UsageError("config file must hold a JSON object of option values");
  for (auto it = cfg.begin(); it != cfg.end(); ++it) {
    CLI::Option* op = cmd->get_option_no_throw("--" + it.key());
    if (op == nullptr)
      throw UsageError("config key '" + it.key() +
                       "' does not name an option of this command");
    if (op->count() > 0) continue;
    const json& v = it.value();
    std::string text;
    if (v.is_string())
      text = v.get<std::string>();
    else if (v.is_boolean())
      text = v.get<bool>() ? "true" : "false";
    else
      text = v.dump();
    op->add_result(text);
    op->run_callback();
  }
}

void attach_config(CLI::App* sub, std::string& target) {
  sub->add_option("--config", target,
                  "JSON file with defaults for these options");
}

// ---------------------------------------------------------------------------
// run manifest

struct RunContext {
  std::string command;
  json options = json::object();
  std::vector<fs::path> inputs;
  std::vector<fs::path> outputs;
  std::chrono::steady_clock::time_point started =
      std::chrono::steady_clock::now();
};

void write_run_manifest(const fs::path& dir, const RunContext& ctx) {
  json manifest;
  manifest["engine"] = {{"name", hip::kEngineName},
                        {"version", hip::kEngineVersion}};
  manifest["command"] = ctx.command;
  manifest["options"] = ctx.options;
  json inputs = json::array();
  for (const auto& path : ctx.inputs)
    inputs.push_back({{"path", path.string()}, {"digest", hip::file_digest(path)}});
  manifest["inputs"] = std::move(inputs);
  json outputs = json::array();
  for (const auto& path : ctx.outputs) outputs.push_back(path.string());
  manifest["outputs"] = std::move(outputs);
  manifest["elapsed_ms"] = std::chrono::duration<double, std::milli>(
                               std::chrono::steady_clock::now() - ctx.started)
                               .count();
  hip::write_json(dir / "run_manifest.json", manifest);
}

// ---------------------------------------------------------------------------
// shared pipeline pieces

hip::MultiViewDataset load_and_relabel(const fs::path& manifest,
                                       const std::string& family_override) {
  hip::MultiViewDataset data = hip::load_dataset(manifest);
  if (!family_override.empty()) {
    const hip::Family requested = hip::family_from_string(family_override);
    if (requested != data.family()) {
      const bool count_to_count =
          requested != hip::Family::MultiClass &&
          data.family() != hip::Family::MultiClass;
      if (!count_to_count)
        throw hip::DataError(
            "family override is only possible between poisson and zip");
      for (auto& outcome : data.outcome) outcome.family = requested;
    }
  }
  return data;
}

std::vector<Index> default_n_top(const hip::MultiViewDataset& data,
                                 const std::string& flag) {
  if (!flag.empty()) {
    auto n_top = parse_index_list(flag);
    if (n_top.size() == 1)
      n_top.assign(static_cast<size_t>(data.num_views()), n_top[0]);
    for (Index d = 0; d < data.num_views(); ++d)
      n_top[static_cast<size_t>(d)] =
          std::min(n_top[static_cast<size_t>(d)], data.p(d));
    return n_top;
  }
  std::vector<Index> n_top;
  for (Index d = 0; d < data.num_views(); ++d)
    n_top.push_back(std::min<Index>(50, data.p(d)));
  return n_top;
}

struct PredictionRun {
  hip::ScorePrediction scores;
  std::vector<Eigen::VectorXd> expected_counts;  // count families
  std::vector<Eigen::VectorXi> classes;          // multiclass
  bool has_truth = false;
  double pooled_metric = 0.0;
  bool metric_defined = false;
  json metrics;
};

/// Standardizes raw data with the model's stored parameters, selects the
/// union columns, and runs the closed-form prediction. Truth, when present in
/// the data, yields accuracy (multiclass) or D^2 (count families).
PredictionRun run_prediction(const hip::ModelArtifact& model,
                             const hip::MultiViewDataset& raw) {
  const Index D = static_cast<Index>(model.view_names.size());
  const Index S = static_cast<Index>(model.subgroup_names.size());
  if (raw.num_views() != D)
    throw hip::DataError("test data has a different number of views");
  if (raw.num_subgroups() != S)
    throw hip::DataError("test data has a different number of subgroups");
  for (Index d = 0; d < D; ++d) {
    if (raw.views[d].name != model.view_names[d])
      throw hip::DataError("view names do not match the model");
    if (raw.views[d].variables != model.variable_names[d])
      throw hip::DataError("variable names of view '" + raw.views[d].name +
                           "' do not match the model's training data");
  }
  for (Index s = 0; s < S; ++s)
    if (raw.subgroups[s].name != model.subgroup_names[s])
      throw hip::DataError("subgroup names do not match the model");

  const hip::MultiViewDataset standardized =
      hip::apply_standardization(raw, model.standardization);

  std::vector<std::vector<Eigen::MatrixXd>> x_subset(static_cast<size_t>(D));
  for (Index d = 0; d < D; ++d) {
    const auto& keep = model.union_by_view[static_cast<size_t>(d)];
    x_subset[d].resize(static_cast<size_t>(S));
    for (Index s = 0; s < S; ++s) {
      Eigen::MatrixXd x(standardized.x(d, s).rows(),
                        static_cast<Index>(keep.size()));
      for (size_t j = 0; j < keep.size(); ++j)
        x.col(static_cast<Index>(j)) = standardized.x(d, s).col(keep[j]);
      x_subset[d][s] = std::move(x);
    }
  }

  PredictionRun run;
  run.scores = hip::predict_scores(x_subset, model.subset_b);
  run.has_truth = !raw.outcome.empty();

  if (model.family == hip::Family::MultiClass) {
    for (Index s = 0; s < S; ++s)
      run.classes.push_back(
          hip::predict_classes(run.scores.z[s], model.theta, model.beta0));
    if (run.has_truth) {
      Index total = 0, hits = 0;
      json per_subgroup = json::array();
      for (Index s = 0; s < S; ++s) {
        const auto& truth = raw.outcome[s].labels;
        const auto& pred = run.classes[s];
        Index local = 0;
        for (Index i = 0; i < truth.size(); ++i)
          local += truth(i) == pred(i) ? 1 : 0;
        per_subgroup.push_back(
            {{"subgroup", model.subgroup_names[s]},
             {"accuracy", static_cast<double>(local) /
                              static_cast<double>(truth.size())}});
        hits += local;
        total += truth.size();
      }
      run.pooled_metric =
          static_cast<double>(hits) / static_cast<double>(total);
      run.metric_defined = true;
      run.metrics = {{"metric", "accuracy"},
                     {"value", run.pooled_metric},
                     {"per_subgroup", per_subgroup}};
    }
  } else {
    std::vector<Eigen::VectorXd> mu_by_subgroup;
    for (Index s = 0; s < S; ++s) {
      const Eigen::VectorXd offsets =
          run.has_truth ? raw.outcome[s].offsets
                        : Eigen::VectorXd::Ones(run.scores.z[s].rows());
      // Poisson-component mean; the Zip family scales by (1 - tau) only in
      // the reported expected counts
      Eigen::VectorXd mu = hip::predict_counts(
          run.scores.z[s], model.theta, model.beta0, hip::Family::Poisson, 0.0,
          offsets);
      run.expected_counts.push_back(
          model.family == hip::Family::Zip ? (1.0 - model.tau) * mu : mu);
      mu_by_subgroup.push_back(std::move(mu));
    }
    if (run.has_truth) {
      Index total = 0;
      for (Index s = 0; s < S; ++s) total += raw.outcome[s].counts.size();
      Eigen::VectorXd y(total), t(total), mu(total);
      Index at = 0;
      for (Index s = 0; s < S; ++s) {
        const Index n = raw.outcome[s].counts.size();
        y.segment(at, n) = raw.outcome[s].counts;
        t.segment(at, n) = raw.outcome[s].offsets;
        mu.segment(at, n) = mu_by_subgroup[s];
        at += n;
      }
      const auto d2 =
          hip::deviance_explained(y, t, mu, model.family, model.tau);
      run.pooled_metric = d2.value;
      run.metric_defined = d2.defined;
      run.metrics = {{"metric", "d2"},
                     {"value", d2.defined ? json(d2.value) : json()},
                     {"defined", d2.defined},
                     {"d_null", d2.d_null},
                     {"d_model", d2.d_model},
                     {"zip_saturated_convention", "mixture-exact"}};
    }
  }
  json regularized = json::array();
  for (char flag : run.scores.regularized)
    regularized.push_back(static_cast<bool>(flag));
  if (run.metrics.is_object()) run.metrics["scores_regularized"] = regularized;
  return run;
}

struct TrainedModel {
  hip::ModelArtifact artifact;
  hip::FitBundle bundle;
  json search_report;  // null unless a search ran
};

/// Validate -> standardize -> (fit | lambda_search) -> rank -> subset refit ->
/// eBIC -> training metric. The shared spine of fit, tune, and experiment.
TrainedModel run_fit_pipeline(const hip::MultiViewDataset& raw,
                              hip::FitConfig config, std::vector<Index> n_top,
                              const std::optional<hip::SearchSpec>& search,
                              int jobs) {
  const auto report = hip::validate_dataset(raw);
  if (!report.ok()) throw hip::DataError("invalid dataset: " + report.summary());
  config.family = raw.family();

  hip::StandardizationParams std_params;
  hip::MultiViewDataset data = raw;
  if (config.standardization == hip::Standardization::Subgroup) {
    auto [standardized, params] = hip::standardize_subgroup(raw);
    data = std::move(standardized);
    std_params = std::move(params);
  } else {
    std_params.mode = hip::Standardization::None;
  }

  TrainedModel out;
  if (search) {
    hip::SearchSpec spec = *search;
    spec.n_top = n_top;
    auto outcome = hip::lambda_search(data, config, spec, jobs);
    out.bundle = std::move(outcome.best);

    json candidates = json::array();
    for (const auto& c : outcome.candidates) {
      candidates.push_back({{"lambda_g", c.lambda_g},
                            {"lambda_xi", c.lambda_xi},
                            {"ok", c.ok},
                            {"error", c.error},
                            {"converged_full", c.converged_full},
                            {"converged_subset", c.converged_subset},
                            {"ebic", c.ok ? json({{"ebic0", c.ebic.ebic0},
                                                  {"ebic0.5", c.ebic.ebic05},
                                                  {"ebic1", c.ebic.ebic1}})
                                          : json()},
                            {"criterion", c.criterion},
                            {"wall_ms", c.wall_ms}});
    }
    out.search_report = {
        {"mode", spec.mode == hip::SearchMode::Grid ? "grid" : "random"},
        {"num_steps", spec.num_steps},
        {"lambda_range", {spec.lambda_low, spec.lambda_high}},
        {"criterion_delta", spec.criterion_delta},
        {"candidates", std::move(candidates)},
        {"winner",
         {{"index", outcome.winner},
          {"lambda_g", out.bundle.config.lambda_g},
          {"lambda_xi", out.bundle.config.lambda_xi}}}};
  } else {
    out.bundle.config = config;
    auto [params, trace] = hip::fit(data, config);
    out.bundle.full_params = std::move(params);
    out.bundle.full_trace = std::move(trace);
    out.bundle.selection = hip::rank_variables(out.bundle.full_params, n_top);
    auto refit = hip::subset_refit(data, config, out.bundle.selection);
    out.bundle.subset_params = std::move(refit.params);
    out.bundle.subset_trace = std::move(refit.trace);
    out.bundle.subset_data = std::move(refit.data);
    out.bundle.ebic = hip::compute_ebic_triple(data, out.bundle.subset_params,
                                               out.bundle.selection);
  }

  hip::ModelArtifact& model = out.artifact;
  model.family = config.family;
  model.k = config.k;
  model.lambda_g = out.bundle.config.lambda_g;
  model.lambda_xi = out.bundle.config.lambda_xi;
  model.gamma.assign(static_cast<size_t>(raw.num_views()), 1);
  if (!config.gamma.empty()) model.gamma = config.gamma;
  model.seed = config.seed;
  for (const auto& view : raw.views) {
    model.view_names.push_back(view.name);
    model.variable_names.push_back(view.variables);
  }
  for (const auto& subgroup : raw.subgroups)
    model.subgroup_names.push_back(subgroup.name);
  model.n_top = n_top;
  model.standardization = std_params;
  model.union_by_view = out.bundle.selection.union_by_view;
  model.subset_b.resize(static_cast<size_t>(raw.num_views()));
  for (Index d = 0; d < raw.num_views(); ++d)
    for (Index s = 0; s < raw.num_subgroups(); ++s)
      model.subset_b[static_cast<size_t>(d)].push_back(
          out.bundle.subset_params.loading(d, s));
  model.theta = out.bundle.subset_params.theta;
  model.beta0 = out.bundle.subset_params.beta0;
  model.tau = out.bundle.subset_params.tau;
  model.ebic = out.bundle.ebic;

  model.report["full_fit"] = hip::trace_to_json(out.bundle.full_trace);
  model.report["subset_fit"] = hip::trace_to_json(out.bundle.subset_trace);
  model.report["selection"] = hip::selection_to_json(out.bundle.selection, raw);
  if (!out.search_report.is_null()) model.report["search"] = out.search_report;

  const PredictionRun training = run_prediction(model, raw);
  model.report["training_metric"] = training.metrics;
  return out;
}

void write_predictions(const fs::path& dir, const hip::ModelArtifact& model,
                       const hip::MultiViewDataset& raw,
                       const PredictionRun& run, RunContext& ctx) {
  for (size_t s = 0; s < model.subgroup_names.size(); ++s) {
    const fs::path path =
        dir / ("predictions_" + model.subgroup_names[s] + ".csv");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw hip::DataError("cannot write " + path.string());
    out << "sample,prediction" << (run.has_truth ? ",truth" : "") << "\n";
    const Index n = model.family == hip::Family::MultiClass
                        ? run.classes[s].size()
                        : run.expected_counts[s].size();
    for (Index i = 0; i < n; ++i) {
      out << i << ",";
      if (model.family == hip::Family::MultiClass)
        out << run.classes[s](i);
      else
        out << hip::format_double(run.expected_counts[s](i));
      if (run.has_truth) {
        out << ",";
        if (model.family == hip::Family::MultiClass)
          out << raw.outcome[s].labels(i);
        else
          out << hip::format_double(raw.outcome[s].counts(i));
      }
      out << "\n";
    }
    ctx.outputs.push_back(path);
  }
}

// ---------------------------------------------------------------------------
// commands

struct SimulateOptions {
  std::string family = "zip";
  std::string overlap = "full";
  std::string dim = "low";
  std::string p;
  std::string n;
  int k_true = 2;
  Index signal = 50;
  double noise_sd = 1.0;
  double tau = 0.25;
  std::uint64_t seed = 0;
  std::string out;
  std::string test_out;
  std::string config;
};

hip::ScenarioSpec scenario_from(const SimulateOptions& opt) {
  hip::ScenarioSpec spec;
  spec.family = hip::family_from_string(opt.family);
  if (opt.overlap == "full")
    spec.overlap = hip::Overlap::Full;
  else if (opt.overlap == "partial")
    spec.overlap = hip::Overlap::Partial;
  else
    throw UsageError("--overlap must be full or partial");
  if (opt.dim == "high") spec = hip::ScenarioSpec::high_dim(spec);
  else if (opt.dim != "low") throw UsageError("--dim must be low or high");
  if (!opt.p.empty()) spec.p = parse_index_list(opt.p);
  if (!opt.n.empty()) spec.n = parse_index_list(opt.n);
  spec.k_true = opt.k_true;
  spec.signal_count = opt.signal;
  spec.noise_sd = opt.noise_sd;
  spec.tau = opt.tau;
  spec.seed = opt.seed;
  return spec;
}

int cmd_simulate(const SimulateOptions& opt) {
  RunContext ctx;
  ctx.command = "simulate";
  ctx.options = {{"family", opt.family},   {"overlap", opt.overlap},
                 {"dim", opt.dim},         {"p", opt.p},
                 {"n", opt.n},             {"k_true", opt.k_true},
                 {"signal", opt.signal},   {"noise_sd", opt.noise_sd},
                 {"tau", opt.tau},         {"seed", opt.seed},
                 {"out", opt.out},         {"test_out", opt.test_out}};
  const hip::ScenarioSpec spec = scenario_from(opt);
  spec.validate();

  hip::Rng rng(spec.seed);
  hip::GroundTruth truth = hip::generate_loadings(spec, rng);
  hip::SimDraw train = hip::generate_views(spec, truth, rng);
  hip::generate_outcome(spec, truth, train, rng);
  truth.z = train.z;
  const hip::MultiViewDataset data = hip::assemble_dataset(spec, train);

  const fs::path dir(opt.out);
  ctx.outputs.push_back(hip::write_dataset(dir, data));
  hip::write_json(dir / "truth.json", hip::truth_to_json(truth, spec));
  ctx.outputs.push_back(dir / "truth.json");

  for (Index d = 0; d < data.num_views(); ++d)
    for (Index s = 0; s < data.num_subgroups(); ++s)
      std::cout << data.views[d].name << "/" << data.subgroups[s].name << ": "
                << data.x(d, s).rows() << "x" << data.x(d, s).cols() << "\n";

  if (!opt.test_out.empty()) {
    hip::SimDraw test = hip::generate_views(spec, truth, rng);
    hip::generate_outcome(spec, truth, test, rng);
    const hip::MultiViewDataset test_data = hip::assemble_dataset(spec, test);
    ctx.outputs.push_back(hip::write_dataset(fs::path(opt.test_out), test_data));
  }
  write_run_manifest(dir, ctx);
  return 0;
}

struct FitOptions {
  std::string data;
  std::string out;
  std::string family;  // optional override (poisson <-> zip)
  int k = 2;
  double lambda_g = 1.0;
  double lambda_xi = 1.0;
  std::string gamma;
  std::string n_top;
  std::uint64_t seed = 0;
  std::string standardize = "subgroup";
  double epsilon_conv = 1e-5;
  int iter_max = 200;
  int inner_cap = 500;
  double inner_tol = 1e-6;
  // tune extras
  std::string mode = "random";
  int steps = 8;
  std::string range = "0:2";
  std::string criterion = "ebic1";
  double random_fraction = 0.20;
  int jobs = env_jobs();
  std::string config;
};

hip::FitConfig config_from(const FitOptions& opt,
                           const hip::MultiViewDataset& data) {
  hip::FitConfig config;
  config.k = opt.k;
  config.lambda_g = opt.lambda_g;
  config.lambda_xi = opt.lambda_xi;
  if (!opt.gamma.empty()) config.gamma = parse_int_list(opt.gamma);
  config.family = data.family();
  config.epsilon_conv = opt.epsilon_conv;
  config.iter_max = opt.iter_max;
  config.seed = opt.seed;
  config.standardization = hip::standardization_from_string(opt.standardize);
  for (hip::SolverSettings* s : {&config.z_solver, &config.g_solver,
                                 &config.xi_solver, &config.theta_solver}) {
    s->max_iter = opt.inner_cap;
    s->tol = opt.inner_tol;
  }
  return config;
}

double criterion_delta(const std::string& name) {
  if (name == "ebic0") return 0.0;
  if (name == "ebic0.5" || name == "ebic05") return 0.5;
  if (name == "ebic1") return 1.0;
  throw UsageError("--criterion must be ebic0, ebic0.5, or ebic1");
}

int run_fit_or_tune(const FitOptions& opt, bool tune) {
  RunContext ctx;
  ctx.command = tune ? "tune" : "fit";
  ctx.options = {{"data", opt.data},
                 {"family", opt.family},
                 {"k", opt.k},
                 {"gamma", opt.gamma},
                 {"n_top", opt.n_top},
                 {"seed", opt.seed},
                 {"standardize", opt.standardize},
                 {"epsilon_conv", opt.epsilon_conv},
                 {"iter_max", opt.iter_max},
                 {"inner_cap", opt.inner_cap},
                 {"inner_tol", opt.inner_tol}};
  if (tune) {
    ctx.options["mode"] = opt.mode;
    ctx.options["steps"] = opt.steps;
    ctx.options["range"] = opt.range;
    ctx.options["criterion"] = opt.criterion;
    ctx.options["random_fraction"] = opt.random_fraction;
    ctx.options["jobs"] = opt.jobs;
  } else {
    ctx.options["lambda_g"] = opt.lambda_g;
    ctx.options["lambda_xi"] = opt.lambda_xi;
  }
  ctx.inputs.push_back(opt.data);

  const hip::MultiViewDataset raw = load_and_relabel(opt.data, opt.family);
  const hip::FitConfig config = config_from(opt, raw);
  const std::vector<Index> n_top = default_n_top(raw, opt.n_top);

  std::optional<hip::SearchSpec> search;
  if (tune) {
    hip::SearchSpec spec;
    if (opt.mode == "grid")
      spec.mode = hip::SearchMode::Grid;
    else if (opt.mode == "random")
      spec.mode = hip::SearchMode::Random;
    else
      throw UsageError("--mode must be grid or random");
    spec.num_steps = opt.steps;
    std::tie(spec.lambda_low, spec.lambda_high) = parse_range(opt.range);
    spec.criterion_delta = criterion_delta(opt.criterion);
    spec.random_fraction = opt.random_fraction;
    spec.seed = opt.seed;
    search = spec;
  }

  TrainedModel trained =
      run_fit_pipeline(raw, config, n_top, search, opt.jobs);

  const fs::path dir(opt.out);
  fs::create_directories(dir);
  hip::write_json(dir / "model.json", hip::model_to_json(trained.artifact));
  ctx.outputs.push_back(dir / "model.json");
  if (tune) {
    hip::write_json(dir / "search_report.json", trained.search_report);
    ctx.outputs.push_back(dir / "search_report.json");
  }
  write_run_manifest(dir, ctx);

  const auto& trace = trained.bundle.full_trace;
  std::cout << (tune ? "tune" : "fit") << ": lambda_g="
            << trained.bundle.config.lambda_g
            << " lambda_xi=" << trained.bundle.config.lambda_xi
            << " nu=" << trained.bundle.selection.nu
            << " eBIC1=" << trained.bundle.ebic.ebic1
            << (trace.converged ? "" : " [convergence warning]") << "\n";
  return 0;
}

struct PredictOptions {
  std::string model;
  std::string data;
  std::string out;
  std::string config;
};

int cmd_predict(const PredictOptions& opt) {
  RunContext ctx;
  ctx.command = "predict";
  ctx.options = {{"model", opt.model}, {"data", opt.data}, {"out", opt.out}};
  ctx.inputs.push_back(opt.model);
  ctx.inputs.push_back(opt.data);

  const hip::ModelArtifact model =
      hip::model_from_json(hip::read_json(opt.model));
  const hip::MultiViewDataset raw = hip::load_dataset(opt.data);
  if (!raw.outcome.empty() && raw.family() != model.family) {
    const bool count_pair = raw.family() != hip::Family::MultiClass &&
                            model.family != hip::Family::MultiClass;
    if (!count_pair)
      throw hip::DataError("test outcome family does not match the model");
  }

  const PredictionRun run = run_prediction(model, raw);
  const fs::path dir(opt.out);
  fs::create_directories(dir);
  write_predictions(dir, model, raw, run, ctx);

  if (run.has_truth) {
    hip::write_json(dir / "metrics.json", run.metrics);
    ctx.outputs.push_back(dir / "metrics.json");
    std::cout << "metric (" << run.metrics["metric"].get<std::string>()
              << "): ";
    if (run.metric_defined)
      std::cout << run.pooled_metric << "\n";
    else
      std::cout << "undefined (null deviance is zero)\n";
  } else {
    std::cout << "no test outcome available; predictions written, metrics "
                 "omitted\n";
  }
  write_run_manifest(dir, ctx);
  return 0;
}

struct EvaluateOptions {
  std::string model;
  std::string truth;
  std::string out;
  std::string config;
};

int cmd_evaluate(const EvaluateOptions& opt) {
  RunContext ctx;
  ctx.command = "evaluate";
  ctx.options = {{"model", opt.model}, {"truth", opt.truth}, {"out", opt.out}};
  ctx.inputs.push_back(opt.model);
  ctx.inputs.push_back(opt.truth);

  const json model_json = hip::read_json(opt.model);
  const hip::ModelArtifact model = hip::model_from_json(model_json);
  const auto signals =
      hip::truth_signals_from_json(hip::read_json(opt.truth));
  const json& ranked = model_json.at("report").at("selection").at("ranked");

  const Index S = static_cast<Index>(model.subgroup_names.size());
  json per_block = json::array();
  double tpr_sum = 0.0, fpr_sum = 0.0, f1_sum = 0.0;
  Index blocks = 0;
  for (const json& block : ranked) {
    Index d = -1, s = -1;
    for (size_t i = 0; i < model.view_names.size(); ++i)
      if (model.view_names[i] == block.at("view")) d = static_cast<Index>(i);
    for (size_t i = 0; i < model.subgroup_names.size(); ++i)
      if (model.subgroup_names[i] == block.at("subgroup"))
        s = static_cast<Index>(i);
    (void)S;
    const auto selected = block.at("top").get<std::vector<Index>>();
    const auto scores = hip::selection_metrics(
        signals[static_cast<size_t>(d)][static_cast<size_t>(s)], selected,
        static_cast<Index>(model.variable_names[static_cast<size_t>(d)].size()));
    per_block.push_back({{"view", block.at("view")},
                         {"subgroup", block.at("subgroup")},
                         {"tpr", scores.tpr},
                         {"fpr", scores.fpr},
                         {"f1", scores.f1}});
    tpr_sum += scores.tpr;
    fpr_sum += scores.fpr;
    f1_sum += scores.f1;
    ++blocks;
  }
  json out;
  out["per_block"] = std::move(per_block);
  out["mean"] = {{"tpr", tpr_sum / static_cast<double>(blocks)},
                 {"fpr", fpr_sum / static_cast<double>(blocks)},
                 {"f1", f1_sum / static_cast<double>(blocks)}};
  hip::write_json(opt.out, out);
  ctx.outputs.push_back(opt.out);
  write_run_manifest(fs::path(opt.out).parent_path(), ctx);
  std::cout << "selection metrics: tpr=" << out["mean"]["tpr"].get<double>()
            << " fpr=" << out["mean"]["fpr"].get<double>()
            << " f1=" << out["mean"]["f1"].get<double>() << "\n";
  return 0;
}

struct ScreeOptions {
  std::string data;
  double threshold = 0.20;
  std::string target = "both";
  std::string standardize = "subgroup";
  std::string out;
  std::string config;
};

int cmd_scree(const ScreeOptions& opt) {
  if (!(opt.threshold > 0.0 && opt.threshold < 1.0))
    throw UsageError("--threshold must lie strictly inside (0, 1)");
  RunContext ctx;
  ctx.command = "scree";
  ctx.options = {{"data", opt.data},
                 {"threshold", opt.threshold},
                 {"target", opt.target},
                 {"standardize", opt.standardize}};
  ctx.inputs.push_back(opt.data);

  hip::MultiViewDataset data = hip::load_dataset(opt.data);
  if (hip::standardization_from_string(opt.standardize) ==
      hip::Standardization::Subgroup)
    data = hip::standardize_subgroup(data).first;

  std::vector<hip::ScreeEntry> entries;
  json suggestions = json::object();
  if (opt.target == "concatenated" || opt.target == "both") {
    const auto scree =
        hip::select_k(data, opt.threshold, hip::ScreeTarget::Concatenated);
    suggestions["concatenated"] = scree.suggested_k;
    entries.insert(entries.end(), scree.entries.begin(), scree.entries.end());
  }
  if (opt.target == "per-view-subgroup" || opt.target == "both") {
    const auto scree =
        hip::select_k(data, opt.threshold, hip::ScreeTarget::PerViewSubgroup);
    json per_block = json::array();
    for (const auto& entry : scree.entries)
      per_block.push_back({{"label", entry.label}, {"k", entry.k}});
    suggestions["per_view_subgroup"] = per_block;
    suggestions["per_view_subgroup_max"] = scree.suggested_k;
    entries.insert(entries.end(), scree.entries.begin(), scree.entries.end());
  }
  if (entries.empty())
    throw UsageError("--target must be concatenated, per-view-subgroup, or both");

  const fs::path dir(opt.out);
  fs::create_directories(dir);
  {
    std::ofstream csv(dir / "scree.csv", std::ios::binary);
    csv << "target,component,sigma\n";
    for (const auto& entry : entries)
      for (Index i = 0; i < entry.sigma.size(); ++i)
        csv << entry.label << "," << i + 1 << ","
            << hip::format_double(entry.sigma(i)) << "\n";
  }
  ctx.outputs.push_back(dir / "scree.csv");
  json out;
  out["threshold"] = opt.threshold;
  out["suggestions"] = suggestions;
  hip::write_json(dir / "scree.json", out);
  ctx.outputs.push_back(dir / "scree.json");
  write_run_manifest(dir, ctx);
  std::cout << "suggested K: " << suggestions.dump() << "\n";
  return 0;
}

struct ExperimentOptions {
  std::string family = "zip";
  std::string fit_family;  // default: same as family
  std::string overlap = "full";
  std::string dim = "low";
  std::string p, n;
  int k = 2;
  Index signal = 50;
  double tau = 0.25;
  int replicates = 5;
  std::uint64_t seed = 1;
  std::uint64_t seed_stride = 1;
  std::string mode = "random";
  int steps = 8;
  std::string range = "0:2";
  std::string criterion = "ebic1";
  double random_fraction = 0.20;
  std::string n_top;
  int iter_max = 200;
  int jobs = env_jobs();
  std::string out;
  std::string config;
};

struct ReplicateResult {
  bool ok = false;
  std::string error;
  std::uint64_t seed = 0;
  double lambda_g = 0.0, lambda_xi = 0.0, criterion = 0.0;
  bool converged = false;
  double tpr = 0.0, fpr = 0.0, f1 = 0.0;
  double train_metric = 0.0, test_metric = 0.0;
  bool metric_defined = false;
  double tau_hat = 0.0;
  std::vector<double> unique_selected;  // per subgroup (partial overlap)
  Index nu = 0;
  double wall_s = 0.0;
};

int cmd_experiment(const ExperimentOptions& opt) {
  RunContext ctx;
  ctx.command = "experiment";
  ctx.options = {{"family", opt.family},
                 {"fit_family", opt.fit_family},
                 {"overlap", opt.overlap},
                 {"dim", opt.dim},
                 {"p", opt.p},
                 {"n", opt.n},
                 {"k", opt.k},
                 {"signal", opt.signal},
                 {"tau", opt.tau},
                 {"replicates", opt.replicates},
                 {"seed", opt.seed},
                 {"seed_stride", opt.seed_stride},
                 {"mode", opt.mode},
                 {"steps", opt.steps},
                 {"range", opt.range},
                 {"criterion", opt.criterion},
                 {"random_fraction", opt.random_fraction},
                 {"n_top", opt.n_top},
                 {"iter_max", opt.iter_max},
                 {"jobs", opt.jobs}};
  if (opt.replicates < 1) throw UsageError("--replicates must be >= 1");

  SimulateOptions sim;
  sim.family = opt.family;
  sim.overlap = opt.overlap;
  sim.dim = opt.dim;
  sim.p = opt.p;
  sim.n = opt.n;
  sim.k_true = opt.k;
  sim.signal = opt.signal;
  sim.tau = opt.tau;
  const hip::ScenarioSpec base_spec = scenario_from(sim);
  base_spec.validate();

  const int R = opt.replicates;
  std::vector<ReplicateResult> results(static_cast<size_t>(R));
  const int outer_jobs = std::max(1, std::min(opt.jobs, R));
  const int inner_jobs = std::max(1, opt.jobs / R);

  const auto run_replicate = [&](int r) {
    ReplicateResult& res = results[static_cast<size_t>(r)];
    const auto started = std::chrono::steady_clock::now();
    res.seed = opt.seed + opt.seed_stride * static_cast<std::uint64_t>(r);
    try {
      hip::ScenarioSpec spec = base_spec;
      spec.seed = res.seed;
      hip::Rng rng(spec.seed);
      hip::GroundTruth truth = hip::generate_loadings(spec, rng);
      hip::SimDraw train_draw = hip::generate_views(spec, truth, rng);
      hip::generate_outcome(spec, truth, train_draw, rng);
      truth.z = train_draw.z;
      hip::SimDraw test_draw = hip::generate_views(spec, truth, rng);
      hip::generate_outcome(spec, truth, test_draw, rng);

      hip::MultiViewDataset train = hip::assemble_dataset(spec, train_draw);
      hip::MultiViewDataset test = hip::assemble_dataset(spec, test_draw);
      if (!opt.fit_family.empty()) {
        const hip::Family fit_family = hip::family_from_string(opt.fit_family);
        for (auto& outcome : train.outcome) outcome.family = fit_family;
        for (auto& outcome : test.outcome) outcome.family = fit_family;
      }

      FitOptions fit;
      fit.k = spec.k_true;
      fit.seed = res.seed;
      fit.iter_max = opt.iter_max;
      hip::FitConfig config = config_from(fit, train);

      hip::SearchSpec search;
      search.mode =
          opt.mode == "grid" ? hip::SearchMode::Grid : hip::SearchMode::Random;
      search.num_steps = opt.steps;
      std::tie(search.lambda_low, search.lambda_high) = parse_range(opt.range);
      search.criterion_delta = criterion_delta(opt.criterion);
      search.random_fraction = opt.random_fraction;
      search.seed = res.seed;

      const std::vector<Index> n_top = default_n_top(train, opt.n_top);
      TrainedModel trained =
          run_fit_pipeline(train, config, n_top, search, inner_jobs);

      res.lambda_g = trained.bundle.config.lambda_g;
      res.lambda_xi = trained.bundle.config.lambda_xi;
      res.criterion = trained.bundle.ebic.by_delta(search.criterion_delta);
      res.converged = trained.bundle.full_trace.converged &&
                      trained.bundle.subset_trace.converged;
      res.tau_hat = trained.bundle.subset_params.tau;
      res.nu = trained.bundle.selection.nu;

      // selection quality against the generating truth
      const Index D = train.num_views();
      const Index S = train.num_subgroups();
      res.unique_selected.assign(static_cast<size_t>(S), 0.0);
      Index blocks = 0;
      for (Index d = 0; d < D; ++d) {
        for (Index s = 0; s < S; ++s) {
          const auto& block = trained.bundle.selection.block(d, s, S);
          const auto scores = hip::selection_metrics(
              truth.signal[static_cast<size_t>(d)][static_cast<size_t>(s)],
              block.top, train.p(d));
          res.tpr += scores.tpr;
          res.fpr += scores.fpr;
          res.f1 += scores.f1;
          ++blocks;
          const auto unique = truth.unique_signal(d, s);
          const std::set<Index> top_set(block.top.begin(), block.top.end());
          for (Index idx : unique)
            if (top_set.count(idx))
              res.unique_selected[static_cast<size_t>(s)] += 1.0;
        }
      }
      res.tpr /= static_cast<double>(blocks);
      res.fpr /= static_cast<double>(blocks);
      res.f1 /= static_cast<double>(blocks);

      const json train_metric =
          trained.artifact.report.at("training_metric");
      if (train_metric.contains("value") && !train_metric["value"].is_null())
        res.train_metric = train_metric["value"].get<double>();
      const PredictionRun test_run = run_prediction(trained.artifact, test);
      res.metric_defined = test_run.metric_defined;
      res.test_metric = test_run.metric_defined ? test_run.pooled_metric : 0.0;
      res.ok = true;
    } catch (const std::exception& e) {
      res.ok = false;
      res.error = e.what();
    }
    res.wall_s = std::chrono::duration<double>(
                     std::chrono::steady_clock::now() - started)
                     .count();
  };

  if (outer_jobs == 1) {
    for (int r = 0; r < R; ++r) run_replicate(r);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < outer_jobs; ++w)
      pool.emplace_back([&, w] {
        for (int r = w; r < R; r += outer_jobs) run_replicate(r);
      });
    for (auto& th : pool) th.join();
  }

  const fs::path dir(opt.out);
  fs::create_directories(dir);
  const std::string metric_name =
      base_spec.family == hip::Family::MultiClass ? "accuracy" : "d2";

  // per-replicate table
  {
    std::ofstream csv(dir / "replicates.csv", std::ios::binary);
    csv << "replicate,seed,ok,lambda_g,lambda_xi,criterion,converged,tpr,fpr,"
           "f1,train_"
        << metric_name << ",test_" << metric_name
        << ",tau_hat,nu,unique_true_selected,wall_s,error\n";
    for (int r = 0; r < R; ++r) {
      const auto& res = results[static_cast<size_t>(r)];
      csv << r << "," << res.seed << "," << (res.ok ? 1 : 0) << ","
          << hip::format_double(res.lambda_g) << ","
          << hip::format_double(res.lambda_xi) << ","
          << hip::format_double(res.criterion) << "," << (res.converged ? 1 : 0)
          << "," << hip::format_double(res.tpr) << ","
          << hip::format_double(res.fpr) << "," << hip::format_double(res.f1)
          << "," << hip::format_double(res.train_metric) << ","
          << hip::format_double(res.test_metric) << ","
          << hip::format_double(res.tau_hat) << "," << res.nu << ",";
      for (size_t s = 0; s < res.unique_selected.size(); ++s)
        csv << (s ? ";" : "") << hip::format_double(res.unique_selected[s]);
      csv << "," << hip::format_double(res.wall_s) << "," << res.error << "\n";
    }
  }
  ctx.outputs.push_back(dir / "replicates.csv");

  // mean/sd summary over successful replicates
  {
    std::vector<std::pair<std::string, std::vector<double>>> columns;
    std::vector<double> tpr, fpr, f1, train_m, test_m, tau_hat;
    int ok_count = 0;
    for (const auto& res : results) {
      if (!res.ok) continue;
      ++ok_count;
      tpr.push_back(res.tpr);
      fpr.push_back(res.fpr);
      f1.push_back(res.f1);
      train_m.push_back(res.train_metric);
      if (res.metric_defined) test_m.push_back(res.test_metric);
      tau_hat.push_back(res.tau_hat);
    }
    columns = {{"tpr", tpr},
               {"fpr", fpr},
               {"f1", f1},
               {"train_" + metric_name, train_m},
               {"test_" + metric_name, test_m}};
    if (base_spec.family == hip::Family::Zip &&
        (opt.fit_family.empty() || opt.fit_family == "zip"))
      columns.push_back({"tau_hat", tau_hat});

    std::ofstream csv(dir / "summary.csv", std::ios::binary);
    csv << "metric,mean,sd,n\n";
    for (const auto& [name, values] : columns) {
      double mean = 0.0, sd = 0.0;
      for (double v : values) mean += v;
      if (!values.empty()) mean /= static_cast<double>(values.size());
      if (values.size() > 1) {
        for (double v : values) sd += (v - mean) * (v - mean);
        sd = std::sqrt(sd / static_cast<double>(values.size() - 1));
      }
      csv << name << "," << hip::format_double(mean) << ","
          << hip::format_double(sd) << "," << values.size() << "\n";
    }
    std::cout << "experiment: " << ok_count << "/" << R
              << " replicates succeeded; summary written to "
              << (dir / "summary.csv").string() << "\n";
  }
  ctx.outputs.push_back(dir / "summary.csv");
  write_run_manifest(dir, ctx);

  bool any_ok = false;
  for (const auto& res : results) any_ok = any_ok || res.ok;
  if (!any_ok) throw hip::NumericalError("every replicate failed");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HIP: multi-view integration and prediction with subgroup "
               "heterogeneity"};
  app.require_subcommand(1);

  SimulateOptions sim;
  CLI::App* simulate = app.add_subcommand(
      "simulate", "Generate a synthetic multi-view dataset with ground truth");
  simulate->add_option("--family", sim.family, "multiclass|poisson|zip");
  simulate->add_option("--overlap", sim.overlap, "full|partial");
  simulate->add_option("--dim", sim.dim, "low (300,350) | high (2000,3000)");
  simulate->add_option("--p", sim.p, "per-view dimensions, e.g. 300,350");
  simulate->add_option("--n", sim.n, "per-subgroup sizes, e.g. 250,260");
  simulate->add_option("--k-true", sim.k_true, "latent components");
  simulate->add_option("--signal", sim.signal, "signal variables per subgroup");
  simulate->add_option("--noise-sd", sim.noise_sd, "noise sd (0 = exact)");
  simulate->add_option("--tau", sim.tau, "zip zero-state probability");
  simulate->add_option("--seed", sim.seed, "generator seed");
  simulate->add_option("--out", sim.out, "output directory")->required();
  simulate->add_option("--test-out", sim.test_out,
                       "also write an independent test draw here");
  attach_config(simulate, sim.config);

  FitOptions fit;
  CLI::App* fit_cmd =
      app.add_subcommand("fit", "Fit HIP at fixed (lambda_g, lambda_xi)");
  FitOptions tune;
  CLI::App* tune_cmd =
      app.add_subcommand("tune", "Search (lambda_g, lambda_xi) by eBIC");
  for (auto& [cmd, opt] : {std::pair<CLI::App*, FitOptions*>{fit_cmd, &fit},
                           {tune_cmd, &tune}}) {
    cmd->add_option("--data", opt->data, "dataset manifest JSON")->required();
    cmd->add_option("--out", opt->out, "output directory")->required();
    cmd->add_option("--family", opt->family,
                    "override outcome family (poisson <-> zip)");
    cmd->add_option("--k", opt->k, "latent components");
    cmd->add_option("--gamma", opt->gamma, "per-view penalty flags, e.g. 1,1");
    cmd->add_option("--ntop", opt->n_top,
                    "variables kept per view (single value or list)");
    cmd->add_option("--seed", opt->seed, "fit seed");
    cmd->add_option("--standardize", opt->standardize, "subgroup|none");
    cmd->add_option("--epsilon-conv", opt->epsilon_conv, "outer tolerance");
    cmd->add_option("--iter-max", opt->iter_max, "outer iteration cap");
    cmd->add_option("--inner-cap", opt->inner_cap, "inner iteration cap");
    cmd->add_option("--inner-tol", opt->inner_tol, "inner tolerance");
    attach_config(cmd, opt->config);
  }
  fit_cmd->add_option("--lambda-g", fit.lambda_g, "penalty on G");
  fit_cmd->add_option("--lambda-xi", fit.lambda_xi, "penalty on Xi");
  tune_cmd->add_option("--mode", tune.mode, "grid|random");
  tune_cmd->add_option("--steps", tune.steps, "grid steps per lambda");
  tune_cmd->add_option("--range", tune.range, "lambda range low:high");
  tune_cmd->add_option("--criterion", tune.criterion, "ebic0|ebic0.5|ebic1");
  tune_cmd->add_option("--random-fraction", tune.random_fraction,
                       "fraction of pairs in random mode");
  tune_cmd->add_option("--jobs", tune.jobs, "parallel candidate fits");

  PredictOptions predict;
  CLI::App* predict_cmd = app.add_subcommand(
      "predict", "Predict outcomes for new data from a fitted model");
  predict_cmd->add_option("--model", predict.model, "model JSON")->required();
  predict_cmd->add_option("--data", predict.data, "test manifest")->required();
  predict_cmd->add_option("--out", predict.out, "output directory")->required();
  attach_config(predict_cmd, predict.config);

  EvaluateOptions evaluate;
  CLI::App* evaluate_cmd = app.add_subcommand(
      "evaluate", "Score a model's variable selection against ground truth");
  evaluate_cmd->add_option("--model", evaluate.model, "model JSON")->required();
  evaluate_cmd->add_option("--truth", evaluate.truth, "truth JSON")->required();
  evaluate_cmd->add_option("--out", evaluate.out, "metrics JSON path")
      ->required();
  attach_config(evaluate_cmd, evaluate.config);

  ScreeOptions scree;
  CLI::App* scree_cmd = app.add_subcommand(
      "scree", "Singular-value scree and automatic K suggestion");
  scree_cmd->add_option("--data", scree.data, "dataset manifest")->required();
  scree_cmd->add_option("--threshold", scree.threshold, "drop threshold");
  scree_cmd->add_option("--target", scree.target,
                        "concatenated|per-view-subgroup|both");
  scree_cmd->add_option("--standardize", scree.standardize, "subgroup|none");
  scree_cmd->add_option("--out", scree.out, "output directory")->required();
  attach_config(scree_cmd, scree.config);

  ExperimentOptions experiment;
  CLI::App* experiment_cmd = app.add_subcommand(
      "experiment",
      "Monte Carlo study: generate, tune, refit, and evaluate replicates");
  experiment_cmd->add_option("--family", experiment.family,
                             "data family: multiclass|poisson|zip");
  experiment_cmd->add_option("--fit-family", experiment.fit_family,
                             "fit family override (poisson|zip)");
  experiment_cmd->add_option("--overlap", experiment.overlap, "full|partial");
  experiment_cmd->add_option("--dim", experiment.dim, "low|high");
  experiment_cmd->add_option("--p", experiment.p, "per-view dimensions");
  experiment_cmd->add_option("--n", experiment.n, "per-subgroup sizes");
  experiment_cmd->add_option("--k", experiment.k, "latent components");
  experiment_cmd->add_option("--signal", experiment.signal,
                             "signal variables per subgroup");
  experiment_cmd->add_option("--tau", experiment.tau, "zip zero probability");
  experiment_cmd->add_option("--replicates", experiment.replicates,
                             "Monte Carlo replicates");
  experiment_cmd->add_option("--seed", experiment.seed, "base seed");
  experiment_cmd->add_option("--seed-stride", experiment.seed_stride,
                             "seed increment per replicate (0 repeats seeds)");
  experiment_cmd->add_option("--mode", experiment.mode, "grid|random");
  experiment_cmd->add_option("--steps", experiment.steps, "grid steps");
  experiment_cmd->add_option("--range", experiment.range, "lambda range");
  experiment_cmd->add_option("--criterion", experiment.criterion,
                             "ebic0|ebic0.5|ebic1");
  experiment_cmd->add_option("--random-fraction", experiment.random_fraction,
                             "random-mode fraction");
  experiment_cmd->add_option("--ntop", experiment.n_top, "variables per view");
  experiment_cmd->add_option("--iter-max", experiment.iter_max,
                             "outer iteration cap");
  experiment_cmd->add_option("--jobs", experiment.jobs, "parallel replicates");
  experiment_cmd->add_option("--out", experiment.out, "output directory")
      ->required();
  attach_config(experiment_cmd, experiment.config);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (simulate->parsed()) {
      apply_json_config(simulate, sim.config);
      return cmd_simulate(sim);
    }
    if (fit_cmd->parsed()) {
      apply_json_config(fit_cmd, fit.config);
      return run_fit_or_tune(fit, false);
    }
    if (tune_cmd->parsed()) {
      apply_json_config(tune_cmd, tune.config);
      return run_fit_or_tune(tune, true);
    }
    if (predict_cmd->parsed()) {
      apply_json_config(predict_cmd, predict.config);
      return cmd_predict(predict);
    }
    if (evaluate_cmd->parsed()) {
      apply_json_config(evaluate_cmd, evaluate.config);
      return cmd_evaluate(evaluate);
    }
    if (scree_cmd->parsed()) {
      apply_json_config(scree_cmd, scree.config);
      return cmd_scree(scree);
    }
    if (experiment_cmd->parsed()) {
      apply_json_config(experiment_cmd, experiment.config);
      return cmd_experiment(experiment);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const hip::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const hip::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}

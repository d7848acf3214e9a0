#include "hip/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

namespace hip {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw DataError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& value) {
  write_text(path, value.dump(2) + "\n");
}

std::string file_digest(const fs::path& path) {
  const std::string bytes = read_text(path);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(field);
  return fields;
}

double parse_double(const std::string& s, const fs::path& path, size_t row,
                    size_t col) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = begin + s.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{}) {
    std::ostringstream os;
    os << path.string() << ": cannot parse '" << s << "' at row " << row
       << ", column " << col;
    throw DataError(os.str());
  }
  return v;
}

}  // namespace

Csv read_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  Csv csv;
  csv.header = split_csv_line(line);
  const size_t cols = csv.header.size();

  std::vector<double> buffer;
  size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != cols) {
      std::ostringstream os;
      os << path.string() << ": row " << rows + 1 << " has " << fields.size()
         << " fields, expected " << cols;
      throw DataError(os.str());
    }
    for (size_t j = 0; j < cols; ++j)
      buffer.push_back(parse_double(fields[j], path, rows + 1, j));
    ++rows;
  }
  csv.values.resize(rows, cols);
  for (size_t i = 0; i < rows; ++i)
    for (size_t j = 0; j < cols; ++j) csv.values(i, j) = buffer[i * cols + j];
  return csv;
}

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const Eigen::Ref<const Eigen::MatrixXd>& values) {
  if (static_cast<Index>(header.size()) != values.cols())
    throw DataError("write_csv: header size does not match columns");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (size_t j = 0; j < header.size(); ++j)
    out << (j ? "," : "") << header[j];
  out << "\n";
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j)
      out << (j ? "," : "") << format_double(values(i, j));
    out << "\n";
  }
}

namespace {

OutcomeData read_outcome_csv(const fs::path& path, Family family,
                             Index expected_classes) {
  const Csv csv = read_csv(path);
  if (family == Family::MultiClass) {
    if (csv.header.size() != 1 || csv.header[0] != "class")
      throw DataError(path.string() + ": multiclass outcome needs a single 'class' column");
    Eigen::VectorXi labels(csv.values.rows());
    int max_label = -1;
    for (Index i = 0; i < csv.values.rows(); ++i) {
      const double v = csv.values(i, 0);
      if (v != std::floor(v) || v < 0)
        throw DataError(path.string() + ": class labels must be integers >= 0");
      labels(i) = static_cast<int>(v);
      max_label = std::max(max_label, labels(i));
    }
    const Index m = expected_classes > 0
                        ? expected_classes
                        : static_cast<Index>(max_label) + 1;
    return OutcomeData::multiclass(labels, m);
  }
  Index count_col = -1, offset_col = -1;
  for (size_t j = 0; j < csv.header.size(); ++j) {
    if (csv.header[j] == "count") count_col = static_cast<Index>(j);
    if (csv.header[j] == "offset") offset_col = static_cast<Index>(j);
  }
  if (count_col < 0)
    throw DataError(path.string() + ": count outcome needs a 'count' column");
  Eigen::VectorXd counts = csv.values.col(count_col);
  Eigen::VectorXd offsets;
  if (offset_col >= 0) offsets = csv.values.col(offset_col);
  return OutcomeData::count_family(family, std::move(counts), std::move(offsets));
}

}  // namespace

MultiViewDataset load_dataset(const fs::path& manifest_path) {
  const json manifest = read_json(manifest_path);
  const fs::path base = manifest_path.parent_path();
  for (const char* key : {"family", "views", "subgroups", "data"})
    if (!manifest.contains(key))
      throw DataError(manifest_path.string() + ": manifest missing '" +
                      std::string(key) + "'");

  MultiViewDataset data;
  const Family family = family_from_string(manifest.at("family"));
  const auto view_names = manifest.at("views").get<std::vector<std::string>>();
  const auto subgroup_names =
      manifest.at("subgroups").get<std::vector<std::string>>();
  const Index D = static_cast<Index>(view_names.size());
  const Index S = static_cast<Index>(subgroup_names.size());

  data.X.assign(D, std::vector<Eigen::MatrixXd>(S));
  std::vector<std::vector<bool>> seen(D, std::vector<bool>(S, false));
  data.views.resize(D);
  data.subgroups.resize(S);
  for (Index d = 0; d < D; ++d) data.views[d].name = view_names[d];
  for (Index s = 0; s < S; ++s) data.subgroups[s].name = subgroup_names[s];

  const auto view_index = [&](const std::string& name) {
    for (Index d = 0; d < D; ++d)
      if (view_names[d] == name) return d;
    throw DataError("manifest references unknown view '" + name + "'");
  };
  const auto subgroup_index = [&](const std::string& name) {
    for (Index s = 0; s < S; ++s)
      if (subgroup_names[s] == name) return s;
    throw DataError("manifest references unknown subgroup '" + name + "'");
  };

  for (const json& entry : manifest.at("data")) {
    const Index d = view_index(entry.at("view"));
    const Index s = subgroup_index(entry.at("subgroup"));
    const Csv csv = read_csv(base / entry.at("path").get<std::string>());
    if (!seen[d][0] && s == 0) {
      // first subgroup of a view fixes the variable names
    }
    if (data.views[d].variables.empty()) {
      data.views[d].variables = csv.header;
      data.views[d].p = static_cast<Index>(csv.header.size());
    } else if (data.views[d].variables != csv.header) {
      throw DataError("view '" + view_names[d] +
                      "': variable names differ between subgroups");
    }
    data.X[d][s] = csv.values;
    seen[d][s] = true;
  }
  for (Index d = 0; d < D; ++d)
    for (Index s = 0; s < S; ++s)
      if (!seen[d][s])
        throw DataError("manifest is missing data for view '" + view_names[d] +
                        "', subgroup '" + subgroup_names[s] + "'");

  // the outcome section is optional: prediction-time data may carry no truth
  const bool has_outcome =
      manifest.contains("outcome") && !manifest.at("outcome").empty();
  if (has_outcome) {
    data.outcome.resize(S);
    std::vector<bool> seen_outcome(S, false);
    for (const json& entry : manifest.at("outcome")) {
      const Index s = subgroup_index(entry.at("subgroup"));
      data.outcome[s] = read_outcome_csv(
          base / entry.at("path").get<std::string>(), family, 0);
      seen_outcome[s] = true;
    }
    for (Index s = 0; s < S; ++s)
      if (!seen_outcome[s])
        throw DataError("manifest is missing the outcome for subgroup '" +
                        subgroup_names[s] + "'");
  }
  for (Index s = 0; s < S; ++s) data.subgroups[s].n = data.X[0][s].rows();
  if (has_outcome && family == Family::MultiClass) {
    // class count must agree across subgroups: re-read with the global max
    Index m = 0;
    for (Index s = 0; s < S; ++s) m = std::max(m, data.outcome[s].num_classes());
    for (Index s = 0; s < S; ++s)
      if (data.outcome[s].num_classes() != m)
        data.outcome[s] = OutcomeData::multiclass(data.outcome[s].labels, m);
  }
  return data;
}

std::filesystem::path write_dataset(const fs::path& dir,
                                    const MultiViewDataset& data) {
  fs::create_directories(dir);
  json manifest;
  manifest["family"] = to_string(data.family());
  manifest["views"] = json::array();
  manifest["subgroups"] = json::array();
  manifest["data"] = json::array();
  manifest["outcome"] = json::array();
  for (const auto& v : data.views) manifest["views"].push_back(v.name);
  for (const auto& g : data.subgroups) manifest["subgroups"].push_back(g.name);

  for (Index d = 0; d < data.num_views(); ++d) {
    for (Index s = 0; s < data.num_subgroups(); ++s) {
      const std::string name = "X_" + data.views[d].name + "_" +
                               data.subgroups[s].name + ".csv";
      write_csv(dir / name, data.views[d].variables, data.x(d, s));
      manifest["data"].push_back({{"view", data.views[d].name},
                                  {"subgroup", data.subgroups[s].name},
                                  {"path", name}});
    }
  }
  for (Index s = 0; s < data.num_subgroups(); ++s) {
    const std::string name = "y_" + data.subgroups[s].name + ".csv";
    const OutcomeData& y = data.outcome[s];
    if (y.family == Family::MultiClass) {
      Eigen::MatrixXd col = y.labels.cast<double>();
      write_csv(dir / name, {"class"}, col);
    } else {
      Eigen::MatrixXd m(y.counts.size(), 2);
      m.col(0) = y.counts;
      m.col(1) = y.offsets;
      write_csv(dir / name, {"count", "offset"}, m);
    }
    manifest["outcome"].push_back(
        {{"subgroup", data.subgroups[s].name}, {"path", name}});
  }
  const fs::path manifest_path = dir / "manifest.json";
  write_json(manifest_path, manifest);
  return manifest_path;
}

json matrix_to_json(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& value) {
  if (!value.is_array()) throw DataError("matrix JSON must be an array of rows");
  const Index rows = static_cast<Index>(value.size());
  if (rows == 0) return {};
  const Index cols = static_cast<Index>(value[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    if (static_cast<Index>(value[i].size()) != cols)
      throw DataError("matrix JSON has ragged rows");
    for (Index j = 0; j < cols; ++j) m(i, j) = value[i][j].get<double>();
  }
  return m;
}

json trace_to_json(const FitTrace& trace) {
  json out;
  out["converged"] = trace.converged;
  out["reason"] = trace.reason;
  out["warnings"] = trace.warnings;
  out["exp_clips"] = trace.exp_clips;
  const auto breakdown = [](const ObjectiveBreakdown& b) {
    return json{{"prediction", b.prediction},
                {"association", b.association},
                {"penalty_g", b.penalty_g},
                {"penalty_xi", b.penalty_xi},
                {"total", b.total}};
  };
  out["initial"] = breakdown(trace.initial);
  json iters = json::array();
  for (const auto& it : trace.iterations) {
    json j = breakdown(it.objective);
    j["tau"] = it.tau;
    j["rel_change"] = it.rel_change;
    j["inner_iterations"] = {{"z", it.z_iterations},
                             {"g", it.g_iterations},
                             {"xi", it.xi_iterations},
                             {"theta", it.theta_iterations}};
    iters.push_back(std::move(j));
  }
  out["iterations"] = std::move(iters);
  return out;
}

json selection_to_json(const SelectionResult& selection,
                       const MultiViewDataset& data) {
  json out;
  out["nu"] = selection.nu;
  json unions = json::array();
  for (Index d = 0; d < data.num_views(); ++d) {
    json u;
    u["view"] = data.views[d].name;
    u["indices"] = selection.union_by_view[d];
    json names = json::array();
    for (Index j : selection.union_by_view[d])
      names.push_back(data.views[d].variables[j]);
    u["variables"] = std::move(names);
    unions.push_back(std::move(u));
  }
  out["union"] = std::move(unions);
  json ranked = json::array();
  for (const auto& block : selection.ranked) {
    json b;
    b["view"] = data.views[block.view].name;
    b["subgroup"] = data.subgroups[block.subgroup].name;
    b["order"] = block.order;
    json scores = json::array();
    for (Index j = 0; j < block.scores.size(); ++j) scores.push_back(block.scores(j));
    b["scores"] = std::move(scores);
    b["top"] = block.top;
    ranked.push_back(std::move(b));
  }
  out["ranked"] = std::move(ranked);
  return out;
}

json standardization_to_json(const StandardizationParams& params) {
  json out;
  out["mode"] = to_string(params.mode);
  json stats = json::array();
  for (size_t d = 0; d < params.stats.size(); ++d) {
    json per_view = json::array();
    for (size_t s = 0; s < params.stats[d].size(); ++s) {
      const ColumnStats& cs = params.stats[d][s];
      json entry;
      entry["mean"] = std::vector<double>(cs.mean.data(), cs.mean.data() + cs.mean.size());
      entry["scale"] =
          std::vector<double>(cs.scale.data(), cs.scale.data() + cs.scale.size());
      json constants = json::array();
      for (char c : cs.constant) constants.push_back(static_cast<bool>(c));
      entry["constant"] = std::move(constants);
      per_view.push_back(std::move(entry));
    }
    stats.push_back(std::move(per_view));
  }
  out["stats"] = std::move(stats);
  return out;
}

StandardizationParams standardization_from_json(const json& value) {
  StandardizationParams params;
  params.mode = standardization_from_string(value.at("mode"));
  for (const json& per_view : value.at("stats")) {
    std::vector<ColumnStats> row;
    for (const json& entry : per_view) {
      ColumnStats cs;
      const auto mean = entry.at("mean").get<std::vector<double>>();
      const auto scale = entry.at("scale").get<std::vector<double>>();
      cs.mean = Eigen::Map<const Eigen::VectorXd>(mean.data(),
                                                  static_cast<Index>(mean.size()));
      cs.scale = Eigen::Map<const Eigen::VectorXd>(
          scale.data(), static_cast<Index>(scale.size()));
      for (const json& c : entry.at("constant"))
        cs.constant.push_back(c.get<bool>() ? 1 : 0);
      row.push_back(std::move(cs));
    }
    params.stats.push_back(std::move(row));
  }
  return params;
}

json truth_to_json(const GroundTruth& truth, const ScenarioSpec& spec) {
  json out;
  out["k_true"] = spec.k_true;
  out["family"] = to_string(spec.family);
  out["overlap"] = spec.overlap == Overlap::Full ? "full" : "partial";
  out["tau"] = truth.tau;
  out["beta0"] = std::vector<double>(truth.beta0.data(),
                                     truth.beta0.data() + truth.beta0.size());
  out["theta"] = matrix_to_json(truth.theta);
  json signal = json::array();
  for (size_t d = 0; d < truth.signal.size(); ++d)
    for (size_t s = 0; s < truth.signal[d].size(); ++s)
      signal.push_back({{"view", static_cast<Index>(d)},
                        {"subgroup", static_cast<Index>(s)},
                        {"indices", truth.signal[d][s]}});
  out["signal"] = std::move(signal);
  return out;
}

std::vector<std::vector<std::vector<Index>>> truth_signals_from_json(
    const json& value) {
  Index D = 0, S = 0;
  for (const json& entry : value.at("signal")) {
    D = std::max(D, entry.at("view").get<Index>() + 1);
    S = std::max(S, entry.at("subgroup").get<Index>() + 1);
  }
  std::vector<std::vector<std::vector<Index>>> signal(
      static_cast<size_t>(D), std::vector<std::vector<Index>>(static_cast<size_t>(S)));
  for (const json& entry : value.at("signal"))
    signal[entry.at("view").get<size_t>()][entry.at("subgroup").get<size_t>()] =
        entry.at("indices").get<std::vector<Index>>();
  return signal;
}

json model_to_json(const ModelArtifact& model) {
  json out;
  out["engine"] = {{"name", kEngineName}, {"version", kEngineVersion}};
  out["family"] = to_string(model.family);
  out["k"] = model.k;
  out["lambda_g"] = model.lambda_g;
  out["lambda_xi"] = model.lambda_xi;
  out["gamma"] = model.gamma;
  out["seed"] = model.seed;
  out["views"] = json::array();
  for (size_t d = 0; d < model.view_names.size(); ++d)
    out["views"].push_back(
        {{"name", model.view_names[d]}, {"variables", model.variable_names[d]}});
  out["subgroups"] = model.subgroup_names;
  out["n_top"] = model.n_top;
  out["standardization"] = standardization_to_json(model.standardization);
  out["union_by_view"] = model.union_by_view;
  json b = json::array();
  for (size_t d = 0; d < model.subset_b.size(); ++d) {
    json per_view = json::array();
    for (size_t s = 0; s < model.subset_b[d].size(); ++s)
      per_view.push_back(matrix_to_json(model.subset_b[d][s]));
    b.push_back(std::move(per_view));
  }
  out["subset_b"] = std::move(b);
  out["theta"] = matrix_to_json(model.theta);
  out["beta0"] = std::vector<double>(model.beta0.data(),
                                     model.beta0.data() + model.beta0.size());
  out["tau"] = model.tau;
  out["ebic"] = {{"ebic0", model.ebic.ebic0},
                 {"ebic0.5", model.ebic.ebic05},
                 {"ebic1", model.ebic.ebic1}};
  out["report"] = model.report;
  return out;
}

ModelArtifact model_from_json(const json& value) {
  ModelArtifact model;
  model.family = family_from_string(value.at("family"));
  model.k = value.at("k").get<int>();
  model.lambda_g = value.at("lambda_g").get<double>();
  model.lambda_xi = value.at("lambda_xi").get<double>();
  model.gamma = value.at("gamma").get<std::vector<int>>();
  model.seed = value.at("seed").get<std::uint64_t>();
  for (const json& view : value.at("views")) {
    model.view_names.push_back(view.at("name").get<std::string>());
    model.variable_names.push_back(
        view.at("variables").get<std::vector<std::string>>());
  }
  model.subgroup_names = value.at("subgroups").get<std::vector<std::string>>();
  model.n_top = value.at("n_top").get<std::vector<Index>>();
  model.standardization = standardization_from_json(value.at("standardization"));
  model.union_by_view =
      value.at("union_by_view").get<std::vector<std::vector<Index>>>();
  for (const json& per_view : value.at("subset_b")) {
    std::vector<Eigen::MatrixXd> row;
    for (const json& m : per_view) row.push_back(matrix_from_json(m));
    model.subset_b.push_back(std::move(row));
  }
  model.theta = matrix_from_json(value.at("theta"));
  const auto beta0 = value.at("beta0").get<std::vector<double>>();
  model.beta0 = Eigen::Map<const Eigen::RowVectorXd>(
      beta0.data(), static_cast<Index>(beta0.size()));
  model.tau = value.at("tau").get<double>();
  model.ebic.ebic0 = value.at("ebic").at("ebic0").get<double>();
  model.ebic.ebic05 = value.at("ebic").at("ebic0.5").get<double>();
  model.ebic.ebic1 = value.at("ebic").at("ebic1").get<double>();
  if (value.contains("report")) model.report = value.at("report");
  return model;
}

namespace {

bool type_matches(const json& value, const std::string& type) {
  if (type == "object") return value.is_object();
  if (type == "array") return value.is_array();
  if (type == "string") return value.is_string();
  if (type == "number") return value.is_number();
  if (type == "integer") return value.is_number_integer();
  if (type == "boolean") return value.is_boolean();
  if (type == "null") return value.is_null();
  return false;
}

void check_schema(const json& value, const json& schema, const std::string& path,
                  std::vector<std::string>& errors) {
  if (schema.contains("type")) {
    const json& t = schema.at("type");
    bool ok = false;
    if (t.is_string()) {
      ok = type_matches(value, t.get<std::string>());
    } else {
      for (const json& option : t)
        ok = ok || type_matches(value, option.get<std::string>());
    }
    if (!ok) {
      errors.push_back(path + ": expected type " + t.dump());
      return;
    }
  }
  if (schema.contains("enum")) {
    bool ok = false;
    for (const json& option : schema.at("enum")) ok = ok || option == value;
    if (!ok) errors.push_back(path + ": value not in enum");
  }
  if (schema.contains("minimum") && value.is_number() &&
      value.get<double>() < schema.at("minimum").get<double>())
    errors.push_back(path + ": below minimum");
  if (schema.contains("minItems") && value.is_array() &&
      value.size() < schema.at("minItems").get<size_t>())
    errors.push_back(path + ": fewer than minItems elements");
  if (value.is_object()) {
    if (schema.contains("required"))
      for (const json& key : schema.at("required"))
        if (!value.contains(key.get<std::string>()))
          errors.push_back(path + ": missing required key '" +
                           key.get<std::string>() + "'");
    if (schema.contains("properties"))
      for (auto it = schema.at("properties").begin();
           it != schema.at("properties").end(); ++it)
        if (value.contains(it.key()))
          check_schema(value.at(it.key()), it.value(), path + "/" + it.key(),
                       errors);
  }
  if (value.is_array() && schema.contains("items")) {
    size_t i = 0;
    for (const json& item : value)
      check_schema(item, schema.at("items"), path + "/" + std::to_string(i++),
                   errors);
  }
}

}  // namespace

std::vector<std::string> schema_violations(const json& value, const json& schema) {
  std::vector<std::string> errors;
  check_schema(value, schema, "", errors);
  return errors;
}

}  // namespace hip

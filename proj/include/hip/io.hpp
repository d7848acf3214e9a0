#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "hip/selection.hpp"
#include "hip/simgen.hpp"
#include "hip/types.hpp"

namespace hip {

using json = nlohmann::json;

inline constexpr const char* kEngineName = "hip";
inline constexpr const char* kEngineVersion = "0.1.0";

// ---- CSV (UTF-8, comma separated, '.' decimal, header row) ----

struct Csv {
  std::vector<std::string> header;
  Eigen::MatrixXd values;
};

Csv read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path,
               const std::vector<std::string>& header,
               const Eigen::Ref<const Eigen::MatrixXd>& values);

/// Shortest round-trip decimal form; identical bytes for identical doubles.
std::string format_double(double v);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& value);

/// FNV-1a 64-bit digest of the file bytes, as 16 hex characters.
std::string file_digest(const std::filesystem::path& path);

// ---- dataset manifest ----

/// Reads the manifest JSON (views, subgroups, per-(view,subgroup) CSV paths,
/// per-subgroup outcome CSVs, family); paths resolve relative to the manifest.
MultiViewDataset load_dataset(const std::filesystem::path& manifest_path);

/// Writes X_<view>_<subgroup>.csv, y_<subgroup>.csv, and the manifest into
/// dir; returns the manifest path.
std::filesystem::path write_dataset(const std::filesystem::path& dir,
                                    const MultiViewDataset& data);

// ---- JSON pieces ----

json matrix_to_json(const Eigen::Ref<const Eigen::MatrixXd>& m);
Eigen::MatrixXd matrix_from_json(const json& value);

json trace_to_json(const FitTrace& trace);
json selection_to_json(const SelectionResult& selection,
                       const MultiViewDataset& data);
json standardization_to_json(const StandardizationParams& params);
StandardizationParams standardization_from_json(const json& value);

json truth_to_json(const GroundTruth& truth, const ScenarioSpec& spec);
/// Parses the signal sets (all that evaluation needs).
std::vector<std::vector<std::vector<Index>>> truth_signals_from_json(const json&);

/// The persisted model: everything prediction needs plus report sections.
struct ModelArtifact {
  Family family = Family::Poisson;
  int k = 2;
  double lambda_g = 0.0;
  double lambda_xi = 0.0;
  std::vector<int> gamma;
  std::uint64_t seed = 0;
  std::vector<std::string> view_names;
  std::vector<std::vector<std::string>> variable_names;  // per view, full set
  std::vector<std::string> subgroup_names;
  std::vector<Index> n_top;
  StandardizationParams standardization;
  std::vector<std::vector<Index>> union_by_view;
  std::vector<std::vector<Eigen::MatrixXd>> subset_b;  // [view][subgroup]
  Eigen::MatrixXd theta;
  Eigen::RowVectorXd beta0;
  double tau = 0.0;
  EbicTriple ebic;
  json report;  // traces, ranking, training metric, search section, timings
};

json model_to_json(const ModelArtifact& model);
ModelArtifact model_from_json(const json& value);

// ---- minimal JSON-schema checker (type/required/properties/items/enum) ----

std::vector<std::string> schema_violations(const json& value, const json& schema);

}  // namespace hip

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "hyperrule/dataset.hpp"
#include "hyperrule/ocsvm.hpp"
#include "hyperrule/rules.hpp"
#include "hyperrule/serialization.hpp"
#include "hyperrule/surrogate.hpp"

namespace hyperrule {

enum class TargetSelection { non_anomalous, anomalous, both };

struct RunConfig {
  std::string id;
  std::filesystem::path dataset;
  std::vector<std::string> numerical;
  std::vector<std::string> categorical;
  std::vector<CyclicalFeature> cyclical;
  OcsvmOptions ocsvm;
  // Fit one detector per categorical state on numerical columns only,
  // instead of one detector on all columns with one-hot categoricals.
  bool fit_per_group = false;
  ExtractionConfig extraction;
  TargetSelection targets = TargetSelection::both;
  std::uint64_t surrogate_seed = 42;
  std::filesystem::path output_dir = "out";
};

// Relative paths inside the document resolve against `base_dir`.
RunConfig config_from_json(const nlohmann::ordered_json& j, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);
void validate(const RunConfig& cfg);

// Loaded dataset with cyclical columns expanded; values in original units.
struct PreparedData {
  Dataset data;
  std::vector<std::string> numerical;  // expanded
  std::vector<std::string> categorical;
  ScalingParams scaling;
};

PreparedData prepare(const RunConfig& cfg);

DetectorBundle fit_detector(const PreparedData& prepared, const RunConfig& cfg);
// Rows whose state has no per-group detector are anomalous.
std::vector<Label> detect(const DetectorBundle& bundle, const Dataset& data);

struct ExtractArtifacts {
  PreparedData prepared;
  DetectorBundle bundle;
  std::vector<Label> predictions;
  std::optional<ExtractionResult> non_anomalous;
  std::optional<ExtractionResult> anomalous;
};

ExtractArtifacts run_extract(const RunConfig& cfg);
// Writes model.json and rules_{na,a}[_scaled].{json,txt} under `out`.
void write_extract_artifacts(const ExtractArtifacts& a, const std::filesystem::path& out);

nlohmann::ordered_json rules_document(const ExtractionResult& r, bool scaled);

struct SurrogateArtifacts {
  DecisionTree tree;
  TreeRules rules;
  double training_accuracy = 0.0;
  std::size_t rows = 0;
};

// Surrogate tree on features (original units, one-hot categoricals) against
// the given detector labels.
SurrogateArtifacts run_surrogate(const PreparedData& prepared, std::span<const Label> labels,
                                 std::uint64_t seed);
void write_surrogate_artifacts(const SurrogateArtifacts& s, const std::filesystem::path& out);

struct ReportRow {
  std::string id;
  bool ok = false;
  std::string failure;
  std::size_t proposal_na = 0;
  std::size_t proposal_a = 0;
  std::size_t tree_na = 0;
  std::size_t tree_a = 0;
  std::size_t discarded_clusters = 0;
  double coverage_pct = 0.0;
  double anomaly_fraction = 0.0;
  std::optional<double> seconds;
};

// Reads the artifacts under `dir`; missing or unreadable files mark the row failed.
ReportRow report_row(const std::string& id, const std::filesystem::path& dir);
nlohmann::ordered_json report_json(const std::vector<ReportRow>& rows);
std::string report_text(const std::vector<ReportRow>& rows);

// Scatter of the two numerical features plus one rectangle per rule, in
// original units. `state` selects a categorical group when there are
// categorical columns.
std::string plot_svg(const PreparedData& prepared, std::span<const Label> predictions,
                     const RuleSet& rules, const std::optional<CategoricalState>& state);

int exit_code_for(const std::exception& e);

}  // namespace hyperrule

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "hyperrule/dataset.hpp"
#include "hyperrule/ocsvm.hpp"
#include "hyperrule/rules.hpp"
#include "hyperrule/surrogate.hpp"

namespace hyperrule {

inline constexpr int kFormatVersion = 1;

// One fitted detector per categorical state (a single entry with an empty
// state when the model is fitted on all rows).
struct DetectorPart {
  CategoricalState state;
  OcsvmModel model;
};

// Everything needed to re-score raw rows: column schema, scaling, encoding
// and the fitted one-class SVM(s).
struct DetectorBundle {
  bool per_group = false;
  std::vector<std::string> numerical;    // after cyclical expansion
  std::vector<std::string> categorical;
  std::vector<CyclicalFeature> cyclical;
  ScalingParams scaling;
  FeatureEncoding encoding;
  std::vector<DetectorPart> parts;
  std::size_t training_rows = 0;
  std::size_t training_anomalies = 0;
};

nlohmann::ordered_json to_json(const OcsvmModel& m);
OcsvmModel model_from_json(const nlohmann::ordered_json& j);

nlohmann::ordered_json to_json(const DetectorBundle& b);
DetectorBundle bundle_from_json(const nlohmann::ordered_json& j);

nlohmann::ordered_json to_json(const CategoricalState& s);
CategoricalState state_from_json(const nlohmann::ordered_json& j);

nlohmann::ordered_json to_json(const RuleSet& rs);
RuleSet ruleset_from_json(const nlohmann::ordered_json& j);

nlohmann::ordered_json to_json(const DecisionTree& t);
DecisionTree tree_from_json(const nlohmann::ordered_json& j);

nlohmann::ordered_json read_json(const std::filesystem::path& path);
// Pretty-printed with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace hyperrule

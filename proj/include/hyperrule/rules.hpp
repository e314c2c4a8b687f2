#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hyperrule/clustering.hpp"
#include "hyperrule/dataset.hpp"
#include "hyperrule/errors.hpp"
#include "hyperrule/labels.hpp"
#include "hyperrule/matrix.hpp"

namespace hyperrule {

// Closed interval; membership uses <= and >= only.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v) const { return lo <= v && v <= hi; }
  bool contains(const Interval& o) const { return lo <= o.lo && o.hi <= hi; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

// Axis-aligned hypercube, one interval per numerical column.
using Box = std::vector<Interval>;

bool box_contains(const Box& box, std::span<const double> x);
bool box_contains(const Box& outer, const Box& inner);

enum class BoxMode { all_points, farthest_vertices };
enum class DiscardThreshold { vertices, clusters };

struct Provenance {
  std::size_t group = 0;    // categorical group, first-appearance order
  std::size_t cluster = 0;  // cluster index within the final clustering
  std::size_t covered = 0;  // points in that cluster

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct Rule {
  CategoricalState state;
  Box bounds;
  Label label = Label::non_anomalous;
  Provenance provenance;

  bool matches(const CategoricalState& s, std::span<const double> x) const;
  friend bool operator==(const Rule&, const Rule&) = default;
};

struct DiscardedCluster {
  std::size_t group = 0;
  std::size_t cluster = 0;
  std::size_t points = 0;

  friend bool operator==(const DiscardedCluster&, const DiscardedCluster&) = default;
};

struct RuleSet {
  Label label = Label::non_anomalous;
  bool scaled = true;
  std::size_t n_v = 1;  // 2^(number of numerical columns)
  std::vector<std::string> numerical;
  std::vector<std::string> categorical;
  std::vector<CyclicalFeature> cyclical;  // pairs among `numerical`, decoded for display
  std::vector<Rule> rules;
  std::vector<DiscardedCluster> discarded;

  // True when some rule with the same categorical state contains x.
  bool covers(const CategoricalState& s, std::span<const double> x) const;
  friend bool operator==(const RuleSet&, const RuleSet&) = default;
};

std::size_t vertex_count(std::size_t numerical_columns);

// Per-column [min, max] over `points`, or over the n_v points farthest from
// `centroid` when mode is farthest_vertices and there are more than n_v.
// Fewer than n_v points use all of them; the remaining box corners are
// implied by the min/max bounds.
Box bounding_box(const Matrix& points, BoxMode mode, std::span<const double> centroid,
                 std::size_t n_v);
// Rows of `points` that define the box (the whole set or the farthest n_v).
std::vector<std::size_t> box_vertex_rows(const Matrix& points, BoxMode mode,
                                         std::span<const double> centroid, std::size_t n_v);

// Number of rows of `anomalies` inside the closed box.
std::size_t contains_any_anomaly(const Box& box, const Matrix& anomalies);

struct ExtractionConfig {
  double discard_factor = 1.0;  // e
  DiscardThreshold threshold = DiscardThreshold::vertices;
  BoxMode mode = BoxMode::all_points;
  std::optional<std::size_t> max_clusters;  // default: number of target rows
  KMeansOptions kmeans;
  // When false, small clusters whose box holds other-class points are kept
  // instead of discarded (used when explaining anomalies).
  bool discard_enabled = true;
  // Require n_v target points in every categorical group, not just
  // (groups' column count + 1) * n_v overall.
  bool per_group_min_check = false;
};

struct NumericBox {
  Box box;
  std::size_t cluster = 0;
  std::size_t points = 0;
  std::vector<std::size_t> vertex_rows;  // target rows that define the bounds
};

struct NumericExtraction {
  std::vector<NumericBox> boxes;
  std::vector<DiscardedCluster> discarded;  // group left at 0
  std::size_t n_clusters = 0;
  std::vector<std::size_t> labels;  // final cluster per target row
  std::vector<bool> row_discarded;
};

class ExtractionNonConvergence : public NonConvergenceError {
 public:
  ExtractionNonConvergence(const std::string& what, std::size_t n_clusters, std::vector<Box> offending)
      : NonConvergenceError(what), n_clusters_(n_clusters), offending_(std::move(offending)) {}
  std::size_t n_clusters() const { return n_clusters_; }
  const std::vector<Box>& offending() const { return offending_; }

 private:
  std::size_t n_clusters_;
  std::vector<Box> offending_;
};

// Grows the number of k-means++ clusters over `target` until every box is
// free of `other` points, discarding clusters smaller than the threshold
// whose box cannot be cleaned.
NumericExtraction extract_numeric_rules(const Matrix& target, const Matrix& other, std::size_t n_v,
                                        const ExtractionConfig& cfg);

struct RuleColumns {
  std::vector<std::string> numerical;
  std::vector<std::string> categorical;
  std::vector<CyclicalFeature> cyclical;
};

struct ExtractionStats {
  std::size_t target_rows = 0;
  std::size_t other_rows = 0;
  std::size_t covered_rows = 0;    // target rows satisfying some final rule
  std::size_t discarded_rows = 0;  // target rows in discarded clusters

  friend bool operator==(const ExtractionStats&, const ExtractionStats&) = default;
};

struct ExtractionResult {
  RuleSet scaled;  // bounds in [0, 1] units
  RuleSet rules;   // bounds in original units
  RuleSet unpruned;  // original units, before subsumption pruning
  ExtractionStats stats;
  std::vector<bool> discarded_rows;  // per input row: target row in a discarded cluster
};

// Full extraction for one target class. `d` holds original units;
// `predictions` are the detector's labels for its rows.
ExtractionResult extract_rules(const Dataset& d, std::span<const Label> predictions,
                               const ScalingParams& p, Label target, const RuleColumns& columns,
                               const ExtractionConfig& cfg);

// Removes every rule contained in a surviving rule with the same state;
// among identical rules the first survives.
RuleSet prune_rules(const RuleSet& rs);
std::vector<bool> prune_mask(const RuleSet& rs);

RuleSet unscale_rules(const RuleSet& rs, const ScalingParams& p);

struct Counterfactual {
  std::vector<double> point;
  Rule nearest_rule;
  std::size_t rule_index = 0;
  std::vector<double> deltas;  // add to `point` to enter the rule
  double distance = 0.0;       // L1 of deltas, scaled units
};

// Nearest rule by L1 clip distance, ties to the earlier rule. With scaled
// rule sets the distance is in rule units; for original-unit sets pass the
// scaling parameters so the distance is measured in scaled units.
Counterfactual explain_point(std::span<const double> x, const CategoricalState& state,
                             const RuleSet& rs);
Counterfactual explain_point(std::span<const double> x, const CategoricalState& state,
                             const RuleSet& rs, const ScalingParams& p);

// "NOT OUTLIER IF a ≥ 1 ∧ a ≤ 2 ∧ c = x" (or "OUTLIER IF ...").
std::string render_rule(const Rule& r, const RuleSet& rs);
std::string render_rules(const RuleSet& rs);

}  // namespace hyperrule

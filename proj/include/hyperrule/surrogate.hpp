#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hyperrule/labels.hpp"
#include "hyperrule/matrix.hpp"

namespace hyperrule {

// Describes one input column of the surrogate tree. Indicator columns come
// from one-hot encoding and render as equality predicates.
struct TreeFeature {
  std::string name;
  bool indicator = false;
  std::string source_column;  // indicator only
  std::string token;          // indicator only

  friend bool operator==(const TreeFeature&, const TreeFeature&) = default;
};

// Node of a flattened binary tree. Split nodes send x[feature] <= threshold
// to `left`; leaves carry the majority label.
struct TreeNode {
  bool leaf = true;
  std::size_t feature = 0;
  double threshold = 0.0;
  std::size_t left = 0;
  std::size_t right = 0;
  Label label = Label::non_anomalous;
  std::size_t samples = 0;
  std::size_t positives = 0;  // samples labelled non-anomalous
  double purity = 1.0;
  std::size_t depth = 0;

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  std::vector<TreeFeature> features;
  std::uint64_t seed = 0;

  std::size_t depth() const;
  std::size_t node_count() const { return nodes.size(); }
  std::size_t leaf_count() const;

  Label predict(std::span<const double> x) const;
  std::size_t leaf_of(std::span<const double> x) const;
  // "Depth = 11, Nodes = 53, Leaf nodes = 30"
  std::string summary() const;

  friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

// Gini impurity of a node with `positives` out of `total`.
double gini(std::size_t positives, std::size_t total);

// Fully grown CART tree (no depth or size limit). Every impure node with a
// usable split is split at the best Gini decrease; ties go to the lowest
// feature index, then the lowest threshold. Thresholds are midpoints between
// consecutive distinct values. The tree is deterministic; `seed` is recorded.
DecisionTree fit_tree(const Matrix& x, std::span<const Label> y, std::uint64_t seed,
                      std::vector<TreeFeature> features = {});

enum class Comparison { less_equal, greater };

struct Predicate {
  std::size_t feature = 0;
  Comparison op = Comparison::less_equal;
  double threshold = 0.0;
};

struct TreeRule {
  std::vector<Predicate> predicates;  // root to leaf
  Label label = Label::non_anomalous;
  std::size_t samples = 0;
  std::size_t leaf = 0;

  bool matches(std::span<const double> x) const;
};

struct TreeRules {
  std::vector<TreeRule> non_anomalous;
  std::vector<TreeRule> anomalous;
};

// One rule per leaf, split by leaf label.
TreeRules tree_to_rules(const DecisionTree& t);

std::string render_tree_rule(const TreeRule& r, const DecisionTree& t);

}  // namespace hyperrule

#include "hyperrule/surrogate.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "hyperrule/errors.hpp"

namespace hyperrule {

double gini(std::size_t positives, std::size_t total) {
  if (total == 0) return 0.0;
  const double p = static_cast<double>(positives) / static_cast<double>(total);
  return 2.0 * p * (1.0 - p);
}

std::size_t DecisionTree::depth() const {
  std::size_t d = 0;
  for (const auto& n : nodes) d = std::max(d, n.depth);
  return d;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.leaf; }));
}

std::size_t DecisionTree::leaf_of(std::span<const double> x) const {
  if (nodes.empty()) throw Error("empty tree");
  std::size_t i = 0;
  while (!nodes[i].leaf) {
    if (nodes[i].feature >= x.size()) throw DimensionError("tree feature index out of range");
    i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
  }
  return i;
}

Label DecisionTree::predict(std::span<const double> x) const { return nodes[leaf_of(x)].label; }

std::string DecisionTree::summary() const {
  return "Depth = " + std::to_string(depth()) + ", Nodes = " + std::to_string(node_count()) +
         ", Leaf nodes = " + std::to_string(leaf_count());
}

namespace {

struct Candidate {
  bool valid = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  // Split quality as the exact fraction num/den of
  //   sum over children of (pos^2 + neg^2) / n_child,
  // which grows as the weighted child Gini shrinks.
  __int128 num = 0;
  __int128 den = 1;
};

bool better(const Candidate& a, const Candidate& b) {
  if (!b.valid) return a.valid;
  if (!a.valid) return false;
  // Exact comparison keeps tie-breaking independent of rounding.
  const __int128 lhs = a.num * b.den;
  const __int128 rhs = b.num * a.den;
  if (lhs != rhs) return lhs > rhs;
  if (a.feature != b.feature) return a.feature < b.feature;
  return a.threshold < b.threshold;
}

class Builder {
 public:
  Builder(const Matrix& x, std::span<const Label> y, DecisionTree& tree) : x_(x), y_(y), tree_(tree) {}

  std::size_t grow(std::vector<std::size_t> rows, std::size_t depth) {
    const std::size_t id = tree_.nodes.size();
    tree_.nodes.emplace_back();
    std::size_t pos = 0;
    for (auto r : rows) pos += y_[r] == Label::non_anomalous ? 1 : 0;
    const std::size_t total = rows.size();
    {
      TreeNode& node = tree_.nodes[id];
      node.samples = total;
      node.positives = pos;
      node.depth = depth;
      // Majority label, ties to non-anomalous.
      node.label = 2 * pos >= total ? Label::non_anomalous : Label::anomalous;
      node.purity = static_cast<double>(std::max(pos, total - pos)) / static_cast<double>(total);
    }
    if (pos == 0 || pos == total) return id;

    Candidate best = best_split(rows);
    if (!best.valid) return id;

    std::vector<std::size_t> left, right;
    for (auto r : rows) (x_(r, best.feature) <= best.threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    const std::size_t l = grow(std::move(left), depth + 1);
    const std::size_t rt = grow(std::move(right), depth + 1);
    TreeNode& node = tree_.nodes[id];
    node.leaf = false;
    node.feature = best.feature;
    node.threshold = best.threshold;
    node.left = l;
    node.right = rt;
    return id;
  }

 private:
  Candidate best_split(const std::vector<std::size_t>& rows) const {
    Candidate best;
    const std::size_t total = rows.size();
    std::size_t total_pos = 0;
    for (auto r : rows) total_pos += y_[r] == Label::non_anomalous ? 1 : 0;

    std::vector<std::size_t> order(rows);
    for (std::size_t f = 0; f < x_.cols(); ++f) {
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return x_(a, f) < x_(b, f) || (x_(a, f) == x_(b, f) && a < b);
      });
      std::size_t left_n = 0, left_pos = 0;
      for (std::size_t i = 0; i + 1 < total; ++i) {
        ++left_n;
        left_pos += y_[order[i]] == Label::non_anomalous ? 1 : 0;
        const double v = x_(order[i], f), next = x_(order[i + 1], f);
        if (v == next) continue;

        const auto ln = static_cast<__int128>(left_n);
        const auto rn = static_cast<__int128>(total - left_n);
        const auto lp = static_cast<__int128>(left_pos);
        const auto lq = ln - lp;
        const auto rp = static_cast<__int128>(total_pos - left_pos);
        const auto rq = rn - rp;
        Candidate c;
        c.valid = true;
        c.feature = f;
        c.threshold = v + (next - v) / 2.0;
        // Midpoints of nearly equal doubles can round onto `next`.
        if (!(c.threshold < next)) c.threshold = v;
        c.num = (lp * lp + lq * lq) * rn + (rp * rp + rq * rq) * ln;
        c.den = ln * rn;
        if (better(c, best)) best = c;
      }
    }
    return best;
  }

  const Matrix& x_;
  std::span<const Label> y_;
  DecisionTree& tree_;
};

}  // namespace

DecisionTree fit_tree(const Matrix& x, std::span<const Label> y, std::uint64_t seed,
                      std::vector<TreeFeature> features) {
  if (x.rows() == 0) throw Error("cannot fit a tree on empty input");
  if (x.rows() != y.size()) throw DimensionError("one label per row required");
  if (features.empty())
    for (std::size_t f = 0; f < x.cols(); ++f) features.push_back({"x" + std::to_string(f), false, {}, {}});
  if (features.size() != x.cols()) throw DimensionError("one feature description per column required");

  DecisionTree tree;
  tree.features = std::move(features);
  tree.seed = seed;
  std::vector<std::size_t> rows(x.rows());
  std::iota(rows.begin(), rows.end(), 0);
  Builder(x, y, tree).grow(std::move(rows), 0);
  return tree;
}

bool TreeRule::matches(std::span<const double> x) const {
  for (const auto& p : predicates) {
    const bool le = x[p.feature] <= p.threshold;
    if (le != (p.op == Comparison::less_equal)) return false;
  }
  return true;
}

TreeRules tree_to_rules(const DecisionTree& t) {
  TreeRules out;
  if (t.nodes.empty()) return out;
  struct Frame {
    std::size_t node;
    std::vector<Predicate> path;
  };
  std::vector<Frame> stack{{0, {}}};
  while (!stack.empty()) {
    Frame f = std::move(stack.back());
    stack.pop_back();
    const TreeNode& n = t.nodes[f.node];
    if (n.leaf) {
      TreeRule r{std::move(f.path), n.label, n.samples, f.node};
      (n.label == Label::non_anomalous ? out.non_anomalous : out.anomalous).push_back(std::move(r));
      continue;
    }
    auto right = f.path;
    right.push_back({n.feature, Comparison::greater, n.threshold});
    f.path.push_back({n.feature, Comparison::less_equal, n.threshold});
    // Left subtree first in output order.
    stack.push_back({n.right, std::move(right)});
    stack.push_back({n.left, std::move(f.path)});
  }
  return out;
}

std::string render_tree_rule(const TreeRule& r, const DecisionTree& t) {
  std::string out = r.label == Label::non_anomalous ? "NOT OUTLIER IF " : "OUTLIER IF ";
  if (r.predicates.empty()) return out + "TRUE";
  for (std::size_t i = 0; i < r.predicates.size(); ++i) {
    const Predicate& p = r.predicates[i];
    const TreeFeature& f = t.features.at(p.feature);
    if (i > 0) out += " ∧ ";
    if (f.indicator) {
      out += f.source_column + (p.op == Comparison::greater ? " = " : " ≠ ") + f.token;
    } else {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.10g", p.threshold);
      out += f.name + (p.op == Comparison::greater ? " > " : " ≤ ") + buf;
    }
  }
  return out;
}

}  // namespace hyperrule

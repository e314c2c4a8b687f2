#include "hyperrule/rules.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace hyperrule {

bool box_contains(const Box& box, std::span<const double> x) {
  if (box.size() != x.size()) throw DimensionError("box and point dimensions differ");
  for (std::size_t j = 0; j < box.size(); ++j)
    if (!box[j].contains(x[j])) return false;
  return true;
}

bool box_contains(const Box& outer, const Box& inner) {
  if (outer.size() != inner.size()) throw DimensionError("box dimensions differ");
  for (std::size_t j = 0; j < outer.size(); ++j)
    if (!outer[j].contains(inner[j])) return false;
  return true;
}

bool Rule::matches(const CategoricalState& s, std::span<const double> x) const {
  return state == s && box_contains(bounds, x);
}

bool RuleSet::covers(const CategoricalState& s, std::span<const double> x) const {
  return std::any_of(rules.begin(), rules.end(), [&](const Rule& r) { return r.matches(s, x); });
}

std::size_t vertex_count(std::size_t numerical_columns) {
  if (numerical_columns >= 63) throw ConfigError("too many numerical columns for 2^d vertices");
  return std::size_t{1} << numerical_columns;
}

std::vector<std::size_t> box_vertex_rows(const Matrix& points, BoxMode mode,
                                         std::span<const double> centroid, std::size_t n_v) {
  if (points.rows() == 0) throw Error("bounding box of an empty point set");
  std::vector<std::size_t> rows(points.rows());
  std::iota(rows.begin(), rows.end(), 0);
  if (mode == BoxMode::all_points || points.rows() <= n_v) return rows;
  if (centroid.size() != points.cols()) throw DimensionError("centroid dimension mismatch");

  std::vector<double> dist(points.rows());
  for (std::size_t i = 0; i < points.rows(); ++i) dist[i] = squared_distance(points.row(i), centroid);
  std::stable_sort(rows.begin(), rows.end(),
                   [&](std::size_t a, std::size_t b) { return dist[a] > dist[b]; });
  rows.resize(n_v);
  std::sort(rows.begin(), rows.end());
  return rows;
}

namespace {

Box box_over_rows(const Matrix& points, std::span<const std::size_t> rows) {
  Box box(points.cols());
  for (std::size_t j = 0; j < points.cols(); ++j) {
    double lo = points(rows[0], j), hi = lo;
    for (auto r : rows) {
      lo = std::min(lo, points(r, j));
      hi = std::max(hi, points(r, j));
    }
    box[j] = {lo, hi};
  }
  return box;
}

}  // namespace

Box bounding_box(const Matrix& points, BoxMode mode, std::span<const double> centroid,
                 std::size_t n_v) {
  auto rows = box_vertex_rows(points, mode, centroid, n_v);
  return box_over_rows(points, rows);
}

std::size_t contains_any_anomaly(const Box& box, const Matrix& anomalies) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < anomalies.rows(); ++i)
    if (box_contains(box, anomalies.row(i))) ++count;
  return count;
}

NumericExtraction extract_numeric_rules(const Matrix& target, const Matrix& other, std::size_t n_v,
                                        const ExtractionConfig& cfg) {
  const std::size_t n = target.rows();
  if (n == 0) throw InsufficientDataError("no target points to build hypercubes from");
  if (!other.empty() && other.cols() != target.cols())
    throw DimensionError("target and other point sets have different widths");
  if (!(cfg.discard_factor > 0.0)) throw ConfigError("discard factor must be positive");
  const std::size_t max_k = std::min(cfg.max_clusters.value_or(n), n);

  std::vector<Box> offending;
  for (std::size_t k = 1;; ++k) {
    if (k > max_k)
      throw ExtractionNonConvergence("rule extraction did not converge within " +
                                         std::to_string(max_k) + " clusters",
                                     k - 1, std::move(offending));

    Clustering clustering = kmeans_pp(target, k, cfg.kmeans);
    NumericExtraction out;
    out.n_clusters = k;
    out.labels = clustering.labels;
    out.row_discarded.assign(n, false);
    offending.clear();
    bool retry = false;

    const double threshold = cfg.discard_factor * static_cast<double>(
                                 cfg.threshold == DiscardThreshold::vertices ? n_v : k);
    for (std::size_t c = 0; c < k; ++c) {
      auto members = cluster_members(clustering, c);
      if (members.empty()) continue;
      Matrix pts = target.select_rows(members);
      auto local = box_vertex_rows(pts, cfg.mode, clustering.centroids.row(c), n_v);
      NumericBox nb{box_over_rows(pts, local), c, members.size(), {}};
      for (auto r : local) nb.vertex_rows.push_back(members[r]);

      if (contains_any_anomaly(nb.box, other) == 0) {
        out.boxes.push_back(std::move(nb));
        continue;
      }
      const bool small = members.size() < n_v;
      if (!small || static_cast<double>(members.size()) > threshold) {
        offending.push_back(nb.box);
        retry = true;
      } else if (cfg.discard_enabled) {
        out.discarded.push_back({0, c, members.size()});
        for (auto r : members) out.row_discarded[r] = true;
      } else {
        out.boxes.push_back(std::move(nb));
      }
    }
    if (!retry) return out;
  }
}

// ---- pruning & unscaling -------------------------------------------------

std::vector<bool> prune_mask(const RuleSet& rs) {
  const auto& r = rs.rules;
  std::vector<bool> keep(r.size(), true);
  for (std::size_t a = 0; a < r.size(); ++a) {
    for (std::size_t b = 0; b < r.size(); ++b) {
      if (a == b || r[a].state != r[b].state) continue;
      if (!box_contains(r[b].bounds, r[a].bounds)) continue;
      // Identical boxes: the earlier one survives.
      if (box_contains(r[a].bounds, r[b].bounds) && a < b) continue;
      keep[a] = false;
      break;
    }
  }
  return keep;
}

RuleSet prune_rules(const RuleSet& rs) {
  auto keep = prune_mask(rs);
  RuleSet out = rs;
  out.rules.clear();
  for (std::size_t i = 0; i < rs.rules.size(); ++i)
    if (keep[i]) out.rules.push_back(rs.rules[i]);
  return out;
}

RuleSet unscale_rules(const RuleSet& rs, const ScalingParams& p) {
  if (!rs.scaled) throw Error("rule set is already in original units");
  RuleSet out = rs;
  out.scaled = false;
  for (auto& rule : out.rules) {
    for (std::size_t j = 0; j < rule.bounds.size(); ++j) {
      const ColumnScale& s = p.at(rs.numerical.at(j));
      rule.bounds[j] = {unscale_value(rule.bounds[j].lo, s), unscale_value(rule.bounds[j].hi, s)};
    }
  }
  return out;
}

// ---- full extraction -----------------------------------------------------

namespace {

struct GroupInput {
  CategoricalState state;
  std::vector<std::size_t> target_rows;
  std::vector<std::size_t> other_rows;
};

}  // namespace

ExtractionResult extract_rules(const Dataset& d, std::span<const Label> predictions,
                               const ScalingParams& p, Label target, const RuleColumns& columns,
                               const ExtractionConfig& cfg) {
  if (predictions.size() != d.rows()) throw DimensionError("one prediction per row required");
  const auto& num = columns.numerical;
  const auto& cat = columns.categorical;
  if (num.empty() && cat.empty()) throw ConfigError("no feature columns given");
  const std::size_t n_v = vertex_count(num.size());

  std::vector<std::string> used(num);
  used.insert(used.end(), cat.begin(), cat.end());
  const Dataset original = d.select_columns(used);
  const Dataset scaled = scale_apply(original, p);
  const Matrix original_x = original.numerical_matrix(num);
  const Matrix scaled_x = scaled.numerical_matrix(num);

  std::vector<std::size_t> target_rows, other_rows;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    (predictions[i] == target ? target_rows : other_rows).push_back(i);

  if (target == Label::non_anomalous && (cat.size() + 1) * n_v > target_rows.size())
    throw InsufficientDataError("insufficient data: (" + std::to_string(cat.size()) + " + 1) x " +
                                std::to_string(n_v) + " vertices exceed " +
                                std::to_string(target_rows.size()) + " non-anomalous rows");

  ExtractionConfig group_cfg = cfg;
  if (target == Label::anomalous) group_cfg.discard_enabled = false;

  RuleSet raw;
  raw.label = target;
  raw.scaled = true;
  raw.n_v = n_v;
  raw.numerical = num;
  raw.categorical = cat;
  raw.cyclical = columns.cyclical;
  RuleSet raw_original = raw;
  raw_original.scaled = false;

  ExtractionStats stats;
  stats.target_rows = target_rows.size();
  stats.other_rows = other_rows.size();
  std::vector<bool> discarded_rows(d.rows(), false);

  // Groups by categorical state, in first-appearance order among target rows.
  std::vector<GroupInput> groups;
  if (cat.empty()) {
    groups.push_back({{}, target_rows, other_rows});
  } else {
    const Dataset target_data = original.select_rows(target_rows);
    for (auto& state : unique_categorical_states(target_data, cat)) {
      GroupInput g{state, {}, {}};
      for (auto r : target_rows)
        if (state_of_row(original, r, cat) == state) g.target_rows.push_back(r);
      for (auto r : other_rows)
        if (state_of_row(original, r, cat) == state) g.other_rows.push_back(r);
      groups.push_back(std::move(g));
    }
  }

  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const GroupInput& g = groups[gi];
    if (num.empty()) {
      Rule rule{g.state, {}, target, {gi, 0, g.target_rows.size()}};
      raw.rules.push_back(rule);
      raw_original.rules.push_back(std::move(rule));
      continue;
    }
    if (cfg.per_group_min_check && target == Label::non_anomalous && g.target_rows.size() < n_v)
      throw InsufficientDataError("insufficient data: categorical group {" + g.state.to_string() +
                                  "} has " + std::to_string(g.target_rows.size()) +
                                  " rows, fewer than " + std::to_string(n_v) + " vertices");

    const Matrix group_target = scaled_x.select_rows(g.target_rows);
    const Matrix group_other = g.other_rows.empty() ? Matrix(0, num.size())
                                                    : scaled_x.select_rows(g.other_rows);
    NumericExtraction ex = extract_numeric_rules(group_target, group_other, n_v, group_cfg);

    for (const auto& nb : ex.boxes) {
      std::vector<std::size_t> rows;
      for (auto r : nb.vertex_rows) rows.push_back(g.target_rows[r]);
      Provenance prov{gi, nb.cluster, nb.points};
      raw.rules.push_back({g.state, nb.box, target, prov});
      // Original-unit bounds come from the same defining rows, so they are
      // exact data values rather than round-tripped ones.
      raw_original.rules.push_back({g.state, box_over_rows(original_x, rows), target, prov});
    }
    for (std::size_t k = 0; k < ex.row_discarded.size(); ++k)
      if (ex.row_discarded[k]) discarded_rows[g.target_rows[k]] = true;
    for (auto dc : ex.discarded) {
      dc.group = gi;
      raw.discarded.push_back(dc);
      stats.discarded_rows += dc.points;
    }
  }
  raw_original.discarded = raw.discarded;

  auto keep = prune_mask(raw_original);
  ExtractionResult result;
  result.scaled = raw;
  result.rules = raw_original;
  result.scaled.rules.clear();
  result.rules.rules.clear();
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (!keep[i]) continue;
    result.scaled.rules.push_back(raw.rules[i]);
    result.rules.rules.push_back(raw_original.rules[i]);
  }

  for (auto r : target_rows) {
    auto state = cat.empty() ? CategoricalState{} : state_of_row(original, r, cat);
    if (result.rules.covers(state, original_x.row(r))) ++stats.covered_rows;
  }
  result.unpruned = std::move(raw_original);
  result.stats = stats;
  result.discarded_rows = std::move(discarded_rows);
  return result;
}

// ---- counterfactuals -----------------------------------------------------

namespace {

Counterfactual nearest(std::span<const double> x, const CategoricalState& state, const RuleSet& rs,
                       const ScalingParams* p) {
  Counterfactual best;
  bool found = false;
  for (std::size_t i = 0; i < rs.rules.size(); ++i) {
    const Rule& r = rs.rules[i];
    if (r.state != state) continue;
    if (r.bounds.size() != x.size()) throw DimensionError("point and rule dimensions differ");
    std::vector<double> deltas(x.size(), 0.0);
    double distance = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (x[j] < r.bounds[j].lo) deltas[j] = r.bounds[j].lo - x[j];
      else if (x[j] > r.bounds[j].hi) deltas[j] = r.bounds[j].hi - x[j];
      double step = std::abs(deltas[j]);
      if (p != nullptr) {
        const ColumnScale& s = p->at(rs.numerical.at(j));
        step = s.degenerate ? 0.0 : step / (s.max - s.min);
      }
      distance += step;
    }
    if (!found || distance < best.distance) {
      best = {std::vector<double>(x.begin(), x.end()), r, i, std::move(deltas), distance};
      found = true;
    }
  }
  if (!found)
    throw Error("no counterfactual within observed categorical states {" + state.to_string() + "}");
  return best;
}

}  // namespace

Counterfactual explain_point(std::span<const double> x, const CategoricalState& state,
                             const RuleSet& rs) {
  return nearest(x, state, rs, nullptr);
}

Counterfactual explain_point(std::span<const double> x, const CategoricalState& state,
                             const RuleSet& rs, const ScalingParams& p) {
  if (rs.scaled) return nearest(x, state, rs, nullptr);
  return nearest(x, state, rs, &p);
}

// ---- text ----------------------------------------------------------------

namespace {

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v == 0.0 ? 0.0 : v);
  return buf;
}

// Smallest arc of the period domain covering the box's corners.
std::string cyclical_condition(const CyclicalFeature& f, const Interval& s, const Interval& c) {
  if (s.lo <= 0.0 && 0.0 <= s.hi && c.lo <= 0.0 && 0.0 <= c.hi)
    return f.name + " ∈ [0, " + number(f.period) + ") (cyclical, approx.)";
  std::vector<double> angles;
  for (double sv : {s.lo, s.hi})
    for (double cv : {c.lo, c.hi}) angles.push_back(cyclical_decode(sv, cv, f.period));
  std::sort(angles.begin(), angles.end());
  std::size_t widest = angles.size() - 1;
  double gap = angles.front() + f.period - angles.back();
  for (std::size_t i = 0; i + 1 < angles.size(); ++i) {
    if (angles[i + 1] - angles[i] > gap) {
      gap = angles[i + 1] - angles[i];
      widest = i;
    }
  }
  const double start = angles[(widest + 1) % angles.size()];
  const double end = angles[widest];
  return f.name + " ∈ [" + number(start) + ", " + number(end) + "] (cyclical, approx.)";
}

}  // namespace

std::string render_rule(const Rule& r, const RuleSet& rs) {
  std::vector<std::string> terms;
  std::vector<bool> done(rs.numerical.size(), false);
  auto index_of = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = std::find(rs.numerical.begin(), rs.numerical.end(), name);
    if (it == rs.numerical.end()) return std::nullopt;
    return static_cast<std::size_t>(it - rs.numerical.begin());
  };
  for (std::size_t j = 0; j < rs.numerical.size() && j < r.bounds.size(); ++j) {
    if (done[j]) continue;
    const CyclicalFeature* cyc = nullptr;
    if (!rs.scaled)
      for (const auto& f : rs.cyclical)
        if (f.sin_column() == rs.numerical[j] || f.cos_column() == rs.numerical[j]) cyc = &f;
    if (cyc != nullptr) {
      auto si = index_of(cyc->sin_column());
      auto ci = index_of(cyc->cos_column());
      if (si && ci) {
        terms.push_back(cyclical_condition(*cyc, r.bounds[*si], r.bounds[*ci]));
        done[*si] = done[*ci] = true;
        continue;
      }
    }
    const auto& name = rs.numerical[j];
    terms.push_back(name + " ≥ " + number(r.bounds[j].lo));
    terms.push_back(name + " ≤ " + number(r.bounds[j].hi));
    done[j] = true;
  }
  for (const auto& [col, tok] : r.state.values) terms.push_back(col + " = " + tok);

  std::string out = r.label == Label::non_anomalous ? "NOT OUTLIER IF " : "OUTLIER IF ";
  if (terms.empty()) return out + "TRUE";
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (i > 0) out += " ∧ ";
    out += terms[i];
  }
  return out;
}

std::string render_rules(const RuleSet& rs) {
  std::string out;
  for (const auto& r : rs.rules) out += render_rule(r, rs) + "\n";
  return out;
}

}  // namespace hyperrule

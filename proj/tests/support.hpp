#pragma once

// Fixtures and independent oracles shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "hyperrule/dataset.hpp"
#include "hyperrule/matrix.hpp"
#include "hyperrule/ocsvm.hpp"
#include "hyperrule/rules.hpp"

namespace testsupport {

using hyperrule::Matrix;

inline double uniform01(std::mt19937_64& rng) { return static_cast<double>((rng() >> 11) + 1) * 0x1p-53; }

inline double normal(std::mt19937_64& rng) {
  const double u = uniform01(rng), v = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * std::numbers::pi * v);
}

inline Matrix gaussian_cloud(std::size_t n, std::size_t d, std::uint64_t seed, double sd = 1.0) {
  std::mt19937_64 rng(seed);
  Matrix m(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) m(i, j) = sd * normal(rng);
  return m;
}

inline Matrix uniform_points(std::size_t n, std::size_t d, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  Matrix m(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) m(i, j) = lo + (hi - lo) * uniform01(rng);
  return m;
}

// 5x5 grids around (0,0) and (10,10) with spacing 0.25, plus one point at (5,5).
inline Matrix two_blobs() {
  Matrix m(0, 2);
  for (double cx : {0.0, 10.0})
    for (int a = -2; a <= 2; ++a)
      for (int b = -2; b <= 2; ++b) m.append_row(std::vector<double>{cx + 0.25 * a, cx + 0.25 * b});
  m.append_row(std::vector<double>{5.0, 5.0});
  return m;
}

inline hyperrule::Dataset to_dataset(const Matrix& m, const std::vector<std::string>& names) {
  hyperrule::Dataset d;
  for (std::size_t j = 0; j < names.size(); ++j) {
    std::vector<double> col(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) col[i] = m(i, j);
    d.add_numerical(names[j], std::move(col));
  }
  return d;
}

// ---- dual QP oracle ------------------------------------------------------

// Gaussian elimination with partial pivoting; false when singular.
inline bool solve_linear(std::vector<std::vector<double>> a, std::vector<double> b, std::vector<double>& x) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[p][c])) p = r;
    if (std::abs(a[p][c]) < 1e-12) return false;
    std::swap(a[p], a[c]);
    std::swap(b[p], b[c]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  x.assign(n, 0.0);
  for (std::size_t r = n; r-- > 0;) {
    double s = b[r];
    for (std::size_t k = r + 1; k < n; ++k) s -= a[r][k] * x[k];
    x[r] = s / a[r][r];
  }
  return true;
}

struct QpSolution {
  std::vector<double> alpha;
  double objective = std::numeric_limits<double>::infinity();
};

inline double quadratic(const std::vector<std::vector<double>>& k, const std::vector<double>& a) {
  double f = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) f += a[i] * k[i][j] * a[j];
  return 0.5 * f;
}

// min 1/2 a'Ka  s.t. 0 <= a <= ub, sum a = 1, by enumerating every
// assignment of each coordinate to {lower bound, upper bound, free} and
// solving the equality-constrained stationarity system on the free set.
inline QpSolution brute_force_qp(const std::vector<std::vector<double>>& k, double ub) {
  const std::size_t n = k.size();
  std::size_t combos = 1;
  for (std::size_t i = 0; i < n; ++i) combos *= 3;
  QpSolution best;
  std::vector<int> state(n);
  for (std::size_t code = 0; code < combos; ++code) {
    std::size_t c = code;
    std::vector<std::size_t> free;
    std::vector<double> a(n, 0.0);
    double fixed_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      state[i] = static_cast<int>(c % 3);
      c /= 3;
      if (state[i] == 1) {
        a[i] = ub;
        fixed_sum += ub;
      } else if (state[i] == 2) {
        free.push_back(i);
      }
    }
    if (free.empty()) {
      if (std::abs(fixed_sum - 1.0) > 1e-12) continue;
    } else {
      const std::size_t m = free.size();
      std::vector<std::vector<double>> sys(m + 1, std::vector<double>(m + 1, 0.0));
      std::vector<double> rhs(m + 1, 0.0), sol;
      for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t s = 0; s < m; ++s) sys[r][s] = k[free[r]][free[s]];
        sys[r][m] = -1.0;
        for (std::size_t i = 0; i < n; ++i)
          if (state[i] == 1) rhs[r] -= k[free[r]][i] * ub;
        sys[m][r] = 1.0;
      }
      rhs[m] = 1.0 - fixed_sum;
      if (!solve_linear(sys, rhs, sol)) continue;
      bool feasible = true;
      for (std::size_t r = 0; r < m; ++r) {
        if (sol[r] < -1e-12 || sol[r] > ub + 1e-12) feasible = false;
        a[free[r]] = std::clamp(sol[r], 0.0, ub);
      }
      if (!feasible) continue;
    }
    const double f = quadratic(k, a);
    if (f < best.objective) best = {a, f};
  }
  return best;
}

inline std::vector<std::vector<double>> kernel_matrix(const Matrix& x, double gamma) {
  std::vector<std::vector<double>> k(x.rows(), std::vector<double>(x.rows()));
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.rows(); ++j) k[i][j] = std::exp(-gamma * hyperrule::squared_distance(x.row(i), x.row(j)));
  return k;
}

inline std::vector<double> full_alphas(const hyperrule::OcsvmModel& m) {
  std::vector<double> a(m.n_train, 0.0);
  for (std::size_t s = 0; s < m.support_indices.size(); ++s) a[m.support_indices[s]] = m.alphas[s];
  return a;
}

// Largest violation of the optimality conditions, with rho as the multiplier
// of the equality constraint: g_i >= 0 at the lower bound, g_i <= 0 at the
// upper bound, g_i = 0 in between, where g_i = (K a)_i - rho.
inline double kkt_residual(const std::vector<std::vector<double>>& k, const std::vector<double>& a, double ub,
                           double rho) {
  double worst = 0.0;
  const double eps = 1e-9 * ub;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double g = -rho;
    for (std::size_t j = 0; j < a.size(); ++j) g += k[i][j] * a[j];
    if (a[i] <= eps) worst = std::max(worst, -g);
    else if (a[i] >= ub - eps) worst = std::max(worst, g);
    else worst = std::max(worst, std::abs(g));
  }
  return worst;
}

// ---- k-means oracle ------------------------------------------------------

inline double assignment_inertia(const Matrix& x, const std::vector<std::size_t>& labels, std::size_t k) {
  Matrix c(k, x.cols());
  std::vector<std::size_t> count(k, 0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    ++count[labels[i]];
    for (std::size_t j = 0; j < x.cols(); ++j) c(labels[i], j) += x(i, j);
  }
  for (std::size_t q = 0; q < k; ++q)
    for (std::size_t j = 0; j < x.cols(); ++j) c(q, j) /= static_cast<double>(count[q]);
  double s = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) s += hyperrule::squared_distance(x.row(i), c.row(labels[i]));
  return s;
}

// Minimum 2-means inertia over every split into two non-empty parts.
inline double best_two_means(const Matrix& x) {
  const std::size_t n = x.rows();
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> labels(n);
  for (std::size_t mask = 1; mask + 1 < (std::size_t{1} << n); ++mask) {
    for (std::size_t i = 0; i < n; ++i) labels[i] = (mask >> i) & 1U;
    best = std::min(best, assignment_inertia(x, labels, 2));
  }
  return best;
}

// ---- rule properties -----------------------------------------------------

// Counts target rows covered / other rows wrongly covered, by direct box tests
// against every rule of the matching state.
struct CoverageCheck {
  std::size_t target_rows = 0;
  std::size_t target_uncovered = 0;
  std::size_t other_covered = 0;
};

inline CoverageCheck check_rules(const hyperrule::Dataset& d, std::span<const hyperrule::Label> predictions,
                                 const hyperrule::RuleSet& rs, const std::vector<bool>& excluded = {}) {
  CoverageCheck out;
  const Matrix x = d.numerical_matrix(rs.numerical);
  for (std::size_t i = 0; i < d.rows(); ++i) {
    const auto state = rs.categorical.empty() ? hyperrule::CategoricalState{}
                                              : hyperrule::state_of_row(d, i, rs.categorical);
    bool hit = false;
    for (const auto& r : rs.rules) {
      if (r.state != state) continue;
      bool inside = true;
      for (std::size_t j = 0; j < r.bounds.size(); ++j)
        if (!(r.bounds[j].lo <= x(i, j) && x(i, j) <= r.bounds[j].hi)) inside = false;
      if (inside) hit = true;
    }
    if (predictions[i] == rs.label) {
      if (!excluded.empty() && excluded[i]) continue;
      ++out.target_rows;
      if (!hit) ++out.target_uncovered;
    } else if (hit) {
      ++out.other_covered;
    }
  }
  return out;
}

}  // namespace testsupport

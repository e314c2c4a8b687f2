#include "hyperrule/ocsvm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace hyperrule {

double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma) {
  if (x.size() != y.size())
    throw DimensionError("rbf_kernel: dimension mismatch (" + std::to_string(x.size()) + " vs " +
                         std::to_string(y.size()) + ")");
  return std::exp(-gamma * squared_distance(x, y));
}

namespace {

constexpr std::size_t kDenseKernelLimit = 8000;
constexpr double kTau = 1e-12;

// Kernel rows, either precomputed or evaluated on demand.
class KernelMatrix {
 public:
  KernelMatrix(const Matrix& x, double gamma) : x_(x), gamma_(gamma), n_(x.rows()) {
    if (n_ <= kDenseKernelLimit) {
      dense_.resize(n_ * n_);
      for (std::size_t i = 0; i < n_; ++i) {
        dense_[i * n_ + i] = 1.0;
        for (std::size_t j = i + 1; j < n_; ++j) {
          const double k = rbf_kernel(x_.row(i), x_.row(j), gamma_);
          dense_[i * n_ + j] = k;
          dense_[j * n_ + i] = k;
        }
      }
    }
  }

  // Row i; `scratch` backs the result when rows are computed on demand.
  std::span<const double> row(std::size_t i, std::vector<double>& scratch) const {
    if (!dense_.empty()) return {dense_.data() + i * n_, n_};
    scratch.resize(n_);
    for (std::size_t j = 0; j < n_; ++j) scratch[j] = rbf_kernel(x_.row(i), x_.row(j), gamma_);
    return scratch;
  }

 private:
  const Matrix& x_;
  double gamma_;
  std::size_t n_;
  std::vector<double> dense_;
};

}  // namespace

// Sequential minimal optimisation with second-order working-set selection.
// Internally alpha is scaled by nu*n: bounds [0, 1], sum nu*n.
OcsvmModel fit(const Matrix& x, const OcsvmOptions& options) {
  const std::size_t n = x.rows();
  const double nu = options.nu;
  if (!(nu > 0.0 && nu <= 1.0)) throw ConfigError("nu must lie in (0, 1]");
  if (!(options.kernel.gamma > 0.0)) throw ConfigError("gamma must be positive");
  if (n < 2) throw ConfigError("one-class SVM needs at least 2 training rows");
  const double total = nu * static_cast<double>(n);
  if (total < 1.0) throw ConfigError("nu * n must be at least 1");

  const std::size_t max_iter = options.max_iter.value_or(100 * n);
  KernelMatrix kernel(x, options.kernel.gamma);

  std::vector<double> alpha(n, 0.0);
  {
    double remaining = total;
    for (std::size_t i = 0; i < n && remaining > 0.0; ++i) {
      alpha[i] = std::min(1.0, remaining);
      remaining -= alpha[i];
    }
  }

  std::vector<double> grad(n, 0.0);
  std::vector<double> scratch_i, scratch_j;
  for (std::size_t i = 0; i < n; ++i) {
    if (alpha[i] == 0.0) continue;
    auto qi = kernel.row(i, scratch_i);
    for (std::size_t t = 0; t < n; ++t) grad[t] += alpha[i] * qi[t];
  }

  std::size_t iter = 0;
  for (;; ++iter) {
    // i: maximal -grad among coordinates that may increase.
    std::size_t i = n;
    double gmax = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t)
      if (alpha[t] < 1.0 && -grad[t] > gmax) {
        gmax = -grad[t];
        i = t;
      }
    // j: among coordinates that may decrease, the best second-order gain.
    std::size_t j = n;
    double gmin = std::numeric_limits<double>::infinity();
    double best_gain = std::numeric_limits<double>::infinity();
    std::span<const double> qi;
    if (i < n) qi = kernel.row(i, scratch_i);
    for (std::size_t t = 0; t < n; ++t) {
      if (alpha[t] <= 0.0) continue;
      gmin = std::min(gmin, -grad[t]);
      if (i == n) continue;
      const double b = gmax + grad[t];
      if (b > 0.0) {
        double a = 2.0 - 2.0 * qi[t];
        if (a <= 0.0) a = kTau;
        const double gain = -(b * b) / a;
        if (gain < best_gain) {
          best_gain = gain;
          j = t;
        }
      }
    }
    if (i == n || j == n || gmax - gmin < options.tol) break;

    if (iter >= max_iter) {
      std::vector<double> best(alpha);
      for (double& a : best) a /= total;
      std::ostringstream msg;
      msg << "one-class SVM did not converge in " << max_iter << " iterations (KKT violation "
          << gmax - gmin << ")";
      throw OcsvmNonConvergence(msg.str(), std::move(best), (gmax - gmin) / total);
    }

    auto qj = kernel.row(j, scratch_j);
    // Move mass from j to i along the equality constraint.
    double quad = 2.0 - 2.0 * qi[j];
    if (quad <= 0.0) quad = kTau;
    double delta = (grad[j] - grad[i]) / quad;
    delta = std::min({delta, 1.0 - alpha[i], alpha[j]});
    delta = std::max(delta, 0.0);
    alpha[i] += delta;
    alpha[j] -= delta;
    if (alpha[i] > 1.0 - 1e-15) alpha[i] = 1.0;
    if (alpha[j] < 1e-15) alpha[j] = 0.0;
    for (std::size_t t = 0; t < n; ++t) grad[t] += delta * (qi[t] - qj[t]);
  }

  // rho from the free coordinates, else the midpoint of the feasible interval.
  double sum_free = 0.0;
  std::size_t n_free = 0;
  double lower = -std::numeric_limits<double>::infinity();  // max grad over alpha at upper bound
  double upper = std::numeric_limits<double>::infinity();   // min grad over alpha at zero
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] >= 1.0) {
      lower = std::max(lower, grad[t]);
    } else if (alpha[t] <= 0.0) {
      upper = std::min(upper, grad[t]);
    } else {
      sum_free += grad[t];
      ++n_free;
    }
  }
  double rho_scaled;
  if (n_free > 0) {
    rho_scaled = sum_free / static_cast<double>(n_free);
  } else if (std::isfinite(lower) && std::isfinite(upper)) {
    rho_scaled = 0.5 * (lower + upper);
  } else {
    rho_scaled = std::isfinite(lower) ? lower : upper;
  }

  OcsvmModel m;
  m.nu = nu;
  m.kernel = options.kernel;
  m.n_train = n;
  m.iterations = iter;
  m.rho = rho_scaled / total;
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] <= 0.0) continue;
    m.support_indices.push_back(t);
    m.alphas.push_back(alpha[t] / total);
    m.support_vectors.append_row(x.row(t));
  }
  return m;
}

double decision_function(const OcsvmModel& m, std::span<const double> x) {
  if (x.size() != m.dimension())
    throw DimensionError("decision_function: expected " + std::to_string(m.dimension()) +
                         " features, got " + std::to_string(x.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < m.alphas.size(); ++i)
    s += m.alphas[i] * rbf_kernel(m.support_vectors.row(i), x, m.kernel.gamma);
  return s - m.rho;
}

Label label_of(double decision_value) {
  return decision_value >= 0.0 ? Label::non_anomalous : Label::anomalous;
}

Label predict(const OcsvmModel& m, std::span<const double> x) {
  return label_of(decision_function(m, x));
}

std::vector<Label> predict_all(const OcsvmModel& m, const Matrix& x) {
  std::vector<Label> out(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) out[i] = predict(m, x.row(i));
  return out;
}

double dual_objective(const OcsvmModel& m) {
  double s = 0.0;
  const std::size_t k = m.alphas.size();
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      s += m.alphas[i] * m.alphas[j] *
           rbf_kernel(m.support_vectors.row(i), m.support_vectors.row(j), m.kernel.gamma);
  return 0.5 * s;
}

std::pair<Dataset, Dataset> split_by_prediction(const Dataset& d, std::span<const Label> predictions) {
  if (predictions.size() != d.rows()) throw DimensionError("one prediction per row required");
  std::vector<std::size_t> anomalous, normal;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    (predictions[i] == Label::anomalous ? anomalous : normal).push_back(i);
  return {d.select_rows(anomalous), d.select_rows(normal)};
}

std::pair<Dataset, Dataset> split_by_prediction(const Dataset& d, const Matrix& features,
                                                const OcsvmModel& m) {
  auto preds = predict_all(m, features);
  return split_by_prediction(d, preds);
}

}  // namespace hyperrule

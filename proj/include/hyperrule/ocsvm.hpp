#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hyperrule/dataset.hpp"
#include "hyperrule/errors.hpp"
#include "hyperrule/labels.hpp"
#include "hyperrule/matrix.hpp"

namespace hyperrule {

// RBF kernel parameters. Only the RBF kernel is supported.
struct KernelParams {
  double gamma = 0.1;
  friend bool operator==(const KernelParams&, const KernelParams&) = default;
};

double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma);

// Fitted nu-one-class SVM in dual form.
//
// The primal problem over (w, xi, rho) is never materialised. The dual is
//   min 1/2 a'Qa   s.t.  0 <= a_i <= 1/(nu n),  sum a_i = 1,
// with Q_ij = K(x_i, x_j), and the decision value is g(x) = sum a_i K(x_i, x) - rho.
// Only points with a_i > 0 are kept.
struct OcsvmModel {
  Matrix support_vectors;
  std::vector<double> alphas;
  std::vector<std::size_t> support_indices;  // rows of the training matrix
  double rho = 0.0;
  double nu = 0.1;
  KernelParams kernel;
  std::size_t n_train = 0;
  std::size_t iterations = 0;

  std::size_t dimension() const { return support_vectors.cols(); }
  double upper_bound() const { return 1.0 / (nu * static_cast<double>(n_train)); }
};

struct OcsvmOptions {
  double nu = 0.1;
  KernelParams kernel;
  // Stopping tolerance on the maximal KKT violation, measured on the
  // internally nu*n-scaled dual (so at most `tol` on decision values).
  double tol = 1e-3;
  std::optional<std::size_t> max_iter;  // default 100 * n
};

// Raised when the solver hits max_iter; carries the best iterate.
class OcsvmNonConvergence : public NonConvergenceError {
 public:
  OcsvmNonConvergence(const std::string& what, std::vector<double> alphas, double violation)
      : NonConvergenceError(what), alphas_(std::move(alphas)), violation_(violation) {}
  const std::vector<double>& alphas() const { return alphas_; }
  double violation() const { return violation_; }

 private:
  std::vector<double> alphas_;
  double violation_;
};

OcsvmModel fit(const Matrix& x, const OcsvmOptions& options);

double decision_function(const OcsvmModel& m, std::span<const double> x);
// Boundary points (g = 0) are non-anomalous.
Label label_of(double decision_value);
Label predict(const OcsvmModel& m, std::span<const double> x);
std::vector<Label> predict_all(const OcsvmModel& m, const Matrix& x);

// 1/2 a'Qa over the support vectors.
double dual_objective(const OcsvmModel& m);

// (anomalous rows, non-anomalous rows); row order preserved in each.
std::pair<Dataset, Dataset> split_by_prediction(const Dataset& d, std::span<const Label> predictions);
std::pair<Dataset, Dataset> split_by_prediction(const Dataset& d, const Matrix& features,
                                                const OcsvmModel& m);

}  // namespace hyperrule

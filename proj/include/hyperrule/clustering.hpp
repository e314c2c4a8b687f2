#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hyperrule/matrix.hpp"

namespace hyperrule {

struct KMeansOptions {
  std::size_t max_iter = 100;
  std::size_t n_init = 10;
  std::uint64_t seed = 0;
};

struct Clustering {
  std::size_t k = 0;
  std::vector<std::size_t> labels;  // per row, in [0, k)
  Matrix centroids;                 // k x d
  double inertia = 0.0;
  std::uint64_t seed = 0;           // seed of the restart that was kept
  std::size_t iterations = 0;
  // Inertia after every Lloyd update of the kept restart.
  std::vector<double> inertia_trace;
};

// Best of `n_init` k-means++ restarts (restart r seeded with seed + r),
// ranked by inertia, ties to the lowest restart index.
Clustering kmeans_pp(const Matrix& x, std::size_t k, const KMeansOptions& options = {});

std::vector<std::size_t> cluster_members(const Clustering& c, std::size_t idx);
Matrix points_in_cluster(const Clustering& c, const Matrix& x, std::size_t idx);

}  // namespace hyperrule

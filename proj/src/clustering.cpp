#include "hyperrule/clustering.hpp"

#include <algorithm>
#include <limits>
#include <random>

#include "hyperrule/errors.hpp"

namespace hyperrule {

namespace {

// Uniform double in [0, 1) from the top 53 bits; portable across standard
// libraries, unlike std::uniform_real_distribution.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  auto i = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
  return i < n ? i : n - 1;
}

Matrix seed_centroids(const Matrix& x, std::size_t k, std::mt19937_64& rng) {
  const std::size_t n = x.rows();
  Matrix centroids(k, x.cols());
  auto place = [&](std::size_t c, std::size_t row) {
    auto src = x.row(row);
    std::copy(src.begin(), src.end(), centroids.row(c).begin());
  };
  place(0, uniform_index(rng, n));

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(x.row(i), centroids.row(0));

  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t chosen = n - 1;
    if (total <= 0.0) {
      chosen = uniform_index(rng, n);
    } else {
      const double target = uniform01(rng) * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > target && d2[i] > 0.0) {
          chosen = i;
          break;
        }
      }
      // Rounding can leave the target beyond the last positive weight.
      while (d2[chosen] <= 0.0 && chosen > 0) --chosen;
    }
    place(c, chosen);
    for (std::size_t i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], squared_distance(x.row(i), centroids.row(c)));
  }
  return centroids;
}

// Nearest centroid per row, ties to the lowest index. Returns the inertia.
double assign(const Matrix& x, const Matrix& centroids, std::vector<std::size_t>& labels,
              std::vector<double>& dist) {
  double inertia = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t arg = 0;
    for (std::size_t c = 0; c < centroids.rows(); ++c) {
      const double d = squared_distance(x.row(i), centroids.row(c));
      if (d < best) {
        best = d;
        arg = c;
      }
    }
    labels[i] = arg;
    dist[i] = best;
    inertia += best;
  }
  return inertia;
}

void update_centroids(const Matrix& x, const std::vector<std::size_t>& labels, Matrix& centroids) {
  const std::size_t k = centroids.rows(), d = x.cols();
  Matrix sums(k, d);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto row = x.row(i);
    auto acc = sums.row(labels[i]);
    for (std::size_t j = 0; j < d; ++j) acc[j] += row[j];
    ++counts[labels[i]];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) continue;
    for (std::size_t j = 0; j < d; ++j) centroids(c, j) = sums(c, j) / static_cast<double>(counts[c]);
  }

  // Empty clusters respawn at the point farthest from its own centroid.
  std::vector<bool> taken(x.rows(), false);
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] != 0) continue;
    double far = -1.0;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      if (taken[i]) continue;
      const double dist = squared_distance(x.row(i), centroids.row(labels[i]));
      if (dist > far) {
        far = dist;
        arg = i;
      }
    }
    taken[arg] = true;
    auto src = x.row(arg);
    std::copy(src.begin(), src.end(), centroids.row(c).begin());
  }
}

Clustering single_run(const Matrix& x, std::size_t k, std::size_t max_iter, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Clustering out;
  out.k = k;
  out.seed = seed;
  out.centroids = seed_centroids(x, k, rng);
  out.labels.assign(x.rows(), 0);
  std::vector<double> dist(x.rows());
  out.inertia = assign(x, out.centroids, out.labels, dist);
  out.inertia_trace.push_back(out.inertia);

  std::vector<std::size_t> previous;
  for (std::size_t it = 0; it < max_iter; ++it) {
    previous = out.labels;
    update_centroids(x, out.labels, out.centroids);
    out.inertia = assign(x, out.centroids, out.labels, dist);
    out.inertia_trace.push_back(out.inertia);
    out.iterations = it + 1;
    if (out.labels == previous) break;
  }
  return out;
}

}  // namespace

Clustering kmeans_pp(const Matrix& x, std::size_t k, const KMeansOptions& options) {
  if (x.rows() == 0) throw ConfigError("k-means needs at least one row");
  if (k == 0) throw ConfigError("k-means needs k >= 1");
  if (k > x.rows())
    throw ConfigError("k-means: k = " + std::to_string(k) + " exceeds " + std::to_string(x.rows()) +
                      " rows");
  const std::size_t restarts = std::max<std::size_t>(options.n_init, 1);

  Clustering best;
  bool have_best = false;
  for (std::size_t r = 0; r < restarts; ++r) {
    Clustering run = single_run(x, k, options.max_iter, options.seed + r);
    if (!have_best || run.inertia < best.inertia) {
      best = std::move(run);
      have_best = true;
    }
  }
  return best;
}

std::vector<std::size_t> cluster_members(const Clustering& c, std::size_t idx) {
  if (idx >= c.k)
    throw ConfigError("cluster index " + std::to_string(idx) + " out of range (k = " +
                      std::to_string(c.k) + ")");
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < c.labels.size(); ++i)
    if (c.labels[i] == idx) rows.push_back(i);
  return rows;
}

Matrix points_in_cluster(const Clustering& c, const Matrix& x, std::size_t idx) {
  auto rows = cluster_members(c, idx);
  return x.select_rows(rows);
}

}  // namespace hyperrule

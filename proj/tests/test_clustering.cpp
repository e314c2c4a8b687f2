#include "doctest.h"

#include "hyperrule/clustering.hpp"
#include "hyperrule/errors.hpp"
#include "support.hpp"

using namespace hyperrule;

namespace {

void check_lloyd_fixpoint(const Matrix& x, const Clustering& c) {
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const double own = squared_distance(x.row(i), c.centroids.row(c.labels[i]));
    for (std::size_t q = 0; q < c.k; ++q) CHECK(own <= squared_distance(x.row(i), c.centroids.row(q)));
  }
  for (std::size_t q = 0; q < c.k; ++q) {
    const auto members = cluster_members(c, q);
    REQUIRE_FALSE(members.empty());
    for (std::size_t j = 0; j < x.cols(); ++j) {
      double s = 0.0;
      for (auto r : members) s += x(r, j);
      CHECK(c.centroids(q, j) == doctest::Approx(s / members.size()).epsilon(1e-12));
    }
  }
}

}  // namespace

TEST_CASE("2-means never beats the exhaustive optimum and usually attains it") {
  int attained = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto x = testsupport::uniform_points(6, 2, seed);
    const auto c = kmeans_pp(x, 2, {100, 10, 0});
    const double best = testsupport::best_two_means(x);
    CHECK(c.inertia >= best - 1e-12);
    CHECK(c.inertia == doctest::Approx(testsupport::assignment_inertia(x, c.labels, 2)).epsilon(1e-12));
    check_lloyd_fixpoint(x, c);
    if (c.inertia <= best + 1e-12) ++attained;
  }
  CHECK(attained >= 27);
}

TEST_CASE("separated groups are recovered exactly") {
  const auto x = testsupport::two_blobs();
  const auto c = kmeans_pp(x.select_rows(std::vector<std::size_t>{0, 1, 2, 25, 26, 27}), 2);
  CHECK(c.labels[0] == c.labels[1]);
  CHECK(c.labels[1] == c.labels[2]);
  CHECK(c.labels[3] == c.labels[4]);
  CHECK(c.labels[0] != c.labels[3]);
}

TEST_CASE("inertia is non-increasing across Lloyd iterations") {
  const auto x = testsupport::gaussian_cloud(400, 3, 12);
  for (std::size_t k : {2u, 5u, 17u}) {
    const auto c = kmeans_pp(x, k, {100, 3, 7});
    REQUIRE_FALSE(c.inertia_trace.empty());
    for (std::size_t t = 1; t < c.inertia_trace.size(); ++t)
      CHECK(c.inertia_trace[t] <= c.inertia_trace[t - 1] * (1 + 1e-12));
    check_lloyd_fixpoint(x, c);
  }
}

TEST_CASE("labels cover every cluster and are deterministic") {
  const auto x = testsupport::gaussian_cloud(120, 2, 6);
  const auto a = kmeans_pp(x, 9, {100, 10, 0});
  const auto b = kmeans_pp(x, 9, {100, 10, 0});
  CHECK(a.labels == b.labels);
  CHECK(a.centroids == b.centroids);
  std::size_t total = 0;
  for (std::size_t q = 0; q < a.k; ++q) total += cluster_members(a, q).size();
  CHECK(total == x.rows());
  CHECK(points_in_cluster(a, x, 0).rows() == cluster_members(a, 0).size());
}

TEST_CASE("k equal to the number of distinct points gives zero inertia") {
  const auto x = testsupport::uniform_points(8, 2, 3);
  const auto c = kmeans_pp(x, 8);
  CHECK(c.inertia == 0.0);
}

TEST_CASE("more clusters than distinct points leaves some empty") {
  const Matrix x = Matrix::from_rows({{0, 0}, {0, 0}, {0, 0}, {1, 1}});
  const auto c = kmeans_pp(x, 3);
  CHECK(c.inertia == 0.0);
  CHECK(c.labels[0] == c.labels[1]);
  CHECK(c.labels[0] == c.labels[2]);
  CHECK(c.labels[0] != c.labels[3]);
  std::size_t total = 0;
  for (std::size_t q = 0; q < 3; ++q) total += cluster_members(c, q).size();
  CHECK(total == 4);
}

TEST_CASE("invalid k") {
  const auto x = testsupport::uniform_points(4, 2, 1);
  CHECK_THROWS_AS(kmeans_pp(x, 0), ConfigError);
  CHECK_THROWS_AS(kmeans_pp(x, 5), ConfigError);
  const auto c = kmeans_pp(x, 2);
  CHECK_THROWS_AS(points_in_cluster(c, x, 2), ConfigError);
}

#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "groupscale/clustering.hpp"
#include "groupscale/rng.hpp"

using namespace groupscale;

namespace {

Matrix random_points(Rng& rng, int n, int d) {
  Matrix x(n, d);
  for (double& v : x.data()) v = rng.normal();
  return x;
}

// per-point squared distances summed point by point, the order every
// k-means pass uses, so the comparison can stay exact
double reference_sse(const Matrix& x, const Centroids& c) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double point = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) {
      double diff = x(i, j) - c.points(c.assignment[i], j);
      point += diff * diff;
    }
    s += point;
  }
  return s;
}

}  // namespace

TEST_CASE("one cluster lands on the mean") {
  Matrix x = Matrix::from_rows({{0.0, 0.0}, {2.0, 0.0}, {0.0, 2.0}, {2.0, 2.0}});
  Centroids c = kmeans_fit(x, 1, 42);
  CHECK(c.k() == 1);
  CHECK(c.points(0, 0) == 1.0);
  CHECK(c.points(0, 1) == 1.0);
  CHECK(c.inertia == 8.0);
  CHECK(c.assignment == std::vector<int>(4, 0));
}

TEST_CASE("duplicated locations are fit exactly") {
  Matrix x(9, 2);
  for (int i = 0; i < 9; ++i) {
    x(i, 0) = static_cast<double>(i % 3) * 10.0;
    x(i, 1) = static_cast<double>(i % 3) * -5.0;
  }
  Centroids c = kmeans_fit(x, 3, 7);
  CHECK(c.inertia == 0.0);
  for (int i = 0; i < 9; ++i) CHECK(c.assignment[i] == c.assignment[i % 3]);
  CHECK(c.assignment[0] != c.assignment[1]);
  CHECK(c.assignment[1] != c.assignment[2]);
}

TEST_CASE("as many clusters as distinct points gives zero inertia") {
  Rng rng(81);
  Matrix x = random_points(rng, 12, 3);
  Centroids c = kmeans_fit(x, 12, 3);
  CHECK(c.inertia == 0.0);
  std::vector<char> used(12, 0);
  for (int a : c.assignment) used[a] = 1;
  for (char u : used) CHECK(u == 1);
}

TEST_CASE("inertia never increases across iterations") {
  Rng rng(82);
  for (int it = 0; it < 10; ++it) {
    Matrix x = random_points(rng, 60, 4);
    Centroids c = kmeans_fit(x, 5, it);
    REQUIRE(!c.inertia_history.empty());
    for (std::size_t e = 1; e < c.inertia_history.size(); ++e)
      CHECK(c.inertia_history[e] <= c.inertia_history[e - 1]);
    CHECK(c.inertia == c.inertia_history.back());
    CHECK(c.iterations + 1 == static_cast<int>(c.inertia_history.size()));
    CHECK(c.iterations <= KMeansOptions{}.max_iters);
  }
}

TEST_CASE("the stored assignment is the nearest-centroid assignment") {
  Rng rng(83);
  for (int it = 0; it < 10; ++it) {
    Matrix x = random_points(rng, 50, 3);
    Centroids c = kmeans_fit(x, 4, it * 13 + 1);
    CHECK(c.assignment == kmeans_assign(x, c));
    CHECK(c.inertia == reference_sse(x, c));
  }
}

TEST_CASE("fits are deterministic in the seed") {
  Rng rng(84);
  Matrix x = random_points(rng, 40, 2);
  Centroids a = kmeans_fit(x, 3, 99);
  Centroids b = kmeans_fit(x, 3, 99);
  CHECK(a.points == b.points);
  CHECK(a.assignment == b.assignment);
  CHECK(a.inertia == b.inertia);
  CHECK(a.inertia_history == b.inertia_history);
}

TEST_CASE("standardization rescales the clustering space") {
  // dimension 0 dwarfs dimension 1 unless the features are standardized
  Matrix x(8, 2);
  for (int i = 0; i < 8; ++i) {
    x(i, 0) = (i % 2 == 0 ? 1.0 : -1.0) * 1000.0 + 0.001 * i;
    x(i, 1) = i < 4 ? 4.0 : -4.0;
  }
  KMeansOptions opt;
  opt.standardize = true;
  Centroids c = kmeans_fit(x, 2, 21, opt);
  REQUIRE(c.shift.size() == 2);
  REQUIRE(c.scale.size() == 2);
  CHECK(c.scale[0] > 100.0);
  // raw-space queries must be standardized with the stored shift and scale
  std::vector<int> asg = kmeans_assign(x, c);
  CHECK(asg == c.assignment);
  Centroids raw = kmeans_fit(x, 2, 21);
  CHECK(raw.shift.empty());
  // without standardization the huge dimension dictates the split
  CHECK(raw.assignment[0] != raw.assignment[1]);
}

TEST_CASE("clustering validates its inputs") {
  Matrix x(3, 2, 0.0);
  CHECK_THROWS_AS(kmeans_fit(x, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(kmeans_fit(x, 4, 1), std::invalid_argument);
  Matrix bad(2, 2, 0.0);
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(kmeans_fit(bad, 1, 1), std::invalid_argument);
  Centroids c = kmeans_fit(x, 1, 1);
  CHECK_THROWS_AS(kmeans_assign(Matrix(2, 3, 0.0), c), std::invalid_argument);
}

TEST_CASE("well separated blobs are recovered") {
  Rng rng(85);
  Matrix x(30, 2);
  for (int i = 0; i < 30; ++i) {
    double cx = (i % 3 == 0) ? 0.0 : (i % 3 == 1 ? 50.0 : -50.0);
    x(i, 0) = cx + 0.1 * rng.normal();
    x(i, 1) = 0.1 * rng.normal();
  }
  Centroids c = kmeans_fit(x, 3, 5);
  for (int i = 0; i < 30; ++i) CHECK(c.assignment[i] == c.assignment[i % 3]);
}

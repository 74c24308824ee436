#include "groupscale/clustering.hpp"

#include <cmath>
#include <stdexcept>

#include "groupscale/rng.hpp"

namespace groupscale {

namespace {

double dist2(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    double diff = a[j] - b[j];
    s += diff * diff;
  }
  return s;
}

std::vector<int> nearest(const Matrix& x, const Matrix& centroids) {
  std::vector<int> asg(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    int best = 0;
    double best_d = dist2(x.row(i), centroids.row(0), x.cols());
    for (std::size_t k = 1; k < centroids.rows(); ++k) {
      double d = dist2(x.row(i), centroids.row(k), x.cols());
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(k);
      }
    }
    asg[i] = best;
  }
  return asg;
}

double sse(const Matrix& x, const Matrix& centroids, const std::vector<int>& asg) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i)
    s += dist2(x.row(i), centroids.row(asg[i]), x.cols());
  return s;
}

// Assignment that never leaves a cluster empty (when avoidable): empty
// clusters seize the point farthest from its current centroid, then the
// nearest-centroid pass is rerun so the returned assignment always matches
// a pure nearest() against the returned centroids.
std::vector<int> assign_with_repair(const Matrix& x, Matrix& centroids) {
  const int K = static_cast<int>(centroids.rows());
  for (int attempt = 0; attempt <= K; ++attempt) {
    std::vector<int> asg = nearest(x, centroids);
    std::vector<int> sizes(K, 0);
    for (int a : asg) sizes[a]++;
    std::vector<int> empties;
    for (int k = 0; k < K; ++k)
      if (sizes[k] == 0) empties.push_back(k);
    if (empties.empty() || attempt == K) return asg;
    for (int k : empties) {
      int far = -1;
      double far_d = -1.0;
      for (std::size_t i = 0; i < x.rows(); ++i) {
        if (sizes[asg[i]] < 2) continue;  // do not empty another cluster
        double d = dist2(x.row(i), centroids.row(asg[i]), x.cols());
        if (d > far_d) {
          far_d = d;
          far = static_cast<int>(i);
        }
      }
      if (far < 0) break;
      sizes[asg[far]]--;
      asg[far] = k;
      sizes[k] = 1;
      for (std::size_t j = 0; j < x.cols(); ++j) centroids(k, j) = x(far, j);
    }
  }
  return nearest(x, centroids);
}

}  // namespace

Centroids kmeans_fit(const Matrix& features, int K, std::uint64_t seed,
                     const KMeansOptions& options) {
  const std::size_t n = features.rows();
  const std::size_t d = features.cols();
  if (K < 1) throw std::invalid_argument("K must be >= 1");
  if (static_cast<std::size_t>(K) > n)
    throw std::invalid_argument("K exceeds the number of samples");
  for (double v : features.data())
    if (!std::isfinite(v)) throw std::invalid_argument("features must be finite");

  Centroids out;
  Matrix x = features;
  if (options.standardize) {
    out.shift.assign(d, 0.0);
    out.scale.assign(d, 1.0);
    for (std::size_t j = 0; j < d; ++j) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += x(i, j);
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double t = x(i, j) - mean;
        var += t * t;
      }
      double sd = std::sqrt(var / static_cast<double>(n));
      out.shift[j] = mean;
      out.scale[j] = sd > 0.0 ? sd : 1.0;
      for (std::size_t i = 0; i < n; ++i) x(i, j) = (x(i, j) - out.shift[j]) / out.scale[j];
    }
  }

  // k-means++ seeding
  Rng rng(seed);
  Matrix centroids(K, d);
  std::size_t first = static_cast<std::size_t>(rng.integer(n));
  for (std::size_t j = 0; j < d; ++j) centroids(0, j) = x(first, j);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = dist2(x.row(i), centroids.row(0), d);
  for (int k = 1; k < K; ++k) {
    double sum = 0.0;
    for (double v : d2) sum += v;
    std::size_t pick;
    if (sum > 0.0) {
      double r = rng.uniform() * sum;
      double acc = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > r) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<std::size_t>(rng.integer(n));
    }
    for (std::size_t j = 0; j < d; ++j) centroids(k, j) = x(pick, j);
    for (std::size_t i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], dist2(x.row(i), centroids.row(k), d));
  }

  std::vector<int> asg = assign_with_repair(x, centroids);
  double inertia = sse(x, centroids, asg);
  out.inertia_history.push_back(inertia);

  for (int it = 0; it < options.max_iters; ++it) {
    Matrix next = centroids;
    std::vector<int> sizes(K, 0);
    for (int a : asg) sizes[a]++;
    for (int k = 0; k < K; ++k) {
      if (sizes[k] == 0) continue;  // keeps its previous position
      for (std::size_t j = 0; j < d; ++j) next(k, j) = 0.0;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = x.row(i);
      for (std::size_t j = 0; j < d; ++j) next(asg[i], j) += row[j];
    }
    for (int k = 0; k < K; ++k) {
      if (sizes[k] == 0) continue;
      for (std::size_t j = 0; j < d; ++j) next(k, j) /= static_cast<double>(sizes[k]);
    }
    std::vector<int> next_asg = assign_with_repair(x, next);
    double next_inertia = sse(x, next, next_asg);
    if (next_inertia > inertia) break;  // floating-point guard; keep previous state
    bool moved = next_asg != asg;
    bool converged = !moved || (inertia - next_inertia) <= options.tol * inertia;
    centroids = std::move(next);
    asg = std::move(next_asg);
    inertia = next_inertia;
    out.inertia_history.push_back(inertia);
    out.iterations = it + 1;
    if (converged) break;
  }

  out.points = std::move(centroids);
  out.assignment = std::move(asg);
  out.inertia = inertia;
  return out;
}

std::vector<int> kmeans_assign(const Matrix& features, const Centroids& centroids) {
  if (features.cols() != centroids.points.cols())
    throw std::invalid_argument("feature dimension does not match centroids");
  if (centroids.shift.empty()) return nearest(features, centroids.points);
  Matrix x = features;
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j)
      x(i, j) = (x(i, j) - centroids.shift[j]) / centroids.scale[j];
  return nearest(x, centroids.points);
}

}  // namespace groupscale

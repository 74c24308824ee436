#pragma once

#include <cstdint>
#include <vector>

#include "groupscale/matrix.hpp"

namespace groupscale {

struct KMeansOptions {
  int max_iters = 100;
  double tol = 1e-6;         // relative inertia change
  bool standardize = false;  // per-dimension z-scoring before clustering
};

struct Centroids {
  Matrix points;  // K x d, in the (possibly standardized) clustering space
  double inertia = 0.0;
  std::vector<int> assignment;          // final assignment of the training rows
  std::vector<double> inertia_history;  // one entry per accepted Lloyd iteration
  int iterations = 0;
  std::vector<double> shift, scale;  // empty when standardize was off

  std::size_t k() const { return points.rows(); }
};

Centroids kmeans_fit(const Matrix& features, int K, std::uint64_t seed,
                     const KMeansOptions& options = {});

std::vector<int> kmeans_assign(const Matrix& features, const Centroids& centroids);

}  // namespace groupscale

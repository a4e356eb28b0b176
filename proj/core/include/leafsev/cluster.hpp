#pragma once

#include <cstdint>
#include <vector>

namespace leafsev {

struct ClusterModel {
  int k = 0;
  int dim = 0;
  std::vector<std::vector<double>> centroids;  // k x dim
  std::vector<int> assignments;                // one per input point, nearest centroid
  double inertia = 0.0;                        // sum of squared distances to assigned centroid
  int iterations_run = 0;
  std::vector<double> inertia_trace;           // per-iteration inertia of the winning run
};

struct KMeansOptions {
  int max_iter = 300;
  int restarts = 10;
  std::uint64_t seed = 0;
  // When set, ignore restarts and run Lloyd once from every k-subset of the
  // distinct input points. Only sensible at desk scale.
  bool exhaustive_init = false;
};

// Lloyd's algorithm, uniform random init over distinct points, ties broken
// toward the lowest centroid index, empty clusters reseeded with the point
// farthest from its assigned centroid. Deterministic for fixed inputs.
ClusterModel kmeans(const std::vector<std::vector<double>>& points, int k,
                    const KMeansOptions& opts = {});

// Same algorithm with integer point multiplicities: equivalent to repeating
// points[i] weights[i] times, except that init draws over distinct points.
ClusterModel kmeans_weighted(const std::vector<std::vector<double>>& points,
                             const std::vector<std::int64_t>& weights, int k,
                             const KMeansOptions& opts = {});

int predict(const ClusterModel& model, const std::vector<double>& point);

double squared_distance(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace leafsev

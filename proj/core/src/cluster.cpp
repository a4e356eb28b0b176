#include "leafsev/cluster.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>

namespace leafsev {

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("squared_distance: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

namespace {

using Point = std::vector<double>;

int nearest_centroid(const Point& p, const std::vector<Point>& centroids) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int c = 0; c < static_cast<int>(centroids.size()); ++c) {
    const double d = squared_distance(p, centroids[c]);
    if (d < best_d) {  // strict: ties stay with the lowest index
      best_d = d;
      best = c;
    }
  }
  return best;
}

struct LloydOutcome {
  std::vector<Point> centroids;
  std::vector<int> assignment;
  double inertia = std::numeric_limits<double>::infinity();
  int iterations = 0;
  std::vector<double> trace;
};

LloydOutcome lloyd(const std::vector<Point>& pts, const std::vector<std::int64_t>& w,
                   std::vector<Point> centroids, int max_iter) {
  const std::size_t n = pts.size();
  const int k = static_cast<int>(centroids.size());
  LloydOutcome out;
  out.assignment.assign(n, -1);
  std::vector<int> prev(n, -2);

  for (int it = 0; it < max_iter; ++it) {
    ++out.iterations;

    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const int a = nearest_centroid(pts[i], centroids);
      out.assignment[i] = a;
      inertia += static_cast<double>(w[i]) * squared_distance(pts[i], centroids[a]);
    }
    out.trace.push_back(inertia);

    std::vector<std::int64_t> members(k, 0);
    for (std::size_t i = 0; i < n; ++i) members[out.assignment[i]] += w[i];

    // Reseed each empty cluster with the farthest point from its assigned
    // centroid (distance ties toward the lower point index). Skipped when the
    // candidate equals the present centroid, which would change nothing.
    bool reseeded = false;
    std::vector<bool> taken(n, false);
    for (int c = 0; c < k; ++c) {
      if (members[c] > 0) continue;
      int far = -1;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (taken[i]) continue;
        const double d = squared_distance(pts[i], centroids[out.assignment[i]]);
        if (d > far_d) {
          far_d = d;
          far = static_cast<int>(i);
        }
      }
      if (far < 0 || pts[far] == centroids[c]) continue;
      taken[far] = true;
      centroids[c] = pts[far];
      reseeded = true;
    }

    const bool stable = (out.assignment == prev);
    prev = out.assignment;
    if (stable && !reseeded) break;

    const std::size_t dim = pts[0].size();
    for (int c = 0; c < k; ++c) {
      if (members[c] == 0) continue;  // keeps a reseeded (or stranded) centroid
      Point mean(dim, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        if (out.assignment[i] != c) continue;
        for (std::size_t dci = 0; dci < dim; ++dci) mean[dci] += static_cast<double>(w[i]) * pts[i][dci];
      }
      for (std::size_t dci = 0; dci < dim; ++dci) mean[dci] /= static_cast<double>(members[c]);
      centroids[c] = std::move(mean);
    }
  }

  // Final sync against the final centroids so assignments index the nearest
  // one and the reported inertia is the recomputed sum.
  double inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out.assignment[i] = nearest_centroid(pts[i], centroids);
    inertia += static_cast<double>(w[i]) * squared_distance(pts[i], centroids[out.assignment[i]]);
  }
  out.inertia = inertia;
  out.centroids = std::move(centroids);
  return out;
}

std::vector<std::size_t> distinct_indices(const std::vector<Point>& pts) {
  std::map<Point, std::size_t> seen;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (seen.emplace(pts[i], i).second) out.push_back(i);
  }
  return out;
}

ClusterModel run_kmeans(const std::vector<Point>& pts, const std::vector<std::int64_t>& w, int k,
                        const KMeansOptions& opts) {
  if (pts.empty()) throw std::invalid_argument("kmeans: no points");
  if (k < 1 || static_cast<std::size_t>(k) > pts.size()) {
    throw std::invalid_argument("kmeans: k must be in [1, point count]");
  }
  if (opts.max_iter < 1 || opts.restarts < 1) {
    throw std::invalid_argument("kmeans: max_iter and restarts must be positive");
  }
  const std::size_t dim = pts[0].size();
  if (dim == 0) throw std::invalid_argument("kmeans: zero-dimensional points");
  for (const auto& p : pts) {
    if (p.size() != dim) throw std::invalid_argument("kmeans: mixed point dimensions");
  }
  if (w.size() != pts.size()) throw std::invalid_argument("kmeans: weight count mismatch");
  for (const auto wi : w) {
    if (wi < 1) throw std::invalid_argument("kmeans: weights must be >= 1");
  }

  const std::vector<std::size_t> distinct = distinct_indices(pts);

  std::vector<std::vector<Point>> inits;
  if (opts.exhaustive_init && distinct.size() >= static_cast<std::size_t>(k)) {
    // Every k-subset of the distinct points, in lexicographic order.
    std::vector<std::size_t> combo(k);
    for (int i = 0; i < k; ++i) combo[i] = i;
    while (true) {
      std::vector<Point> init(k);
      for (int i = 0; i < k; ++i) init[i] = pts[distinct[combo[i]]];
      inits.push_back(std::move(init));
      int pos = k - 1;
      while (pos >= 0 && combo[pos] == distinct.size() - static_cast<std::size_t>(k - pos)) --pos;
      if (pos < 0) break;
      ++combo[pos];
      for (int i = pos + 1; i < k; ++i) combo[i] = combo[i - 1] + 1;
    }
  } else {
    std::mt19937_64 rng(opts.seed);
    std::vector<std::size_t> pool(distinct);
    for (int r = 0; r < opts.restarts; ++r) {
      std::vector<Point> init;
      init.reserve(k);
      const std::size_t take = std::min<std::size_t>(k, pool.size());
      for (std::size_t i = 0; i < take; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
        init.push_back(pts[pool[i]]);
      }
      while (init.size() < static_cast<std::size_t>(k)) init.push_back(init[init.size() % take]);
      inits.push_back(std::move(init));
    }
  }

  LloydOutcome best;
  for (auto& init : inits) {
    LloydOutcome run = lloyd(pts, w, std::move(init), opts.max_iter);
    if (run.inertia < best.inertia) best = std::move(run);
  }

  ClusterModel model;
  model.k = k;
  model.dim = static_cast<int>(dim);
  model.centroids = std::move(best.centroids);
  model.assignments = std::move(best.assignment);
  model.inertia = best.inertia;
  model.iterations_run = best.iterations;
  model.inertia_trace = std::move(best.trace);
  return model;
}

}  // namespace

ClusterModel kmeans(const std::vector<std::vector<double>>& points, int k,
                    const KMeansOptions& opts) {
  return run_kmeans(points, std::vector<std::int64_t>(points.size(), 1), k, opts);
}

ClusterModel kmeans_weighted(const std::vector<std::vector<double>>& points,
                             const std::vector<std::int64_t>& weights, int k,
                             const KMeansOptions& opts) {
  return run_kmeans(points, weights, k, opts);
}

int predict(const ClusterModel& model, const std::vector<double>& point) {
  if (model.centroids.empty()) throw std::invalid_argument("predict: empty model");
  if (static_cast<int>(point.size()) != model.dim) {
    throw std::invalid_argument("predict: dimension mismatch");
  }
  return nearest_centroid(point, model.centroids);
}

}  // namespace leafsev

#pragma once

// Uniform-grid spatial hash over ambient points; enough for the few-dimensional clouds of
// fiber and stratum samples.

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

namespace csmorse {

class GridIndex {
 public:
  GridIndex(int dimension, double cell);

  double cell() const noexcept { return cell_; }
  std::size_t size() const noexcept { return points_.size(); }
  const Eigen::VectorXd& point(std::size_t i) const { return points_[i]; }

  std::size_t insert(const Eigen::VectorXd& p);
  /// Calls fn(index, distance) for every stored point within `radius` (<= cell) of p.
  template <class Fn>
  void for_each_within(const Eigen::VectorXd& p, double radius, Fn&& fn) const {
    const auto base = coords(p);
    const std::size_t n = base.size();
    // Squared distance from p to the lower and upper faces of its own cell, per axis.
    std::vector<double> below(n), above(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double lo = p[static_cast<Eigen::Index>(i)] - static_cast<double>(base[i]) * cell_;
      below[i] = lo * lo;
      above[i] = (cell_ - lo) * (cell_ - lo);
    }
    const double r2 = radius * radius;
    std::vector<std::int64_t> c(n);
    for (const auto& o : offsets_) {
      double gap2 = 0.0;
      for (std::size_t i = 0; i < n && gap2 <= r2; ++i) gap2 += o[i] < 0 ? below[i] : (o[i] > 0 ? above[i] : 0.0);
      if (gap2 > r2) continue;
      for (std::size_t i = 0; i < n; ++i) c[i] = base[i] + o[i];
      const auto it = buckets_.find(key(c));
      if (it == buckets_.end()) continue;
      for (std::size_t idx : it->second) {
        // Hash collisions can bring in far cells; the distance test filters them.
        const double d2 = (points_[idx] - p).squaredNorm();
        if (d2 <= r2) fn(idx, std::sqrt(d2));
      }
    }
  }
  bool any_within(const Eigen::VectorXd& p, double radius) const;

 private:
  std::uint64_t key(const std::vector<std::int64_t>& c) const;
  std::vector<std::int64_t> coords(const Eigen::VectorXd& p) const;

  int n_;
  double cell_;
  std::vector<Eigen::VectorXd> points_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets_;
  std::vector<std::vector<int>> offsets_;
};

/// Greedy Poisson-disk thinning in input order: keeps a point when no kept point lies
/// within r. Returns indices of kept points.
std::vector<std::size_t> poisson_thin(const std::vector<Eigen::VectorXd>& points, double r);

/// Distance from each point to its nearest other point (infinity for a single point).
std::vector<double> nearest_neighbor_distances(const std::vector<Eigen::VectorXd>& points);

double median(std::vector<double> v);

struct NeighborPair {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  double distance = 0.0;
};

/// All pairs a < b with distance <= radius, ordered by (b, a).
std::vector<NeighborPair> neighbor_pairs(const std::vector<Eigen::VectorXd>& points, double radius);

/// Components of the graph on `count` vertices with the pairs closer than eps as edges.
std::vector<int> components_from_pairs(std::size_t count, const std::vector<NeighborPair>& pairs, double eps,
                                       int* components = nullptr);

/// Connected components of the graph joining points closer than eps. Labels are numbered
/// in order of first appearance.
std::vector<int> epsilon_components(const std::vector<Eigen::VectorXd>& points, double eps, int* count = nullptr);

}  // namespace csmorse

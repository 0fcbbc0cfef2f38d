#include "csmorse/pointcloud.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "csmorse/errors.hpp"
#include "csmorse/random.hpp"

namespace csmorse {

GridIndex::GridIndex(int dimension, double cell) : n_(dimension), cell_(cell) {
  if (!(cell > 0.0)) throw ValidationError("grid cell size must be positive");
  std::vector<int> o(static_cast<std::size_t>(n_), -1);
  for (;;) {
    offsets_.push_back(o);
    int k = 0;
    while (k < n_ && o[static_cast<std::size_t>(k)] == 1) o[static_cast<std::size_t>(k++)] = -1;
    if (k == n_) break;
    ++o[static_cast<std::size_t>(k)];
  }
}

std::vector<std::int64_t> GridIndex::coords(const Eigen::VectorXd& p) const {
  std::vector<std::int64_t> c(static_cast<std::size_t>(n_));
  for (int i = 0; i < n_; ++i) c[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(std::floor(p[i] / cell_));
  return c;
}

std::uint64_t GridIndex::key(const std::vector<std::int64_t>& c) const {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL;
  for (std::int64_t v : c) h = splitmix64(h ^ static_cast<std::uint64_t>(v));
  return h;
}

std::size_t GridIndex::insert(const Eigen::VectorXd& p) {
  points_.push_back(p);
  buckets_[key(coords(p))].push_back(points_.size() - 1);
  return points_.size() - 1;
}

bool GridIndex::any_within(const Eigen::VectorXd& p, double radius) const {
  bool found = false;
  for_each_within(p, radius, [&](std::size_t, double) { found = true; });
  return found;
}

std::vector<std::size_t> poisson_thin(const std::vector<Eigen::VectorXd>& points, double r) {
  std::vector<std::size_t> kept;
  if (points.empty()) return kept;
  GridIndex grid(static_cast<int>(points.front().size()), r);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!grid.any_within(points[i], r)) {
      grid.insert(points[i]);
      kept.push_back(i);
    }
  }
  return kept;
}

std::vector<double> nearest_neighbor_distances(const std::vector<Eigen::VectorXd>& points) {
  const std::size_t count = points.size();
  std::vector<double> out(count, std::numeric_limits<double>::infinity());
  if (count < 2) return out;
  const int n = static_cast<int>(points.front().size());
  // Cell size from the bounding box volume per point; refine for points without a hit.
  Eigen::VectorXd lo = points.front(), hi = points.front();
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  double cell = (hi - lo).maxCoeff() / std::pow(static_cast<double>(count), 1.0 / 3.0);
  if (!(cell > 0.0)) cell = 1.0;
  std::vector<std::size_t> pending(count);
  std::iota(pending.begin(), pending.end(), 0);
  while (!pending.empty()) {
    GridIndex grid(n, cell);
    for (const auto& p : points) grid.insert(p);
    std::vector<std::size_t> next;
    for (std::size_t i : pending) {
      double best = std::numeric_limits<double>::infinity();
      grid.for_each_within(points[i], cell, [&](std::size_t j, double d) {
        if (j != i) best = std::min(best, d);
      });
      if (std::isfinite(best)) {
        out[i] = best;
      } else {
        next.push_back(i);
      }
    }
    pending = std::move(next);
    cell *= 2.0;
  }
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

std::vector<NeighborPair> neighbor_pairs(const std::vector<Eigen::VectorXd>& points, double radius) {
  std::vector<NeighborPair> pairs;
  if (points.empty()) return pairs;
  GridIndex grid(static_cast<int>(points.front().size()), radius);
  std::vector<NeighborPair> row;
  for (std::size_t i = 0; i < points.size(); ++i) {
    row.clear();
    grid.for_each_within(points[i], radius, [&](std::size_t j, double d) {
      row.push_back({static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(i), d});
    });
    std::sort(row.begin(), row.end(), [](const NeighborPair& x, const NeighborPair& y) { return x.a < y.a; });
    pairs.insert(pairs.end(), row.begin(), row.end());
    grid.insert(points[i]);
  }
  return pairs;
}

std::vector<int> components_from_pairs(std::size_t count, const std::vector<NeighborPair>& pairs, double eps,
                                       int* components) {
  std::vector<std::size_t> parent(count);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  };
  for (const auto& p : pairs) {
    if (p.distance > eps) continue;
    const std::size_t a = find(p.a), b = find(p.b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<int> label(count, -1);
  std::vector<int> root_label(count, -1);
  int next = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t r = find(i);
    if (root_label[r] < 0) root_label[r] = next++;
    label[i] = root_label[r];
  }
  if (components) *components = next;
  return label;
}

std::vector<int> epsilon_components(const std::vector<Eigen::VectorXd>& points, double eps, int* count) {
  return components_from_pairs(points.size(), neighbor_pairs(points, eps), eps, count);
}

}  // namespace csmorse

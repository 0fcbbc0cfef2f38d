#pragma once

// Scenario files: TOML documents describing a manifold, a continuous selection on it and
// the run parameters.
//
//   name = "s4_max3"
//   dimension = 5
//   selector = "max"
//   constraints = ["x1^2 + x2^2 + x3^2 + x4^2 + x5^2 - 1"]
//   selections = ["x1", "x2", "x3"]
//   seed = 1
//   threads = 1
//
//   [box]            lower / upper: number or array of n numbers (default -2 / 2)
//   [tolerances]     active_tol, crit_tol, nd2_tol, on_manifold_tol
//   [search]         starts_per_subset, dedupe_radius, degenerate_cluster_diameter,
//                    link_radius, newton_max_iter, newton_tol
//   [validation]     cs_probes
//   [census]         samples, targeted, min_samples, pca_points, pca_neighbors,
//                    pca_radius, eigen_gap, frontier_points
//   [fibers]         samples, candidate_factor, eps_factor, levels, grid

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "csmorse/csfun.hpp"
#include "csmorse/errors.hpp"
#include "csmorse/geometry.hpp"
#include "csmorse/nonsmooth.hpp"
#include "csmorse/search.hpp"
#include "csmorse/strata.hpp"

namespace csmorse {

/// Invalid scenario file. Line and column are 1-based; 0 when no position applies.
class ScenarioError : public ValidationError {
 public:
  ScenarioError(const std::string& message, int line = 0, int column = 0);

  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::string reason_;
  int line_;
  int column_;
};

struct Scenario {
  std::string name;
  int dimension = 0;
  Selector selector = Selector::Max;
  std::vector<std::string> constraints;
  std::vector<std::string> selections;
  BoundingBox box;
  double active_tol = 1e-8;
  double on_manifold_tol = 1e-10;
  Tolerances tol;
  SearchConfig search;
  int cs_probes = 2000;
  CensusOptions census;
  FiberOptions fibers;
  std::vector<double> fiber_levels;
  int fiber_grid = 0;
  std::uint64_t seed = 0;
  int threads = 1;

  Manifold manifold() const;
  CSFunction function() const;

  /// Propagates seed, threads and tolerances into the per-module option blocks.
  void set_seed(std::uint64_t s);
  void set_threads(int t);
};

Scenario parse_scenario(std::string_view text, const std::string& source_name = "<scenario>");
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace csmorse

#pragma once

// Critical point enumeration: for every nonempty index set J, damped Newton on
//
//   sum_{i in J} lambda_i grad f_i(x) + sum_k mu_k grad g_k(x) = 0
//   f_i(x) - f_{j0}(x) = 0        i in J \ {j0}
//   g_k(x) = 0
//   sum_{i in J} lambda_i - 1 = 0
//
// from random starts, followed by clustering of the converged solutions. Clusters that are
// wider than `degenerate_cluster_diameter` are reported as suspected non-isolated critical
// sets instead of critical points.

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "csmorse/csfun.hpp"
#include "csmorse/geometry.hpp"
#include "csmorse/nonsmooth.hpp"

namespace csmorse {

struct SearchConfig {
  int starts_per_subset = 200;
  std::uint64_t seed = 0;
  double dedupe_radius = 1e-6;
  double degenerate_cluster_diameter = 1e-2;
  double link_radius = 0.5;  // single linkage between solutions of equal J and value
  int newton_max_iter = 50;
  int max_backtracks = 30;
  double newton_tol = 1e-11;  // max-abs KKT residual
  Tolerances tol;
  int threads = 1;
};

Eigen::VectorXd kkt_residual(const CSFunction& f, const Manifold& m, const IndexSet& j, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& lambda, const Eigen::VectorXd& mu);

struct KktSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd lambda;
  Eigen::VectorXd mu;
  double residual = 0.0;  // max-abs KKT residual
  int iterations = 0;
  bool converged = false;
};

/// Damped Newton (minimum-norm steps, step halving) on the KKT system from (x0, lambda0,
/// mu0). Throws DomainError when an iterate leaves the domain of an expression.
KktSolution solve_kkt(const CSFunction& f, const Manifold& m, const IndexSet& j, const Eigen::VectorXd& x0,
                      const Eigen::VectorXd& lambda0, const Eigen::VectorXd& mu0, const SearchConfig& cfg = {});

/// Converged solution with admissible multipliers and exact active set J.
struct RawSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd lambda;
  Eigen::VectorXd mu;
  IndexSet indices;
  double value = 0.0;
  double residual = 0.0;
};

struct DegeneracyFlag {
  IndexSet indices;
  double value = 0.0;
  double diameter = 0.0;
  int member_count = 0;
  std::vector<Eigen::VectorXd> representatives;  // up to 5, spread out over the cluster
};

struct SolutionCluster {
  std::vector<int> members;  // indices into the raw solution list, ascending
  double diameter = 0.0;
  bool degenerate = false;
};

/// Single-linkage clusters of raw solutions with equal J and value. Deterministic in the
/// order of `raw`.
std::vector<SolutionCluster> cluster_solutions(const std::vector<RawSolution>& raw, const SearchConfig& cfg);

std::vector<DegeneracyFlag> detect_degenerate_sets(const std::vector<RawSolution>& raw, const SearchConfig& cfg);

struct CriticalPointRecord {
  Eigen::VectorXd x;
  IndexSet indices;
  Eigen::VectorXd lambda;
  Eigen::VectorXd mu;
  double value = 0.0;
  double min_norm = 0.0;
  bool boundary_multiplier = false;
  NondegeneracyReport nondegeneracy;
  std::optional<HandleClass> handle;
  int cluster_size = 0;
  double residual = 0.0;

  bool nondegenerate() const { return nondegeneracy.quadratic_index.has_value(); }
};

struct SubsetDiagnostics {
  IndexSet indices;
  int starts = 0;
  int converged = 0;
  int accepted = 0;
  std::map<std::string, int> discarded;  // reason -> count
};

struct SearchResult {
  std::vector<CriticalPointRecord> records;  // canonical order
  std::vector<DegeneracyFlag> degenerate_sets;
  std::vector<SubsetDiagnostics> diagnostics;
  std::vector<RawSolution> raw;
};

/// Canonical record order: stratum (size, then indices), value, coordinates.
bool record_less(const CriticalPointRecord& a, const CriticalPointRecord& b);

SearchResult find_critical_points(const CSFunction& f, const Manifold& m, const SearchConfig& cfg = {});

/// Sorted distinct values of records and degenerate sets, merged within 1e-9.
std::vector<double> critical_values(const std::vector<CriticalPointRecord>& records,
                                    const std::vector<DegeneracyFlag>& degenerate_sets = {});

}  // namespace csmorse

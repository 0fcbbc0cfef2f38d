#pragma once

// Manifolds given as regular level sets M = {x in R^n : g_1(x) = ... = g_c(x) = 0}.

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

#include "csmorse/expr.hpp"

namespace csmorse {

struct BoundingBox {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  bool contains(const Eigen::VectorXd& x, double scale = 1.0) const;
};

struct SolveOptions {
  double tolerance = 1e-10;  // max-abs residual
  int max_iterations = 50;
  int max_backtracks = 10;
  bool require_full_rank = true;  // stop with RankDeficient when the Jacobian drops rank
  double rank_tol = 1e-12;        // relative singular value threshold
};

enum class SolveStatus { Converged, NotConverged, RankDeficient, DomainError };

const char* to_string(SolveStatus s);

struct LevelSetSolution {
  Eigen::VectorXd x;
  SolveStatus status = SolveStatus::NotConverged;
  int iterations = 0;
  double residual = 0.0;

  bool ok() const { return status == SolveStatus::Converged; }
};

/// Gauss-Newton with minimum-norm steps and step halving on h(x) = 0, where h stacks the
/// given equations. Never throws; failures are reported in the status.
LevelSetSolution solve_level_set(std::span<const Expression> equations, const Eigen::VectorXd& x0,
                                 const SolveOptions& options = {});

/// Jacobian (rows = equations) and values of a system of equations.
void evaluate_system(std::span<const Expression> equations, const Eigen::VectorXd& x,
                     Eigen::VectorXd& values, Eigen::MatrixXd& jacobian);

class Manifold {
 public:
  Manifold(int ambient_dimension, std::vector<Expression> constraints, BoundingBox box,
           double on_manifold_tol = 1e-10);

  int ambient_dimension() const noexcept { return n_; }
  int codimension() const noexcept { return static_cast<int>(constraints_.size()); }
  int dimension() const noexcept { return n_ - codimension(); }

  const std::vector<Expression>& constraints() const noexcept { return constraints_; }
  const BoundingBox& box() const noexcept { return box_; }
  double on_manifold_tol() const noexcept { return on_manifold_tol_; }

  Eigen::VectorXd residual(const Eigen::VectorXd& x) const;
  /// c x n matrix whose rows are the constraint gradients.
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& x) const;
  /// Residual within tolerance and constraint Jacobian of full rank.
  bool contains(const Eigen::VectorXd& x) const;

 private:
  int n_;
  std::vector<Expression> constraints_;
  BoundingBox box_;
  double on_manifold_tol_;
};

/// Gauss-Newton projection onto M. Throws GeometryError on non-convergence, on a
/// rank-deficient Jacobian along the way, or when x0 lies outside twice the bounding box.
Eigen::VectorXd project_to_manifold(const Manifold& m, const Eigen::VectorXd& x0, int max_iterations = 50);

struct TangentBasis {
  Eigen::VectorXd point;
  Eigen::MatrixXd basis;  // n x (n - c), orthonormal columns
};

/// Orthonormal basis of the null space of the constraint Jacobian at x.
TangentBasis tangent_basis(const Manifold& m, const Eigen::VectorXd& x);

/// `count` points of M: uniform draws in the bounding box projected onto M, non-convergent
/// draws rejected. Deterministic in `seed`; work is split into fixed shards of 256 points
/// with derived seeds, so the output does not depend on `threads`.
std::vector<Eigen::VectorXd> sample_points(const Manifold& m, int count, std::uint64_t seed, int threads = 1);

}  // namespace csmorse

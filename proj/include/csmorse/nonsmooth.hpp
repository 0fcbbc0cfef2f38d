#pragma once

// Clarke criticality, nondegeneracy (ND1, ND2), quadratic index and stratified handle
// classes for CS functions on a manifold M.
//
// Gradients enter through their projections onto T_xM; the second-order test uses the
// Hessian of the embedded Lagrangian  sum_i lambda_i f_i + sum_k mu_k g_k, whose constraint
// terms carry the curvature of M.

#include <Eigen/Core>

#include <optional>
#include <string>
#include <vector>

#include "csmorse/csfun.hpp"
#include "csmorse/geometry.hpp"

namespace csmorse {

struct MinNormResult {
  Eigen::VectorXd lambda;  // simplex weights, one per input vector
  Eigen::VectorXd point;   // sum_i lambda_i v_i
  double norm = 0.0;
  /// Wolfe optimality gap |p|^2 - min_i <p, v_i>, >= 0 up to rounding; 0 at the optimum.
  double gap = 0.0;
  int iterations = 0;
};

/// Minimum-norm point of the convex hull of the columns of `vectors` (Wolfe's algorithm).
MinNormResult min_norm_in_hull(const Eigen::MatrixXd& vectors);
MinNormResult min_norm_in_hull(const std::vector<Eigen::VectorXd>& vectors);

struct Tolerances {
  double crit_tol = 1e-8;
  double nd2_tol = 1e-7;
  double nd1_rank_tol = 1e-8;  // relative singular value threshold
};

struct CriticalityVerdict {
  IndexSet indices;        // active set J
  Eigen::VectorXd lambda;  // one weight per index of J
  Eigen::VectorXd mu;      // constraint multipliers
  double min_norm = 0.0;   // |sum lambda_i P grad f_i|
  double gap = 0.0;
  bool is_critical = false;
  /// Some lambda_i < 1e-10: the point sits on the boundary of the multiplier simplex.
  bool boundary_multiplier = false;
};

/// Clarke criticality at an on-manifold point x with active set J = I_f(x).
CriticalityVerdict criticality(const CSFunction& f, const Manifold& m, const Eigen::VectorXd& x,
                               double crit_tol = 1e-8);
/// Same, for a given index set instead of the computed active set.
CriticalityVerdict criticality_on(const CSFunction& f, const Manifold& m, const Eigen::VectorXd& x,
                                  const IndexSet& j, double crit_tol = 1e-8);

struct Nd1Result {
  bool ok = true;
  int failing_index = -1;  // left-out selection of the first rank-deficient subset
  double smallest_singular = 0.0;
};

/// For each i in J, the projected gradients {P grad f_j : j in J \ {i}} together with the
/// constraint gradients must have rank |J| - 1 + c.
Nd1Result check_nd1(const CSFunction& f, const Manifold& m, const Eigen::VectorXd& x, const IndexSet& j,
                    double rank_tol = 1e-8);

struct NondegeneracyReport {
  bool nd1_ok = false;
  bool nd2_ok = false;
  std::optional<int> quadratic_index;
  Eigen::VectorXd restricted_hessian_eigenvalues;  // ascending
  int hat_tangent_dim = 0;
};

/// Orthonormal ambient basis (columns) of the tangent space of M_J at x: the vectors of
/// T_xM orthogonal to every grad f_i - grad f_{j0}, i in J.
Eigen::MatrixXd stratum_tangent_basis(const CSFunction& f, const Manifold& m, const Eigen::VectorXd& x,
                                      const IndexSet& j);

/// Lagrangian Hessian sum lambda_i Hess f_i + sum mu_k Hess g_k at x.
Eigen::MatrixXd lagrangian_hessian(const CSFunction& f, const Manifold& m, const Eigen::VectorXd& x,
                                   const IndexSet& j, const Eigen::VectorXd& lambda, const Eigen::VectorXd& mu);

/// ND1, ND2 and the quadratic index at a critical point. Throws ValidationError when the
/// verdict is not critical. ND1 failure is reported (nd1_ok = false, no index) rather than
/// thrown, so degenerate points can still be described.
NondegeneracyReport quadratic_index(const CSFunction& f, const Manifold& m, const Eigen::VectorXd& x,
                                    const CriticalityVerdict& verdict, const Tolerances& tol = {});

enum class HandleKind { Smooth, Bisected, Trisected, Stratified };

const char* to_string(HandleKind k);

struct HandleClass {
  HandleKind kind = HandleKind::Smooth;
  int total_index = 0;  // dimension of the handle core
  int k_param = 0;      // |J| - 1
  int m_param = 0;      // quadratic index
};

/// Handle class of a nondegenerate critical point. For the max selector the handle index is
/// the quadratic index; for the min selector it is quadratic index + |J| - 1. On
/// 4-manifolds with the max selector, an index above 3 on a stratum with |J| = 2 or above 2
/// with |J| = 3 throws ConsistencyError.
HandleClass classify_handle(Selector selector, int manifold_dim, int active_count, const NondegeneracyReport& nd);

}  // namespace csmorse

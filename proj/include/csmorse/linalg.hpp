#pragma once

#include <Eigen/Core>

namespace csmorse {

/// Singular values of `a`, largest first.
Eigen::VectorXd singular_values(const Eigen::MatrixXd& a);

/// Number of singular values above `rel_tol` times the largest one.
int numerical_rank(const Eigen::MatrixXd& a, double rel_tol);

/// Orthonormal basis (as columns) of the null space of `a`, assuming `a` has the given rank.
/// Computed from the right singular vectors of a full SVD.
Eigen::MatrixXd null_space(const Eigen::MatrixXd& a, int rank);

/// Minimum-norm least-squares solution of a x = b.
Eigen::VectorXd min_norm_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                               double rel_threshold = 1e-13);

}  // namespace csmorse

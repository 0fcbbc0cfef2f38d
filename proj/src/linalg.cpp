#include "csmorse/linalg.hpp"

#include <Eigen/SVD>

namespace csmorse {

Eigen::VectorXd singular_values(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return {};
  return Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues();
}

int numerical_rank(const Eigen::MatrixXd& a, double rel_tol) {
  const Eigen::VectorXd s = singular_values(a);
  if (s.size() == 0 || s[0] == 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s[i] > rel_tol * s[0]) ++rank;
  }
  return rank;
}

Eigen::MatrixXd null_space(const Eigen::MatrixXd& a, int rank) {
  const Eigen::Index n = a.cols();
  if (a.rows() == 0) return Eigen::MatrixXd::Identity(n, n);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  return svd.matrixV().rightCols(n - rank);
}

Eigen::VectorXd min_norm_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double rel_threshold) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(rel_threshold);
  return svd.solve(b);
}

}  // namespace csmorse

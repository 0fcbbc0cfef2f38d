#pragma once

// Independent reference computations used to check the library.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace csmorse::testing {

// Smallest |sum lambda_i v_i| over a regular grid on the simplex (k <= 3 columns).
inline double grid_min_norm(const Eigen::MatrixXd& v, double step, Eigen::VectorXd* argmin = nullptr) {
  const int k = static_cast<int>(v.cols());
  const int steps = static_cast<int>(std::lround(1.0 / step));
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd lam(k);
  auto consider = [&] {
    const double n = (v * lam).norm();
    if (n < best) {
      best = n;
      if (argmin) *argmin = lam;
    }
  };
  if (k == 1) {
    lam << 1.0;
    consider();
  } else if (k == 2) {
    for (int a = 0; a <= steps; ++a) {
      lam << a * step, 1.0 - a * step;
      consider();
    }
  } else if (k == 3) {
    for (int a = 0; a <= steps; ++a) {
      for (int b = 0; a + b <= steps; ++b) {
        lam << a * step, b * step, 1.0 - (a + b) * step;
        consider();
      }
    }
  }
  return best;
}

// Morse index of a smooth function restricted to the submanifold {h = 0} near x0.
// Uses the implicit chart y -> x0 + T y + N z(y), with T an orthonormal tangent basis,
// N spanning the normal space and z(y) solved by Newton, and a central finite-difference
// Hessian in y. Returns the Hessian eigenvalues (ascending).
inline Eigen::VectorXd chart_hessian_eigenvalues(
    const std::function<double(const Eigen::VectorXd&)>& fn,
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& h,
    const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& dh, const Eigen::VectorXd& x0,
    double step = 1e-4) {
  const Eigen::MatrixXd a = dh(x0);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::Index n = x0.size();
  const Eigen::Index r = a.rows();
  const Eigen::MatrixXd normal = svd.matrixV().leftCols(r);
  const Eigen::MatrixXd tangent = svd.matrixV().rightCols(n - r);
  const Eigen::Index d = n - r;

  auto chart = [&](const Eigen::VectorXd& y) {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(r);
    for (int it = 0; it < 50; ++it) {
      const Eigen::VectorXd x = x0 + tangent * y + normal * z;
      const Eigen::VectorXd res = h(x);
      if (res.cwiseAbs().maxCoeff() < 1e-15) break;
      z -= (dh(x) * normal).fullPivLu().solve(res);
    }
    return fn(x0 + tangent * y + normal * z);
  };

  Eigen::MatrixXd hess(d, d);
  const double f0 = chart(Eigen::VectorXd::Zero(d));
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = i; j < d; ++j) {
      Eigen::VectorXd ei = Eigen::VectorXd::Zero(d), ej = Eigen::VectorXd::Zero(d);
      ei[i] = step;
      ej[j] = step;
      double val;
      if (i == j) {
        val = (chart(ei) - 2.0 * f0 + chart(-ei)) / (step * step);
      } else {
        val = (chart(ei + ej) - chart(ei - ej) - chart(ej - ei) + chart(-ei - ej)) / (4.0 * step * step);
      }
      hess(i, j) = hess(j, i) = val;
    }
  }
  if (d == 0) return {};
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(hess).eigenvalues();
}

}  // namespace csmorse::testing

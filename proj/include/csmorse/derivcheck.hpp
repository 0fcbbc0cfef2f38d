#pragma once

// Comparison of forward-mode derivatives against central finite differences, per scenario
// expression, at points of the manifold.

#include <Eigen/Core>

#include <string>
#include <vector>

#include "csmorse/expr.hpp"

namespace csmorse {

struct Scenario;

struct DerivativeRow {
  std::string label;  // g1.., f1..
  std::string expression;
  int points = 0;          // evaluation points used
  int skipped = 0;         // points outside the expression's domain
  int clipped = 0;         // points where the difference step had to shrink
  double gradient_error = 0.0;  // max relative error
  double hessian_error = 0.0;
  bool passed = false;
  std::vector<std::string> warnings;
};

struct DerivativeReport {
  double tolerance = 1e-6;
  std::vector<DerivativeRow> rows;
  bool passed() const;
};

/// Relative error |a - b| / max(1, |b|), maximised over entries.
double relative_error(const Eigen::MatrixXd& ad, const Eigen::MatrixXd& fd);

/// Finite-difference gradient (from values) and Hessian (from first-order jets) of `e` at x,
/// with per-coordinate step h·max(1, |x_i|). When a stencil point leaves the domain that
/// coordinate's step is halved until it fits and then shrunk by a further 1e-4; `clipped`
/// reports this.
/// Throws DomainError when no step fits.
void finite_differences(const Expression& e, const Eigen::VectorXd& x, double h, Eigen::VectorXd& gradient,
                        Eigen::MatrixXd& hessian, bool* clipped = nullptr);

DerivativeRow check_expression(const std::string& label, const Expression& e,
                               const std::vector<Eigen::VectorXd>& points, double tolerance = 1e-6);

/// Checks every constraint and selection of the scenario at `count` manifold samples.
DerivativeReport check_derivatives(const Scenario& sc, int count = 20, double tolerance = 1e-6);

}  // namespace csmorse

#include "csmorse/derivcheck.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "csmorse/errors.hpp"
#include "csmorse/geometry.hpp"
#include "csmorse/random.hpp"
#include "csmorse/scenario.hpp"

namespace csmorse {

bool DerivativeReport::passed() const {
  return std::all_of(rows.begin(), rows.end(), [](const DerivativeRow& r) { return r.passed; });
}

double relative_error(const Eigen::MatrixXd& ad, const Eigen::MatrixXd& fd) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < ad.rows(); ++i) {
    for (Eigen::Index j = 0; j < ad.cols(); ++j) {
      worst = std::max(worst, std::abs(ad(i, j) - fd(i, j)) / std::max(1.0, std::abs(fd(i, j))));
    }
  }
  return worst;
}

void finite_differences(const Expression& e, const Eigen::VectorXd& x, double h, Eigen::VectorXd& gradient,
                        Eigen::MatrixXd& hessian, bool* clipped) {
  const auto n = x.size();
  gradient.resize(n);
  hessian.resize(n, n);
  if (clipped) *clipped = false;
  Eigen::VectorXd y = x;
  // Gradient from central differences of values, Hessian from central differences of
  // first-order jets. Steps shrink per coordinate.
  for (Eigen::Index i = 0; i < n; ++i) {
    double hi = h * std::max(1.0, std::abs(x[i]));
    bool shrunk = false;
    std::optional<Jet1> p, m;
    for (int halving = 0; halving <= 40 && !m; ++halving) {
      try {
        y[i] = x[i] + hi;
        p = e.eval_jet1(y);
        y[i] = x[i] - hi;
        m = e.eval_jet1(y);
      } catch (const DomainError&) {
        p.reset();
        m.reset();
        hi *= 0.5;
        shrunk = true;
      }
    }
    if (m && shrunk) {
      // The first step that fits is comparable to the distance to the singularity, where
      // truncation error is of order one. Go well inside.
      hi *= 1e-4;
      y[i] = x[i] + hi;
      p = e.eval_jet1(y);
      y[i] = x[i] - hi;
      m = e.eval_jet1(y);
      if (clipped) *clipped = true;
    }
    y[i] = x[i];
    if (!m) throw DomainError("no finite-difference stencil fits inside the domain", e.str());
    gradient[i] = (p->value - m->value) / (2.0 * hi);
    hessian.col(i) = (p->gradient - m->gradient) / (2.0 * hi);
  }
  hessian = 0.5 * (hessian + hessian.transpose()).eval();
}

DerivativeRow check_expression(const std::string& label, const Expression& e,
                               const std::vector<Eigen::VectorXd>& points, double tolerance) {
  DerivativeRow row;
  row.label = label;
  row.expression = e.str();
  for (const auto& x : points) {
    Jet2 ad;
    try {
      ad = e.eval_jet2(x);
    } catch (const DomainError&) {
      ++row.skipped;
      continue;
    }
    Eigen::VectorXd g;
    Eigen::MatrixXd h;
    bool clipped = false;
    try {
      finite_differences(e, x, 1e-5, g, h, &clipped);
    } catch (const DomainError&) {
      ++row.skipped;
      continue;
    }
    ++row.points;
    if (clipped) ++row.clipped;
    row.gradient_error = std::max(row.gradient_error, relative_error(ad.gradient, g));
    row.hessian_error = std::max(row.hessian_error, relative_error(ad.hessian, h));
  }
  if (row.clipped > 0) {
    row.warnings.push_back("difference step clipped near the domain boundary at " + std::to_string(row.clipped) +
                           " points");
  }
  if (row.skipped > 0) row.warnings.push_back(std::to_string(row.skipped) + " points outside the domain skipped");
  row.passed = row.points > 0 && row.gradient_error <= tolerance && row.hessian_error <= tolerance;
  return row;
}

DerivativeReport check_derivatives(const Scenario& sc, int count, double tolerance) {
  const Manifold m = sc.manifold();
  const auto points = sample_points(m, count, derive_seed(sc.seed, "derivative-check"), sc.threads);
  DerivativeReport report;
  report.tolerance = tolerance;
  for (std::size_t i = 0; i < sc.constraints.size(); ++i) {
    report.rows.push_back(check_expression("g" + std::to_string(i + 1), m.constraints()[i], points, tolerance));
  }
  const CSFunction f = sc.function();
  for (int i = 0; i < f.size(); ++i) {
    report.rows.push_back(check_expression("f" + std::to_string(i + 1), f.selection(i), points, tolerance));
  }
  return report;
}

}  // namespace csmorse

#include "csmorse/geometry.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <string>

#include "csmorse/errors.hpp"
#include "csmorse/linalg.hpp"
#include "csmorse/parallel.hpp"
#include "csmorse/random.hpp"

namespace csmorse {

bool BoundingBox::contains(const Eigen::VectorXd& x, double scale) const {
  const Eigen::VectorXd center = 0.5 * (lower + upper);
  const Eigen::VectorXd half = 0.5 * scale * (upper - lower);
  return ((x - center).array().abs() <= half.array()).all();
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::NotConverged: return "not converged";
    case SolveStatus::RankDeficient: return "rank deficient";
    case SolveStatus::DomainError: return "domain error";
  }
  return "";
}

void evaluate_system(std::span<const Expression> equations, const Eigen::VectorXd& x,
                     Eigen::VectorXd& values, Eigen::MatrixXd& jacobian) {
  const auto rows = static_cast<Eigen::Index>(equations.size());
  values.resize(rows);
  jacobian.resize(rows, x.size());
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Jet1 j = equations[static_cast<std::size_t>(i)].eval_jet1(x);
    values[i] = j.value;
    jacobian.row(i) = j.gradient.transpose();
  }
}

namespace {

double max_abs(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

bool try_values(std::span<const Expression> equations, const Eigen::VectorXd& x, Eigen::VectorXd& values) {
  try {
    values.resize(static_cast<Eigen::Index>(equations.size()));
    for (std::size_t i = 0; i < equations.size(); ++i) values[static_cast<Eigen::Index>(i)] = equations[i].eval(x);
    return true;
  } catch (const DomainError&) {
    return false;
  }
}

}  // namespace

LevelSetSolution solve_level_set(std::span<const Expression> equations, const Eigen::VectorXd& x0,
                                 const SolveOptions& options) {
  LevelSetSolution out;
  out.x = x0;
  Eigen::VectorXd h;
  Eigen::MatrixXd jac;
  try {
    evaluate_system(equations, out.x, h, jac);
  } catch (const DomainError&) {
    out.status = SolveStatus::DomainError;
    return out;
  }
  out.residual = max_abs(h);

  for (int it = 0; it <= options.max_iterations; ++it) {
    out.iterations = it;
    if (out.residual <= options.tolerance) {
      out.status = SolveStatus::Converged;
      return out;
    }
    if (it == options.max_iterations) break;

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& s = svd.singularValues();
    const bool deficient = s.size() < jac.rows() || s.size() == 0 || s[0] == 0.0 ||
                           s[s.size() - 1] <= options.rank_tol * s[0];
    if (deficient && options.require_full_rank) {
      out.status = SolveStatus::RankDeficient;
      return out;
    }
    svd.setThreshold(options.rank_tol);
    const Eigen::VectorXd step = svd.solve(h);

    // Halve the step until the residual decreases.
    double alpha = 1.0;
    Eigen::VectorXd trial_h;
    Eigen::VectorXd trial_x;
    bool accepted = false;
    const double current = h.norm();
    for (int b = 0; b <= options.max_backtracks; ++b, alpha *= 0.5) {
      trial_x = out.x - alpha * step;
      if (try_values(equations, trial_x, trial_h) && trial_h.norm() < current) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    out.x = trial_x;
    try {
      evaluate_system(equations, out.x, h, jac);
    } catch (const DomainError&) {
      out.status = SolveStatus::DomainError;
      return out;
    }
    out.residual = max_abs(h);
  }
  out.status = SolveStatus::NotConverged;
  return out;
}

Manifold::Manifold(int ambient_dimension, std::vector<Expression> constraints, BoundingBox box,
                   double on_manifold_tol)
    : n_(ambient_dimension), constraints_(std::move(constraints)), box_(std::move(box)),
      on_manifold_tol_(on_manifold_tol) {
  if (n_ < 1) throw ValidationError("ambient dimension must be at least 1");
  if (codimension() > n_) throw ValidationError("more constraints than ambient dimensions");
  for (const auto& g : constraints_) {
    if (g.dimension() != n_) throw ValidationError("constraint dimension differs from the ambient dimension");
  }
  if (box_.lower.size() != n_ || box_.upper.size() != n_) {
    throw ValidationError("bounding box must have one interval per ambient coordinate");
  }
  if (!(box_.lower.array() < box_.upper.array()).all()) {
    throw ValidationError("bounding box intervals must have lower < upper");
  }
  if (!(on_manifold_tol_ > 0.0)) throw ValidationError("on_manifold_tol must be positive");
}

Eigen::VectorXd Manifold::residual(const Eigen::VectorXd& x) const {
  Eigen::VectorXd r(codimension());
  for (int k = 0; k < codimension(); ++k) r[k] = constraints_[static_cast<std::size_t>(k)].eval(x);
  return r;
}

Eigen::MatrixXd Manifold::jacobian(const Eigen::VectorXd& x) const {
  Eigen::VectorXd values;
  Eigen::MatrixXd jac;
  evaluate_system(constraints_, x, values, jac);
  return jac;
}

bool Manifold::contains(const Eigen::VectorXd& x) const {
  if (x.size() != n_ || !x.allFinite()) return false;
  try {
    if (max_abs(residual(x)) > on_manifold_tol_) return false;
    return codimension() == 0 || numerical_rank(jacobian(x), 1e-12) == codimension();
  } catch (const DomainError&) {
    return false;
  }
}

Eigen::VectorXd project_to_manifold(const Manifold& m, const Eigen::VectorXd& x0, int max_iterations) {
  if (x0.size() != m.ambient_dimension() || !x0.allFinite()) {
    throw GeometryError(GeometryError::Kind::InvalidInput, "projection start must be a finite ambient vector");
  }
  if (!m.box().contains(x0, 2.0)) {
    throw GeometryError(GeometryError::Kind::InvalidInput, "projection start lies outside twice the bounding box");
  }
  SolveOptions opts;
  opts.tolerance = m.on_manifold_tol();
  opts.max_iterations = max_iterations;
  const LevelSetSolution sol = solve_level_set(m.constraints(), x0, opts);
  switch (sol.status) {
    case SolveStatus::Converged: break;
    case SolveStatus::RankDeficient:
      throw GeometryError(GeometryError::Kind::RankDeficient,
                          "constraint Jacobian is rank deficient on the projection path");
    default:
      throw GeometryError(GeometryError::Kind::NonConvergence,
                          std::string("projection onto the manifold failed: ") + to_string(sol.status));
  }
  // A converged point must also be a regular point of the constraints.
  if (m.codimension() > 0 && numerical_rank(m.jacobian(sol.x), 1e-12) < m.codimension()) {
    throw GeometryError(GeometryError::Kind::RankDeficient, "constraint Jacobian is rank deficient at the projected point");
  }
  return sol.x;
}

TangentBasis tangent_basis(const Manifold& m, const Eigen::VectorXd& x) {
  const Eigen::MatrixXd jac = m.jacobian(x);
  if (m.codimension() > 0 && numerical_rank(jac, 1e-12) < m.codimension()) {
    std::string names;
    for (int k = 0; k < m.codimension(); ++k) names += (k ? ", g" : "g") + std::to_string(k + 1);
    throw GeometryError(GeometryError::Kind::RankDeficient, "constraints {" + names + "} are rank deficient");
  }
  return {x, null_space(jac, m.codimension())};
}

std::vector<Eigen::VectorXd> sample_points(const Manifold& m, int count, std::uint64_t seed, int threads) {
  if (count < 0) throw ValidationError("sample count must be nonnegative");
  constexpr int kShard = 256;
  const int shards = (count + kShard - 1) / kShard;
  std::vector<std::vector<Eigen::VectorXd>> parts(static_cast<std::size_t>(shards));
  const int n = m.ambient_dimension();

  parallel_for(static_cast<std::size_t>(shards), threads, [&](std::size_t s) {
    const int want = std::min(kShard, count - static_cast<int>(s) * kShard);
    Rng rng(derive_seed(seed, "manifold-sample", s));
    auto& out = parts[s];
    out.reserve(static_cast<std::size_t>(want));
    SolveOptions opts;
    opts.tolerance = m.on_manifold_tol();
    for (long draws = 0; static_cast<int>(out.size()) < want && draws < 100L * want; ++draws) {
      Eigen::VectorXd x(n);
      for (int i = 0; i < n; ++i) x[i] = rng.uniform(m.box().lower[i], m.box().upper[i]);
      const LevelSetSolution sol = solve_level_set(m.constraints(), x, opts);
      if (sol.ok() && m.contains(sol.x)) out.push_back(sol.x);
    }
    if (static_cast<int>(out.size()) < want) {
      throw GeometryError(GeometryError::Kind::NonConvergence,
                          "sampling produced only " + std::to_string(out.size()) + " of " +
                              std::to_string(want) + " points in a shard after 100x draws");
    }
  });

  std::vector<Eigen::VectorXd> points;
  points.reserve(static_cast<std::size_t>(count));
  for (auto& p : parts) {
    for (auto& x : p) points.push_back(std::move(x));
  }
  return points;
}

}  // namespace csmorse

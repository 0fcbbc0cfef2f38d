#include "csmorse/nonsmooth.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

#include "csmorse/errors.hpp"
#include "csmorse/linalg.hpp"

namespace csmorse {

MinNormResult min_norm_in_hull(const std::vector<Eigen::VectorXd>& vectors) {
  if (vectors.empty()) throw ValidationError("min_norm_in_hull needs at least one vector");
  Eigen::MatrixXd v(vectors.front().size(), static_cast<Eigen::Index>(vectors.size()));
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].size() != v.rows()) throw ValidationError("min_norm_in_hull vectors differ in length");
    v.col(static_cast<Eigen::Index>(i)) = vectors[i];
  }
  return min_norm_in_hull(v);
}

namespace {

// Affine minimizer of |sum_s a_s v_s| subject to sum_s a_s = 1, written in the differences
// to the first corral vector so that duplicate vectors only cost a zero singular value.
Eigen::VectorXd affine_minimizer(const Eigen::MatrixXd& v, const std::vector<int>& corral) {
  const auto k = static_cast<Eigen::Index>(corral.size());
  Eigen::VectorXd a = Eigen::VectorXd::Zero(k);
  a[0] = 1.0;
  if (k == 1) return a;
  const Eigen::VectorXd v0 = v.col(corral[0]);
  Eigen::MatrixXd d(v.rows(), k - 1);
  for (Eigen::Index s = 1; s < k; ++s) d.col(s - 1) = v.col(corral[static_cast<std::size_t>(s)]) - v0;
  const Eigen::VectorXd beta = min_norm_solve(d, -v0, 1e-12);
  a.tail(k - 1) = beta;
  a[0] = 1.0 - beta.sum();
  return a;
}

}  // namespace

MinNormResult min_norm_in_hull(const Eigen::MatrixXd& v) {
  const Eigen::Index k = v.cols();
  if (k == 0) throw ValidationError("min_norm_in_hull needs at least one vector");
  if (!v.allFinite()) throw ValidationError("min_norm_in_hull vectors must be finite");

  const Eigen::VectorXd sq = v.colwise().squaredNorm();
  const double scale = std::max(sq.maxCoeff(), 1e-300);
  const double eps = 1e-12 * scale;

  Eigen::Index first = 0;
  sq.minCoeff(&first);
  std::vector<int> corral{static_cast<int>(first)};
  std::vector<double> w{1.0};
  MinNormResult out;

  auto current_point = [&] {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(v.rows());
    for (std::size_t s = 0; s < corral.size(); ++s) p += w[s] * v.col(corral[s]);
    return p;
  };

  const int max_major = 100 * static_cast<int>(k) + 100;
  for (int it = 0; it < max_major; ++it) {
    out.iterations = it + 1;
    const Eigen::VectorXd p = current_point();
    const Eigen::VectorXd dots = v.transpose() * p;
    Eigen::Index j = 0;
    dots.minCoeff(&j);
    if (p.squaredNorm() - dots[j] <= eps) break;
    if (std::find(corral.begin(), corral.end(), static_cast<int>(j)) != corral.end()) break;
    corral.push_back(static_cast<int>(j));
    w.push_back(0.0);

    for (int minor = 0; minor <= static_cast<int>(k); ++minor) {
      const Eigen::VectorXd a = affine_minimizer(v, corral);
      if ((a.array() > 1e-15).all()) {
        w.assign(a.data(), a.data() + a.size());
        break;
      }
      // Move from w towards a until the first weight hits zero, then drop it.
      double theta = 1.0;
      for (std::size_t s = 0; s < corral.size(); ++s) {
        if (a[static_cast<Eigen::Index>(s)] <= 1e-15) {
          const double denom = w[s] - a[static_cast<Eigen::Index>(s)];
          theta = std::min(theta, denom > 0.0 ? w[s] / denom : 0.0);
        }
      }
      for (std::size_t s = 0; s < corral.size(); ++s) {
        w[s] = theta * a[static_cast<Eigen::Index>(s)] + (1.0 - theta) * w[s];
      }
      std::vector<int> kept;
      std::vector<double> kept_w;
      for (std::size_t s = 0; s < corral.size(); ++s) {
        if (w[s] > 1e-15) {
          kept.push_back(corral[s]);
          kept_w.push_back(w[s]);
        }
      }
      if (kept.empty()) {  // cannot happen in exact arithmetic
        kept.push_back(corral.back());
        kept_w.push_back(1.0);
      }
      double total = 0.0;
      for (double x : kept_w) total += x;
      for (double& x : kept_w) x /= total;
      corral = std::move(kept);
      w = std::move(kept_w);
    }
  }

  out.lambda = Eigen::VectorXd::Zero(k);
  for (std::size_t s = 0; s < corral.size(); ++s) out.lambda[corral[s]] = w[s];
  out.lambda /= out.lambda.sum();
  out.point = v * out.lambda;
  out.norm = out.point.norm();
  out.gap = std::max(0.0, out.point.squaredNorm() - (v.transpose() * out.point).minCoeff());
  return out;
}

CriticalityVerdict criticality_on(const CSFunction& f, const Manifold& m, const Eigen::VectorXd& x,
                                  const IndexSet& j, double crit_tol) {
  if (j.empty()) throw ValidationError("criticality needs a nonempty index set");
  const Eigen::MatrixXd b = tangent_basis(m, x).basis;
  Eigen::MatrixXd grads(x.size(), static_cast<Eigen::Index>(j.size()));
  for (std::size_t s = 0; s < j.size(); ++s) {
    grads.col(static_cast<Eigen::Index>(s)) = f.selection(j[s]).eval_jet1(x).gradient;
  }
  const MinNormResult mn = min_norm_in_hull(Eigen::MatrixXd(b.transpose() * grads));

  CriticalityVerdict v;
  v.indices = j;
  v.lambda = mn.lambda;
  v.min_norm = mn.norm;
  v.gap = mn.gap;
  v.is_critical = mn.norm <= crit_tol;
  v.boundary_multiplier = j.size() > 1 && (mn.lambda.array() < 1e-10).any();
  if (m.codimension() > 0) {
    v.mu = min_norm_solve(m.jacobian(x).transpose(), -(grads * mn.lambda));
  } else {
    v.mu.resize(0);
  }
  return v;
}

CriticalityVerdict criticality(const CSFunction& f, const Manifold& m, const Eigen::VectorXd& x, double crit_tol) {
  return criticality_on(f, m, x, f.stratum_of(x), crit_tol);
}

Nd1Result check_nd1(const CSFunction& f, const Manifold& m, const Eigen::VectorXd& x, const IndexSet& j,
                    double rank_tol) {
  Nd1Result out;
  const int c = m.codimension();
  if (j.size() < 2) return out;
  const Eigen::MatrixXd b = tangent_basis(m, x).basis;
  const Eigen::MatrixXd jac = m.jacobian(x);
  std::vector<Eigen::VectorXd> projected;
  for (int i : j) {
    const Eigen::VectorXd g = f.selection(i).eval_jet1(x).gradient;
    projected.push_back(b * (b.transpose() * g));
  }
  const int need = static_cast<int>(j.size()) - 1 + c;
  out.smallest_singular = std::numeric_limits<double>::infinity();
  for (std::size_t leave = 0; leave < j.size(); ++leave) {
    Eigen::MatrixXd rows(need, x.size());
    Eigen::Index r = 0;
    for (std::size_t s = 0; s < j.size(); ++s) {
      if (s != leave) rows.row(r++) = projected[s].transpose();
    }
    for (int k = 0; k < c; ++k) rows.row(r++) = jac.row(k);
    const Eigen::VectorXd sv = singular_values(rows);
    out.smallest_singular = std::min(out.smallest_singular, sv[need - 1]);
    if (numerical_rank(rows, rank_tol) < need && out.ok) {
      out.ok = false;
      out.failing_index = j[leave];
    }
  }
  return out;
}

Eigen::MatrixXd stratum_tangent_basis(const CSFunction& f, const Manifold& m, const Eigen::VectorXd& x,
                                      const IndexSet& j) {
  const Eigen::MatrixXd b = tangent_basis(m, x).basis;
  if (j.size() < 2) return b;
  const Eigen::VectorXd g0 = f.selection(j[0]).eval_jet1(x).gradient;
  Eigen::MatrixXd d(static_cast<Eigen::Index>(j.size() - 1), b.cols());
  for (std::size_t s = 1; s < j.size(); ++s) {
    const Eigen::VectorXd gs = f.selection(j[s]).eval_jet1(x).gradient;
    d.row(static_cast<Eigen::Index>(s - 1)) = (b.transpose() * (gs - g0)).transpose();
  }
  return b * null_space(d, numerical_rank(d, 1e-8));
}

Eigen::MatrixXd lagrangian_hessian(const CSFunction& f, const Manifold& m, const Eigen::VectorXd& x,
                                   const IndexSet& j, const Eigen::VectorXd& lambda, const Eigen::VectorXd& mu) {
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(x.size(), x.size());
  for (std::size_t s = 0; s < j.size(); ++s) {
    h += lambda[static_cast<Eigen::Index>(s)] * f.selection(j[s]).eval_jet2(x).hessian;
  }
  for (int k = 0; k < m.codimension(); ++k) {
    h += mu[k] * m.constraints()[static_cast<std::size_t>(k)].eval_jet2(x).hessian;
  }
  return h;
}

NondegeneracyReport quadratic_index(const CSFunction& f, const Manifold& m, const Eigen::VectorXd& x,
                                    const CriticalityVerdict& verdict, const Tolerances& tol) {
  if (!verdict.is_critical) throw ValidationError("quadratic index requested at a non-critical point");
  NondegeneracyReport r;
  r.nd1_ok = check_nd1(f, m, x, verdict.indices, tol.nd1_rank_tol).ok;

  const Eigen::MatrixXd t = stratum_tangent_basis(f, m, x, verdict.indices);
  r.hat_tangent_dim = static_cast<int>(t.cols());
  const Eigen::MatrixXd h = lagrangian_hessian(f, m, x, verdict.indices, verdict.lambda, verdict.mu);
  Eigen::MatrixXd restricted = t.transpose() * h * t;
  restricted = 0.5 * (restricted + restricted.transpose());
  if (r.hat_tangent_dim > 0) {
    r.restricted_hessian_eigenvalues = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(restricted).eigenvalues();
  } else {
    r.restricted_hessian_eigenvalues.resize(0);
  }
  r.nd2_ok = r.nd1_ok && (r.restricted_hessian_eigenvalues.array().abs() > tol.nd2_tol).all();
  if (r.nd1_ok && r.nd2_ok) {
    r.quadratic_index = static_cast<int>((r.restricted_hessian_eigenvalues.array() < 0.0).count());
  }
  return r;
}

const char* to_string(HandleKind k) {
  switch (k) {
    case HandleKind::Smooth: return "smooth";
    case HandleKind::Bisected: return "bisected";
    case HandleKind::Trisected: return "trisected";
    case HandleKind::Stratified: return "stratified";
  }
  return "";
}

HandleClass classify_handle(Selector selector, int manifold_dim, int active_count, const NondegeneracyReport& nd) {
  if (!nd.quadratic_index) throw ValidationError("handle class requested for a degenerate critical point");
  if (active_count < 1) throw ValidationError("handle class needs a nonempty active set");
  HandleClass h;
  h.kind = active_count == 1   ? HandleKind::Smooth
           : active_count == 2 ? HandleKind::Bisected
           : active_count == 3 ? HandleKind::Trisected
                               : HandleKind::Stratified;
  h.k_param = active_count - 1;
  h.m_param = *nd.quadratic_index;
  h.total_index = selector == Selector::Max ? h.m_param : h.m_param + h.k_param;
  if (h.total_index > manifold_dim) {
    throw ConsistencyError("handle index " + std::to_string(h.total_index) + " exceeds the manifold dimension");
  }
  if (selector == Selector::Max && manifold_dim == 4) {
    if ((active_count == 2 && h.total_index > 3) || (active_count == 3 && h.total_index > 2)) {
      throw ConsistencyError("handle index " + std::to_string(h.total_index) + " is impossible on a stratum with " +
                             std::to_string(active_count) + " active selections");
    }
  }
  return h;
}

}  // namespace csmorse

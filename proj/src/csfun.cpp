#include "csmorse/csfun.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

#include "csmorse/errors.hpp"
#include "csmorse/parallel.hpp"
#include "csmorse/random.hpp"

namespace csmorse {

const char* to_string(Selector s) { return s == Selector::Max ? "max" : "min"; }

std::uint32_t mask_of(const IndexSet& j) {
  std::uint32_t mask = 0;
  for (int i : j) mask |= 1u << i;
  return mask;
}

IndexSet indices_of(std::uint32_t mask) {
  IndexSet out;
  for (int i = 0; mask != 0; ++i, mask >>= 1) {
    if (mask & 1u) out.push_back(i);
  }
  return out;
}

std::string format_indices(const IndexSet& j) {
  std::string s;
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (k) s += '-';
    s += std::to_string(j[k] + 1);
  }
  return s;
}

bool stratum_less(const IndexSet& a, const IndexSet& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

std::vector<IndexSet> nonempty_subsets(int m) {
  std::vector<IndexSet> out;
  for (std::uint32_t mask = 1; mask < (1u << m); ++mask) out.push_back(indices_of(mask));
  std::sort(out.begin(), out.end(), stratum_less);
  return out;
}

CSFunction::CSFunction(std::vector<Expression> selections, Selector selector, double active_tol)
    : selections_(std::move(selections)), selector_(selector), active_tol_(active_tol) {
  if (selections_.empty()) throw ValidationError("a CS function needs at least one selection");
  if (selections_.size() > 16) throw ValidationError("at most 16 selections are supported");
  for (const auto& e : selections_) {
    if (e.dimension() != selections_.front().dimension()) {
      throw ValidationError("selections must share the ambient dimension");
    }
  }
  if (!(active_tol_ > 0.0)) throw ValidationError("active_tol must be positive");
}

Eigen::VectorXd CSFunction::selection_values(const Eigen::VectorXd& x) const {
  Eigen::VectorXd v(size());
  for (int i = 0; i < size(); ++i) v[i] = selections_[static_cast<std::size_t>(i)].eval(x);
  return v;
}

double CSFunction::value(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd v = selection_values(x);
  return selector_ == Selector::Max ? v.maxCoeff() : v.minCoeff();
}

ActiveSet CSFunction::active_set(const Eigen::VectorXd& x) const {
  ActiveSet a;
  a.values = selection_values(x);
  a.value = selector_ == Selector::Max ? a.values.maxCoeff() : a.values.minCoeff();
  for (int i = 0; i < size(); ++i) {
    const double margin = std::abs(a.value - a.values[i]);
    if (margin <= active_tol_) {
      a.indices.push_back(i);
    } else {
      a.witness_gap = std::min(a.witness_gap, margin);
    }
  }
  a.near_tie = a.witness_gap <= 10.0 * active_tol_;
  return a;
}

std::vector<Expression> stratum_equations(const CSFunction& f, const Manifold& m, const IndexSet& j) {
  std::vector<Expression> eq = m.constraints();
  for (std::size_t k = 1; k < j.size(); ++k) eq.push_back(f.selection(j[k]) - f.selection(j[0]));
  return eq;
}

AffineIndependence affine_independence(const CSFunction& f, const Manifold& m, const Eigen::VectorXd& x,
                                       const IndexSet& j) {
  AffineIndependence out;
  if (j.size() < 2) return out;
  const Eigen::MatrixXd b = tangent_basis(m, x).basis;
  const Jet1 g0 = f.selection(j[0]).eval_jet1(x);
  double scale = g0.gradient.norm();
  Eigen::MatrixXd d(static_cast<Eigen::Index>(j.size() - 1), b.cols());
  for (std::size_t k = 1; k < j.size(); ++k) {
    const Jet1 gk = f.selection(j[k]).eval_jet1(x);
    scale = std::max(scale, gk.gradient.norm());
    d.row(static_cast<Eigen::Index>(k - 1)) = (b.transpose() * (gk.gradient - g0.gradient)).transpose();
  }
  const Eigen::VectorXd s = Eigen::JacobiSVD<Eigen::MatrixXd>(d).singularValues();
  const double threshold = 1e-8 * std::max(1.0, scale);
  out.rank = static_cast<int>((s.array() > threshold).count());
  const auto needed = static_cast<Eigen::Index>(j.size() - 1);
  out.smallest_singular = s.size() < needed ? 0.0 : s[needed - 1];
  out.ok = out.rank == static_cast<int>(needed);
  return out;
}

std::vector<Eigen::VectorXd> sample_stratum(const CSFunction& f, const Manifold& m, const IndexSet& j, int count,
                                            std::uint64_t seed, int threads) {
  if (count <= 0) return {};
  constexpr int kShard = 64;
  const int shards = (count + kShard - 1) / kShard;
  std::vector<std::vector<Eigen::VectorXd>> parts(static_cast<std::size_t>(shards));
  const std::vector<Expression> eq = stratum_equations(f, m, j);
  const int n = m.ambient_dimension();

  parallel_for(static_cast<std::size_t>(shards), threads, [&](std::size_t s) {
    const int want = std::min(kShard, count - static_cast<int>(s) * kShard);
    Rng rng(derive_seed(seed, "stratum-sample", s));
    SolveOptions opts;
    opts.tolerance = m.on_manifold_tol();
    auto& out = parts[s];
    for (long draws = 0; static_cast<int>(out.size()) < want && draws < 50L * want; ++draws) {
      Eigen::VectorXd x(n);
      for (int i = 0; i < n; ++i) x[i] = rng.uniform(m.box().lower[i], m.box().upper[i]);
      const LevelSetSolution sol = solve_level_set(eq, x, opts);
      if (!sol.ok() || !m.contains(sol.x)) continue;
      try {
        if (f.stratum_of(sol.x) == j) out.push_back(sol.x);
      } catch (const DomainError&) {
      }
    }
  });

  std::vector<Eigen::VectorXd> points;
  for (auto& p : parts) {
    for (auto& x : p) points.push_back(std::move(x));
  }
  return points;
}

CSValidationReport validate_cs(const CSFunction& f, const Manifold& m, int probe_count, std::uint64_t seed,
                               int threads) {
  if (f.dimension() != m.ambient_dimension()) {
    throw ValidationError("selections and manifold have different ambient dimensions");
  }
  CSValidationReport report;
  auto check = [&](const Eigen::VectorXd& x, const IndexSet& j) {
    ++report.probes;
    if (j.size() < 2) return;
    ++report.multi_active;
    const AffineIndependence a = affine_independence(f, m, x, j);
    report.worst_conditioning = std::min(report.worst_conditioning, a.smallest_singular);
    if (!a.ok) {
      ++report.violation_count;
      if (report.violations.size() < 10) report.violations.push_back({x, j, a.smallest_singular});
    }
  };

  for (const auto& x : sample_points(m, probe_count, derive_seed(seed, "cs-probe", 0), threads)) {
    check(x, f.stratum_of(x));
  }
  const int per_stratum = std::max(20, probe_count / 10);
  for (const IndexSet& j : nonempty_subsets(f.size())) {
    if (j.size() < 2) continue;
    for (const auto& x : sample_stratum(f, m, j, per_stratum, derive_seed(seed, "cs-probe", mask_of(j)), threads)) {
      check(x, j);
    }
  }
  return report;
}

}  // namespace csmorse

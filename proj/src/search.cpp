#include "csmorse/search.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "csmorse/errors.hpp"
#include "csmorse/linalg.hpp"
#include "csmorse/parallel.hpp"
#include "csmorse/random.hpp"

namespace csmorse {

namespace {

double max_abs(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

struct KktSystem {
  Eigen::VectorXd residual;
  Eigen::MatrixXd jacobian;
};

KktSystem assemble(const CSFunction& f, const Manifold& m, const IndexSet& j, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& lambda, const Eigen::VectorXd& mu, bool with_jacobian) {
  const Eigen::Index n = x.size();
  const auto q = static_cast<Eigen::Index>(j.size());
  const Eigen::Index c = m.codimension();
  const Eigen::Index rows = n + (q - 1) + c + 1;
  KktSystem s;
  s.residual = Eigen::VectorXd::Zero(rows);
  if (with_jacobian) s.jacobian = Eigen::MatrixXd::Zero(rows, n + q + c);

  std::vector<Jet2> fj;
  for (int i : j) fj.push_back(f.selection(i).eval_jet2(x));
  std::vector<Jet2> gj;
  for (const auto& g : m.constraints()) gj.push_back(g.eval_jet2(x));

  for (Eigen::Index s_ = 0; s_ < q; ++s_) {
    const Jet2& jet = fj[static_cast<std::size_t>(s_)];
    s.residual.head(n) += lambda[s_] * jet.gradient;
    if (with_jacobian) {
      s.jacobian.topLeftCorner(n, n) += lambda[s_] * jet.hessian;
      s.jacobian.block(0, n + s_, n, 1) = jet.gradient;
    }
  }
  for (Eigen::Index k = 0; k < c; ++k) {
    const Jet2& jet = gj[static_cast<std::size_t>(k)];
    s.residual.head(n) += mu[k] * jet.gradient;
    if (with_jacobian) {
      s.jacobian.topLeftCorner(n, n) += mu[k] * jet.hessian;
      s.jacobian.block(0, n + q + k, n, 1) = jet.gradient;
    }
  }
  Eigen::Index row = n;
  for (Eigen::Index s_ = 1; s_ < q; ++s_, ++row) {
    s.residual[row] = fj[static_cast<std::size_t>(s_)].value - fj[0].value;
    if (with_jacobian) s.jacobian.block(row, 0, 1, n) = (fj[static_cast<std::size_t>(s_)].gradient - fj[0].gradient).transpose();
  }
  for (Eigen::Index k = 0; k < c; ++k, ++row) {
    s.residual[row] = gj[static_cast<std::size_t>(k)].value;
    if (with_jacobian) s.jacobian.block(row, 0, 1, n) = gj[static_cast<std::size_t>(k)].gradient.transpose();
  }
  s.residual[row] = lambda.sum() - 1.0;
  if (with_jacobian) s.jacobian.block(row, n, 1, q).setOnes();
  return s;
}

}  // namespace

Eigen::VectorXd kkt_residual(const CSFunction& f, const Manifold& m, const IndexSet& j, const Eigen::VectorXd& x,
                             const Eigen::VectorXd& lambda, const Eigen::VectorXd& mu) {
  if (lambda.size() != static_cast<Eigen::Index>(j.size()) || mu.size() != m.codimension()) {
    throw ValidationError("multiplier sizes do not match the index set and the constraints");
  }
  return assemble(f, m, j, x, lambda, mu, false).residual;
}

KktSolution solve_kkt(const CSFunction& f, const Manifold& m, const IndexSet& j, const Eigen::VectorXd& x0,
                      const Eigen::VectorXd& lambda0, const Eigen::VectorXd& mu0, const SearchConfig& cfg) {
  const Eigen::Index n = x0.size();
  const auto q = static_cast<Eigen::Index>(j.size());
  const Eigen::Index c = m.codimension();
  Eigen::VectorXd z(n + q + c);
  z << x0, lambda0, mu0;
  auto split = [&](const Eigen::VectorXd& v, Eigen::VectorXd& x, Eigen::VectorXd& l, Eigen::VectorXd& u) {
    x = v.head(n);
    l = v.segment(n, q);
    u = v.tail(c);
  };

  KktSolution out;
  Eigen::VectorXd x, l, u;
  split(z, x, l, u);
  KktSystem sys = assemble(f, m, j, x, l, u, true);
  for (int it = 0;; ++it) {
    out.iterations = it;
    out.residual = max_abs(sys.residual);
    if (out.residual <= cfg.newton_tol) {
      out.converged = true;
      break;
    }
    if (it == cfg.newton_max_iter) break;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(sys.jacobian, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-12);
    const Eigen::VectorXd step = svd.solve(sys.residual);
    const double current = sys.residual.norm();
    bool accepted = false;
    double alpha = 1.0;
    for (int b = 0; b <= cfg.max_backtracks; ++b, alpha *= 0.5) {
      const Eigen::VectorXd trial = z - alpha * step;
      Eigen::VectorXd tx, tl, tu;
      split(trial, tx, tl, tu);
      try {
        KktSystem ts = assemble(f, m, j, tx, tl, tu, false);
        if (ts.residual.norm() < current) {
          z = trial;
          accepted = true;
          break;
        }
      } catch (const DomainError&) {
      }
    }
    if (!accepted) break;
    split(z, x, l, u);
    sys = assemble(f, m, j, x, l, u, true);
  }
  split(z, out.x, out.lambda, out.mu);
  return out;
}

std::vector<SolutionCluster> cluster_solutions(const std::vector<RawSolution>& raw, const SearchConfig& cfg) {
  const int count = static_cast<int>(raw.size());
  std::vector<int> parent(static_cast<std::size_t>(count));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[static_cast<std::size_t>(a)] != a) {
      parent[static_cast<std::size_t>(a)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
      a = parent[static_cast<std::size_t>(a)];
    }
    return a;
  };
  for (int a = 0; a < count; ++a) {
    for (int b = a + 1; b < count; ++b) {
      const auto& ra = raw[static_cast<std::size_t>(a)];
      const auto& rb = raw[static_cast<std::size_t>(b)];
      if (ra.indices != rb.indices) continue;
      if (std::abs(ra.value - rb.value) > 1e-7 * std::max(1.0, std::abs(ra.value))) continue;
      if ((ra.x - rb.x).norm() > cfg.link_radius) continue;
      const int pa = find(a), pb = find(b);
      if (pa != pb) parent[static_cast<std::size_t>(std::max(pa, pb))] = std::min(pa, pb);
    }
  }
  std::map<int, SolutionCluster> by_root;
  for (int a = 0; a < count; ++a) by_root[find(a)].members.push_back(a);

  std::vector<SolutionCluster> out;
  for (auto& [root, cl] : by_root) {
    for (std::size_t p = 0; p < cl.members.size(); ++p) {
      for (std::size_t r = p + 1; r < cl.members.size(); ++r) {
        cl.diameter = std::max(cl.diameter, (raw[static_cast<std::size_t>(cl.members[p])].x -
                                             raw[static_cast<std::size_t>(cl.members[r])].x)
                                                .norm());
      }
    }
    cl.degenerate = cl.diameter > cfg.degenerate_cluster_diameter;
    out.push_back(std::move(cl));
  }
  return out;
}

namespace {

DegeneracyFlag make_flag(const std::vector<RawSolution>& raw, const SolutionCluster& cl) {
  DegeneracyFlag flag;
  const RawSolution& first = raw[static_cast<std::size_t>(cl.members.front())];
  flag.indices = first.indices;
  flag.value = first.value;
  flag.diameter = cl.diameter;
  flag.member_count = static_cast<int>(cl.members.size());
  // Farthest-point traversal starting at the first member.
  std::vector<int> chosen{cl.members.front()};
  while (chosen.size() < std::min<std::size_t>(5, cl.members.size())) {
    int best = -1;
    double best_d = -1.0;
    for (int a : cl.members) {
      double d = std::numeric_limits<double>::infinity();
      for (int c : chosen) d = std::min(d, (raw[static_cast<std::size_t>(a)].x - raw[static_cast<std::size_t>(c)].x).norm());
      if (d > best_d) {
        best_d = d;
        best = a;
      }
    }
    chosen.push_back(best);
  }
  for (int c : chosen) flag.representatives.push_back(raw[static_cast<std::size_t>(c)].x);
  return flag;
}

}  // namespace

std::vector<DegeneracyFlag> detect_degenerate_sets(const std::vector<RawSolution>& raw, const SearchConfig& cfg) {
  std::vector<DegeneracyFlag> flags;
  for (const auto& cl : cluster_solutions(raw, cfg)) {
    if (cl.degenerate) flags.push_back(make_flag(raw, cl));
  }
  return flags;
}

bool record_less(const CriticalPointRecord& a, const CriticalPointRecord& b) {
  if (a.indices != b.indices) return stratum_less(a.indices, b.indices);
  if (a.value != b.value) return a.value < b.value;
  return std::lexicographical_compare(a.x.data(), a.x.data() + a.x.size(), b.x.data(), b.x.data() + b.x.size());
}

namespace {

struct StartOutcome {
  std::string reason;  // empty when accepted
  bool converged = false;
  RawSolution solution;
};

StartOutcome run_start(const CSFunction& f, const Manifold& m, const IndexSet& j, const std::vector<Expression>& eq,
                       std::uint64_t seed, const SearchConfig& cfg) {
  StartOutcome out;
  const int n = m.ambient_dimension();
  Rng rng(seed);
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = rng.uniform(m.box().lower[i], m.box().upper[i]);
  SolveOptions opts;
  opts.tolerance = m.on_manifold_tol();
  opts.require_full_rank = false;
  const LevelSetSolution start = solve_level_set(eq, x, opts);
  if (!start.ok()) {
    out.reason = "start-projection";
    return out;
  }
  x = start.x;
  try {
    const auto q = static_cast<Eigen::Index>(j.size());
    const Eigen::VectorXd lambda = Eigen::VectorXd::Constant(q, 1.0 / static_cast<double>(q));
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(m.codimension());
    if (m.codimension() > 0) {
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(n);
      for (Eigen::Index s = 0; s < q; ++s) grad += lambda[s] * f.selection(j[static_cast<std::size_t>(s)]).eval_jet1(x).gradient;
      mu = min_norm_solve(m.jacobian(x).transpose(), -grad);
    }
    const KktSolution sol = solve_kkt(f, m, j, x, lambda, mu, cfg);
    if (!sol.converged) {
      out.reason = "newton-failed";
      return out;
    }
    out.converged = true;
    if (sol.lambda.minCoeff() < -1e-10) {
      out.reason = "negative-multiplier";
      return out;
    }
    if (!m.contains(sol.x)) {
      out.reason = "off-manifold";
      return out;
    }
    const ActiveSet a = f.active_set(sol.x);
    if (a.indices != j) {
      out.reason = "wrong-active-set";
      return out;
    }
    out.solution = {sol.x, sol.lambda, sol.mu, j, a.value, sol.residual};
  } catch (const DomainError&) {
    out.reason = "domain-error";
  } catch (const GeometryError&) {
    out.reason = "rank-deficient";
  }
  return out;
}

}  // namespace

SearchResult find_critical_points(const CSFunction& f, const Manifold& m, const SearchConfig& cfg) {
  if (cfg.starts_per_subset < 1) throw ValidationError("starts_per_subset must be positive");
  if (!(cfg.dedupe_radius > 0.0) || !(cfg.degenerate_cluster_diameter > 0.0) || !(cfg.link_radius > 0.0)) {
    throw ValidationError("search radii must be positive");
  }
  if (f.dimension() != m.ambient_dimension()) {
    throw ValidationError("selections and manifold have different ambient dimensions");
  }
  const std::vector<IndexSet> subsets = nonempty_subsets(f.size());
  const auto starts = static_cast<std::size_t>(cfg.starts_per_subset);
  std::vector<std::vector<Expression>> equations;
  for (const auto& j : subsets) equations.push_back(stratum_equations(f, m, j));

  std::vector<StartOutcome> outcomes(subsets.size() * starts);
  parallel_for(outcomes.size(), cfg.threads, [&](std::size_t t) {
    const std::size_t si = t / starts;
    const std::uint64_t index = (static_cast<std::uint64_t>(mask_of(subsets[si])) << 20) + t % starts;
    outcomes[t] = run_start(f, m, subsets[si], equations[si], derive_seed(cfg.seed, "search-start", index), cfg);
  });

  SearchResult result;
  std::map<IndexSet, std::size_t> diag_slot;
  for (std::size_t si = 0; si < subsets.size(); ++si) {
    SubsetDiagnostics d;
    d.indices = subsets[si];
    d.starts = cfg.starts_per_subset;
    for (std::size_t s = 0; s < starts; ++s) {
      StartOutcome& o = outcomes[si * starts + s];
      d.converged += o.converged;
      if (o.reason.empty()) {
        ++d.accepted;
        result.raw.push_back(std::move(o.solution));
      } else {
        ++d.discarded[o.reason];
      }
    }
    diag_slot[subsets[si]] = result.diagnostics.size();
    result.diagnostics.push_back(std::move(d));
  }

  const std::vector<SolutionCluster> clusters = cluster_solutions(result.raw, cfg);
  for (const auto& cl : clusters) {
    if (cl.degenerate) {
      result.degenerate_sets.push_back(make_flag(result.raw, cl));
      continue;
    }
    // Distinct points within the cluster (normally exactly one).
    std::vector<std::pair<int, int>> reps;  // raw index, member count
    for (int a : cl.members) {
      bool merged = false;
      for (auto& [r, cnt] : reps) {
        if ((result.raw[static_cast<std::size_t>(a)].x - result.raw[static_cast<std::size_t>(r)].x).norm() <=
            cfg.dedupe_radius) {
          ++cnt;
          merged = true;
          break;
        }
      }
      if (!merged) reps.emplace_back(a, 1);
    }
    for (const auto& [r, cnt] : reps) {
      const RawSolution& raw = result.raw[static_cast<std::size_t>(r)];
      auto& diag = result.diagnostics[diag_slot[raw.indices]];
      SearchConfig polish = cfg;
      polish.newton_tol = 1e-14;
      polish.newton_max_iter = 20;
      KktSolution p = solve_kkt(f, m, raw.indices, raw.x, raw.lambda, raw.mu, polish);
      Eigen::VectorXd x = p.residual < raw.residual ? p.x : raw.x;
      if (f.stratum_of(x) != raw.indices || !m.contains(x)) x = raw.x;

      const CriticalityVerdict v = criticality_on(f, m, x, raw.indices, cfg.tol.crit_tol);
      if (!v.is_critical) {
        ++diag.discarded["not-critical-after-polish"];
        continue;
      }
      CriticalPointRecord rec;
      rec.x = x;
      rec.indices = raw.indices;
      rec.lambda = v.lambda;
      rec.mu = v.mu;
      rec.value = f.value(x);
      rec.min_norm = v.min_norm;
      rec.boundary_multiplier = v.boundary_multiplier;
      rec.nondegeneracy = quadratic_index(f, m, x, v, cfg.tol);
      if (rec.nondegenerate()) {
        rec.handle = classify_handle(f.selector(), m.dimension(), static_cast<int>(rec.indices.size()),
                                     rec.nondegeneracy);
      }
      rec.cluster_size = cnt;
      rec.residual = max_abs(kkt_residual(f, m, rec.indices, x, rec.lambda, rec.mu));
      result.records.push_back(std::move(rec));
    }
  }
  std::sort(result.records.begin(), result.records.end(), record_less);
  std::sort(result.degenerate_sets.begin(), result.degenerate_sets.end(),
            [](const DegeneracyFlag& a, const DegeneracyFlag& b) {
              if (a.indices != b.indices) return stratum_less(a.indices, b.indices);
              return a.value < b.value;
            });
  return result;
}

std::vector<double> critical_values(const std::vector<CriticalPointRecord>& records,
                                    const std::vector<DegeneracyFlag>& degenerate_sets) {
  std::vector<double> v;
  for (const auto& r : records) v.push_back(r.value);
  for (const auto& d : degenerate_sets) v.push_back(d.value);
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double x : v) {
    if (out.empty() || x - out.back() > 1e-9) out.push_back(x);
  }
  return out;
}

}  // namespace csmorse

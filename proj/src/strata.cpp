#include "csmorse/strata.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <sstream>

#include "csmorse/errors.hpp"
#include "csmorse/linalg.hpp"
#include "csmorse/parallel.hpp"
#include "csmorse/pointcloud.hpp"
#include "csmorse/random.hpp"

namespace csmorse {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::VectorXd box_draw(const Manifold& m, Rng& rng) {
  Eigen::VectorXd x(m.ambient_dimension());
  for (int i = 0; i < x.size(); ++i) x[i] = rng.uniform(m.box().lower[i], m.box().upper[i]);
  return x;
}

Eigen::VectorXd unit_direction(int n, Rng& rng) {
  Eigen::VectorXd d(n);
  do {
    for (int i = 0; i < n; ++i) d[i] = rng.normal();
  } while (d.norm() < 1e-12);
  return d.normalized();
}

}  // namespace

// ---------------------------------------------------------------------------------------
// Stratum census

const StratumStats* StratumCensus::find(const IndexSet& j) const {
  for (const auto& s : strata) {
    if (s.indices == j) return &s;
  }
  return nullptr;
}

int pca_dimension(const std::vector<Eigen::VectorXd>& cloud, double gap_threshold, double* gap) {
  if (gap) *gap = kInf;
  if (cloud.size() < 2) return 0;
  const auto n = cloud.front().size();
  Eigen::MatrixXd c(n, static_cast<Eigen::Index>(cloud.size()));
  for (std::size_t k = 0; k < cloud.size(); ++k) c.col(static_cast<Eigen::Index>(k)) = cloud[k];
  const Eigen::MatrixXd centered = c.colwise() - c.rowwise().mean();
  const Eigen::VectorXd ev = singular_values(centered).array().square();
  const double tiny = 1e-300;
  if (ev[0] <= tiny) return 0;
  int best = static_cast<int>(ev.size());
  double best_ratio = 0.0;
  for (Eigen::Index d = 1; d < ev.size(); ++d) {
    const double ratio = ev[d] <= tiny ? kInf : ev[d - 1] / ev[d];
    if (ratio >= gap_threshold) {
      if (gap) *gap = ratio;
      return static_cast<int>(d);
    }
    if (ratio > best_ratio) {
      best_ratio = ratio;
      best = static_cast<int>(d);
    }
  }
  if (gap) *gap = best_ratio;
  return best;
}

namespace {

struct PcaSample {
  bool tested = false;
  int dimension = 0;
  double gap = 0.0;
};

PcaSample local_pca(const CSFunction& f, const std::vector<Expression>& eq, const IndexSet& j,
                    const Eigen::VectorXd& x0, const CensusOptions& opts, std::uint64_t seed) {
  Rng rng(seed);
  SolveOptions so;
  so.require_full_rank = false;
  const int n = static_cast<int>(x0.size());
  const double r = opts.pca_radius;
  std::vector<std::pair<double, Eigen::VectorXd>> found;
  found.emplace_back(0.0, x0);
  const int attempts = 6 * opts.pca_neighbors;
  for (int a = 0; a < attempts; ++a) {
    Eigen::VectorXd y = x0;
    for (int i = 0; i < n; ++i) y[i] += rng.uniform(-r, r);
    const LevelSetSolution sol = solve_level_set(eq, y, so);
    if (!sol.ok()) continue;
    const double d = (sol.x - x0).norm();
    if (d < 3.0 * r && f.stratum_of(sol.x) == j) found.emplace_back(d, sol.x);
  }
  PcaSample out;
  if (static_cast<int>(found.size()) < opts.pca_neighbors) return out;
  std::stable_sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Eigen::VectorXd> cloud;
  for (int k = 0; k < opts.pca_neighbors; ++k) cloud.push_back(found[static_cast<std::size_t>(k)].second);
  out.tested = true;
  out.dimension = pca_dimension(cloud, opts.eigen_gap, &out.gap);
  return out;
}

}  // namespace

StratumCensus stratum_census(const CSFunction& f, const Manifold& m, const CensusOptions& opts) {
  if (opts.samples < 1 || opts.pca_neighbors < 2 || !(opts.pca_radius > 0.0) || opts.targeted < 0) {
    throw ValidationError("invalid census options");
  }
  StratumCensus census;
  census.samples = opts.samples;
  census.dimension = m.dimension();
  const int sel = f.size();

  const auto global = sample_points(m, opts.samples, derive_seed(opts.seed, "census", 0), opts.threads);
  std::vector<IndexSet> global_strata(global.size());
  parallel_for(global.size(), opts.threads, [&](std::size_t i) { global_strata[i] = f.stratum_of(global[i]); });

  census.skeleton.assign(static_cast<std::size_t>(sel + 1), 0);
  for (const auto& j : global_strata) {
    for (int i = 0; i <= sel; ++i) {
      if (static_cast<int>(j.size()) >= sel - i + 1) ++census.skeleton[static_cast<std::size_t>(i)];
    }
  }

  std::map<std::pair<std::uint32_t, std::uint32_t>, int> edges;
  census.f_min = kInf;
  census.f_max = -kInf;

  for (const IndexSet& j : nonempty_subsets(sel)) {
    const std::uint32_t mask = mask_of(j);
    StratumStats st;
    st.indices = j;
    st.expected_dimension = m.dimension() - (static_cast<int>(j.size()) - 1);
    std::vector<Eigen::VectorXd> population;
    for (std::size_t i = 0; i < global.size(); ++i) {
      if (global_strata[i] == j) population.push_back(global[i]);
    }
    st.sample_count = static_cast<int>(population.size());
    if (j.size() >= 2 && opts.targeted > 0) {
      const auto extra = sample_stratum(f, m, j, opts.targeted, derive_seed(opts.seed, "census", mask), opts.threads);
      st.targeted_count = static_cast<int>(extra.size());
      population.insert(population.end(), extra.begin(), extra.end());
    }

    st.f_min = population.empty() ? kNaN : kInf;
    st.f_max = population.empty() ? kNaN : -kInf;
    for (const auto& x : population) {
      const double v = f.value(x);
      st.f_min = std::min(st.f_min, v);
      st.f_max = std::max(st.f_max, v);
    }
    if (!population.empty()) {
      census.f_min = std::min(census.f_min, st.f_min);
      census.f_max = std::max(census.f_max, st.f_max);
    }

    if (static_cast<int>(population.size()) >= opts.min_samples) {
      const auto eq = stratum_equations(f, m, j);
      const std::size_t tested = std::min<std::size_t>(population.size(), static_cast<std::size_t>(opts.pca_points));
      std::vector<PcaSample> pca(tested);
      const std::uint64_t pca_seed = derive_seed(derive_seed(opts.seed, "census", mask), "pca");
      parallel_for(tested, opts.threads, [&](std::size_t p) {
        pca[p] = local_pca(f, eq, j, population[p], opts, derive_seed(pca_seed, "point", p));
      });
      std::map<int, int> votes;
      std::vector<double> gaps;
      for (const auto& p : pca) {
        if (!p.tested) continue;
        ++st.pca_tested;
        ++votes[p.dimension];
        gaps.push_back(p.gap);
      }
      if (!votes.empty()) {
        int best = -1, best_votes = 0;
        for (const auto& [d, v] : votes) {
          if (v > best_votes) {
            best = d;
            best_votes = v;
          }
        }
        st.dimension = best;
        for (const auto& p : pca) {
          if (p.tested && p.dimension == best && p.gap >= opts.eigen_gap) ++st.pca_agreeing;
        }
        st.median_gap = median(gaps);
      }
    }

    // Frontier probes: small steps off a point of M_J, aimed at each f_j becoming the single
    // winner and in one random tangent direction, then reprojected.
    if (j.size() >= 2) {
      const std::size_t probes = std::min<std::size_t>(population.size(), static_cast<std::size_t>(opts.frontier_points));
      std::vector<std::vector<IndexSet>> landed(probes);
      const double sign = f.selector() == Selector::Max ? 1.0 : -1.0;
      parallel_for(probes, opts.threads, [&](std::size_t p) {
        const Eigen::VectorXd& x = population[p];
        Rng rng(derive_seed(opts.seed, "frontier", (static_cast<std::uint64_t>(mask) << 20) + p));
        Eigen::MatrixXd b;
        try {
          b = tangent_basis(m, x).basis;
        } catch (const Error&) {
          return;
        }
        std::vector<Eigen::VectorXd> dirs;
        for (int keep : j) {
          Eigen::VectorXd d = Eigen::VectorXd::Zero(x.size());
          const Eigen::VectorXd gk = f.selection(keep).eval_jet1(x).gradient;
          for (int i : j) {
            if (i != keep) d += gk - f.selection(i).eval_jet1(x).gradient;
          }
          dirs.push_back(sign * d);
        }
        dirs.push_back(unit_direction(static_cast<int>(x.size()), rng));
        for (Eigen::VectorXd d : dirs) {
          d = b * (b.transpose() * d);
          if (d.norm() < 1e-12) continue;
          try {
            const Eigen::VectorXd y = project_to_manifold(m, x + opts.frontier_step * d.normalized());
            landed[p].push_back(f.stratum_of(y));
          } catch (const Error&) {
          }
        }
      });
      for (const auto& list : landed) {
        for (const IndexSet& to : list) {
          if (to != j) ++edges[{mask, mask_of(to)}];
        }
      }
    }
    census.strata.push_back(std::move(st));
  }

  for (const auto& [key, count] : edges) census.frontier.push_back({indices_of(key.first), indices_of(key.second), count});
  std::sort(census.frontier.begin(), census.frontier.end(), [](const FrontierEdge& a, const FrontierEdge& b) {
    if (a.upper != b.upper) return stratum_less(a.upper, b.upper);
    return stratum_less(a.lower, b.lower);
  });
  if (std::isinf(census.f_min)) census.f_min = census.f_max = kNaN;
  return census;
}

// ---------------------------------------------------------------------------------------
// Fiber census

namespace {

class FiberProjector {
 public:
  FiberProjector(const CSFunction& f, const Manifold& m, double t, double level_tol)
      : f_(f), m_(m), t_(t), level_tol_(level_tol) {
    opts_.tolerance = m.on_manifold_tol();
    for (int i = 0; i < f.size(); ++i) {
      auto eq = m.constraints();
      eq.push_back(f.selection(i) - Expression::constant(t, m.ambient_dimension()));
      systems_.push_back(std::move(eq));
    }
  }

  std::optional<Eigen::VectorXd> operator()(const Eigen::VectorXd& y0) const {
    const LevelSetSolution base = solve_level_set(m_.constraints(), y0, opts_);
    if (!base.ok()) return std::nullopt;
    // Try the selections in the order in which they win at the base point.
    const Eigen::VectorXd v = f_.selection_values(base.x);
    std::vector<int> order(static_cast<std::size_t>(f_.size()));
    for (int i = 0; i < f_.size(); ++i) order[static_cast<std::size_t>(i)] = i;
    const bool max = f_.selector() == Selector::Max;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return max ? v[a] > v[b] : v[a] < v[b]; });
    for (int i : order) {
      const LevelSetSolution sol = solve_level_set(systems_[static_cast<std::size_t>(i)], base.x, opts_);
      if (!sol.ok() || !m_.box().contains(sol.x, 2.0)) continue;
      if (std::abs(f_.value(sol.x) - t_) <= level_tol_) return sol.x;
    }
    return std::nullopt;
  }

  // Point of the fiber where the two leading selections at y0 tie, if there is one.
  std::optional<Eigen::VectorXd> corner(const Eigen::VectorXd& y0) const {
    if (f_.size() < 2) return std::nullopt;
    const LevelSetSolution base = solve_level_set(m_.constraints(), y0, opts_);
    if (!base.ok()) return std::nullopt;
    const Eigen::VectorXd v = f_.selection_values(base.x);
    std::vector<int> order(static_cast<std::size_t>(f_.size()));
    for (int i = 0; i < f_.size(); ++i) order[static_cast<std::size_t>(i)] = i;
    const bool max = f_.selector() == Selector::Max;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return max ? v[a] > v[b] : v[a] < v[b]; });
    auto eq = systems_[static_cast<std::size_t>(order[0])];
    eq.push_back(systems_[static_cast<std::size_t>(order[1])].back());
    const LevelSetSolution sol = solve_level_set(eq, base.x, opts_);
    if (!sol.ok() || !m_.box().contains(sol.x, 2.0)) return std::nullopt;
    if (std::abs(f_.value(sol.x) - t_) > level_tol_) return std::nullopt;
    return sol.x;
  }

 private:
  const CSFunction& f_;
  const Manifold& m_;
  double t_;
  double level_tol_;
  SolveOptions opts_;
  std::vector<std::vector<Expression>> systems_;
};

double bounding_diagonal(const std::vector<Eigen::VectorXd>& pts) {
  Eigen::VectorXd lo = pts.front(), hi = pts.front();
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return (hi - lo).norm();
}

}  // namespace

FiberCensus fiber_census(const CSFunction& f, const Manifold& m, double t, const FiberOptions& opts,
                         const std::vector<double>& critical_values, std::optional<std::pair<double, double>> range,
                         int level_index) {
  if (opts.samples < 2 || opts.candidate_factor < 1 || opts.fill_rounds < 0 || opts.fill_proposals < 1 ||
      !(opts.eps_factor > 0.0)) {
    throw ValidationError("invalid fiber options");
  }
  if (!std::isfinite(t)) throw ValidationError("fiber level must be finite");
  if (range && (t < range->first - opts.level_tol || t > range->second + opts.level_tol)) {
    std::ostringstream msg;
    msg << "level " << t << " outside the range [" << range->first << ", " << range->second << "] of f";
    throw ValidationError(msg.str());
  }

  FiberCensus out;
  out.level = t;
  out.level_index = level_index;
  for (double c : critical_values) {
    if (std::abs(c - t) <= opts.merge_tol) out.is_regular = false;
  }

  const FiberProjector project(f, m, t, opts.level_tol);
  const std::uint64_t level_seed = derive_seed(opts.seed, "fiber", static_cast<std::uint64_t>(level_index));

  // Raw candidates from box draws.
  constexpr int kShard = 256;
  const int wanted = opts.samples * opts.candidate_factor;
  const int shards = (wanted + kShard - 1) / kShard;
  std::vector<std::vector<Eigen::VectorXd>> parts(static_cast<std::size_t>(shards));
  parallel_for(parts.size(), opts.threads, [&](std::size_t s) {
    const int want = std::min(kShard, wanted - static_cast<int>(s) * kShard);
    Rng rng(derive_seed(level_seed, "candidates", s));
    for (int draws = 0; static_cast<int>(parts[s].size()) < want && draws < 20 * want; ++draws) {
      if (auto z = project(box_draw(m, rng))) parts[s].push_back(std::move(*z));
    }
  });
  std::vector<Eigen::VectorXd> candidates;
  for (auto& p : parts) {
    for (auto& x : p) candidates.push_back(std::move(x));
  }
  out.candidates = static_cast<int>(candidates.size());
  if (candidates.empty()) {
    std::ostringstream msg;
    msg << "sampling failure: no points found on the fiber f = " << t;
    throw GeometryError(GeometryError::Kind::NonConvergence, msg.str());
  }

  // Poisson-disk thinning to about `samples` points.
  std::vector<Eigen::VectorXd> kept;
  double r = 0.0;
  if (static_cast<int>(candidates.size()) <= opts.samples) {
    kept = candidates;
    r = 0.5 * median(nearest_neighbor_distances(kept));
  } else {
    // Kept count scales like r^-d on a d-dimensional fiber; a few multiplicative
    // corrections reach the target.
    const double d = std::max(1, m.dimension() - 1);
    double trial = 0.5 * std::max(bounding_diagonal(candidates), 1e-12) * std::pow(opts.samples, -1.0 / d);
    double best_r = 0.0, fallback_r = trial;
    for (int it = 0; it < 8; ++it) {
      const auto count = static_cast<double>(poisson_thin(candidates, trial).size());
      if (count >= opts.samples) {
        best_r = std::max(best_r, trial);
        if (count <= 1.05 * opts.samples) break;
      } else {
        fallback_r = std::min(fallback_r, trial);
      }
      trial *= std::pow(count / opts.samples, 1.0 / d) * (count >= opts.samples ? 1.0 : 0.98);
    }
    r = best_r > 0.0 ? best_r : fallback_r;
    for (std::size_t i : poisson_thin(candidates, r)) kept.push_back(candidates[i]);
  }
  if (!(r > 0.0) || !std::isfinite(r)) r = 1e-6;

  // Fill rounds. A closed fiber has no boundary, so holes in the sample show up in two
  // ways: a point whose neighbours within edge_radius * r lie to one side (mean offset above
  // edge_offset * r) or that has no neighbour within fill_threshold * r borders a wide hole
  // and gets proposals 1-2 r away aimed at the empty side; a pair more than 2 r apart with
  // no common neighbour within 2 r and no point within r of its midpoint spans a narrow hole
  // and proposes the midpoint.
  // Proposals that keep the spacing are inserted in a fixed order.
  GridIndex grid(m.ambient_dimension(), r);
  for (const auto& p : kept) grid.insert(p);
  for (int round = 0; round < opts.fill_rounds; ++round) {
    const std::size_t count = kept.size();
    std::vector<Eigen::VectorXd> offset(count, Eigen::VectorXd::Zero(m.ambient_dimension()));
    std::vector<int> degree(count, 0);
    std::vector<double> nearest(count, std::numeric_limits<double>::infinity());
    const auto pairs = neighbor_pairs(kept, opts.edge_radius * r);
    std::vector<std::vector<std::size_t>> close(count);
    for (const auto& pr : pairs) {
      const Eigen::VectorXd d = kept[pr.b] - kept[pr.a];
      offset[pr.a] += d;
      offset[pr.b] -= d;
      ++degree[pr.a];
      ++degree[pr.b];
      nearest[pr.a] = std::min(nearest[pr.a], pr.distance);
      nearest[pr.b] = std::min(nearest[pr.b], pr.distance);
      if (pr.distance <= 2.0 * r) {
        close[pr.a].push_back(pr.b);
        close[pr.b].push_back(pr.a);
      }
    }
    for (auto& c : close) std::sort(c.begin(), c.end());
    std::vector<Eigen::VectorXd> starts;
    for (const auto& pr : pairs) {
      if (pr.distance <= 2.0 * r) continue;
      // Endpoints with a common close neighbour are bridged already.
      const auto& ca = close[pr.a];
      const auto& cb = close[pr.b];
      std::size_t ia = 0, ib = 0;
      bool bridged = false;
      while (!bridged && ia < ca.size() && ib < cb.size()) {
        if (ca[ia] == cb[ib]) bridged = true;
        else if (ca[ia] < cb[ib]) ++ia;
        else ++ib;
      }
      if (bridged) continue;
      Eigen::VectorXd mid = 0.5 * (kept[pr.a] + kept[pr.b]);
      if (!grid.any_within(mid, r)) starts.push_back(std::move(mid));
    }
    std::vector<std::size_t> edge;
    for (std::size_t k = 0; k < count; ++k) {
      if (degree[k] > 0) offset[k] /= degree[k];
      if (nearest[k] > opts.fill_threshold * r || offset[k].norm() > opts.edge_offset * r) edge.push_back(k);
    }
    if (edge.empty() && starts.empty()) break;
    const std::uint64_t round_seed = derive_seed(level_seed, "fill", static_cast<std::uint64_t>(round));
    const auto per = static_cast<std::size_t>(opts.fill_proposals);
    const std::size_t midpoints = starts.size();
    std::vector<std::optional<Eigen::VectorXd>> proposals(midpoints + edge.size() * per);
    parallel_for(proposals.size(), opts.threads, [&](std::size_t q) {
      if (q < midpoints) {
        // A hole at a corner of the fiber, where it passes between strata, is closer to the
        // tie locus than to either branch.
        proposals[q] = project(starts[q]);
        const auto c = project.corner(starts[q]);
        if (c && (!proposals[q] || (*c - starts[q]).norm() < (*proposals[q] - starts[q]).norm())) proposals[q] = c;
        return;
      }
      const std::size_t k = edge[(q - midpoints) / per];
      const std::size_t j = (q - midpoints) % per;
      Rng rng(derive_seed(round_seed, "point", (static_cast<std::uint64_t>(k) << 8) + j));
      Eigen::VectorXd dir = unit_direction(m.ambient_dimension(), rng);
      const double lean = offset[k].norm();
      if (lean > opts.edge_offset * r) dir = (j % 2 == 0 ? 0.0 : 0.5) * dir - offset[k] / lean;
      if (dir.norm() < 1e-12) return;
      const double step = r * (1.0 + 1.2 * (static_cast<double>(j) + 0.5) / static_cast<double>(per));
      proposals[q] = project(kept[k] + step * dir.normalized());
    });
    const std::size_t before = kept.size();
    for (std::size_t q = 0; q < proposals.size(); ++q) {
      auto& z = proposals[q];
      if (z && !grid.any_within(*z, (q < midpoints ? opts.fill_spacing : 1.0) * r)) {
        grid.insert(*z);
        kept.push_back(std::move(*z));
      }
    }
    if (kept.size() == before) break;
  }

  out.spacing = r;
  out.samples = static_cast<int>(kept.size());

  out.median_nn = median(nearest_neighbor_distances(kept));
  if (!std::isfinite(out.median_nn) || out.median_nn <= 0.0) out.median_nn = r;
  out.eps = opts.eps_factor * out.median_nn;
  double widest = out.eps;
  for (double factor : opts.stability_factors) widest = std::max(widest, factor * out.median_nn);
  const auto pairs = neighbor_pairs(kept, widest);
  out.labels = components_from_pairs(kept.size(), pairs, out.eps, &out.components);
  out.stable = true;
  for (double factor : opts.stability_factors) {
    int c = 0;
    components_from_pairs(kept.size(), pairs, factor * out.median_nn, &c);
    out.stability.emplace_back(factor, c);
    out.stable = out.stable && c == out.components;
  }

  std::map<std::uint32_t, int> tally;
  out.point_strata.reserve(kept.size());
  for (const auto& x : kept) {
    out.point_strata.push_back(f.stratum_of(x));
    ++tally[mask_of(out.point_strata.back())];
  }
  for (const IndexSet& j : nonempty_subsets(f.size())) {
    const auto it = tally.find(mask_of(j));
    if (it != tally.end()) out.stratum_counts.emplace_back(j, it->second);
  }
  out.points = std::move(kept);
  return out;
}

std::vector<double> grid_levels(const std::vector<double>& critical_values, int k) {
  if (k < 1) throw ValidationError("grid level count must be positive");
  std::vector<double> cv = critical_values;
  std::sort(cv.begin(), cv.end());
  if (cv.size() < 2) throw ValidationError("fewer than two critical values: no regular interval to place levels in");
  const int intervals = static_cast<int>(cv.size()) - 1;
  std::vector<double> levels;
  for (int i = 0; i < intervals; ++i) {
    const int here = k / intervals + (i < k % intervals ? 1 : 0);
    const double a = cv[static_cast<std::size_t>(i)], b = cv[static_cast<std::size_t>(i + 1)];
    for (int q = 0; q < here; ++q) levels.push_back(a + (b - a) * (2.0 * q + 1.0) / (2.0 * here));
  }
  return levels;
}

void write_points_csv(std::ostream& os, const std::vector<Eigen::VectorXd>& points,
                      const std::vector<IndexSet>& strata, double t) {
  if (points.size() != strata.size()) throw ValidationError("point and stratum lists differ in length");
  const auto n = points.empty() ? 0 : points.front().size();
  for (Eigen::Index i = 0; i < n; ++i) os << 'x' << (i + 1) << ',';
  os << "stratum,t\n";
  // Shortest representation that reads back to the same double.
  auto put = [&os](double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    os.write(buf, res.ptr - buf);
  };
  for (std::size_t p = 0; p < points.size(); ++p) {
    for (Eigen::Index i = 0; i < n; ++i) {
      put(points[p][i]);
      os << ',';
    }
    os << format_indices(strata[p]) << ',';
    put(t);
    os << '\n';
  }
}

// ---------------------------------------------------------------------------------------
// Trisection check

std::vector<std::string> TrisectionVerdict::failed() const {
  std::vector<std::string> out;
  for (const auto& c : checklist) {
    if (!c.passed) out.push_back(c.name);
  }
  return out;
}

namespace {

std::string describe_counts(const std::map<int, int>& counts) {
  if (counts.empty()) return "no critical points";
  std::ostringstream os;
  bool first = true;
  for (const auto& [index, count] : counts) {
    os << (first ? "" : ", ") << count << " of index " << index;
    first = false;
  }
  return os.str();
}

}  // namespace

TrisectionVerdict trisection_check(const std::vector<CriticalPointRecord>& records, int manifold_dimension,
                                   int selection_count, int degenerate_sets, int budget) {
  TrisectionVerdict v;
  auto check = [&](std::string name, bool passed, std::string detail) {
    v.checklist.push_back({std::move(name), passed, std::move(detail)});
    return passed;
  };
  std::ostringstream ev;
  ev << "no counterexample found under budget " << budget << " starts per active set";
  v.evidence = ev.str();

  bool ok = check("manifold dimension is 4", manifold_dimension == 4,
                  "manifold dimension " + std::to_string(manifold_dimension) + (manifold_dimension == 4 ? "" : " != 4"));
  ok = check("three selection functions", selection_count == 3,
             std::to_string(selection_count) + " selection functions") && ok;
  int degenerate_records = 0;
  for (const auto& r : records) degenerate_records += !r.nondegenerate();
  ok = check("all critical points nondegenerate", degenerate_records == 0 && degenerate_sets == 0,
             std::to_string(degenerate_records) + " degenerate records, " + std::to_string(degenerate_sets) +
                 " non-isolated critical sets") &&
       ok;
  if (!ok) {
    v.evidence = "hypotheses not met";
    return v;
  }

  for (const IndexSet& j : nonempty_subsets(3)) v.index_counts[format_indices(j)];
  for (const auto& r : records) v.index_counts[format_indices(r.indices)][*r.nondegeneracy.quadratic_index]++;

  std::vector<int> ks, gs;
  for (const IndexSet& j : nonempty_subsets(3)) {
    if (j.size() == 3) continue;
    const bool regular = j.size() == 1;
    const int top = regular ? 4 : 3;
    const int second = top - 1;
    const std::string label = format_indices(j);
    const auto& counts = v.index_counts[label];
    const auto get = [&](int idx) {
      const auto it = counts.find(idx);
      return it == counts.end() ? 0 : it->second;
    };
    int others = 0;
    for (const auto& [idx, c] : counts) {
      if (idx != top && idx != second) others += c;
    }
    const std::string detail = "M_{" + label + "}: " + describe_counts(counts);
    ok = check("M_{" + label + "} has a single critical point of index " + std::to_string(top), get(top) == 1, detail) &&
         ok;
    ok = check("M_{" + label + "} has no critical points besides indices " + std::to_string(second) + " and " +
                   std::to_string(top),
               others == 0, detail) &&
         ok;
    (regular ? ks : gs).push_back(get(second));
  }
  const auto join = [](const std::vector<int>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + std::to_string(xs[i]);
    return s;
  };
  const bool k_agree = std::adjacent_find(ks.begin(), ks.end(), std::not_equal_to<>()) == ks.end();
  const bool g_agree = std::adjacent_find(gs.begin(), gs.end(), std::not_equal_to<>()) == gs.end();
  ok = check("index-3 counts agree on the regular strata (k)", k_agree, "counts " + join(ks)) && ok;
  ok = check("index-2 counts agree on the two-index strata (g)", g_agree, "counts " + join(gs)) && ok;
  if (k_agree && g_agree) {
    ok = check("g >= k", gs.front() >= ks.front(),
               "g = " + std::to_string(gs.front()) + ", k = " + std::to_string(ks.front())) &&
         ok;
  }
  v.applies = ok;
  if (ok) {
    v.g = gs.front();
    v.k = ks.front();
  } else {
    v.evidence = "hypotheses not met";
  }
  return v;
}

// ---------------------------------------------------------------------------------------
// Handle census

int HandleCensus::count(HandleKind kind, int total_index) const {
  for (const auto& c : counts) {
    if (c.kind == kind && c.total_index == total_index) return c.count;
  }
  return 0;
}

std::vector<HandleCount> handle_template(int g, int k) {
  std::vector<HandleCount> t = {
      {HandleKind::Smooth, 3, 3 * k},    {HandleKind::Smooth, 4, 3},   {HandleKind::Bisected, 2, 3 * g},
      {HandleKind::Bisected, 3, 3},      {HandleKind::Trisected, 0, 1}, {HandleKind::Trisected, 1, 2 * g},
      {HandleKind::Trisected, 2, 1},
  };
  t.erase(std::remove_if(t.begin(), t.end(), [](const HandleCount& c) { return c.count == 0; }), t.end());
  return t;
}

HandleCensus handle_census(const std::vector<CriticalPointRecord>& records, const TrisectionVerdict* trisection) {
  HandleCensus out;
  std::map<std::pair<int, int>, int> counts;
  // (kind, index) -> stratum mask -> count, for the orbit comparison.
  std::map<std::pair<int, int>, std::map<std::uint32_t, int>> per_stratum;
  int selections = 0;
  for (const auto& r : records) {
    for (int i : r.indices) selections = std::max(selections, i + 1);
    if (!r.handle) {
      ++out.unclassified;
      continue;
    }
    const std::pair<int, int> key{static_cast<int>(r.handle->kind), r.handle->total_index};
    ++counts[key];
    ++per_stratum[key][mask_of(r.indices)];
  }
  for (const auto& [key, c] : counts) out.counts.push_back({static_cast<HandleKind>(key.first), key.second, c});

  out.applicable = !records.empty();
  if (!out.applicable) {
    out.verdict = "not applicable";
    return out;
  }

  out.symmetric = out.unclassified == 0;
  if (out.unclassified > 0) out.asymmetries.push_back(std::to_string(out.unclassified) + " records without a handle class");
  for (const auto& [key, strata] : per_stratum) {
    const auto kind = static_cast<HandleKind>(key.first);
    if (kind != HandleKind::Smooth && kind != HandleKind::Bisected) continue;
    const std::size_t size = kind == HandleKind::Smooth ? 1 : 2;
    const std::string label = std::string(to_string(kind)) + "-" + std::to_string(key.second);
    const int total = counts[key];
    if (total % 3 != 0) {
      out.symmetric = false;
      out.asymmetries.push_back(label + ": count " + std::to_string(total) + " not divisible by 3");
    }
    std::vector<int> orbit;
    std::string detail;
    for (const IndexSet& j : nonempty_subsets(selections)) {
      if (j.size() != size) continue;
      const auto it = strata.find(mask_of(j));
      orbit.push_back(it == strata.end() ? 0 : it->second);
      detail += (detail.empty() ? "" : ", ") + format_indices(j) + ": " + std::to_string(orbit.back());
    }
    if (std::adjacent_find(orbit.begin(), orbit.end(), std::not_equal_to<>()) != orbit.end()) {
      out.symmetric = false;
      out.asymmetries.push_back(label + ": unequal across strata (" + detail + ")");
    }
  }
  out.verdict = out.symmetric ? "symmetric" : "asymmetric";

  if (trisection && trisection->applies) {
    out.template_compared = true;
    out.expected = handle_template(trisection->g, trisection->k);
    std::map<std::pair<int, int>, int> expected;
    for (const auto& c : out.expected) expected[{static_cast<int>(c.kind), c.total_index}] = c.count;
    std::map<std::pair<int, int>, int> keys = expected;
    for (const auto& [key, c] : counts) keys[key];
    for (const auto& [key, unused] : keys) {
      const int want = expected.count(key) ? expected.at(key) : 0;
      const int have = counts.count(key) ? counts.at(key) : 0;
      if (want != have) {
        out.mismatches.push_back(std::string(to_string(static_cast<HandleKind>(key.first))) + "-" +
                                 std::to_string(key.second) + ": expected " + std::to_string(want) + ", found " +
                                 std::to_string(have));
      }
    }
    if (out.unclassified > 0) out.mismatches.push_back(std::to_string(out.unclassified) + " unclassified records");
    out.matches_template = out.mismatches.empty();
  } else {
    out.mismatches.push_back("no (g,k) available: trisection hypotheses not met");
  }
  return out;
}

}  // namespace csmorse

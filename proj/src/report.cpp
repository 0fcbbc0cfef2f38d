#include "csmorse/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "csmorse/errors.hpp"

namespace csmorse {

namespace {

Json vector_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json indices_json(const IndexSet& j) {
  Json a = Json::array();
  for (int i : j) a.push_back(i + 1);
  return a;
}

// Non-finite numbers become null.
Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

std::string fiber_file_name(double t) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), t);
  return "fiber_" + std::string(buf, res.ptr) + ".csv";
}

std::vector<double> scenario_levels(const Scenario& sc, const std::vector<double>& critical_values) {
  std::vector<double> levels = sc.fiber_levels;
  if (sc.fiber_grid > 0) {
    const auto grid = grid_levels(critical_values, sc.fiber_grid);
    levels.insert(levels.end(), grid.begin(), grid.end());
  }
  return levels;
}

std::vector<FiberCensus> run_fibers(const Scenario& sc, const std::vector<double>& levels,
                                    const std::vector<double>& critical_values) {
  const CSFunction f = sc.function();
  const Manifold m = sc.manifold();
  std::optional<std::pair<double, double>> range;
  if (!critical_values.empty()) range = std::make_pair(critical_values.front(), critical_values.back());
  std::vector<FiberCensus> out;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    out.push_back(fiber_census(f, m, levels[i], sc.fibers, critical_values, range, static_cast<int>(i)));
  }
  return out;
}

AnalysisResult analyze(const Scenario& sc) {
  const CSFunction f = sc.function();
  const Manifold m = sc.manifold();
  AnalysisResult r;
  r.cs = validate_cs(f, m, sc.cs_probes, sc.seed, sc.threads);
  r.census = stratum_census(f, m, sc.census);
  r.search = find_critical_points(f, m, sc.search);
  r.critical_values = critical_values(r.search.records, r.search.degenerate_sets);

  // A compact manifold attains min and max of f at critical points, so sampled values
  // outside the critical range mean the search missed a critical point.
  if (!r.critical_values.empty() && std::isfinite(r.census.f_min)) {
    const double lo = r.critical_values.front(), hi = r.critical_values.back();
    const double slack = 1e-7 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
    if (r.census.f_min < lo - slack || r.census.f_max > hi + slack) {
      throw ConsistencyError("sampled values of f leave the range of the critical values [" + std::to_string(lo) +
                             ", " + std::to_string(hi) + "]");
    }
  }

  r.trisection = trisection_check(r.search.records, m.dimension(), f.size(),
                                  static_cast<int>(r.search.degenerate_sets.size()), sc.search.starts_per_subset);
  r.handles = handle_census(r.search.records, &r.trisection);

  if (!r.cs.ok()) r.morse_failures.push_back("continuous selection condition violated");
  if (!r.search.degenerate_sets.empty()) {
    r.morse_failures.push_back(std::to_string(r.search.degenerate_sets.size()) + " non-isolated critical sets");
  }
  int degenerate = 0;
  for (const auto& rec : r.search.records) degenerate += !rec.nondegenerate();
  if (degenerate > 0) r.morse_failures.push_back(std::to_string(degenerate) + " degenerate critical points");
  r.cs_morse = r.morse_failures.empty();

  const auto levels = scenario_levels(sc, r.critical_values);
  if (!levels.empty()) r.fibers = run_fibers(sc, levels, r.critical_values);
  return r;
}

Json critical_point_json(const CriticalPointRecord& r) {
  Json nd = {
      {"nd1", r.nondegeneracy.nd1_ok},
      {"nd2", r.nondegeneracy.nd2_ok},
      {"quadratic_index", r.nondegeneracy.quadratic_index ? Json(*r.nondegeneracy.quadratic_index) : Json(nullptr)},
      {"hat_tangent_dim", r.nondegeneracy.hat_tangent_dim},
      {"restricted_hessian_eigenvalues", vector_json(r.nondegeneracy.restricted_hessian_eigenvalues)},
  };
  Json handle = nullptr;
  if (r.handle) {
    handle = {{"kind", to_string(r.handle->kind)},
              {"total_index", r.handle->total_index},
              {"k", r.handle->k_param},
              {"m", r.handle->m_param}};
  }
  return {{"stratum", format_indices(r.indices)},
          {"indices", indices_json(r.indices)},
          {"x", vector_json(r.x)},
          {"value", r.value},
          {"lambda", vector_json(r.lambda)},
          {"mu", vector_json(r.mu)},
          {"min_norm", r.min_norm},
          {"boundary_multiplier", r.boundary_multiplier},
          {"nondegeneracy", nd},
          {"handle", handle},
          {"cluster_size", r.cluster_size},
          {"residual", r.residual}};
}

Json census_json(const StratumCensus& c) {
  Json strata = Json::array();
  for (const auto& s : c.strata) {
    strata.push_back({{"stratum", format_indices(s.indices)},
                      {"indices", indices_json(s.indices)},
                      {"sample_count", s.sample_count},
                      {"targeted_count", s.targeted_count},
                      {"expected_dimension", s.expected_dimension},
                      {"dimension", s.dimension ? Json(*s.dimension) : Json("insufficient data")},
                      {"pca_tested", s.pca_tested},
                      {"pca_agreeing", s.pca_agreeing},
                      {"median_eigen_gap", number(s.median_gap)},
                      {"f_min", number(s.f_min)},
                      {"f_max", number(s.f_max)}});
  }
  Json frontier = Json::array();
  for (const auto& e : c.frontier) {
    frontier.push_back({{"upper", format_indices(e.upper)},
                        {"lower", format_indices(e.lower)},
                        {"observations", e.observations}});
  }
  return {{"samples", c.samples},
          {"manifold_dimension", c.dimension},
          {"f_min", number(c.f_min)},
          {"f_max", number(c.f_max)},
          {"skeleton", c.skeleton},
          {"strata", strata},
          {"frontier", frontier}};
}

Json fiber_json(const FiberCensus& fc) {
  Json stability = Json::array();
  for (const auto& [factor, count] : fc.stability) stability.push_back({{"eps_factor", factor}, {"components", count}});
  Json strata = Json::array();
  for (const auto& [j, count] : fc.stratum_counts) strata.push_back({{"stratum", format_indices(j)}, {"count", count}});
  return {{"level", fc.level},
          {"regular", fc.is_regular},
          {"samples", fc.samples},
          {"candidates", fc.candidates},
          {"spacing", fc.spacing},
          {"median_nn", fc.median_nn},
          {"eps", fc.eps},
          {"components", fc.components},
          {"stability", stability},
          {"stable", fc.stable},
          {"stratum_counts", strata},
          {"points_file", fiber_file_name(fc.level)}};
}

Json trisection_json(const TrisectionVerdict& v) {
  Json checklist = Json::array();
  for (const auto& c : v.checklist) checklist.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  Json counts = Json::object();
  for (const auto& [stratum, by_index] : v.index_counts) {
    Json inner = Json::object();
    for (const auto& [index, count] : by_index) inner[std::to_string(index)] = count;
    counts[stratum] = inner;
  }
  return {{"applies", v.applies},
          {"g", v.applies ? Json(v.g) : Json(nullptr)},
          {"k", v.applies ? Json(v.k) : Json(nullptr)},
          {"evidence", v.evidence},
          {"checklist", checklist},
          {"index_counts", counts}};
}

Json handle_census_json(const HandleCensus& h) {
  auto table = [](const std::vector<HandleCount>& counts) {
    Json a = Json::array();
    for (const auto& c : counts) a.push_back({{"kind", to_string(c.kind)}, {"total_index", c.total_index}, {"count", c.count}});
    return a;
  };
  return {{"applicable", h.applicable},
          {"counts", table(h.counts)},
          {"unclassified", h.unclassified},
          {"template",
           {{"compared", h.template_compared},
            {"matches", h.matches_template},
            {"expected", table(h.expected)},
            {"mismatches", h.mismatches}}},
          {"symmetry", {{"verdict", h.verdict}, {"symmetric", h.symmetric}, {"asymmetries", h.asymmetries}}}};
}

Json report_json(const Scenario& sc, const AnalysisResult& r) {
  Json violations = Json::array();
  for (const auto& v : r.cs.violations) {
    violations.push_back({{"x", vector_json(v.x)},
                          {"stratum", format_indices(v.indices)},
                          {"smallest_singular", v.smallest_singular}});
  }
  Json validation = {{"cs",
                      {{"ok", r.cs.ok()},
                       {"probes", r.cs.probes},
                       {"multi_active", r.cs.multi_active},
                       {"violation_count", r.cs.violation_count},
                       {"worst_conditioning", number(r.cs.worst_conditioning)},
                       {"violations", violations}}},
                     {"cs_morse", r.cs_morse},
                     {"morse_failures", r.morse_failures}};

  Json points = Json::array();
  for (const auto& rec : r.search.records) points.push_back(critical_point_json(rec));
  Json flags = Json::array();
  for (const auto& d : r.search.degenerate_sets) {
    Json reps = Json::array();
    for (const auto& x : d.representatives) reps.push_back(vector_json(x));
    flags.push_back({{"stratum", format_indices(d.indices)},
                     {"indices", indices_json(d.indices)},
                     {"value", d.value},
                     {"diameter", d.diameter},
                     {"member_count", d.member_count},
                     {"representatives", reps}});
  }
  Json fibers = Json::array();
  for (const auto& fc : r.fibers) fibers.push_back(fiber_json(fc));

  Json subsets = Json::array();
  for (const auto& d : r.search.diagnostics) {
    Json discarded = Json::object();
    for (const auto& [reason, count] : d.discarded) discarded[reason] = count;
    subsets.push_back({{"stratum", format_indices(d.indices)},
                       {"starts", d.starts},
                       {"converged", d.converged},
                       {"accepted", d.accepted},
                       {"discarded", discarded}});
  }
  Json diagnostics = {{"seed", sc.seed},
                      {"search",
                       {{"starts_per_subset", sc.search.starts_per_subset},
                        {"raw_solutions", r.search.raw.size()},
                        {"subsets", subsets}}},
                      {"tolerances",
                       {{"active_tol", sc.active_tol},
                        {"crit_tol", sc.tol.crit_tol},
                        {"nd2_tol", sc.tol.nd2_tol},
                        {"on_manifold_tol", sc.on_manifold_tol},
                        {"dedupe_radius", sc.search.dedupe_radius},
                        {"degenerate_cluster_diameter", sc.search.degenerate_cluster_diameter}}}};

  Json scenario = {{"name", sc.name},
                   {"dimension", sc.dimension},
                   {"manifold_dimension", sc.dimension - static_cast<int>(sc.constraints.size())},
                   {"selector", to_string(sc.selector)},
                   {"constraints", sc.constraints},
                   {"selections", sc.selections},
                   {"box", {{"lower", vector_json(sc.box.lower)}, {"upper", vector_json(sc.box.upper)}}}};

  return {{"format", "csmorse-report"},
          {"version", 1},
          {"scenario", scenario},
          {"validation", validation},
          {"stratum_census", census_json(r.census)},
          {"critical_points", points},
          {"degenerate_sets", flags},
          {"critical_values", r.critical_values},
          {"handle_census", handle_census_json(r.handles)},
          {"trisection", trisection_json(r.trisection)},
          {"fibers", fibers},
          {"diagnostics", diagnostics}};
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace csmorse

#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>

#include "csmorse/errors.hpp"
#include "csmorse/search.hpp"
#include "support/problems.hpp"

using namespace csmorse;
using namespace csmorse::testing;

namespace {

// All coordinate permutations of the first three entries of a point of R^n.
std::vector<Eigen::VectorXd> orbit3(const Eigen::VectorXd& p) {
  std::vector<Eigen::VectorXd> out;
  std::array<int, 3> perm{0, 1, 2};
  do {
    Eigen::VectorXd q = p;
    for (int i = 0; i < 3; ++i) q[i] = p[perm[static_cast<std::size_t>(i)]];
    if (std::none_of(out.begin(), out.end(), [&](const Eigen::VectorXd& r) { return (r - q).norm() < 1e-12; })) {
      out.push_back(q);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

// Each expected point is matched by exactly one record within `tol`, and nothing else is found.
void check_point_set(const std::vector<CriticalPointRecord>& records, const std::vector<Eigen::VectorXd>& expected,
                     double tol = 1e-8) {
  CHECK(records.size() == expected.size());
  for (const auto& e : expected) {
    const auto hits = std::count_if(records.begin(), records.end(),
                                    [&](const CriticalPointRecord& r) { return (r.x - e).norm() <= tol; });
    CHECK_MESSAGE(hits == 1, "expected point ", e.transpose());
  }
}

std::vector<Eigen::VectorXd> s4_expected() {
  std::vector<Eigen::VectorXd> pts{vec({-kInvSqrt3, -kInvSqrt3, -kInvSqrt3, 0, 0}),
                                   vec({kInvSqrt3, kInvSqrt3, kInvSqrt3, 0, 0})};
  for (const auto& q : orbit3(vec({kInvSqrt2, kInvSqrt2, 0, 0, 0}))) pts.push_back(q);
  for (const auto& q : orbit3(vec({1, 0, 0, 0, 0}))) pts.push_back(q);
  return pts;
}

SearchConfig config(std::uint64_t seed = 1, int threads = 4) {
  SearchConfig cfg;
  cfg.seed = seed;
  cfg.threads = threads;
  return cfg;
}

}  // namespace

TEST_CASE("kkt_residual") {
  const auto p = s4_max3();
  const IndexSet j{0, 1, 2};
  const Eigen::VectorXd x = vec({-kInvSqrt3, -kInvSqrt3, -kInvSqrt3, 0, 0});
  const Eigen::VectorXd lambda = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
  const Eigen::VectorXd mu = Eigen::VectorXd::Constant(1, 0.5 * kInvSqrt3);
  const Eigen::VectorXd r = kkt_residual(p.function, p.manifold, j, x, lambda, mu);
  CHECK(r.size() == 5 + 2 + 1 + 1);
  CHECK(r.cwiseAbs().maxCoeff() <= 1e-12);

  const Eigen::VectorXd e1 = vec({1, 0, 0, 0, 0});
  CHECK(kkt_residual(p.function, p.manifold, {0}, e1, vec({1}), vec({-0.5})).cwiseAbs().maxCoeff() <= 1e-12);

  const Eigen::VectorXd y = x + 1e-3 * vec({1, -2, 0.5, 1, -1}).normalized();
  const double perturbed = kkt_residual(p.function, p.manifold, j, y, lambda, mu).norm();
  CHECK(perturbed >= 1e-4);
  CHECK(perturbed <= 1e-1);

  const Eigen::VectorXd zero = kkt_residual(p.function, p.manifold, j, x, Eigen::VectorXd::Zero(3), mu);
  CHECK(zero[zero.size() - 1] == -1.0);

  CHECK_THROWS_AS(kkt_residual(p.function, p.manifold, j, x, vec({1}), mu), ValidationError);
}

TEST_CASE("S^4 example: eight nondegenerate critical points") {
  const auto p = s4_max3();
  const SearchResult r = find_critical_points(p.function, p.manifold, config());
  check_point_set(r.records, s4_expected());
  CHECK(r.degenerate_sets.empty());
  for (const auto& rec : r.records) {
    CHECK(rec.nondegenerate());
    CHECK(rec.residual <= 1e-9);
    CHECK(rec.min_norm <= 1e-8);
    CHECK(p.function.stratum_of(rec.x) == rec.indices);
    CHECK(p.manifold.contains(rec.x));
    CHECK(std::abs(rec.lambda.sum() - 1.0) <= 1e-10);
  }
  const auto values = critical_values(r.records, r.degenerate_sets);
  REQUIRE(values.size() == 4);
  CHECK(std::abs(values[0] + kInvSqrt3) <= 1e-10);
  CHECK(std::abs(values[1] - kInvSqrt3) <= 1e-10);
  CHECK(std::abs(values[2] - kInvSqrt2) <= 1e-10);
  CHECK(std::abs(values[3] - 1.0) <= 1e-10);

  // Handle classes by stratum size.
  for (const auto& rec : r.records) {
    REQUIRE(rec.handle.has_value());
    switch (rec.indices.size()) {
      case 1: CHECK(rec.handle->total_index == 4); break;
      case 2: CHECK(rec.handle->total_index == 3); break;
      case 3: CHECK(rec.handle->total_index == (rec.value < 0 ? 0 : 2)); break;
    }
  }
}

TEST_CASE("records are sorted canonically") {
  const auto p = s4_max3();
  const SearchResult r = find_critical_points(p.function, p.manifold, config());
  CHECK(std::is_sorted(r.records.begin(), r.records.end(), record_less));
  CHECK(r.records.front().indices.size() == 1);
  CHECK(r.records.back().indices.size() == 3);
}

TEST_CASE("the record set is stable under doubling the start budget") {
  const auto p = s4_max3();
  SearchConfig cfg = config(3);
  const auto a = find_critical_points(p.function, p.manifold, cfg).records;
  cfg.starts_per_subset *= 2;
  const auto b = find_critical_points(p.function, p.manifold, cfg).records;
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].indices == b[i].indices);
    CHECK((a[i].x - b[i].x).norm() <= 1e-8);
  }
}

TEST_CASE("the record set is invariant under permuting x1, x2, x3") {
  const auto p = s4_max3();
  const auto recs = find_critical_points(p.function, p.manifold, config(5)).records;
  for (const auto& rec : recs) {
    for (const auto& q : orbit3(rec.x)) {
      CHECK(std::any_of(recs.begin(), recs.end(), [&](const CriticalPointRecord& r) { return (r.x - q).norm() <= 1e-8; }));
    }
  }
}

TEST_CASE("results do not depend on the thread count") {
  const auto p = s4_max3();
  const auto a = find_critical_points(p.function, p.manifold, config(7, 1));
  const auto b = find_critical_points(p.function, p.manifold, config(7, 8));
  REQUIRE(a.raw.size() == b.raw.size());
  for (std::size_t i = 0; i < a.raw.size(); ++i) CHECK((a.raw[i].x.array() == b.raw[i].x.array()).all());
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) CHECK((a.records[i].x.array() == b.records[i].x.array()).all());
}

TEST_CASE("linear example on S^3: four critical points") {
  const auto p = s3_linear();
  const SearchResult r = find_critical_points(p.function, p.manifold, config());
  check_point_set(r.records, {vec({-kInvSqrt2, -kInvSqrt2, 0, 0}), vec({kInvSqrt2, kInvSqrt2, 0, 0}),
                              vec({1, 0, 0, 0}), vec({0, 1, 0, 0})});
  CHECK(r.degenerate_sets.empty());
  const auto values = critical_values(r.records);
  REQUIRE(values.size() == 3);
  CHECK(std::abs(values[0] + kInvSqrt2) <= 1e-10);
  CHECK(std::abs(values[1] - kInvSqrt2) <= 1e-10);
  CHECK(std::abs(values[2] - 1.0) <= 1e-10);
}

TEST_CASE("quadratic example on S^3: non-isolated critical sets are flagged") {
  const auto p = s3_quadratic();
  const SearchResult r = find_critical_points(p.function, p.manifold, config());
  // No nondegenerate critical point on the middle fiber.
  for (const auto& rec : r.records) CHECK(std::abs(rec.value - 0.5) > 1e-6);
  const auto middle = std::count_if(r.degenerate_sets.begin(), r.degenerate_sets.end(), [](const DegeneracyFlag& d) {
    return d.indices == IndexSet{0, 1} && std::abs(d.value - 0.5) <= 1e-9;
  });
  CHECK(middle == 1);
  for (const auto& d : r.degenerate_sets) {
    CHECK(d.diameter > 0.5);
    for (const auto& x : d.representatives) CHECK(criticality(p.function, p.manifold, x).is_critical);
  }
  // The two circles of maxima of f_1 and f_2 (the Hopf link at level 1) are flagged too.
  CHECK(r.degenerate_sets.size() == 3);
}

TEST_CASE("a constructed degenerate function raises a flag") {
  // max{x1^2 + x2^2, x3} on S^3: f_1 restricted to S^3 is maximal along a whole circle.
  const CSFunction f = selection({"x1^2+x2^2", "x3"}, 4);
  const Manifold s3 = unit_sphere(4);
  const SearchResult r = find_critical_points(f, s3, config());
  REQUIRE(r.degenerate_sets.size() >= 1);
  CHECK(std::any_of(r.degenerate_sets.begin(), r.degenerate_sets.end(), [](const DegeneracyFlag& d) {
    return d.indices == IndexSet{0} && std::abs(d.value - 1.0) <= 1e-9;
  }));
  for (const auto& d : r.degenerate_sets) {
    for (const auto& x : d.representatives) CHECK(criticality(f, s3, x).is_critical);
  }
}

TEST_CASE("no flags on the S^4 example") {
  const auto p = s4_max3();
  const auto r = find_critical_points(p.function, p.manifold, config(11));
  CHECK(detect_degenerate_sets(r.raw, config()).empty());
}

TEST_CASE("bridge example on S^2") {
  const auto p = s2_bridge();
  const SearchResult r = find_critical_points(p.function, p.manifold, config());
  std::vector<Eigen::VectorXd> expected{vec({kInvSqrt3, kInvSqrt3, kInvSqrt3}), vec({-kInvSqrt3, -kInvSqrt3, -kInvSqrt3})};
  for (const auto& q : orbit3(vec({kInvSqrt2, kInvSqrt2, 0}))) expected.push_back(q);
  for (const auto& q : orbit3(vec({1, 0, 0}))) expected.push_back(q);
  check_point_set(r.records, expected);
  for (const auto& rec : r.records) {
    REQUIRE(rec.handle.has_value());
    if (rec.indices.size() == 2) CHECK(rec.handle->total_index == 1);
    if (rec.indices.size() == 1) CHECK(rec.handle->total_index == 2);
    // M_123 is zero-dimensional on S^2, so both triple points have an empty hat tangent space.
    if (rec.indices.size() == 3) CHECK(rec.nondegeneracy.hat_tangent_dim == 0);
  }
}

TEST_CASE("min selector on S^4") {
  const auto p = s4_min3();
  const SearchResult r = find_critical_points(p.function, p.manifold, config());
  std::vector<Eigen::VectorXd> expected;
  for (const auto& e : s4_expected()) expected.push_back(-e);
  check_point_set(r.records, expected);
  for (const auto& rec : r.records) {
    REQUIRE(rec.handle.has_value());
    CHECK(rec.handle->k_param == static_cast<int>(rec.indices.size()) - 1);
    CHECK(rec.handle->total_index == rec.handle->m_param + rec.handle->k_param);
    switch (rec.indices.size()) {
      case 1: CHECK(rec.handle->total_index == 0); break;
      case 2: CHECK(rec.handle->total_index == 1); break;
      case 3: CHECK(rec.handle->total_index == (rec.value < 0 ? 2 : 4)); break;
    }
  }
}

TEST_CASE("critical_values merges and sorts") {
  CHECK(critical_values({}).empty());
  std::vector<CriticalPointRecord> recs(3);
  recs[0].value = 1.0;
  recs[1].value = -0.5;
  recs[2].value = 1.0 + 1e-12;
  DegeneracyFlag d;
  d.value = 0.25;
  CHECK(critical_values(recs, {d}) == std::vector<double>{-0.5, 0.25, 1.0});
}

TEST_CASE("search configuration is validated") {
  const auto p = s4_max3();
  SearchConfig cfg;
  cfg.starts_per_subset = 0;
  CHECK_THROWS_AS(find_critical_points(p.function, p.manifold, cfg), ValidationError);
  cfg = {};
  cfg.dedupe_radius = 0.0;
  CHECK_THROWS_AS(find_critical_points(p.function, p.manifold, cfg), ValidationError);
}

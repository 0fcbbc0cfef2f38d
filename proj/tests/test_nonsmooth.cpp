#include <doctest.h>

#include <cmath>

#include "csmorse/errors.hpp"
#include "csmorse/nonsmooth.hpp"
#include "csmorse/random.hpp"
#include "support/oracles.hpp"
#include "support/problems.hpp"

using namespace csmorse;
using namespace csmorse::testing;

namespace {

Eigen::MatrixXd cols(std::initializer_list<Eigen::VectorXd> vs) {
  Eigen::MatrixXd m(vs.begin()->size(), static_cast<Eigen::Index>(vs.size()));
  Eigen::Index k = 0;
  for (const auto& v : vs) m.col(k++) = v;
  return m;
}

// Full nondegeneracy report at x for the computed active set.
NondegeneracyReport report_at(const Problem& p, const Eigen::VectorXd& x) {
  const auto v = criticality(p.function, p.manifold, x);
  REQUIRE(v.is_critical);
  return quadratic_index(p.function, p.manifold, x, v);
}

}  // namespace

TEST_CASE("min_norm_in_hull small cases") {
  const auto a = min_norm_in_hull(cols({vec({1, 0})}));
  CHECK(a.lambda[0] == 1.0);
  CHECK(a.norm == 1.0);

  const auto b = min_norm_in_hull(cols({vec({1, 0}), vec({-1, 0})}));
  CHECK(b.lambda[0] == doctest::Approx(0.5));
  CHECK(b.norm <= 1e-15);

  const auto c = min_norm_in_hull(cols({vec({1, 0}), vec({0, 1})}));
  CHECK(c.lambda[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(c.norm == doctest::Approx(kInvSqrt2).epsilon(1e-12));
  Eigen::VectorXd grid_lambda;
  CHECK(grid_min_norm(cols({vec({1, 0}), vec({0, 1})}), 1e-4, &grid_lambda) == doctest::Approx(c.norm).epsilon(1e-8));
  CHECK(grid_lambda[0] == doctest::Approx(0.5).epsilon(1e-4));

  // Minimum at a vertex and on an edge of a triangle.
  const auto d = min_norm_in_hull(cols({vec({1, 1}), vec({2, 3}), vec({3, 1})}));
  CHECK(d.lambda[0] == doctest::Approx(1.0));
  CHECK(d.norm == doctest::Approx(std::sqrt(2.0)));

  // Duplicates and zero vectors.
  const auto e = min_norm_in_hull(cols({vec({1, 2}), vec({1, 2}), vec({1, 2})}));
  CHECK(e.lambda.sum() == doctest::Approx(1.0));
  CHECK(e.norm == doctest::Approx(std::sqrt(5.0)));
  CHECK(min_norm_in_hull(cols({vec({0, 0}), vec({1, 0})})).norm == 0.0);

  CHECK_THROWS_AS(min_norm_in_hull(std::vector<Eigen::VectorXd>{}), ValidationError);
}

TEST_CASE("min_norm_in_hull agrees with a simplex grid on random sets") {
  Rng rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    const int dim = 2 + trial % 4;
    const int k = 2 + (trial / 4) % 2;
    Eigen::MatrixXd v(dim, k);
    for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = rng.normal();
    // Half the sets inside the unit ball, where a grid of step h is accurate to h.
    if (trial % 2) {
      for (int c = 0; c < k; ++c) v.col(c) *= rng.uniform01() / v.col(c).norm();
    }
    // Shift some sets so the hull contains the origin.
    if (trial % 3 == 0) v.col(k - 1) = -v.leftCols(k - 1).rowwise().sum();
    const auto r = min_norm_in_hull(v);
    CHECK(std::abs(r.lambda.sum() - 1.0) <= 1e-10);
    CHECK(r.lambda.minCoeff() >= -1e-12);
    CHECK(r.gap <= 1e-10);
    CHECK((v * r.lambda - r.point).norm() <= 1e-12);
    const double grid = grid_min_norm(v, 1e-3);
    CHECK(r.norm <= grid + 1e-12);
    // A grid point lies within h of the optimal weights in each coordinate.
    CHECK(grid - r.norm <= 1e-3 * std::max(1.0, v.colwise().norm().sum()));
    if (trial % 2) CHECK(grid - r.norm <= 1e-3);
    // Zero minimum norm iff the grid comes within 1e-2 of the origin (up to the grid's
    // resolution, a small positive minimum also passes the grid test).
    if (r.norm <= 1e-9) CHECK(grid <= 1e-2);
    if (grid > 1e-2) CHECK(r.norm > 1e-9);
    if (trial % 3 == 0) CHECK(r.norm <= 1e-9);
  }
}

TEST_CASE("min_norm_in_hull scales linearly") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd v(4, 3);
    for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = rng.normal();
    const auto a = min_norm_in_hull(v);
    const auto b = min_norm_in_hull(Eigen::MatrixXd(3.5 * v));
    CHECK(b.norm == doctest::Approx(3.5 * a.norm).epsilon(1e-9));
    CHECK((a.lambda - b.lambda).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("criticality on the S^4 example") {
  const auto p = s4_max3();
  const auto tri = criticality(p.function, p.manifold, vec({-kInvSqrt3, -kInvSqrt3, -kInvSqrt3, 0, 0}));
  CHECK(tri.is_critical);
  CHECK(tri.indices == IndexSet{0, 1, 2});
  for (int i = 0; i < 3; ++i) CHECK(tri.lambda[i] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  // sum lambda_i e_i + mu * 2x = 0  =>  mu = 1 / (2 sqrt 3)
  CHECK(tri.mu[0] == doctest::Approx(0.5 * kInvSqrt3).epsilon(1e-12));

  const auto smooth = criticality(p.function, p.manifold, vec({1, 0, 0, 0, 0}));
  CHECK(smooth.is_critical);
  CHECK(smooth.lambda.size() == 1);
  CHECK(smooth.lambda[0] == 1.0);
  CHECK(smooth.mu[0] == doctest::Approx(-0.5));

  const Eigen::VectorXd generic = project_to_manifold(p.manifold, vec({0.9, 0.1, 0.1, 0.2, 0.2}));
  const auto off = criticality(p.function, p.manifold, generic);
  CHECK_FALSE(off.is_critical);
  CHECK(off.min_norm > 0.01);
  // The recorded min-norm value is recomputable from lambda.
  const Eigen::MatrixXd b = tangent_basis(p.manifold, generic).basis;
  CHECK((b.transpose() * Eigen::VectorXd::Unit(5, 0)).norm() == doctest::Approx(off.min_norm).epsilon(1e-9));
}

TEST_CASE("criticality is invariant under positive scaling") {
  const auto p = s4_max3();
  const CSFunction scaled({3.0 * Expression::parse("x1", 5), 3.0 * Expression::parse("x2", 5),
                           3.0 * Expression::parse("x3", 5)},
                          Selector::Max);
  for (const auto& x : sample_points(p.manifold, 200, 4)) {
    const auto a = criticality(p.function, p.manifold, x);
    const auto b = criticality(scaled, p.manifold, x);
    CHECK(a.is_critical == b.is_critical);
    CHECK(b.min_norm == doctest::Approx(3.0 * a.min_norm).epsilon(1e-9));
    CHECK((a.lambda - b.lambda).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("ND1") {
  const auto p = s4_max3();
  for (const auto& x : sample_stratum(p.function, p.manifold, {0, 1, 2}, 50, 8)) {
    CHECK(check_nd1(p.function, p.manifold, x, {0, 1, 2}).ok);
  }
  CHECK(check_nd1(p.function, p.manifold, vec({1, 0, 0, 0, 0}), {0}).ok);

  // max{x1, x1} at its critical point e1: the leave-one-out set {P e1} vanishes.
  const Manifold s3 = unit_sphere(4);
  const auto dup = selection({"x1", "x1"}, 4);
  const auto r = check_nd1(dup, s3, vec({1, 0, 0, 0}), {0, 1});
  CHECK_FALSE(r.ok);
}

TEST_CASE("quadratic index on the S^4 example") {
  const auto p = s4_max3();
  const auto low = report_at(p, vec({-kInvSqrt3, -kInvSqrt3, -kInvSqrt3, 0, 0}));
  CHECK(low.hat_tangent_dim == 2);
  CHECK(low.quadratic_index == 0);
  const auto high = report_at(p, vec({kInvSqrt3, kInvSqrt3, kInvSqrt3, 0, 0}));
  CHECK(high.hat_tangent_dim == 2);
  CHECK(high.quadratic_index == 2);
  const auto edge = report_at(p, vec({kInvSqrt2, 0, kInvSqrt2, 0, 0}));
  CHECK(edge.hat_tangent_dim == 3);
  CHECK(edge.quadratic_index == 3);
  const auto top = report_at(p, vec({0, 1, 0, 0, 0}));
  CHECK(top.hat_tangent_dim == 4);
  CHECK(top.quadratic_index == 4);
}

TEST_CASE("the quadratic example is degenerate on its middle fiber") {
  const auto p = s3_quadratic();
  for (const auto& x : sample_stratum(p.function, p.manifold, {0, 1}, 30, 12)) {
    CHECK(p.function.value(x) == doctest::Approx(0.5).epsilon(1e-10));
    const auto v = criticality(p.function, p.manifold, x);
    CHECK(v.is_critical);
    const auto r = quadratic_index(p.function, p.manifold, x, v);
    CHECK_FALSE(r.nd2_ok);
    CHECK_FALSE(r.quadratic_index.has_value());
  }
}

TEST_CASE("quadratic index requires a critical point") {
  const auto p = s4_max3();
  const Eigen::VectorXd x = project_to_manifold(p.manifold, vec({0.9, 0.1, 0.1, 0.2, 0.2}));
  CHECK_THROWS_AS(quadratic_index(p.function, p.manifold, x, criticality(p.function, p.manifold, x)),
                  ValidationError);
}

TEST_CASE("handle classes") {
  NondegeneracyReport nd;
  nd.nd1_ok = nd.nd2_ok = true;
  nd.quadratic_index = 0;
  auto h = classify_handle(Selector::Max, 4, 3, nd);
  CHECK(h.kind == HandleKind::Trisected);
  CHECK(h.total_index == 0);

  nd.quadratic_index = 3;
  h = classify_handle(Selector::Max, 4, 2, nd);
  CHECK(h.kind == HandleKind::Bisected);
  CHECK(h.total_index == 3);

  nd.quadratic_index = 0;
  h = classify_handle(Selector::Min, 4, 3, nd);
  CHECK(h.total_index == 2);
  CHECK(h.k_param == 2);
  CHECK(h.m_param == 0);

  nd.quadratic_index = 3;
  CHECK_THROWS_AS(classify_handle(Selector::Max, 4, 3, nd), ConsistencyError);
  nd.quadratic_index = 4;
  CHECK_THROWS_AS(classify_handle(Selector::Max, 4, 2, nd), ConsistencyError);
  nd.quadratic_index.reset();
  CHECK_THROWS_AS(classify_handle(Selector::Max, 4, 1, nd), ValidationError);
}

TEST_CASE("min selector handle indices from the restricted Hessian") {
  const auto p = s4_min3();
  const auto low = report_at(p, vec({-kInvSqrt3, -kInvSqrt3, -kInvSqrt3, 0, 0}));
  auto h = classify_handle(Selector::Min, 4, 3, low);
  CHECK(h.m_param == 0);
  CHECK(h.k_param == 2);
  CHECK(h.total_index == 2);

  const auto high = report_at(p, vec({kInvSqrt3, kInvSqrt3, kInvSqrt3, 0, 0}));
  h = classify_handle(Selector::Min, 4, 3, high);
  CHECK(h.m_param == 2);
  CHECK(h.total_index == 4);

  const auto bottom = report_at(p, vec({0, 0, -1, 0, 0}));
  CHECK(classify_handle(Selector::Min, 4, 1, bottom).total_index == 0);
}

TEST_CASE("quadratic index matches the Morse index of the restriction to the stratum") {
  struct Case {
    Problem p;
    Eigen::VectorXd x;
  };
  std::vector<Case> cases{
      {s4_max3(), vec({-kInvSqrt3, -kInvSqrt3, -kInvSqrt3, 0, 0})},
      {s4_max3(), vec({kInvSqrt3, kInvSqrt3, kInvSqrt3, 0, 0})},
      {s4_max3(), vec({0, kInvSqrt2, kInvSqrt2, 0, 0})},
      {s4_max3(), vec({0, 0, 1, 0, 0})},
      {s4_min3(), vec({kInvSqrt3, kInvSqrt3, kInvSqrt3, 0, 0})},
      {s4_min3(), vec({-kInvSqrt2, -kInvSqrt2, 0, 0, 0})},
      {s3_linear(), vec({-kInvSqrt2, -kInvSqrt2, 0, 0})},
      {s3_linear(), vec({1, 0, 0, 0})},
      {s2_bridge(), vec({kInvSqrt2, kInvSqrt2, 0})},
  };
  for (const auto& c : cases) {
    const auto& f = c.p.function;
    const auto v = criticality(f, c.p.manifold, c.x);
    REQUIRE(v.is_critical);
    const auto nd = quadratic_index(f, c.p.manifold, c.x, v);
    REQUIRE(nd.quadratic_index.has_value());

    const auto eq = stratum_equations(f, c.p.manifold, v.indices);
    auto h = [&](const Eigen::VectorXd& y) {
      Eigen::VectorXd r(static_cast<Eigen::Index>(eq.size()));
      for (std::size_t k = 0; k < eq.size(); ++k) r[static_cast<Eigen::Index>(k)] = eq[k].eval(y);
      return r;
    };
    auto dh = [&](const Eigen::VectorXd& y) {
      Eigen::MatrixXd d(static_cast<Eigen::Index>(eq.size()), y.size());
      for (std::size_t k = 0; k < eq.size(); ++k) d.row(static_cast<Eigen::Index>(k)) = eq[k].eval_jet1(y).gradient;
      return d;
    };
    auto fn = [&](const Eigen::VectorXd& y) { return f.selection(v.indices[0]).eval(y); };
    const Eigen::VectorXd ev = chart_hessian_eigenvalues(fn, h, dh, c.x);
    CHECK(ev.size() == nd.hat_tangent_dim);
    CHECK((ev.array() < 0.0).count() == *nd.quadratic_index);
    // Same spectrum, not only the same signs.
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
      CHECK(ev[i] == doctest::Approx(nd.restricted_hessian_eigenvalues[i]).epsilon(1e-4));
    }
  }
}

TEST_CASE("single active gradients vanish on the stratum tangent space at critical points") {
  const auto p = s4_max3();
  for (const auto& x : {vec({-kInvSqrt3, -kInvSqrt3, -kInvSqrt3, 0, 0}), vec({kInvSqrt2, kInvSqrt2, 0, 0, 0})}) {
    const IndexSet j = p.function.stratum_of(x);
    const Eigen::MatrixXd t = stratum_tangent_basis(p.function, p.manifold, x, j);
    for (int i : j) CHECK((t.transpose() * p.function.selection(i).eval_jet1(x).gradient).norm() <= 1e-7);
  }
}

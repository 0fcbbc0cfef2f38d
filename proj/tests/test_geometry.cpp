#include <doctest.h>

#include <cmath>

#include "csmorse/errors.hpp"
#include "csmorse/geometry.hpp"

using namespace csmorse;

namespace {

Manifold sphere(int n) {
  std::string g;
  for (int i = 1; i <= n; ++i) g += (i > 1 ? "+x" : "x") + std::to_string(i) + "^2";
  g += "-1";
  return Manifold(n, {Expression::parse(g, n)},
                  {Eigen::VectorXd::Constant(n, -1.5), Eigen::VectorXd::Constant(n, 1.5)});
}

void check_basis(const Manifold& m, const TangentBasis& tb) {
  const Eigen::MatrixXd& b = tb.basis;
  REQUIRE(b.cols() == m.dimension());
  const Eigen::MatrixXd gram = b.transpose() * b;
  CHECK((gram - Eigen::MatrixXd::Identity(b.cols(), b.cols())).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((m.jacobian(tb.point) * b).cwiseAbs().maxCoeff() <= 1e-10);
}

}  // namespace

TEST_CASE("radial projection onto spheres") {
  const Manifold s4 = sphere(5);
  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(5);
  x0[0] = 2.0;
  const Eigen::VectorXd p = project_to_manifold(s4, x0);
  CHECK((p - Eigen::VectorXd::Unit(5, 0)).norm() <= 1e-10);

  const Manifold s3 = sphere(4);
  Eigen::Vector4d y0(1, 1, 0, 0);
  const Eigen::VectorXd q = project_to_manifold(s3, y0);
  const double r = 1.0 / std::sqrt(2.0);
  CHECK((q - Eigen::Vector4d(r, r, 0, 0)).norm() <= 1e-10);
  CHECK(s3.contains(q));
}

TEST_CASE("projection from a singular point fails") {
  const Manifold s3 = sphere(4);
  try {
    project_to_manifold(s3, Eigen::VectorXd::Zero(4));
    FAIL("expected a geometry error");
  } catch (const GeometryError& e) {
    CHECK((e.kind() == GeometryError::Kind::RankDeficient || e.kind() == GeometryError::Kind::NonConvergence));
  }
  CHECK_THROWS_AS(project_to_manifold(s3, Eigen::VectorXd::Constant(4, 10.0)), GeometryError);
}

TEST_CASE("tangent bases") {
  const Manifold s3 = sphere(4);
  const TangentBasis a = tangent_basis(s3, Eigen::VectorXd::Unit(4, 0));
  check_basis(s3, a);
  // Spans {e2, e3, e4}: no component along e1.
  CHECK(a.basis.row(0).cwiseAbs().maxCoeff() <= 1e-12);

  const Manifold s4 = sphere(5);
  const TangentBasis b = tangent_basis(s4, Eigen::VectorXd::Unit(5, 4));
  check_basis(s4, b);
  CHECK(b.basis.row(4).cwiseAbs().maxCoeff() <= 1e-12);

  for (const auto& x : sample_points(s4, 50, 3)) check_basis(s4, tangent_basis(s4, x));

  CHECK_THROWS_AS(tangent_basis(s4, Eigen::VectorXd::Zero(5)), GeometryError);
}

TEST_CASE("tangent basis of a codimension-two manifold") {
  // Clifford-type torus in R^4.
  const Manifold t(4, {Expression::parse("x1^2+x2^2-0.5", 4), Expression::parse("x3^2+x4^2-0.5", 4)},
                   {Eigen::VectorXd::Constant(4, -1.0), Eigen::VectorXd::Constant(4, 1.0)});
  const auto pts = sample_points(t, 40, 11);
  REQUIRE(pts.size() == 40);
  for (const auto& x : pts) {
    CHECK(t.residual(x).cwiseAbs().maxCoeff() <= 1e-10);
    check_basis(t, tangent_basis(t, x));
  }
}

TEST_CASE("sampling") {
  const Manifold s3 = sphere(4);
  const auto pts = sample_points(s3, 1000, 7);
  REQUIRE(pts.size() == 1000);
  for (const auto& x : pts) {
    CHECK(std::abs(x.squaredNorm() - 1.0) <= 1e-10);
    CHECK(s3.contains(x));
  }
  CHECK(sample_points(s3, 0, 7).empty());

  const auto again = sample_points(s3, 1000, 7, 4);
  bool identical = again.size() == pts.size();
  for (std::size_t i = 0; identical && i < pts.size(); ++i) identical = (pts[i].array() == again[i].array()).all();
  CHECK(identical);

  const auto other = sample_points(s3, 10, 8);
  CHECK((other[0] - pts[0]).norm() > 0.0);

  CHECK_THROWS_AS(sample_points(s3, -1, 7), ValidationError);
}

TEST_CASE("manifold validation") {
  const BoundingBox box{Eigen::VectorXd::Constant(2, -1.0), Eigen::VectorXd::Constant(2, 1.0)};
  CHECK_THROWS_AS(Manifold(2, {Expression::parse("x1", 3)}, box), ValidationError);
  CHECK_THROWS_AS(Manifold(2, {}, {Eigen::VectorXd::Constant(2, 1.0), Eigen::VectorXd::Constant(2, 1.0)}),
                  ValidationError);
  CHECK_THROWS_AS(Manifold(2, {}, box, 0.0), ValidationError);
  // No constraints: the manifold is the box region of R^n.
  const Manifold flat(2, {}, box);
  CHECK(flat.dimension() == 2);
  CHECK(flat.contains(Eigen::Vector2d(0.3, 0.4)));
}

TEST_CASE("solve_level_set reports status without throwing") {
  const std::vector<Expression> eq{Expression::parse("log(x1)", 1)};
  const auto bad = solve_level_set(eq, Eigen::VectorXd::Constant(1, -1.0));
  CHECK(bad.status == SolveStatus::DomainError);
  const auto good = solve_level_set(eq, Eigen::VectorXd::Constant(1, 2.0));
  CHECK(good.ok());
  CHECK(std::abs(good.x[0] - 1.0) <= 1e-10);
}

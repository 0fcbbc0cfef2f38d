#include <doctest.h>

#include <filesystem>

#include "csmorse/scenario.hpp"

using namespace csmorse;

namespace {

const std::string kMinimal = R"(name = "circle"
dimension = 2
constraints = ["x1^2 + x2^2 - 1"]
selections = ["x1", "x2"]
)";

ScenarioError error_of(const std::string& text) {
  try {
    parse_scenario(text);
  } catch (const ScenarioError& e) {
    return e;
  }
  FAIL("expected a scenario error");
  return ScenarioError("unreachable");
}

}  // namespace

TEST_CASE("minimal scenario and defaults") {
  const Scenario sc = parse_scenario(kMinimal);
  CHECK(sc.name == "circle");
  CHECK(sc.dimension == 2);
  CHECK(sc.selector == Selector::Max);
  CHECK(sc.box.lower.isApprox(Eigen::Vector2d(-2, -2)));
  CHECK(sc.box.upper.isApprox(Eigen::Vector2d(2, 2)));
  CHECK(sc.seed == 0);
  CHECK(sc.threads == 1);
  CHECK(sc.fiber_levels.empty());
  CHECK(sc.manifold().dimension() == 1);
  CHECK(sc.function().size() == 2);
}

TEST_CASE("all blocks are read") {
  const Scenario sc = parse_scenario(kMinimal + R"(selector = "min"
seed = 7
threads = 3

[box]
lower = [-1, -1.5]
upper = 1.5

[tolerances]
active_tol = 1e-9
crit_tol = 2e-8
nd2_tol = 3e-7
on_manifold_tol = 1e-11

[search]
starts_per_subset = 17
dedupe_radius = 1e-5

[validation]
cs_probes = 11

[census]
samples = 123
pca_points = 4

[fibers]
samples = 99
levels = [0, 0.5]
grid = 2
)");
  CHECK(sc.selector == Selector::Min);
  CHECK(sc.box.lower[1] == -1.5);
  CHECK(sc.box.upper[0] == 1.5);
  CHECK(sc.active_tol == 1e-9);
  CHECK(sc.tol.crit_tol == 2e-8);
  CHECK(sc.search.tol.nd2_tol == 3e-7);
  CHECK(sc.on_manifold_tol == 1e-11);
  CHECK(sc.search.starts_per_subset == 17);
  CHECK(sc.search.dedupe_radius == 1e-5);
  CHECK(sc.cs_probes == 11);
  CHECK(sc.census.samples == 123);
  CHECK(sc.census.pca_points == 4);
  CHECK(sc.fibers.samples == 99);
  CHECK(sc.fiber_levels == std::vector<double>{0.0, 0.5});
  CHECK(sc.fiber_grid == 2);
  // Seed and threads reach every module.
  CHECK(sc.search.seed == 7);
  CHECK(sc.census.seed == 7);
  CHECK(sc.fibers.seed == 7);
  CHECK(sc.census.threads == 3);
}

TEST_CASE("overrides propagate") {
  Scenario sc = parse_scenario(kMinimal);
  sc.set_seed(42);
  sc.set_threads(4);
  CHECK(sc.search.seed == 42);
  CHECK(sc.fibers.seed == 42);
  CHECK(sc.search.threads == 4);
  CHECK(sc.fibers.threads == 4);
}

TEST_CASE("syntax errors carry a position") {
  const auto e = error_of("name = \"x\"\ndimension = \n");
  CHECK(e.line() == 2);
  CHECK(e.column() > 0);
}

TEST_CASE("expression errors point into the string") {
  const auto e = error_of(R"(name = "x"
dimension = 3
constraints = ["x1^2+x2^2+x3^2-1"]
selections = ["x1", "x2 +* x3"]
)");
  CHECK(e.line() == 4);
  // Opening quote at column 21; the offending '*' sits at offset 4 of the text.
  CHECK(e.column() == 26);
  CHECK(e.reason().find("selections") != std::string::npos);
}

TEST_CASE("variables beyond the dimension are rejected") {
  const auto e = error_of(R"(name = "x"
dimension = 2
constraints = ["x1^2+x2^2-1"]
selections = ["x3"]
)");
  CHECK(e.line() == 4);
}

TEST_CASE("structural validation") {
  SUBCASE("unknown key") {
    const auto e = error_of(kMinimal + "colour = 1\n");
    CHECK(e.line() == 5);
    CHECK(e.reason().find("colour") != std::string::npos);
  }
  SUBCASE("unknown key in a block") {
    const auto e = error_of(kMinimal + "[search]\nstarts = 3\n");
    CHECK(e.line() == 6);
    CHECK(e.reason().find("search.starts") != std::string::npos);
  }
  SUBCASE("missing name") { CHECK_THROWS_AS(parse_scenario("dimension = 2\n"), ScenarioError); }
  SUBCASE("bad selector") { CHECK(error_of(kMinimal + "selector = \"mid\"\n").line() == 5); }
  SUBCASE("non-positive tolerance") { CHECK(error_of(kMinimal + "[tolerances]\ncrit_tol = 0\n").line() == 6); }
  SUBCASE("empty selections") {
    CHECK_THROWS_AS(parse_scenario("name='a'\ndimension=2\nconstraints=['x1']\nselections=[]\n"), ScenarioError);
  }
  SUBCASE("too many constraints") {
    CHECK_THROWS_AS(parse_scenario("name='a'\ndimension=1\nconstraints=['x1']\nselections=['x1']\n"), ScenarioError);
  }
  SUBCASE("box of wrong length") { CHECK_THROWS_AS(parse_scenario(kMinimal + "[box]\nlower = [0]\n"), ScenarioError); }
  SUBCASE("inverted box") { CHECK_THROWS_AS(parse_scenario(kMinimal + "[box]\nlower = 1\nupper = 0\n"), ScenarioError); }
  SUBCASE("wrong type") { CHECK(error_of(kMinimal + "seed = \"one\"\n").line() == 5); }
  SUBCASE("negative seed") { CHECK_THROWS_AS(parse_scenario(kMinimal + "seed = -1\n"), ScenarioError); }
}

TEST_CASE("missing file") {
  CHECK_THROWS_AS(load_scenario("/nonexistent/scenario.toml"), ScenarioError);
}

TEST_CASE("shipped fixtures load") {
  const std::filesystem::path dir(CSMORSE_FIXTURE_DIR);
  for (const char* name : {"s4_max3", "s4_min3", "s3_linear", "s3_quadratic", "s2_bridge"}) {
    CAPTURE(name);
    const Scenario sc = load_scenario(dir / (std::string(name) + ".toml"));
    CHECK(sc.name == name);
    CHECK(sc.seed == 1);
  }
}

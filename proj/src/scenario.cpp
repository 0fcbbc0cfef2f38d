#include "csmorse/scenario.hpp"

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace csmorse {

ScenarioError::ScenarioError(const std::string& message, int line, int column)
    : ValidationError(line > 0 ? "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message
                               : message),
      reason_(message),
      line_(line),
      column_(column) {}

namespace {

[[noreturn]] void fail(const std::string& message, const toml::node* at) {
  if (at) {
    const auto& pos = at->source().begin;
    throw ScenarioError(message, static_cast<int>(pos.line), static_cast<int>(pos.column));
  }
  throw ScenarioError(message);
}

class Block {
 public:
  Block(const toml::table& table, std::string prefix) : table_(table), prefix_(std::move(prefix)) {}

  const toml::node* node(const std::string& key) {
    seen_.insert(key);
    return table_.get(key);
  }

  std::string qualified(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

  std::string string(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    const toml::node* n = node(key);
    if (!n) {
      if (fallback) return *fallback;
      fail("missing required key '" + qualified(key) + "'", &table_);
    }
    if (auto v = n->value<std::string>()) return *v;
    fail("'" + qualified(key) + "' must be a string", n);
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback, std::int64_t min = 0, bool required = false) {
    const toml::node* n = node(key);
    if (!n) {
      if (required) fail("missing required key '" + qualified(key) + "'", &table_);
      return fallback;
    }
    if (!n->is_integer()) fail("'" + qualified(key) + "' must be an integer", n);
    const std::int64_t v = **n->as_integer();
    if (v < min) fail("'" + qualified(key) + "' must be at least " + std::to_string(min), n);
    return v;
  }

  double number(const toml::node& n, const std::string& what) {
    if (n.is_integer()) return static_cast<double>(**n.as_integer());
    if (n.is_floating_point()) return **n.as_floating_point();
    fail("'" + what + "' must be a number", &n);
  }

  double positive(const std::string& key, double fallback) {
    const toml::node* n = node(key);
    if (!n) return fallback;
    const double v = number(*n, qualified(key));
    if (!(v > 0.0) || !std::isfinite(v)) fail("'" + qualified(key) + "' must be positive", n);
    return v;
  }

  std::vector<std::string> strings(const std::string& key, bool required, bool nonempty) {
    const toml::node* n = node(key);
    if (!n) {
      if (required) fail("missing required key '" + qualified(key) + "'", &table_);
      return {};
    }
    const toml::array* arr = n->as_array();
    if (!arr) fail("'" + qualified(key) + "' must be an array of strings", n);
    if (nonempty && arr->empty()) fail("'" + qualified(key) + "' must not be empty", n);
    std::vector<std::string> out;
    for (const toml::node& e : *arr) {
      auto v = e.value<std::string>();
      if (!v) fail("'" + qualified(key) + "' must contain strings only", &e);
      out.push_back(*v);
    }
    return out;
  }

  std::vector<double> numbers(const std::string& key) {
    const toml::node* n = node(key);
    if (!n) return {};
    const toml::array* arr = n->as_array();
    if (!arr) fail("'" + qualified(key) + "' must be an array of numbers", n);
    std::vector<double> out;
    for (const toml::node& e : *arr) {
      const double v = number(e, qualified(key));
      if (!std::isfinite(v)) fail("'" + qualified(key) + "' entries must be finite", &e);
      out.push_back(v);
    }
    return out;
  }

  Block sub(const std::string& key) {
    const toml::node* n = node(key);
    if (!n) return Block(empty_, qualified(key));
    const toml::table* t = n->as_table();
    if (!t) fail("'" + qualified(key) + "' must be a table", n);
    return Block(*t, qualified(key));
  }

  void reject_unknown() const {
    for (const auto& [k, v] : table_) {
      const std::string key(k.str());
      if (!seen_.count(key)) fail("unknown key '" + qualified(key) + "'", &v);
    }
  }

  const toml::table& table() const { return table_; }

 private:
  static inline const toml::table empty_{};
  const toml::table& table_;
  std::string prefix_;
  std::set<std::string> seen_;
};

Eigen::VectorXd box_side(Block& b, const std::string& key, int n, double fallback) {
  const toml::node* node = b.node(key);
  if (!node) return Eigen::VectorXd::Constant(n, fallback);
  if (node->is_number()) return Eigen::VectorXd::Constant(n, b.number(*node, b.qualified(key)));
  const toml::array* arr = node->as_array();
  if (!arr || static_cast<int>(arr->size()) != n) {
    fail("'" + b.qualified(key) + "' must be a number or an array of " + std::to_string(n) + " numbers", node);
  }
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = b.number(*arr->get(static_cast<std::size_t>(i)), b.qualified(key));
  return v;
}

// Checks every expression against the dimension, pointing at the offending array entry.
void check_expressions(const toml::table& root, const std::string& key, int n) {
  const toml::array* arr = root.get_as<toml::array>(key);
  if (!arr) return;
  for (const toml::node& e : *arr) {
    const std::string src = *e.value<std::string>();
    try {
      Expression::parse(src, n);
    } catch (const ParseError& err) {
      const auto& pos = e.source().begin;
      std::string what = err.what();
      throw ScenarioError("invalid expression in '" + key + "': " + what, static_cast<int>(pos.line),
                          static_cast<int>(pos.column) + 1 + static_cast<int>(err.offset()));
    }
  }
}

}  // namespace

Manifold Scenario::manifold() const {
  std::vector<Expression> g;
  for (const auto& s : constraints) g.push_back(Expression::parse(s, dimension));
  return Manifold(dimension, std::move(g), box, on_manifold_tol);
}

CSFunction Scenario::function() const {
  std::vector<Expression> e;
  for (const auto& s : selections) e.push_back(Expression::parse(s, dimension));
  return CSFunction(std::move(e), selector, active_tol);
}

void Scenario::set_seed(std::uint64_t s) {
  seed = s;
  search.seed = s;
  census.seed = s;
  fibers.seed = s;
}

void Scenario::set_threads(int t) {
  threads = std::max(1, t);
  search.threads = threads;
  census.threads = threads;
  fibers.threads = threads;
}

Scenario parse_scenario(std::string_view text, const std::string& source_name) {
  toml::table root;
  try {
    root = toml::parse(text, source_name);
  } catch (const toml::parse_error& err) {
    const auto& pos = err.source().begin;
    throw ScenarioError(std::string(err.description()), static_cast<int>(pos.line), static_cast<int>(pos.column));
  }

  Scenario sc;
  Block top(root, "");
  sc.name = top.string("name");
  sc.dimension = static_cast<int>(top.integer("dimension", 0, 1, true));
  const std::string selector = top.string("selector", std::string("max"));
  if (selector == "max") {
    sc.selector = Selector::Max;
  } else if (selector == "min") {
    sc.selector = Selector::Min;
  } else {
    fail("'selector' must be \"max\" or \"min\"", top.node("selector"));
  }
  sc.constraints = top.strings("constraints", true, true);
  sc.selections = top.strings("selections", true, true);
  if (sc.selections.size() > 16) fail("at most 16 selections are supported", top.node("selections"));
  if (static_cast<int>(sc.constraints.size()) >= sc.dimension) {
    fail("need fewer constraints than the ambient dimension", top.node("constraints"));
  }
  const auto seed = top.integer("seed", 0, 0);
  const auto threads = top.integer("threads", 1, 1);

  Block box = top.sub("box");
  sc.box.lower = box_side(box, "lower", sc.dimension, -2.0);
  sc.box.upper = box_side(box, "upper", sc.dimension, 2.0);
  if (((sc.box.upper - sc.box.lower).array() <= 0.0).any()) fail("box must have lower < upper", &box.table());
  box.reject_unknown();

  Block tol = top.sub("tolerances");
  sc.active_tol = tol.positive("active_tol", sc.active_tol);
  sc.tol.crit_tol = tol.positive("crit_tol", sc.tol.crit_tol);
  sc.tol.nd2_tol = tol.positive("nd2_tol", sc.tol.nd2_tol);
  sc.on_manifold_tol = tol.positive("on_manifold_tol", sc.on_manifold_tol);
  tol.reject_unknown();

  Block search = top.sub("search");
  sc.search.starts_per_subset = static_cast<int>(search.integer("starts_per_subset", sc.search.starts_per_subset, 1));
  sc.search.dedupe_radius = search.positive("dedupe_radius", sc.search.dedupe_radius);
  sc.search.degenerate_cluster_diameter =
      search.positive("degenerate_cluster_diameter", sc.search.degenerate_cluster_diameter);
  sc.search.link_radius = search.positive("link_radius", sc.search.link_radius);
  sc.search.newton_max_iter = static_cast<int>(search.integer("newton_max_iter", sc.search.newton_max_iter, 1));
  sc.search.newton_tol = search.positive("newton_tol", sc.search.newton_tol);
  sc.search.tol = sc.tol;
  search.reject_unknown();

  Block validation = top.sub("validation");
  sc.cs_probes = static_cast<int>(validation.integer("cs_probes", sc.cs_probes, 1));
  validation.reject_unknown();

  Block census = top.sub("census");
  sc.census.samples = static_cast<int>(census.integer("samples", sc.census.samples, 1));
  sc.census.targeted = static_cast<int>(census.integer("targeted", sc.census.targeted, 0));
  sc.census.min_samples = static_cast<int>(census.integer("min_samples", sc.census.min_samples, 1));
  sc.census.pca_points = static_cast<int>(census.integer("pca_points", sc.census.pca_points, 1));
  sc.census.pca_neighbors = static_cast<int>(census.integer("pca_neighbors", sc.census.pca_neighbors, 2));
  sc.census.pca_radius = census.positive("pca_radius", sc.census.pca_radius);
  sc.census.eigen_gap = census.positive("eigen_gap", sc.census.eigen_gap);
  sc.census.frontier_points = static_cast<int>(census.integer("frontier_points", sc.census.frontier_points, 0));
  census.reject_unknown();

  Block fibers = top.sub("fibers");
  sc.fibers.samples = static_cast<int>(fibers.integer("samples", sc.fibers.samples, 2));
  sc.fibers.candidate_factor = static_cast<int>(fibers.integer("candidate_factor", sc.fibers.candidate_factor, 1));
  sc.fibers.eps_factor = fibers.positive("eps_factor", sc.fibers.eps_factor);
  sc.fiber_levels = fibers.numbers("levels");
  sc.fiber_grid = static_cast<int>(fibers.integer("grid", 0, 0));
  fibers.reject_unknown();

  top.reject_unknown();
  check_expressions(root, "constraints", sc.dimension);
  check_expressions(root, "selections", sc.dimension);

  sc.set_seed(static_cast<std::uint64_t>(seed));
  sc.set_threads(static_cast<int>(threads));
  // Build once so that structural problems surface as validation errors here.
  try {
    (void)sc.manifold();
    (void)sc.function();
  } catch (const ValidationError& err) {
    throw ScenarioError(err.what());
  }
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioError("cannot read scenario file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.string());
}

}  // namespace csmorse

// csmorse command-line tool: analyze, fibers, check-derivatives.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "csmorse/derivcheck.hpp"
#include "csmorse/errors.hpp"
#include "csmorse/report.hpp"
#include "csmorse/scenario.hpp"

namespace fs = std::filesystem;
using namespace csmorse;

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 2;
constexpr int kConsistency = 3;

struct Common {
  std::string file;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

void emit_error(const std::string& kind, const std::string& message, std::optional<int> line = std::nullopt,
                std::optional<int> column = std::nullopt) {
  Json err = {{"kind", kind}, {"message", message}};
  if (line) err["line"] = *line;
  if (column) err["column"] = *column;
  std::cerr << Json{{"error", err}}.dump() << "\n";
}

Scenario load(const Common& c) {
  Scenario sc = load_scenario(c.file);
  if (c.seed) sc.set_seed(*c.seed);
  if (c.threads) sc.set_threads(*c.threads);
  return sc;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

int cmd_analyze(const Common& c) {
  const Scenario sc = load(c);
  const AnalysisResult r = analyze(sc);
  const fs::path dir(c.out);
  ensure_dir(dir);
  write_file(dir / "report.json", dump(report_json(sc, r)));
  write_file(dir / "schema.json", report_schema());
  for (const auto& fc : r.fibers) {
    std::ostringstream csv;
    write_points_csv(csv, fc.points, fc.point_strata, fc.level);
    write_file(dir / fiber_file_name(fc.level), csv.str());
  }
  if (!r.cs.ok()) {
    emit_error("validation", "continuous selection condition violated at " + std::to_string(r.cs.violation_count) +
                                 " probes; report written");
    return kValidation;
  }
  std::cout << "critical points: " << r.search.records.size() << ", critical values: " << r.critical_values.size()
            << ", cs_morse: " << (r.cs_morse ? "true" : "false") << "\n";
  return kOk;
}

std::vector<double> parse_levels(const std::string& text) {
  std::vector<double> levels;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || !std::isfinite(v)) throw ValidationError("invalid level '" + item + "'");
    levels.push_back(v);
  }
  if (levels.empty()) throw ValidationError("no levels given");
  return levels;
}

int cmd_fibers(const Common& c, const std::string& levels_text, int grid) {
  const Scenario sc = load(c);
  const CSFunction f = sc.function();
  const Manifold m = sc.manifold();
  const SearchResult search = find_critical_points(f, m, sc.search);
  const auto cv = critical_values(search.records, search.degenerate_sets);
  const std::vector<double> levels = grid > 0 ? grid_levels(cv, grid) : parse_levels(levels_text);
  const auto fibers = run_fibers(sc, levels, cv);

  const fs::path dir(c.out);
  ensure_dir(dir);
  Json summary = Json::array();
  for (const auto& fc : fibers) {
    std::ostringstream csv;
    write_points_csv(csv, fc.points, fc.point_strata, fc.level);
    write_file(dir / fiber_file_name(fc.level), csv.str());
    summary.push_back(fiber_json(fc));
  }
  const Json doc = {{"scenario", sc.name}, {"critical_values", cv}, {"fibers", summary}};
  write_file(dir / "fibers.json", dump(doc));
  for (const auto& fc : fibers) {
    std::cout << "t = " << fc.level << ": " << fc.components << " component" << (fc.components == 1 ? "" : "s")
              << (fc.is_regular ? " (regular)" : " (critical)") << (fc.stable ? "" : " [unstable]") << "\n";
  }
  return kOk;
}

int cmd_check_derivatives(const Common& c) {
  const Scenario sc = load(c);
  const DerivativeReport rep = check_derivatives(sc);
  std::cout << std::left << std::setw(6) << "expr" << std::setw(8) << "points" << std::setw(14) << "grad err"
            << std::setw(14) << "hess err" << "result\n";
  for (const auto& row : rep.rows) {
    std::ostringstream g, h;
    g << std::scientific << std::setprecision(2) << row.gradient_error;
    h << std::scientific << std::setprecision(2) << row.hessian_error;
    std::cout << std::setw(6) << row.label << std::setw(8) << row.points << std::setw(14) << g.str() << std::setw(14)
              << h.str() << (row.passed ? "pass" : "FAIL") << "\n";
    for (const auto& w : row.warnings) std::cout << "      warning: " << w << "\n";
  }
  if (!rep.passed()) {
    emit_error("consistency", "derivative check failed: relative error above " + std::to_string(rep.tolerance));
    return kConsistency;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonsmooth Morse analysis of continuous selections on constraint manifolds"};
  app.require_subcommand(1);

  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("file", common.file, "Scenario file (TOML)")->required();
    sub->add_option("--seed", common.seed, "Override the scenario seed");
    sub->add_option("--threads", common.threads, "Worker threads")->check(CLI::PositiveNumber);
  };

  CLI::App* analyze_cmd = app.add_subcommand("analyze", "Full analysis; writes report.json and schema.json");
  add_common(analyze_cmd);
  analyze_cmd->add_option("--out", common.out, "Output directory");

  std::string levels;
  int grid = 0;
  CLI::App* fibers_cmd = app.add_subcommand("fibers", "Fiber point clouds and component counts");
  add_common(fibers_cmd);
  fibers_cmd->add_option("--out", common.out, "Output directory");
  auto* levels_opt = fibers_cmd->add_option("--levels", levels, "Comma-separated levels");
  auto* grid_opt = fibers_cmd->add_option("--grid", grid, "Number of levels between critical values")
                       ->check(CLI::PositiveNumber);
  levels_opt->excludes(grid_opt);

  CLI::App* deriv_cmd = app.add_subcommand("check-derivatives", "Compare derivatives with finite differences");
  add_common(deriv_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    emit_error("usage", e.what());
    return kValidation;
  }

  try {
    if (*analyze_cmd) return cmd_analyze(common);
    if (*fibers_cmd) {
      if (levels_opt->count() == 0 && grid_opt->count() == 0) throw ValidationError("fibers needs --levels or --grid");
      return cmd_fibers(common, levels, grid);
    }
    return cmd_check_derivatives(common);
  } catch (const ScenarioError& e) {
    if (e.line() > 0) {
      emit_error("validation", e.reason(), e.line(), e.column());
    } else {
      emit_error("validation", e.reason());
    }
    return kValidation;
  } catch (const ValidationError& e) {
    emit_error("validation", e.what());
    return kValidation;
  } catch (const ParseError& e) {
    emit_error("validation", e.what());
    return kValidation;
  } catch (const DomainError& e) {
    emit_error("validation", e.what());
    return kValidation;
  } catch (const GeometryError& e) {
    emit_error("validation", e.what());
    return kValidation;
  } catch (const ConsistencyError& e) {
    emit_error("consistency", e.what());
    return kConsistency;
  } catch (const std::exception& e) {
    emit_error("internal", e.what());
    return kConsistency;
  }
}

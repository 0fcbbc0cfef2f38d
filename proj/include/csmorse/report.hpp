#pragma once

// Whole-scenario analysis and its JSON report. Object keys keep insertion order and all
// lists are in canonical order, so a report is a pure function of scenario and seed.

#include <json.hpp>

#include <string>
#include <vector>

#include "csmorse/scenario.hpp"
#include "csmorse/search.hpp"
#include "csmorse/strata.hpp"

namespace csmorse {

using Json = nlohmann::ordered_json;

struct AnalysisResult {
  CSValidationReport cs;
  StratumCensus census;
  SearchResult search;
  std::vector<double> critical_values;
  TrisectionVerdict trisection;
  HandleCensus handles;
  std::vector<FiberCensus> fibers;
  bool cs_morse = false;
  std::vector<std::string> morse_failures;
};

/// Runs validation, census, critical-point search, trisection check, handle census and the
/// scenario's fiber levels. Throws ConsistencyError when results contradict each other.
AnalysisResult analyze(const Scenario& sc);

/// Levels requested by the scenario: explicit levels first, then grid levels.
std::vector<double> scenario_levels(const Scenario& sc, const std::vector<double>& critical_values);

/// Fiber censuses at the given levels with the range taken from the critical values.
std::vector<FiberCensus> run_fibers(const Scenario& sc, const std::vector<double>& levels,
                                    const std::vector<double>& critical_values);

Json critical_point_json(const CriticalPointRecord& r);
Json census_json(const StratumCensus& c);
Json fiber_json(const FiberCensus& fc);
Json trisection_json(const TrisectionVerdict& v);
Json handle_census_json(const HandleCensus& h);
Json report_json(const Scenario& sc, const AnalysisResult& result);

/// Serialized report text (two-space indent, trailing newline).
std::string dump(const Json& j);

/// JSON Schema (draft 2020-12) of the report document.
const std::string& report_schema();

/// File name for a fiber point cloud: fiber_<t>.csv with the shortest round-trip form of t.
std::string fiber_file_name(double t);

}  // namespace csmorse

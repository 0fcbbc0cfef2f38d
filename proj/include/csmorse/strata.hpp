#pragma once

// Stratification report pieces: stratum census with local-PCA dimensions and observed
// frontier relations, fiber sampling with component counts, the (g,k)-trisection
// hypothesis check and the order-three handle census.

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "csmorse/csfun.hpp"
#include "csmorse/geometry.hpp"
#include "csmorse/nonsmooth.hpp"
#include "csmorse/search.hpp"

namespace csmorse {

// ---------------------------------------------------------------------------------------
// Stratum census

struct CensusOptions {
  int samples = 4000;          // global manifold samples
  int targeted = 200;          // extra points per stratum with |J| >= 2
  int min_samples = 50;        // below this the dimension is not estimated
  int pca_points = 20;         // stratum points whose neighbourhood is analysed
  int pca_neighbors = 20;      // k nearest points of the local cloud
  double pca_radius = 0.01;
  double eigen_gap = 1e3;
  int frontier_points = 20;    // per stratum with |J| >= 2
  double frontier_step = 1e-4;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct StratumStats {
  IndexSet indices;
  int sample_count = 0;    // global samples in the stratum
  int targeted_count = 0;  // points found by solving the stratum equations
  int expected_dimension = 0;
  std::optional<int> dimension;  // empty: insufficient data
  int pca_tested = 0;
  int pca_agreeing = 0;  // tested points whose estimate equals `dimension` with a clear gap
  double median_gap = 0.0;
  double f_min = 0.0;  // over sample and targeted points; NaN without points
  double f_max = 0.0;
};

/// Observation that `upper` (larger index set) lies in the closure of `lower`.
struct FrontierEdge {
  IndexSet upper;
  IndexSet lower;
  int observations = 0;
};

struct StratumCensus {
  int samples = 0;
  int dimension = 0;  // manifold dimension
  std::vector<StratumStats> strata;    // canonical stratum order
  std::vector<FrontierEdge> frontier;  // sorted by (upper, lower)
  /// skeleton[i] = number of global samples in X^i = {x : |I(x)| >= m - i + 1}, i = 0..m.
  std::vector<int> skeleton;
  double f_min = 0.0;
  double f_max = 0.0;

  const StratumStats* find(const IndexSet& j) const;
};

/// Local-PCA dimension of a point cloud: the first position where consecutive covariance
/// eigenvalues drop by at least `gap_threshold`, or the largest drop when none does. `gap`
/// receives that ratio (infinity for an exact gap).
int pca_dimension(const std::vector<Eigen::VectorXd>& cloud, double gap_threshold = 1e3, double* gap = nullptr);

StratumCensus stratum_census(const CSFunction& f, const Manifold& m, const CensusOptions& opts = {});

// ---------------------------------------------------------------------------------------
// Fiber census

struct FiberOptions {
  int samples = 16000;        // target size of the thinned sample before filling
  int candidate_factor = 3;   // raw fiber points drawn per kept point
  int fill_rounds = 10;
  double fill_threshold = 1.5;  // gap marker, in units of the Poisson-disk radius
  double edge_radius = 2.5;     // neighbourhood for the one-sidedness test, same units
  double edge_offset = 1.0;     // mean neighbour offset that marks a hole edge, same units
  double fill_spacing = 0.75;   // minimum distance of inserted midpoints, same units
  int fill_proposals = 6;
  double eps_factor = 3.0;    // eps = factor * median nearest-neighbour distance
  std::vector<double> stability_factors{2.0, 3.0, 4.0};
  double level_tol = 1e-8;    // |f(x) - t| accepted for fiber points
  double merge_tol = 1e-9;    // distance to a critical value below which t is critical
  std::uint64_t seed = 0;
  int threads = 1;
};

struct FiberCensus {
  double level = 0.0;
  int level_index = 0;
  int candidates = 0;
  int samples = 0;
  double spacing = 0.0;  // Poisson-disk radius of the sample
  double median_nn = 0.0;
  double eps = 0.0;
  int components = 0;
  std::vector<std::pair<double, int>> stability;  // (eps factor, components)
  bool stable = false;
  bool is_regular = true;
  std::vector<std::pair<IndexSet, int>> stratum_counts;  // canonical stratum order
  std::vector<Eigen::VectorXd> points;
  std::vector<IndexSet> point_strata;
  std::vector<int> labels;  // component of each point at eps
};

/// Samples f^{-1}(t) and counts its connected components. `range` (min and max of f) turns
/// an empty sample outside it into a ValidationError; an empty sample otherwise raises a
/// GeometryError. `level_index` selects the random stream.
FiberCensus fiber_census(const CSFunction& f, const Manifold& m, double t, const FiberOptions& opts = {},
                         const std::vector<double>& critical_values = {},
                         std::optional<std::pair<double, double>> range = std::nullopt, int level_index = 0);

/// Level placement for `k` levels: spread over the open intervals between consecutive
/// critical values, round robin from the lowest, midpoints of equal sub-intervals.
std::vector<double> grid_levels(const std::vector<double>& critical_values, int k);

/// CSV with header x1..xn,stratum,t; strata as 1-based dash-joined indices, numbers in
/// shortest round-trip form.
void write_points_csv(std::ostream& os, const std::vector<Eigen::VectorXd>& points,
                      const std::vector<IndexSet>& strata, double t);

// ---------------------------------------------------------------------------------------
// Trisection check and handle census

struct HypothesisCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct TrisectionVerdict {
  bool applies = false;
  int g = 0;
  int k = 0;
  std::vector<HypothesisCheck> checklist;
  /// Stratum (1-based label) -> restriction index -> number of critical points.
  std::map<std::string, std::map<int, int>> index_counts;
  std::string evidence;

  std::vector<std::string> failed() const;
};

/// Checks the critical-point profile that makes (cl M_1, cl M_2, cl M_3) a (g,k)-trisection:
/// on each M_{i} one index-4 point, k index-3 points and nothing else; on each M_{ij} one
/// index-3 point, g index-2 points and nothing else. Absence of further critical points is
/// only established up to the search budget, which the evidence string states.
TrisectionVerdict trisection_check(const std::vector<CriticalPointRecord>& records, int manifold_dimension,
                                   int selection_count, int degenerate_sets = 0, int budget = 0);

struct HandleCount {
  HandleKind kind = HandleKind::Smooth;
  int total_index = 0;
  int count = 0;
};

struct HandleCensus {
  std::vector<HandleCount> counts;  // by kind, then index; zero entries omitted
  int unclassified = 0;             // records without a handle class
  bool applicable = false;          // false for an empty record set
  bool template_compared = false;
  bool matches_template = false;
  std::vector<HandleCount> expected;  // template instantiated with (g,k)
  std::vector<std::string> mismatches;
  bool symmetric = false;
  std::vector<std::string> asymmetries;
  std::string verdict;  // "not applicable", "symmetric" or "asymmetric"

  int count(HandleKind kind, int total_index) const;
};

/// The order-three template for a (g,k)-trisection of a 4-manifold.
std::vector<HandleCount> handle_template(int g, int k);

HandleCensus handle_census(const std::vector<CriticalPointRecord>& records,
                           const TrisectionVerdict* trisection = nullptr);

}  // namespace csmorse

#pragma once

// Continuous selections f = max{f_1, ..., f_m} or min{f_1, ..., f_m} and their strata
// M_J = {x in M : I_f(x) = J}.
//
// Index sets are sorted vectors of 0-based selection indices. Reports and CSV files print
// them 1-based and dash-joined ("1-2-3").

#include <Eigen/Core>

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "csmorse/expr.hpp"
#include "csmorse/geometry.hpp"

namespace csmorse {

enum class Selector { Max, Min };

const char* to_string(Selector s);

using IndexSet = std::vector<int>;

/// Bit mask of an index set and back. Masks enumerate the 2^m - 1 nonempty subsets.
std::uint32_t mask_of(const IndexSet& j);
IndexSet indices_of(std::uint32_t mask);
/// "1-2-3"
std::string format_indices(const IndexSet& j);
/// Subsets ordered by size, then lexicographically.
std::vector<IndexSet> nonempty_subsets(int m);
bool stratum_less(const IndexSet& a, const IndexSet& b);

struct ActiveSet {
  IndexSet indices;
  Eigen::VectorXd values;  // all m selection values
  double value = 0.0;      // f(x)
  /// Smallest |f(x) - f_j(x)| over inactive j; infinity when every selection is active.
  double witness_gap = std::numeric_limits<double>::infinity();
  /// witness_gap within 10 x active_tol: the classification is fragile at this point.
  bool near_tie = false;
};

class CSFunction {
 public:
  CSFunction(std::vector<Expression> selections, Selector selector, double active_tol = 1e-8);

  int size() const noexcept { return static_cast<int>(selections_.size()); }
  int dimension() const noexcept { return selections_.front().dimension(); }
  Selector selector() const noexcept { return selector_; }
  double active_tol() const noexcept { return active_tol_; }
  const std::vector<Expression>& selections() const noexcept { return selections_; }
  const Expression& selection(int i) const { return selections_.at(static_cast<std::size_t>(i)); }

  Eigen::VectorXd selection_values(const Eigen::VectorXd& x) const;
  double value(const Eigen::VectorXd& x) const;
  ActiveSet active_set(const Eigen::VectorXd& x) const;
  IndexSet stratum_of(const Eigen::VectorXd& x) const { return active_set(x).indices; }

  /// Same selections and selector with another tolerance.
  CSFunction with_active_tol(double tol) const { return CSFunction(selections_, selector_, tol); }

 private:
  std::vector<Expression> selections_;
  Selector selector_;
  double active_tol_;
};

/// Equations cutting out the closure of M_J near its points: the constraints of M followed
/// by f_i - f_{j0} for i in J \ {j0}, j0 = min J.
std::vector<Expression> stratum_equations(const CSFunction& f, const Manifold& m, const IndexSet& j);

/// Rank of the tangent-projected gradient differences P(grad f_i - grad f_{j0}), i in J,
/// compared against |J| - 1. `smallest_singular` is the smallest of the |J| - 1 singular
/// values (0 when |J| = 1 is vacuous and reported as infinity).
struct AffineIndependence {
  bool ok = true;
  int rank = 0;
  double smallest_singular = std::numeric_limits<double>::infinity();
};

AffineIndependence affine_independence(const CSFunction& f, const Manifold& m, const Eigen::VectorXd& x,
                                       const IndexSet& j);

/// Up to `count` points with active set exactly J: uniform box draws solved onto the
/// stratum equations. Returns fewer points when the stratum is empty or hard to hit
/// (at most 50 x count draws); never throws for sampling failures.
std::vector<Eigen::VectorXd> sample_stratum(const CSFunction& f, const Manifold& m, const IndexSet& j, int count,
                                            std::uint64_t seed, int threads = 1);

struct CSViolation {
  Eigen::VectorXd x;
  IndexSet indices;
  double smallest_singular = 0.0;
};

struct CSValidationReport {
  int probes = 0;           // points checked
  int multi_active = 0;     // of which with |J| >= 2
  int violation_count = 0;
  std::vector<CSViolation> violations;  // first few, in probe order
  /// Smallest singular value over all checked points with |J| >= 2.
  double worst_conditioning = std::numeric_limits<double>::infinity();

  bool ok() const { return violation_count == 0; }
};

/// Checks the CS condition at `probe_count` manifold samples and, because random samples
/// almost never land on singular strata, at up to max(20, probe_count / 10) points of each
/// stratum M_J with |J| >= 2.
CSValidationReport validate_cs(const CSFunction& f, const Manifold& m, int probe_count, std::uint64_t seed,
                               int threads = 1);

}  // namespace csmorse

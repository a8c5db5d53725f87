#pragma once

// Comparison of two instances with ordered data: xi1 <= xi2, L1 <= L2,
// U1 <= U2 and, along the first solution,
//   f1 dt + g1 dA1 + dR1 <= f2 dt + g2 dA2 + dR2
// on every edge.  Conclusions: Y1 <= Y2, dK1- <= dK2- where U1 = U2 and
// dK2+ <= dK1+ where L1 = L2.

#include <cstdint>
#include <string>
#include <vector>

#include "drbsde/problem.hpp"
#include "drbsde/report.hpp"
#include "drbsde/solver.hpp"

namespace drbsde {

struct OrderedPair {
  ProblemSpec first;
  ProblemSpec second;
  std::string label;
};

/// Nodewise terminal and barrier orderings (tolerance 1e-14).
std::vector<CheckReport> validate_ordering(const OrderedPair& pair, double tolerance = 1e-14);

/// Generator-measure ordering evaluated at (Y1, Z1).
CheckReport generator_ordering(const OrderedPair& pair, const LatticeSolution& first, double tolerance = 1e-14);

struct ComparisonResult {
  std::vector<CheckReport> checks;
  LatticeSolution first;
  LatticeSolution second;
  /// Per-node table of both solutions when a check fails.
  std::string dump;
};

/// Validates the data orderings (ValidationError if they fail), solves both
/// instances and checks the generator ordering, Y1 <= Y2 and the increment
/// orderings.
ComparisonResult compare_solutions(const OrderedPair& pair, const SolverConfig& config = {},
                                   double tolerance = 1e-10);

/// Increment orderings on the coincidence sets {U1 = U2} and {L1 = L2}.
/// The note records how many nodes were tested.
std::vector<CheckReport> increment_ordering(const OrderedPair& pair, const LatticeSolution& first,
                                            const LatticeSolution& second, double tolerance = 1e-10);

/// Seeded pair with monotone-scheme data: deterministic clock and forcing,
/// bands of width at most 2, dt <= 1/2 and N <= max_steps.
OrderedPair random_ordered_pair(std::uint64_t seed, int max_steps = 16);

struct FuzzSummary {
  std::size_t pairs = 0;
  std::size_t failed_pairs = 0;
  std::size_t coincidence_nodes = 0;
  std::vector<CheckReport> checks;  // merged over all pairs
  std::string first_failure;
};

/// Runs compare_solutions on `count` consecutive seeds starting at `seed`.
FuzzSummary comparison_fuzz(std::size_t count, std::uint64_t seed, int max_steps = 16,
                            const SolverConfig& config = {}, double tolerance = 1e-10);

/// With U = +inf every dK- vanishes; with L = -inf every dK+ vanishes.
std::vector<CheckReport> degenerate_barrier_checks(std::uint64_t seed, const SolverConfig& config = {});

}  // namespace drbsde

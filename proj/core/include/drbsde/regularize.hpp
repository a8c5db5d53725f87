#pragma once

// Lipschitz approximation ladder.
//
//   f_n(y, z) = sup_{p,q} { f(p,q) v (-n) - n|p-y| - n|q-z| }
//   g_n(y)    = sup_p     { g(p) v (-n) - n|p-y| }
//
// For f <= 0 a candidate at L1 distance d scores at most -n d, so only the
// ball of radius min(1, |f(y,z) v (-n)| / n) matters.  The sup is taken over
// offsets of a grid of step h centred at (y, z); offset 0 is always a
// candidate, which makes f_n >= f and f_{n+1} <= f_n exact on the grid.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "drbsde/problem.hpp"
#include "drbsde/report.hpp"
#include "drbsde/solver.hpp"

namespace drbsde {

struct SupConvApprox {
  DriverF base;
  int n = 1;
  double h = 1e-3;
};

struct SupConvG {
  DriverG base;
  int n = 1;
  double h = 1e-3;
};

double supconv_eval(const SupConvApprox& approx, const NodeContext& ctx, double y, double z);
double supconv_eval(const SupConvG& approx, const NodeContext& ctx, double y);

/// f_n and g_n as drivers (n = 0 gives the zero driver).
DriverF supconv_driver(const DriverF& f, int n, double h);
DriverG supconv_driver(const DriverG& g, int n, double h);

/// X = A + |R| + C + sum eta dt along paths; tau_n is its first hitting of
/// [n, inf), capped at N.
struct TruncationLadder {
  explicit TruncationLadder(const ProblemSpec& spec);

  /// Running maximum of X per node; requires recombination.
  const AdaptedField& running_max() const { return running_max_; }

  /// tau_n along one path, from the path itself.
  int stopping_step(Path path, int n) const;
  /// tau_n for every path (N <= 20).
  std::vector<int> stopping_steps(int n) const;
  /// 1 on the edges leaving node k iff k < tau_n, else 0.
  EdgeField mask(int n) const;

 private:
  std::shared_ptr<const ProblemSpec> spec_;
  AdaptedField running_max_;
};

std::vector<int> truncation_steps(const ProblemSpec& spec, int n);

/// Instance with f_n, g_n, dA^n = 1{s <= tau_n} dA and dR^i = 1{s <= tau_i} dR.
ProblemSpec truncated_problem(const ProblemSpec& spec, int n, int i, double h);

struct LadderResult {
  std::vector<CheckReport> checks;
  /// Root values Y^{n,i}(0) indexed [n-1][i-1].
  std::vector<std::vector<double>> root;
};

/// Solves the (n, i) grid for 1 <= n <= n_max, 1 <= i <= i_max and checks
/// L <= Y^{n,i} <= U, Y^{n,i} <= Y^{n,i+1}, Y^{n+1,i} <= Y^{n,i} and the
/// matching dK orderings nodewise (which implies them cumulatively).
LadderResult ladder_orderings(const ProblemSpec& spec, int n_max, int i_max, double h = 1e-2,
                              const SolverConfig& config = {}, double tolerance = 1e-10);

struct SupConvOptions {
  int samples = 1000;
  std::uint64_t seed = 7;
  double h = 1e-3;
  double y_lo = -2.0, y_hi = 2.0;
  double z_lo = -3.0, z_hi = 3.0;
  std::vector<int> levels = {1, 2, 4, 8, 16};
};

/// Sampled checks of the approximants of a driver at one node context:
/// squeeze f_{n+1} <= f_n <= 0 and f_n >= f, range [-n, 0], the n-Lipschitz
/// bound with 4 h n slack, and decay of max (f_n - f) on a compact grid.
std::vector<CheckReport> supconv_properties(const DriverF& f, const NodeContext& ctx, const SupConvOptions& options);
std::vector<CheckReport> supconv_properties(const DriverG& g, const NodeContext& ctx, const SupConvOptions& options);

}  // namespace drbsde

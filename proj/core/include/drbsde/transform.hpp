#pragma once

// Exponential change of variables Ybar = exp(m (Y - m)) with
//
//   m = sup|U| + 2 sup|C| + |R| + A + 1      (running quantities)
//
// which turns a problem with two-sided quadratic growth into one with a
// nonpositive generator, g in [-1, 0] and barriers inside (0, 1).

#include <functional>
#include <string>
#include <vector>

#include "drbsde/problem.hpp"
#include "drbsde/report.hpp"
#include "drbsde/solver.hpp"
#include "drbsde/validate.hpp"

namespace drbsde {

/// Coefficient c in dRbar = c dAbar + eta m dt.  The Ito expansion of Ybar
/// gives c = 1/2; as_printed keeps c = 2.
enum class ForcingConvention { ito, as_printed };

double forcing_coefficient(ForcingConvention convention);

/// m on node storage.  Throws ValidationError("path-dependent m; use path
/// oracle") when its running parts do not recombine on the lattice.
AdaptedField compute_m(const ProblemSpec& spec);

struct TransformBundle {
  explicit TransformBundle(const TimeGrid& grid);

  TimeGrid grid;
  BranchMeasure measure;
  ForcingConvention convention = ForcingConvention::ito;
  AdaptedField m;
  EdgeField dm;
  AdaptedField lower;  // Lbar
  AdaptedField upper;  // Ubar
  AdaptedField original_lower;
  AdaptedField original_upper;
  AdaptedField eta;
  std::vector<double> terminal;  // xibar
  EdgeField clock;               // dAbar = 8 m dm
  EdgeField forcing;             // dRbar

  std::function<double(Node, double, double)> f_tilde;
  std::function<double(Node, double, double)> f_bar;
  std::function<double(Node, Branch, double)> g_tilde;
  std::function<double(Node, Branch, double)> g_bar;

  /// The transformed instance in solver form (f_bar, g_bar, Abar, Rbar).
  LatticeProblem problem() const;
};

TransformBundle transform_data(const ProblemSpec& spec, ForcingConvention convention = ForcingConvention::ito);

/// Ybar = exp(m (Y - m)), Zbar = m Ybar Z, dKbar = m Ybar dK.
LatticeSolution map_solution_forward(const LatticeSolution& sol, const TransformBundle& bundle);
/// Y = ln(Ybar)/m + m, Z = Zbar / (m Ybar), dK = dKbar / (m Ybar).
LatticeSolution map_solution_inverse(const LatticeSolution& sol, const TransformBundle& bundle);

/// Bounds of the transformed data: barrier chain, f_tilde and f_bar
/// envelopes, g_tilde and g_bar ranges, positivity of dAbar and dRbar.
std::vector<CheckReport> check_transform_bounds(const TransformBundle& bundle, const SampleOptions& options = {});

/// Per-node CSV: step, level, m, Lbar, Ubar, dAbar_up, dAbar_down, dRbar_up, dRbar_down.
std::string bundle_csv(const TransformBundle& bundle);

}  // namespace drbsde

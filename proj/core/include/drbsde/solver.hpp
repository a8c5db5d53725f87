#pragma once

// Backward induction for the doubly reflected equation on the lattice.
//
// At node n with child values y_u, y_d the scheme solves the scalar fixed
// point
//
//   Y = clamp(Psi(Y), L, U),   Psi(y) = E[W(y)] + f(n, y, z(y)) dt,
//   W_b(y) = y_b + g_b(n, y) dA_b + dR_b,   z(y) = (W_u - W_d) / (2 sqrt(dt)),
//
// and reads off dK+ = (L - Psi)^+, dK- = (Psi - U)^+.  Then on each branch
// y_b = Y - f dt - g_b dA_b - dR_b - dK+ + dK- + Z dW_b holds exactly.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "drbsde/lattice.hpp"
#include "drbsde/problem.hpp"

namespace drbsde {

/// Solver-level view of a problem: node-indexed drivers and edge data.
struct LatticeProblem {
  explicit LatticeProblem(const TimeGrid& grid);

  TimeGrid grid;
  BranchMeasure measure;
  std::function<double(Node, double, double)> f;  // f(node, y, z)
  /// g on the edge leaving node along a branch; multiplies clock(node, b).
  std::function<double(Node, Branch, double)> g;
  EdgeField clock;
  EdgeField forcing;
  AdaptedField lower;
  AdaptedField upper;
  std::vector<double> terminal;
  bool f_uses_y = true;
  bool g_uses_y = true;
};

LatticeProblem to_lattice(const ProblemSpec& spec);

struct SolverConfig {
  double picard_tol = 1e-12;
  int picard_max_iter = 200;
  double damping = 1.0;
  bool bisection_fallback = true;

  void validate() const;
};

struct StepResult {
  double y = 0.0;
  double z = 0.0;
  double dk_plus = 0.0;
  double dk_minus = 0.0;
  double unreflected = 0.0;  // Psi(Y)
  int iterations = 0;
  bool bisected = false;
};

struct SolveDiagnostics {
  int max_picard_iterations = 0;
  std::size_t bisection_nodes = 0;
};

struct LatticeSolution {
  explicit LatticeSolution(const TimeGrid& grid);

  AdaptedField y;            // steps 0..N
  AdaptedField z;            // steps 0..N-1
  AdaptedField dk_plus;      // steps 0..N-1
  AdaptedField dk_minus;     // steps 0..N-1
  AdaptedField unreflected;  // steps 0..N-1
  SolveDiagnostics diagnostics;

  const TimeGrid& grid() const { return y.grid(); }
  double root() const { return y({0, 0}); }
};

/// One node of the backward sweep.  Throws SolverError("generator fixed
/// point not found") with node details if neither method converges.
StepResult backward_step(const LatticeProblem& problem, Node node, double next_up, double next_down,
                         const SolverConfig& config = {});

LatticeSolution solve(const LatticeProblem& problem, const SolverConfig& config = {});
LatticeSolution solve(const ProblemSpec& spec, const SolverConfig& config = {});

struct Residuals {
  double band = 0.0;         // max excursion outside [L, U]
  double skorohod = 0.0;     // max (Y-L) dK+ and (U-Y) dK-
  double singularity = 0.0;  // max dK+ dK-
  double pathwise = 0.0;     // max one-step identity residual, relative
  double terminal = 0.0;     // max |Y_N - xi|
  double negative_k = 0.0;   // max of -dK+, -dK-
  Node worst_node;

  double max() const;
  bool within(double tol) const { return max() <= tol; }
};

Residuals residual_report(const LatticeProblem& problem, const LatticeSolution& sol);
Residuals residual_report(const ProblemSpec& spec, const LatticeSolution& sol);

/// Adds the shift back: Y + S, Z + alpha, same K.
LatticeSolution unshift_solution(const LatticeSolution& shifted, const AdaptedField& shift,
                                 const BranchMeasure& measure);

/// Shift (if needed), exponential transform, solve, and map back.
LatticeSolution solve_via_transform(const ProblemSpec& spec, const SolverConfig& config = {});

}  // namespace drbsde

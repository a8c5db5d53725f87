#pragma once

// Problem data for the doubly reflected equation
//
//   Y_t = xi + int f(s,Y,Z) ds + int g(s,Y) dA + dR + dK+ - dK- - int Z dB
//
// on a binomial lattice.  Clock and forcing live on edges so that path
// increments along either branch may differ.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "drbsde/expression.hpp"
#include "drbsde/lattice.hpp"

namespace drbsde {

struct NodeContext {
  Node node;
  double t = 0.0;
  double b = 0.0;
  double s = 0.0;  // spot price for option problems, 0 otherwise
};

using NodeFunction = std::function<double(const NodeContext&)>;

namespace node_fn {
NodeFunction constant(double c);
/// c0 + cb * B + ct * t
NodeFunction affine(double c0, double cb, double ct = 0.0);
/// max(strike - S, 0)
NodeFunction put(double strike);
/// max(S - strike, 0)
NodeFunction call(double strike);
NodeFunction expression(const std::string& text);
}  // namespace node_fn

/// Growth envelope of f at a node: |f| <= eta + (growth/2) |z|^2 on the band.
struct Envelope {
  double eta = 0.0;
  double growth = 0.0;
};

struct DriverF {
  std::string kind = "zero";
  std::function<double(const NodeContext&, double, double)> fn;
  bool uses_y = false;
  bool uses_z = false;
  /// Catalog envelope given the band [lower, upper] at the node; empty if
  /// the driver declares none.
  std::function<Envelope(const NodeContext&, double, double)> envelope;

  double operator()(const NodeContext& c, double y, double z) const { return fn ? fn(c, y, z) : 0.0; }

  static DriverF zero();
  static DriverF constant(double c);
  /// a y + b z + c
  static DriverF linear(double a, double b, double c = 0.0);
  /// -(c/2) |z|^2
  static DriverF quadratic_z(double c);
  static DriverF quadratic_z(NodeFunction c);
  static DriverF expression(const std::string& text);
};

struct DriverG {
  std::string kind = "zero";
  std::function<double(const NodeContext&, double)> fn;
  bool uses_y = false;
  /// Catalog bound on |g| over [lower, upper]; empty if none.
  std::function<double(const NodeContext&, double, double)> bound;

  double operator()(const NodeContext& c, double y) const { return fn ? fn(c, y) : 0.0; }

  static DriverG zero();
  static DriverG constant(double c);
  /// a y + c
  static DriverG linear(double a, double c = 0.0);
  static DriverG expression(const std::string& text);
};

struct BarrierPair {
  AdaptedField lower;
  AdaptedField upper;
  /// Semimartingale between the barriers.  Its lattice decomposition (drift
  /// and martingale parts) is recovered exactly from one-step moves.
  std::optional<AdaptedField> shift;
};

/// Increments of the clock A and of the forcing R = R+ - R- on each edge.
struct ClockAndForcing {
  EdgeField clock;
  EdgeField forcing_plus;
  EdgeField forcing_minus;

  double forcing(Node n, Branch b) const { return forcing_plus(n, b) - forcing_minus(n, b); }
  double variation(Node n, Branch b) const { return forcing_plus(n, b) + forcing_minus(n, b); }
};

struct Envelopes {
  AdaptedField eta;     // per unit time
  AdaptedField growth;  // C
};

struct ProblemSpec {
  explicit ProblemSpec(const TimeGrid& grid);

  TimeGrid grid;
  BranchMeasure measure;
  DriverF f;
  DriverG g;
  BarrierPair barriers;
  std::vector<double> terminal;  // xi per level at step N
  ClockAndForcing clock;
  Envelopes envelopes;
  AdaptedField g_bound;  // |g| <= g_bound on the band
  std::optional<AdaptedField> spot;

  NodeContext context(Node n) const;
  double lower(Node n) const { return barriers.lower(n); }
  double upper(Node n) const { return barriers.upper(n); }
};

/// Node-function form of a problem, as read from configuration.
struct ProblemData {
  double horizon = 1.0;
  int steps = 1;
  double up_probability = 0.5;
  DriverF f = DriverF::zero();
  DriverG g = DriverG::zero();
  bool normalize_g = false;
  NodeFunction lower;
  NodeFunction upper;
  std::optional<NodeFunction> shift;
  NodeFunction terminal;
  // Cumulative processes; differenced along edges.
  std::optional<NodeFunction> clock;
  std::optional<NodeFunction> forcing_plus;
  std::optional<NodeFunction> forcing_minus;
  /// Signed R, split into R+ and R- edge by edge.
  std::optional<NodeFunction> forcing;
  // Override the catalog envelopes.
  std::optional<NodeFunction> eta;
  std::optional<NodeFunction> growth;
  std::optional<NodeFunction> g_bound;
  std::optional<NodeFunction> spot;
};

/// Evaluates the node functions on the lattice and checks structure.
ProblemSpec build_problem(const ProblemData& data);

/// Throws ValidationError if the spec is structurally broken: L > U, xi
/// outside the terminal band, negative increments or envelopes.
void check_structure(const ProblemSpec& spec);

/// Fills envelopes from the driver catalog where declared.
void apply_catalog_envelopes(ProblemSpec& spec);

/// Conjugates the problem by the shift S: solving the result and adding S
/// back gives the original solution.  Without S, returns the spec unchanged
/// when L <= 0 <= U and throws otherwise.
ProblemSpec shift_by_S(const ProblemSpec& spec);

/// g / (1 + gbar), dA * (1 + gbar) per node.
ProblemSpec normalize_g(const ProblemSpec& spec);

/// Drift increment E[S_next] - S_k and martingale integrand of S at a node.
struct ShiftParts {
  double drift = 0.0;
  double alpha = 0.0;
};
ShiftParts shift_parts(const AdaptedField& shift, const BranchMeasure& measure, Node n);

}  // namespace drbsde

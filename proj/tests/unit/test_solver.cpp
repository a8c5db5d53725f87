#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "drbsde/catalog.hpp"
#include "drbsde/error.hpp"
#include "drbsde/solver.hpp"

using namespace drbsde;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// One step: band [-inf, u0] at the root, [-100, 100] at the horizon.
ProblemSpec one_step(double xi_up, double xi_down, double u0, double l0 = -kInf) {
  ProblemData d;
  d.steps = 1;
  d.lower = [l0](const NodeContext& c) { return c.node.step == 0 ? l0 : -100.0; };
  d.upper = [u0](const NodeContext& c) { return c.node.step == 0 ? u0 : 100.0; };
  d.terminal = [=](const NodeContext& c) { return c.node.level == 1 ? xi_up : xi_down; };
  return build_problem(d);
}

/// Snell envelope of the lower barrier, by hand.
AdaptedField snell_oracle(const ProblemSpec& s) {
  const TimeGrid& g = s.grid;
  AdaptedField v(g, 0.0);
  for (int j = 0; j <= g.steps(); ++j) v({g.steps(), j}) = s.terminal[static_cast<std::size_t>(j)];
  for (int k = g.steps() - 1; k >= 0; --k)
    for (int j = 0; j <= k; ++j) {
      const Node n{k, j};
      const double q = s.measure.up(n);
      v(n) = std::max(s.lower(n), q * v(n.child(Branch::up)) + (1 - q) * v(n.child(Branch::down)));
    }
  return v;
}

}  // namespace

TEST(Solver, OneStepReflectsDown) {
  const LatticeSolution s = solve(one_step(6.0, 4.0, 3.0));
  EXPECT_DOUBLE_EQ(s.root(), 3.0);
  EXPECT_DOUBLE_EQ(s.dk_minus({0, 0}), 2.0);
  EXPECT_DOUBLE_EQ(s.dk_plus({0, 0}), 0.0);
  EXPECT_DOUBLE_EQ(s.unreflected({0, 0}), 5.0);
  EXPECT_DOUBLE_EQ(s.z({0, 0}), 1.0);
}

TEST(Solver, OneStepReflectsUp) {
  const LatticeSolution s = solve(one_step(1.0, -1.0, kInf, 1.0));
  EXPECT_DOUBLE_EQ(s.root(), 1.0);
  EXPECT_DOUBLE_EQ(s.dk_plus({0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(s.dk_minus({0, 0}), 0.0);
}

TEST(Solver, ConstantDriver) {
  ProblemData d;
  d.steps = 10;
  d.horizon = 2.0;
  d.f = DriverF::constant(0.3);
  d.lower = node_fn::constant(-kInf);
  d.upper = node_fn::constant(kInf);
  d.terminal = node_fn::constant(1.0);
  const LatticeSolution s = solve(build_problem(d));
  EXPECT_NEAR(s.root(), 1.6, 1e-14);
  EXPECT_NEAR(s.z({3, 1}), 0.0, 1e-15);
}

TEST(Solver, BrownianTerminal) {
  const ProblemSpec spec = catalog::zero(16);
  const LatticeSolution s = solve(spec);
  EXPECT_NEAR(s.root(), 0.0, 1e-15);
  spec.grid.for_each_node(15, [&](Node n) {
    EXPECT_NEAR(s.z(n), 1.0, 1e-13);
    EXPECT_NEAR(s.y(n), spec.grid.brownian(n), 1e-13);
  });
  EXPECT_TRUE(residual_report(spec, s).within(0.0));
}

TEST(Solver, LinearDriverClosedForm) {
  const double a = 0.8, c = 0.5, xi = 2.0;
  ProblemData d;
  d.steps = 8;
  d.f = DriverF::linear(a, 0.0, c);
  d.lower = node_fn::constant(-kInf);
  d.upper = node_fn::constant(kInf);
  d.terminal = node_fn::constant(xi);
  const ProblemSpec spec = build_problem(d);
  const LatticeSolution s = solve(spec);
  const double dt = spec.grid.dt();
  double y = xi;
  for (int k = 7; k >= 0; --k) {
    y = (y + c * dt) / (1.0 - a * dt);
    EXPECT_NEAR(s.y({k, 0}), y, 1e-11 * std::fabs(y));
  }
}

TEST(Solver, SnellEnvelope) {
  for (int steps : {1, 7, 40}) {
    const ProblemSpec spec = catalog::snell(steps);
    const LatticeSolution s = solve(spec);
    const AdaptedField v = snell_oracle(spec);
    spec.grid.for_each_node(steps, [&](Node n) { EXPECT_NEAR(s.y(n), v(n), 1e-12); });
    EXPECT_TRUE(residual_report(spec, s).within(1e-12));
  }
}

TEST(Solver, QuadraticMatchesExponentialFormula) {
  // Y0 = -log E[exp(-xi)] for f = -z^2/2 while the band is inactive.
  const int steps = 256;
  const ProblemSpec spec = catalog::quadratic_z(steps);
  const LatticeSolution s = solve(spec);
  const auto p = layer_probabilities(spec.grid, spec.measure, steps);
  double lattice_mean = 0.0;
  for (int j = 0; j <= steps; ++j) lattice_mean += p[static_cast<std::size_t>(j)] * std::exp(-spec.terminal[static_cast<std::size_t>(j)]);
  // Continuous expectation by a Riemann sum over the normal density.
  double integral = 0.0;
  const double h = 1e-3;
  for (double x = -10.0; x <= 10.0; x += h)
    integral += h * std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI) * std::exp(-0.5 * std::tanh(x));
  EXPECT_NEAR(s.root(), -std::log(integral), 5e-3);
  EXPECT_NEAR(-std::log(lattice_mean), -std::log(integral), 1e-3);
  EXPECT_TRUE(residual_report(spec, s).within(1e-10));
}

TEST(Solver, MonotoneInTerminal) {
  const ProblemSpec a = catalog::quadratic_z(12);
  ProblemSpec b = a;
  for (double& x : b.terminal) x = std::min(x + 0.2, 1.0);
  const LatticeSolution sa = solve(a), sb = solve(b);
  a.grid.for_each_node(12, [&](Node n) { EXPECT_LE(sa.y(n), sb.y(n) + 1e-12); });
}

TEST(Solver, ResidualsFlagCorruption) {
  const ProblemSpec spec = catalog::quadratic_z(8);
  LatticeSolution s = solve(spec);
  EXPECT_TRUE(residual_report(spec, s).within(1e-10));
  s.y({3, 1}) += 1e-3;
  const Residuals r = residual_report(spec, s);
  EXPECT_GT(r.pathwise, 1e-6);
  EXPECT_FALSE(r.within(1e-10));

  LatticeSolution t = solve(spec);
  t.dk_plus({2, 1}) = 0.1;
  t.dk_minus({2, 1}) = 0.1;
  EXPECT_GT(residual_report(spec, t).singularity, 0.0);
}

TEST(Solver, RandomInstancesSatisfyContract) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ProblemSpec spec = catalog::random_problem(seed, 16);
    const LatticeSolution s = solve(spec);
    const Residuals r = residual_report(spec, s);
    EXPECT_TRUE(r.within(1e-10)) << "seed " << seed << " max " << r.max();
  }
}

TEST(Solver, PicardFailureRaises) {
  ProblemData d;
  d.steps = 4;
  d.f = DriverF::linear(1.0, 0.0, 0.0);
  d.lower = node_fn::constant(-kInf);
  d.upper = node_fn::constant(kInf);
  d.terminal = node_fn::constant(1.0);
  SolverConfig cfg;
  cfg.picard_max_iter = 1;
  cfg.bisection_fallback = false;
  EXPECT_THROW(solve(build_problem(d), cfg), SolverError);
  cfg.bisection_fallback = true;
  const LatticeSolution s = solve(build_problem(d), cfg);
  EXPECT_GT(s.diagnostics.bisection_nodes, 0u);
  EXPECT_NEAR(s.root(), std::pow(1.0 / (1.0 - 0.25), 4), 1e-10);
}

TEST(Solver, ConfigValidation) {
  SolverConfig c;
  c.damping = 0.0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.picard_tol = -1.0;
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(Solver, PinchedBandViaTransform) {
  ProblemData d;
  d.steps = 6;
  auto band = [](const NodeContext& c) { return 0.3 * c.b + 0.1 * c.t; };
  d.f = DriverF::quadratic_z(1.0);
  d.lower = band;
  d.upper = band;
  d.shift = band;
  d.terminal = band;
  const ProblemSpec spec = build_problem(d);
  const LatticeSolution direct = solve(spec);
  const LatticeSolution via = solve_via_transform(spec);
  spec.grid.for_each_node(6, [&](Node n) {
    EXPECT_NEAR(direct.y(n), spec.lower(n), 1e-15);
    EXPECT_NEAR(via.y(n), spec.lower(n), 1e-12);
  });
  // K of the mapped-back solution balances the original equation only up
  // to discretization.
  const Residuals r = residual_report(spec, via);
  EXPECT_EQ(r.band, 0.0);
  EXPECT_EQ(r.singularity, 0.0);
  EXPECT_LT(r.pathwise, 1e-2);
}

TEST(Solver, TransformRouteCloseToDirect) {
  const ProblemSpec spec = catalog::quadratic_z(32);
  const double gap = std::fabs(solve(spec).root() - solve_via_transform(spec).root());
  EXPECT_LT(gap, 1e-2);
}

#include "drbsde/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace drbsde::catalog {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ProblemData base(int steps, double horizon) {
  ProblemData d;
  d.horizon = horizon;
  d.steps = steps;
  d.lower = node_fn::constant(-kInf);
  d.upper = node_fn::constant(kInf);
  d.terminal = node_fn::constant(0.0);
  return d;
}

}  // namespace

ProblemSpec zero(int steps, double horizon) {
  ProblemData d = base(steps, horizon);
  d.terminal = node_fn::affine(0.0, 1.0);
  return build_problem(d);
}

ProblemSpec quadratic_z(int steps, double horizon) {
  ProblemData d = base(steps, horizon);
  d.f = DriverF::quadratic_z(1.0);
  d.lower = node_fn::constant(-1.0);
  d.upper = node_fn::constant(1.0);
  d.terminal = [](const NodeContext& c) { return 0.5 * std::tanh(c.b); };
  return build_problem(d);
}

ProblemSpec snell(int steps, double horizon) {
  ProblemData d = base(steps, horizon);
  auto payoff = [](const NodeContext& c) { return std::max(1.0 - std::exp(c.b), 0.0); };
  d.lower = payoff;
  d.terminal = payoff;
  return build_problem(d);
}

ProblemSpec ladder_first(int steps) {
  ProblemData d = base(steps, 1.0);
  d.f = DriverF::quadratic_z(1.0);
  d.lower = node_fn::constant(0.01);
  d.upper = node_fn::constant(0.99);
  d.terminal = [](const NodeContext& c) { return 0.5 + 0.45 * std::tanh(5.0 * c.b); };
  return build_problem(d);
}

ProblemSpec ladder_second(int steps) {
  ProblemData d = base(steps, 1.0);
  d.f = DriverF::quadratic_z(1.0);
  d.g = DriverG::expression("-min(max(y,0),1)");
  d.g_bound = node_fn::constant(1.0);
  d.clock = node_fn::affine(0.0, 0.0, 1.0);
  d.forcing_plus = node_fn::affine(0.0, 0.0, 0.5);
  d.lower = node_fn::constant(0.01);
  d.upper = node_fn::constant(0.99);
  d.terminal = [](const NodeContext& c) { return 0.5 + 0.45 * std::tanh(5.0 * c.b); };
  return build_problem(d);
}

ProblemSpec random_problem(std::uint64_t seed, int max_steps) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  auto coin = [&](double p) { return unit(rng) < p; };

  const int steps = std::uniform_int_distribution<int>(1, max_steps)(rng);
  // dt <= 1/4 keeps the y-part of the step map a contraction.
  const double horizon = std::min(2.0, 0.25 * steps) * uniform(0.5, 1.0);
  const TimeGrid grid(horizon, steps);
  ProblemSpec spec(grid);
  spec.measure = BranchMeasure(uniform(0.3, 0.7));

  const bool no_lower = coin(0.15);
  const bool no_upper = !no_lower && coin(0.15);
  const double l0 = uniform(-1.5, -0.1), lb = uniform(-0.3, 0.3), lt = uniform(-0.3, 0.3);
  const double w0 = uniform(0.2, 2.0), wb = uniform(0.0, 0.3);
  grid.for_each_node(steps, [&](Node n) {
    const double b = grid.brownian(n), t = grid.time(n.step);
    const double l = l0 + lb * b + lt * t;
    const double width = w0 + wb * std::fabs(b);
    spec.barriers.lower(n) = no_lower ? -kInf : l;
    spec.barriers.upper(n) = no_upper ? kInf : l + width;
  });
  for (int j = 0; j <= steps; ++j) {
    const Node n{steps, j};
    const double lo = std::isfinite(spec.lower(n)) ? spec.lower(n) : spec.upper(n) - 2.0;
    const double hi = std::isfinite(spec.upper(n)) ? spec.upper(n) : spec.lower(n) + 2.0;
    spec.terminal[static_cast<std::size_t>(j)] = uniform(lo, hi);
  }

  switch (std::uniform_int_distribution<int>(0, 3)(rng)) {
    case 0:
      spec.f = DriverF::zero();
      break;
    case 1:
      spec.f = DriverF::constant(uniform(-1.0, 1.0));
      break;
    case 2: {
      // a y is of linear growth only on a bounded band.
      const double a = uniform(-1.0, 1.0);
      spec.f = DriverF::linear(no_lower || no_upper ? 0.0 : a, uniform(-1.0, 1.0), uniform(-1.0, 1.0));
      break;
    }
    default:
      spec.f = DriverF::quadratic_z(uniform(0.0, 1.0));
      break;
  }
  // |g| <= 1 on the band: slope only when the band is bounded.
  if (!no_lower && !no_upper && coin(0.5)) {
    double ymax = 0.0;
    grid.for_each_node(steps, [&](Node n) {
      ymax = std::max({ymax, std::fabs(spec.lower(n)), std::fabs(spec.upper(n))});
    });
    const double a = uniform(-0.5, 0.5) / std::max(1.0, ymax);
    spec.g = DriverG::linear(a, uniform(-0.5, 0.5));
  } else if (coin(0.5)) {
    spec.g = DriverG::constant(uniform(-1.0, 1.0));
  }

  grid.for_each_node(steps - 1, [&](Node n) {
    for (Branch b : kBranches) {
      spec.clock.clock(n, b) = coin(0.3) ? 0.0 : uniform(0.0, grid.dt());
      const double r = uniform(-1.0, 1.0) * grid.dt();
      spec.clock.forcing_plus(n, b) = std::max(r, 0.0);
      spec.clock.forcing_minus(n, b) = std::max(-r, 0.0);
    }
  });
  apply_catalog_envelopes(spec);
  check_structure(spec);
  return spec;
}

DynkinGameSpec one_step_game(double terminal_mean) {
  DynkinGameSpec g(TimeGrid(1.0, 1));
  g.lower({0, 0}) = 1.0;
  g.upper({0, 0}) = 3.0;
  g.tie({0, 0}) = 2.0;
  for (int j = 0; j <= 1; ++j) {
    const Node n{1, j};
    g.lower(n) = -100.0;
    g.upper(n) = 100.0;
    g.tie(n) = 0.0;
    g.terminal[static_cast<std::size_t>(j)] = terminal_mean + (j == 1 ? 1.0 : -1.0);
  }
  return g;
}

std::vector<NamedGame> dynkin_games() {
  std::vector<NamedGame> out;
  out.push_back({"one-step mean 2", one_step_game(2.0)});
  out.push_back({"one-step mean 5", one_step_game(5.0)});
  out.push_back({"one-step mean 0", one_step_game(0.0)});

  DynkinGameSpec pinched(TimeGrid(1.0, 3));
  pinched.grid.for_each_node(3, [&](Node n) {
    const double v = 0.5 * (2 * n.level - n.step);
    pinched.lower(n) = pinched.upper(n) = pinched.tie(n) = v;
  });
  for (int j = 0; j <= 3; ++j) pinched.terminal[static_cast<std::size_t>(j)] = pinched.lower({3, j});
  out.push_back({"pinched depth 3", pinched});

  // Put-like game in B with a constant cancellation penalty.
  auto put_game = [](int steps, Utility f) {
    DynkinGameSpec g(TimeGrid(1.0, steps));
    g.measure = BranchMeasure(0.5);
    g.utility = f;
    g.grid.for_each_node(steps, [&](Node n) {
      const double l = std::max(0.5 - g.grid.brownian(n), 0.0);
      g.lower(n) = l;
      g.upper(n) = l + 0.3;
      g.tie(n) = l + 0.1;
    });
    for (int j = 0; j <= steps; ++j) g.terminal[static_cast<std::size_t>(j)] = g.lower({steps, j});
    return g;
  };
  const std::vector<Utility> utilities = {Utility::identity(), Utility::affine(2.0, -1.0),
                                          Utility::shifted_power(0.5, 2.0), Utility::exponential(1.5)};
  for (const Utility& f : utilities) {
    out.push_back({"put game depth 2 " + f.name(), put_game(2, f)});
    out.push_back({"put game depth 3 " + f.name(), put_game(3, f)});
  }
  return out;
}

}  // namespace drbsde::catalog

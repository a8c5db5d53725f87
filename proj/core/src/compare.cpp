#include "drbsde/compare.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "drbsde/error.hpp"

namespace drbsde {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// a - b where both may be the same infinity.
double excess(double a, double b) {
  if (a == b) return 0.0;
  return a - b;
}

void require_same_grid(const OrderedPair& pair) {
  const TimeGrid& a = pair.first.grid;
  const TimeGrid& b = pair.second.grid;
  if (a.steps() != b.steps() || a.horizon() != b.horizon()) throw ValidationError("pair grids differ");
}

std::string solution_dump(const OrderedPair& pair, const LatticeSolution& s1, const LatticeSolution& s2) {
  CsvTable t({"step", "level", "Y1", "Y2", "gap", "dKplus1", "dKplus2", "dKminus1", "dKminus2"});
  const TimeGrid& g = pair.first.grid;
  g.for_each_node(g.steps(), [&](Node n) {
    const bool inner = n.step < g.steps();
    t.add_row({std::to_string(n.step), std::to_string(n.level), format_number(s1.y(n)), format_number(s2.y(n)),
               format_number(s1.y(n) - s2.y(n)), format_number(inner ? s1.dk_plus(n) : 0.0),
               format_number(inner ? s2.dk_plus(n) : 0.0), format_number(inner ? s1.dk_minus(n) : 0.0),
               format_number(inner ? s2.dk_minus(n) : 0.0)});
  });
  return t.str();
}

}  // namespace

std::vector<CheckReport> validate_ordering(const OrderedPair& pair, double tolerance) {
  require_same_grid(pair);
  const ProblemSpec& a = pair.first;
  const ProblemSpec& b = pair.second;
  const TimeGrid& g = a.grid;
  CheckReport xi("xi1 <= xi2", tolerance);
  for (int j = 0; j <= g.steps(); ++j)
    xi.observe(excess(a.terminal[static_cast<std::size_t>(j)], b.terminal[static_cast<std::size_t>(j)]),
               Node{g.steps(), j});
  CheckReport lower("L1 <= L2", tolerance);
  CheckReport upper("U1 <= U2", tolerance);
  g.for_each_node(g.steps(), [&](Node n) {
    lower.observe(excess(a.lower(n), b.lower(n)), n);
    upper.observe(excess(a.upper(n), b.upper(n)), n);
  });
  return {xi, lower, upper};
}

CheckReport generator_ordering(const OrderedPair& pair, const LatticeSolution& first, double tolerance) {
  const LatticeProblem p1 = to_lattice(pair.first);
  const LatticeProblem p2 = to_lattice(pair.second);
  const TimeGrid& g = p1.grid;
  CheckReport r("f1 dt + g1 dA1 + dR1 <= f2 dt + g2 dA2 + dR2 at Y1", tolerance);
  g.for_each_node(g.steps() - 1, [&](Node n) {
    const double y = first.y(n);
    const double z = first.z(n);
    for (Branch b : kBranches) {
      const double da1 = p1.clock(n, b), da2 = p2.clock(n, b);
      const double m1 = p1.f(n, y, z) * g.dt() + (da1 == 0.0 ? 0.0 : p1.g(n, b, y) * da1) + p1.forcing(n, b);
      const double m2 = p2.f(n, y, z) * g.dt() + (da2 == 0.0 ? 0.0 : p2.g(n, b, y) * da2) + p2.forcing(n, b);
      r.observe(m1 - m2, Violation{n, y, z, 0.0, "branch " + std::string(b == Branch::up ? "up" : "down")});
    }
  });
  return r;
}

std::vector<CheckReport> increment_ordering(const OrderedPair& pair, const LatticeSolution& first,
                                            const LatticeSolution& second, double tolerance) {
  const TimeGrid& g = pair.first.grid;
  CheckReport minus("1{U1=U2} dK1- <= dK2-", tolerance);
  CheckReport plus("1{L1=L2} dK2+ <= dK1+", tolerance);
  std::size_t upper_nodes = 0, lower_nodes = 0;
  g.for_each_node(g.steps() - 1, [&](Node n) {
    if (pair.first.upper(n) == pair.second.upper(n)) {
      ++upper_nodes;
      minus.observe(first.dk_minus(n) - second.dk_minus(n), n);
    }
    if (pair.first.lower(n) == pair.second.lower(n)) {
      ++lower_nodes;
      plus.observe(second.dk_plus(n) - first.dk_plus(n), n);
    }
  });
  minus.set_note(upper_nodes == 0 ? "zero tested nodes" : std::to_string(upper_nodes) + " tested nodes");
  plus.set_note(lower_nodes == 0 ? "zero tested nodes" : std::to_string(lower_nodes) + " tested nodes");
  return {minus, plus};
}

ComparisonResult compare_solutions(const OrderedPair& pair, const SolverConfig& config, double tolerance) {
  const std::vector<CheckReport> data = validate_ordering(pair);
  for (const auto& r : data)
    if (!r.passed()) throw ValidationError("data ordering fails: " + r.summary());
  ComparisonResult out{{}, solve(pair.first, config), solve(pair.second, config), {}};
  out.checks.push_back(generator_ordering(pair, out.first));
  if (!out.checks.back().passed()) throw ValidationError("generator ordering fails: " + out.checks.back().summary());

  CheckReport y("Y1 <= Y2", tolerance);
  const TimeGrid& g = pair.first.grid;
  g.for_each_node(g.steps(), [&](Node n) {
    y.observe(out.first.y(n) - out.second.y(n), Violation{n, out.first.y(n), 0.0, 0.0, ""});
  });
  out.checks.push_back(y);
  for (auto& r : increment_ordering(pair, out.first, out.second, tolerance)) out.checks.push_back(r);
  if (!all_passed(out.checks)) out.dump = solution_dump(pair, out.first, out.second);
  return out;
}

OrderedPair random_ordered_pair(std::uint64_t seed, int max_steps) {
  if (max_steps < 1) throw ValidationError("max_steps must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  auto coin = [&](double p) { return unit(rng) < p; };

  const int steps = std::uniform_int_distribution<int>(1, max_steps)(rng);
  const double horizon = uniform(0.1, 0.5) * steps;
  const TimeGrid grid(horizon, steps);
  const double q = uniform(0.45, 0.55);

  // f1 = a y + b z - (c/2) z^2 + e, f2 = f1 + delta.
  const double a = uniform(-1.0, 1.0);
  const double b = uniform(-0.5, 0.5);
  const bool no_upper = coin(0.1);
  const bool no_lower = !no_upper && coin(0.1);
  // The z-weights q +- (b - c z) sqrt(dt) / 2 stay positive only while z is
  // bounded by the band width.
  const double c = (no_upper || no_lower || coin(0.5)) ? 0.0 : uniform(0.0, 0.3);
  const double e = uniform(-1.0, 1.0);
  const double delta = coin(0.3) ? 0.0 : uniform(0.0, 0.5);
  const double ga = uniform(-0.5, 0.5);
  const double gc = uniform(-0.5, 0.5);
  const double gdelta = coin(0.3) ? 0.0 : uniform(0.0, 0.5);

  auto driver = [&](double shift) {
    DriverF f;
    f.kind = "fuzz";
    f.uses_y = a != 0.0;
    f.uses_z = true;
    f.fn = [a, b, c, e, shift](const NodeContext&, double y, double z) {
      return a * y + b * z - 0.5 * c * z * z + e + shift;
    };
    return f;
  };
  auto gdriver = [&](double shift) {
    DriverG g;
    g.kind = "fuzz";
    g.uses_y = ga != 0.0;
    g.fn = [ga, gc, shift](const NodeContext&, double y) { return ga * y + gc + shift; };
    return g;
  };

  OrderedPair pair{ProblemSpec(grid), ProblemSpec(grid), "fuzz seed " + std::to_string(seed)};
  ProblemSpec& p1 = pair.first;
  ProblemSpec& p2 = pair.second;
  p1.measure = p2.measure = BranchMeasure(q);
  p1.f = driver(0.0);
  p2.f = driver(delta);
  p1.g = gdriver(0.0);
  p2.g = gdriver(gdelta);

  // Deterministic clock and forcing so g dA and dR do not enter z.
  for (int k = 0; k < steps; ++k) {
    const double da = coin(0.3) ? 0.0 : uniform(0.0, grid.dt());
    const double dr = uniform(-1.0, 1.0) * grid.dt();
    const double dr_extra = coin(0.5) ? 0.0 : uniform(0.0, 0.5) * grid.dt();
    for (int j = 0; j <= k; ++j) {
      for (Branch br : kBranches) {
        const Node n{k, j};
        p1.clock.clock(n, br) = p2.clock.clock(n, br) = da;
        p1.clock.forcing_plus(n, br) = std::max(dr, 0.0);
        p1.clock.forcing_minus(n, br) = std::max(-dr, 0.0);
        p2.clock.forcing_plus(n, br) = std::max(dr, 0.0) + dr_extra;
        p2.clock.forcing_minus(n, br) = std::max(-dr, 0.0);
      }
    }
  }

  // Bands of width in [0.3, 1.5] for the first instance; the second raises
  // each barrier by up to 0.25 and keeps it equal on a random subset.
  const double centre0 = uniform(-0.5, 0.5);
  const double slope = uniform(-0.3, 0.3);
  grid.for_each_node(steps, [&](Node n) {
    const double centre = centre0 + slope * grid.brownian(n) + uniform(-0.1, 0.1);
    const double width = uniform(0.3, 1.5);
    const double l1 = no_lower ? -kInf : centre - 0.5 * width;
    const double u1 = no_upper ? kInf : centre + 0.5 * width;
    p1.barriers.lower(n) = l1;
    p1.barriers.upper(n) = u1;
    p2.barriers.lower(n) = coin(0.4) ? l1 : l1 + uniform(0.0, 0.25);
    p2.barriers.upper(n) = coin(0.4) ? u1 : u1 + uniform(0.0, 0.25);
  });
  for (int j = 0; j <= steps; ++j) {
    const Node n{steps, j};
    const double lo = std::isfinite(p1.lower(n)) ? p1.lower(n) : p1.upper(n) - 1.0;
    const double hi = std::isfinite(p1.upper(n)) ? p1.upper(n) : p1.lower(n) + 1.0;
    const double x1 = uniform(lo, hi);
    const double x2 = std::max(p2.lower(n), std::min(p2.upper(n), x1 + (coin(0.3) ? 0.0 : uniform(0.0, 0.5))));
    p1.terminal[static_cast<std::size_t>(j)] = x1;
    p2.terminal[static_cast<std::size_t>(j)] = x2;
  }
  return pair;
}

FuzzSummary comparison_fuzz(std::size_t count, std::uint64_t seed, int max_steps, const SolverConfig& config,
                            double tolerance) {
  FuzzSummary out;
  std::vector<CheckReport> merged;
  for (std::size_t i = 0; i < count; ++i) {
    const OrderedPair pair = random_ordered_pair(seed + i, max_steps);
    const ComparisonResult res = compare_solutions(pair, config, tolerance);
    ++out.pairs;
    if (merged.empty()) {
      for (const auto& r : res.checks) merged.emplace_back(r.name(), r.tolerance());
    }
    for (std::size_t k = 0; k < res.checks.size(); ++k) merged[k].merge(res.checks[k]);
    if (!all_passed(res.checks)) {
      ++out.failed_pairs;
      if (out.first_failure.empty()) out.first_failure = pair.label + "\n" + res.dump;
    }
    const TimeGrid& g = pair.first.grid;
    g.for_each_node(g.steps() - 1, [&](Node n) {
      if (pair.first.upper(n) == pair.second.upper(n) || pair.first.lower(n) == pair.second.lower(n))
        ++out.coincidence_nodes;
    });
  }
  out.checks = std::move(merged);
  return out;
}

std::vector<CheckReport> degenerate_barrier_checks(std::uint64_t seed, const SolverConfig& config) {
  OrderedPair base = random_ordered_pair(seed, 12);
  ProblemSpec no_upper = base.first;
  ProblemSpec no_lower = base.first;
  const TimeGrid& g = no_upper.grid;
  g.for_each_node(g.steps(), [&](Node n) {
    no_upper.barriers.upper(n) = kInf;
    no_lower.barriers.lower(n) = -kInf;
  });
  const LatticeSolution s_up = solve(no_upper, config);
  const LatticeSolution s_lo = solve(no_lower, config);
  CheckReport km("U = +inf gives dK- = 0", 0.0);
  CheckReport kp("L = -inf gives dK+ = 0", 0.0);
  g.for_each_node(g.steps() - 1, [&](Node n) {
    km.observe(s_up.dk_minus(n) == 0.0 ? 0.0 : std::fabs(s_up.dk_minus(n)) + 1e-300, n);
    kp.observe(s_lo.dk_plus(n) == 0.0 ? 0.0 : std::fabs(s_lo.dk_plus(n)) + 1e-300, n);
  });
  return {km, kp};
}

}  // namespace drbsde

#include "drbsde/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "drbsde/error.hpp"

namespace drbsde {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double clamp_band(double v, double lower, double upper) { return std::min(std::max(v, lower), upper); }

std::string node_text(Node n) { return "(" + std::to_string(n.step) + "," + std::to_string(n.level) + ")"; }

}  // namespace

LatticeProblem::LatticeProblem(const TimeGrid& g_)
    : grid(g_),
      f([](Node, double, double) { return 0.0; }),
      g([](Node, Branch, double) { return 0.0; }),
      clock(g_),
      forcing(g_),
      lower(g_, -kInf),
      upper(g_, kInf),
      terminal(static_cast<std::size_t>(g_.steps() + 1), 0.0) {}

LatticeProblem to_lattice(const ProblemSpec& spec) {
  LatticeProblem p(spec.grid);
  p.measure = spec.measure;
  // Contexts are precomputed so the drivers see the same t, B, S as the spec.
  auto contexts = std::make_shared<std::vector<NodeContext>>();
  contexts->reserve(TimeGrid::node_count(spec.grid.steps()));
  spec.grid.for_each_node(spec.grid.steps(), [&](Node n) { contexts->push_back(spec.context(n)); });
  const DriverF f = spec.f;
  const DriverG g = spec.g;
  p.f = [f, contexts](Node n, double y, double z) { return f((*contexts)[TimeGrid::index(n)], y, z); };
  p.g = [g, contexts](Node n, Branch, double y) { return g((*contexts)[TimeGrid::index(n)], y); };
  p.f_uses_y = f.uses_y;
  p.g_uses_y = g.uses_y;
  p.clock = spec.clock.clock;
  p.forcing = EdgeField::from_function(spec.grid, [&](Node n, Branch b) { return spec.clock.forcing(n, b); });
  p.lower = spec.barriers.lower;
  p.upper = spec.barriers.upper;
  p.terminal = spec.terminal;
  return p;
}

void SolverConfig::validate() const {
  if (!(picard_tol > 0.0)) throw ValidationError("picard_tol must be positive");
  if (picard_max_iter < 1) throw ValidationError("picard_max_iter must be at least 1");
  if (!(damping > 0.0 && damping <= 1.0)) throw ValidationError("damping must lie in (0,1]");
}

LatticeSolution::LatticeSolution(const TimeGrid& grid)
    : y(grid, 0.0),
      z(grid, grid.steps() - 1, 0.0),
      dk_plus(grid, grid.steps() - 1, 0.0),
      dk_minus(grid, grid.steps() - 1, 0.0),
      unreflected(grid, grid.steps() - 1, 0.0) {}

// Backward step --------------------------------------------------------------

namespace {

struct StepMap {
  const LatticeProblem& p;
  Node node;
  double next_up;
  double next_down;
  double lower;
  double upper;
  double q;

  double w(Branch b, double y) const {
    const double next = b == Branch::up ? next_up : next_down;
    const double da = p.clock(node, b);
    const double ga = da == 0.0 ? 0.0 : p.g(node, b, y) * da;
    return next + ga + p.forcing(node, b);
  }
  double z(double y) const { return (w(Branch::up, y) - w(Branch::down, y)) / (2.0 * p.grid.sqrt_dt()); }
  double psi(double y) const {
    const double wu = w(Branch::up, y);
    const double wd = w(Branch::down, y);
    const double zz = (wu - wd) / (2.0 * p.grid.sqrt_dt());
    return q * wu + (1.0 - q) * wd + p.f(node, y, zz) * p.grid.dt();
  }
  double t(double y) const { return clamp_band(psi(y), lower, upper); }
};

}  // namespace

StepResult backward_step(const LatticeProblem& problem, Node node, double next_up, double next_down,
                         const SolverConfig& config) {
  if (!std::isfinite(next_up) || !std::isfinite(next_down))
    throw SolverError("non-finite successor values at node " + node_text(node));
  const StepMap map{problem, node, next_up, next_down, problem.lower(node), problem.upper(node),
                    problem.measure.up(node)};

  const double e0 = map.q * next_up + (1.0 - map.q) * next_down;
  const double scale = std::max({std::fabs(e0), std::fabs(next_up), std::fabs(next_down), 1e-300});
  auto close = [&](double a, double b) {
    return std::fabs(a - b) <= config.picard_tol * std::max({scale, std::fabs(a), std::fabs(b)});
  };

  StepResult out;
  double y = clamp_band(e0, map.lower, map.upper);
  bool converged = false;
  if (!problem.f_uses_y && !problem.g_uses_y) {
    y = map.t(y);
    out.iterations = 1;
    converged = std::isfinite(y);
  } else {
    for (int it = 1; it <= config.picard_max_iter; ++it) {
      const double ty = map.t(y);
      if (!std::isfinite(ty)) break;
      const double next = (1.0 - config.damping) * y + config.damping * ty;
      out.iterations = it;
      if (close(next, y)) {
        y = next;
        converged = true;
        break;
      }
      y = next;
    }
  }

  if (!converged) {
    if (!config.bisection_fallback)
      throw SolverError("generator fixed point not found at node " + node_text(node) + " after " +
                        std::to_string(out.iterations) + " Picard iterations");
    // phi(y) = T(y) - y is continuous and nonincreasing at infinity; T maps
    // into [L, U] so phi(L) >= 0 >= phi(U) when the barriers are finite.
    auto phi = [&](double v) { return map.t(v) - v; };
    const double y0 = clamp_band(e0, map.lower, map.upper);
    double width = 1.0 + std::fabs(y0);
    double a = std::isfinite(map.lower) ? map.lower : y0 - width;
    double b = std::isfinite(map.upper) ? map.upper : y0 + width;
    for (int k = 0; k < 200 && !(phi(a) >= 0.0); ++k) {
      if (std::isfinite(map.lower)) break;
      width *= 2.0;
      a = y0 - width;
    }
    width = 1.0 + std::fabs(y0);
    for (int k = 0; k < 200 && !(phi(b) <= 0.0); ++k) {
      if (std::isfinite(map.upper)) break;
      width *= 2.0;
      b = y0 + width;
    }
    if (!(phi(a) >= 0.0) || !(phi(b) <= 0.0))
      throw SolverError("generator fixed point not found at node " + node_text(node) + ": no bracket");
    for (int k = 0; k < 400 && !close(a, b); ++k) {
      const double mid = 0.5 * (a + b);
      if (phi(mid) >= 0.0) a = mid;
      else b = mid;
    }
    y = 0.5 * (a + b);
    out.bisected = true;
  }

  const double pre = map.psi(y);
  if (!std::isfinite(pre)) throw SolverError("generator not finite at node " + node_text(node));
  out.unreflected = pre;
  out.y = clamp_band(pre, map.lower, map.upper);
  out.dk_plus = std::max(map.lower - pre, 0.0);
  out.dk_minus = std::max(pre - map.upper, 0.0);
  out.z = map.z(y);
  return out;
}

LatticeSolution solve(const LatticeProblem& problem, const SolverConfig& config) {
  config.validate();
  const TimeGrid& grid = problem.grid;
  LatticeSolution sol(grid);
  for (int j = 0; j <= grid.steps(); ++j) sol.y({grid.steps(), j}) = problem.terminal[static_cast<std::size_t>(j)];
  for (int k = grid.steps() - 1; k >= 0; --k) {
    for (int j = 0; j <= k; ++j) {
      const Node n{k, j};
      const StepResult r = backward_step(problem, n, sol.y(n.child(Branch::up)), sol.y(n.child(Branch::down)), config);
      sol.y(n) = r.y;
      sol.z(n) = r.z;
      sol.dk_plus(n) = r.dk_plus;
      sol.dk_minus(n) = r.dk_minus;
      sol.unreflected(n) = r.unreflected;
      sol.diagnostics.max_picard_iterations = std::max(sol.diagnostics.max_picard_iterations, r.iterations);
      if (r.bisected) ++sol.diagnostics.bisection_nodes;
    }
  }
  return sol;
}

LatticeSolution solve(const ProblemSpec& spec, const SolverConfig& config) { return solve(to_lattice(spec), config); }

// Residuals ----------------------------------------------------------------

double Residuals::max() const { return std::max({band, skorohod, singularity, pathwise, terminal, negative_k}); }

Residuals residual_report(const LatticeProblem& p, const LatticeSolution& sol) {
  Residuals r;
  const TimeGrid& grid = p.grid;
  double worst = -1.0;
  auto track = [&](double v, Node n) {
    if (v > worst) {
      worst = v;
      r.worst_node = n;
    }
  };
  grid.for_each_node(grid.steps(), [&](Node n) {
    const double y = sol.y(n);
    const double band = std::max({p.lower(n) - y, y - p.upper(n), 0.0});
    r.band = std::max(r.band, std::isnan(y) ? kInf : band);
    track(r.band, n);
    if (n.step == grid.steps()) {
      r.terminal = std::max(r.terminal, std::fabs(y - p.terminal[static_cast<std::size_t>(n.level)]));
      return;
    }
    const double kp = sol.dk_plus(n);
    const double km = sol.dk_minus(n);
    r.negative_k = std::max({r.negative_k, -kp, -km});
    // Products vanish when the increment does; skip to avoid inf * 0.
    if (kp != 0.0) r.skorohod = std::max(r.skorohod, std::fabs((y - p.lower(n)) * kp));
    if (km != 0.0) r.skorohod = std::max(r.skorohod, std::fabs((p.upper(n) - y) * km));
    r.singularity = std::max(r.singularity, std::fabs(kp * km));
    const double z = sol.z(n);
    const double fdt = p.f(n, y, z) * grid.dt();
    for (Branch b : kBranches) {
      const double da = p.clock(n, b);
      const double ga = da == 0.0 ? 0.0 : p.g(n, b, y) * da;
      const double next = sol.y(n.child(b));
      const double rhs = y - fdt - ga - p.forcing(n, b) - kp + km + z * brownian_increment(grid, p.measure, n, b);
      const double scale = std::max({1.0, std::fabs(next), std::fabs(y)});
      const double res = std::fabs(next - rhs) / scale;
      r.pathwise = std::max(r.pathwise, std::isnan(res) ? kInf : res);
      track(res, n);
    }
  });
  return r;
}

Residuals residual_report(const ProblemSpec& spec, const LatticeSolution& sol) {
  return residual_report(to_lattice(spec), sol);
}

LatticeSolution unshift_solution(const LatticeSolution& shifted, const AdaptedField& shift,
                                 const BranchMeasure& measure) {
  LatticeSolution out = shifted;
  const TimeGrid& grid = shifted.grid();
  grid.for_each_node(grid.steps(), [&](Node n) {
    out.y(n) = shifted.y(n) + shift(n);
    if (n.step < grid.steps()) {
      out.z(n) = shifted.z(n) + shift_parts(shift, measure, n).alpha;
      out.unreflected(n) = shifted.unreflected(n) + shift(n);
    }
  });
  return out;
}

}  // namespace drbsde

#include "drbsde/regularize.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

#include "drbsde/error.hpp"
#include "drbsde/validate.hpp"

namespace drbsde {

namespace {

/// Grid half-width in steps for radius r.
int steps_for(double r, double h) { return static_cast<int>(std::floor(r / h + 1e-9)); }

double search_radius(double v0, int n) { return v0 < 0.0 ? std::min(1.0, -v0 / n) : 1.0; }

}  // namespace

double supconv_eval(const SupConvApprox& a, const NodeContext& ctx, double y, double z) {
  if (a.n <= 0) return 0.0;
  if (!(a.h > 0.0)) throw ValidationError("sup-convolution grid step must be positive");
  const double n = a.n;
  auto score = [&](double p, double q, int offsets) {
    return std::max(a.base(ctx, p, q), -n) - n * offsets * a.h;
  };
  const double v0 = std::max(a.base(ctx, y, z), -n);
  double best = v0;
  const int k = steps_for(search_radius(v0, a.n), a.h);
  const bool in_y = a.base.uses_y;
  const bool in_z = a.base.uses_z;
  if (!in_y && !in_z) return v0;
  if (in_y && in_z) {
    for (int i = -k; i <= k; ++i) {
      const int rest = k - std::abs(i);
      for (int j = -rest; j <= rest; ++j) {
        if (i == 0 && j == 0) continue;
        best = std::max(best, score(y + i * a.h, z + j * a.h, std::abs(i) + std::abs(j)));
      }
    }
  } else {
    for (int i = -k; i <= k; ++i) {
      if (i == 0) continue;
      const double p = in_y ? y + i * a.h : y;
      const double q = in_z ? z + i * a.h : z;
      best = std::max(best, score(p, q, std::abs(i)));
    }
  }
  return best;
}

double supconv_eval(const SupConvG& a, const NodeContext& ctx, double y) {
  if (a.n <= 0) return 0.0;
  if (!(a.h > 0.0)) throw ValidationError("sup-convolution grid step must be positive");
  const double n = a.n;
  const double v0 = std::max(a.base(ctx, y), -n);
  if (!a.base.uses_y) return v0;
  double best = v0;
  const int k = steps_for(search_radius(v0, a.n), a.h);
  for (int i = -k; i <= k; ++i) {
    if (i == 0) continue;
    best = std::max(best, std::max(a.base(ctx, y + i * a.h), -n) - n * std::abs(i) * a.h);
  }
  return best;
}

DriverF supconv_driver(const DriverF& f, int n, double h) {
  if (n <= 0) return DriverF::zero();
  DriverF d;
  d.kind = f.kind + "_n" + std::to_string(n);
  d.uses_y = f.uses_y;
  d.uses_z = f.uses_z;
  const SupConvApprox a{f, n, h};
  d.fn = [a](const NodeContext& c, double y, double z) { return supconv_eval(a, c, y, z); };
  return d;
}

DriverG supconv_driver(const DriverG& g, int n, double h) {
  if (n <= 0) return DriverG::zero();
  DriverG d;
  d.kind = g.kind + "_n" + std::to_string(n);
  d.uses_y = g.uses_y;
  const SupConvG a{g, n, h};
  d.fn = [a](const NodeContext& c, double y) { return supconv_eval(a, c, y); };
  return d;
}

// Truncation -----------------------------------------------------------------

namespace {

double edge_mass(const ProblemSpec& s, Node n, Branch b) {
  return s.clock.clock(n, b) + s.clock.variation(n, b) + s.envelopes.eta(n) * s.grid.dt();
}

}  // namespace

TruncationLadder::TruncationLadder(const ProblemSpec& spec)
    : spec_(std::make_shared<const ProblemSpec>(spec)), running_max_(spec.grid, 0.0) {
  const TimeGrid& grid = spec.grid;
  const PathRange mass = drbsde::running_sum(
      EdgeField::from_function(grid, [&](Node n, Branch b) { return edge_mass(spec, n, b); }));
  if (!mass.recombines()) throw ValidationError("truncation times are path dependent on this lattice");
  const AdaptedField x =
      AdaptedField::from_function(grid, [&](Node n) { return mass.hi(n) + spec.envelopes.growth(n); });
  const PathRange run = drbsde::running_max(x);
  if (!run.recombines()) throw ValidationError("truncation times are path dependent on this lattice");
  running_max_ = run.hi;
}

int TruncationLadder::stopping_step(Path path, int n) const {
  const ProblemSpec& s = *spec_;
  double mass = 0.0;
  for (int k = 0; k <= s.grid.steps(); ++k) {
    const Node node = node_at(path, k);
    if (mass + s.envelopes.growth(node) >= n) return k;
    if (k < s.grid.steps()) mass += edge_mass(s, node, ((path >> k) & 1U) ? Branch::up : Branch::down);
  }
  return s.grid.steps();
}

std::vector<int> TruncationLadder::stopping_steps(int n) const {
  if (spec_->grid.steps() > 20) throw Error("per-path truncation limited to 20 steps");
  std::vector<int> out;
  out.reserve(std::size_t{1} << spec_->grid.steps());
  for_each_path(spec_->grid.steps(), [&](Path p) { out.push_back(stopping_step(p, n)); });
  return out;
}

EdgeField TruncationLadder::mask(int n) const {
  return EdgeField::from_function(spec_->grid, [&](Node node, Branch) { return running_max_(node) < n ? 1.0 : 0.0; });
}

std::vector<int> truncation_steps(const ProblemSpec& spec, int n) { return TruncationLadder(spec).stopping_steps(n); }

ProblemSpec truncated_problem(const ProblemSpec& spec, int n, int i, double h) {
  const TruncationLadder ladder(spec);
  const EdgeField mask_n = ladder.mask(n);
  const EdgeField mask_i = ladder.mask(i);
  ProblemSpec out = spec;
  out.f = supconv_driver(spec.f, n, h);
  out.g = supconv_driver(spec.g, n, h);
  spec.grid.for_each_node(spec.grid.steps() - 1, [&](Node node) {
    for (Branch b : kBranches) {
      out.clock.clock(node, b) = spec.clock.clock(node, b) * mask_n(node, b);
      out.clock.forcing_plus(node, b) = spec.clock.forcing_plus(node, b) * mask_i(node, b);
      out.clock.forcing_minus(node, b) = spec.clock.forcing_minus(node, b) * mask_i(node, b);
    }
  });
  return out;
}

// Ladder ---------------------------------------------------------------------

LadderResult ladder_orderings(const ProblemSpec& spec, int n_max, int i_max, double h, const SolverConfig& config,
                              double tol) {
  if (n_max < 1 || i_max < 1 || n_max > 6 || i_max > 6) throw ValidationError("ladder indices must lie in 1..6");
  const TimeGrid& grid = spec.grid;
  std::vector<std::vector<LatticeSolution>> sols;
  LadderResult out;
  for (int n = 1; n <= n_max; ++n) {
    sols.emplace_back();
    out.root.emplace_back();
    for (int i = 1; i <= i_max; ++i) {
      sols.back().push_back(solve(truncated_problem(spec, n, i, h), config));
      out.root.back().push_back(sols.back().back().root());
    }
  }

  CheckReport band("L <= Y^{n,i} <= U", tol);
  CheckReport in_i("Y^{n,i} <= Y^{n,i+1}", tol);
  CheckReport in_n("Y^{n+1,i} <= Y^{n,i}", tol);
  CheckReport kplus("dK^{n,i,+} >= dK^{n,i+1,+}", tol);
  CheckReport kminus("dK^{n,i+1,-} >= dK^{n,i,-}", tol);
  for (int n = 0; n < n_max; ++n) {
    for (int i = 0; i < i_max; ++i) {
      const LatticeSolution& s = sols[static_cast<std::size_t>(n)][static_cast<std::size_t>(i)];
      grid.for_each_node(grid.steps(), [&](Node node) {
        const double y = s.y(node);
        band.observe(std::max(spec.lower(node) - y, y - spec.upper(node)), node);
        if (i + 1 < i_max) {
          const LatticeSolution& t = sols[static_cast<std::size_t>(n)][static_cast<std::size_t>(i + 1)];
          in_i.observe(y - t.y(node), node);
          if (node.step < grid.steps()) {
            kplus.observe(t.dk_plus(node) - s.dk_plus(node), node);
            kminus.observe(s.dk_minus(node) - t.dk_minus(node), node);
          }
        }
        if (n + 1 < n_max) {
          const LatticeSolution& t = sols[static_cast<std::size_t>(n + 1)][static_cast<std::size_t>(i)];
          in_n.observe(t.y(node) - y, node);
        }
      });
    }
  }
  out.checks = {band, in_i, in_n, kplus, kminus};
  return out;
}

// Approximant properties --------------------------------------------------

namespace {

struct PointEval {
  std::function<double(double, double)> f;                    // base
  std::function<double(int, double, double)> fn;              // approximant
  bool uses_y;
  bool uses_z;
};

std::vector<CheckReport> properties(const PointEval& e, const SupConvOptions& o) {
  const double h = o.h;
  const int top = o.levels.empty() ? 1 : o.levels.back();
  CheckReport squeeze("f_{n'} <= f_n <= 0 and f_n >= f", 2.0 * h * top);
  CheckReport range("-n <= f_n <= 0", 0.0);
  CheckReport lipschitz("n-Lipschitz with 4hn slack", 0.0);
  CheckReport decay("max compact gap (f_n - f) nonincreasing in n", 0.0);

  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> ud(o.y_lo, o.y_hi);
  std::uniform_real_distribution<double> zd(o.z_lo, o.z_hi);
  std::uniform_real_distribution<double> step(-0.5, 0.5);
  const Node root{0, 0};
  for (int s = 0; s < o.samples; ++s) {
    const double y = e.uses_y ? ud(rng) : 0.0;
    const double z = e.uses_z ? zd(rng) : 0.0;
    const double y2 = e.uses_y ? y + step(rng) : y;
    const double z2 = e.uses_z ? z + step(rng) : z;
    const double base = e.f(y, z);
    double prev = 0.0;  // f_0
    for (int n : o.levels) {
      const double v = e.fn(n, y, z);
      squeeze.observe(std::max({v - prev, base - v, v}), Violation{root, y, z, 0.0, "n=" + std::to_string(n)});
      range.observe(std::max(-n - v, v), Violation{root, y, z, 0.0, "n=" + std::to_string(n)});
      const double v2 = e.fn(n, y2, z2);
      const double bound = n * (std::fabs(y - y2) + std::fabs(z - z2)) + 4.0 * h * n;
      lipschitz.observe(std::fabs(v - v2) - bound, Violation{root, y, z, 0.0, "n=" + std::to_string(n)});
      prev = v;
    }
  }

  // Compact grid: 41 points per used axis.
  const int pts = 41;
  std::vector<double> gaps;
  for (int n : o.levels) {
    double gap = 0.0;
    for (int a = 0; a < (e.uses_y ? pts : 1); ++a) {
      for (int b = 0; b < (e.uses_z ? pts : 1); ++b) {
        const double y = e.uses_y ? o.y_lo + (o.y_hi - o.y_lo) * a / (pts - 1) : 0.0;
        const double z = e.uses_z ? o.z_lo + (o.z_hi - o.z_lo) * b / (pts - 1) : 0.0;
        gap = std::max(gap, e.fn(n, y, z) - e.f(y, z));
      }
    }
    gaps.push_back(gap);
  }
  std::string trail;
  for (std::size_t k = 0; k < gaps.size(); ++k) {
    if (k) {
      decay.observe(gaps[k] - gaps[k - 1], root);
      trail += " ";
    }
    trail += format_number(gaps[k]);
  }
  if (gaps.size() > 1 && gaps.front() > 0.0 && !(gaps.back() < gaps.front())) decay.fail("gap does not decrease");
  decay.set_note("gaps " + trail);
  return {squeeze, range, lipschitz, decay};
}

}  // namespace

std::vector<CheckReport> supconv_properties(const DriverF& f, const NodeContext& ctx, const SupConvOptions& o) {
  PointEval e{[&](double y, double z) { return f(ctx, y, z); },
              [&](int n, double y, double z) { return supconv_eval(SupConvApprox{f, n, o.h}, ctx, y, z); },
              f.uses_y, f.uses_z};
  return properties(e, o);
}

std::vector<CheckReport> supconv_properties(const DriverG& g, const NodeContext& ctx, const SupConvOptions& o) {
  PointEval e{[&](double y, double) { return g(ctx, y); },
              [&](int n, double y, double) { return supconv_eval(SupConvG{g, n, o.h}, ctx, y); }, g.uses_y, false};
  return properties(e, o);
}

}  // namespace drbsde

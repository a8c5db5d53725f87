#include "drbsde/transform.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <limits>
#include <random>

#include "drbsde/error.hpp"

namespace drbsde {

namespace {

constexpr double kRecombineTol = 1e-12;

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

double clamp_band(double v, double lower, double upper) { return std::min(std::max(v, lower), upper); }

}  // namespace

double forcing_coefficient(ForcingConvention convention) {
  return convention == ForcingConvention::ito ? 0.5 : 2.0;
}

AdaptedField compute_m(const ProblemSpec& spec) {
  const TimeGrid& grid = spec.grid;
  grid.for_each_node(grid.steps(), [&](Node n) {
    if (!std::isfinite(spec.upper(n))) throw ValidationError("exponential transform needs a finite upper barrier");
    if (!std::isfinite(spec.envelopes.growth(n))) throw ValidationError("exponential transform needs a finite C");
  });
  const PathRange sup_u = running_sup_abs(spec.barriers.upper);
  const PathRange sup_c = running_sup_abs(spec.envelopes.growth);
  const PathRange var_r = running_sum(
      EdgeField::from_function(grid, [&](Node n, Branch b) { return spec.clock.variation(n, b); }));
  const PathRange a = running_sum(spec.clock.clock);
  for (const PathRange* r : {&sup_u, &sup_c, &var_r, &a})
    if (!r->recombines(kRecombineTol)) throw ValidationError("path-dependent m; use path oracle");
  return AdaptedField::from_function(grid, [&](Node n) {
    return sup_u.hi(n) + 2.0 * sup_c.hi(n) + var_r.hi(n) + a.hi(n) + 1.0;
  });
}

TransformBundle::TransformBundle(const TimeGrid& g)
    : grid(g),
      m(g, 1.0),
      dm(g),
      lower(g, 0.0),
      upper(g, 0.0),
      original_lower(g, 0.0),
      original_upper(g, 0.0),
      eta(g, 0.0),
      terminal(static_cast<std::size_t>(g.steps() + 1), 0.0),
      clock(g),
      forcing(g) {}

TransformBundle transform_data(const ProblemSpec& spec, ForcingConvention convention) {
  const TimeGrid& grid = spec.grid;
  TransformBundle bundle(grid);
  bundle.measure = spec.measure;
  bundle.convention = convention;
  bundle.m = compute_m(spec);
  bundle.dm = EdgeField::differences(bundle.m);
  bundle.original_lower = spec.barriers.lower;
  bundle.original_upper = spec.barriers.upper;
  bundle.eta = spec.envelopes.eta;

  const AdaptedField& m = bundle.m;
  grid.for_each_node(grid.steps(), [&](Node n) {
    const double mk = m(n);
    bundle.lower(n) = std::exp(mk * (spec.lower(n) - mk));
    bundle.upper(n) = std::exp(mk * (spec.upper(n) - mk));
  });
  for (int j = 0; j <= grid.steps(); ++j) {
    const double mt = m({grid.steps(), j});
    bundle.terminal[static_cast<std::size_t>(j)] = std::exp(mt * (spec.terminal[static_cast<std::size_t>(j)] - mt));
  }

  const double c = forcing_coefficient(convention);
  grid.for_each_node(grid.steps() - 1, [&](Node n) {
    for (Branch b : kBranches) {
      const double dm = bundle.dm(n, b);
      if (dm == 0.0 && (spec.clock.clock(n, b) > 0.0 || spec.clock.variation(n, b) > 0.0))
        throw Error("internal: dm = 0 on an edge with clock or forcing mass");
      bundle.clock(n, b) = 8.0 * m(n) * dm;
      bundle.forcing(n, b) = c * bundle.clock(n, b) + spec.envelopes.eta(n) * m(n) * grid.dt();
    }
  });

  // Shared immutable state for the driver closures.
  struct Shared {
    std::vector<NodeContext> contexts;
    DriverF f;
    DriverG g;
    AdaptedField m, lower, upper, eta;
    EdgeField dm, da, dr;
  };
  Shared shared{{}, spec.f, spec.g, bundle.m, bundle.lower, bundle.upper, spec.envelopes.eta, bundle.dm,
                spec.clock.clock,
                EdgeField::from_function(grid, [&](Node n, Branch b) { return spec.clock.forcing(n, b); })};
  grid.for_each_node(grid.steps(), [&](Node n) { shared.contexts.push_back(spec.context(n)); });
  auto sh = std::make_shared<const Shared>(std::move(shared));

  bundle.f_tilde = [sh](Node n, double yb, double zb) {
    const double mk = sh->m(n);
    const double y = std::log(yb) / mk + mk;
    const double z = zb / (mk * yb);
    return yb * mk * sh->f(sh->contexts[TimeGrid::index(n)], y, z) - zb * zb / (2.0 * yb);
  };
  bundle.f_bar = [sh, ft = bundle.f_tilde](Node n, double yb, double zb) {
    return ft(n, clamp_band(yb, sh->lower(n), sh->upper(n)), zb) - sh->eta(n) * sh->m(n);
  };
  bundle.g_tilde = [sh](Node n, Branch b, double yb) {
    const double mk = sh->m(n);
    const double dm = sh->dm(n, b);
    const double ra = ratio(sh->da(n, b), dm);
    const double rr = ratio(sh->dr(n, b), dm);
    const double y = std::log(yb) / mk + mk;
    const double gpart = ra == 0.0 ? 0.0 : mk * sh->g(sh->contexts[TimeGrid::index(n)], y) * ra;
    return yb * (gpart + mk * rr + (mk - std::log(yb) / mk));
  };
  bundle.g_bar = [sh, gt = bundle.g_tilde](Node n, Branch b, double yb) {
    const double mk = sh->m(n);
    return (gt(n, b, clamp_band(yb, sh->lower(n), sh->upper(n))) - 4.0 * mk) / (8.0 * mk);
  };
  return bundle;
}

LatticeProblem TransformBundle::problem() const {
  LatticeProblem p(grid);
  p.measure = measure;
  p.f = f_bar;
  p.g = g_bar;
  p.clock = clock;
  p.forcing = forcing;
  p.lower = lower;
  p.upper = upper;
  p.terminal = terminal;
  p.f_uses_y = true;
  p.g_uses_y = true;
  return p;
}

LatticeSolution map_solution_forward(const LatticeSolution& sol, const TransformBundle& bundle) {
  LatticeSolution out = sol;
  const TimeGrid& grid = bundle.grid;
  grid.for_each_node(grid.steps(), [&](Node n) {
    const double y = sol.y(n);
    if (!(y >= bundle.original_lower(n) && y <= bundle.original_upper(n)))
      throw ValidationError("not a solution: Y outside [L,U] at (" + std::to_string(n.step) + "," +
                            std::to_string(n.level) + ")");
    const double mk = bundle.m(n);
    const double yb = std::exp(mk * (y - mk));
    out.y(n) = yb;
    if (n.step < grid.steps()) {
      out.z(n) = mk * yb * sol.z(n);
      out.dk_plus(n) = mk * yb * sol.dk_plus(n);
      out.dk_minus(n) = mk * yb * sol.dk_minus(n);
      out.unreflected(n) = std::exp(mk * (sol.unreflected(n) - mk));
    }
  });
  return out;
}

LatticeSolution map_solution_inverse(const LatticeSolution& sol, const TransformBundle& bundle) {
  LatticeSolution out = sol;
  const TimeGrid& grid = bundle.grid;
  grid.for_each_node(grid.steps(), [&](Node n) {
    const double yb = sol.y(n);
    if (!(yb > 0.0))
      throw ValidationError("inverse undefined: Ybar <= 0 at (" + std::to_string(n.step) + "," +
                            std::to_string(n.level) + ")");
    const double mk = bundle.m(n);
    out.y(n) = std::log(yb) / mk + mk;
    if (n.step < grid.steps()) {
      out.z(n) = sol.z(n) / (mk * yb);
      out.dk_plus(n) = sol.dk_plus(n) / (mk * yb);
      out.dk_minus(n) = sol.dk_minus(n) / (mk * yb);
      const double pre = sol.unreflected(n);
      out.unreflected(n) = pre > 0.0 ? std::log(pre) / mk + mk : -std::numeric_limits<double>::infinity();
    }
  });
  return out;
}

std::vector<CheckReport> check_transform_bounds(const TransformBundle& b, const SampleOptions& options) {
  const TimeGrid& grid = b.grid;
  const double tol = options.tolerance;
  CheckReport m_report("m >= 1 and nondecreasing", 0.0);
  CheckReport chain("0 < Lbar <= exp(-m^2) <= Ubar <= exp(-1) < 1", 1e-14);
  CheckReport term("Lbar_T <= xibar <= Ubar_T", 1e-14);
  CheckReport ftilde("-eta m - |zbar|^2/Lbar <= f_tilde <= eta m", tol);
  CheckReport fbar("-2 eta m - |zbar|^2/Lbar <= f_bar <= 0", tol);
  CheckReport gtilde("|g_tilde| <= 4m", tol);
  CheckReport gbar("-1 <= g_bar <= 0", tol);
  CheckReport pos("dAbar >= 0 and dRbar >= 0", 0.0);

  grid.for_each_node(grid.steps(), [&](Node n) {
    const double mk = b.m(n);
    const double mid = std::exp(-(mk * mk));
    const double l = b.lower(n);
    const double u = b.upper(n);
    m_report.observe(1.0 - mk, n);
    double excess = std::max({l - mid, mid - u, u - std::exp(-1.0)});
    if (!(l > 0.0)) excess = std::max(excess, 1.0);
    chain.observe(excess, n);
    if (n.step < grid.steps()) {
      for (Branch br : kBranches) {
        m_report.observe(-b.dm(n, br), n);
        pos.observe(std::max(-b.clock(n, br), -b.forcing(n, br)), n);
      }
    }
  });
  for (int j = 0; j <= grid.steps(); ++j) {
    const Node n{grid.steps(), j};
    const double x = b.terminal[static_cast<std::size_t>(j)];
    term.observe(std::max(b.lower(n) - x, x - b.upper(n)), n);
  }

  std::mt19937_64 rng(options.seed);
  const int samples = std::max(1, options.samples);
  grid.for_each_node(grid.steps() - 1, [&](Node n) {
    const double mk = b.m(n);
    const double l = b.lower(n);
    const double u = b.upper(n);
    const double em = b.eta(n) * mk;
    std::uniform_real_distribution<double> ydist(l, u);
    for (int k = 0; k < samples; ++k) {
      const double yb = l < u ? ydist(rng) : l;
      const double zgrid = samples > 1 ? -options.z_max + 2.0 * options.z_max * k / (samples - 1) : 0.0;
      // Alternate raw z-bar values with ones of the natural scale m ybar z.
      const double zb = (k % 2 == 0) ? zgrid : mk * yb * zgrid;
      const double quad = zb * zb / l;
      auto rel = [](double excess, double scale) { return excess / std::max(1.0, std::fabs(scale)); };

      const double ft = b.f_tilde(n, yb, zb);
      ftilde.observe(std::max(rel(-em - quad - ft, em + quad), rel(ft - em, em)), Violation{n, yb, zb, 0.0, "f_tilde"});
      // f_bar is total; probe it off the band as well.
      const double yo = (k % 3 == 0) ? yb * 0.5 : (k % 3 == 1 ? std::min(1.0, yb * 2.0) : yb);
      const double fb = b.f_bar(n, yo, zb);
      fbar.observe(std::max(rel(-2.0 * em - quad - fb, 2.0 * em + quad), fb), Violation{n, yo, zb, 0.0, "f_bar"});
      for (Branch br : kBranches) {
        const double gt = b.g_tilde(n, br, yb);
        gtilde.observe(std::fabs(gt) - 4.0 * mk, Violation{n, yb, 0.0, 0.0, "g_tilde"});
        const double gb = b.g_bar(n, br, yo);
        gbar.observe(std::max(-1.0 - gb, gb), Violation{n, yo, 0.0, 0.0, "g_bar"});
      }
    }
  });
  return {m_report, chain, term, ftilde, fbar, gtilde, gbar, pos};
}

std::string bundle_csv(const TransformBundle& b) {
  CsvTable t({"step", "level", "m", "Lbar", "Ubar", "dAbar_up", "dAbar_down", "dRbar_up", "dRbar_down"});
  b.grid.for_each_node(b.grid.steps(), [&](Node n) {
    const bool inner = n.step < b.grid.steps();
    auto edge = [&](const EdgeField& e, Branch br) { return inner ? format_number(e(n, br)) : std::string(); };
    t.add_row({std::to_string(n.step), std::to_string(n.level), format_number(b.m(n)), format_number(b.lower(n)),
               format_number(b.upper(n)), edge(b.clock, Branch::up), edge(b.clock, Branch::down),
               edge(b.forcing, Branch::up), edge(b.forcing, Branch::down)});
  });
  return t.str();
}

// Dual route -----------------------------------------------------------------

LatticeSolution solve_via_transform(const ProblemSpec& spec, const SolverConfig& config) {
  ProblemSpec work = spec.barriers.shift ? shift_by_S(spec) : spec;
  if (!spec.barriers.shift) (void)shift_by_S(work);  // throws "no admissible shift" unless L <= 0 <= U
  bool needs_normalizing = false;
  work.grid.for_each_node(work.grid.steps() - 1, [&](Node n) { needs_normalizing = needs_normalizing || work.g_bound(n) > 1.0; });
  if (needs_normalizing) work = normalize_g(work);

  const TransformBundle bundle = transform_data(work);
  LatticeSolution sol = map_solution_inverse(solve(bundle.problem(), config), bundle);
  if (spec.barriers.shift) sol = unshift_solution(sol, *spec.barriers.shift, spec.measure);
  return sol;
}

}  // namespace drbsde

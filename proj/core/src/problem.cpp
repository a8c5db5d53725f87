#include "drbsde/problem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "drbsde/error.hpp"

namespace drbsde {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double band_abs(double lower, double upper) { return std::max(std::fabs(lower), std::fabs(upper)); }

ExpressionVars vars_of(const NodeContext& c, double y = 0.0, double z = 0.0) {
  return ExpressionVars{c.t, c.b, c.s, y, z};
}

}  // namespace

// Node functions -----------------------------------------------------------

namespace node_fn {

NodeFunction constant(double c) {
  return [c](const NodeContext&) { return c; };
}

NodeFunction affine(double c0, double cb, double ct) {
  return [=](const NodeContext& c) { return c0 + cb * c.b + ct * c.t; };
}

NodeFunction put(double strike) {
  return [strike](const NodeContext& c) { return std::max(strike - c.s, 0.0); };
}

NodeFunction call(double strike) {
  return [strike](const NodeContext& c) { return std::max(c.s - strike, 0.0); };
}

NodeFunction expression(const std::string& text) {
  auto e = std::make_shared<Expression>(Expression::parse(text));
  if (e->uses('y') || e->uses('z')) throw ValidationError("node function \"" + text + "\" may not use y or z");
  return [e](const NodeContext& c) { return e->evaluate(vars_of(c)); };
}

}  // namespace node_fn

// Drivers ------------------------------------------------------------------

DriverF DriverF::zero() {
  DriverF d;
  d.fn = [](const NodeContext&, double, double) { return 0.0; };
  d.envelope = [](const NodeContext&, double, double) { return Envelope{}; };
  return d;
}

DriverF DriverF::constant(double c) {
  DriverF d;
  d.kind = "constant";
  d.fn = [c](const NodeContext&, double, double) { return c; };
  d.envelope = [c](const NodeContext&, double, double) { return Envelope{std::fabs(c), 0.0}; };
  return d;
}

DriverF DriverF::linear(double a, double b, double c) {
  DriverF d;
  d.kind = "linear";
  d.uses_y = a != 0.0;
  d.uses_z = b != 0.0;
  d.fn = [=](const NodeContext&, double y, double z) { return a * y + b * z + c; };
  // |b z| <= b^2/2 + |z|^2/2
  d.envelope = [=](const NodeContext&, double lower, double upper) {
    const double ya = a == 0.0 ? 0.0 : std::fabs(a) * band_abs(lower, upper);
    return Envelope{ya + std::fabs(c) + 0.5 * b * b, b != 0.0 ? 1.0 : 0.0};
  };
  return d;
}

DriverF DriverF::quadratic_z(double c) { return quadratic_z(node_fn::constant(c)); }

DriverF DriverF::quadratic_z(NodeFunction c) {
  DriverF d;
  d.kind = "quadratic_z";
  d.uses_z = true;
  d.fn = [c](const NodeContext& ctx, double, double z) { return -0.5 * c(ctx) * z * z; };
  d.envelope = [c](const NodeContext& ctx, double, double) { return Envelope{0.0, std::fabs(c(ctx))}; };
  return d;
}

DriverF DriverF::expression(const std::string& text) {
  auto e = std::make_shared<Expression>(Expression::parse(text));
  DriverF d;
  d.kind = "expression";
  d.uses_y = e->uses('y');
  d.uses_z = e->uses('z');
  d.fn = [e](const NodeContext& c, double y, double z) { return e->evaluate(vars_of(c, y, z)); };
  return d;
}

DriverG DriverG::zero() {
  DriverG d;
  d.fn = [](const NodeContext&, double) { return 0.0; };
  d.bound = [](const NodeContext&, double, double) { return 0.0; };
  return d;
}

DriverG DriverG::constant(double c) {
  DriverG d;
  d.kind = "constant";
  d.fn = [c](const NodeContext&, double) { return c; };
  d.bound = [c](const NodeContext&, double, double) { return std::fabs(c); };
  return d;
}

DriverG DriverG::linear(double a, double c) {
  DriverG d;
  d.kind = "linear";
  d.uses_y = a != 0.0;
  d.fn = [=](const NodeContext&, double y) { return a * y + c; };
  d.bound = [=](const NodeContext&, double lower, double upper) {
    return (a == 0.0 ? 0.0 : std::fabs(a) * band_abs(lower, upper)) + std::fabs(c);
  };
  return d;
}

DriverG DriverG::expression(const std::string& text) {
  auto e = std::make_shared<Expression>(Expression::parse(text));
  if (e->uses('z')) throw ValidationError("g driver \"" + text + "\" may not use z");
  DriverG d;
  d.kind = "expression";
  d.uses_y = e->uses('y');
  d.fn = [e](const NodeContext& c, double y) { return e->evaluate(vars_of(c, y)); };
  return d;
}

// ProblemSpec --------------------------------------------------------------

ProblemSpec::ProblemSpec(const TimeGrid& g_)
    : grid(g_),
      f(DriverF::zero()),
      g(DriverG::zero()),
      barriers{AdaptedField(g_, -kInf), AdaptedField(g_, kInf), std::nullopt},
      terminal(static_cast<std::size_t>(g_.steps() + 1), 0.0),
      clock{EdgeField(g_), EdgeField(g_), EdgeField(g_)},
      envelopes{AdaptedField(g_, 0.0), AdaptedField(g_, 0.0)},
      g_bound(g_, 0.0) {}

NodeContext ProblemSpec::context(Node n) const {
  return NodeContext{n, grid.time(n.step), grid.brownian(n), spot ? (*spot)(n) : 0.0};
}

void apply_catalog_envelopes(ProblemSpec& spec) {
  spec.grid.for_each_node(spec.grid.steps(), [&](Node n) {
    const NodeContext c = spec.context(n);
    if (spec.f.envelope) {
      const Envelope e = spec.f.envelope(c, spec.lower(n), spec.upper(n));
      spec.envelopes.eta(n) = e.eta;
      spec.envelopes.growth(n) = e.growth;
    }
    if (spec.g.bound) spec.g_bound(n) = spec.g.bound(c, spec.lower(n), spec.upper(n));
  });
}

ProblemSpec build_problem(const ProblemData& data) {
  const TimeGrid grid(data.horizon, data.steps);
  ProblemSpec spec(grid);
  spec.measure = BranchMeasure(data.up_probability);
  spec.f = data.f;
  spec.g = data.g;
  if (data.spot) {
    spec.spot = AdaptedField::from_function(grid, [&](Node n) {
      return (*data.spot)(NodeContext{n, grid.time(n.step), grid.brownian(n), 0.0});
    });
  }

  auto field = [&](const NodeFunction& fn) {
    return AdaptedField::from_function(grid, [&](Node n) { return fn(spec.context(n)); });
  };
  auto increments = [&](const std::optional<NodeFunction>& fn) {
    if (!fn) return EdgeField(grid);
    return EdgeField::differences(field(*fn));
  };

  if (!data.lower || !data.upper || !data.terminal) throw ValidationError("barriers and terminal are required");
  spec.barriers.lower = field(data.lower);
  spec.barriers.upper = field(data.upper);
  if (data.shift) spec.barriers.shift = field(*data.shift);
  for (int j = 0; j <= grid.steps(); ++j) spec.terminal[static_cast<std::size_t>(j)] = data.terminal(spec.context({grid.steps(), j}));

  if (data.clock) {
    if ((*data.clock)(spec.context({0, 0})) != 0.0) throw ValidationError("clock must start at 0");
  }
  spec.clock.clock = increments(data.clock);
  spec.clock.forcing_plus = increments(data.forcing_plus);
  spec.clock.forcing_minus = increments(data.forcing_minus);
  if (data.forcing) {
    // Signed R: each edge increment goes to R+ or R- by its sign.
    const EdgeField dr = increments(data.forcing);
    grid.for_each_node(grid.steps() - 1, [&](Node n) {
      for (Branch b : kBranches) {
        spec.clock.forcing_plus(n, b) += std::max(dr(n, b), 0.0);
        spec.clock.forcing_minus(n, b) += std::max(-dr(n, b), 0.0);
      }
    });
  }

  apply_catalog_envelopes(spec);
  if (data.eta) spec.envelopes.eta = field(*data.eta);
  if (data.growth) spec.envelopes.growth = field(*data.growth);
  if (data.g_bound) spec.g_bound = field(*data.g_bound);
  if (!spec.f.envelope && !(data.eta && data.growth))
    throw ValidationError("driver_f of kind " + spec.f.kind + " needs explicit envelopes eta and C");
  if (!spec.g.bound && !data.g_bound && data.normalize_g)
    throw ValidationError("normalizing g needs a bound");

  check_structure(spec);
  return data.normalize_g ? normalize_g(spec) : spec;
}

void check_structure(const ProblemSpec& spec) {
  const TimeGrid& grid = spec.grid;
  auto where = [](Node n) { return " at (" + std::to_string(n.step) + "," + std::to_string(n.level) + ")"; };
  grid.for_each_node(grid.steps(), [&](Node n) {
    const double l = spec.lower(n);
    const double u = spec.upper(n);
    if (std::isnan(l) || std::isnan(u)) throw ValidationError("barrier is NaN" + where(n));
    if (l > u) throw ValidationError("lower barrier above upper barrier" + where(n));
    if (l == kInf || u == -kInf) throw ValidationError("barrier band is empty" + where(n));
    if (!(spec.envelopes.eta(n) >= 0.0) || !(spec.envelopes.growth(n) >= 0.0))
      throw ValidationError("envelopes must be nonnegative" + where(n));
    if (!(spec.g_bound(n) >= 0.0)) throw ValidationError("g bound must be nonnegative" + where(n));
  });
  for (int j = 0; j <= grid.steps(); ++j) {
    const Node n{grid.steps(), j};
    const double xi = spec.terminal[static_cast<std::size_t>(j)];
    if (!std::isfinite(xi)) throw ValidationError("terminal value not finite" + where(n));
    if (xi < spec.lower(n) || xi > spec.upper(n)) throw ValidationError("terminal value outside band" + where(n));
  }
  grid.for_each_node(grid.steps() - 1, [&](Node n) {
    for (Branch b : kBranches) {
      if (!(spec.clock.clock(n, b) >= 0.0)) throw ValidationError("clock A must be nondecreasing" + where(n));
      if (!(spec.clock.forcing_plus(n, b) >= 0.0) || !(spec.clock.forcing_minus(n, b) >= 0.0))
        throw ValidationError("forcing parts R+ and R- must be nondecreasing" + where(n));
    }
  });
}

// Shift and normalization --------------------------------------------------

ShiftParts shift_parts(const AdaptedField& shift, const BranchMeasure& measure, Node n) {
  if (n.step >= shift.last_step()) return {};
  return {expect_next(shift, n, measure) - shift(n), martingale_rep(shift, n, measure)};
}

namespace {

bool straddles_zero(const ProblemSpec& spec) {
  bool ok = true;
  spec.grid.for_each_node(spec.grid.steps(), [&](Node n) { ok = ok && spec.lower(n) <= 0.0 && 0.0 <= spec.upper(n); });
  return ok;
}

}  // namespace

ProblemSpec shift_by_S(const ProblemSpec& spec) {
  if (!spec.barriers.shift) {
    if (!straddles_zero(spec)) throw ValidationError("no admissible shift");
    return spec;
  }
  const TimeGrid& grid = spec.grid;
  auto S = std::make_shared<const AdaptedField>(*spec.barriers.shift);
  if (S->last_step() != grid.steps()) throw ValidationError("shift must be defined up to the horizon");

  AdaptedField alpha(grid, 0.0);
  AdaptedField drift(grid, 0.0);
  grid.for_each_node(grid.steps() - 1, [&](Node n) {
    const ShiftParts p = shift_parts(*S, spec.measure, n);
    alpha(n) = p.alpha;
    drift(n) = p.drift;
  });
  auto alpha_ptr = std::make_shared<const AdaptedField>(alpha);

  ProblemSpec out = spec;
  out.barriers.shift.reset();
  grid.for_each_node(grid.steps(), [&](Node n) {
    out.barriers.lower(n) = spec.lower(n) - (*S)(n);
    out.barriers.upper(n) = spec.upper(n) - (*S)(n);
    const double a = alpha(n);
    if (a != 0.0) {
      out.envelopes.eta(n) = spec.envelopes.eta(n) + spec.envelopes.growth(n) * a * a;
      out.envelopes.growth(n) = 2.0 * spec.envelopes.growth(n);
    }
  });
  for (int j = 0; j <= grid.steps(); ++j)
    out.terminal[static_cast<std::size_t>(j)] = spec.terminal[static_cast<std::size_t>(j)] - (*S)({grid.steps(), j});
  grid.for_each_node(grid.steps() - 1, [&](Node n) {
    const double v = drift(n);
    for (Branch b : kBranches) {
      if (v > 0.0) out.clock.forcing_plus(n, b) += v;
      if (v < 0.0) out.clock.forcing_minus(n, b) -= v;
    }
  });

  const DriverF f = spec.f;
  out.f.kind = "shifted_" + f.kind;
  out.f.fn = [f, S, alpha_ptr](const NodeContext& c, double y, double z) {
    return f(c, y + (*S)(c.node), z + (*alpha_ptr)(c.node));
  };
  out.f.uses_y = f.uses_y;
  out.f.uses_z = f.uses_z;
  out.f.envelope = nullptr;
  const DriverG g = spec.g;
  out.g.kind = "shifted_" + g.kind;
  out.g.fn = [g, S](const NodeContext& c, double y) { return g(c, y + (*S)(c.node)); };
  out.g.bound = nullptr;
  return out;
}

ProblemSpec normalize_g(const ProblemSpec& spec) {
  ProblemSpec out = spec;
  auto scale = std::make_shared<AdaptedField>(spec.grid, 1.0);
  spec.grid.for_each_node(spec.grid.steps(), [&](Node n) { (*scale)(n) = 1.0 + spec.g_bound(n); });
  spec.grid.for_each_node(spec.grid.steps() - 1, [&](Node n) {
    for (Branch b : kBranches) out.clock.clock(n, b) = spec.clock.clock(n, b) * (*scale)(n);
  });
  spec.grid.for_each_node(spec.grid.steps(), [&](Node n) { out.g_bound(n) = spec.g_bound(n) / (*scale)(n); });
  const DriverG g = spec.g;
  out.g.kind = "normalized_" + g.kind;
  out.g.fn = [g, scale](const NodeContext& c, double y) { return g(c, y) / (*scale)(c.node); };
  out.g.bound = nullptr;
  return out;
}

}  // namespace drbsde

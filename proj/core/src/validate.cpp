#include "drbsde/validate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace drbsde {

namespace {

struct Sampler {
  Sampler(const SampleOptions& o) : options(o), rng(o.seed) {}

  /// Finite window inside [lower, upper].
  std::pair<double, double> window(double lower, double upper) const {
    double lo = lower;
    double hi = upper;
    if (!std::isfinite(lo) && !std::isfinite(hi)) return {-options.y_window, options.y_window};
    if (!std::isfinite(lo)) lo = hi - 2.0 * options.y_window;
    if (!std::isfinite(hi)) hi = lo + 2.0 * options.y_window;
    return {lo, hi};
  }

  double y(double lower, double upper) {
    auto [lo, hi] = window(lower, upper);
    if (lo == hi) return lo;
    return std::uniform_real_distribution<double>(lo, hi)(rng);
  }

  double z(int k) const {
    if (options.samples <= 1) return 0.0;
    return -options.z_max + 2.0 * options.z_max * k / (options.samples - 1);
  }

  const SampleOptions& options;
  std::mt19937_64 rng;
};

double relative(double excess, double scale) { return excess / std::max(1.0, std::fabs(scale)); }

}  // namespace

std::vector<CheckReport> validate_A1_A2(const ProblemSpec& spec, const SampleOptions& options) {
  CheckReport a1("quadratic growth of f", options.tolerance);
  CheckReport a2("|g| <= 1", options.tolerance);
  Sampler sampler(options);
  spec.grid.for_each_node(spec.grid.steps(), [&](Node n) {
    const NodeContext c = spec.context(n);
    const double eta = spec.envelopes.eta(n);
    const double growth = spec.envelopes.growth(n);
    if (!std::isfinite(eta) || !std::isfinite(growth)) {
      a1.observe(std::numeric_limits<double>::infinity(), Violation{n, 0.0, 0.0, 0.0, "envelope not finite"});
      a1.fail("envelope not finite");
    }
    for (int k = 0; k < std::max(1, options.samples); ++k) {
      const double y = sampler.y(spec.lower(n), spec.upper(n));
      const double z = sampler.z(k);
      const double bound = eta + 0.5 * growth * z * z;
      const double fv = spec.f(c, y, z);
      a1.observe(relative(std::fabs(fv) - bound, bound), Violation{n, y, z, 0.0, "f=" + format_number(fv)});
      if (n.step < spec.grid.steps()) {
        const double gv = spec.g(c, y);
        a2.observe(std::fabs(gv) - 1.0, Violation{n, y, 0.0, 0.0, "g=" + format_number(gv)});
      }
    }
  });
  return {a1, a2};
}

CheckReport validate_shift_in_band(const ProblemSpec& spec) {
  CheckReport r("L <= S <= U", 0.0);
  if (!spec.barriers.shift) {
    r.fail("no shift declared");
    return r;
  }
  const AdaptedField& s = *spec.barriers.shift;
  spec.grid.for_each_node(spec.grid.steps(), [&](Node n) {
    r.observe(std::max(spec.lower(n) - s(n), s(n) - spec.upper(n)), n);
  });
  return r;
}

CheckReport validate_zero_in_band(const ProblemSpec& spec) {
  CheckReport r("L <= 0 <= U", 0.0);
  spec.grid.for_each_node(spec.grid.steps(), [&](Node n) { r.observe(std::max(spec.lower(n), -spec.upper(n)), n); });
  return r;
}

namespace {

CheckReport band_in_unit(const ProblemSpec& spec, const char* name) {
  CheckReport r(name, 0.0);
  spec.grid.for_each_node(spec.grid.steps(), [&](Node n) {
    const double l = spec.lower(n);
    const double u = spec.upper(n);
    double excess = 0.0;
    if (!(l > 0.0)) excess = std::max(excess, std::isfinite(l) ? -l : 1.0);
    if (!(u < 1.0)) excess = std::max(excess, std::isfinite(u) ? u - 1.0 : 1.0);
    if (l > u) excess = std::max(excess, l - u);
    if (!(l > 0.0) && excess == 0.0) excess = std::numeric_limits<double>::min();
    if (!(u < 1.0) && excess == 0.0) excess = std::numeric_limits<double>::min();
    r.observe(excess, n);
  });
  return r;
}

}  // namespace

std::vector<CheckReport> validate_transformed_signs(const ProblemSpec& spec, const SampleOptions& options) {
  const TimeGrid& grid = spec.grid;
  CheckReport h0("dR >= 0", 0.0);
  grid.for_each_node(grid.steps() - 1, [&](Node n) {
    for (Branch b : kBranches) h0.observe(-spec.clock.forcing(n, b), n);
  });

  CheckReport h1("-eta - (C/2)|z|^2 <= f <= 0", options.tolerance);
  CheckReport h2("-1 <= g <= 0", options.tolerance);
  Sampler sampler(options);
  grid.for_each_node(grid.steps(), [&](Node n) {
    const NodeContext c = spec.context(n);
    const double eta = spec.envelopes.eta(n);
    const double growth = spec.envelopes.growth(n);
    // The conditions are stated for every y; sample a window around the band.
    auto [lo, hi] = sampler.window(spec.lower(n), spec.upper(n));
    const double pad = 0.5 * (hi - lo) + 1.0;
    for (int k = 0; k < std::max(1, options.samples); ++k) {
      const double y = sampler.y(lo - pad, hi + pad);
      const double z = sampler.z(k);
      const double fv = spec.f(c, y, z);
      const double floor = eta + 0.5 * growth * z * z;
      h1.observe(std::max(relative(-floor - fv, floor), fv), Violation{n, y, z, 0.0, "f=" + format_number(fv)});
      if (n.step < grid.steps()) {
        const double gv = spec.g(c, y);
        h2.observe(std::max(-1.0 - gv, gv), Violation{n, y, 0.0, 0.0, "g=" + format_number(gv)});
      }
    }
  });

  CheckReport h3 = band_in_unit(spec, "0 < L <= U < 1");

  // A nonincreasing adapted S between the barriers exists iff the running
  // minimum of U stays above L on every path (take S = running min of U).
  CheckReport h4("nonincreasing S between L and U", 0.0);
  const AdaptedField neg_upper =
      AdaptedField::from_function(grid, [&](Node n) { return -spec.upper(n); });
  const PathRange run = running_max(neg_upper);
  grid.for_each_node(grid.steps(), [&](Node n) {
    const double lowest_running_min = -run.hi(n);
    h4.observe(spec.lower(n) - lowest_running_min, n);
  });
  return {h0, h1, h2, h3, h4};
}

std::vector<CheckReport> validate_lipschitz_case(const ProblemSpec& spec, const LipschitzConstants& k,
                                                 const SampleOptions& options) {
  const TimeGrid& grid = spec.grid;
  CheckReport c1("f Lipschitz and -C2 <= f <= 0", options.tolerance);
  CheckReport c2("g Lipschitz and -1 <= g <= 0", options.tolerance);
  Sampler sampler(options);
  grid.for_each_node(grid.steps(), [&](Node n) {
    const NodeContext c = spec.context(n);
    auto [lo, hi] = sampler.window(spec.lower(n), spec.upper(n));
    const double pad = 0.5 * (hi - lo) + 1.0;
    for (int s = 0; s < std::max(1, options.samples); ++s) {
      const double y1 = sampler.y(lo - pad, hi + pad);
      const double y2 = sampler.y(lo - pad, hi + pad);
      const double z1 = sampler.z(s);
      const double z2 = sampler.z(options.samples - 1 - s);
      const double f1 = spec.f(c, y1, z1);
      const double f2 = spec.f(c, y2, z2);
      const double lip = k.f_lipschitz * (std::fabs(y1 - y2) + std::fabs(z1 - z2));
      c1.observe(std::max({std::fabs(f1 - f2) - lip, f1, -k.f_floor - f1}), Violation{n, y1, z1, 0.0, "f"});
      if (n.step < grid.steps()) {
        const double g1 = spec.g(c, y1);
        const double g2 = spec.g(c, y2);
        c2.observe(std::max({std::fabs(g1 - g2) - k.g_lipschitz * std::fabs(y1 - y2), g1, -1.0 - g1}),
                   Violation{n, y1, 0.0, 0.0, "g"});
      }
    }
  });
  CheckReport c3 = band_in_unit(spec, "0 < L <= U < 1");
  CheckReport c4("A_T <= C4 and |R|_T <= C5", 0.0);
  const PathRange a = running_sum(spec.clock.clock);
  const PathRange r = running_sum(EdgeField::from_function(grid, [&](Node n, Branch b) { return spec.clock.variation(n, b); }));
  for (int j = 0; j <= grid.steps(); ++j) {
    const Node n{grid.steps(), j};
    c4.observe(std::max(a.hi(n) - k.clock_total, r.hi(n) - k.forcing_total), n);
  }
  return {c1, c2, c3, c4};
}

}  // namespace drbsde

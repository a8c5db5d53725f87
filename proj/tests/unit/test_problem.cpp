#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "drbsde/catalog.hpp"
#include "drbsde/error.hpp"
#include "drbsde/problem.hpp"
#include "drbsde/validate.hpp"

using namespace drbsde;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ProblemData band_data(int steps, double lower, double upper, double xi) {
  ProblemData d;
  d.steps = steps;
  d.lower = node_fn::constant(lower);
  d.upper = node_fn::constant(upper);
  d.terminal = node_fn::constant(xi);
  return d;
}

}  // namespace

TEST(Problem, NodeFunctions) {
  const NodeContext c{{2, 1}, 0.5, -0.25, 90.0};
  EXPECT_DOUBLE_EQ(node_fn::constant(3.0)(c), 3.0);
  EXPECT_DOUBLE_EQ(node_fn::affine(1.0, 2.0, 4.0)(c), 2.5);
  EXPECT_DOUBLE_EQ(node_fn::put(100.0)(c), 10.0);
  EXPECT_DOUBLE_EQ(node_fn::call(100.0)(c), 0.0);
  EXPECT_DOUBLE_EQ(node_fn::expression("S / 10 + t")(c), 9.5);
  EXPECT_THROW(node_fn::expression("y + 1"), ValidationError);
}

TEST(Problem, Drivers) {
  const NodeContext c{{0, 0}, 0.0, 0.0, 0.0};
  EXPECT_DOUBLE_EQ(DriverF::linear(2.0, 3.0, 1.0)(c, 1.0, -1.0), 0.0);
  EXPECT_DOUBLE_EQ(DriverF::quadratic_z(1.0)(c, 5.0, 2.0), -2.0);
  EXPECT_DOUBLE_EQ(DriverF::constant(0.7)(c, 5.0, 2.0), 0.7);
  EXPECT_DOUBLE_EQ(DriverG::linear(2.0, 1.0)(c, 3.0), 7.0);
  EXPECT_DOUBLE_EQ(DriverF::expression("y*z - t")(c, 2.0, 3.0), 6.0);
  EXPECT_FALSE(DriverF::quadratic_z(1.0).uses_y);
  EXPECT_TRUE(DriverF::quadratic_z(1.0).uses_z);
  EXPECT_THROW(DriverG::expression("z"), ValidationError);
}

TEST(Problem, StructureErrors) {
  EXPECT_THROW(build_problem(band_data(4, 1.0, 0.0, 0.5)), ValidationError);
  EXPECT_THROW(build_problem(band_data(4, 0.0, 1.0, 2.0)), ValidationError);
  EXPECT_THROW(build_problem(band_data(4, kInf, kInf, 0.0)), ValidationError);
  ProblemData d = band_data(4, 0.0, 1.0, 0.5);
  d.clock = node_fn::affine(0.0, 0.0, -1.0);
  EXPECT_THROW(build_problem(d), ValidationError);
  d = band_data(4, 0.0, 1.0, 0.5);
  d.clock = node_fn::constant(1.0);
  EXPECT_THROW(build_problem(d), ValidationError);
  d = band_data(4, 0.0, 1.0, 0.5);
  d.f = DriverF::expression("y");
  EXPECT_THROW(build_problem(d), ValidationError);
}

TEST(Problem, SignedForcingSplitsBySign) {
  ProblemData d = band_data(2, -kInf, kInf, 0.0);
  d.forcing = [](const NodeContext& c) { return c.b; };
  const ProblemSpec s = build_problem(d);
  const double h = s.grid.sqrt_dt();
  EXPECT_DOUBLE_EQ(s.clock.forcing_plus({0, 0}, Branch::up), h);
  EXPECT_DOUBLE_EQ(s.clock.forcing_minus({0, 0}, Branch::up), 0.0);
  EXPECT_DOUBLE_EQ(s.clock.forcing_minus({0, 0}, Branch::down), h);
  EXPECT_DOUBLE_EQ(s.clock.forcing({0, 0}, Branch::down), -h);
}

TEST(Validate, GrowthExamples) {
  ProblemData d = band_data(4, -1.0, 1.0, 0.0);
  d.f = DriverF::quadratic_z(2.0);
  d.g = DriverG::constant(-0.5);
  ProblemSpec s = build_problem(d);
  EXPECT_TRUE(all_passed(validate_A1_A2(s)));

  s.envelopes.growth = AdaptedField(s.grid, 1.0);  // too small for c = 2
  auto r = validate_A1_A2(s);
  EXPECT_FALSE(r[0].passed());
  EXPECT_TRUE(r[1].passed());
  ASSERT_TRUE(r[0].violation().has_value());

  d.f = DriverF::zero();
  d.g = DriverG::constant(-2.0);
  r = validate_A1_A2(build_problem(d));
  EXPECT_TRUE(r[0].passed());
  EXPECT_FALSE(r[1].passed());
  EXPECT_NEAR(r[1].worst(), 1.0, 1e-15);
}

TEST(Validate, CatalogEnvelopesPass) {
  SampleOptions o;
  o.samples = 1000;
  EXPECT_TRUE(all_passed(validate_A1_A2(catalog::quadratic_z(8), o)));
  EXPECT_TRUE(all_passed(validate_A1_A2(catalog::ladder_first(8), o)));
  EXPECT_TRUE(all_passed(validate_A1_A2(catalog::ladder_second(8), o)));
  for (std::uint64_t seed = 0; seed < 10; ++seed)
    EXPECT_TRUE(all_passed(validate_A1_A2(catalog::random_problem(seed, 6), o))) << seed;
}

TEST(Validate, ShiftAndZeroBand) {
  ProblemData d = band_data(2, 1.0, 2.0, 1.5);
  d.shift = node_fn::constant(1.5);
  ProblemSpec s = build_problem(d);
  EXPECT_TRUE(validate_shift_in_band(s).passed());
  EXPECT_FALSE(validate_zero_in_band(s).passed());
  d.shift = node_fn::constant(2.5);
  EXPECT_FALSE(validate_shift_in_band(build_problem(d)).passed());
  EXPECT_TRUE(validate_zero_in_band(catalog::quadratic_z(4)).passed());
}

TEST(Shift, ConstantBand) {
  ProblemData d = band_data(2, 1.0, 2.0, 1.5);
  d.shift = node_fn::constant(1.5);
  const ProblemSpec out = shift_by_S(build_problem(d));
  out.grid.for_each_node(2, [&](Node n) {
    EXPECT_DOUBLE_EQ(out.lower(n), -0.5);
    EXPECT_DOUBLE_EQ(out.upper(n), 0.5);
  });
  EXPECT_FALSE(out.barriers.shift.has_value());
  EXPECT_TRUE(validate_zero_in_band(out).passed());
}

TEST(Shift, NoShiftNeedsZeroInBand) {
  EXPECT_THROW(shift_by_S(build_problem(band_data(2, 1.0, 2.0, 1.5))), ValidationError);
  EXPECT_NO_THROW(shift_by_S(build_problem(band_data(2, -1.0, 2.0, 1.5))));
}

TEST(Shift, BrownianShiftParts) {
  ProblemData d = band_data(6, -kInf, kInf, 0.0);
  d.shift = [](const NodeContext& c) { return c.b; };
  d.up_probability = 0.5;
  const ProblemSpec s = build_problem(d);
  s.grid.for_each_node(5, [&](Node n) {
    const ShiftParts p = shift_parts(*s.barriers.shift, s.measure, n);
    EXPECT_NEAR(p.drift, 0.0, 1e-15);
    EXPECT_NEAR(p.alpha, 1.0, 1e-12);
    // reconstruct S at children
    for (Branch b : kBranches)
      EXPECT_NEAR((*s.barriers.shift)(n) + p.drift + p.alpha * brownian_increment(s.grid, s.measure, n, b),
                  (*s.barriers.shift)(n.child(b)), 1e-12);
  });
}

TEST(Normalize, ScalesClock) {
  ProblemData d = band_data(4, -1.0, 1.0, 0.0);
  d.g = DriverG::constant(-3.0);
  d.g_bound = node_fn::constant(3.0);
  d.clock = node_fn::affine(0.0, 0.0, 1.0);
  const ProblemSpec raw = build_problem(d);
  const ProblemSpec out = normalize_g(raw);
  const NodeContext c = out.context({1, 0});
  EXPECT_DOUBLE_EQ(out.g(c, 0.3), -0.75);
  EXPECT_DOUBLE_EQ(out.clock.clock({1, 0}, Branch::up), 4.0 * raw.clock.clock({1, 0}, Branch::up));
  raw.grid.for_each_node(3, [&](Node n) {
    for (Branch b : kBranches)
      EXPECT_NEAR(out.g(out.context(n), 0.0) * out.clock.clock(n, b),
                  raw.g(raw.context(n), 0.0) * raw.clock.clock(n, b), 1e-15);
  });
  EXPECT_TRUE(validate_A1_A2(out)[1].passed());
  d.normalize_g = true;
  EXPECT_DOUBLE_EQ(build_problem(d).g(c, 0.0), -0.75);
}

namespace {

ProblemData unit_band() {
  ProblemData d = band_data(4, 0.2, 0.8, 0.5);
  d.f = DriverF::expression("-0.5*min(abs(z), 1)");
  d.eta = node_fn::constant(0.5);
  d.growth = node_fn::constant(0.0);
  d.g = DriverG::expression("-0.5*min(abs(y), 1)");
  d.g_bound = node_fn::constant(0.5);
  d.clock = node_fn::affine(0.0, 0.0, 0.5);
  d.forcing_plus = node_fn::affine(0.0, 0.0, 0.25);
  return d;
}

}  // namespace

TEST(Validate, TransformedSigns) {
  const auto ok = validate_transformed_signs(build_problem(unit_band()));
  ASSERT_EQ(ok.size(), 5u);
  for (const CheckReport& r : ok) EXPECT_TRUE(r.passed()) << r.summary();

  ProblemData d = unit_band();
  d.g = DriverG::constant(0.25);
  EXPECT_FALSE(validate_transformed_signs(build_problem(d))[2].passed());
  d = unit_band();
  d.lower = node_fn::constant(0.0);
  EXPECT_FALSE(validate_transformed_signs(build_problem(d))[3].passed());
  d = unit_band();
  d.forcing_minus = node_fn::affine(0.0, 0.0, 1.0);
  EXPECT_FALSE(validate_transformed_signs(build_problem(d))[0].passed());
  // U dips below a later L: no nonincreasing S fits
  d = unit_band();
  d.lower = [](const NodeContext& c) { return c.node.step == 4 ? 0.5 : 0.2; };
  d.upper = [](const NodeContext& c) { return c.node.step == 2 ? 0.4 : 0.8; };
  EXPECT_FALSE(validate_transformed_signs(build_problem(d))[4].passed());
}

TEST(Validate, LipschitzCase) {
  LipschitzConstants k;
  k.clock_total = 0.5;
  k.forcing_total = 0.25;
  const auto ok = validate_lipschitz_case(build_problem(unit_band()), k);
  ASSERT_EQ(ok.size(), 4u);
  for (const CheckReport& r : ok) EXPECT_TRUE(r.passed()) << r.summary();
  k.clock_total = 0.4;
  EXPECT_FALSE(validate_lipschitz_case(build_problem(unit_band()), k)[3].passed());
  ProblemData d = unit_band();
  d.f = DriverF::constant(-2.0);
  EXPECT_FALSE(validate_lipschitz_case(build_problem(d), LipschitzConstants{})[0].passed());
  d.f = DriverF::expression("-0.5*min(abs(z), 1)");
  d.g = DriverG::constant(0.25);
  EXPECT_FALSE(validate_lipschitz_case(build_problem(d), LipschitzConstants{})[1].passed());
}

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "drbsde/catalog.hpp"
#include "drbsde/error.hpp"
#include "drbsde/transform.hpp"

using namespace drbsde;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

ProblemData flat(int steps, double lower, double upper, double xi) {
  ProblemData d;
  d.steps = steps;
  d.lower = node_fn::constant(lower);
  d.upper = node_fn::constant(upper);
  d.terminal = node_fn::constant(xi);
  return d;
}

}  // namespace

TEST(Transform, MIsOneForZeroData) {
  const ProblemSpec s = build_problem(flat(4, 0.0, 0.0, 0.0));
  const AdaptedField m = compute_m(s);
  s.grid.for_each_node(4, [&](Node n) { EXPECT_DOUBLE_EQ(m(n), 1.0); });
}

TEST(Transform, MFollowsIncreasingUpper) {
  ProblemData d = flat(5, 0.0, 0.0, 0.0);
  d.upper = node_fn::affine(0.0, 0.0, 1.0);
  const ProblemSpec s = build_problem(d);
  const AdaptedField m = compute_m(s);
  s.grid.for_each_node(5, [&](Node n) { EXPECT_NEAR(m(n), s.grid.time(n.step) + 1.0, 1e-15); });
}

TEST(Transform, MFormula) {
  ProblemData d = flat(4, 0.0, 0.5, 0.0);
  d.f = DriverF::quadratic_z(0.25);
  d.clock = node_fn::affine(0.0, 0.0, 1.0);
  const ProblemSpec s = build_problem(d);
  const AdaptedField m = compute_m(s);
  EXPECT_NEAR(m({4, 2}), 3.0, 1e-15);
}

TEST(Transform, MErrors) {
  EXPECT_THROW(compute_m(build_problem(flat(3, 0.0, kInf, 0.0))), ValidationError);
  ProblemData d = flat(4, -kInf, kInf, 0.0);
  d.lower = node_fn::constant(-10.0);
  d.upper = [](const NodeContext& c) { return std::fabs(c.b) + 1.0; };
  d.terminal = node_fn::constant(0.0);
  try {
    compute_m(build_problem(d));
    FAIL() << "expected path-dependent m";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("path-dependent m"), std::string::npos);
  }
}

TEST(Transform, ChainCollapses) {
  const ProblemSpec s = build_problem(flat(3, 0.0, 0.0, 0.0));
  const TransformBundle b = transform_data(s);
  s.grid.for_each_node(3, [&](Node n) {
    EXPECT_DOUBLE_EQ(b.lower(n), std::exp(-1.0));
    EXPECT_DOUBLE_EQ(b.upper(n), std::exp(-1.0));
  });
  EXPECT_TRUE(all_passed(check_transform_bounds(b)));
}

TEST(Transform, FTildeExample) {
  const ProblemSpec s = build_problem(flat(2, 0.0, 0.0, 0.0));
  const TransformBundle b = transform_data(s);
  EXPECT_NEAR(b.f_tilde({0, 0}, std::exp(-1.0), 1.0), -std::exp(1.0) / 2.0, 1e-15);
}

TEST(Transform, GTildeExample) {
  const ProblemSpec s = build_problem(flat(2, 0.0, 0.0, 0.0));
  const TransformBundle b = transform_data(s);
  for (double yb : {0.1, 0.3, std::exp(-1.0)}) {
    const double gt = b.g_tilde({0, 0}, Branch::up, yb);
    EXPECT_NEAR(gt, yb * (1.0 - std::log(yb)), 1e-15);
  }
  const double yb = std::exp(-1.0);
  const double gb = b.g_bar({0, 0}, Branch::up, yb);
  EXPECT_NEAR(gb, (yb * 2.0 - 4.0) / 8.0, 1e-15);
  EXPECT_GE(gb, -1.0);
  EXPECT_LE(gb, 0.0);
}

TEST(Transform, BoundsOnCatalog) {
  SampleOptions o;
  o.samples = 1000;
  ProblemSpec ladder = catalog::ladder_second(8);
  ladder.barriers.shift = AdaptedField(ladder.grid, 0.5);
  for (const ProblemSpec& s : {catalog::quadratic_z(8), shift_by_S(ladder)}) {
    const auto reports = check_transform_bounds(transform_data(s), o);
    EXPECT_EQ(reports.size(), 8u);
    for (const CheckReport& r : reports) EXPECT_TRUE(r.passed()) << r.summary();
  }
}

TEST(Transform, ForwardAndInverseExamples) {
  const ProblemSpec s = build_problem(flat(2, -1.0, 0.0, 0.0));
  const TransformBundle b = transform_data(s);
  LatticeSolution zero(s.grid);
  zero.z = AdaptedField(s.grid, 1, 2.0);
  const LatticeSolution f = map_solution_forward(zero, b);
  const double m = b.m({0, 0});
  ASSERT_DOUBLE_EQ(m, 1.0);
  EXPECT_DOUBLE_EQ(f.y({1, 0}), std::exp(-1.0));
  EXPECT_DOUBLE_EQ(f.z({0, 0}), 2.0 * std::exp(-1.0));
  const LatticeSolution back = map_solution_inverse(f, b);
  EXPECT_NEAR(back.y({1, 1}), 0.0, 1e-15);

  LatticeSolution mid(s.grid);
  mid.y = AdaptedField(s.grid, std::exp(-1.0));
  EXPECT_NEAR(map_solution_inverse(mid, b).y({2, 1}), 0.0, 1e-15);
}

TEST(Transform, RoundTrip) {
  const ProblemSpec s = catalog::ladder_second(12);
  const TransformBundle b = transform_data(s);
  const LatticeSolution sol = solve(s);
  const LatticeSolution back = map_solution_inverse(map_solution_forward(sol, b), b);
  s.grid.for_each_node(12, [&](Node n) {
    EXPECT_NEAR(back.y(n), sol.y(n), 1e-12);
    if (n.step < 12) {
      EXPECT_NEAR(back.z(n), sol.z(n), 1e-12);
      EXPECT_NEAR(back.dk_plus(n), sol.dk_plus(n), 1e-12);
      EXPECT_NEAR(back.dk_minus(n), sol.dk_minus(n), 1e-12);
    }
  });
}

TEST(Transform, MappingErrors) {
  const ProblemSpec s = build_problem(flat(2, -1.0, 0.0, 0.0));
  const TransformBundle b = transform_data(s);
  LatticeSolution bad(s.grid);
  bad.y({1, 0}) = 0.5;
  EXPECT_THROW(map_solution_forward(bad, b), ValidationError);
  LatticeSolution neg(s.grid);  // Ybar = 0
  EXPECT_THROW(map_solution_inverse(neg, b), ValidationError);
}

TEST(Transform, ItoConventionConverges) {
  // With a clock the transformed solution tends to the direct one as N
  // grows; the printed forcing coefficient leaves a fixed gap.
  auto gap = [](int steps, ForcingConvention conv) {
    ProblemData d;
    d.steps = steps;
    d.lower = node_fn::constant(0.01);
    d.upper = node_fn::constant(0.99);
    d.terminal = [](const NodeContext& c) { return 0.5 + 0.45 * std::tanh(5.0 * c.b); };
    d.clock = node_fn::affine(0.0, 0.0, 1.0);
    const ProblemSpec s = build_problem(d);
    const TransformBundle b = transform_data(s, conv);
    return std::fabs(solve(s).root() - map_solution_inverse(solve(b.problem()), b).root());
  };
  const double ito64 = gap(64, ForcingConvention::ito), ito256 = gap(256, ForcingConvention::ito);
  EXPECT_LT(ito256, 0.5 * ito64);
  EXPECT_LT(ito256, 2e-2);
  EXPECT_GT(gap(256, ForcingConvention::as_printed), 10.0 * ito256);
}

TEST(Transform, BundleCsv) {
  const std::string csv = bundle_csv(transform_data(build_problem(flat(2, 0.0, 0.0, 0.0))));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "step,level,m,Lbar,Ubar,dAbar_up,dAbar_down,dRbar_up,dRbar_down");
}

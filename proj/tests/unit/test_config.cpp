#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "drbsde/config.hpp"
#include "drbsde/error.hpp"

using namespace drbsde;

namespace {

std::string data_file(const std::string& name) { return read_text_file(std::string(DRBSDE_TEST_DATA) + "/" + name); }

std::string error_of(const std::string& text) {
  try {
    parse_problem_config(text);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, ZeroProblem) {
  const ProblemConfig c = parse_problem_config(data_file("zero.json"));
  EXPECT_EQ(c.data.steps, 16);
  const ProblemSpec s = build_problem(c.data);
  EXPECT_DOUBLE_EQ(s.terminal[16], 1.0 + s.grid.brownian({16, 16}));
  EXPECT_TRUE(std::isinf(s.lower({3, 1})));
  EXPECT_EQ(parse_problem_config(data_file("zero.json"), 4).data.steps, 4);
}

TEST(Config, QuadraticAndSnell) {
  const ProblemSpec q = build_problem(parse_problem_config(data_file("quadratic_z.json")).data);
  EXPECT_EQ(q.f.kind, "quadratic_z");
  EXPECT_DOUBLE_EQ(q.envelopes.growth({0, 0}), 1.0);
  EXPECT_NEAR(q.terminal[32], 0.5 * std::tanh(q.grid.brownian({32, 32})), 1e-15);
  const ProblemSpec s = build_problem(parse_problem_config(data_file("snell.json")).data);
  EXPECT_DOUBLE_EQ(s.lower({0, 0}), 0.0);
  EXPECT_TRUE(std::isinf(s.upper({0, 0})));
}

TEST(Config, Game) {
  const DynkinConfig c = parse_dynkin_config(data_file("onestep.json"));
  EXPECT_DOUBLE_EQ(c.game.lower({0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(c.game.upper({1, 0}), 100.0);
  EXPECT_DOUBLE_EQ(c.game.tie({0, 0}), 2.0);
  EXPECT_DOUBLE_EQ(c.game.terminal[1], 3.0);
}

TEST(Config, Option) {
  const OptionConfig c = parse_option_config(data_file("put_penalty.json"));
  EXPECT_DOUBLE_EQ(c.market.up, 1.2);
  EXPECT_DOUBLE_EQ(c.market.down, 0.8);
  EXPECT_EQ(c.grid.steps(), 1);
  const NodeContext ctx{{0, 0}, 0.0, 0.0, 80.0};
  EXPECT_DOUBLE_EQ(c.payoffs.upper(ctx), 25.0);
  EXPECT_DOUBLE_EQ(c.payoffs.tie(ctx), 20.0);
}

TEST(Config, FullProblemSchema) {
  const std::string text = R"({
    "grid": {"T": 2.0, "N": 8, "q": 0.4},
    "driver_f": {"kind": "linear", "params": {"a": 0.1, "b": 0.2, "c": -0.3}},
    "driver_g": {"kind": "constant", "params": {"c": -2.0}, "normalize": true},
    "barriers": {"L": {"kind": "affine", "c0": -1.0, "ct": -0.1}, "U": 2.0, "S": 0.5},
    "terminal": 0.5,
    "clock": {"A": "t", "R": "0.1*B"},
    "envelopes": {"g_bound": 2.0},
    "solver": {"picard_tol": 1e-13, "picard_max_iter": 50, "damping": 0.9, "bisection_fallback": false}
  })";
  const ProblemConfig c = parse_problem_config(text);
  EXPECT_DOUBLE_EQ(c.solver.picard_tol, 1e-13);
  EXPECT_EQ(c.solver.picard_max_iter, 50);
  EXPECT_FALSE(c.solver.bisection_fallback);
  const ProblemSpec s = build_problem(c.data);
  EXPECT_DOUBLE_EQ(s.measure.up({0, 0}), 0.4);
  EXPECT_DOUBLE_EQ(s.g(s.context({0, 0}), 0.0), -2.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.clock.clock({0, 0}, Branch::up), 0.75);
  ASSERT_TRUE(s.barriers.shift.has_value());
  EXPECT_DOUBLE_EQ((*s.barriers.shift)({2, 1}), 0.5);
}

TEST(Config, Errors) {
  EXPECT_THROW(read_text_file("/nonexistent/file.json"), ValidationError);
  EXPECT_NE(error_of("{").find("config"), std::string::npos);
  EXPECT_NE(error_of(R"({"grid": {"T": 1, "N": 4}, "barriers": {"L": 0, "U": 1}, "terminal": 0.5, "extra": 1})")
                .find("extra"),
            std::string::npos);
  EXPECT_NE(error_of(R"({"grid": {"T": 1, "N": 0}, "barriers": {"L": 0, "U": 1}, "terminal": 0.5})"), "");
  EXPECT_NE(error_of(R"({"grid": {"T": 1, "N": 4, "q": 1.5}, "barriers": {"L": 0, "U": 1}, "terminal": 0.5})"), "");
  EXPECT_NE(error_of(R"({"grid": {"T": 1, "N": 4}, "driver_f": {"kind": "cubic"}, "barriers": {"L": 0, "U": 1},
                       "terminal": 0.5})"),
            "");
  EXPECT_NE(error_of(R"({"grid": {"T": 1, "N": 4}, "barriers": {"L": 0, "U": 1}, "terminal": "z"})"), "");
  EXPECT_NE(error_of(R"({"grid": {"T": 1, "N": 4}, "barriers": {"L": 0, "U": 1}})"), "");
  EXPECT_NE(error_of(R"({"grid": {"T": 1, "N": 4}, "barriers": {"L": 0, "U": 1}, "terminal": 0.5,
                       "solver": {"damping": 2}})"),
            "");
  EXPECT_NE(error_of(R"([1, 2])"), "");
}

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "drbsde/catalog.hpp"
#include "drbsde/compare.hpp"
#include "drbsde/games.hpp"
#include "drbsde/regularize.hpp"
#include "drbsde/solver.hpp"
#include "drbsde/transform.hpp"
#include "drbsde/validate.hpp"

using namespace drbsde;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string num(double v) { return format_number(v); }

void require(Outcome& o, bool ok, const std::string& what) {
  if (!ok) {
    o.pass = false;
    if (!o.detail.empty()) o.detail += "; ";
    o.detail += what;
  }
}

void require_all(Outcome& o, const std::vector<CheckReport>& reports, const std::string& where) {
  for (const CheckReport& r : reports)
    if (!r.passed()) require(o, false, where + ": " + r.summary());
}

// 1 ------------------------------------------------------------------------
Outcome solver_contract() {
  Outcome o;
  double worst_path = 0.0;
  int largest = 0;
  for (std::uint64_t seed = 1000; seed < 1050; ++seed) {
    const ProblemSpec spec = catalog::random_problem(seed, 32);
    largest = std::max(largest, spec.grid.steps());
    const std::vector<CheckReport> assumptions = validate_A1_A2(spec);
    require_all(o, assumptions, "seed " + std::to_string(seed));
    const Residuals r = residual_report(spec, solve(spec));
    worst_path = std::max(worst_path, r.pathwise);
    require(o, r.band == 0.0 && r.skorohod == 0.0 && r.singularity == 0.0 && r.negative_k == 0.0 && r.terminal == 0.0,
            "seed " + std::to_string(seed) + " band/Skorohod/singularity nonzero");
    require(o, r.pathwise <= 1e-10, "seed " + std::to_string(seed) + " pathwise " + num(r.pathwise));
  }
  if (o.pass)
    o.detail = "50 instances, N <= " + std::to_string(largest) + ", max pathwise residual " + num(worst_path);
  return o;
}

// 2 ------------------------------------------------------------------------
Outcome transform_bounds() {
  Outcome o;
  std::vector<std::pair<std::string, ProblemSpec>> instances;
  instances.emplace_back("quadratic_z", catalog::quadratic_z(32));
  {
    ProblemSpec s = catalog::ladder_second(32);
    s.barriers.shift = AdaptedField(s.grid, 0.5);
    instances.emplace_back("ladder_second shifted by 1/2", shift_by_S(s));
  }
  {
    ProblemData d;
    d.steps = 16;
    d.f = DriverF::quadratic_z(node_fn::affine(0.5, 0.0, 0.5));
    d.g = DriverG::linear(-0.5, -0.2);
    d.clock = node_fn::affine(0.0, 0.0, 1.0);
    d.forcing = node_fn::affine(0.0, 0.0, -0.3);
    d.lower = node_fn::affine(-1.0, 0.0, -0.5);
    d.upper = node_fn::affine(0.2, 0.0, 0.8);
    d.terminal = [](const NodeContext& c) { return std::max(-1.5, std::min(1.0, 0.4 * c.b)); };
    instances.emplace_back("increasing U, C, signed R", build_problem(d));
  }
  {
    ProblemData d;
    d.steps = 16;
    d.f = DriverF::quadratic_z(1.0);
    d.lower = [](const NodeContext& c) { return 0.5 * c.b + 0.5; };
    d.upper = [](const NodeContext& c) { return 0.5 * c.b + 1.5; };
    d.shift = [](const NodeContext& c) { return 0.5 * c.b + 1.0; };
    d.terminal = [](const NodeContext& c) { return 0.5 * c.b + 1.0 + 0.4 * std::tanh(c.b); };
    instances.emplace_back("Brownian shift S", shift_by_S(build_problem(d)));
  }
  SampleOptions opt;
  opt.samples = 1000;
  opt.tolerance = 1e-12;
  std::size_t checked = 0;
  for (const auto& [name, spec] : instances) {
    const std::vector<CheckReport> reports = check_transform_bounds(transform_data(spec), opt);
    for (const CheckReport& r : reports) checked += r.checked();
    require_all(o, reports, name);
  }
  if (o.pass) o.detail = std::to_string(instances.size()) + " instances, " + std::to_string(checked) + " evaluations";
  return o;
}

// 3 ------------------------------------------------------------------------
Outcome equivalence() {
  Outcome o;
  std::string trail;
  double prev = std::numeric_limits<double>::infinity();
  double last = 0.0;
  for (int n : {8, 16, 32, 64}) {
    const ProblemSpec spec = catalog::quadratic_z(n);
    const double gap = std::fabs(solve(spec).root() - solve_via_transform(spec).root());
    trail += (trail.empty() ? "" : " ") + std::string("N=") + std::to_string(n) + ":" + num(gap);
    require(o, gap < prev, "gap not decreasing at N=" + std::to_string(n));
    prev = gap;
    last = gap;
  }
  require(o, last < 5e-3, "gap at N=64 is " + num(last));
  o.detail = (o.detail.empty() ? "" : o.detail + "; ") + "gaps " + trail;
  return o;
}

// 4 ------------------------------------------------------------------------
Outcome regularization() {
  Outcome o;
  SupConvOptions opt;
  opt.levels = {1, 2, 4, 8, 16};
  const NodeContext ctx{{0, 0}, 0.0, 0.0, 0.0};
  const std::vector<std::pair<std::string, DriverF>> fs = {
      {"-z^2/2", DriverF::quadratic_z(1.0)},
      {"-abs(y) - z^2", DriverF::expression("-abs(y) - z^2")},
      {"-y^2/2 - 2*abs(z)", DriverF::expression("-0.5*y^2 - 2*abs(z)")},
  };
  for (const auto& [name, f] : fs) {
    // Drivers of (y, z) search a 2-d grid; a coarser step keeps it quick.
    SupConvOptions o2 = opt;
    if (f.uses_y && f.uses_z) o2.h = 2e-2;
    require_all(o, supconv_properties(f, ctx, o2), name);
  }
  require_all(o, supconv_properties(DriverG::expression("-min(max(y,0),1)"), ctx, opt), "g clip");
  require_all(o, supconv_properties(DriverG::expression("-y^2"), ctx, opt), "g = -y^2");
  if (o.pass) o.detail = "5 drivers x 4 properties, levels 1 2 4 8 16";
  return o;
}

// 5 ------------------------------------------------------------------------
Outcome ladder() {
  Outcome o;
  double worst = 0.0;
  for (const auto& [name, spec] :
       std::vector<std::pair<std::string, ProblemSpec>>{{"ladder_first", catalog::ladder_first(32)},
                                                        {"ladder_second", catalog::ladder_second(32)}}) {
    const LadderResult r = ladder_orderings(spec, 4, 4, 1e-2, {}, 1e-10);
    for (const CheckReport& c : r.checks) worst = std::max(worst, c.worst());
    require_all(o, r.checks, name);
  }
  if (o.pass) o.detail = "n, i <= 4 on 2 instances, worst excess " + num(worst);
  return o;
}

// 6 ------------------------------------------------------------------------
Outcome dynkin() {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  std::vector<catalog::NamedGame> games = catalog::dynkin_games();
  for (std::uint64_t seed = 0; seed < 20; ++seed)
    games.push_back({"random depth 3 seed " + std::to_string(seed), random_game(3, seed)});
  double worst = 0.0;
  for (const auto& [name, game] : games) {
    const SaddleReport s = saddle_check(game, 1e-12);
    for (const CheckReport& c : s.checks) worst = std::max(worst, c.worst());
    require_all(o, s.checks, name);
    if (game.grid.steps() == 3) require(o, s.rules == 128, name + ": expected 128 rules");
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  require(o, secs < 10.0, "runtime " + num(secs) + " s");
  if (o.pass) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f s", secs);
    o.detail = std::to_string(games.size()) + " games, worst deviation " + num(worst) + ", " + buf;
  }
  return o;
}

// 7 ------------------------------------------------------------------------
GameOptionPayoffs put_with_penalty(double strike, double penalty) {
  GameOptionPayoffs p;
  p.lower = node_fn::put(strike);
  p.upper = [=](const NodeContext& c) { return std::max(strike - c.s, 0.0) + penalty; };
  p.tie = p.lower;
  p.terminal = p.lower;
  return p;
}

Outcome game_option() {
  Outcome o;
  MarketModel worked;
  worked.spot = 100.0;
  worked.rate = 0.0;
  worked.up = 1.2;
  worked.down = 0.8;
  const GameOptionResult r = price_game_option(worked, TimeGrid(1.0, 1), put_with_penalty(100.0, 5.0));
  require(o, std::fabs(r.price - 5.0) <= 1e-12, "worked V0 " + num(r.price));
  const double enumerated = enumerated_game_value(r.game);
  require(o, std::fabs(enumerated - 5.0) <= 1e-12, "worked enumeration " + num(enumerated));

  MarketModel m;
  m.spot = 100.0;
  m.rate = 0.05;
  m.volatility = 0.3;
  double worst_american = 0.0;
  for (int n : {1, 2, 4, 8, 16, 32, 64}) {
    const TimeGrid grid(1.0, n);
    const double game = price_game_option(m, grid, put_with_penalty(100.0, 1e12)).price;
    const double am = american_price(m, grid, node_fn::put(100.0));
    worst_american = std::max(worst_american, std::fabs(game - am));
  }
  require(o, worst_american <= 1e-12, "American gap " + num(worst_american));

  double financing = 0.0, surplus = std::numeric_limits<double>::infinity();
  auto hedge = [&](const MarketModel& mk, const TimeGrid& grid, const GameOptionPayoffs& p, const std::string& name) {
    const GameOptionResult g = price_game_option(mk, grid, p);
    const HedgeReport h = verify_hedge(mk, g, 1e-10);
    financing = std::max(financing, h.self_financing_residual);
    surplus = std::min(surplus, h.min_surplus);
    require_all(o, h.checks, name);
  };
  hedge(worked, TimeGrid(1.0, 1), put_with_penalty(100.0, 5.0), "worked hedge");
  hedge(m, TimeGrid(1.0, 4), put_with_penalty(100.0, 3.0), "N=4 hedge");
  hedge(m, TimeGrid(1.0, 16), put_with_penalty(100.0, 2.0), "N=16 hedge");
  hedge(m, TimeGrid(1.0, 20), put_with_penalty(100.0, 1e12), "N=20 American hedge");
  o.detail = (o.detail.empty() ? "" : o.detail + "; ") + "V0 " + num(r.price) + ", American gap " +
             num(worst_american) + ", self-financing residual " + num(financing) + " (<= 1e-10), min surplus " +
             num(surplus);
  return o;
}

// 8 ------------------------------------------------------------------------
Outcome comparison() {
  Outcome o;
  const FuzzSummary f = comparison_fuzz(100, 1, 16, {}, 1e-10);
  require(o, f.pairs == 100, "ran " + std::to_string(f.pairs) + " pairs");
  require(o, f.failed_pairs == 0, std::to_string(f.failed_pairs) + " failed pairs: " + f.first_failure);
  require_all(o, f.checks, "fuzz");
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const std::vector<CheckReport> d = degenerate_barrier_checks(seed);
    require_all(o, d, "degenerate seed " + std::to_string(seed));
    for (const CheckReport& c : d) require(o, c.worst() == 0.0, c.name() + " not identically zero");
  }
  if (o.pass)
    o.detail = "100 pairs, " + std::to_string(f.coincidence_nodes) + " coincidence nodes, degenerate sides zero";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  // Optional argument: run only the numbered criterion.
  const std::size_t only = argc > 1 ? static_cast<std::size_t>(std::atoi(argv[1])) : 0;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"solver contract on 50 random instances", solver_contract},
      {"transform bounds", transform_bounds},
      {"direct vs transform route", equivalence},
      {"sup-convolution properties", regularization},
      {"approximation ladder orderings", ladder},
      {"Dynkin game saddle points", dynkin},
      {"game option price and hedge", game_option},
      {"comparison of ordered pairs", comparison},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    if (only != 0 && only != k + 1) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    if (!o.pass) ++failures;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}

#include "cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "drbsde/catalog.hpp"
#include "drbsde/compare.hpp"
#include "drbsde/config.hpp"
#include "drbsde/error.hpp"
#include "drbsde/games.hpp"
#include "drbsde/regularize.hpp"
#include "drbsde/report.hpp"
#include "drbsde/solver.hpp"
#include "drbsde/transform.hpp"

namespace drbsde::cli {

namespace {

struct Request {
  std::string config;
  std::string out;
  std::string format = "json";
  int steps = 0;
  bool refine = false;
  std::uint64_t seed = 1;
  std::size_t batch = 100;
  std::string route = "direct";
  int levels = 4;
};

/// Node table kept as rows so it can go out as CSV or JSON.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<Json>> rows;

  std::string csv() const {
    CsvTable t(header);
    for (const auto& r : rows) {
      std::vector<std::string> cells;
      for (const auto& v : r) {
        std::string s = v.dump(0);
        if (s.size() >= 2 && s.front() == '"') s = s.substr(1, s.size() - 2);
        cells.push_back(s);
      }
      t.add_row(cells);
    }
    return t.str();
  }
  std::string json() const {
    Json arr = Json::array();
    for (const auto& r : rows) {
      Json o = Json::object();
      for (std::size_t i = 0; i < header.size(); ++i) o.set(header[i], r[i]);
      arr.push(o);
    }
    return arr.dump(2) + "\n";
  }
};

class Emitter {
 public:
  Emitter(const Request& req, std::ostream& out) : req_(req), out_(out) {
    if (!req.out.empty()) std::filesystem::create_directories(req.out);
  }

  void table(const std::string& stem, const Table& t) {
    const bool as_json = req_.format == "json";
    const std::string text = as_json ? t.json() : t.csv();
    if (!req_.out.empty()) {
      write(stem + (as_json ? ".json" : ".csv"), text);
    } else if (!as_json) {
      if (printed_table_) out_ << "\n";
      out_ << text;
      printed_table_ = true;
    }
  }

  void summary(const Json& s) {
    const std::string text = s.dump(2) + "\n";
    if (!req_.out.empty()) write("summary.json", text);
    if (!req_.out.empty() || req_.format == "json") out_ << text;
  }

 private:
  void write(const std::string& name, const std::string& text) {
    const std::filesystem::path p = std::filesystem::path(req_.out) / name;
    std::ofstream f(p, std::ios::binary);
    if (!f) throw ValidationError("cannot write '" + p.string() + "'");
    f << text;
  }

  const Request& req_;
  std::ostream& out_;
  bool printed_table_ = false;
};

Json number(double v) { return Json(v); }

double expected_total(const AdaptedField& increments, const BranchMeasure& measure) {
  const TimeGrid& grid = increments.grid();
  double total = 0.0;
  for (int k = 0; k <= increments.last_step(); ++k) {
    const std::vector<double> p = layer_probabilities(grid, measure, k);
    for (int j = 0; j <= k; ++j) total += p[static_cast<std::size_t>(j)] * increments({k, j});
  }
  return total;
}

Json residual_json(const Residuals& r) {
  Json o = Json::object();
  o.set("band", r.band);
  o.set("skorohod", r.skorohod);
  o.set("singularity", r.singularity);
  o.set("pathwise", r.pathwise);
  o.set("terminal", r.terminal);
  o.set("negative_k", r.negative_k);
  o.set("max", r.max());
  return o;
}

LatticeSolution solve_route(const ProblemSpec& spec, const SolverConfig& config, const std::string& route) {
  return route == "transform" ? solve_via_transform(spec, config) : solve(spec, config);
}

Table solution_table(const ProblemSpec& spec, const LatticeSolution& sol) {
  Table t{{"step", "level", "t", "B", "Y", "Z", "dKplus", "dKminus"}, {}};
  const TimeGrid& g = spec.grid;
  g.for_each_node(g.steps(), [&](Node n) {
    const bool inner = n.step < g.steps();
    t.rows.push_back({Json(n.step), Json(n.level), number(g.time(n.step)), number(g.brownian(n)), number(sol.y(n)),
                      number(inner ? sol.z(n) : 0.0), number(inner ? sol.dk_plus(n) : 0.0),
                      number(inner ? sol.dk_minus(n) : 0.0)});
  });
  return t;
}

int run_solve(const Request& req, std::ostream& out) {
  const std::string text = read_text_file(req.config);
  const ProblemConfig cfg = parse_problem_config(text, req.steps);
  const ProblemSpec spec = build_problem(cfg.data);
  const LatticeSolution sol = solve_route(spec, cfg.solver, req.route);
  const Residuals res = residual_report(spec, sol);

  Emitter emit(req, out);
  emit.table("nodes", solution_table(spec, sol));
  Json s = Json::object();
  s.set("mode", "solve");
  s.set("route", req.route);
  s.set("horizon", spec.grid.horizon());
  s.set("steps", spec.grid.steps());
  s.set("Y0", sol.root());
  s.set("Z0", spec.grid.steps() > 0 ? sol.z({0, 0}) : 0.0);
  s.set("expected_K_plus_T", expected_total(sol.dk_plus, spec.measure));
  s.set("expected_K_minus_T", expected_total(sol.dk_minus, spec.measure));
  s.set("residuals", residual_json(res));
  s.set("picard_max_iterations", sol.diagnostics.max_picard_iterations);
  s.set("bisection_nodes", sol.diagnostics.bisection_nodes);

  if (req.refine) {
    Table t{{"N", "Y0_direct", "Y0_transform", "gap", "direct_change", "transform_change"}, {}};
    std::vector<double> gaps, roots;
    std::string transform_note;
    double prev_d = std::nan(""), prev_t = std::nan("");
    for (int n : {8, 16, 32, 64}) {
      const ProblemSpec sn = build_problem(parse_problem_config(text, n).data);
      const double d = solve(sn, cfg.solver).root();
      double tr = std::nan("");
      try {
        tr = solve_via_transform(sn, cfg.solver).root();
      } catch (const ValidationError& e) {
        transform_note = e.what();
      }
      const double gap = std::fabs(d - tr);
      gaps.push_back(gap);
      roots.push_back(d);
      t.rows.push_back({Json(n), number(d), number(tr), number(gap), number(d - prev_d), number(tr - prev_t)});
      prev_d = d;
      prev_t = tr;
    }
    emit.table("refine", t);
    bool shrinking = true;
    for (std::size_t i = 1; i < gaps.size(); ++i) shrinking = shrinking && gaps[i] <= gaps[i - 1];
    Json r = Json::object();
    r.set("N", Json(Json::Array{Json(8), Json(16), Json(32), Json(64)}));
    Json root_arr = Json::array(), gap_arr = Json::array();
    for (double d : roots) root_arr.push(d);
    for (double g : gaps) gap_arr.push(std::isnan(g) ? Json(nullptr) : Json(g));
    r.set("Y0_direct", root_arr);
    r.set("gap", gap_arr);
    r.set("gap_nonincreasing", shrinking);
    if (!transform_note.empty()) r.set("transform_unavailable", transform_note);
    s.set("refine", r);
  }
  emit.summary(s);
  return ok;
}

Json checks_json(const std::vector<CheckReport>& checks) { return to_json(checks); }

int run_dynkin(const Request& req, std::ostream& out) {
  const DynkinConfig cfg = parse_dynkin_config(read_text_file(req.config), req.steps);
  const DynkinResult res = dynkin_value(cfg.game, cfg.solver);
  const TimeGrid& g = cfg.game.grid;
  Table t{{"step", "level", "t", "B", "Y", "F_L", "F_U", "lambda_star", "sigma_star"}, {}};
  g.for_each_node(g.steps(), [&](Node n) {
    const bool inner = n.step < g.steps();
    t.rows.push_back({Json(n.step), Json(n.level), number(g.time(n.step)), number(g.brownian(n)),
                      number(res.solution.y(n)), number(cfg.game.utility(cfg.game.lower(n))),
                      number(cfg.game.utility(cfg.game.upper(n))), Json(inner ? int(res.lambda_star(n)) : 1),
                      Json(inner ? int(res.sigma_star(n)) : 1)});
  });
  Emitter emit(req, out);
  emit.table("nodes", t);
  Json s = Json::object();
  s.set("mode", "dynkin");
  s.set("utility", cfg.game.utility.name());
  s.set("steps", g.steps());
  s.set("value", res.value());
  s.set("lambda_star_nodes", res.lambda_star.count(g.steps() - 1));
  s.set("sigma_star_nodes", res.sigma_star.count(g.steps() - 1));
  bool passed = true;
  if (g.steps() <= 4) {
    const SaddleReport sr = saddle_check(cfg.game);
    s.set("saddle_payoff", sr.saddle_payoff);
    s.set("enumerated_value", sr.sup_inf);
    s.set("checks", checks_json(sr.checks));
    if (!sr.counterexample.empty()) s.set("counterexample", sr.counterexample);
    passed = all_passed(sr.checks);
  }
  emit.summary(s);
  return passed ? ok : validation_failure;
}

int run_option(const Request& req, std::ostream& out) {
  const OptionConfig cfg = parse_option_config(read_text_file(req.config), req.steps);
  const GameOptionResult res = price_game_option(cfg.market, cfg.grid, cfg.payoffs, cfg.solver);
  const TimeGrid& g = cfg.grid;
  Table t{{"step", "level", "S", "V", "cancel", "gamma", "beta"}, {}};
  g.for_each_node(g.steps(), [&](Node n) {
    const bool inner = n.step < g.steps();
    t.rows.push_back({Json(n.step), Json(n.level), number(res.spot(n)), number(res.value(n)),
                      Json(inner ? int(res.hedge.cancel(n)) : 0), number(inner ? res.hedge.stock(n) : 0.0),
                      number(inner ? res.hedge.bond(n) : 0.0)});
  });
  Emitter emit(req, out);
  emit.table("nodes", t);
  Json s = Json::object();
  s.set("mode", "option");
  s.set("steps", g.steps());
  s.set("risk_neutral_up", res.q);
  s.set("up_factor", cfg.market.up_factor(g));
  s.set("down_factor", cfg.market.down_factor(g));
  s.set("V0", res.price);
  s.set("cancel_at_0", g.steps() > 0 && res.hedge.cancel({0, 0}));
  bool passed = true;
  if (g.steps() <= 20) {
    const HedgeReport h = verify_hedge(cfg.market, res);
    s.set("self_financing_residual", h.self_financing_residual);
    s.set("min_surplus", h.min_surplus);
    s.set("checks", checks_json(h.checks));
    if (!h.counterexample.empty()) s.set("counterexample", h.counterexample);
    passed = all_passed(h.checks);
  }
  emit.summary(s);
  return passed ? ok : validation_failure;
}

int run_verify_comparison(const Request& req, std::ostream& out) {
  const FuzzSummary f = comparison_fuzz(req.batch, req.seed);
  const std::vector<CheckReport> degenerate = degenerate_barrier_checks(req.seed);
  Json s = Json::object();
  s.set("mode", "verify comparison");
  s.set("seed", static_cast<std::int64_t>(req.seed));
  s.set("pairs", f.pairs);
  s.set("failed_pairs", f.failed_pairs);
  s.set("coincidence_nodes", f.coincidence_nodes);
  s.set("checks", checks_json(f.checks));
  s.set("degenerate_barriers", checks_json(degenerate));
  if (!f.first_failure.empty()) s.set("first_failure", f.first_failure);
  Emitter(req, out).summary(s);
  return f.failed_pairs == 0 && all_passed(degenerate) ? ok : validation_failure;
}

ProblemSpec problem_or(const Request& req, ProblemSpec fallback) {
  if (req.config.empty()) return fallback;
  return build_problem(parse_problem_config(read_text_file(req.config), req.steps).data);
}

int run_verify_ladder(const Request& req, std::ostream& out) {
  const ProblemSpec spec = problem_or(req, catalog::ladder_first(req.steps > 0 ? req.steps : 32));
  const LadderResult r = ladder_orderings(spec, req.levels, req.levels);
  Table t{{"n", "i", "Y0"}, {}};
  for (std::size_t a = 0; a < r.root.size(); ++a)
    for (std::size_t b = 0; b < r.root[a].size(); ++b)
      t.rows.push_back({Json(static_cast<int>(a + 1)), Json(static_cast<int>(b + 1)), number(r.root[a][b])});
  Emitter emit(req, out);
  emit.table("ladder", t);
  Json s = Json::object();
  s.set("mode", "verify ladder");
  s.set("levels", req.levels);
  s.set("checks", checks_json(r.checks));
  emit.summary(s);
  return all_passed(r.checks) ? ok : validation_failure;
}

int run_verify_transform(const Request& req, std::ostream& out) {
  const ProblemSpec spec = problem_or(req, catalog::quadratic_z(req.steps > 0 ? req.steps : 32));
  const ProblemSpec shifted = spec.barriers.shift ? shift_by_S(spec) : spec;
  const TransformBundle bundle = transform_data(shifted);
  SampleOptions opt;
  opt.seed = req.seed;
  const std::vector<CheckReport> checks = check_transform_bounds(bundle, opt);
  const double direct = solve(spec).root();
  const double via = solve_via_transform(spec).root();
  Emitter emit(req, out);
  if (!req.out.empty()) {
    std::ofstream(std::filesystem::path(req.out) / "bundle.csv", std::ios::binary) << bundle_csv(bundle);
  }
  Json s = Json::object();
  s.set("mode", "verify transform");
  s.set("steps", spec.grid.steps());
  s.set("Y0_direct", direct);
  s.set("Y0_transform", via);
  s.set("gap", std::fabs(direct - via));
  s.set("checks", checks_json(checks));
  emit.summary(s);
  return all_passed(checks) ? ok : validation_failure;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Doubly reflected BSDE lattice solver"};
  app.require_subcommand(1);
  Request req;
  auto common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", req.config, "JSON configuration file");
    if (needs_config) c->required();
    sub->add_option("--out", req.out, "output directory");
    sub->add_option("--format", req.format, "per-node table format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--steps", req.steps, "override grid.N")->check(CLI::PositiveNumber);
    sub->add_option("--seed", req.seed, "random seed");
  };
  CLI::App* solve_cmd = app.add_subcommand("solve", "solve a problem configuration");
  common(solve_cmd, true);
  solve_cmd->add_flag("--refine", req.refine, "root values for N = 8, 16, 32, 64 on both routes");
  solve_cmd->add_option("--route", req.route, "direct or transform")->check(CLI::IsMember({"direct", "transform"}));
  CLI::App* dynkin_cmd = app.add_subcommand("dynkin", "value and saddle rules of a stopping game");
  common(dynkin_cmd, true);
  CLI::App* option_cmd = app.add_subcommand("option", "price and hedge a game option");
  common(option_cmd, true);
  CLI::App* verify_cmd = app.add_subcommand("verify", "property checks");
  verify_cmd->require_subcommand(1);
  CLI::App* cmp = verify_cmd->add_subcommand("comparison", "ordered-pair fuzz");
  common(cmp, false);
  cmp->add_option("--batch-size", req.batch, "number of pairs")->check(CLI::PositiveNumber);
  CLI::App* ladder = verify_cmd->add_subcommand("ladder", "approximation ladder orderings");
  common(ladder, false);
  ladder->add_option("--levels", req.levels, "n and i run over 1..levels")->check(CLI::Range(1, 6));
  CLI::App* transform = verify_cmd->add_subcommand("transform", "bounds of the transformed data");
  common(transform, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ok;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return ok;
    }
    err << "error: " << e.what() << "\n";
    return validation_failure;
  }

  try {
    if (*solve_cmd) return run_solve(req, out);
    if (*dynkin_cmd) return run_dynkin(req, out);
    if (*option_cmd) return run_option(req, out);
    if (*cmp) return run_verify_comparison(req, out);
    if (*ladder) return run_verify_ladder(req, out);
    if (*transform) return run_verify_transform(req, out);
  } catch (const ValidationError& e) {
    err << "validation error: " << e.what() << "\n";
    return validation_failure;
  } catch (const SolverError& e) {
    err << "solver error: " << e.what() << "\n";
    return solver_failure;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return solver_failure;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return validation_failure;
  }
  err << "error: no mode selected\n";
  return validation_failure;
}

}  // namespace drbsde::cli

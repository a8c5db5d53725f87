#include "drbsde/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>

#include "drbsde/error.hpp"
#include "json.hpp"

namespace drbsde {

namespace {

using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw ValidationError("config " + where + ": " + what);
}

json parse(const std::string& text) {
  try {
    json j = json::parse(text);
    if (!j.is_object()) bad("root", "expected an object");
    return j;
  } catch (const json::parse_error& e) {
    bad("root", std::string("not valid JSON (") + e.what() + ")");
  }
}

void allow_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  if (!j.is_object()) bad(where, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : keys) known = known || it.key() == k;
    if (!known) bad(where, "unknown key '" + it.key() + "'");
  }
}

/// Number, or one of the strings "inf", "+inf", "-inf".
double number(const json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return kInf;
    if (s == "-inf") return -kInf;
  }
  bad(where, "expected a number");
}

double number_or(const json& j, const char* key, double fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  return number(j.at(key), where + "." + key);
}

double required_number(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) bad(where, std::string("missing '") + key + "'");
  return number(j.at(key), where + "." + key);
}

int integer(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) bad(where, std::string("missing '") + key + "'");
  const json& v = j.at(key);
  if (!v.is_number_integer()) bad(where + "." + key, "expected an integer");
  return v.get<int>();
}

NodeFunction offset_by(NodeFunction f, double offset) {
  if (offset == 0.0) return f;
  return [f, offset](const NodeContext& c) { return f(c) + offset; };
}

NodeFunction node_function(const json& j, const std::string& where) {
  if (j.is_number()) return node_fn::constant(j.get<double>());
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return node_fn::constant(kInf);
    if (s == "-inf") return node_fn::constant(-kInf);
    try {
      return node_fn::expression(s);
    } catch (const ValidationError& e) {
      bad(where, e.what());
    }
  }
  if (!j.is_object()) bad(where, "expected a number, a string or an object");
  if (!j.contains("kind") || !j.at("kind").is_string()) bad(where, "missing 'kind'");
  const std::string kind = j.at("kind").get<std::string>();
  const double offset = number_or(j, "offset", 0.0, where);
  if (kind == "constant") {
    allow_keys(j, where, {"kind", "value", "offset"});
    return node_fn::constant(required_number(j, "value", where) + offset);
  }
  if (kind == "affine") {
    allow_keys(j, where, {"kind", "c0", "cB", "ct", "offset"});
    return node_fn::affine(number_or(j, "c0", 0.0, where) + offset, number_or(j, "cB", 0.0, where),
                           number_or(j, "ct", 0.0, where));
  }
  if (kind == "put" || kind == "call") {
    allow_keys(j, where, {"kind", "strike", "offset"});
    const double k = required_number(j, "strike", where);
    return offset_by(kind == "put" ? node_fn::put(k) : node_fn::call(k), offset);
  }
  if (kind == "expression") {
    allow_keys(j, where, {"kind", "text", "offset"});
    if (!j.contains("text") || !j.at("text").is_string()) bad(where, "missing 'text'");
    try {
      return offset_by(node_fn::expression(j.at("text").get<std::string>()), offset);
    } catch (const ValidationError& e) {
      bad(where, e.what());
    }
  }
  bad(where, "unknown kind '" + kind + "'");
}

const json& params_of(const json& j) {
  static const json empty = json::object();
  return j.contains("params") ? j.at("params") : empty;
}

DriverF driver_f(const json& j) {
  const std::string where = "driver_f";
  allow_keys(j, where, {"kind", "params"});
  if (!j.contains("kind") || !j.at("kind").is_string()) bad(where, "missing 'kind'");
  const std::string kind = j.at("kind").get<std::string>();
  const json& p = params_of(j);
  const std::string pw = where + ".params";
  if (kind == "zero") return DriverF::zero();
  if (kind == "constant") {
    allow_keys(p, pw, {"c"});
    return DriverF::constant(required_number(p, "c", pw));
  }
  if (kind == "linear") {
    allow_keys(p, pw, {"a", "b", "c"});
    return DriverF::linear(number_or(p, "a", 0.0, pw), number_or(p, "b", 0.0, pw), number_or(p, "c", 0.0, pw));
  }
  if (kind == "quadratic_z") {
    allow_keys(p, pw, {"c"});
    if (!p.contains("c")) bad(pw, "missing 'c'");
    const json& c = p.at("c");
    if (c.is_number()) return DriverF::quadratic_z(c.get<double>());
    return DriverF::quadratic_z(node_function(c, pw + ".c"));
  }
  if (kind == "expression") {
    allow_keys(p, pw, {"text"});
    if (!p.contains("text") || !p.at("text").is_string()) bad(pw, "missing 'text'");
    try {
      return DriverF::expression(p.at("text").get<std::string>());
    } catch (const ValidationError& e) {
      bad(pw, e.what());
    }
  }
  bad(where, "unknown kind '" + kind + "'");
}

DriverG driver_g(const json& j, bool& normalize) {
  const std::string where = "driver_g";
  allow_keys(j, where, {"kind", "params", "normalize"});
  if (!j.contains("kind") || !j.at("kind").is_string()) bad(where, "missing 'kind'");
  if (j.contains("normalize")) {
    if (!j.at("normalize").is_boolean()) bad(where + ".normalize", "expected a boolean");
    normalize = j.at("normalize").get<bool>();
  }
  const std::string kind = j.at("kind").get<std::string>();
  const json& p = params_of(j);
  const std::string pw = where + ".params";
  if (kind == "zero") return DriverG::zero();
  if (kind == "constant") {
    allow_keys(p, pw, {"c"});
    return DriverG::constant(required_number(p, "c", pw));
  }
  if (kind == "linear") {
    allow_keys(p, pw, {"a", "c"});
    return DriverG::linear(number_or(p, "a", 0.0, pw), number_or(p, "c", 0.0, pw));
  }
  if (kind == "expression") {
    allow_keys(p, pw, {"text"});
    if (!p.contains("text") || !p.at("text").is_string()) bad(pw, "missing 'text'");
    try {
      return DriverG::expression(p.at("text").get<std::string>());
    } catch (const ValidationError& e) {
      bad(pw, e.what());
    }
  }
  bad(where, "unknown kind '" + kind + "'");
}

struct GridKeys {
  double horizon;
  int steps;
  double q;
};

GridKeys grid_keys(const json& root, int steps_override, bool allow_q) {
  if (!root.contains("grid")) bad("grid", "missing");
  const json& g = root.at("grid");
  if (allow_q) allow_keys(g, "grid", {"T", "N", "q"});
  else allow_keys(g, "grid", {"T", "N"});
  GridKeys k{required_number(g, "T", "grid"), integer(g, "N", "grid"), number_or(g, "q", 0.5, "grid")};
  if (steps_override > 0) k.steps = steps_override;
  if (!(k.horizon > 0.0) || !std::isfinite(k.horizon)) bad("grid.T", "must be positive");
  if (k.steps < 1 || k.steps > 100000) bad("grid.N", "must lie in [1, 100000]");
  if (!(k.q > 0.0 && k.q < 1.0)) bad("grid.q", "must lie in (0, 1)");
  return k;
}

SolverConfig solver_config(const json& root) {
  SolverConfig c;
  if (!root.contains("solver")) return c;
  const json& s = root.at("solver");
  allow_keys(s, "solver", {"picard_tol", "picard_max_iter", "damping", "bisection_fallback"});
  c.picard_tol = number_or(s, "picard_tol", c.picard_tol, "solver");
  if (s.contains("picard_max_iter")) c.picard_max_iter = integer(s, "picard_max_iter", "solver");
  c.damping = number_or(s, "damping", c.damping, "solver");
  if (s.contains("bisection_fallback")) {
    if (!s.at("bisection_fallback").is_boolean()) bad("solver.bisection_fallback", "expected a boolean");
    c.bisection_fallback = s.at("bisection_fallback").get<bool>();
  }
  try {
    c.validate();
  } catch (const ValidationError& e) {
    bad("solver", e.what());
  }
  return c;
}

const json& section(const json& root, const char* key) {
  if (!root.contains(key)) bad(key, "missing");
  return root.at(key);
}

}  // namespace

ProblemConfig parse_problem_config(const std::string& text, int steps) {
  const json root = parse(text);
  allow_keys(root, "root",
             {"name", "grid", "driver_f", "driver_g", "barriers", "terminal", "clock", "envelopes", "solver"});
  ProblemConfig out;
  ProblemData& d = out.data;
  const GridKeys g = grid_keys(root, steps, true);
  d.horizon = g.horizon;
  d.steps = g.steps;
  d.up_probability = g.q;
  if (root.contains("driver_f")) d.f = driver_f(root.at("driver_f"));
  if (root.contains("driver_g")) d.g = driver_g(root.at("driver_g"), d.normalize_g);

  const json& b = section(root, "barriers");
  allow_keys(b, "barriers", {"L", "U", "S"});
  d.lower = b.contains("L") ? node_function(b.at("L"), "barriers.L") : node_fn::constant(-kInf);
  d.upper = b.contains("U") ? node_function(b.at("U"), "barriers.U") : node_fn::constant(kInf);
  if (b.contains("S")) d.shift = node_function(b.at("S"), "barriers.S");
  d.terminal = node_function(section(root, "terminal"), "terminal");

  if (root.contains("clock")) {
    const json& c = root.at("clock");
    allow_keys(c, "clock", {"A", "R", "R_plus", "R_minus"});
    if (c.contains("A")) d.clock = node_function(c.at("A"), "clock.A");
    if (c.contains("R")) d.forcing = node_function(c.at("R"), "clock.R");
    if (c.contains("R_plus")) d.forcing_plus = node_function(c.at("R_plus"), "clock.R_plus");
    if (c.contains("R_minus")) d.forcing_minus = node_function(c.at("R_minus"), "clock.R_minus");
  }
  if (root.contains("envelopes")) {
    const json& e = root.at("envelopes");
    allow_keys(e, "envelopes", {"eta", "C", "g_bound"});
    if (e.contains("eta")) d.eta = node_function(e.at("eta"), "envelopes.eta");
    if (e.contains("C")) d.growth = node_function(e.at("C"), "envelopes.C");
    if (e.contains("g_bound")) d.g_bound = node_function(e.at("g_bound"), "envelopes.g_bound");
  }
  out.solver = solver_config(root);
  return out;
}

namespace {

Utility utility(const json& root) {
  if (!root.contains("utility")) return Utility::identity();
  const json& u = root.at("utility");
  allow_keys(u, "utility", {"kind", "params"});
  if (!u.contains("kind") || !u.at("kind").is_string()) bad("utility", "missing 'kind'");
  const std::string kind = u.at("kind").get<std::string>();
  const json& p = params_of(u);
  try {
    if (kind == "identity") return Utility::identity();
    if (kind == "affine") {
      allow_keys(p, "utility.params", {"a", "b"});
      return Utility::affine(required_number(p, "a", "utility.params"), number_or(p, "b", 0.0, "utility.params"));
    }
    if (kind == "power") {
      allow_keys(p, "utility.params", {"shift", "p"});
      return Utility::shifted_power(number_or(p, "shift", 0.0, "utility.params"),
                                    required_number(p, "p", "utility.params"));
    }
    if (kind == "exp") {
      allow_keys(p, "utility.params", {"theta"});
      return Utility::exponential(required_number(p, "theta", "utility.params"));
    }
  } catch (const ValidationError& e) {
    bad("utility", e.what());
  }
  bad("utility", "unknown kind '" + kind + "'");
}

}  // namespace

DynkinConfig parse_dynkin_config(const std::string& text, int steps) {
  const json root = parse(text);
  allow_keys(root, "root", {"name", "grid", "barriers", "terminal", "utility", "solver"});
  const GridKeys g = grid_keys(root, steps, true);
  const TimeGrid grid(g.horizon, g.steps);
  DynkinConfig out{DynkinGameSpec(grid), solver_config(root)};
  DynkinGameSpec& game = out.game;
  game.measure = BranchMeasure(g.q);
  game.utility = utility(root);
  const json& b = section(root, "barriers");
  allow_keys(b, "barriers", {"L", "U", "Q"});
  const NodeFunction lower = b.contains("L") ? node_function(b.at("L"), "barriers.L") : node_fn::constant(-kInf);
  const NodeFunction upper = b.contains("U") ? node_function(b.at("U"), "barriers.U") : node_fn::constant(kInf);
  if (!b.contains("Q") && !(b.contains("L") || b.contains("U"))) bad("barriers", "need Q or a finite barrier");
  const NodeFunction tie = b.contains("Q") ? node_function(b.at("Q"), "barriers.Q") : (b.contains("L") ? lower : upper);
  const NodeFunction terminal = node_function(section(root, "terminal"), "terminal");
  grid.for_each_node(grid.steps(), [&](Node n) {
    const NodeContext c{n, grid.time(n.step), grid.brownian(n), 0.0};
    game.lower(n) = lower(c);
    game.upper(n) = upper(c);
    game.tie(n) = tie(c);
    if (n.step == grid.steps()) game.terminal[static_cast<std::size_t>(n.level)] = terminal(c);
  });
  game.validate();
  return out;
}

OptionConfig parse_option_config(const std::string& text, int steps) {
  const json root = parse(text);
  allow_keys(root, "root", {"name", "grid", "market", "payoffs", "solver"});
  const GridKeys g = grid_keys(root, steps, false);
  OptionConfig out{MarketModel{}, TimeGrid(g.horizon, g.steps), GameOptionPayoffs{}, solver_config(root)};
  const json& m = section(root, "market");
  allow_keys(m, "market", {"S0", "r", "b", "sigma", "u", "d"});
  out.market.spot = required_number(m, "S0", "market");
  out.market.rate = number_or(m, "r", 0.0, "market");
  out.market.drift = number_or(m, "b", 0.0, "market");
  out.market.volatility = number_or(m, "sigma", 0.0, "market");
  out.market.up = number_or(m, "u", 0.0, "market");
  out.market.down = number_or(m, "d", 0.0, "market");
  const json& p = section(root, "payoffs");
  allow_keys(p, "payoffs", {"L", "U", "Q", "terminal"});
  if (!p.contains("L")) bad("payoffs", "missing 'L'");
  out.payoffs.lower = node_function(p.at("L"), "payoffs.L");
  out.payoffs.upper = p.contains("U") ? node_function(p.at("U"), "payoffs.U") : node_fn::constant(kInf);
  out.payoffs.tie = p.contains("Q") ? node_function(p.at("Q"), "payoffs.Q") : out.payoffs.lower;
  out.payoffs.terminal = p.contains("terminal") ? node_function(p.at("terminal"), "payoffs.terminal") : out.payoffs.lower;
  out.market.risk_neutral_up(out.grid);
  validate_payoffs(out.payoffs, out.grid, out.market);
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace drbsde

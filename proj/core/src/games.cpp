#include "drbsde/games.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "drbsde/error.hpp"

namespace drbsde {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string node_text(Node n) { return "(" + std::to_string(n.step) + "," + std::to_string(n.level) + ")"; }

}  // namespace

// Utility --------------------------------------------------------------------

Utility Utility::affine(double a, double b) {
  if (!(a > 0.0) || !std::isfinite(a) || !std::isfinite(b)) throw ValidationError("affine utility needs a > 0");
  return {Kind::affine, a, b};
}

Utility Utility::shifted_power(double shift, double p) {
  if (!(p > 0.0) || !std::isfinite(p) || !std::isfinite(shift)) throw ValidationError("power utility needs p > 0");
  return {Kind::shifted_power, p, shift};
}

Utility Utility::exponential(double theta) {
  if (!(theta > 0.0) || !std::isfinite(theta)) throw ValidationError("exponential utility needs theta > 0");
  return {Kind::exponential, theta, 0.0};
}

double Utility::operator()(double x) const {
  switch (kind) {
    case Kind::identity:
      return x;
    case Kind::affine:
      return a * x + b;
    case Kind::shifted_power: {
      const double base = x + b;
      if (base < 0.0) return std::numeric_limits<double>::quiet_NaN();
      return std::pow(base, a);
    }
    case Kind::exponential:
      return std::exp(a * x);
  }
  return x;
}

std::string Utility::name() const {
  switch (kind) {
    case Kind::identity:
      return "identity";
    case Kind::affine:
      return "affine(" + format_number(a) + "," + format_number(b) + ")";
    case Kind::shifted_power:
      return "power(" + format_number(b) + "," + format_number(a) + ")";
    case Kind::exponential:
      return "exp(" + format_number(a) + ")";
  }
  return "identity";
}

// Game spec ------------------------------------------------------------------

DynkinGameSpec::DynkinGameSpec(const TimeGrid& g)
    : grid(g), lower(g, 0.0), upper(g, 0.0), tie(g, 0.0), terminal(static_cast<std::size_t>(g.steps() + 1), 0.0) {}

void DynkinGameSpec::validate() const {
  grid.for_each_node(grid.steps(), [&](Node n) {
    const double l = lower(n), u = upper(n), q = tie(n);
    if (std::isnan(l) || std::isnan(u) || std::isnan(q)) throw ValidationError("NaN in game data at " + node_text(n));
    if (!(l <= q && q <= u)) throw ValidationError("L <= Q <= U fails at " + node_text(n));
    if (!std::isfinite(q) && n.step < grid.steps()) throw ValidationError("Q must be finite at " + node_text(n));
    const double fl = utility(l), fu = utility(u);
    if (std::isnan(fl) || std::isnan(fu) || std::isnan(utility(q)))
      throw ValidationError("utility undefined on the barriers at " + node_text(n));
    if (!(fl <= fu)) throw ValidationError("F(L) <= F(U) fails at " + node_text(n));
  });
  for (int j = 0; j <= grid.steps(); ++j) {
    const Node n{grid.steps(), j};
    const double x = terminal[static_cast<std::size_t>(j)];
    if (!std::isfinite(x)) throw ValidationError("terminal payoff must be finite");
    if (x < lower(n) || x > upper(n)) throw ValidationError("terminal payoff outside [L, U] at " + node_text(n));
    if (std::isnan(utility(x))) throw ValidationError("utility undefined at the terminal payoff");
  }
}

namespace {

// J for given hitting steps along a path, before F.
double raw_payoff(const DynkinGameSpec& game, Path path, int lambda, int sigma) {
  const int n = game.grid.steps();
  if (lambda < sigma) return game.upper(node_at(path, lambda));
  if (sigma < lambda) return game.lower(node_at(path, sigma));
  if (sigma < n) return game.tie(node_at(path, sigma));
  return game.terminal[static_cast<std::size_t>(level_at(path, n))];
}

}  // namespace

double evaluate_payoff(const DynkinGameSpec& game, const StoppingRule& rule_min, const StoppingRule& rule_max,
                       Path path) {
  return game.utility(raw_payoff(game, path, rule_min.hitting_step(path), rule_max.hitting_step(path)));
}

double expected_payoff(const DynkinGameSpec& game, const StoppingRule& rule_min, const StoppingRule& rule_max) {
  double total = 0.0;
  for_each_path(game.grid.steps(), [&](Path p) {
    total += path_probability(game.grid, game.measure, p) * evaluate_payoff(game, rule_min, rule_max, p);
  });
  return total;
}

// Value ------------------------------------------------------------------------

DynkinResult::DynkinResult(const TimeGrid& grid) : solution(grid), lambda_star(grid), sigma_star(grid) {}

DynkinResult dynkin_value(const DynkinGameSpec& game, const SolverConfig& config) {
  game.validate();
  const TimeGrid& grid = game.grid;
  LatticeProblem p(grid);
  p.measure = game.measure;
  p.f_uses_y = false;
  p.g_uses_y = false;
  p.lower = AdaptedField::from_function(grid, [&](Node n) { return game.utility(game.lower(n)); });
  p.upper = AdaptedField::from_function(grid, [&](Node n) { return game.utility(game.upper(n)); });
  for (int j = 0; j <= grid.steps(); ++j)
    p.terminal[static_cast<std::size_t>(j)] = game.utility(game.terminal[static_cast<std::size_t>(j)]);

  DynkinResult out(grid);
  out.solution = solve(p, config);
  grid.for_each_node(grid.steps() - 1, [&](Node n) {
    const double y = out.solution.y(n);
    out.lambda_star.set(n, y == p.upper(n));
    out.sigma_star.set(n, y == p.lower(n));
  });
  return out;
}

AdaptedField game_recursion(const DynkinGameSpec& game) {
  const TimeGrid& grid = game.grid;
  const Utility& F = game.utility;
  AdaptedField v(grid, 0.0);
  for (int j = 0; j <= grid.steps(); ++j) v({grid.steps(), j}) = F(game.terminal[static_cast<std::size_t>(j)]);
  for (int k = grid.steps() - 1; k >= 0; --k) {
    for (int j = 0; j <= k; ++j) {
      const Node n{k, j};
      const double q = game.measure.up(n);
      const double e = q * v(n.child(Branch::up)) + (1.0 - q) * v(n.child(Branch::down));
      v(n) = std::min(F(game.upper(n)), std::max(F(game.lower(n)), e));
    }
  }
  return v;
}

// Enumeration ----------------------------------------------------------------------

namespace {

/// Per-path tables of F(U), F(L), F(Q) by step and F(xi), with path weights.
struct PathTables {
  explicit PathTables(const DynkinGameSpec& game) : steps(game.grid.steps()) {
    const std::size_t paths = std::size_t{1} << steps;
    fu.resize(paths * static_cast<std::size_t>(steps));
    fl.resize(fu.size());
    fq.resize(fu.size());
    fxi.resize(paths);
    weight.resize(paths);
    for (Path p = 0; p < paths; ++p) {
      for (int k = 0; k < steps; ++k) {
        const Node n = node_at(p, k);
        const std::size_t i = p * static_cast<std::size_t>(steps) + static_cast<std::size_t>(k);
        fu[i] = game.utility(game.upper(n));
        fl[i] = game.utility(game.lower(n));
        fq[i] = game.utility(game.tie(n));
      }
      fxi[p] = game.utility(game.terminal[static_cast<std::size_t>(level_at(p, steps))]);
      weight[p] = path_probability(game.grid, game.measure, p);
    }
  }

  double payoff(Path p, int lambda, int sigma) const {
    const std::size_t base = p * static_cast<std::size_t>(steps);
    if (lambda < sigma) return fu[base + static_cast<std::size_t>(lambda)];
    if (sigma < lambda) return fl[base + static_cast<std::size_t>(sigma)];
    if (sigma < steps) return fq[base + static_cast<std::size_t>(sigma)];
    return fxi[p];
  }

  int steps;
  std::vector<double> fu, fl, fq, fxi, weight;
};

/// Hitting step of every enumerated rule on every path: [rule][path].
std::vector<std::vector<int>> hitting_table(const std::vector<StoppingRule>& rules, int steps) {
  const std::size_t paths = std::size_t{1} << steps;
  std::vector<std::vector<int>> out(rules.size(), std::vector<int>(paths));
  for (std::size_t r = 0; r < rules.size(); ++r)
    for (Path p = 0; p < paths; ++p) out[r][p] = rules[r].hitting_step(p);
  return out;
}

std::vector<int> hitting_row(const StoppingRule& rule, int steps) {
  const std::size_t paths = std::size_t{1} << steps;
  std::vector<int> out(paths);
  for (Path p = 0; p < paths; ++p) out[p] = rule.hitting_step(p);
  return out;
}

double pair_value(const PathTables& t, const std::vector<int>& lambda, const std::vector<int>& sigma) {
  double total = 0.0;
  for (std::size_t p = 0; p < t.weight.size(); ++p) total += t.weight[p] * t.payoff(p, lambda[p], sigma[p]);
  return total;
}

/// Best response on the path-prefix tree against a fixed opponent rule.
/// minimizer = true: inf over lambda against the rule as sigma.
double best_response(const DynkinGameSpec& game, const PathTables& t, std::uint32_t bits, int decision_steps,
                     bool minimizer) {
  const int n = game.grid.steps();
  std::vector<double> next(std::size_t{1} << n);
  for (Path p = 0; p < next.size(); ++p) next[p] = t.fxi[p];
  for (int k = n - 1; k >= 0; --k) {
    std::vector<double> cur(std::size_t{1} << k);
    for (Path p = 0; p < cur.size(); ++p) {
      const Node node{k, std::popcount(p)};
      const double q = game.measure.up(node);
      const double e = q * next[p | (Path{1} << k)] + (1.0 - q) * next[p];
      const std::size_t row = p * static_cast<std::size_t>(n) + static_cast<std::size_t>(k);
      const bool opponent_stops =
          k < decision_steps && ((bits >> ((std::size_t{1} << k) - 1 + p)) & 1U) != 0;
      if (minimizer) {
        // Opponent is the maximizer: stopping now gets L, tying gets Q.
        cur[p] = opponent_stops ? std::min(t.fq[row], t.fl[row]) : std::min(t.fu[row], e);
      } else {
        cur[p] = opponent_stops ? std::max(t.fq[row], t.fu[row]) : std::max(t.fl[row], e);
      }
    }
    next.swap(cur);
  }
  return next[0];
}

}  // namespace

double enumerated_game_value(const DynkinGameSpec& game) {
  const int n = game.grid.steps();
  if (decision_node_count(n) > static_cast<std::size_t>(kMaxEnumeratedDecisionNodes))
    throw Error("game too deep to enumerate");
  game.validate();
  const PathTables t(game);
  const std::uint64_t count = std::uint64_t{1} << decision_node_count(n);
  double sup = -kInf;
  for (std::uint64_t bits = 0; bits < count; ++bits)
    sup = std::max(sup, best_response(game, t, static_cast<std::uint32_t>(bits), n, true));
  return sup;
}

SaddleReport saddle_check(const DynkinGameSpec& game, double tolerance) {
  const int n = game.grid.steps();
  if (n > 4) throw Error("saddle enumeration limited to depth 4");
  const DynkinResult res = dynkin_value(game);
  const PathTables t(game);
  const std::vector<StoppingRule> rules = enumerate_stopping_rules(game.grid, n);
  const auto hits = hitting_table(rules, n);
  const std::vector<int> lambda_star = hitting_row(res.lambda_rule(), n);
  const std::vector<int> sigma_star = hitting_row(res.sigma_rule(), n);

  SaddleReport out;
  out.value = res.value();
  out.rules = rules.size();
  const double tol = tolerance;
  out.saddle_payoff = pair_value(t, lambda_star, sigma_star);

  CheckReport upper_side("E F(J(lambda*, sigma)) <= Y0", tol);
  CheckReport lower_side("Y0 <= E F(J(lambda, sigma*))", tol);
  for (std::size_t r = 0; r < rules.size(); ++r) {
    const double against_max = pair_value(t, lambda_star, hits[r]);
    const double against_min = pair_value(t, hits[r], sigma_star);
    upper_side.observe(against_max - out.value, Node{});
    lower_side.observe(out.value - against_min, Node{});
    if (out.counterexample.empty() && against_max - out.value > tol)
      out.counterexample = "maximizer rule bits " + std::to_string(r) + " beats lambda*";
    if (out.counterexample.empty() && out.value - against_min > tol)
      out.counterexample = "minimizer rule bits " + std::to_string(r) + " beats sigma*";
  }

  CheckReport equality("E F(J(lambda*, sigma*)) = Y0", tol);
  equality.observe(std::fabs(out.saddle_payoff - out.value), Node{});

  CheckReport value("sup inf = inf sup = Y0", tol);
  if (n <= 3) {
    // Full pair matrix.
    std::vector<double> col_min(rules.size(), kInf), row_max(rules.size(), -kInf);
    for (std::size_t a = 0; a < rules.size(); ++a) {
      for (std::size_t b = 0; b < rules.size(); ++b) {
        const double v = pair_value(t, hits[a], hits[b]);
        col_min[b] = std::min(col_min[b], v);
        row_max[a] = std::max(row_max[a], v);
      }
    }
    out.sup_inf = *std::max_element(col_min.begin(), col_min.end());
    const double inf_sup = *std::min_element(row_max.begin(), row_max.end());
    value.observe(std::max(std::fabs(out.sup_inf - out.value), std::fabs(inf_sup - out.value)), Node{});
    value.set_note(std::to_string(rules.size()) + "x" + std::to_string(rules.size()) + " pairs");
  } else {
    double sup = -kInf, inf = kInf;
    const std::uint64_t count = rules.size();
    for (std::uint64_t bits = 0; bits < count; ++bits) {
      sup = std::max(sup, best_response(game, t, static_cast<std::uint32_t>(bits), n, true));
      inf = std::min(inf, best_response(game, t, static_cast<std::uint32_t>(bits), n, false));
    }
    out.sup_inf = sup;
    value.observe(std::max(std::fabs(sup - out.value), std::fabs(inf - out.value)), Node{});
    value.set_note(std::to_string(rules.size()) + " rules with best responses");
  }

  CheckReport recursion("Y equals the game recursion", 0.0);
  const AdaptedField rec = game_recursion(game);
  game.grid.for_each_node(n, [&](Node node) {
    const double d = res.solution.y(node) - rec(node);
    recursion.observe(d == 0.0 ? 0.0 : std::fabs(d) + std::numeric_limits<double>::min(), node);
  });
  out.checks = {recursion, upper_side, lower_side, equality, value};
  return out;
}

DynkinGameSpec random_game(int steps, std::uint64_t seed, Utility utility) {
  if (steps < 1) throw ValidationError("random game needs at least one step");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  DynkinGameSpec g(TimeGrid(1.0, steps));
  g.measure = BranchMeasure(0.2 + 0.6 * unit(rng));
  g.utility = utility;
  g.grid.for_each_node(steps, [&](Node n) {
    const double l = -1.0 + 2.0 * unit(rng);
    // Occasional pinching makes both barriers bind.
    const double width = unit(rng) < 0.15 ? 0.0 : 2.0 * unit(rng);
    g.lower(n) = l;
    g.upper(n) = l + width;
    g.tie(n) = l + width * unit(rng);
  });
  for (int j = 0; j <= steps; ++j) {
    const Node n{steps, j};
    g.terminal[static_cast<std::size_t>(j)] = g.lower(n) + (g.upper(n) - g.lower(n)) * unit(rng);
  }
  return g;
}

// Market -----------------------------------------------------------------------

double MarketModel::up_factor(const TimeGrid& grid) const {
  if (up > 0.0) return up;
  return std::exp(volatility * grid.sqrt_dt());
}

double MarketModel::down_factor(const TimeGrid& grid) const {
  if (down > 0.0) return down;
  return std::exp(-volatility * grid.sqrt_dt());
}

double MarketModel::risk_neutral_up(const TimeGrid& grid) const {
  if (!(spot > 0.0)) throw ValidationError("spot must be positive");
  if ((up > 0.0) != (down > 0.0)) throw ValidationError("give both lattice factors or neither");
  if (up <= 0.0 && !(volatility > 0.0)) throw ValidationError("volatility must be positive");
  const double u = up_factor(grid), d = down_factor(grid);
  const double q = (std::exp(rate * grid.dt()) - d) / (u - d);
  if (!(u > d) || !(q > 0.0 && q < 1.0)) throw ValidationError("arbitrage in lattice parameters");
  return q;
}

AdaptedField MarketModel::stock(const TimeGrid& grid) const {
  const double u = up_factor(grid), d = down_factor(grid);
  return AdaptedField::from_function(grid, [&](Node n) {
    return spot * std::pow(u, n.level) * std::pow(d, n.step - n.level);
  });
}

HedgePortfolio::HedgePortfolio(const TimeGrid& grid)
    : stock(grid, grid.steps() - 1, 0.0), bond(grid, grid.steps() - 1, 0.0), cancel(grid) {}

GameOptionResult::GameOptionResult(const TimeGrid& grid)
    : value(grid, 0.0), spot(grid, 0.0), discounted(grid), hedge(grid), game(grid) {}

namespace {

NodeContext option_context(const TimeGrid& grid, const AdaptedField& spot, Node n) {
  return NodeContext{n, grid.time(n.step), grid.brownian(n), spot(n)};
}

}  // namespace

void validate_payoffs(const GameOptionPayoffs& payoffs, const TimeGrid& grid, const MarketModel& market) {
  if (!payoffs.lower || !payoffs.upper || !payoffs.terminal) throw ValidationError("option payoffs incomplete");
  const AdaptedField s = market.stock(grid);
  grid.for_each_node(grid.steps(), [&](Node n) {
    const NodeContext c = option_context(grid, s, n);
    const double l = payoffs.lower(c), u = payoffs.upper(c);
    const double q = payoffs.tie ? payoffs.tie(c) : l;
    if (!(l >= 0.0)) throw ValidationError("exercise payoff must be nonnegative at " + node_text(n));
    if (!(l <= u)) throw ValidationError("L <= U fails at " + node_text(n));
    if (!(l <= q && q <= u)) throw ValidationError("L <= Q <= U fails at " + node_text(n));
    if (n.step == grid.steps()) {
      const double x = payoffs.terminal(c);
      if (!std::isfinite(x) || x < l || x > u) throw ValidationError("terminal payoff outside [L, U]");
    }
  });
}

GameOptionResult price_game_option(const MarketModel& market, const TimeGrid& grid, const GameOptionPayoffs& payoffs,
                                   const SolverConfig& config) {
  const double q = market.risk_neutral_up(grid);
  validate_payoffs(payoffs, grid, market);
  GameOptionResult out(grid);
  out.q = q;
  out.spot = market.stock(grid);
  DynkinGameSpec& game = out.game;
  game.measure = BranchMeasure(q);
  grid.for_each_node(grid.steps(), [&](Node n) {
    const NodeContext c = option_context(grid, out.spot, n);
    const double disc = std::exp(-market.rate * c.t);
    const double l = payoffs.lower(c);
    game.lower(n) = disc * l;
    game.upper(n) = disc * payoffs.upper(c);
    game.tie(n) = disc * (payoffs.tie ? payoffs.tie(c) : l);
    if (n.step == grid.steps()) game.terminal[static_cast<std::size_t>(n.level)] = disc * payoffs.terminal(c);
  });
  const DynkinResult res = dynkin_value(game, config);
  out.discounted = res.solution;
  out.price = res.value();
  out.hedge.cancel = res.lambda_star;
  grid.for_each_node(grid.steps(), [&](Node n) {
    out.value(n) = std::exp(market.rate * grid.time(n.step)) * res.solution.y(n);
  });

  // Replicate the discounted one-step move of Y with discounted stock and
  // bond: gamma dS~ = Z dW on both branches.
  const double u = market.up_factor(grid), d = market.down_factor(grid);
  grid.for_each_node(grid.steps() - 1, [&](Node n) {
    const double s = out.spot(n);
    const double z = res.solution.z(n);
    const double t_next = grid.time(n.step + 1);
    const double gamma = std::exp(market.rate * t_next) * z * 2.0 * grid.sqrt_dt() / (s * (u - d));
    const double pre = res.solution.unreflected(n);
    const double sd = std::exp(-market.rate * grid.time(n.step)) * s;
    out.hedge.stock(n) = gamma;
    out.hedge.bond(n) = pre - gamma * sd;
  });
  return out;
}

HedgeReport verify_hedge(const MarketModel& market, const GameOptionResult& priced, double tolerance) {
  const TimeGrid& grid = priced.value.grid();
  const int n = grid.steps();
  if (n > 20) throw Error("hedge simulation limited to 20 steps");
  const DynkinGameSpec& game = priced.game;
  auto discounted_spot = [&](Node node) { return std::exp(-market.rate * grid.time(node.step)) * priced.spot(node); };

  HedgeReport out;
  CheckReport financing("self-financing replication", tolerance);
  grid.for_each_node(n - 1, [&](Node node) {
    const double gamma = priced.hedge.stock(node);
    const double beta = priced.hedge.bond(node);
    const double cost = gamma * discounted_spot(node) + beta;
    double res = std::fabs(cost - priced.discounted.unreflected(node));
    for (Branch b : kBranches) {
      const Node c = node.child(b);
      res = std::max(res, std::fabs(gamma * discounted_spot(c) + beta - priced.discounted.y(c)));
    }
    financing.observe(res, node);
    out.self_financing_residual = std::max(out.self_financing_residual, res);
  });

  CheckReport super("X_{s ^ lambda*} >= J(s, lambda*)", tolerance);
  out.min_surplus = kInf;
  const StoppingRule cancel = StoppingRule::markov(priced.hedge.cancel);
  for_each_path(n, [&](Path p) {
    const int lambda = cancel.hitting_step(p);
    // Wealth from V0 trading gamma; surplus stays in the bond.
    std::vector<double> wealth(static_cast<std::size_t>(n + 1));
    wealth[0] = priced.price;
    for (int k = 0; k < n; ++k) {
      const Node a = node_at(p, k), b = node_at(p, k + 1);
      wealth[static_cast<std::size_t>(k + 1)] =
          wealth[static_cast<std::size_t>(k)] + priced.hedge.stock(a) * (discounted_spot(b) - discounted_spot(a));
    }
    for (int s = 0; s <= n; ++s) {
      const int stop = std::min(s, lambda);
      const double payoff = raw_payoff(game, p, lambda, s);
      const double surplus = wealth[static_cast<std::size_t>(stop)] - payoff;
      out.min_surplus = std::min(out.min_surplus, surplus);
      super.observe(-surplus, node_at(p, stop));
      if (out.counterexample.empty() && -surplus > tolerance) {
        std::ostringstream msg;
        msg << "path " << p << " exercise step " << s << " surplus " << format_number(surplus);
        out.counterexample = msg.str();
      }
    }
  });
  out.checks = {financing, super};
  if (n <= 4) {
    CheckReport enumeration("V0 equals the enumerated game value", tolerance);
    enumeration.observe(std::fabs(enumerated_game_value(game) - priced.price), Node{});
    out.checks.push_back(enumeration);
  }
  return out;
}

double american_price(const MarketModel& market, const TimeGrid& grid, const NodeFunction& payoff) {
  const double q = market.risk_neutral_up(grid);
  const AdaptedField s = market.stock(grid);
  const double disc = std::exp(-market.rate * grid.dt());
  std::vector<double> v(static_cast<std::size_t>(grid.steps() + 1));
  for (int j = 0; j <= grid.steps(); ++j) v[static_cast<std::size_t>(j)] = payoff(option_context(grid, s, {grid.steps(), j}));
  for (int k = grid.steps() - 1; k >= 0; --k) {
    for (int j = 0; j <= k; ++j) {
      const double cont = disc * (q * v[static_cast<std::size_t>(j + 1)] + (1.0 - q) * v[static_cast<std::size_t>(j)]);
      v[static_cast<std::size_t>(j)] = std::max(payoff(option_context(grid, s, {k, j})), cont);
    }
  }
  return v[0];
}

}  // namespace drbsde

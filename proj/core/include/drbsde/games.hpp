#pragma once

// Zero-sum stopping games and game (cancellable American) options.
//
// The minimizer stops at lambda and pays U, the maximizer stops at sigma and
// receives L.  Payoff on a path:
//
//   J = U_lambda 1{lambda < sigma} + L_sigma 1{sigma < lambda}
//     + Q_sigma 1{sigma = lambda < N} + xi 1{sigma = lambda = N}.

#include <string>
#include <vector>

#include "drbsde/lattice.hpp"
#include "drbsde/problem.hpp"
#include "drbsde/report.hpp"
#include "drbsde/solver.hpp"

namespace drbsde {

/// Nondecreasing utility applied to the payoff.
struct Utility {
  enum class Kind { identity, affine, shifted_power, exponential };
  Kind kind = Kind::identity;
  double a = 1.0;  // affine slope, power exponent, or theta
  double b = 0.0;  // affine intercept or power shift

  static Utility identity() { return {}; }
  /// a x + b, a > 0
  static Utility affine(double a, double b);
  /// (x + shift)^p on x >= -shift, p > 0
  static Utility shifted_power(double shift, double p);
  /// exp(theta x), theta > 0
  static Utility exponential(double theta);

  double operator()(double x) const;
  std::string name() const;
};

struct DynkinGameSpec {
  explicit DynkinGameSpec(const TimeGrid& grid);

  TimeGrid grid;
  BranchMeasure measure;
  AdaptedField lower;
  AdaptedField upper;
  AdaptedField tie;  // Q
  std::vector<double> terminal;
  Utility utility;

  /// Throws ValidationError unless L <= Q <= U and F keeps F(L) <= F(U).
  void validate() const;
};

double evaluate_payoff(const DynkinGameSpec& game, const StoppingRule& rule_min, const StoppingRule& rule_max,
                       Path path);
/// E[F(J)] over all paths.
double expected_payoff(const DynkinGameSpec& game, const StoppingRule& rule_min, const StoppingRule& rule_max);

struct DynkinResult {
  explicit DynkinResult(const TimeGrid& grid);

  LatticeSolution solution;
  NodeFlags lambda_star;  // Y = F(U)
  NodeFlags sigma_star;   // Y = F(L)

  double value() const { return solution.root(); }
  StoppingRule lambda_rule() const { return StoppingRule::markov(lambda_star); }
  StoppingRule sigma_rule() const { return StoppingRule::markov(sigma_star); }
};

/// Zero-generator doubly reflected equation with barriers F(L), F(U) and
/// terminal F(xi).
DynkinResult dynkin_value(const DynkinGameSpec& game, const SolverConfig& config = {});

/// Independent recursion V = min(F(U), max(F(L), E[V_next])).
AdaptedField game_recursion(const DynkinGameSpec& game);

/// sup over maximizer rules of inf over minimizer rules of E[F(J)].  Full
/// pair enumeration for N <= 3; for N = 4 the inner inf is a best response
/// computed on the path-prefix tree.
double enumerated_game_value(const DynkinGameSpec& game);

struct SaddleReport {
  std::vector<CheckReport> checks;
  double value = 0.0;            // Y_0
  double saddle_payoff = 0.0;    // E[F(J(lambda*, sigma*))]
  double sup_inf = 0.0;          // enumeration
  std::size_t rules = 0;
  std::string counterexample;
};

/// Enumerates all rule pairs (N <= 3) and checks both saddle inequalities,
/// the saddle payoff equality and the sup-inf value.
SaddleReport saddle_check(const DynkinGameSpec& game, double tolerance = 1e-12);

/// Random game on N steps with L <= Q <= U, seeded.
DynkinGameSpec random_game(int steps, std::uint64_t seed, Utility utility = Utility::identity());

// Game options -------------------------------------------------------------

struct MarketModel {
  double spot = 100.0;
  double rate = 0.0;
  double drift = 0.0;
  double volatility = 0.2;
  /// Explicit lattice factors; otherwise u = exp(vol sqrt(dt)), d = 1/u.
  double up = 0.0;
  double down = 0.0;

  double up_factor(const TimeGrid& grid) const;
  double down_factor(const TimeGrid& grid) const;
  /// (e^{r dt} - d) / (u - d); throws ValidationError("arbitrage in lattice
  /// parameters") unless it lies in (0, 1).
  double risk_neutral_up(const TimeGrid& grid) const;
  AdaptedField stock(const TimeGrid& grid) const;
};

struct GameOptionPayoffs {
  NodeFunction lower;  // paid on buyer exercise
  NodeFunction upper;  // paid on seller cancellation
  NodeFunction tie;
  NodeFunction terminal;
};

struct HedgePortfolio {
  explicit HedgePortfolio(const TimeGrid& grid);

  AdaptedField stock;  // gamma, steps 0..N-1
  AdaptedField bond;   // beta, steps 0..N-1
  NodeFlags cancel;    // lambda*
};

struct GameOptionResult {
  explicit GameOptionResult(const TimeGrid& grid);

  double price = 0.0;  // V_0
  AdaptedField value;  // V = e^{rt} Y
  AdaptedField spot;
  LatticeSolution discounted;
  HedgePortfolio hedge;
  double q = 0.5;
  /// The game in discounted units, for enumeration oracles.
  DynkinGameSpec game;
};

void validate_payoffs(const GameOptionPayoffs& payoffs, const TimeGrid& grid, const MarketModel& market);

GameOptionResult price_game_option(const MarketModel& market, const TimeGrid& grid, const GameOptionPayoffs& payoffs,
                                   const SolverConfig& config = {});

struct HedgeReport {
  std::vector<CheckReport> checks;
  double self_financing_residual = 0.0;
  double min_surplus = 0.0;  // min over paths, s of X_{s ^ lambda*} - J(s, lambda*)
  std::string counterexample;
};

/// Runs the portfolio along every path (N <= 20).  Checks self-financing,
/// superreplication and, when N <= 4, the price against enumeration.
HedgeReport verify_hedge(const MarketModel& market, const GameOptionResult& priced, double tolerance = 1e-10);

/// Binomial American price with the standard Snell recursion (oracle).
double american_price(const MarketModel& market, const TimeGrid& grid, const NodeFunction& payoff);

}  // namespace drbsde

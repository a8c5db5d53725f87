#pragma once

// Named test instances and seeded random instances.

#include <cstdint>
#include <string>
#include <vector>

#include "drbsde/games.hpp"
#include "drbsde/problem.hpp"

namespace drbsde::catalog {

/// xi = B_T, nothing else: Y = B, Z = 1.
ProblemSpec zero(int steps, double horizon = 1.0);

/// f = -(1/2)|z|^2 (eta = 0, C = 1) on the band [-1, 1], xi = tanh(B_T) / 2.
ProblemSpec quadratic_z(int steps, double horizon = 1.0);

/// f = 0, L = (1 - exp(B))^+, U = +inf: the discrete Snell envelope.
ProblemSpec snell(int steps, double horizon = 1.0);

/// f = -(1/2)|z|^2, band [0.01, 0.99], xi = 0.5 + 0.45 tanh(5 B_T).
ProblemSpec ladder_first(int steps = 32);
/// As ladder_first plus g = -min(max(y, 0), 1), A = t and R = t / 2.
ProblemSpec ladder_second(int steps = 32);

/// Random instance from the driver catalog with up to max_steps steps,
/// barriers affine in B (sometimes one side infinite), random nonnegative
/// clock and signed forcing on every edge.  The declared envelopes make
/// the growth checks pass.
ProblemSpec random_problem(std::uint64_t seed, int max_steps = 32);

struct NamedGame {
  std::string name;
  DynkinGameSpec game;
};

/// Depth <= 3 games: the one-step examples, a pinched game and depth-2 and
/// depth-3 games under each utility kind.
std::vector<NamedGame> dynkin_games();

/// One-step game: L0 = 1, U0 = 3, xi = mean +- 1.
DynkinGameSpec one_step_game(double terminal_mean);

}  // namespace drbsde::catalog

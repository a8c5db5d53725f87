#pragma once

// JSON configuration for the three run kinds.  The schema is described in
// docs/config_schema.md; every error is a ValidationError naming the key.

#include <string>

#include "drbsde/games.hpp"
#include "drbsde/problem.hpp"
#include "drbsde/solver.hpp"

namespace drbsde {

struct ProblemConfig {
  ProblemData data;
  SolverConfig solver;
};

struct DynkinConfig {
  DynkinGameSpec game;
  SolverConfig solver;
};

struct OptionConfig {
  MarketModel market;
  TimeGrid grid;
  GameOptionPayoffs payoffs;
  SolverConfig solver;
};

/// steps > 0 overrides grid.N.
ProblemConfig parse_problem_config(const std::string& text, int steps = 0);
DynkinConfig parse_dynkin_config(const std::string& text, int steps = 0);
OptionConfig parse_option_config(const std::string& text, int steps = 0);

/// Reads a whole file; ValidationError if it cannot be opened.
std::string read_text_file(const std::string& path);

}  // namespace drbsde

#include "drbsde/lattice.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <cmath>
#include <string>

#include "drbsde/error.hpp"

namespace drbsde {

TimeGrid::TimeGrid(double horizon, int steps) : horizon_(horizon), steps_(steps) {
  if (steps < 1) throw ValidationError("time grid needs at least one step");
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ValidationError("time grid horizon must be positive");
  if (steps > 4096) throw ValidationError("time grid limited to 4096 steps");
  dt_ = horizon / steps;
  sqrt_dt_ = std::sqrt(dt_);
}

double TimeGrid::time(int step) const { return step == steps_ ? horizon_ : step * dt_; }

double TimeGrid::brownian(Node node) const { return (2 * node.level - node.step) * sqrt_dt_; }

// AdaptedField -------------------------------------------------------------

AdaptedField::AdaptedField(const TimeGrid& grid, double fill) : AdaptedField(grid, grid.steps(), fill) {}

AdaptedField::AdaptedField(const TimeGrid& grid, int last_step, double fill)
    : grid_(grid), last_step_(last_step), values_(TimeGrid::node_count(last_step), fill) {
  if (last_step < 0 || last_step > grid.steps()) throw ValidationError("field last step outside grid");
}

AdaptedField AdaptedField::from_function(const TimeGrid& grid, const std::function<double(Node)>& fn) {
  return from_function(grid, grid.steps(), fn);
}

AdaptedField AdaptedField::from_function(const TimeGrid& grid, int last_step,
                                         const std::function<double(Node)>& fn) {
  AdaptedField field(grid, last_step, 0.0);
  grid.for_each_node(last_step, [&](Node n) { field(n) = fn(n); });
  return field;
}

double AdaptedField::at(Node node) const {
  if (!defined_at(node) || node.level < 0 || node.level > node.step)
    throw Error("node (" + std::to_string(node.step) + "," + std::to_string(node.level) +
                ") outside field");
  return (*this)(node);
}

std::span<const double> AdaptedField::layer(int step) const {
  return std::span<const double>(values_).subspan(TimeGrid::index({step, 0}), static_cast<std::size_t>(step + 1));
}

std::span<double> AdaptedField::layer(int step) {
  return std::span<double>(values_).subspan(TimeGrid::index({step, 0}), static_cast<std::size_t>(step + 1));
}

// EdgeField ----------------------------------------------------------------

EdgeField::EdgeField(const TimeGrid& grid, double fill)
    : grid_(grid), values_(2 * TimeGrid::node_count(grid.steps() - 1), fill) {}

EdgeField EdgeField::from_function(const TimeGrid& grid, const std::function<double(Node, Branch)>& fn) {
  EdgeField edges(grid);
  grid.for_each_node(grid.steps() - 1, [&](Node n) {
    for (Branch b : kBranches) edges(n, b) = fn(n, b);
  });
  return edges;
}

EdgeField EdgeField::differences(const AdaptedField& field) {
  if (field.last_step() != field.grid().steps()) throw Error("differences need a field up to the horizon");
  return from_function(field.grid(), [&](Node n, Branch b) { return field(n.child(b)) - field(n); });
}

// BranchMeasure ------------------------------------------------------------

BranchMeasure::BranchMeasure(double up_probability) : q_(up_probability) {
  if (!(up_probability > 0.0 && up_probability < 1.0))
    throw ValidationError("up-probability must lie in (0,1)");
}

BranchMeasure::BranchMeasure(AdaptedField up_probability) : q_(0.5), field_(std::move(up_probability)) {
  for (double q : field_->values())
    if (!(q > 0.0 && q < 1.0)) throw ValidationError("up-probability must lie in (0,1)");
}

double brownian_increment(const TimeGrid& grid, const BranchMeasure& measure, Node node, Branch b) {
  const double q = measure.up(node);
  return b == Branch::up ? 2.0 * (1.0 - q) * grid.sqrt_dt() : -2.0 * q * grid.sqrt_dt();
}

double expect_next(double up_value, double down_value, Node node, const BranchMeasure& measure) {
  const double q = measure.up(node);
  return q * up_value + (1.0 - q) * down_value;
}

double expect_next(const AdaptedField& field, Node node, const BranchMeasure& measure) {
  if (node.step >= field.last_step()) throw Error("no successor");
  return expect_next(field(node.child(Branch::up)), field(node.child(Branch::down)), node, measure);
}

double martingale_rep(const TimeGrid& grid, double up_value, double down_value) {
  return (up_value - down_value) / (2.0 * grid.sqrt_dt());
}

double martingale_rep(const AdaptedField& field, Node node, const BranchMeasure& /*measure*/) {
  if (node.step >= field.last_step()) throw Error("no successor");
  return martingale_rep(field.grid(), field(node.child(Branch::up)), field(node.child(Branch::down)));
}

std::vector<double> layer_probabilities(const TimeGrid& grid, const BranchMeasure& measure, int step) {
  std::vector<double> p{1.0};
  for (int k = 0; k < step; ++k) {
    std::vector<double> next(static_cast<std::size_t>(k + 2), 0.0);
    for (int j = 0; j <= k; ++j) {
      const double q = measure.up({k, j});
      next[static_cast<std::size_t>(j + 1)] += q * p[static_cast<std::size_t>(j)];
      next[static_cast<std::size_t>(j)] += (1.0 - q) * p[static_cast<std::size_t>(j)];
    }
    p = std::move(next);
  }
  (void)grid;
  return p;
}

// Path ranges --------------------------------------------------------------

double PathRange::spread() const {
  double worst = 0.0;
  const auto l = lo.values();
  const auto h = hi.values();
  for (std::size_t i = 0; i < l.size(); ++i) {
    if (h[i] == l[i]) continue;
    const double scale = std::isfinite(h[i]) ? std::max(1.0, std::fabs(h[i])) : 1.0;
    worst = std::max(worst, (h[i] - l[i]) / scale);
  }
  return worst;
}

namespace {

template <class Step>
PathRange propagate(const TimeGrid& grid, double root, Step&& step) {
  PathRange r{AdaptedField(grid, std::numeric_limits<double>::infinity()),
              AdaptedField(grid, -std::numeric_limits<double>::infinity())};
  r.lo({0, 0}) = root;
  r.hi({0, 0}) = root;
  grid.for_each_node(grid.steps() - 1, [&](Node n) {
    for (Branch b : kBranches) {
      const Node c = n.child(b);
      const double vlo = step(r.lo(n), n, b);
      const double vhi = step(r.hi(n), n, b);
      r.lo(c) = std::min(r.lo(c), std::min(vlo, vhi));
      r.hi(c) = std::max(r.hi(c), std::max(vlo, vhi));
    }
  });
  return r;
}

}  // namespace

PathRange running_sup_abs(const AdaptedField& field) {
  return propagate(field.grid(), std::fabs(field({0, 0})),
                   [&](double v, Node n, Branch b) { return std::max(v, std::fabs(field(n.child(b)))); });
}

PathRange running_max(const AdaptedField& field) {
  return propagate(field.grid(), field({0, 0}),
                   [&](double v, Node n, Branch b) { return std::max(v, field(n.child(b))); });
}

PathRange running_sum(const EdgeField& increments) {
  return propagate(increments.grid(), 0.0, [&](double v, Node n, Branch b) { return v + increments(n, b); });
}

// Paths --------------------------------------------------------------------

int level_at(Path path, int step) {
  if (step <= 0) return 0;
  const Path mask = step >= 64 ? ~Path{0} : ((Path{1} << step) - 1);
  return std::popcount(path & mask);
}

Node node_at(Path path, int step) { return {step, level_at(path, step)}; }

double path_probability(const TimeGrid& grid, const BranchMeasure& measure, Path path) {
  double p = 1.0;
  for (int k = 0; k < grid.steps(); ++k) {
    const Node n = node_at(path, k);
    p *= ((path >> k) & 1U) ? measure.up(n) : 1.0 - measure.up(n);
  }
  return p;
}

void for_each_path(int steps, const std::function<void(Path)>& fn) {
  if (steps > 30) throw Error("path enumeration limited to 30 steps");
  const Path count = Path{1} << steps;
  for (Path p = 0; p < count; ++p) fn(p);
}

// Stopping rules -----------------------------------------------------------

std::size_t NodeFlags::count(int last_step) const {
  std::size_t c = 0;
  grid_.for_each_node(last_step, [&](Node n) { c += (*this)(n) ? 1 : 0; });
  return c;
}

StoppingRule StoppingRule::markov(NodeFlags flags) {
  StoppingRule rule(flags.grid().steps());
  rule.markov_ = std::move(flags);
  return rule;
}

StoppingRule StoppingRule::history(int steps, int decision_steps, std::uint32_t bits) {
  if (decision_steps > steps) throw Error("decision steps exceed horizon");
  if (decision_node_count(decision_steps) > 32) throw Error("history rule exceeds 32 decision nodes");
  StoppingRule rule(steps);
  rule.decision_steps_ = decision_steps;
  rule.bits_ = bits;
  return rule;
}

StoppingRule StoppingRule::never(int steps) { return StoppingRule(steps); }

StoppingRule StoppingRule::immediately(int steps) {
  StoppingRule rule(steps);
  rule.always_ = true;
  return rule;
}

bool StoppingRule::stops(Path path, int step) const {
  if (step >= steps_) return true;
  if (always_) return true;
  if (markov_) return (*markov_)(node_at(path, step));
  if (step >= decision_steps_) return false;
  const Path prefix = step == 0 ? 0 : (path & ((Path{1} << step) - 1));
  const std::size_t index = (std::size_t{1} << step) - 1 + static_cast<std::size_t>(prefix);
  return ((bits_ >> index) & 1U) != 0;
}

int StoppingRule::hitting_step(Path path) const {
  for (int k = 0; k < steps_; ++k)
    if (stops(path, k)) return k;
  return steps_;
}

std::size_t decision_node_count(int max_step) {
  if (max_step <= 0) return 0;
  if (max_step >= 63) return ~std::size_t{0};
  return (std::size_t{1} << max_step) - 1;
}

std::vector<StoppingRule> enumerate_stopping_rules(const TimeGrid& grid, int max_step) {
  if (max_step < 0 || max_step > grid.steps()) throw Error("max_step outside grid");
  const std::size_t nodes = decision_node_count(max_step);
  if (nodes > static_cast<std::size_t>(kMaxEnumeratedDecisionNodes)) throw Error("enumeration too large");
  std::vector<StoppingRule> rules;
  const std::uint64_t count = std::uint64_t{1} << nodes;
  rules.reserve(count);
  for (std::uint64_t bits = 0; bits < count; ++bits)
    rules.push_back(StoppingRule::history(grid.steps(), max_step, static_cast<std::uint32_t>(bits)));
  return rules;
}

}  // namespace drbsde

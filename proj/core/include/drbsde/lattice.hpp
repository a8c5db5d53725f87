#pragma once

// Recombining binomial model of the Brownian filtration.
//
// Node (k, j) sits at time k*dt after j up-moves; its Brownian value is
// (2j - k) * sqrt(dt).  Children of (k, j) are (k+1, j+1) [up] and (k+1, j)
// [down].  Node-indexed data is stored in triangular layers.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace drbsde {

enum class Branch : int { up = 0, down = 1 };

constexpr Branch kBranches[] = {Branch::up, Branch::down};

struct Node {
  int step = 0;
  int level = 0;

  constexpr Node child(Branch b) const {
    return {step + 1, b == Branch::up ? level + 1 : level};
  }
  friend constexpr bool operator==(const Node&, const Node&) = default;
};

class TimeGrid {
 public:
  TimeGrid(double horizon, int steps);

  double horizon() const { return horizon_; }
  int steps() const { return steps_; }
  double dt() const { return dt_; }
  double sqrt_dt() const { return sqrt_dt_; }

  double time(int step) const;
  double brownian(Node node) const;

  /// Nodes in layers 0..last_step.
  static std::size_t node_count(int last_step) {
    return static_cast<std::size_t>(last_step + 1) * static_cast<std::size_t>(last_step + 2) / 2;
  }
  static std::size_t index(Node node) {
    return static_cast<std::size_t>(node.step) * static_cast<std::size_t>(node.step + 1) / 2 +
           static_cast<std::size_t>(node.level);
  }

  /// Calls fn(Node) for every node of layers 0..last_step in storage order.
  template <class Fn>
  void for_each_node(int last_step, Fn&& fn) const {
    for (int k = 0; k <= last_step; ++k)
      for (int j = 0; j <= k; ++j) fn(Node{k, j});
  }

 private:
  double horizon_;
  int steps_;
  double dt_;
  double sqrt_dt_;
};

/// Real value per node of a grid, up to a declared final step.
class AdaptedField {
 public:
  AdaptedField(const TimeGrid& grid, double fill);
  AdaptedField(const TimeGrid& grid, int last_step, double fill);

  static AdaptedField from_function(const TimeGrid& grid, const std::function<double(Node)>& fn);
  static AdaptedField from_function(const TimeGrid& grid, int last_step,
                                    const std::function<double(Node)>& fn);

  const TimeGrid& grid() const { return grid_; }
  int last_step() const { return last_step_; }
  bool defined_at(Node node) const { return node.step >= 0 && node.step <= last_step_; }

  double operator()(Node node) const { return values_[TimeGrid::index(node)]; }
  double& operator()(Node node) { return values_[TimeGrid::index(node)]; }
  double at(Node node) const;

  std::span<const double> layer(int step) const;
  std::span<double> layer(int step);
  std::span<const double> values() const { return values_; }

 private:
  TimeGrid grid_;
  int last_step_;
  std::vector<double> values_;
};

/// Value per (node, branch) for every non-terminal node: an increment over
/// the step leaving the node along that branch.
class EdgeField {
 public:
  EdgeField(const TimeGrid& grid, double fill = 0.0);

  static EdgeField from_function(const TimeGrid& grid, const std::function<double(Node, Branch)>& fn);
  /// Increments field(child) - field(node).
  static EdgeField differences(const AdaptedField& field);

  const TimeGrid& grid() const { return grid_; }
  double operator()(Node node, Branch b) const {
    return values_[2 * TimeGrid::index(node) + static_cast<std::size_t>(b)];
  }
  double& operator()(Node node, Branch b) {
    return values_[2 * TimeGrid::index(node) + static_cast<std::size_t>(b)];
  }
  std::span<const double> values() const { return values_; }

 private:
  TimeGrid grid_;
  std::vector<double> values_;
};

/// Up-probability per node; the default 1/2 is the symmetric random walk.
class BranchMeasure {
 public:
  explicit BranchMeasure(double up_probability = 0.5);
  explicit BranchMeasure(AdaptedField up_probability);

  double up(Node node) const { return field_ ? (*field_)(node) : q_; }
  double probability(Node node, Branch b) const {
    return b == Branch::up ? up(node) : 1.0 - up(node);
  }
  bool is_constant() const { return !field_.has_value(); }

 private:
  double q_;
  std::optional<AdaptedField> field_;
};

/// Brownian increment along a branch, centred under the measure:
/// +2(1-q)sqrt(dt) up, -2q sqrt(dt) down.  Equals +-sqrt(dt) when q = 1/2.
double brownian_increment(const TimeGrid& grid, const BranchMeasure& measure, Node node, Branch b);

double expect_next(const AdaptedField& field, Node node, const BranchMeasure& measure);
double expect_next(double up_value, double down_value, Node node, const BranchMeasure& measure);

/// z with field(child) = expect_next + z * brownian_increment on both branches.
double martingale_rep(const AdaptedField& field, Node node, const BranchMeasure& measure);
double martingale_rep(const TimeGrid& grid, double up_value, double down_value);

/// Probability of each node at step k under the iterated branch measure.
std::vector<double> layer_probabilities(const TimeGrid& grid, const BranchMeasure& measure, int step);

/// Range over all paths reaching each node of a path functional (running
/// sup, running sum).  The functional is node-valued iff lo == hi.
struct PathRange {
  AdaptedField lo;
  AdaptedField hi;

  /// max over nodes of (hi - lo) / max(1, |hi|).
  double spread() const;
  bool recombines(double tol = 1e-12) const { return spread() <= tol; }
};

/// sup_{r <= k} |field_r| along each path.
PathRange running_sup_abs(const AdaptedField& field);
/// sup_{r <= k} field_r along each path.
PathRange running_max(const AdaptedField& field);
/// Sum of edge increments along each path (0 at the root).
PathRange running_sum(const EdgeField& increments);

// Paths ------------------------------------------------------------------

/// Bit k set means the move from step k to k+1 is up.  Supports N <= 62.
using Path = std::uint64_t;

int level_at(Path path, int step);
Node node_at(Path path, int step);
double path_probability(const TimeGrid& grid, const BranchMeasure& measure, Path path);
/// Calls fn(Path) for all 2^steps paths.
void for_each_path(int steps, const std::function<void(Path)>& fn);

// Stopping rules ---------------------------------------------------------

/// Boolean flag per node (layers 0..steps-1), used for hitting-set rules.
class NodeFlags {
 public:
  explicit NodeFlags(const TimeGrid& grid) : grid_(grid), flags_(TimeGrid::node_count(grid.steps()), 0) {}
  bool operator()(Node node) const { return flags_[TimeGrid::index(node)] != 0; }
  void set(Node node, bool value) { flags_[TimeGrid::index(node)] = value ? 1 : 0; }
  const TimeGrid& grid() const { return grid_; }
  std::size_t count(int last_step) const;

 private:
  TimeGrid grid_;
  std::vector<unsigned char> flags_;
};

/// Adapted stop/continue decision; stopping is forced at the horizon.
///
/// A rule is either Markov (a flag per recombining node) or a raw history
/// rule (one flag per path prefix).  History prefix p at step k has index
/// 2^k - 1 + p where p holds the first k moves.
class StoppingRule {
 public:
  static StoppingRule markov(NodeFlags flags);
  static StoppingRule history(int steps, int decision_steps, std::uint32_t bits);
  static StoppingRule never(int steps);
  static StoppingRule immediately(int steps);

  int steps() const { return steps_; }
  bool stops(Path path, int step) const;
  /// First step at which the rule stops along the path (steps() if never).
  int hitting_step(Path path) const;

 private:
  StoppingRule(int steps) : steps_(steps) {}

  int steps_;
  std::optional<NodeFlags> markov_;
  int decision_steps_ = 0;
  std::uint32_t bits_ = 0;
  bool always_ = false;
};

constexpr int kMaxEnumeratedDecisionNodes = 16;

/// Number of path-prefix decision nodes on steps 0..max_step-1.
std::size_t decision_node_count(int max_step);

/// All raw adapted stop/continue assignments on path-prefix nodes of steps
/// 0..max_step-1; later steps continue until the forced stop at N.
std::vector<StoppingRule> enumerate_stopping_rules(const TimeGrid& grid, int max_step);

}  // namespace drbsde

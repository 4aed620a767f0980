#pragma once

#include "dppchains/linalg.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace dppchains {

/// Opaque state identifier as it appears in input files.
using StateLabel = std::variant<std::int64_t, std::string>;

std::string label_text(const StateLabel& label);

/// Input probabilities may overshoot 1 by at most this much.
inline constexpr double kProbabilityTolerance = 1e-9;

struct Transition {
  std::size_t to;
  double prob;
};

/// Raw chain data as read from a spec file, before loop-freeness is checked.
struct ChainSpec {
  std::vector<StateLabel> states;
  std::vector<double> pi;
  struct Edge {
    std::size_t from;
    std::size_t to;
    double prob;
  };
  std::vector<Edge> transitions;
};

/// Checks the range invariants and acyclicity of the transition support.
/// Returns internal indices in topological order; incomparable states are
/// listed by ascending index. Throws CycleDetected with a witness cycle or
/// InvalidProbability.
std::vector<std::size_t> validate_loop_free(const ChainSpec& spec);

/// Markov chain on a finite window whose trajectories never revisit a state.
/// Row deficits are exit probabilities to an implicit absorbing final state;
/// the deficit of pi is the probability of never entering the window.
class LoopFreeChain {
 public:
  static LoopFreeChain from_spec(const ChainSpec& spec);

  std::size_t size() const noexcept { return labels_.size(); }
  const std::vector<StateLabel>& labels() const noexcept { return labels_; }
  const std::vector<double>& initial() const noexcept { return pi_; }
  std::span<const Transition> row(std::size_t i) const noexcept { return rows_[i]; }
  double exit_probability(std::size_t i) const noexcept { return exit_[i]; }
  double miss_probability() const noexcept { return miss_; }
  double transition(std::size_t from, std::size_t to) const noexcept;

  const std::vector<std::size_t>& topological_order() const noexcept { return order_; }
  /// Position of state i inside topological_order().
  std::size_t rank(std::size_t i) const noexcept { return rank_[i]; }

  std::size_t index_of(const StateLabel& label) const;
  std::vector<std::size_t> indices_of(std::span<const StateLabel> labels) const;

  ChainSpec to_spec() const;

 private:
  std::vector<StateLabel> labels_;
  std::unordered_map<std::string, std::size_t> lookup_;
  std::vector<double> pi_;
  std::vector<std::vector<Transition>> rows_;
  std::vector<double> exit_;
  double miss_ = 0.0;
  std::vector<std::size_t> order_;
  std::vector<std::size_t> rank_;
};

/// Q = P + P² + ⋯ on the window. Q(x, y) is the probability that a trajectory
/// started at x later passes through y.
struct HitMatrix {
  Matrix q;
};

/// Exact solve of (I - P) Q = P by back-substitution in reverse topological
/// order, touching each transition once per column.
HitMatrix compute_hit_matrix(const LoopFreeChain& chain);

/// x ↦ π_x + (πQ)_x, the probability that x lies on the trajectory.
Vector hit_intensity(const LoopFreeChain& chain, const HitMatrix& hits);

struct EntranceLaw {
  std::vector<std::size_t> window;  // sorted internal indices
  std::vector<double> pi_tilde;     // aligned with window
  double pi_zero = 1.0;
};

/// Throws ReturnToWindow if some trajectory can leave `window` and come back.
void check_no_return(const LoopFreeChain& chain, const HitMatrix& hits,
                     std::span<const std::size_t> window);

EntranceLaw entrance_law(const LoopFreeChain& chain, const HitMatrix& hits,
                         std::span<const std::size_t> window);
EntranceLaw entrance_law(const LoopFreeChain& chain, std::span<const std::size_t> window);

/// Chain on `window` (sorted order) with the complement contracted into the
/// exit state and the entrance law as initial distribution.
LoopFreeChain contract_to_window(const LoopFreeChain& chain, const HitMatrix& hits,
                                 std::span<const std::size_t> window);
LoopFreeChain contract_to_window(const LoopFreeChain& chain,
                                 std::span<const std::size_t> window);

/// Sorted, deduplicated copy; throws UnknownState for indices >= n.
std::vector<std::size_t> normalize_subset(std::span<const std::size_t> subset, std::size_t n);

}  // namespace dppchains

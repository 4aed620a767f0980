#pragma once

#include "dppchains/chain.hpp"
#include "dppchains/kernel.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dppchains {

/// Sorted set of internal state indices; the empty set is the trajectory
/// that never enters the window.
using Configuration = std::vector<std::size_t>;

/// Seed of replicate `i` under master seed `master`:
/// splitmix64(master + (i + 1)·0x9E3779B97F4A7C15). Any partition of
/// replicates across workers therefore reproduces the same draws.
std::uint64_t child_seed(std::uint64_t master, std::uint64_t i) noexcept;

/// mt19937_64 stream with a portable uniform conversion (top 53 bits).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

struct SampleBatch {
  std::uint64_t seed = 0;
  std::vector<Configuration> configs;
  std::string meta;
};

Configuration sample_trajectory(const LoopFreeChain& chain, Rng& rng);

/// Independent per-site edits: a present point is deleted w.p. p_x, an empty
/// site is filled w.p. q_x. Draws exactly one uniform per window site.
Configuration apply_noise(const Configuration& config, const NoiseParams& noise, Rng& rng);

/// Replicate i draws its trajectory and then its noise from Rng(child_seed(seed, i)).
SampleBatch sample_batch(const LoopFreeChain& chain, const std::optional<NoiseParams>& noise,
                         std::size_t samples, std::uint64_t seed, unsigned threads = 1);

/// Window counts of the same replicates sample_batch would produce, without
/// storing configurations. Result[w][i] is the count in windows[w] for replicate i.
std::vector<std::vector<std::uint32_t>> sample_window_counts(
    const LoopFreeChain& chain, const std::optional<NoiseParams>& noise,
    std::span<const std::vector<std::size_t>> windows, std::size_t samples, std::uint64_t seed,
    unsigned threads = 1);

struct Estimate {
  double value = 0.0;
  double standard_error = 0.0;
};

/// Fraction of configurations containing `subset`, with binomial SE.
Estimate estimate_correlation(const SampleBatch& batch, std::span<const std::size_t> subset);

struct WeightedConfiguration {
  Configuration config;
  double prob;
};

inline constexpr double kMaxEnumeratedPaths = 1e6;

/// Exact law of the visited set, including the ∅ atom for missing the window,
/// sorted lexicographically by configuration.
std::vector<WeightedConfiguration> enumerate_trajectories(const LoopFreeChain& chain);

/// Exact law over all subsets of a window of at most kMaxSubsetWindow sites,
/// indexed by bitmask (bit i ↔ state i).
struct SubsetDistribution {
  std::size_t n = 0;
  std::vector<double> prob;

  /// P(subset ⊂ X).
  double correlation(std::span<const std::size_t> subset) const;
  /// Law of |X ∩ window| over 0..|window|.
  std::vector<double> count_pmf(std::span<const std::size_t> window) const;
};

inline constexpr std::size_t kMaxSubsetWindow = 20;

SubsetDistribution to_subset_distribution(std::span<const WeightedConfiguration> dist, std::size_t n);

/// Pushes the exact trajectory law through the per-site noise channels.
SubsetDistribution enumerate_noisy(const LoopFreeChain& chain, const NoiseParams& noise);

// Exact quantities from an enumerated law.
double exact_correlation(std::span<const WeightedConfiguration> dist, std::span<const std::size_t> subset);
/// P(X ∩ window = exact), `exact` ⊆ window.
double exact_intersection_probability(std::span<const WeightedConfiguration> dist,
                                      std::span<const std::size_t> window,
                                      std::span<const std::size_t> exact);
/// First visited window state (in trajectory order) → probability; missing mass is π₀.
EntranceLaw exact_entrance_law(const LoopFreeChain& chain, std::span<const WeightedConfiguration> dist,
                               std::span<const std::size_t> window);
std::vector<double> exact_count_pmf(std::span<const WeightedConfiguration> dist,
                                    std::span<const std::size_t> window);

}  // namespace dppchains

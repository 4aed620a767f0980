#pragma once

#include "dppchains/chain.hpp"
#include "dppchains/kernel.hpp"
#include "dppchains/sampler.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dppchains {

enum class CountSource { ExactKernel, ExactEnumeration, Empirical };

struct CountStatistics {
  double mean = 0.0;
  double variance = 0.0;
  std::vector<double> distribution;  // pmf over 0..|Y|; empty if not computed
  /// mean, variance, standardized third and fourth cumulants
  std::vector<double> cumulants;
  CountSource source = CountSource::Empirical;
  // Empirical only: standard errors of the mean and of the variance.
  double mean_se = 0.0;
  double variance_se = 0.0;
  std::size_t samples = 0;
};

struct CountMoments {
  double mean = 0.0;
  double variance = 0.0;
};

/// E N_Y = Tr K_Y and Var N_Y = Tr(K_Y − K_Y²). Throws NegativeMass if the
/// variance is below −1e−10.
CountMoments count_moments(const Kernel& k, std::span<const std::size_t> window);

inline constexpr std::size_t kMaxDistributionWindow = 512;

/// Law of N_Y from the generating polynomial det(I + (z − 1) K_Y), evaluated
/// at the |Y|+1 roots of unity after one Hessenberg reduction and inverted by
/// a discrete Fourier transform. Throws NegativeMass for a coefficient below
/// −1e−6; smaller negative roundoff is clipped to zero.
std::vector<double> count_distribution(const Kernel& k, std::span<const std::size_t> window);

CountStatistics empirical_count_statistics(std::span<const std::uint32_t> counts, std::size_t window_size);
CountStatistics empirical_counts(const SampleBatch& batch, std::span<const std::size_t> window);

/// Kolmogorov–Smirnov distance between the lattice counts standardized by
/// (mean, variance) and Φ, with the half-integer continuity correction:
/// sup_k |F̂(k) − Φ((k + ½ − mean)/sd)|.
double ks_distance_lattice(std::span<const std::uint32_t> counts, double mean, double variance);

double standard_normal_cdf(double x);

struct CltRow {
  std::size_t window_size = 0;
  double exact_mean = 0.0;
  double exact_variance = 0.0;
  double empirical_mean = 0.0;
  double empirical_variance = 0.0;
  double mean_se = 0.0;
  double variance_se = 0.0;
  double k3 = 0.0;
  double k4 = 0.0;
  double ks = 0.0;
  bool degenerate_variance = false;
};

struct CltReport {
  std::vector<CltRow> rows;
  std::uint64_t seed = 0;
  std::size_t samples_per_window = 0;
  bool k3_decreasing = false;
  bool k4_decreasing = false;
  bool ks_decreasing = false;
  bool degenerate_variance = false;
  /// Slope of log Var N against log |Y| across windows; NaN if undefined.
  double variance_growth_exponent = 0.0;
};

inline constexpr double kDegenerateVariance = 1e-12;

/// Exact moments from the (noisy) kernel plus empirical cumulants and KS
/// distance per window. Window w is sampled with master seed
/// child_seed(seed, w). Windows must strictly increase in size.
CltReport clt_report(const LoopFreeChain& chain, const std::optional<NoiseParams>& noise,
                     std::span<const std::vector<std::size_t>> windows, std::size_t samples_per_window,
                     std::uint64_t seed, unsigned threads = 1);

struct NormEstimate {
  std::vector<std::size_t> sizes;  // ascending truncation sizes
  std::vector<double> norms;       // spectral norms of the conjugated truncations
  double relative_spread = 0.0;    // (max − min) / min
  bool stable = false;             // relative_spread < 10%
  /// Fitted decay rate of |K_ij| in i − j over i > j; +∞ if no entries.
  double decay_rate = 0.0;
};

inline constexpr double kNormStabilityThreshold = 0.10;

/// Spectral norms of e^{α(i−j)} K_ij truncated to the leading n/4, n/2, n
/// states. Throws AlphaTooLarge if α is not below the fitted decay rate.
NormEstimate operator_norm_estimate(const Kernel& k, double alpha);

/// Decay rate fit of log|K_ij| against i − j over i > j (entries above 1e−14).
double below_diagonal_decay_rate(const Kernel& k);

}  // namespace dppchains

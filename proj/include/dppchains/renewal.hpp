#pragma once

#include "dppchains/chain.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace dppchains {

/// Distribution on {offset, offset+1, …}; probs[k] = P(ξ = offset + k).
struct Pmf {
  std::int64_t offset = 1;
  std::vector<double> probs;
  /// Set when mass was cut off at a horizon; total() < 1 is then legal.
  bool truncated = false;

  double at(std::int64_t n) const noexcept;
  double total() const noexcept;
  double mean() const noexcept;
  std::int64_t max_support() const noexcept { return offset + static_cast<std::int64_t>(probs.size()) - 1; }
  /// Throws InvalidPmf unless offset ≥ 1, entries in [0,1], and the total is
  /// 1 (or ≤ 1 when truncated).
  void validate() const;

  static Pmf point(std::int64_t n) { return {n, {1.0}, false}; }
  static Pmf uniform(std::int64_t lo, std::int64_t hi);
};

struct RenewalSpec {
  Pmf xi0;
  Pmf xi1;
  std::int64_t horizon = 0;
};

/// Chain on 1..T with π_i = P(ξ₀ = i) and P(i, j) = P(ξ₁ = j − i); mass that
/// overshoots T leaves the window.
LoopFreeChain renewal_chain(const RenewalSpec& spec);

/// f_1..f_{n_max} from f_n = g_n + Σ_{k<n} g_k f_{n−k}; element k holds f_{k+1}.
/// f_n is the probability that n is a renewal epoch of a process started at 0.
std::vector<double> renewal_function(const Pmf& g, std::size_t n_max);

struct LogLinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  /// Largest |log y − fitted| over the fitted points.
  double max_residual = 0.0;
  /// 1 − R² of the fit.
  double unexplained_variance = 0.0;
  std::size_t points = 0;
};

/// Least squares of log y against x over points with y > floor, restricted to
/// the trailing two-thirds of those points. Throws DegenerateFit with fewer
/// than two usable points.
LogLinearFit fit_log_linear(std::span<const double> x, std::span<const double> y, double floor);

inline constexpr double kDeviationFloor = 1e-14;

struct RenewalRateFit {
  /// f_n equals 1/Eξ to within the floor at every index.
  bool converged_exactly = false;
  double log_c1 = 0.0;  // fitted log-intercept
  double c2 = 0.0;      // fitted decay rate
  double max_residual = 0.0;
  double unexplained_variance = 0.0;
  std::size_t points = 0;
};

/// Fits |f_n − 1/Eξ| ≈ c₁ e^{−c₂ n}. Throws PeriodicInput for periodic g.
RenewalRateFit renewal_rate_fit(const Pmf& g, std::span<const double> f);

struct Periodicity {
  bool aperiodic = false;
  std::int64_t period = 0;  // gcd of the support
};

Periodicity is_aperiodic(const Pmf& g);

/// Tail shapes that class-ℰ membership can be decided for exactly.
struct GeometricTail {
  double scale;  // g_n = scale · ratio^n
  double ratio;
};
struct PolynomialTail {
  double scale;  // g_n = scale / n^power
  double power;
};
using DeclaredTail = std::variant<Pmf, GeometricTail, PolynomialTail>;

struct ClassECertificate {
  bool member = false;
  /// For a failed check, an explicit n ≥ n₀ with g_n > rⁿ.
  std::optional<std::int64_t> witness;
};

/// Whether g_n ≤ rⁿ for every n ≥ n₀. Throws InvalidRatio unless 0 < r < 1.
ClassECertificate class_E_check(const DeclaredTail& tail, double r, std::int64_t n0);

struct SemiMarkovSpec {
  std::vector<std::string> states;
  struct KernelEntry {
    std::size_t from;
    std::size_t to;
    Pmf passage;  // P_{from,to}(t), total mass = P_{from,to}
  };
  std::vector<KernelEntry> kernel;
  struct InitialEntry {
    std::size_t state;
    Pmf arrival;
  };
  std::vector<InitialEntry> initial;
  std::int64_t horizon = 0;

  /// Driving-chain probability P_{from,to}.
  double driving(std::size_t from, std::size_t to) const;
  /// Throws InvalidSpec / InvalidPmf.
  void validate() const;
};

/// Label of state (s, t) in the product chain.
std::string semi_markov_label(const std::string& s, std::int64_t t);
/// Internal index of (s, t): time-major, (t − 1)·|S| + s.
std::size_t semi_markov_index(const SemiMarkovSpec& spec, std::size_t s, std::int64_t t);

/// Chain on S × {1..T} with P((s₁,t₁) → (s₂,t₂)) = P_{s₁s₂}(t₂ − t₁).
LoopFreeChain semi_markov_chain(const SemiMarkovSpec& spec);

/// Law of the first time t ≥ 1 the process started at `from` at time 0 is in
/// `to`, up to t_max (deficient by the mass not arrived by then).
Pmf first_passage_distribution(const SemiMarkovSpec& spec, std::size_t from, std::size_t to,
                               std::int64_t t_max);

/// Strong connectivity of the support of the driving chain.
bool driving_irreducible(const SemiMarkovSpec& spec);

enum class AperiodicityRule {
  /// Every passage time with P_{ss'} ≠ 0 is aperiodic.
  AllPassageTimes,
  /// Only first-return times s → s are required to be aperiodic.
  FirstReturn,
};

struct HypothesisReport {
  bool irreducible = false;
  bool aperiodic = false;
  bool finite_support = false;  // finitely supported passage and initial laws are in class ℰ
  std::string failure;          // empty when all hold
  bool ok() const { return failure.empty(); }
};

/// Checks the hypotheses that give a bounded conjugated kernel.
/// `t_max` bounds the first-return distributions used by the FirstReturn rule.
HypothesisReport check_bounded_kernel_hypotheses(const SemiMarkovSpec& spec,
                                                 AperiodicityRule rule = AperiodicityRule::AllPassageTimes,
                                                 std::int64_t t_max = 256);

/// Fit of log P(passage > t) against t; the tail is taken relative to the
/// hitting probability `hit_mass`.
LogLinearFit passage_tail_fit(const Pmf& passage, double hit_mass = 1.0, double floor = 1e-12);

}  // namespace dppchains

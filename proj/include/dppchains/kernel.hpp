#pragma once

#include "dppchains/chain.hpp"
#include "dppchains/linalg.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace dppchains {

/// Dense windows beyond this size are rejected.
inline constexpr std::size_t kMaxDenseStates = 4096;
/// |det(I - K_Y)| below this is treated as π₀ = 0.
inline constexpr double kDefaultGapThreshold = 1e-12;

enum class KernelKind { Correlation, LEnsemble };

struct Kernel {
  Matrix matrix;
  std::vector<StateLabel> labels;  // row/column i ↔ labels[i]
  KernelKind kind = KernelKind::Correlation;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t index_of(const StateLabel& label) const;
  std::vector<std::size_t> indices_of(std::span<const StateLabel> subset) const;
};

struct NoiseParams {
  std::vector<double> p;  // deletion probabilities
  std::vector<double> q;  // insertion probabilities

  static NoiseParams none(std::size_t n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)}; }
  static NoiseParams uniform(std::size_t n, double p, double q) {
    return {std::vector<double>(n, p), std::vector<double>(n, q)};
  }
  /// Throws InvalidProbability / DimensionMismatch.
  void validate(std::size_t n) const;
};

/// K(x,y) = π_x + (πQ)_x − Q(y,x).
Kernel build_kernel(const LoopFreeChain& chain, const HitMatrix& hits);
Kernel build_kernel(const LoopFreeChain& chain);

/// Raw determinant of the principal minor on `subset`; the empty minor is 1.
double correlation(const Kernel& k, std::span<const std::size_t> subset);

/// Ordered product (π_{x1} + (πQ)_{x1}) Q(x1,x2) ⋯ Q(x_{n−1},x_n) with the
/// subset sorted topologically. Independent of any determinant.
double product_correlation(const LoopFreeChain& chain, const HitMatrix& hits, const Vector& intensity,
                           std::span<const std::size_t> subset);
double product_correlation(const LoopFreeChain& chain, std::span<const std::size_t> subset);

/// det(I − K_Y).
double gap_probability(const Kernel& k, std::span<const std::size_t> window);

/// K_Y (I − K_Y)⁻¹, labelled by the sorted window.
Kernel l_ensemble(const Kernel& k, std::span<const std::size_t> window,
                  double gap_threshold = kDefaultGapThreshold);

/// L(x,y) = π̃_x P(y,ℱ) / π₀ − P(y,x) from the contracted chain.
Kernel l_ensemble_closed_form(const LoopFreeChain& chain, const HitMatrix& hits,
                              std::span<const std::size_t> window,
                              double gap_threshold = kDefaultGapThreshold);
Kernel l_ensemble_closed_form(const LoopFreeChain& chain, std::span<const std::size_t> window,
                              double gap_threshold = kDefaultGapThreshold);

/// diag(q) + diag(1 − p − q)·K.
Kernel apply_bernoulli_noise(const Kernel& k, const NoiseParams& noise);

/// D K D⁻¹ with D = diag(weights); principal minors are unchanged.
Kernel conjugate_kernel(const Kernel& k, std::span<const double> weights);

/// Weights d_i = e^{α i} for states numbered i = 1..n.
std::vector<double> geometric_weights(std::size_t n, double alpha);

/// a₁(a₂b₁ − c₁)⋯(aₙb_{n−1} − c_{n−1})bₙ. `lower` holds the (n−1)(n−2)/2
/// entries strictly below the subdiagonal; the value does not depend on them.
double structured_determinant(std::span<const double> a, std::span<const double> b,
                              std::span<const double> c, std::span<const double> lower);

/// The matrix whose determinant structured_determinant evaluates: a_i b_j on
/// and above the diagonal, c_i on the subdiagonal, `lower` (column-major) below.
Matrix assemble_structured_matrix(std::span<const double> a, std::span<const double> b,
                                  std::span<const double> c, std::span<const double> lower);

}  // namespace dppchains

#include "dppchains/kernel.hpp"

#include "dppchains/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dppchains {

namespace {

void check_dense_size(std::size_t n) {
  if (n > kMaxDenseStates)
    throw Error(ErrorCode::WindowTooLarge, std::to_string(n) + " states exceed the dense limit of " +
                                               std::to_string(kMaxDenseStates));
}

std::vector<StateLabel> labels_at(const std::vector<StateLabel>& labels,
                                  std::span<const std::size_t> idx) {
  std::vector<StateLabel> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(labels[i]);
  return out;
}

}  // namespace

std::size_t Kernel::index_of(const StateLabel& label) const {
  const std::string key = label_text(label);
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (label_text(labels[i]) == key) return i;
  throw Error(ErrorCode::UnknownState, "no state " + key + " in kernel");
}

std::vector<std::size_t> Kernel::indices_of(std::span<const StateLabel> subset) const {
  std::vector<std::size_t> out;
  out.reserve(subset.size());
  for (const auto& l : subset) out.push_back(index_of(l));
  return out;
}

void NoiseParams::validate(std::size_t n) const {
  if (p.size() != n || q.size() != n)
    throw Error(ErrorCode::DimensionMismatch, "noise vectors have sizes " + std::to_string(p.size()) + "/" +
                                                  std::to_string(q.size()) + ", window has " +
                                                  std::to_string(n));
  auto bad = [](double v) { return !std::isfinite(v) || v < 0.0 || v > 1.0; };
  if (std::any_of(p.begin(), p.end(), bad) || std::any_of(q.begin(), q.end(), bad))
    throw Error(ErrorCode::InvalidProbability, "noise probabilities must lie in [0,1]");
}

Kernel build_kernel(const LoopFreeChain& chain, const HitMatrix& hits) {
  check_dense_size(chain.size());
  const Vector h = hit_intensity(chain, hits);
  Kernel k;
  k.labels = chain.labels();
  k.kind = KernelKind::Correlation;
  k.matrix = -hits.q.transpose();
  k.matrix.colwise() += h;
  return k;
}

Kernel build_kernel(const LoopFreeChain& chain) {
  check_dense_size(chain.size());
  return build_kernel(chain, compute_hit_matrix(chain));
}

double correlation(const Kernel& k, std::span<const std::size_t> subset) {
  const auto idx = normalize_subset(subset, k.size());
  MinorEvaluator minor(k.matrix);
  return minor(idx);
}

double product_correlation(const LoopFreeChain& chain, const HitMatrix& hits, const Vector& intensity,
                           std::span<const std::size_t> subset) {
  auto idx = normalize_subset(subset, chain.size());
  if (idx.empty()) return 1.0;
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return chain.rank(a) < chain.rank(b); });
  double value = intensity(static_cast<Eigen::Index>(idx.front()));
  for (std::size_t k = 1; k < idx.size(); ++k)
    value *= hits.q(static_cast<Eigen::Index>(idx[k - 1]), static_cast<Eigen::Index>(idx[k]));
  return value;
}

double product_correlation(const LoopFreeChain& chain, std::span<const std::size_t> subset) {
  const HitMatrix hits = compute_hit_matrix(chain);
  return product_correlation(chain, hits, hit_intensity(chain, hits), subset);
}

double gap_probability(const Kernel& k, std::span<const std::size_t> window) {
  const auto idx = normalize_subset(window, k.size());
  MinorEvaluator minor(k.matrix);
  return minor.complement(idx);
}

Kernel l_ensemble(const Kernel& k, std::span<const std::size_t> window, double gap_threshold) {
  const auto idx = normalize_subset(window, k.size());
  const Matrix ky = principal_submatrix(k.matrix, idx);
  const Matrix gap = Matrix::Identity(ky.rows(), ky.cols()) - ky;
  const double det = determinant(gap);
  if (std::abs(det) < gap_threshold)
    throw Error(ErrorCode::SingularGap, "det(I - K_Y) = " + std::to_string(det) +
                                            ": the window is hit almost surely, L-ensemble undefined");
  Kernel l;
  l.labels = labels_at(k.labels, idx);
  l.kind = KernelKind::LEnsemble;
  // K (I−K)⁻¹ = ((I−K)⁻ᵀ Kᵀ)ᵀ
  l.matrix = gap.transpose().partialPivLu().solve(ky.transpose()).transpose();
  return l;
}

Kernel l_ensemble_closed_form(const LoopFreeChain& chain, const HitMatrix& hits,
                              std::span<const std::size_t> window, double gap_threshold) {
  const auto idx = normalize_subset(window, chain.size());
  const LoopFreeChain contracted = contract_to_window(chain, hits, idx);
  const double pi0 = contracted.miss_probability();
  if (pi0 <= gap_threshold)
    throw Error(ErrorCode::SingularGap, "pi0 = " + std::to_string(pi0) +
                                            ": the window is hit almost surely, L-ensemble undefined");
  const auto m = static_cast<Eigen::Index>(idx.size());
  Kernel l;
  l.labels = contracted.labels();
  l.kind = KernelKind::LEnsemble;
  l.matrix.resize(m, m);
  for (Eigen::Index x = 0; x < m; ++x)
    for (Eigen::Index y = 0; y < m; ++y)
      l.matrix(x, y) = contracted.initial()[static_cast<std::size_t>(x)] *
                           contracted.exit_probability(static_cast<std::size_t>(y)) / pi0 -
                       contracted.transition(static_cast<std::size_t>(y), static_cast<std::size_t>(x));
  return l;
}

Kernel l_ensemble_closed_form(const LoopFreeChain& chain, std::span<const std::size_t> window,
                              double gap_threshold) {
  return l_ensemble_closed_form(chain, compute_hit_matrix(chain), window, gap_threshold);
}

Kernel apply_bernoulli_noise(const Kernel& k, const NoiseParams& noise) {
  noise.validate(k.size());
  Kernel out = k;
  for (Eigen::Index x = 0; x < out.matrix.rows(); ++x) {
    const auto i = static_cast<std::size_t>(x);
    out.matrix.row(x) *= 1.0 - noise.p[i] - noise.q[i];
    out.matrix(x, x) += noise.q[i];
  }
  return out;
}

Kernel conjugate_kernel(const Kernel& k, std::span<const double> weights) {
  if (weights.size() != k.size())
    throw Error(ErrorCode::DimensionMismatch, "weight vector length " + std::to_string(weights.size()) +
                                                  " for kernel of size " + std::to_string(k.size()));
  for (double d : weights)
    if (!(d > 0.0) || !std::isfinite(d))
      throw Error(ErrorCode::NonpositiveWeight, "conjugation weights must be positive, got " + std::to_string(d));
  Kernel out = k;
  const Eigen::Map<const Vector> d(weights.data(), static_cast<Eigen::Index>(weights.size()));
  out.matrix = d.asDiagonal() * k.matrix * d.cwiseInverse().asDiagonal();
  return out;
}

std::vector<double> geometric_weights(std::size_t n, double alpha) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = std::exp(alpha * static_cast<double>(i + 1));
  return w;
}

namespace {

void check_structured_lengths(std::size_t na, std::size_t nb, std::size_t nc, std::size_t nl) {
  if (na == 0 || nb != na || nc + 1 != na)
    throw Error(ErrorCode::LengthMismatch, "need |a| = |b| = n >= 1 and |c| = n - 1");
  const std::size_t expected = (na - 1) * (na >= 2 ? na - 2 : 0) / 2;
  if (nl != expected)
    throw Error(ErrorCode::LengthMismatch, "expected " + std::to_string(expected) + " entries below the subdiagonal");
}

}  // namespace

double structured_determinant(std::span<const double> a, std::span<const double> b,
                              std::span<const double> c, std::span<const double> lower) {
  check_structured_lengths(a.size(), b.size(), c.size(), lower.size());
  const std::size_t n = a.size();
  double value = a[0] * b[n - 1];
  for (std::size_t i = 1; i < n; ++i) value *= a[i] * b[i - 1] - c[i - 1];
  return value;
}

Matrix assemble_structured_matrix(std::span<const double> a, std::span<const double> b,
                                  std::span<const double> c, std::span<const double> lower) {
  check_structured_lengths(a.size(), b.size(), c.size(), lower.size());
  const auto n = static_cast<Eigen::Index>(a.size());
  Matrix m = Matrix::Zero(n, n);
  std::size_t next = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const auto uj = static_cast<std::size_t>(j);
      if (i <= j) {
        m(i, j) = a[ui] * b[uj];
      } else if (i == j + 1) {
        m(i, j) = c[uj];
      } else {
        m(i, j) = lower[next++];
      }
    }
  }
  return m;
}

}  // namespace dppchains

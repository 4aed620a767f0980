#include "dppchains/stats.hpp"

#include "dppchains/error.hpp"
#include "dppchains/renewal.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

namespace dppchains {

CountMoments count_moments(const Kernel& k, std::span<const std::size_t> window) {
  const auto idx = normalize_subset(window, k.size());
  CountMoments m;
  double square_trace = 0.0;
  for (std::size_t a : idx) {
    const auto ia = static_cast<Eigen::Index>(a);
    m.mean += k.matrix(ia, ia);
    for (std::size_t b : idx) {
      const auto ib = static_cast<Eigen::Index>(b);
      square_trace += k.matrix(ia, ib) * k.matrix(ib, ia);
    }
  }
  m.variance = m.mean - square_trace;
  if (m.variance < -1e-10)
    throw Error(ErrorCode::NegativeMass, "Tr(K_Y - K_Y^2) = " + std::to_string(m.variance) + " is negative");
  return m;
}

std::vector<double> count_distribution(const Kernel& k, std::span<const std::size_t> window) {
  const auto idx = normalize_subset(window, k.size());
  const std::size_t m = idx.size();
  if (m > kMaxDistributionWindow)
    throw Error(ErrorCode::WindowTooLarge, std::to_string(m) + " states exceed the distribution limit of " +
                                               std::to_string(kMaxDistributionWindow));
  if (m == 0) return {1.0};
  const Matrix ky = principal_submatrix(k.matrix, idx);
  Eigen::HessenbergDecomposition<Matrix> hess(ky);
  const Eigen::MatrixXcd h = Matrix(hess.matrixH()).cast<std::complex<double>>();

  const std::size_t nodes = m + 1;
  std::vector<std::complex<double>> values(nodes);
  for (std::size_t j = 0; j < nodes; ++j) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(nodes);
    const std::complex<double> z = std::polar(1.0, angle);
    values[j] = hessenberg_shifted_determinant(h, z - 1.0);
  }
  std::vector<double> pmf(nodes);
  for (std::size_t c = 0; c < nodes; ++c) {
    std::complex<double> acc = 0.0;
    for (std::size_t j = 0; j < nodes; ++j) {
      const std::size_t phase = (j * c) % nodes;
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(phase) / static_cast<double>(nodes);
      acc += values[j] * std::polar(1.0, angle);
    }
    double p = acc.real() / static_cast<double>(nodes);
    if (p < -1e-6)
      throw Error(ErrorCode::NegativeMass, "P(N = " + std::to_string(c) + ") = " + std::to_string(p) +
                                               ": the kernel does not define a point process on this window");
    pmf[c] = std::max(p, 0.0);
  }
  return pmf;
}

CountStatistics empirical_count_statistics(std::span<const std::uint32_t> counts, std::size_t window_size) {
  if (counts.empty()) throw Error(ErrorCode::EmptyBatch, "no samples");
  CountStatistics s;
  s.source = CountSource::Empirical;
  s.samples = counts.size();
  const auto n = static_cast<double>(counts.size());
  long double sum = 0.0L;
  std::uint32_t top = 0;
  for (auto c : counts) {
    sum += c;
    top = std::max(top, c);
  }
  s.distribution.assign(std::max<std::size_t>(window_size, top) + 1, 0.0);
  for (auto c : counts) s.distribution[c] += 1.0 / n;
  const double mean = static_cast<double>(sum / n);
  long double m2 = 0.0L;
  long double m3 = 0.0L;
  long double m4 = 0.0L;
  for (auto c : counts) {
    const long double d = static_cast<long double>(c) - mean;
    const long double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  const double c2 = static_cast<double>(m2 / n);
  const double c3 = static_cast<double>(m3 / n);
  const double c4 = static_cast<double>(m4 / n);
  s.mean = mean;
  s.variance = counts.size() > 1 ? static_cast<double>(m2 / (n - 1.0)) : 0.0;
  double k3 = 0.0;
  double k4 = 0.0;
  if (c2 > 0.0) {
    k3 = c3 / std::pow(c2, 1.5);
    k4 = c4 / (c2 * c2) - 3.0;
  }
  s.cumulants = {s.mean, s.variance, k3, k4};
  s.mean_se = std::sqrt(s.variance / n);
  s.variance_se = std::sqrt(std::max(0.0, c4 - c2 * c2) / n);
  return s;
}

CountStatistics empirical_counts(const SampleBatch& batch, std::span<const std::size_t> window) {
  if (batch.configs.empty()) throw Error(ErrorCode::EmptyBatch, "cannot summarize an empty batch");
  std::vector<std::size_t> w(window.begin(), window.end());
  std::sort(w.begin(), w.end());
  w.erase(std::unique(w.begin(), w.end()), w.end());
  std::vector<std::uint32_t> counts;
  counts.reserve(batch.configs.size());
  for (const auto& c : batch.configs) {
    std::uint32_t k = 0;
    for (std::size_t x : c)
      if (std::binary_search(w.begin(), w.end(), x)) ++k;
    counts.push_back(k);
  }
  return empirical_count_statistics(counts, w.size());
}

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double ks_distance_lattice(std::span<const std::uint32_t> counts, double mean, double variance) {
  if (counts.empty()) throw Error(ErrorCode::EmptyBatch, "no samples");
  const double sd = std::sqrt(variance);
  std::vector<std::uint32_t> sorted(counts.begin(), counts.end());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  const std::int64_t lo = static_cast<std::int64_t>(sorted.front()) - 1;
  const std::int64_t hi = sorted.back();
  double dist = 0.0;
  std::size_t below = 0;
  for (std::int64_t k = lo; k <= hi; ++k) {
    while (below < sorted.size() && static_cast<std::int64_t>(sorted[below]) <= k) ++below;
    const double empirical = static_cast<double>(below) / n;
    const double normal = standard_normal_cdf((static_cast<double>(k) + 0.5 - mean) / sd);
    dist = std::max(dist, std::abs(empirical - normal));
  }
  return dist;
}

namespace {

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return !v.empty();
}

}  // namespace

CltReport clt_report(const LoopFreeChain& chain, const std::optional<NoiseParams>& noise,
                     std::span<const std::vector<std::size_t>> windows, std::size_t samples_per_window,
                     std::uint64_t seed, unsigned threads) {
  for (std::size_t w = 1; w < windows.size(); ++w)
    if (normalize_subset(windows[w], chain.size()).size() <= normalize_subset(windows[w - 1], chain.size()).size())
      throw Error(ErrorCode::InvalidSpec, "windows must strictly increase in size");
  if (samples_per_window == 0) throw Error(ErrorCode::EmptyBatch, "samples per window must be positive");

  Kernel kernel = build_kernel(chain);
  if (noise) kernel = apply_bernoulli_noise(kernel, *noise);

  CltReport report;
  report.seed = seed;
  report.samples_per_window = samples_per_window;
  std::vector<double> k3s;
  std::vector<double> k4s;
  std::vector<double> kss;
  for (std::size_t w = 0; w < windows.size(); ++w) {
    const auto window = normalize_subset(windows[w], chain.size());
    CltRow row;
    row.window_size = window.size();
    const CountMoments exact = count_moments(kernel, window);
    row.exact_mean = exact.mean;
    row.exact_variance = std::max(0.0, exact.variance);

    const std::vector<std::vector<std::size_t>> one{window};
    const auto counts = sample_window_counts(chain, noise, one, samples_per_window, child_seed(seed, w), threads);
    const CountStatistics emp = empirical_count_statistics(counts[0], window.size());
    row.empirical_mean = emp.mean;
    row.empirical_variance = emp.variance;
    row.mean_se = emp.mean_se;
    row.variance_se = emp.variance_se;
    if (row.exact_variance <= kDegenerateVariance) {
      row.degenerate_variance = true;
      report.degenerate_variance = true;
      row.k3 = row.k4 = row.ks = std::numeric_limits<double>::quiet_NaN();
    } else {
      row.k3 = emp.cumulants[2];
      row.k4 = emp.cumulants[3];
      row.ks = ks_distance_lattice(counts[0], row.exact_mean, row.exact_variance);
      k3s.push_back(std::abs(row.k3));
      k4s.push_back(std::abs(row.k4));
      kss.push_back(row.ks);
    }
    report.rows.push_back(row);
  }
  if (!report.degenerate_variance) {
    report.k3_decreasing = strictly_decreasing(k3s);
    report.k4_decreasing = strictly_decreasing(k4s);
    report.ks_decreasing = strictly_decreasing(kss);
  }

  std::vector<double> lx;
  std::vector<double> lv;
  for (const auto& r : report.rows) {
    if (r.degenerate_variance || r.window_size == 0) continue;
    lx.push_back(std::log(static_cast<double>(r.window_size)));
    lv.push_back(r.exact_variance);
  }
  report.variance_growth_exponent = std::numeric_limits<double>::quiet_NaN();
  if (lx.size() >= 2) {
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      mx += lx[i];
      my += std::log(lv[i]);
    }
    mx /= static_cast<double>(lx.size());
    my /= static_cast<double>(lx.size());
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxx += (lx[i] - mx) * (lx[i] - mx);
      sxy += (lx[i] - mx) * (std::log(lv[i]) - my);
    }
    if (sxx > 0.0) report.variance_growth_exponent = sxy / sxx;
  }
  return report;
}

double below_diagonal_decay_rate(const Kernel& k) {
  std::vector<double> offsets;
  std::vector<double> magnitudes;
  const Eigen::Index n = k.matrix.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j + 1; i < n; ++i) {
      offsets.push_back(static_cast<double>(i - j));
      magnitudes.push_back(std::abs(k.matrix(i, j)));
    }
  }
  try {
    const LogLinearFit fit = fit_log_linear(offsets, magnitudes, kDeviationFloor);
    return -fit.slope;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateFit) throw;
    return std::numeric_limits<double>::infinity();
  }
}

NormEstimate operator_norm_estimate(const Kernel& k, double alpha) {
  NormEstimate est;
  est.decay_rate = below_diagonal_decay_rate(k);
  if (alpha > 0.0 && !(alpha < est.decay_rate))
    throw Error(ErrorCode::AlphaTooLarge, "alpha " + std::to_string(alpha) + " is not below the fitted decay rate " +
                                              std::to_string(est.decay_rate));
  const std::size_t n = k.size();
  for (std::size_t s : {n / 4, n / 2, n})
    if (s > 0 && (est.sizes.empty() || est.sizes.back() != s)) est.sizes.push_back(s);
  for (std::size_t s : est.sizes) {
    const auto m = static_cast<Eigen::Index>(s);
    Matrix conj(m, m);
    // e^{α(i−j)} entrywise; explicit weights e^{αi} overflow on long windows.
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index i = 0; i < m; ++i)
        conj(i, j) = std::exp(alpha * static_cast<double>(i - j)) * k.matrix(i, j);
    est.norms.push_back(spectral_norm(conj));
  }
  if (!est.norms.empty()) {
    const auto [lo, hi] = std::minmax_element(est.norms.begin(), est.norms.end());
    est.relative_spread = *lo > 0.0 ? (*hi - *lo) / *lo : (*hi > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  }
  est.stable = est.relative_spread < kNormStabilityThreshold;
  return est;
}

}  // namespace dppchains

#include "support.hpp"

#include "dppchains/error.hpp"
#include "dppchains/kernel.hpp"
#include "dppchains/renewal.hpp"
#include "dppchains/sampler.hpp"
#include "dppchains/stats.hpp"

#include <doctest.h>

#include <cmath>

using namespace dppchains;
using namespace testing_support;

namespace {

std::vector<std::size_t> prefix(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

LoopFreeChain deterministic(std::size_t n) {
  ChainSpec spec;
  for (std::size_t i = 0; i < n; ++i) spec.states.emplace_back(static_cast<std::int64_t>(i + 1));
  spec.pi.assign(n, 0.0);
  spec.pi[0] = 1.0;
  for (std::size_t i = 0; i + 1 < n; ++i) spec.transitions.push_back({i, i + 1, 1.0});
  return LoopFreeChain::from_spec(spec);
}

/// Count pmf of N_W under a bitmask law.
std::vector<double> count_law(const std::map<std::uint32_t, double>& law, std::uint32_t window, std::size_t size) {
  std::vector<double> pmf(size + 1, 0.0);
  for (const auto& [m, p] : law) pmf[static_cast<std::size_t>(__builtin_popcount(m & window))] += p;
  return pmf;
}

std::pair<double, double> pmf_moments(const std::vector<double>& pmf) {
  double mean = 0.0, second = 0.0;
  for (std::size_t n = 0; n < pmf.size(); ++n) {
    mean += static_cast<double>(n) * pmf[n];
    second += static_cast<double>(n * n) * pmf[n];
  }
  return {mean, second - mean * mean};
}

}  // namespace

TEST_CASE("count moments") {
  const auto diamond = LoopFreeChain::from_spec(diamond_spec());
  const Kernel k = build_kernel(diamond);
  const auto m = count_moments(k, prefix(3));
  CHECK(m.mean == doctest::Approx(2.5));
  CHECK(m.variance == doctest::Approx(0.25));

  const auto d = count_moments(build_kernel(deterministic(2)), prefix(2));
  CHECK(d.mean == 2.0);
  CHECK(d.variance == 0.0);

  const std::vector<std::size_t> none;
  CHECK(count_moments(k, none).mean == 0.0);
  CHECK(count_moments(k, none).variance == 0.0);
  const std::vector<std::size_t> bad{9};
  CHECK_THROWS_AS(count_moments(k, bad), Error);
}

TEST_CASE("count distribution") {
  const auto diamond = LoopFreeChain::from_spec(diamond_spec());
  const Kernel k = build_kernel(diamond);
  auto pmf = count_distribution(k, prefix(3));
  REQUIRE(pmf.size() == 4);
  CHECK(std::abs(pmf[0]) < 1e-12);
  CHECK(std::abs(pmf[1]) < 1e-12);
  CHECK(pmf[2] == doctest::Approx(0.5));
  CHECK(pmf[3] == doctest::Approx(0.5));

  const std::vector<std::size_t> y2{1};
  pmf = count_distribution(k, y2);
  CHECK(pmf[0] == doctest::Approx(0.5));
  CHECK(pmf[1] == doctest::Approx(0.5));

  pmf = count_distribution(build_kernel(deterministic(6)), prefix(6));
  for (std::size_t n = 0; n < 6; ++n) CHECK(std::abs(pmf[n]) < 1e-12);
  CHECK(pmf[6] == doctest::Approx(1.0));

  Kernel bogus{Matrix::Constant(2, 2, 0.0), {std::int64_t{1}, std::int64_t{2}}, KernelKind::Correlation};
  bogus.matrix << 2, 0, 0, 0;  // "probability" 2 at a single site
  CHECK_THROWS_AS(count_distribution(bogus, prefix(2)), Error);
}

TEST_CASE("exact count statistics agree with enumeration, with and without noise") {
  std::mt19937_64 gen(41);
  std::uniform_real_distribution<double> unit(0, 1);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 3 + gen() % 6;
    const ChainSpec spec = random_chain_spec(gen, n);
    const auto chain = LoopFreeChain::from_spec(spec);
    const Kernel k = build_kernel(chain);
    const auto law = path_enumeration(spec);
    NoiseParams noise = NoiseParams::none(n);
    for (std::size_t i = 0; i < n; ++i) {
      noise.p[i] = 0.5 * unit(gen);
      noise.q[i] = 0.5 * unit(gen);
    }
    const Kernel noisy = apply_bernoulli_noise(k, noise);
    const SubsetDistribution noisy_law = enumerate_noisy(chain, noise);
    std::vector<double> weights(n);
    for (auto& w : weights) w = 0.2 + 3 * unit(gen);
    const Kernel conj = conjugate_kernel(k, weights);

    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
      const auto y = members(mask);
      const auto pmf = count_distribution(k, y);
      const auto oracle = count_law(law, mask, y.size());
      double total = 0.0;
      for (std::size_t c = 0; c < pmf.size(); ++c) {
        CHECK(std::abs(pmf[c] - oracle[c]) < 1e-10);
        total += pmf[c];
      }
      CHECK(std::abs(total - 1.0) < 1e-10);
      CHECK(std::abs(pmf[0] - gap_probability(k, y)) < 1e-10);

      const auto m = count_moments(k, y);
      const auto [mean, var] = pmf_moments(oracle);
      CHECK(std::abs(m.mean - mean) < 1e-10);
      CHECK(std::abs(m.variance - var) < 1e-10);
      const auto mc = count_moments(conj, y);
      CHECK(std::abs(mc.mean - m.mean) < 1e-10);
      CHECK(std::abs(mc.variance - m.variance) < 1e-10);

      const auto nm = count_moments(noisy, y);
      const auto [nmean, nvar] = pmf_moments(noisy_law.count_pmf(y));
      CHECK(std::abs(nm.mean - nmean) < 1e-10);
      CHECK(std::abs(nm.variance - nvar) < 1e-10);
    }
  }
}

TEST_CASE("count distribution on long renewal windows sums to one") {
  const auto chain = renewal_chain({Pmf::point(1), Pmf::uniform(1, 3), 400});
  const Kernel k = apply_bernoulli_noise(build_kernel(chain), NoiseParams::uniform(400, 0.1, 0.1));
  const auto pmf = count_distribution(k, prefix(400));
  double total = 0.0;
  for (double p : pmf) {
    CHECK(p >= 0.0);
    total += p;
  }
  CHECK(std::abs(total - 1.0) < 1e-10);
  const auto [mean, var] = pmf_moments(pmf);
  const auto m = count_moments(k, prefix(400));
  CHECK(mean == doctest::Approx(m.mean).epsilon(1e-9));
  CHECK(var == doctest::Approx(m.variance).epsilon(1e-7));
}

TEST_CASE("empirical counts") {
  const auto diamond = LoopFreeChain::from_spec(diamond_spec());
  const auto batch = sample_batch(diamond, std::nullopt, 100000, 1);
  const auto s = empirical_counts(batch, prefix(3));
  CHECK(s.source == CountSource::Empirical);
  CHECK(s.samples == 100000);
  CHECK(std::abs(s.mean - 2.5) <= 4 * s.mean_se);

  const std::vector<std::size_t> none;
  const auto e = empirical_counts(batch, none);
  CHECK(e.mean == 0.0);
  CHECK(e.variance == 0.0);
  for (double c : e.cumulants) CHECK(c == 0.0);

  const auto det = sample_batch(deterministic(4), std::nullopt, 100, 1);
  CHECK(empirical_counts(det, prefix(4)).variance == 0.0);

  SampleBatch empty;
  CHECK_THROWS_AS(empirical_counts(empty, prefix(3)), Error);

  // hand-checkable sample: counts 0,1,1,2
  const std::vector<std::uint32_t> counts{0, 1, 1, 2};
  const auto h = empirical_count_statistics(counts, 2);
  CHECK(h.mean == 1.0);
  CHECK(h.variance == doctest::Approx(2.0 / 3));
  REQUIRE(h.cumulants.size() == 4);
  CHECK(h.cumulants[2] == doctest::Approx(0.0));
  CHECK(h.cumulants[3] == doctest::Approx(-1.0));  // m4/m2² − 3 with m2 = m4 = 0.5
}

TEST_CASE("lattice KS distance") {
  CHECK(standard_normal_cdf(0.0) == doctest::Approx(0.5));
  CHECK(standard_normal_cdf(1.96) == doctest::Approx(0.9750021).epsilon(1e-6));

  // a Binomial(400, 1/2) sample should look normal
  std::mt19937_64 gen(5);
  std::binomial_distribution<std::uint32_t> binom(400, 0.5);
  std::vector<std::uint32_t> counts(50000);
  for (auto& c : counts) c = binom(gen);
  CHECK(ks_distance_lattice(counts, 200, 100) < 0.02);

  // a well separated two-point sample does not
  const std::vector<std::uint32_t> split{0, 0, 0, 10, 10, 10};
  CHECK(ks_distance_lattice(split, 5, 25) == doctest::Approx(0.5 - standard_normal_cdf(-0.9)));
}

TEST_CASE("CLT report structure") {
  const auto chain = renewal_chain({Pmf::point(1), Pmf::uniform(1, 3), 300});
  const std::vector<std::vector<std::size_t>> windows{prefix(30), prefix(100), prefix(300)};
  const auto noise = NoiseParams::uniform(300, 0.1, 0.1);
  const auto report = clt_report(chain, noise, windows, 20000, 3, 2);
  REQUIRE(report.rows.size() == 3);
  CHECK(report.seed == 3);
  const Kernel k = apply_bernoulli_noise(build_kernel(chain), noise);
  for (std::size_t w = 0; w < 3; ++w) {
    const auto& row = report.rows[w];
    const auto m = count_moments(k, windows[w]);
    CHECK(row.window_size == windows[w].size());
    CHECK(row.exact_mean == doctest::Approx(m.mean));
    CHECK(row.exact_variance == doctest::Approx(m.variance));
    CHECK(std::abs(row.empirical_mean - row.exact_mean) <= 4 * row.mean_se);
    CHECK(std::abs(row.empirical_variance - row.exact_variance) <= 4 * row.variance_se);
    CHECK_FALSE(row.degenerate_variance);
  }
  CHECK(report.variance_growth_exponent > 0.5);
  CHECK(report.variance_growth_exponent < 1.5);

  const auto again = clt_report(chain, noise, windows, 20000, 3, 1);
  CHECK(again.rows[2].k4 == report.rows[2].k4);

  const std::vector<std::vector<std::size_t>> unordered{prefix(100), prefix(30)};
  CHECK_THROWS_AS(clt_report(chain, noise, unordered, 100, 3), Error);

  const auto det = deterministic(10);
  const std::vector<std::vector<std::size_t>> dw{prefix(5), prefix(10)};
  const auto flat = clt_report(det, std::nullopt, dw, 100, 0);
  CHECK(flat.degenerate_variance);
  CHECK(flat.rows[0].degenerate_variance);
  CHECK(std::isnan(flat.rows[0].k3));
}

TEST_CASE("operator norm diagnostic") {
  Kernel one{Matrix::Constant(1, 1, -0.75), {std::int64_t{1}}, KernelKind::Correlation};
  const auto est1 = operator_norm_estimate(one, 0.0);
  CHECK(est1.norms.back() == doctest::Approx(0.75).epsilon(1e-15));

  std::vector<double> stable_norms, raw_norms;
  for (std::int64_t t : {64, 128, 256}) {
    const Kernel k = build_kernel(renewal_chain({Pmf::point(1), Pmf::uniform(1, 2), t}));
    const auto est = operator_norm_estimate(k, 0.2);
    CHECK(est.decay_rate > 0.2);
    stable_norms.push_back(est.norms.back());
    raw_norms.push_back(operator_norm_estimate(k, 0.0).norms.back());
  }
  const auto [lo, hi] = std::minmax_element(stable_norms.begin(), stable_norms.end());
  CHECK((*hi - *lo) / *lo < 0.10);
  CHECK(raw_norms[2] > 1.5 * raw_norms[0]);

  const Kernel k = build_kernel(renewal_chain({Pmf::point(1), Pmf::uniform(1, 2), 64}));
  CHECK_THROWS_AS(operator_norm_estimate(k, 5.0), Error);
}

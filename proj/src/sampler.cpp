#include "dppchains/sampler.hpp"

#include "dppchains/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <iterator>
#include <map>
#include <thread>

namespace dppchains {

std::uint64_t child_seed(std::uint64_t master, std::uint64_t i) noexcept {
  std::uint64_t z = master + (i + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Configuration sample_trajectory(const LoopFreeChain& chain, Rng& rng) {
  Configuration visited;
  const auto& pi = chain.initial();
  double u = rng.uniform();
  std::size_t x = pi.size();
  for (std::size_t i = 0; i < pi.size(); ++i) {
    if (u < pi[i]) {
      x = i;
      break;
    }
    u -= pi[i];
  }
  while (x < chain.size()) {
    visited.push_back(x);
    u = rng.uniform();
    std::size_t next = chain.size();
    for (const auto& t : chain.row(x)) {
      if (u < t.prob) {
        next = t.to;
        break;
      }
      u -= t.prob;
    }
    x = next;
  }
  std::sort(visited.begin(), visited.end());
  return visited;
}

Configuration apply_noise(const Configuration& config, const NoiseParams& noise, Rng& rng) {
  const std::size_t n = noise.p.size();
  Configuration out;
  auto it = config.begin();
  for (std::size_t x = 0; x < n; ++x) {
    const bool present = it != config.end() && *it == x;
    if (present) ++it;
    const double u = rng.uniform();
    if (present ? (u >= noise.p[x]) : (u < noise.q[x])) out.push_back(x);
  }
  return out;
}

namespace {

template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body body) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (threads == 1) {
    body(std::size_t{0}, count);
    return;
  }
  std::vector<std::thread> workers;
  const std::size_t chunk = (count + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t lo = std::min(count, t * chunk);
    const std::size_t hi = std::min(count, lo + chunk);
    workers.emplace_back([=, &body] { body(lo, hi); });
  }
  for (auto& w : workers) w.join();
}

Configuration draw_replicate(const LoopFreeChain& chain, const std::optional<NoiseParams>& noise,
                             std::uint64_t seed, std::size_t i) {
  Rng rng(child_seed(seed, i));
  Configuration c = sample_trajectory(chain, rng);
  if (noise) c = apply_noise(c, *noise, rng);
  return c;
}

}  // namespace

SampleBatch sample_batch(const LoopFreeChain& chain, const std::optional<NoiseParams>& noise,
                         std::size_t samples, std::uint64_t seed, unsigned threads) {
  if (noise) noise->validate(chain.size());
  SampleBatch batch;
  batch.seed = seed;
  batch.configs.resize(samples);
  parallel_for(samples, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) batch.configs[i] = draw_replicate(chain, noise, seed, i);
  });
  return batch;
}

std::vector<std::vector<std::uint32_t>> sample_window_counts(
    const LoopFreeChain& chain, const std::optional<NoiseParams>& noise,
    std::span<const std::vector<std::size_t>> windows, std::size_t samples, std::uint64_t seed,
    unsigned threads) {
  if (noise) noise->validate(chain.size());
  std::vector<std::vector<char>> member;
  for (const auto& w : windows) {
    std::vector<char> m(chain.size(), 0);
    for (std::size_t x : normalize_subset(w, chain.size())) m[x] = 1;
    member.push_back(std::move(m));
  }
  std::vector<std::vector<std::uint32_t>> counts(windows.size(), std::vector<std::uint32_t>(samples, 0));
  parallel_for(samples, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const Configuration c = draw_replicate(chain, noise, seed, i);
      for (std::size_t w = 0; w < member.size(); ++w) {
        std::uint32_t k = 0;
        for (std::size_t x : c) k += static_cast<std::uint32_t>(member[w][x]);
        counts[w][i] = k;
      }
    }
  });
  return counts;
}

Estimate estimate_correlation(const SampleBatch& batch, std::span<const std::size_t> subset) {
  if (batch.configs.empty()) throw Error(ErrorCode::EmptyBatch, "cannot estimate from an empty batch");
  std::vector<std::size_t> y(subset.begin(), subset.end());
  std::sort(y.begin(), y.end());
  y.erase(std::unique(y.begin(), y.end()), y.end());
  std::size_t hits = 0;
  for (const auto& c : batch.configs)
    if (std::includes(c.begin(), c.end(), y.begin(), y.end())) ++hits;
  const double n = static_cast<double>(batch.configs.size());
  const double est = static_cast<double>(hits) / n;
  return {est, std::sqrt(est * (1.0 - est) / n)};
}

std::vector<WeightedConfiguration> enumerate_trajectories(const LoopFreeChain& chain) {
  const std::size_t n = chain.size();
  // Upper bound on distinct trajectories from each state.
  std::vector<double> paths(n, 0.0);
  const auto& order = chain.topological_order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    double count = chain.exit_probability(*it) > 0.0 ? 1.0 : 0.0;
    for (const auto& t : chain.row(*it)) count += paths[t.to];
    paths[*it] = count;
  }
  double total = chain.miss_probability() > 0.0 ? 1.0 : 0.0;
  for (std::size_t x = 0; x < n; ++x)
    if (chain.initial()[x] > 0.0) total += paths[x];
  if (total > kMaxEnumeratedPaths)
    throw Error(ErrorCode::TooManyPaths, "chain has up to " + std::to_string(total) +
                                             " trajectories, limit is " + std::to_string(kMaxEnumeratedPaths));

  std::map<Configuration, double> law;
  if (chain.miss_probability() > 0.0) law[{}] += chain.miss_probability();
  std::vector<std::size_t> path;
  auto walk = [&](auto&& self, std::size_t x, double prob) -> void {
    path.push_back(x);
    if (chain.exit_probability(x) > 0.0) {
      Configuration c = path;
      std::sort(c.begin(), c.end());
      law[c] += prob * chain.exit_probability(x);
    }
    for (const auto& t : chain.row(x)) self(self, t.to, prob * t.prob);
    path.pop_back();
  };
  for (std::size_t x = 0; x < n; ++x)
    if (chain.initial()[x] > 0.0) walk(walk, x, chain.initial()[x]);

  std::vector<WeightedConfiguration> out;
  out.reserve(law.size());
  for (auto& [c, p] : law) out.push_back({c, p});
  return out;
}

namespace {

std::uint32_t mask_of(std::span<const std::size_t> subset) {
  std::uint32_t m = 0;
  for (std::size_t x : subset) m |= std::uint32_t{1} << x;
  return m;
}

}  // namespace

double SubsetDistribution::correlation(std::span<const std::size_t> subset) const {
  const std::uint32_t y = mask_of(normalize_subset(subset, n));
  double sum = 0.0;
  for (std::uint32_t m = 0; m < prob.size(); ++m)
    if ((m & y) == y) sum += prob[m];
  return sum;
}

std::vector<double> SubsetDistribution::count_pmf(std::span<const std::size_t> window) const {
  const auto w = normalize_subset(window, n);
  const std::uint32_t y = mask_of(w);
  std::vector<double> pmf(w.size() + 1, 0.0);
  for (std::uint32_t m = 0; m < prob.size(); ++m)
    pmf[static_cast<std::size_t>(std::popcount(m & y))] += prob[m];
  return pmf;
}

SubsetDistribution to_subset_distribution(std::span<const WeightedConfiguration> dist, std::size_t n) {
  if (n > kMaxSubsetWindow)
    throw Error(ErrorCode::WindowTooLarge, std::to_string(n) + " sites exceed the subset-enumeration limit of " +
                                               std::to_string(kMaxSubsetWindow));
  SubsetDistribution out;
  out.n = n;
  out.prob.assign(std::size_t{1} << n, 0.0);
  for (const auto& wc : dist) out.prob[mask_of(wc.config)] += wc.prob;
  return out;
}

SubsetDistribution enumerate_noisy(const LoopFreeChain& chain, const NoiseParams& noise) {
  const std::size_t n = chain.size();
  if (n > kMaxSubsetWindow)
    throw Error(ErrorCode::WindowTooLarge, std::to_string(n) + " sites exceed the subset-enumeration limit of " +
                                               std::to_string(kMaxSubsetWindow));
  noise.validate(n);
  SubsetDistribution d = to_subset_distribution(enumerate_trajectories(chain), n);
  for (std::size_t x = 0; x < n; ++x) {
    const std::uint32_t bit = std::uint32_t{1} << x;
    const double p = noise.p[x];
    const double q = noise.q[x];
    for (std::uint32_t m = 0; m < d.prob.size(); ++m) {
      if (m & bit) continue;
      const double absent = d.prob[m];
      const double present = d.prob[m | bit];
      d.prob[m] = absent * (1.0 - q) + present * p;
      d.prob[m | bit] = absent * q + present * (1.0 - p);
    }
  }
  return d;
}

double exact_correlation(std::span<const WeightedConfiguration> dist, std::span<const std::size_t> subset) {
  std::vector<std::size_t> y(subset.begin(), subset.end());
  std::sort(y.begin(), y.end());
  double sum = 0.0;
  for (const auto& wc : dist)
    if (std::includes(wc.config.begin(), wc.config.end(), y.begin(), y.end())) sum += wc.prob;
  return sum;
}

double exact_intersection_probability(std::span<const WeightedConfiguration> dist,
                                      std::span<const std::size_t> window,
                                      std::span<const std::size_t> exact) {
  std::vector<std::size_t> w(window.begin(), window.end());
  std::vector<std::size_t> e(exact.begin(), exact.end());
  std::sort(w.begin(), w.end());
  std::sort(e.begin(), e.end());
  double sum = 0.0;
  std::vector<std::size_t> cut;
  for (const auto& wc : dist) {
    cut.clear();
    std::set_intersection(wc.config.begin(), wc.config.end(), w.begin(), w.end(), std::back_inserter(cut));
    if (cut == e) sum += wc.prob;
  }
  return sum;
}

EntranceLaw exact_entrance_law(const LoopFreeChain& chain, std::span<const WeightedConfiguration> dist,
                               std::span<const std::size_t> window) {
  EntranceLaw law;
  law.window = normalize_subset(window, chain.size());
  law.pi_tilde.assign(law.window.size(), 0.0);
  double total = 0.0;
  for (const auto& wc : dist) {
    std::size_t first = chain.size();
    std::size_t first_pos = 0;
    for (std::size_t k = 0; k < law.window.size(); ++k) {
      const std::size_t y = law.window[k];
      if (!std::binary_search(wc.config.begin(), wc.config.end(), y)) continue;
      if (first == chain.size() || chain.rank(y) < chain.rank(first)) {
        first = y;
        first_pos = k;
      }
    }
    if (first < chain.size()) {
      law.pi_tilde[first_pos] += wc.prob;
      total += wc.prob;
    }
  }
  law.pi_zero = 1.0 - total;
  return law;
}

std::vector<double> exact_count_pmf(std::span<const WeightedConfiguration> dist,
                                    std::span<const std::size_t> window) {
  std::vector<std::size_t> w(window.begin(), window.end());
  std::sort(w.begin(), w.end());
  w.erase(std::unique(w.begin(), w.end()), w.end());
  std::vector<double> pmf(w.size() + 1, 0.0);
  std::vector<std::size_t> cut;
  for (const auto& wc : dist) {
    cut.clear();
    std::set_intersection(wc.config.begin(), wc.config.end(), w.begin(), w.end(), std::back_inserter(cut));
    pmf[cut.size()] += wc.prob;
  }
  return pmf;
}

}  // namespace dppchains

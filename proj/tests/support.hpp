#pragma once

// Shared helpers for the unit and acceptance tests: random loop-free chains and
// oracles that do not go through the library's own algorithms.

#include "dppchains/chain.hpp"
#include "dppchains/linalg.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace testing_support {

using dppchains::ChainSpec;
using dppchains::LoopFreeChain;
using dppchains::Matrix;

inline std::string data_path(const std::string& name) { return std::string(DPPCHAINS_TEST_DATA) + "/" + name; }

/// Random loop-free chain on n states. States are labelled 1..n but the hidden
/// topological order is a random permutation, so index order is not a
/// topological order in general.
inline ChainSpec random_chain_spec(std::mt19937_64& gen, std::size_t n) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), gen);
  const double density = 0.2 + 0.8 * unit(gen);

  ChainSpec spec;
  for (std::size_t i = 0; i < n; ++i) spec.states.emplace_back(static_cast<std::int64_t>(i + 1));

  for (std::size_t a = 0; a < n; ++a) {
    std::vector<std::size_t> targets;
    for (std::size_t b = a + 1; b < n; ++b)
      if (unit(gen) < density) targets.push_back(perm[b]);
    if (targets.empty()) continue;
    // Row mass in [0.3, 1]; sometimes exactly stochastic.
    const double mass = unit(gen) < 0.3 ? 1.0 : 0.3 + 0.7 * unit(gen);
    std::vector<double> w(targets.size());
    for (auto& x : w) x = 0.05 + unit(gen);
    const double sum = std::accumulate(w.begin(), w.end(), 0.0);
    for (std::size_t k = 0; k < targets.size(); ++k)
      spec.transitions.push_back({perm[a], targets[k], mass * w[k] / sum});
  }

  spec.pi.assign(n, 0.0);
  const double pi_mass = unit(gen) < 0.3 ? 1.0 : 0.5 + 0.5 * unit(gen);
  std::vector<double> w(n);
  for (auto& x : w) x = unit(gen) < 0.5 ? unit(gen) : 0.0;
  w[perm[0]] += 0.1;
  const double sum = std::accumulate(w.begin(), w.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) spec.pi[i] = pi_mass * w[i] / sum;
  return spec;
}

inline Matrix dense_transitions(const ChainSpec& spec) {
  const auto n = static_cast<Eigen::Index>(spec.states.size());
  Matrix p = Matrix::Zero(n, n);
  for (const auto& e : spec.transitions) p(e.from, e.to) += e.prob;
  return p;
}

/// Q = P + P² + ⋯ by explicit matrix powers; P is nilpotent on a loop-free chain.
inline Matrix series_hit_matrix(const ChainSpec& spec) {
  const Matrix p = dense_transitions(spec);
  Matrix q = Matrix::Zero(p.rows(), p.cols());
  Matrix power = p;
  for (Eigen::Index k = 0; k < p.rows() && power.cwiseAbs().maxCoeff() > 0; ++k) {
    q += power;
    power = power * p;
  }
  return q;
}

/// K_xy = π_x + (πQ)_x − Q_yx, assembled from the series Q.
inline Matrix dense_kernel_oracle(const ChainSpec& spec) {
  const Matrix q = series_hit_matrix(spec);
  const auto n = q.rows();
  Eigen::VectorXd pi(n);
  for (Eigen::Index i = 0; i < n; ++i) pi(i) = spec.pi[i];
  const Eigen::VectorXd rho = pi + q.transpose() * pi;
  Matrix k(n, n);
  for (Eigen::Index x = 0; x < n; ++x)
    for (Eigen::Index y = 0; y < n; ++y) k(x, y) = rho(x) - q(y, x);
  return k;
}

/// Law of the visited set as a map bitmask → probability, by depth-first walk
/// over all trajectories (including the empty trajectory for the missing mass).
inline std::map<std::uint32_t, double> path_enumeration(const ChainSpec& spec) {
  const std::size_t n = spec.states.size();
  std::vector<std::vector<std::pair<std::size_t, double>>> out(n);
  std::vector<double> exit(n, 1.0);
  for (const auto& e : spec.transitions) {
    out[e.from].emplace_back(e.to, e.prob);
    exit[e.from] -= e.prob;
  }
  std::map<std::uint32_t, double> law;
  std::function<void(std::size_t, std::uint32_t, double)> walk = [&](std::size_t s, std::uint32_t mask, double prob) {
    mask |= 1u << s;
    if (exit[s] > 1e-15) law[mask] += prob * exit[s];
    for (const auto& [t, p] : out[s]) walk(t, mask, prob * p);
  };
  double miss = 1.0;
  for (std::size_t s = 0; s < n; ++s) {
    if (spec.pi[s] > 0) walk(s, 0, spec.pi[s]);
    miss -= spec.pi[s];
  }
  if (miss > 1e-15) law[0] += miss;
  return law;
}

inline std::uint32_t mask_of(const std::vector<std::size_t>& subset) {
  std::uint32_t m = 0;
  for (auto s : subset) m |= 1u << s;
  return m;
}

inline std::vector<std::size_t> members(std::uint32_t mask) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < 32; ++i)
    if (mask >> i & 1u) out.push_back(i);
  return out;
}

/// P(X ⊇ Y) under a bitmask law.
inline double containment(const std::map<std::uint32_t, double>& law, std::uint32_t y) {
  double s = 0.0;
  for (const auto& [m, p] : law)
    if ((m & y) == y) s += p;
  return s;
}

/// P(X ∩ W = E) under a bitmask law.
inline double trace_probability(const std::map<std::uint32_t, double>& law, std::uint32_t w, std::uint32_t e) {
  double s = 0.0;
  for (const auto& [m, p] : law)
    if ((m & w) == e) s += p;
  return s;
}

inline dppchains::ChainSpec diamond_spec() {
  ChainSpec spec;
  spec.states = {std::int64_t{1}, std::int64_t{2}, std::int64_t{3}};
  spec.pi = {1.0, 0.0, 0.0};
  spec.transitions = {{0, 1, 0.5}, {0, 2, 0.5}, {1, 2, 1.0}};
  return spec;
}

}  // namespace testing_support

#include "dppchains/chain.hpp"

#include "dppchains/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>

namespace dppchains {

std::string label_text(const StateLabel& label) {
  if (const auto* i = std::get_if<std::int64_t>(&label)) return std::to_string(*i);
  return std::get<std::string>(label);
}

namespace {

constexpr double kRoundingSlack = 1e-14;

bool is_probability(double p) { return std::isfinite(p) && p >= 0.0 && p <= 1.0; }

std::string join_path(const std::vector<StateLabel>& labels,
                      const std::vector<std::size_t>& path) {
  std::string out;
  for (std::size_t k = 0; k < path.size(); ++k) {
    if (k > 0) out += "→";
    out += label_text(labels[path[k]]);
  }
  return out;
}

}  // namespace

std::vector<std::size_t> validate_loop_free(const ChainSpec& spec) {
  const std::size_t n = spec.states.size();
  if (spec.pi.size() != n)
    throw Error(ErrorCode::LengthMismatch, "initial distribution has " +
                                               std::to_string(spec.pi.size()) +
                                               " entries for " + std::to_string(n) + " states");
  double pi_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_probability(spec.pi[i]))
      throw Error(ErrorCode::InvalidProbability,
                  "pi[" + label_text(spec.states[i]) + "] = " + std::to_string(spec.pi[i]));
    pi_sum += spec.pi[i];
  }
  if (pi_sum > 1.0 + kProbabilityTolerance)
    throw Error(ErrorCode::InvalidProbability, "initial distribution sums to " + std::to_string(pi_sum));

  std::vector<double> row_sum(n, 0.0);
  std::vector<std::vector<std::size_t>> succ(n);
  std::vector<std::vector<std::size_t>> pred(n);
  for (const auto& e : spec.transitions) {
    if (e.from >= n || e.to >= n) throw Error(ErrorCode::UnknownState, "transition endpoint out of range");
    if (!is_probability(e.prob))
      throw Error(ErrorCode::InvalidProbability, "P(" + label_text(spec.states[e.from]) + ", " +
                                                     label_text(spec.states[e.to]) +
                                                     ") = " + std::to_string(e.prob));
    row_sum[e.from] += e.prob;
    if (e.prob > 0.0) {
      succ[e.from].push_back(e.to);
      pred[e.to].push_back(e.from);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (row_sum[i] > 1.0 + kProbabilityTolerance)
      throw Error(ErrorCode::InvalidProbability,
                  "row " + label_text(spec.states[i]) + " sums to " + std::to_string(row_sum[i]));
  }

  std::vector<std::size_t> indegree(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j : succ[i]) ++indegree[j];

  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < n; ++i)
    if (indegree[i] == 0) ready.push(i);
  std::vector<std::size_t> order;
  order.reserve(n);
  while (!ready.empty()) {
    const std::size_t x = ready.top();
    ready.pop();
    order.push_back(x);
    for (std::size_t y : succ[x])
      if (--indegree[y] == 0) ready.push(y);
  }
  if (order.size() == n) return order;

  // Every leftover state has a leftover predecessor, so walking predecessors
  // must revisit a state.
  std::size_t start = 0;
  while (indegree[start] == 0) ++start;
  std::vector<std::size_t> seen_at(n, n);
  std::vector<std::size_t> walk;
  std::size_t x = start;
  while (seen_at[x] == n) {
    seen_at[x] = walk.size();
    walk.push_back(x);
    x = *std::find_if(pred[x].begin(), pred[x].end(),
                      [&](std::size_t p) { return indegree[p] > 0; });
  }
  std::vector<std::size_t> cycle(walk.begin() + static_cast<std::ptrdiff_t>(seen_at[x]), walk.end());
  std::reverse(cycle.begin(), cycle.end());
  std::rotate(cycle.begin(), std::min_element(cycle.begin(), cycle.end()), cycle.end());
  cycle.push_back(cycle.front());
  const std::string witness = join_path(spec.states, cycle);
  throw Error(ErrorCode::CycleDetected, "transition support has a cycle " + witness, witness);
}

LoopFreeChain LoopFreeChain::from_spec(const ChainSpec& spec) {
  LoopFreeChain chain;
  chain.order_ = validate_loop_free(spec);
  const std::size_t n = spec.states.size();
  chain.labels_ = spec.states;
  for (std::size_t i = 0; i < n; ++i) {
    if (!chain.lookup_.emplace(label_text(spec.states[i]), i).second)
      throw Error(ErrorCode::MalformedInput, "duplicate state label " + label_text(spec.states[i]));
  }
  chain.rank_.assign(n, 0);
  for (std::size_t k = 0; k < n; ++k) chain.rank_[chain.order_[k]] = k;

  chain.rows_.assign(n, {});
  for (const auto& e : spec.transitions) {
    if (e.prob <= 0.0) continue;
    auto& row = chain.rows_[e.from];
    auto it = std::find_if(row.begin(), row.end(), [&](const Transition& t) { return t.to == e.to; });
    if (it != row.end())
      throw Error(ErrorCode::MalformedInput, "duplicate transition " + label_text(spec.states[e.from]) +
                                                 " -> " + label_text(spec.states[e.to]));
    row.push_back({e.to, e.prob});
  }
  chain.exit_.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    auto& row = chain.rows_[i];
    std::sort(row.begin(), row.end(), [](const Transition& a, const Transition& b) { return a.to < b.to; });
    double sum = 0.0;
    for (const auto& t : row) sum += t.prob;
    if (sum > 1.0) {
      for (auto& t : row) t.prob /= sum;
      sum = 1.0;
    }
    // Rows that sum to one up to rounding have no exit.
    chain.exit_[i] = sum > 1.0 - kRoundingSlack ? 0.0 : 1.0 - sum;
  }
  chain.pi_ = spec.pi;
  double pi_sum = 0.0;
  for (double p : chain.pi_) pi_sum += p;
  if (pi_sum > 1.0) {
    for (double& p : chain.pi_) p /= pi_sum;
    pi_sum = 1.0;
  }
  chain.miss_ = pi_sum > 1.0 - kRoundingSlack ? 0.0 : 1.0 - pi_sum;
  return chain;
}

double LoopFreeChain::transition(std::size_t from, std::size_t to) const noexcept {
  for (const auto& t : rows_[from])
    if (t.to == to) return t.prob;
  return 0.0;
}

std::size_t LoopFreeChain::index_of(const StateLabel& label) const {
  auto it = lookup_.find(label_text(label));
  if (it == lookup_.end()) throw Error(ErrorCode::UnknownState, "no state " + label_text(label));
  return it->second;
}

std::vector<std::size_t> LoopFreeChain::indices_of(std::span<const StateLabel> labels) const {
  std::vector<std::size_t> out;
  out.reserve(labels.size());
  for (const auto& l : labels) out.push_back(index_of(l));
  return out;
}

ChainSpec LoopFreeChain::to_spec() const {
  ChainSpec spec;
  spec.states = labels_;
  spec.pi = pi_;
  for (std::size_t i = 0; i < size(); ++i)
    for (const auto& t : rows_[i]) spec.transitions.push_back({i, t.to, t.prob});
  return spec;
}

std::vector<std::size_t> normalize_subset(std::span<const std::size_t> subset, std::size_t n) {
  std::vector<std::size_t> out(subset.begin(), subset.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (!out.empty() && out.back() >= n)
    throw Error(ErrorCode::UnknownState, "state index " + std::to_string(out.back()) + " outside window");
  return out;
}

HitMatrix compute_hit_matrix(const LoopFreeChain& chain) {
  const auto n = static_cast<Eigen::Index>(chain.size());
  // Column x of qt is row x of Q: Q(x,·) = Σ_z P(x,z) (e_z + Q(z,·)).
  Matrix qt = Matrix::Zero(n, n);
  const auto& order = chain.topological_order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const auto x = static_cast<Eigen::Index>(*it);
    for (const auto& t : chain.row(*it)) {
      const auto z = static_cast<Eigen::Index>(t.to);
      qt.col(x) += t.prob * qt.col(z);
      qt(z, x) += t.prob;
    }
  }
  if (!qt.allFinite()) throw Error(ErrorCode::SingularSystem, "non-finite hit probabilities");
  return HitMatrix{qt.transpose()};
}

Vector hit_intensity(const LoopFreeChain& chain, const HitMatrix& hits) {
  const auto n = static_cast<Eigen::Index>(chain.size());
  Vector pi(n);
  for (Eigen::Index i = 0; i < n; ++i) pi(i) = chain.initial()[static_cast<std::size_t>(i)];
  return pi + hits.q.transpose() * pi;
}

void check_no_return(const LoopFreeChain& chain, const HitMatrix& hits,
                     std::span<const std::size_t> window) {
  const std::size_t n = chain.size();
  std::vector<char> inside(n, 0);
  for (std::size_t y : window) inside[y] = 1;
  for (std::size_t z = 0; z < n; ++z) {
    if (inside[z]) continue;
    const auto zi = static_cast<Eigen::Index>(z);
    auto from = std::find_if(window.begin(), window.end(), [&](std::size_t y) {
      return hits.q(static_cast<Eigen::Index>(y), zi) > 0.0;
    });
    if (from == window.end()) continue;
    auto back = std::find_if(window.begin(), window.end(), [&](std::size_t y) {
      return hits.q(zi, static_cast<Eigen::Index>(y)) > 0.0;
    });
    if (back == window.end()) continue;
    const std::string witness = join_path(chain.labels(), {*from, z, *back});
    throw Error(ErrorCode::ReturnToWindow, "trajectories can leave and re-enter the window: " + witness,
                witness);
  }
}

EntranceLaw entrance_law(const LoopFreeChain& chain, const HitMatrix& hits,
                         std::span<const std::size_t> window_in) {
  const std::size_t n = chain.size();
  EntranceLaw law;
  law.window = normalize_subset(window_in, n);
  check_no_return(chain, hits, law.window);

  const std::size_t m = law.window.size();
  std::vector<std::size_t> pos(n, m);
  for (std::size_t k = 0; k < m; ++k) pos[law.window[k]] = k;

  // absorb[z] = distribution of the first window state reached from z ∉ Y.
  std::vector<std::vector<double>> absorb(n);
  const auto& order = chain.topological_order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const std::size_t z = *it;
    if (pos[z] < m) continue;
    std::vector<double> h(m, 0.0);
    for (const auto& t : chain.row(z)) {
      if (pos[t.to] < m) {
        h[pos[t.to]] += t.prob;
      } else {
        for (std::size_t k = 0; k < m; ++k) h[k] += t.prob * absorb[t.to][k];
      }
    }
    absorb[z] = std::move(h);
  }

  law.pi_tilde.assign(m, 0.0);
  for (std::size_t x = 0; x < n; ++x) {
    const double p = chain.initial()[x];
    if (p == 0.0) continue;
    if (pos[x] < m) {
      law.pi_tilde[pos[x]] += p;
    } else {
      for (std::size_t k = 0; k < m; ++k) law.pi_tilde[k] += p * absorb[x][k];
    }
  }
  double total = 0.0;
  for (double p : law.pi_tilde) total += p;
  law.pi_zero = std::max(0.0, 1.0 - total);
  return law;
}

EntranceLaw entrance_law(const LoopFreeChain& chain, std::span<const std::size_t> window) {
  return entrance_law(chain, compute_hit_matrix(chain), window);
}

LoopFreeChain contract_to_window(const LoopFreeChain& chain, const HitMatrix& hits,
                                 std::span<const std::size_t> window) {
  const EntranceLaw law = entrance_law(chain, hits, window);
  const std::size_t m = law.window.size();
  std::vector<std::size_t> pos(chain.size(), m);
  for (std::size_t k = 0; k < m; ++k) pos[law.window[k]] = k;

  ChainSpec spec;
  for (std::size_t y : law.window) spec.states.push_back(chain.labels()[y]);
  spec.pi = law.pi_tilde;
  for (std::size_t k = 0; k < m; ++k)
    for (const auto& t : chain.row(law.window[k]))
      if (pos[t.to] < m) spec.transitions.push_back({k, pos[t.to], t.prob});
  return LoopFreeChain::from_spec(spec);
}

LoopFreeChain contract_to_window(const LoopFreeChain& chain, std::span<const std::size_t> window) {
  return contract_to_window(chain, compute_hit_matrix(chain), window);
}

}  // namespace dppchains

#include "dppchains/renewal.hpp"

#include "dppchains/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace dppchains {

double Pmf::at(std::int64_t n) const noexcept {
  const std::int64_t k = n - offset;
  if (k < 0 || k >= static_cast<std::int64_t>(probs.size())) return 0.0;
  return probs[static_cast<std::size_t>(k)];
}

double Pmf::total() const noexcept { return std::accumulate(probs.begin(), probs.end(), 0.0); }

double Pmf::mean() const noexcept {
  double m = 0.0;
  for (std::size_t k = 0; k < probs.size(); ++k) m += static_cast<double>(offset + static_cast<std::int64_t>(k)) * probs[k];
  return m;
}

void Pmf::validate() const {
  if (offset < 1) throw Error(ErrorCode::InvalidPmf, "support must start at a positive integer, got " + std::to_string(offset));
  for (double p : probs)
    if (!std::isfinite(p) || p < 0.0 || p > 1.0)
      throw Error(ErrorCode::InvalidPmf, "pmf entry " + std::to_string(p) + " outside [0,1]");
  const double t = total();
  if (t > 1.0 + kProbabilityTolerance) throw Error(ErrorCode::InvalidPmf, "pmf mass " + std::to_string(t) + " exceeds 1");
  if (!truncated && std::abs(t - 1.0) > kProbabilityTolerance)
    throw Error(ErrorCode::InvalidPmf, "pmf mass " + std::to_string(t) + " is not 1");
}

Pmf Pmf::uniform(std::int64_t lo, std::int64_t hi) {
  const auto n = static_cast<std::size_t>(hi - lo + 1);
  return {lo, std::vector<double>(n, 1.0 / static_cast<double>(n)), false};
}

LoopFreeChain renewal_chain(const RenewalSpec& spec) {
  spec.xi0.validate();
  spec.xi1.validate();
  if (spec.horizon < 1) throw Error(ErrorCode::InvalidSpec, "horizon must be positive");
  if (spec.horizon < std::max(spec.xi0.max_support(), spec.xi1.max_support()))
    throw Error(ErrorCode::InvalidSpec, "horizon " + std::to_string(spec.horizon) +
                                            " is below the largest support point");
  const auto t_max = static_cast<std::size_t>(spec.horizon);
  ChainSpec cs;
  cs.states.reserve(t_max);
  cs.pi.assign(t_max, 0.0);
  for (std::size_t i = 0; i < t_max; ++i) {
    const auto t = static_cast<std::int64_t>(i) + 1;
    cs.states.emplace_back(t);
    cs.pi[i] = spec.xi0.at(t);
    for (std::size_t k = 0; k < spec.xi1.probs.size(); ++k) {
      const double p = spec.xi1.probs[k];
      const std::int64_t j = t + spec.xi1.offset + static_cast<std::int64_t>(k);
      if (p > 0.0 && j <= spec.horizon) cs.transitions.push_back({i, static_cast<std::size_t>(j - 1), p});
    }
  }
  return LoopFreeChain::from_spec(cs);
}

std::vector<double> renewal_function(const Pmf& g, std::size_t n_max) {
  g.validate();
  std::vector<double> f(n_max, 0.0);
  for (std::size_t n = 1; n <= n_max; ++n) {
    double v = g.at(static_cast<std::int64_t>(n));
    for (std::size_t k = 0; k < g.probs.size(); ++k) {
      const auto step = static_cast<std::size_t>(g.offset) + k;
      if (step >= n) break;
      v += g.probs[k] * f[n - step - 1];
    }
    f[n - 1] = v;
  }
  return f;
}

LogLinearFit fit_log_linear(std::span<const double> x, std::span<const double> y, double floor) {
  std::vector<double> xs;
  std::vector<double> ls;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
    if (y[i] > floor) {
      xs.push_back(x[i]);
      ls.push_back(std::log(y[i]));
    }
  }
  if (xs.size() < 2) throw Error(ErrorCode::DegenerateFit, "fewer than two points above the floor");
  const std::size_t skip = std::min(xs.size() / 3, xs.size() - 2);
  const std::span<const double> fx(xs.begin() + static_cast<std::ptrdiff_t>(skip), xs.end());
  const std::span<const double> fl(ls.begin() + static_cast<std::ptrdiff_t>(skip), ls.end());
  const auto n = static_cast<double>(fx.size());
  const double mx = std::accumulate(fx.begin(), fx.end(), 0.0) / n;
  const double ml = std::accumulate(fl.begin(), fl.end(), 0.0) / n;
  double sxx = 0.0;
  double sxl = 0.0;
  double sll = 0.0;
  for (std::size_t i = 0; i < fx.size(); ++i) {
    sxx += (fx[i] - mx) * (fx[i] - mx);
    sxl += (fx[i] - mx) * (fl[i] - ml);
    sll += (fl[i] - ml) * (fl[i] - ml);
  }
  if (sxx == 0.0) throw Error(ErrorCode::DegenerateFit, "all fitted points share one abscissa");
  LogLinearFit fit;
  fit.slope = sxl / sxx;
  fit.intercept = ml - fit.slope * mx;
  fit.points = fx.size();
  double sse = 0.0;
  for (std::size_t i = 0; i < fx.size(); ++i) {
    const double r = fl[i] - (fit.intercept + fit.slope * fx[i]);
    fit.max_residual = std::max(fit.max_residual, std::abs(r));
    sse += r * r;
  }
  fit.unexplained_variance = sll > 0.0 ? sse / sll : 0.0;
  return fit;
}

RenewalRateFit renewal_rate_fit(const Pmf& g, std::span<const double> f) {
  g.validate();
  const Periodicity per = is_aperiodic(g);
  if (!per.aperiodic)
    throw Error(ErrorCode::PeriodicInput, "increment law has period " + std::to_string(per.period));
  const double limit = 1.0 / g.mean();
  std::vector<double> n(f.size());
  std::vector<double> dev(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    n[i] = static_cast<double>(i + 1);
    dev[i] = std::abs(f[i] - limit);
  }
  RenewalRateFit out;
  if (std::none_of(dev.begin(), dev.end(), [](double d) { return d > kDeviationFloor; })) {
    out.converged_exactly = true;
    return out;
  }
  const LogLinearFit fit = fit_log_linear(n, dev, kDeviationFloor);
  out.log_c1 = fit.intercept;
  out.c2 = -fit.slope;
  out.max_residual = fit.max_residual;
  out.unexplained_variance = fit.unexplained_variance;
  out.points = fit.points;
  return out;
}

Periodicity is_aperiodic(const Pmf& g) {
  std::int64_t period = 0;
  for (std::size_t k = 0; k < g.probs.size(); ++k)
    if (g.probs[k] > 0.0) period = std::gcd(period, g.offset + static_cast<std::int64_t>(k));
  if (period == 0) throw Error(ErrorCode::InvalidPmf, "pmf has empty support");
  return {period == 1, period};
}

ClassECertificate class_E_check(const DeclaredTail& tail, double r, std::int64_t n0) {
  if (!(r > 0.0 && r < 1.0)) throw Error(ErrorCode::InvalidRatio, "ratio must lie in (0,1), got " + std::to_string(r));
  n0 = std::max<std::int64_t>(n0, 1);
  if (std::holds_alternative<Pmf>(tail)) return {true, std::nullopt};  // zero tail
  if (const auto* geo = std::get_if<GeometricTail>(&tail)) {
    if (geo->scale <= 0.0) return {true, std::nullopt};
    // scale·(ratio/r)^n ≤ 1 for all n ≥ n0
    const double log_gap = std::log(geo->ratio) - std::log(r);
    const double log_scale = std::log(geo->scale);
    if (log_gap < 0.0) {
      if (log_scale + log_gap * static_cast<double>(n0) <= 0.0) return {true, std::nullopt};
      return {false, n0};
    }
    if (log_gap == 0.0) return log_scale <= 0.0 ? ClassECertificate{true, std::nullopt} : ClassECertificate{false, n0};
    const auto first = static_cast<std::int64_t>(std::floor(-log_scale / log_gap)) + 1;
    return {false, std::max(n0, first)};
  }
  const auto& poly = std::get<PolynomialTail>(tail);
  if (poly.scale <= 0.0) return {true, std::nullopt};
  auto exceeds = [&](std::int64_t n) {
    const double dn = static_cast<double>(n);
    return std::log(poly.scale) - poly.power * std::log(dn) > dn * std::log(r);
  };
  std::int64_t n = n0;
  while (!exceeds(n)) n *= 2;
  return {false, n};
}

double SemiMarkovSpec::driving(std::size_t from, std::size_t to) const {
  double p = 0.0;
  for (const auto& e : kernel)
    if (e.from == from && e.to == to) p += e.passage.total();
  return p;
}

void SemiMarkovSpec::validate() const {
  if (states.empty()) throw Error(ErrorCode::InvalidSpec, "no driving states");
  if (std::set<std::string>(states.begin(), states.end()).size() != states.size())
    throw Error(ErrorCode::InvalidSpec, "duplicate driving state");
  if (horizon < 1) throw Error(ErrorCode::InvalidSpec, "horizon must be positive");
  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::vector<double> row(states.size(), 0.0);
  for (const auto& e : kernel) {
    if (e.from >= states.size() || e.to >= states.size()) throw Error(ErrorCode::InvalidSpec, "kernel entry names an unknown state");
    if (!seen.emplace(e.from, e.to).second)
      throw Error(ErrorCode::InvalidSpec, "duplicate kernel entry " + states[e.from] + " -> " + states[e.to]);
    Pmf p = e.passage;
    p.truncated = true;  // P_{s1 s2}(t) carries mass P_{s1 s2}
    p.validate();
    row[e.from] += p.total();
  }
  for (std::size_t s = 0; s < states.size(); ++s)
    if (std::abs(row[s] - 1.0) > kProbabilityTolerance)
      throw Error(ErrorCode::InvalidSpec, "driving row " + states[s] + " sums to " + std::to_string(row[s]));
  double init = 0.0;
  for (const auto& e : initial) {
    if (e.state >= states.size()) throw Error(ErrorCode::InvalidSpec, "initial entry names an unknown state");
    Pmf p = e.arrival;
    p.truncated = true;
    p.validate();
    init += p.total();
  }
  if (init > 1.0 + kProbabilityTolerance) throw Error(ErrorCode::InvalidSpec, "initial mass " + std::to_string(init) + " exceeds 1");
}

std::string semi_markov_label(const std::string& s, std::int64_t t) { return s + "@" + std::to_string(t); }

std::size_t semi_markov_index(const SemiMarkovSpec& spec, std::size_t s, std::int64_t t) {
  return static_cast<std::size_t>(t - 1) * spec.states.size() + s;
}

LoopFreeChain semi_markov_chain(const SemiMarkovSpec& spec) {
  spec.validate();
  const std::size_t ns = spec.states.size();
  ChainSpec cs;
  cs.pi.assign(ns * static_cast<std::size_t>(spec.horizon), 0.0);
  for (std::int64_t t = 1; t <= spec.horizon; ++t)
    for (std::size_t s = 0; s < ns; ++s) cs.states.emplace_back(semi_markov_label(spec.states[s], t));
  for (const auto& e : spec.initial)
    for (std::int64_t t = 1; t <= spec.horizon; ++t) cs.pi[semi_markov_index(spec, e.state, t)] += e.arrival.at(t);
  for (std::int64_t t1 = 1; t1 <= spec.horizon; ++t1) {
    for (const auto& e : spec.kernel) {
      for (std::size_t k = 0; k < e.passage.probs.size(); ++k) {
        const double p = e.passage.probs[k];
        const std::int64_t t2 = t1 + e.passage.offset + static_cast<std::int64_t>(k);
        if (p > 0.0 && t2 <= spec.horizon)
          cs.transitions.push_back({semi_markov_index(spec, e.from, t1), semi_markov_index(spec, e.to, t2), p});
      }
    }
  }
  return LoopFreeChain::from_spec(cs);
}

Pmf first_passage_distribution(const SemiMarkovSpec& spec, std::size_t from, std::size_t to, std::int64_t t_max) {
  spec.validate();
  if (from >= spec.states.size() || to >= spec.states.size())
    throw Error(ErrorCode::InvalidSpec, "first passage between unknown states");
  if (t_max < 1) throw Error(ErrorCode::InvalidSpec, "t_max must be positive");
  const std::size_t ns = spec.states.size();
  const auto horizon = static_cast<std::size_t>(t_max);
  // alive[t·ns + u]: at u at elapsed time t without having reached `to`.
  std::vector<double> alive((horizon + 1) * ns, 0.0);
  alive[from] = 1.0;
  Pmf out{1, std::vector<double>(horizon, 0.0), true};
  for (std::size_t t1 = 0; t1 < horizon; ++t1) {
    for (std::size_t u = 0; u < ns; ++u) {
      const double mass = alive[t1 * ns + u];
      if (mass == 0.0) continue;
      for (const auto& e : spec.kernel) {
        if (e.from != u) continue;
        for (std::size_t k = 0; k < e.passage.probs.size(); ++k) {
          const std::size_t t2 = t1 + static_cast<std::size_t>(e.passage.offset) + k;
          if (t2 > horizon) break;
          const double p = mass * e.passage.probs[k];
          if (e.to == to) {
            out.probs[t2 - 1] += p;
          } else {
            alive[t2 * ns + e.to] += p;
          }
        }
      }
    }
  }
  return out;
}

bool driving_irreducible(const SemiMarkovSpec& spec) {
  const std::size_t ns = spec.states.size();
  if (ns == 0) return false;
  auto reaches_all = [&](bool forward) {
    std::vector<char> seen(ns, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (const auto& e : spec.kernel) {
        if (e.passage.total() <= 0.0) continue;
        const std::size_t a = forward ? e.from : e.to;
        const std::size_t b = forward ? e.to : e.from;
        if (a == u && !seen[b]) {
          seen[b] = 1;
          stack.push_back(b);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
  };
  return reaches_all(true) && reaches_all(false);
}

HypothesisReport check_bounded_kernel_hypotheses(const SemiMarkovSpec& spec, AperiodicityRule rule,
                                                 std::int64_t t_max) {
  spec.validate();
  HypothesisReport report;
  report.irreducible = driving_irreducible(spec);
  report.finite_support = true;
  report.aperiodic = true;
  if (rule == AperiodicityRule::AllPassageTimes) {
    for (const auto& e : spec.kernel) {
      if (e.passage.total() <= 0.0) continue;
      if (!is_aperiodic(e.passage).aperiodic) {
        report.aperiodic = false;
        if (report.failure.empty())
          report.failure = "passage time " + spec.states[e.from] + " -> " + spec.states[e.to] + " is periodic";
      }
    }
  } else {
    for (std::size_t s = 0; s < spec.states.size(); ++s) {
      const Pmf ret = first_passage_distribution(spec, s, s, t_max);
      if (ret.total() <= 0.0 || !is_aperiodic(ret).aperiodic) {
        report.aperiodic = false;
        if (report.failure.empty()) report.failure = "first return time to " + spec.states[s] + " is periodic";
      }
    }
  }
  if (!report.irreducible) report.failure = "driving chain is not irreducible";
  return report;
}

LogLinearFit passage_tail_fit(const Pmf& passage, double hit_mass, double floor) {
  std::vector<double> t;
  std::vector<double> tail;
  double cum = 0.0;
  for (std::int64_t n = 1; n <= passage.max_support(); ++n) {
    cum += passage.at(n);
    t.push_back(static_cast<double>(n));
    tail.push_back(hit_mass - cum);
  }
  return fit_log_linear(t, tail, floor);
}

}  // namespace dppchains

#include "dppchains/cli.hpp"

#include "dppchains/chain.hpp"
#include "dppchains/error.hpp"
#include "dppchains/io.hpp"
#include "dppchains/kernel.hpp"
#include "dppchains/renewal.hpp"
#include "dppchains/sampler.hpp"
#include "dppchains/stats.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

namespace dppchains::cli {

namespace {

using io::Json;

/// Everything a subcommand needs; echoed into each output header.
struct RunConfig {
  std::string command;
  std::string input;
  std::string output;
  std::string kernel_input;
  std::uint64_t seed = 0;
  bool seed_given = false;
  bool strict = false;
  std::size_t samples = 1000;
  double tolerance = 1e-10;
  double gap_threshold = kDefaultGapThreshold;
  std::string format = "json";
  std::string set;
  std::string window;
  std::string windows;
  std::string p;
  std::string q;
  std::size_t nmax = 50;
  std::string from;
  std::string to;
  std::int64_t tmax = 0;
};

class IdentityFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

unsigned worker_threads() {
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("DPPCHAINS_THREADS")) {
    unsigned cap = 0;
    const std::string_view s(env);
    if (std::from_chars(s.data(), s.data() + s.size(), cap).ec == std::errc{} && cap > 0)
      threads = std::min(threads, cap);
  }
  return threads;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, sep))
    if (!cur.empty()) out.push_back(cur);
  return out;
}

std::optional<std::int64_t> parse_int(const std::string& s) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

/// Comma-separated labels; integer ranges may be written "a..b".
std::vector<StateLabel> parse_labels(const std::string& text) {
  std::vector<StateLabel> out;
  for (const auto& tok : split(text, ',')) {
    if (const auto dots = tok.find(".."); dots != std::string::npos) {
      const auto lo = parse_int(tok.substr(0, dots));
      const auto hi = parse_int(tok.substr(dots + 2));
      if (!lo || !hi || *hi < *lo) throw Error(ErrorCode::MalformedInput, "bad range " + tok);
      for (std::int64_t v = *lo; v <= *hi; ++v) out.emplace_back(v);
    } else if (const auto v = parse_int(tok)) {
      out.emplace_back(*v);
    } else {
      out.emplace_back(tok);
    }
  }
  return out;
}

std::vector<double> parse_numbers(const std::string& text, std::size_t n, const char* what) {
  std::vector<double> vals;
  for (const auto& tok : split(text, ',')) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
      throw Error(ErrorCode::MalformedInput, std::string("bad number in ") + what + ": " + tok);
    vals.push_back(v);
  }
  if (vals.size() == 1) return std::vector<double>(n, vals[0]);
  if (vals.size() != n)
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + " needs 1 or " + std::to_string(n) + " values");
  return vals;
}

std::optional<NoiseParams> parse_noise(const RunConfig& cfg, std::size_t n) {
  if (cfg.p.empty() && cfg.q.empty()) return std::nullopt;
  NoiseParams noise;
  noise.p = cfg.p.empty() ? std::vector<double>(n, 0.0) : parse_numbers(cfg.p, n, "--p");
  noise.q = cfg.q.empty() ? std::vector<double>(n, 0.0) : parse_numbers(cfg.q, n, "--q");
  noise.validate(n);
  return noise;
}

Json labels_json(const std::vector<StateLabel>& labels, std::span<const std::size_t> idx) {
  Json arr = Json::array();
  for (std::size_t i : idx) arr.push_back(io::label_to_json(labels[i]));
  return arr;
}

Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

class Session {
 public:
  Session(const RunConfig& cfg, std::ostream& out) : cfg_(cfg), out_(out) {}

  int dispatch();

 private:
  const RunConfig& cfg_;
  std::ostream& out_;
  std::string input_text_;
  Json input_;

  void load_input() {
    input_text_ = io::read_file(cfg_.input);
    try {
      input_ = Json::parse(input_text_);
    } catch (const Json::parse_error& e) {
      throw Error(ErrorCode::MalformedInput, cfg_.input + ": " + e.what());
    }
  }

  LoopFreeChain chain() const { return io::load_chain(input_); }

  Json header() const {
    Json h{{"command", cfg_.command},
           {"seed", cfg_.seed},
           {"samples", cfg_.samples},
           {"tolerance", cfg_.tolerance},
           {"gap_threshold", cfg_.gap_threshold},
           {"input_hash", io::hex64(io::fnv1a64(input_text_))}};
    if (!cfg_.kernel_input.empty()) h["kernel_hash"] = io::hex64(io::fnv1a64(io::read_file(cfg_.kernel_input)));
    if (!cfg_.p.empty()) h["p"] = cfg_.p;
    if (!cfg_.q.empty()) h["q"] = cfg_.q;
    if (cfg_.command == "renewalfn") h["nmax"] = cfg_.nmax;
    if (cfg_.command == "firstpassage") h["tmax"] = cfg_.tmax;
    return h;
  }

  void emit(const std::string& text) {
    if (cfg_.output.empty()) {
      out_ << text;
    } else {
      io::write_file_atomic(cfg_.output, text);
    }
  }
  void emit_json(Json body) {
    body["header"] = header();
    emit(io::dump(body) + "\n");
  }
  void emit_csv(const std::vector<std::string>& columns, const std::vector<std::vector<double>>& rows) {
    std::string text = "# " + io::dump(header(), -1) + "\n";
    for (std::size_t c = 0; c < columns.size(); ++c) text += (c ? "," : "") + columns[c];
    text += '\n';
    for (const auto& row : rows) {
      for (std::size_t c = 0; c < row.size(); ++c) text += (c ? "," : "") + io::format_double(row[c]);
      text += '\n';
    }
    emit(text);
  }
  bool csv() const { return cfg_.format == "csv"; }

  std::vector<std::size_t> subset(const LoopFreeChain& c, const std::string& text) const {
    const auto labels = parse_labels(text);
    return normalize_subset(c.indices_of(labels), c.size());
  }

  void check(double discrepancy, const std::string& what) const {
    if (!(discrepancy <= cfg_.tolerance))
      throw IdentityFailure(what + " discrepancy " + io::format_double(discrepancy) + " exceeds tolerance " +
                            io::format_double(cfg_.tolerance));
  }

  int validate();
  int kernel();
  int correlate();
  int gap();
  int lensemble();
  int noise();
  int sample();
  int enumerate();
  int build_chain();
  int renewalfn();
  int firstpassage();
  int moments();
  int distribution();
  int clt();
};

int Session::dispatch() {
  if (cfg_.strict && !cfg_.seed_given && (cfg_.command == "sample" || cfg_.command == "clt"))
    throw Error(ErrorCode::MalformedInput, "--strict requires an explicit --seed for " + cfg_.command);
  load_input();
  const std::string& c = cfg_.command;
  if (c == "validate") return validate();
  if (c == "kernel") return kernel();
  if (c == "correlate") return correlate();
  if (c == "gap") return gap();
  if (c == "lensemble") return lensemble();
  if (c == "noise") return noise();
  if (c == "sample") return sample();
  if (c == "enumerate") return enumerate();
  if (c == "renewal" || c == "semimarkov") return build_chain();
  if (c == "renewalfn") return renewalfn();
  if (c == "firstpassage") return firstpassage();
  if (c == "moments") return moments();
  if (c == "distribution") return distribution();
  if (c == "clt") return clt();
  throw Error(ErrorCode::Internal, "unhandled subcommand " + c);
}

int Session::validate() {
  ChainSpec spec;
  switch (io::detect_spec_kind(input_)) {
    case io::SpecKind::Chain: spec = io::parse_chain_spec(input_); break;
    default: spec = chain().to_spec(); break;
  }
  const auto order = validate_loop_free(spec);
  emit_json({{"loop_free", true}, {"states", spec.states.size()}, {"order", labels_json(spec.states, order)}});
  return kOk;
}

int Session::kernel() {
  const LoopFreeChain c = chain();
  emit_json(io::kernel_to_json(build_kernel(c)));
  return kOk;
}

int Session::correlate() {
  const LoopFreeChain c = chain();
  const HitMatrix hits = compute_hit_matrix(c);
  const Kernel k = cfg_.kernel_input.empty() ? build_kernel(c, hits) : io::kernel_from_json(io::read_json_file(cfg_.kernel_input));
  const auto labels = parse_labels(cfg_.set);
  const auto idx = normalize_subset(c.indices_of(labels), c.size());
  const double minor = correlation(k, k.indices_of(labels));
  const double product = product_correlation(c, hits, hit_intensity(c, hits), idx);
  const double d = std::abs(minor - product);
  emit_json({{"set", labels_json(c.labels(), idx)},
             {"minor", minor},
             {"product", product},
             {"discrepancy", d},
             {"ok", d <= cfg_.tolerance}});
  check(d, "minor/product");
  return kOk;
}

int Session::gap() {
  const LoopFreeChain c = chain();
  const HitMatrix hits = compute_hit_matrix(c);
  const Kernel k = build_kernel(c, hits);
  const auto idx = subset(c, cfg_.window);
  const double g = gap_probability(k, idx);
  const EntranceLaw law = entrance_law(c, hits, idx);
  const double d = std::abs(g - law.pi_zero);
  emit_json({{"window", labels_json(c.labels(), idx)},
             {"gap", g},
             {"pi_zero", law.pi_zero},
             {"pi_tilde", law.pi_tilde},
             {"discrepancy", d},
             {"ok", d <= cfg_.tolerance}});
  check(d, "gap/entrance-law");
  return kOk;
}

int Session::lensemble() {
  const LoopFreeChain c = chain();
  const HitMatrix hits = compute_hit_matrix(c);
  const Kernel k = build_kernel(c, hits);
  const auto idx = subset(c, cfg_.window);
  const Kernel via_kernel = l_ensemble(k, idx, cfg_.gap_threshold);
  const Kernel closed = l_ensemble_closed_form(c, hits, idx, cfg_.gap_threshold);
  const double d = (via_kernel.matrix - closed.matrix).cwiseAbs().maxCoeff();
  emit_json({{"window", labels_json(c.labels(), idx)},
             {"from_kernel", matrix_json(via_kernel.matrix)},
             {"closed_form", matrix_json(closed.matrix)},
             {"max_discrepancy", d},
             {"ok", d <= cfg_.tolerance}});
  check(d, "L-ensemble");
  return kOk;
}

int Session::noise() {
  const LoopFreeChain c = chain();
  const auto params = parse_noise(cfg_, c.size()).value_or(NoiseParams::none(c.size()));
  emit_json(io::kernel_to_json(apply_bernoulli_noise(build_kernel(c), params)));
  return kOk;
}

int Session::sample() {
  const LoopFreeChain c = chain();
  const auto params = parse_noise(cfg_, c.size());
  SampleBatch batch = sample_batch(c, params, cfg_.samples, cfg_.seed, worker_threads());
  Json h = header();
  h["noise_hash"] = io::hex64(io::fnv1a64(cfg_.p + "|" + cfg_.q));
  emit(io::batch_to_jsonl(batch, c.labels(), h));
  return kOk;
}

int Session::enumerate() {
  const LoopFreeChain c = chain();
  const auto law = enumerate_trajectories(c);
  Json configs = Json::array();
  double total = 0.0;
  for (const auto& wc : law) {
    configs.push_back({{"states", labels_json(c.labels(), wc.config)}, {"prob", wc.prob}});
    total += wc.prob;
  }
  emit_json({{"configurations", configs}, {"total", total}});
  return kOk;
}

int Session::build_chain() {
  const auto kind = io::detect_spec_kind(input_);
  const bool want_renewal = cfg_.command == "renewal";
  if (want_renewal != (kind == io::SpecKind::Renewal) || (!want_renewal && kind != io::SpecKind::SemiMarkov))
    throw Error(ErrorCode::MalformedInput, cfg_.command + " expects a " + (want_renewal ? "renewal" : "semi-Markov") + " spec");
  emit_json(io::chain_spec_to_json(chain().to_spec()));
  return kOk;
}

int Session::renewalfn() {
  const Pmf g = io::detect_spec_kind(input_) == io::SpecKind::Renewal ? io::parse_renewal_spec(input_).xi1
                                                                     : io::parse_pmf(input_);
  const auto f = renewal_function(g, cfg_.nmax);
  const double limit = 1.0 / g.mean();
  if (csv()) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < f.size(); ++i)
      rows.push_back({static_cast<double>(i + 1), f[i], std::abs(f[i] - limit)});
    emit_csv({"n", "f", "deviation"}, rows);
    return kOk;
  }
  Json body{{"f", f}, {"limit", limit}};
  const Periodicity per = is_aperiodic(g);
  body["period"] = per.period;
  if (per.aperiodic) {
    const RenewalRateFit fit = renewal_rate_fit(g, f);
    body["fit"] = {{"converged_exactly", fit.converged_exactly},
                   {"log_c1", fit.log_c1},
                   {"c2", fit.c2},
                   {"max_residual", fit.max_residual},
                   {"unexplained_variance", fit.unexplained_variance},
                   {"points", fit.points}};
  } else {
    body["fit"] = nullptr;
  }
  emit_json(body);
  return kOk;
}

int Session::firstpassage() {
  const SemiMarkovSpec spec = io::parse_semi_markov_spec(input_);
  auto find = [&](const std::string& s) {
    auto it = std::find(spec.states.begin(), spec.states.end(), s);
    if (it == spec.states.end()) throw Error(ErrorCode::UnknownState, "no driving state " + s);
    return static_cast<std::size_t>(it - spec.states.begin());
  };
  const std::int64_t t_max = cfg_.tmax > 0 ? cfg_.tmax : spec.horizon;
  const Pmf pmf = first_passage_distribution(spec, find(cfg_.from), find(cfg_.to), t_max);
  if (csv()) {
    std::vector<std::vector<double>> rows;
    for (std::int64_t t = 1; t <= pmf.max_support(); ++t) rows.push_back({static_cast<double>(t), pmf.at(t)});
    emit_csv({"t", "prob"}, rows);
    return kOk;
  }
  emit_json({{"from", cfg_.from},
             {"to", cfg_.to},
             {"pmf", io::pmf_to_json(pmf)},
             {"mass", pmf.total()},
             {"irreducible", driving_irreducible(spec)}});
  return kOk;
}

int Session::moments() {
  const LoopFreeChain c = chain();
  const auto idx = subset(c, cfg_.window);
  Kernel k = build_kernel(c);
  if (auto params = parse_noise(cfg_, c.size())) k = apply_bernoulli_noise(k, *params);
  const CountMoments m = count_moments(k, idx);
  emit_json({{"window", labels_json(c.labels(), idx)}, {"mean", m.mean}, {"variance", m.variance}});
  return kOk;
}

int Session::distribution() {
  const LoopFreeChain c = chain();
  const auto idx = subset(c, cfg_.window);
  Kernel k = build_kernel(c);
  if (auto params = parse_noise(cfg_, c.size())) k = apply_bernoulli_noise(k, *params);
  const auto pmf = count_distribution(k, idx);
  const double g = gap_probability(k, idx);
  if (csv()) {
    std::vector<std::vector<double>> rows;
    for (std::size_t n = 0; n < pmf.size(); ++n) rows.push_back({static_cast<double>(n), pmf[n]});
    emit_csv({"n", "prob"}, rows);
  } else {
    emit_json({{"window", labels_json(c.labels(), idx)},
               {"pmf", pmf},
               {"gap", g},
               {"discrepancy", std::abs(pmf[0] - g)},
               {"ok", std::abs(pmf[0] - g) <= cfg_.tolerance}});
  }
  check(std::abs(pmf[0] - g), "P(N=0)/gap");
  return kOk;
}

int Session::clt() {
  const LoopFreeChain c = chain();
  const auto params = parse_noise(cfg_, c.size());
  std::vector<std::vector<std::size_t>> windows;
  for (const auto& tok : split(cfg_.windows, ',')) {
    const auto size = parse_int(tok);
    if (!size || *size < 1 || static_cast<std::size_t>(*size) > c.size())
      throw Error(ErrorCode::MalformedInput, "window size " + tok + " outside 1.." + std::to_string(c.size()));
    std::vector<std::size_t> w(static_cast<std::size_t>(*size));
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = i;
    windows.push_back(std::move(w));
  }
  const CltReport report = clt_report(c, params, windows, cfg_.samples, cfg_.seed, worker_threads());
  if (csv()) {
    std::vector<std::vector<double>> rows;
    for (const auto& r : report.rows)
      rows.push_back({static_cast<double>(r.window_size), r.exact_mean, r.exact_variance, r.k3, r.k4, r.ks});
    emit_csv({"size", "mean", "variance", "k3", "k4", "ks"}, rows);
    return kOk;
  }
  Json rows = Json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"size", r.window_size},
                    {"exact_mean", r.exact_mean},
                    {"exact_variance", r.exact_variance},
                    {"empirical_mean", r.empirical_mean},
                    {"empirical_variance", r.empirical_variance},
                    {"mean_se", r.mean_se},
                    {"variance_se", r.variance_se},
                    {"k3", r.k3},
                    {"k4", r.k4},
                    {"ks", r.ks},
                    {"degenerate_variance", r.degenerate_variance}});
  }
  emit_json({{"rows", rows},
             {"k3_decreasing", report.k3_decreasing},
             {"k4_decreasing", report.k4_decreasing},
             {"ks_decreasing", report.ks_decreasing},
             {"degenerate_variance", report.degenerate_variance},
             {"variance_growth_exponent", report.variance_growth_exponent}});
  return kOk;
}

void add_common(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("spec", cfg.input, "input spec file (JSON)")->required();
  sub->add_option("-o,--out", cfg.output, "write output to this file instead of stdout");
  sub->add_option("--format", cfg.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  sub->add_option("--tol", cfg.tolerance, "identity-check tolerance");
}

void add_seeded(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--seed", cfg.seed, "master seed");
  sub->add_flag("--strict", cfg.strict, "require an explicit --seed");
  sub->add_option("-n,--samples", cfg.samples, "number of samples");
}

void add_noise(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--p", cfg.p, "deletion probabilities: one value or one per state");
  sub->add_option("--q", cfg.q, "insertion probabilities: one value or one per state");
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Loop-free Markov chains as determinantal point processes"};
  app.require_subcommand(1);

  auto* s = app.add_subcommand("validate", "check loop-freeness and print a topological order");
  add_common(s, cfg);
  s = app.add_subcommand("kernel", "build and export the correlation kernel");
  add_common(s, cfg);
  s = app.add_subcommand("correlate", "correlation of a state set: minor vs ordered product");
  add_common(s, cfg);
  s->add_option("--set", cfg.set, "comma-separated state labels")->required();
  s->add_option("--kernel", cfg.kernel_input, "use an exported kernel for the minor route");
  s = app.add_subcommand("gap", "gap probability vs entrance law");
  add_common(s, cfg);
  s->add_option("--window", cfg.window, "comma-separated state labels")->required();
  s = app.add_subcommand("lensemble", "L-ensemble by inversion vs closed form");
  add_common(s, cfg);
  s->add_option("--window", cfg.window, "comma-separated state labels")->required();
  s->add_option("--gap-threshold", cfg.gap_threshold, "|det(I-K_Y)| below this means pi0 = 0");
  s = app.add_subcommand("noise", "kernel of the process with Bernoulli noise");
  add_common(s, cfg);
  add_noise(s, cfg);
  s = app.add_subcommand("sample", "simulate trajectories (JSON lines)");
  add_common(s, cfg);
  add_seeded(s, cfg);
  add_noise(s, cfg);
  s = app.add_subcommand("enumerate", "exact law of the visited set");
  add_common(s, cfg);
  s = app.add_subcommand("renewal", "chain of a delayed renewal spec");
  add_common(s, cfg);
  s = app.add_subcommand("semimarkov", "chain of a semi-Markov spec");
  add_common(s, cfg);
  s = app.add_subcommand("renewalfn", "renewal function and convergence-rate fit");
  add_common(s, cfg);
  s->add_option("--nmax", cfg.nmax, "number of terms");
  s = app.add_subcommand("firstpassage", "first-passage time law between driving states");
  add_common(s, cfg);
  s->add_option("--from", cfg.from, "start state")->required();
  s->add_option("--to", cfg.to, "target state")->required();
  s->add_option("--tmax", cfg.tmax, "time horizon (default: spec horizon)");
  s = app.add_subcommand("moments", "exact mean and variance of the window count");
  add_common(s, cfg);
  add_noise(s, cfg);
  s->add_option("--window", cfg.window, "comma-separated state labels")->required();
  s = app.add_subcommand("distribution", "exact law of the window count");
  add_common(s, cfg);
  add_noise(s, cfg);
  s->add_option("--window", cfg.window, "comma-separated state labels")->required();
  s = app.add_subcommand("clt", "central-limit report over growing windows");
  add_common(s, cfg);
  add_seeded(s, cfg);
  add_noise(s, cfg);
  s->add_option("--windows", cfg.windows, "comma-separated window sizes (leading states)")->required();

  std::vector<std::string> argv_storage{"dppchains"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_storage) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kMalformedInput;
  }
  for (auto* sub : app.get_subcommands()) {
    cfg.command = sub->get_name();
    if (auto* opt = sub->get_option_no_throw("--seed")) cfg.seed_given = opt->count() > 0;
  }

  try {
    Session session(cfg, out);
    return session.dispatch();
  } catch (const IdentityFailure& e) {
    err << "identity check failed: " << e.what() << '\n';
    return kIdentityCheckFailed;
  } catch (const Error& e) {
    err << e.what() << '\n';
    if (!e.witness().empty()) err << "witness: " << e.witness() << '\n';
    io::Json report{{"code", std::string(to_string(e.code()))}, {"message", e.what()}, {"witness", e.witness()}};
    out << io::dump({{"error", report}}) << '\n';
    switch (classify(e.code())) {
      case ErrorClass::Malformed: return kMalformedInput;
      case ErrorClass::Precondition: return kPreconditionViolation;
      case ErrorClass::Internal: return kInternalError;
    }
    return kInternalError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternalError;
  }
}

}  // namespace dppchains::cli

#include "dppchains/io.hpp"

#include "dppchains/error.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace dppchains::io {

namespace {

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorCode::MalformedInput, what); }

const Json& field(const Json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) malformed(std::string("missing field \"") + name + "\"");
  return j.at(name);
}

double number(const Json& j, const std::string& what) {
  if (!j.is_number()) malformed(what + " must be a number");
  return j.get<double>();
}

std::int64_t integer(const Json& j, const std::string& what) {
  if (!j.is_number_integer()) malformed(what + " must be an integer");
  return j.get<std::int64_t>();
}

std::vector<double> number_array(const Json& j, const std::string& what) {
  if (!j.is_array()) malformed(what + " must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) out.push_back(number(v, what + " entry"));
  return out;
}

}  // namespace

Json label_to_json(const StateLabel& label) {
  if (const auto* i = std::get_if<std::int64_t>(&label)) return *i;
  return std::get<std::string>(label);
}

StateLabel label_from_json(const Json& j) {
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_string()) return j.get<std::string>();
  malformed("state labels must be strings or integers");
}

ChainSpec parse_chain_spec(const Json& j) {
  ChainSpec spec;
  const Json& states = field(j, "states");
  if (!states.is_array()) malformed("\"states\" must be an array");
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& s : states) {
    spec.states.push_back(label_from_json(s));
    if (!index.emplace(label_text(spec.states.back()), spec.states.size() - 1).second)
      malformed("duplicate state " + label_text(spec.states.back()));
  }
  spec.pi = number_array(field(j, "pi"), "\"pi\"");
  const Json& tr = field(j, "transitions");
  if (!tr.is_array()) malformed("\"transitions\" must be an array");
  for (const auto& t : tr) {
    if (!t.is_array() || t.size() != 3) malformed("each transition must be [from, to, prob]");
    auto lookup = [&](const Json& l) {
      auto it = index.find(label_text(label_from_json(l)));
      if (it == index.end()) throw Error(ErrorCode::UnknownState, "transition names unknown state " + l.dump());
      return it->second;
    };
    spec.transitions.push_back({lookup(t[0]), lookup(t[1]), number(t[2], "transition probability")});
  }
  return spec;
}

Json chain_spec_to_json(const ChainSpec& spec) {
  Json states = Json::array();
  for (const auto& s : spec.states) states.push_back(label_to_json(s));
  Json transitions = Json::array();
  for (const auto& e : spec.transitions)
    transitions.push_back(Json::array({label_to_json(spec.states[e.from]), label_to_json(spec.states[e.to]), e.prob}));
  return Json{{"states", states}, {"pi", spec.pi}, {"transitions", transitions}};
}

Pmf parse_pmf(const Json& j) {
  Pmf pmf;
  pmf.offset = integer(field(j, "offset"), "pmf offset");
  pmf.probs = number_array(field(j, "probs"), "pmf probs");
  return pmf;
}

Json pmf_to_json(const Pmf& pmf) { return Json{{"offset", pmf.offset}, {"probs", pmf.probs}}; }

RenewalSpec parse_renewal_spec(const Json& j) {
  RenewalSpec spec;
  spec.xi0 = parse_pmf(field(j, "xi0"));
  spec.xi1 = parse_pmf(field(j, "xi1"));
  spec.horizon = integer(field(j, "horizon"), "horizon");
  return spec;
}

SemiMarkovSpec parse_semi_markov_spec(const Json& j) {
  SemiMarkovSpec spec;
  std::unordered_map<std::string, std::size_t> index;
  const Json& states = field(j, "states");
  if (!states.is_array()) malformed("\"states\" must be an array");
  for (const auto& s : states) {
    spec.states.push_back(label_text(label_from_json(s)));
    index.emplace(spec.states.back(), spec.states.size() - 1);
  }
  auto lookup = [&](const Json& l) {
    auto it = index.find(label_text(label_from_json(l)));
    if (it == index.end()) throw Error(ErrorCode::UnknownState, "unknown driving state " + l.dump());
    return it->second;
  };
  for (const auto& e : field(j, "kernel")) {
    if (!e.is_array() || e.size() != 4) malformed("kernel entries must be [s1, s2, offset, [probs]]");
    Pmf p{integer(e[2], "kernel offset"), number_array(e[3], "kernel probs"), true};
    spec.kernel.push_back({lookup(e[0]), lookup(e[1]), std::move(p)});
  }
  for (const auto& e : field(j, "initial")) {
    if (!e.is_array() || e.size() != 3) malformed("initial entries must be [s, offset, [probs]]");
    Pmf p{integer(e[1], "initial offset"), number_array(e[2], "initial probs"), true};
    spec.initial.push_back({lookup(e[0]), std::move(p)});
  }
  spec.horizon = integer(field(j, "horizon"), "horizon");
  return spec;
}

SpecKind detect_spec_kind(const Json& j) {
  if (!j.is_object()) malformed("spec must be a JSON object");
  if (j.contains("xi1")) return SpecKind::Renewal;
  if (j.contains("kernel")) return SpecKind::SemiMarkov;
  return SpecKind::Chain;
}

LoopFreeChain load_chain(const Json& j) {
  switch (detect_spec_kind(j)) {
    case SpecKind::Renewal: return renewal_chain(parse_renewal_spec(j));
    case SpecKind::SemiMarkov: return semi_markov_chain(parse_semi_markov_spec(j));
    case SpecKind::Chain: break;
  }
  return LoopFreeChain::from_spec(parse_chain_spec(j));
}

Json kernel_to_json(const Kernel& k) {
  Json states = Json::array();
  for (const auto& s : k.labels) states.push_back(label_to_json(s));
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < k.matrix.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < k.matrix.cols(); ++c) row.push_back(k.matrix(r, c));
    rows.push_back(std::move(row));
  }
  return Json{{"states", states},
              {"kind", k.kind == KernelKind::Correlation ? "correlation" : "l_ensemble"},
              {"matrix", rows}};
}

Kernel kernel_from_json(const Json& j) {
  Kernel k;
  for (const auto& s : field(j, "states")) k.labels.push_back(label_from_json(s));
  const std::string kind = field(j, "kind").get<std::string>();
  if (kind == "correlation") {
    k.kind = KernelKind::Correlation;
  } else if (kind == "l_ensemble") {
    k.kind = KernelKind::LEnsemble;
  } else {
    malformed("unknown kernel kind " + kind);
  }
  const Json& rows = field(j, "matrix");
  const auto n = static_cast<Eigen::Index>(k.labels.size());
  if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != n) malformed("matrix must have one row per state");
  k.matrix.resize(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto row = number_array(rows[static_cast<std::size_t>(r)], "matrix row");
    if (static_cast<Eigen::Index>(row.size()) != n) malformed("matrix must be square");
    for (Eigen::Index c = 0; c < n; ++c) k.matrix(r, c) = row[static_cast<std::size_t>(c)];
  }
  return k;
}

std::string batch_to_jsonl(const SampleBatch& batch, const std::vector<StateLabel>& labels, const Json& header) {
  std::string out = dump(header, -1);
  out += '\n';
  for (const auto& c : batch.configs) {
    Json line = Json::array();
    for (std::size_t x : c) line.push_back(label_to_json(labels[x]));
    out += dump(line, -1);
    out += '\n';
  }
  return out;
}

std::string format_double(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  if (s == "-0") s = "0";
  return s;
}

namespace {

bool is_scalar_array(const Json& j) {
  for (const auto& v : j)
    if (v.is_structured()) return false;
  return true;
}

void write(std::string& out, const Json& j, int indent, int depth) {
  const bool pretty = indent >= 0;
  auto newline = [&](int d) {
    if (!pretty) return;
    out += '\n';
    out.append(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (j.type()) {
    case Json::value_t::number_float: out += format_double(j.get<double>()); return;
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += Json(it.key()).dump();
        out += pretty ? ": " : ":";
        write(out, it.value(), indent, depth + 1);
      }
      newline(depth);
      out += '}';
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      const bool inline_items = !pretty || is_scalar_array(j);
      out += '[';
      bool first = true;
      for (const auto& v : j) {
        if (!first) out += inline_items && pretty ? ", " : ",";
        first = false;
        if (!inline_items) newline(depth + 1);
        write(out, v, inline_items ? -1 : indent, depth + 1);
      }
      if (!inline_items) newline(depth);
      out += ']';
      return;
    }
    default: out += j.dump(); return;
  }
}

}  // namespace

std::string dump(const Json& j, int indent) {
  std::string out;
  write(out, j, indent, 0);
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) malformed("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json read_json_file(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    malformed(path + ": " + e.what());
  }
}

void write_file_atomic(const std::string& path, std::string_view contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Internal, "cannot write " + tmp);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorCode::Internal, "short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace dppchains::io

#pragma once

#include "dppchains/chain.hpp"
#include "dppchains/kernel.hpp"
#include "dppchains/renewal.hpp"
#include "dppchains/sampler.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <string_view>

namespace dppchains::io {

using Json = nlohmann::json;

/// {"states": [...], "pi": [...], "transitions": [[from, to, prob], ...]}
ChainSpec parse_chain_spec(const Json& j);
Json chain_spec_to_json(const ChainSpec& spec);

/// {"xi0": {"offset": k, "probs": [...]}, "xi1": {...}, "horizon": T}
RenewalSpec parse_renewal_spec(const Json& j);
/// {"states": [...], "kernel": [[s1, s2, offset, [probs]], ...],
///  "initial": [[s, offset, [probs]], ...], "horizon": T}
SemiMarkovSpec parse_semi_markov_spec(const Json& j);

Pmf parse_pmf(const Json& j);
Json pmf_to_json(const Pmf& pmf);

enum class SpecKind { Chain, Renewal, SemiMarkov };
/// Renewal specs carry "xi1", semi-Markov specs carry "kernel".
SpecKind detect_spec_kind(const Json& j);
/// Builds the loop-free chain described by any of the three spec formats.
LoopFreeChain load_chain(const Json& j);

Json label_to_json(const StateLabel& label);
StateLabel label_from_json(const Json& j);

/// {"states": [...], "kind": "correlation" | "l_ensemble", "matrix": [[...], ...]}
Json kernel_to_json(const Kernel& k);
Kernel kernel_from_json(const Json& j);

/// Header line followed by one sorted label array per configuration.
std::string batch_to_jsonl(const SampleBatch& batch, const std::vector<StateLabel>& labels, const Json& header);

/// Serializes with every floating-point number printed as %.17g; arrays of
/// scalars stay on one line.
std::string dump(const Json& j, int indent = 2);
std::string format_double(double v);

std::uint64_t fnv1a64(std::string_view bytes) noexcept;
std::string hex64(std::uint64_t v);

Json read_json_file(const std::string& path);
std::string read_file(const std::string& path);
/// Writes to path.tmp and renames over path.
void write_file_atomic(const std::string& path, std::string_view contents);

}  // namespace dppchains::io

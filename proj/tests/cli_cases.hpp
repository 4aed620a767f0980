#pragma once

// Subcommand invocations whose stdout is pinned under tests/golden.

#include "support.hpp"

#include <string>
#include <vector>

namespace testing_support {

inline std::string golden_path(const std::string& name) {
  return std::string(DPPCHAINS_GOLDEN_DIR) + "/" + name + ".txt";
}

struct GoldenCase {
  std::string name;
  std::vector<std::string> args;
  int code;
};

inline std::vector<GoldenCase> golden_cases() {
  const std::string diamond = data_path("diamond.json");
  const std::string renewal = data_path("renewal12.json");
  const std::string semi = data_path("semimarkov2.json");
  return {
      {"validate_diamond", {"validate", diamond}, 0},
      {"validate_renewal", {"validate", renewal}, 0},
      {"validate_cycle", {"validate", data_path("two_cycle.json")}, 3},
      {"kernel_diamond", {"kernel", diamond}, 0},
      {"kernel_renewal", {"kernel", renewal}, 0},
      {"correlate_diamond", {"correlate", diamond, "--set", "2,3"}, 0},
      {"correlate_renewal", {"correlate", renewal, "--set", "2,4..6"}, 0},
      {"gap_diamond", {"gap", diamond, "--window", "3"}, 0},
      {"gap_renewal", {"gap", renewal, "--window", "5..8"}, 0},
      {"gap_return", {"gap", diamond, "--window", "1,3"}, 3},
      {"lensemble_diamond", {"lensemble", diamond, "--window", "2"}, 0},
      {"lensemble_renewal", {"lensemble", renewal, "--window", "4"}, 0},
      {"lensemble_singular", {"lensemble", diamond, "--window", "2,3"}, 3},
      {"noise_diamond", {"noise", diamond, "--p", "0.1", "--q", "0.2,0.3,0.4"}, 0},
      {"noise_renewal", {"noise", renewal, "--p", "1", "--q", "1"}, 0},
      {"sample_diamond", {"sample", diamond, "-n", "20", "--seed", "7"}, 0},
      {"sample_renewal", {"sample", renewal, "-n", "10", "--seed", "1", "--p", "0.1", "--q", "0.1"}, 0},
      {"enumerate_diamond", {"enumerate", diamond}, 0},
      {"enumerate_renewal", {"enumerate", renewal}, 0},
      {"renewal_renewal", {"renewal", renewal}, 0},
      {"renewal_wrong_kind", {"renewal", diamond}, 2},
      {"semimarkov_semimarkov", {"semimarkov", semi}, 0},
      {"renewalfn_renewal", {"renewalfn", renewal, "--nmax", "12"}, 0},
      {"renewalfn_renewal_csv", {"renewalfn", renewal, "--nmax", "6", "--format", "csv"}, 0},
      {"firstpassage_semimarkov", {"firstpassage", semi, "--from", "a", "--to", "a", "--tmax", "6"}, 0},
      {"moments_diamond", {"moments", diamond, "--window", "1..3"}, 0},
      {"moments_renewal", {"moments", renewal, "--window", "1..8", "--p", "0.1", "--q", "0.1"}, 0},
      {"distribution_diamond", {"distribution", diamond, "--window", "1,2,3"}, 0},
      {"distribution_renewal", {"distribution", renewal, "--window", "1..8"}, 0},
      {"clt_renewal", {"clt", renewal, "--windows", "2,4,8", "-n", "500", "--seed", "3", "--p", "0.1", "--q", "0.1"}, 0},
      {"clt_renewal_csv", {"clt", renewal, "--windows", "2,8", "-n", "500", "--seed", "3", "--format", "csv"}, 0},
  };
}

}  // namespace testing_support

#include "support.hpp"

#include "dppchains/chain.hpp"
#include "dppchains/error.hpp"
#include "dppchains/renewal.hpp"
#include "dppchains/sampler.hpp"

#include <doctest.h>

using namespace dppchains;
using namespace testing_support;

namespace {

ChainSpec two_state(double p12, double p21) {
  ChainSpec spec;
  spec.states = {std::int64_t{1}, std::int64_t{2}};
  spec.pi = {1.0, 0.0};
  spec.transitions.push_back({0, 1, p12});
  if (p21 > 0) spec.transitions.push_back({1, 0, p21});
  return spec;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

}  // namespace

TEST_CASE("validate_loop_free orders small DAGs") {
  CHECK(validate_loop_free(two_state(1.0, 0.0)) == std::vector<std::size_t>{0, 1});
  CHECK(validate_loop_free(diamond_spec()) == std::vector<std::size_t>{0, 1, 2});

  // incomparable states keep ascending index order
  ChainSpec spec;
  spec.states = {std::int64_t{5}, std::int64_t{4}, std::int64_t{3}};
  spec.pi = {0.2, 0.3, 0.5};
  spec.transitions = {{2, 0, 1.0}};
  CHECK(validate_loop_free(spec) == std::vector<std::size_t>{1, 2, 0});
}

TEST_CASE("validate_loop_free reports a cycle witness") {
  try {
    validate_loop_free(two_state(0.5, 0.5));
    FAIL("expected CycleDetected");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CycleDetected);
    CHECK(e.witness() == "1→2→1");
  }

  ChainSpec self = two_state(0.5, 0.0);
  self.transitions.push_back({1, 1, 0.5});
  try {
    validate_loop_free(self);
    FAIL("expected CycleDetected");
  } catch (const Error& e) {
    CHECK(e.witness() == "2→2");
  }
}

TEST_CASE("validate_loop_free rejects bad probabilities") {
  ChainSpec spec = diamond_spec();
  spec.transitions[0].prob = 0.6;  // row 1 sums to 1.1
  CHECK(code_of([&] { validate_loop_free(spec); }) == ErrorCode::InvalidProbability);

  spec = diamond_spec();
  spec.pi = {1.0, -0.1, 0.1};
  CHECK(code_of([&] { validate_loop_free(spec); }) == ErrorCode::InvalidProbability);

  spec = diamond_spec();
  spec.pi = {1.0, 0.0};
  CHECK(code_of([&] { validate_loop_free(spec); }) == ErrorCode::LengthMismatch);

  // overshoot within tolerance is absorbed
  spec = diamond_spec();
  spec.transitions[0].prob = 0.5 + 5e-10;
  const auto chain = LoopFreeChain::from_spec(spec);
  CHECK(chain.exit_probability(0) == 0.0);
}

TEST_CASE("hit matrix on the diamond and small chains") {
  const auto chain = LoopFreeChain::from_spec(diamond_spec());
  const HitMatrix hits = compute_hit_matrix(chain);
  Matrix expected(3, 3);
  expected << 0, 0.5, 1.0, 0, 0, 1.0, 0, 0, 0;
  CHECK((hits.q - expected).cwiseAbs().maxCoeff() < 1e-15);

  const auto rho = hit_intensity(chain, hits);
  CHECK(rho(0) == doctest::Approx(1.0));
  CHECK(rho(1) == doctest::Approx(0.5));
  CHECK(rho(2) == doctest::Approx(1.0));

  const auto two = LoopFreeChain::from_spec(two_state(1.0, 0.0));
  const HitMatrix q2 = compute_hit_matrix(two);
  CHECK(q2.q(0, 1) == 1.0);
  CHECK(q2.q.sum() == 1.0);
  CHECK(hit_intensity(two, q2).isApprox(Vector::Ones(2)));

  ChainSpec silent = diamond_spec();
  silent.pi = {0, 0, 0};
  const auto sc = LoopFreeChain::from_spec(silent);
  CHECK(hit_intensity(sc, compute_hit_matrix(sc)).isZero());
}

TEST_CASE("renewal window Q13 equals f2") {
  const auto chain = renewal_chain({Pmf::point(1), Pmf::uniform(1, 2), 4});
  CHECK(compute_hit_matrix(chain).q(0, 2) == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("hit matrix matches the power series on random chains") {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + gen() % 11;
    const ChainSpec spec = random_chain_spec(gen, n);
    const auto chain = LoopFreeChain::from_spec(spec);
    const Matrix q = compute_hit_matrix(chain).q;
    const Matrix oracle = series_hit_matrix(spec);
    REQUIRE((q - oracle).cwiseAbs().maxCoeff() < 1e-12);

    // support is a strict partial order
    for (std::size_t x = 0; x < n; ++x) {
      CHECK(q(x, x) == 0.0);
      for (std::size_t y = 0; y < n; ++y) {
        if (q(x, y) > 0) CHECK(q(y, x) == 0.0);
        for (std::size_t z = 0; z < n; ++z)
          if (q(x, y) > 0 && q(y, z) > 0) CHECK(q(x, z) > 0);
      }
    }
  }
}

TEST_CASE("hit intensity and entrance law agree with path enumeration") {
  std::mt19937_64 gen(12);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + gen() % 9;
    const ChainSpec spec = random_chain_spec(gen, n);
    const auto chain = LoopFreeChain::from_spec(spec);
    const HitMatrix hits = compute_hit_matrix(chain);
    const auto law = path_enumeration(spec);
    const auto rho = hit_intensity(chain, hits);
    for (std::size_t x = 0; x < n; ++x) CHECK(rho(x) == doctest::Approx(containment(law, 1u << x)).epsilon(1e-12));

    const auto dist = enumerate_trajectories(chain);
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
      const auto window = members(mask);
      EntranceLaw exact;
      try {
        exact = entrance_law(chain, hits, window);
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ReturnToWindow);
        continue;
      }
      const EntranceLaw oracle = exact_entrance_law(chain, dist, window);
      double sum = exact.pi_zero;
      for (std::size_t k = 0; k < window.size(); ++k) {
        CHECK(std::abs(exact.pi_tilde[k] - oracle.pi_tilde[k]) < 1e-12);
        sum += exact.pi_tilde[k];
      }
      CHECK(std::abs(exact.pi_zero - oracle.pi_zero) < 1e-12);
      CHECK(std::abs(sum - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("entrance law on the diamond") {
  const auto chain = LoopFreeChain::from_spec(diamond_spec());
  const std::vector<std::size_t> y2{1}, y3{2}, all{0, 1, 2};
  auto law = entrance_law(chain, y2);
  CHECK(law.pi_tilde[0] == doctest::Approx(0.5));
  CHECK(law.pi_zero == doctest::Approx(0.5));

  law = entrance_law(chain, y3);
  CHECK(law.pi_tilde[0] == doctest::Approx(1.0));
  CHECK(law.pi_zero == doctest::Approx(0.0));

  law = entrance_law(chain, all);
  CHECK(law.pi_tilde == std::vector<double>{1.0, 0.0, 0.0});
  CHECK(law.pi_zero == 0.0);
}

TEST_CASE("entrance law rejects windows that can be re-entered") {
  const auto chain = LoopFreeChain::from_spec(diamond_spec());
  const std::vector<std::size_t> y{0, 2};
  try {
    entrance_law(chain, y);
    FAIL("expected ReturnToWindow");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ReturnToWindow);
    CHECK(e.witness() == "1→2→3");
  }
}

TEST_CASE("contract_to_window") {
  const auto chain = LoopFreeChain::from_spec(diamond_spec());
  const std::vector<std::size_t> y23{1, 2};
  const auto c = contract_to_window(chain, y23);
  REQUIRE(c.size() == 2);
  CHECK(c.transition(0, 1) == 1.0);
  CHECK(c.exit_probability(0) == 0.0);
  CHECK(c.exit_probability(1) == 1.0);
  CHECK(c.initial()[0] == doctest::Approx(0.5));
  CHECK(c.initial()[1] == doctest::Approx(0.5));

  const std::vector<std::size_t> all{0, 1, 2};
  const auto same = contract_to_window(chain, all);
  CHECK(same.initial() == chain.initial());
  CHECK(same.transition(0, 1) == 0.5);
  CHECK(same.transition(1, 2) == 1.0);

  const std::vector<std::size_t> y2{1};
  const auto single = contract_to_window(chain, y2);
  CHECK(single.exit_probability(0) == 1.0);
  CHECK(single.initial()[0] == doctest::Approx(0.5));
}

TEST_CASE("labels and lookups") {
  ChainSpec spec = diamond_spec();
  spec.states = {std::string("a"), std::int64_t{7}, std::string("b")};
  const auto chain = LoopFreeChain::from_spec(spec);
  CHECK(chain.index_of(std::string("b")) == 2);
  CHECK(chain.index_of(std::int64_t{7}) == 1);
  CHECK(code_of([&] { chain.index_of(std::string("zz")); }) == ErrorCode::UnknownState);

  // 7 and "7" print the same, so they may not coexist
  spec.states = {std::string("a"), std::int64_t{7}, std::string("7")};
  CHECK(code_of([&] { LoopFreeChain::from_spec(spec); }) == ErrorCode::MalformedInput);

  spec.states = {std::string("a"), std::string("a"), std::string("b")};
  CHECK(code_of([&] { LoopFreeChain::from_spec(spec); }) == ErrorCode::MalformedInput);
}

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "apo/errors.hpp"
#include "apo/instance_io.hpp"
#include "apo/instances.hpp"

using namespace apo;

namespace {

void expect_invariants(const Instance& inst) {
  for (std::size_t x = 0; x < inst.n_contexts(); ++x) {
    for (std::size_t a = 0; a < inst.n_actions(); ++a) {
      // Unit normalization can overshoot by one rounding step.
      EXPECT_LE(inst.feature(x, a).norm(), inst.L() * (1.0 + 1e-15));
    }
  }
  EXPECT_LE(inst.theta_star().norm(), inst.S() * (1.0 + 1e-15));
  if (inst.zero_sum_constraint()) {
    EXPECT_NEAR(inst.theta_star().sum(), 0.0, 1e-12);
  }
}

}  // namespace

TEST(LowerBoundInstance, Geometry) {
  const std::size_t N = 101;
  const Instance inst = make_lower_bound_instance(N);
  EXPECT_EQ(inst.n_contexts(), N);
  EXPECT_EQ(inst.n_actions(), 2U);
  EXPECT_EQ(inst.dim(), 2U);
  EXPECT_NEAR(inst.S(), 9.21034, 1e-5);
  EXPECT_NEAR(inst.S(), 2.0 * std::log(100.0), 1e-12);
  EXPECT_EQ(inst.L(), 1.0);
  EXPECT_FALSE(inst.zero_sum_constraint());
  expect_invariants(inst);

  const double alpha = inst.S();
  EXPECT_NEAR(inst.theta_star()[0], alpha / 2.0, 1e-12);
  EXPECT_NEAR(inst.theta_star()[1], alpha * std::sqrt(3.0) / 2.0, 1e-12);
  const Vec zg = inst.difference({0, 0, 1});
  const Vec zb = inst.difference({lower_bound_bad_context(N), 0, 1});
  EXPECT_NEAR(zg[0], 1.0, 1e-15);
  EXPECT_NEAR(zg[1], 0.0, 1e-15);
  EXPECT_NEAR(zb[0], -0.5, 1e-15);
  EXPECT_NEAR(zb[1], std::sqrt(3.0) / 2.0, 1e-15);
  EXPECT_NEAR(inst.feature(0, 0).norm(), 0.5, 1e-15);
}

TEST(LowerBoundInstance, EveryContextPrefersFirstAction) {
  const std::size_t N = 40;
  const Instance inst = make_lower_bound_instance(N);
  for (std::size_t x = 0; x < N; ++x) {
    EXPECT_NEAR(latent_reward(inst, x, 0) - latent_reward(inst, x, 1), inst.S() / 2.0, 1e-12);
    EXPECT_NEAR(pref_prob(inst, {x, 0, 1}), 1.0 - 1.0 / N, 1e-12);
  }
}

TEST(LowerBoundInstance, RejectsSmallN) {
  EXPECT_THROW(make_lower_bound_instance(2), InvalidInstance);
}

TEST(HypercubeInstance, OneDimensionHandEnumeration) {
  Rng rng = make_rng(0, 0, 0);
  const Instance inst = make_hypercube_instance(1, 1, rng);
  EXPECT_EQ(inst.n_actions(), 2U);
  EXPECT_NEAR(std::abs(inst.theta_star()[0]), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(inst.feature(0, 0)[0]), 0.5, 1e-15);
  // Choosing the action with the wrong sign costs |theta*| * 1 = 1.
  const std::size_t best = greedy_policy(inst, inst.theta_star()).action(0);
  EXPECT_NEAR(suboptimality_gap(inst, Policy::deterministic({1 - best})), 1.0, 1e-15);
}

TEST(HypercubeInstance, OptimalActionMatchesSigns) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    Rng rng = make_rng(1, s, 0);
    const Instance inst = make_hypercube_instance(4, 100, rng);
    EXPECT_EQ(inst.n_actions(), 16U);
    EXPECT_NEAR(inst.S(), std::sqrt(4.0 / 100.0), 1e-15);
    EXPECT_NEAR(inst.L(), 1.0, 1e-15);
    expect_invariants(inst);
    for (std::size_t a = 0; a < 16; ++a) EXPECT_NEAR(inst.feature(0, a).norm(), 1.0, 1e-15);
    const std::size_t best = greedy_policy(inst, inst.theta_star()).action(0);
    const Vec f = inst.feature(0, best);
    for (int j = 0; j < 4; ++j) {
      EXPECT_GT(f[j] * inst.theta_star()[j], 0.0);
      EXPECT_NEAR(std::abs(inst.theta_star()[j]), 0.1, 1e-15);
    }
  }
}

TEST(HypercubeInstance, RejectsLargeDimension) {
  Rng rng = make_rng(0, 0, 0);
  EXPECT_THROW(make_hypercube_instance(13, 10, rng), InvalidInstance);
}

TEST(RandomInstance, InvariantsAndDeterminism) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    Rng r1 = make_rng(2, s, 0);
    Rng r2 = make_rng(2, s, 0);
    const Instance a = make_random_instance(5, 4, 3, 2.0, r1);
    const Instance b = make_random_instance(5, 4, 3, 2.0, r2);
    expect_invariants(a);
    EXPECT_TRUE(a.zero_sum_constraint());
    EXPECT_NEAR(a.theta_star().norm(), 2.0, 1e-12);
    EXPECT_NEAR(a.theta_star().sum(), 0.0, 1e-12);
    EXPECT_EQ(a.theta_star(), b.theta_star());
    for (std::size_t x = 0; x < 5; ++x) {
      EXPECT_EQ(a.context_features(x), b.context_features(x));
      for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(a.feature(x, k).norm(), 1.0, 1e-12);
    }
  }
}

TEST(RandomInstance, RejectsTrivialSubspace) {
  Rng rng = make_rng(0, 0, 0);
  EXPECT_THROW(make_random_instance(2, 2, 1, 1.0, rng), InvalidInstance);
}

TEST(InstanceSpec, ParsesEachKind) {
  EXPECT_EQ(parse_instance_spec(R"({"kind":"lower_bound","N":10})").N, 10U);
  const InstanceSpec h = parse_instance_spec(R"({"kind":"hypercube","d":3,"T_ref":9,"seed":4})");
  EXPECT_EQ(h.kind, InstanceKind::kHypercube);
  EXPECT_EQ(h.seed, 4U);
  const InstanceSpec r =
      parse_instance_spec(R"({"kind":"random","n_contexts":5,"n_actions":3,"d":4,"S":1.5})");
  EXPECT_EQ(r.label(), "random");
  EXPECT_EQ(r.S, 1.5);
  const Instance inst = build_instance(r);
  EXPECT_EQ(inst.n_contexts(), 5U);
  EXPECT_EQ(inst.dim(), 4U);
}

TEST(InstanceSpec, ErrorsNameTheField) {
  auto field_of = [](const std::string& text) {
    try {
      parse_instance_spec(text, "instance");
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("<none>");
  };
  EXPECT_EQ(field_of("{"), "instance");
  EXPECT_EQ(field_of(R"({"N":3})"), "instance.kind");
  EXPECT_EQ(field_of(R"({"kind":"lower_bound"})"), "instance.N");
  EXPECT_EQ(field_of(R"({"kind":"lower_bound","N":2})"), "instance.N");
  EXPECT_EQ(field_of(R"({"kind":"random","n_contexts":5,"n_actions":3,"d":4})"), "instance.S");
  EXPECT_EQ(field_of(R"({"kind":"hypercube","d":3,"T_ref":9,"bogus":1})"), "instance.bogus");
  EXPECT_EQ(field_of(R"({"kind":"circle"})"), "instance.kind");
}

TEST(InstanceIo, JsonRoundTripIsExact) {
  Rng rng = make_rng(3, 0, 0);
  const Instance inst = make_random_instance(4, 3, 3, 1.7, rng);
  const Instance back = instance_from_json(instance_to_json(inst));
  EXPECT_EQ(back.theta_star(), inst.theta_star());
  EXPECT_EQ(back.S(), inst.S());
  EXPECT_EQ(back.L(), inst.L());
  EXPECT_EQ(back.zero_sum_constraint(), inst.zero_sum_constraint());
  for (std::size_t x = 0; x < 4; ++x) EXPECT_EQ(back.context_features(x), inst.context_features(x));

  const auto path = std::filesystem::temp_directory_path() / "apo_instance_roundtrip.json";
  save_instance(inst, path);
  EXPECT_EQ(load_instance(path).theta_star(), inst.theta_star());
  std::filesystem::remove(path);
}

TEST(InstanceIo, RejectsUnknownKeys) {
  const Instance inst = make_lower_bound_instance(3);
  std::string text = instance_to_json(inst);
  text.insert(1, "\"extra\":1,");
  EXPECT_THROW(instance_from_json(text), ConfigError);
}

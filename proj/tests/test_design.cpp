#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "apo/design.hpp"
#include "apo/errors.hpp"
#include "apo/instances.hpp"

using namespace apo;

namespace {

Vec random_vec(Rng& rng, int d, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vec v(d);
  for (int j = 0; j < d; ++j) v[j] = normal(rng);
  return v;
}

Mat random_spd(Rng& rng, int d) {
  Mat A(d, d);
  for (int j = 0; j < d; ++j) A.col(j) = random_vec(rng, d);
  return A * A.transpose() + 0.5 * Mat::Identity(d, d);
}

double min_eig(const Mat& M) {
  return Eigen::SelfAdjointEigenSolver<Mat>(M).eigenvalues().minCoeff();
}

Instance test_instance(std::uint64_t seed, std::size_t n_ctx = 4, std::size_t n_act = 5,
                       std::size_t d = 3) {
  Rng rng = make_rng(5, seed, hash_name("design_test"));
  return make_random_instance(n_ctx, n_act, d, 1.5, rng);
}

}  // namespace

TEST(DefaultLambda, Formula) {
  EXPECT_NEAR(default_lambda_H(2.0), 1.0 / (4.0 * 4.0 * 36.0), 1e-15);
  EXPECT_EQ(default_lambda_H(0.0), 1.0);
}

TEST(BuildH, EmptyHistoryIsRidge) {
  const std::vector<Vec> none;
  EXPECT_EQ(build_H(none, Vec::Zero(3), 0.7), 0.7 * Mat::Identity(3, 3));
}

TEST(BuildH, SingleSampleAtZero) {
  Vec z(3);
  z << 1.0, -2.0, 0.5;
  const std::vector<Vec> h{z};
  const Mat expect = 0.25 * z * z.transpose() + 0.3 * Mat::Identity(3, 3);
  EXPECT_LE((build_H(h, Vec::Zero(3), 0.3) - expect).norm(), 1e-15);
}

TEST(BuildH, SymmetricWithRidgeFloor) {
  Rng rng = make_rng(0, 0, 1);
  for (int k = 0; k < 20; ++k) {
    std::vector<Vec> hist;
    for (int i = 0; i < 20; ++i) hist.push_back(random_vec(rng, 4));
    const Vec theta = random_vec(rng, 4, 3.0);
    const Mat H = build_H(hist, theta, 0.05);
    EXPECT_LE((H - H.transpose()).norm(), 1e-12);
    EXPECT_GE(min_eig(H), 0.05 - 1e-9);
    LogisticObjective obj(4);
    for (const auto& z : hist) obj.add(z, 1);
    EXPECT_LE((build_H(obj, theta, 0.05) - H).norm(), 1e-11);
  }
}

TEST(CovarianceMatrix, ZeroUpdateLeavesVUnchanged) {
  CovarianceMatrix V(3, 0.5);
  V.update(Vec::Zero(3));
  EXPECT_EQ(V.matrix(), 0.5 * Mat::Identity(3, 3));
}

TEST(CovarianceMatrix, CachedInverseStaysAccurate) {
  Rng rng = make_rng(0, 0, 2);
  CovarianceMatrix V(5, 0.1);
  double prev_det = V.matrix().determinant();
  for (int i = 0; i < 1000; ++i) {
    V.update(random_vec(rng, 5));
    const double det = V.matrix().determinant();
    EXPECT_GE(det, prev_det * (1.0 - 1e-12));
    prev_det = det;
    if (i % 97 == 0 || i == 999) {
      EXPECT_LE((V.inverse() * V.matrix() - Mat::Identity(5, 5)).norm(), 1e-8) << i;
      EXPECT_LE((V.inverse() - V.matrix().inverse()).norm(), 1e-8 * V.inverse().norm()) << i;
    }
  }
  EXPECT_EQ(V.n_updates(), 1000U);
  const Vec z = random_vec(rng, 5);
  EXPECT_NEAR(V.inv_quadratic(z), z.dot(V.matrix().inverse() * z), 1e-10);
}

TEST(WeightedInvNorm, IdentityGivesEuclideanNorm) {
  Vec z(3);
  z << 3.0, 4.0, 12.0;
  EXPECT_NEAR(weighted_inv_norm(Mat::Identity(3, 3), z), 13.0, 1e-14);
}

TEST(WeightedInvNorm, ScalingLaw) {
  Rng rng = make_rng(0, 0, 3);
  const Mat M = random_spd(rng, 4);
  const Vec z = random_vec(rng, 4);
  EXPECT_NEAR(weighted_inv_norm(9.0 * M, z), weighted_inv_norm(M, z) / 3.0, 1e-13);
}

TEST(WeightedInvNorm, MatchesExplicitInverse) {
  Rng rng = make_rng(0, 0, 4);
  for (int k = 0; k < 50; ++k) {
    const Mat M = random_spd(rng, 5);
    const Vec z = random_vec(rng, 5);
    EXPECT_NEAR(weighted_inv_norm(M, z), std::sqrt(z.dot(M.inverse() * z)), 1e-10);
  }
}

TEST(WeightedInvNorm, NonSpdThrows) {
  Mat M = Mat::Identity(2, 2);
  M(1, 1) = -1.0;
  EXPECT_THROW(weighted_inv_norm(M, Vec::Ones(2)), MatrixConditioning);
}

TEST(Bonus, IdentityDesignGivesNormAndIsSymmetric) {
  const Instance inst = test_instance(0);
  DesignMatrices D(inst.dim(), 1.0, 1.0);
  for (std::size_t a = 0; a < inst.n_actions(); ++a) {
    for (std::size_t b = 0; b < inst.n_actions(); ++b) {
      if (a == b) continue;
      EXPECT_NEAR(bonus(D, inst, {1, a, b}, true), inst.difference({1, a, b}).norm(), 1e-14);
      EXPECT_NEAR(bonus(D, inst, {1, a, b}, false), bonus(D, inst, {1, b, a}, false), 1e-15);
    }
  }
}

TEST(Bonus, ExploredDirectionShrinks) {
  Vec z0(3);
  z0 << 1.0, 1.0, 0.0;
  z0.normalize();
  DesignMatrices D(3, 0.1, 0.1);
  for (int i = 0; i < 50; ++i) D.update_V(z0);
  Rng rng = make_rng(0, 0, 5);
  for (int k = 0; k < 20; ++k) {
    Vec u = random_vec(rng, 3);
    u -= u.dot(z0) * z0;
    u.normalize();
    EXPECT_LT(weighted_inv_norm(D.V.matrix(), z0), weighted_inv_norm(D.V.matrix(), u));
  }
}

TEST(Bonus, NeverIncreasesForAddedDirection) {
  Rng rng = make_rng(0, 0, 6);
  CovarianceMatrix V(4, 0.2);
  for (int i = 0; i < 300; ++i) {
    const Vec z = random_vec(rng, 4);
    const double before = V.inv_quadratic(z);
    V.update(z);
    EXPECT_LE(V.inv_quadratic(z), before + 1e-12);
  }
}

TEST(BonusScanner, AgreesWithWeightedInvNorm) {
  Rng rng = make_rng(0, 0, 7);
  const Instance inst = test_instance(1, 3, 6, 4);
  const Mat M = random_spd(rng, 4);
  const BonusScanner scan(M);
  std::vector<double> out;
  for (std::size_t x = 0; x < 3; ++x) {
    scan.context_bonuses(inst, x, out);
    std::size_t k = 0;
    for (std::size_t a = 0; a < 6; ++a) {
      for (std::size_t b = a + 1; b < 6; ++b, ++k) {
        const Vec z = inst.difference({x, a, b});
        EXPECT_NEAR(out[k], weighted_inv_norm(M, z), 1e-12);
        EXPECT_NEAR(scan.bonus(z), weighted_inv_norm(M, z), 1e-12);
      }
    }
    EXPECT_EQ(k, out.size());
  }
}

TEST(SelectMaxBonus, MatchesExhaustiveRescan) {
  Rng rng = make_rng(0, 0, 8);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Instance inst = test_instance(s);
    const Mat M = random_spd(rng, 3);
    const Selection sel = select_max_bonus(M, inst);
    double best = -1.0;
    Triplet arg;
    for (std::size_t x = 0; x < inst.n_contexts(); ++x) {
      for (std::size_t a = 0; a < inst.n_actions(); ++a) {
        for (std::size_t b = a + 1; b < inst.n_actions(); ++b) {
          const double v = weighted_inv_norm(M, inst.difference({x, a, b}));
          if (v > best + 1e-12) {
            best = v;
            arg = {x, a, b};
          }
        }
      }
    }
    EXPECT_EQ(sel.triplet, arg);
    EXPECT_NEAR(sel.bonus, best, 1e-12);
  }
}

TEST(SelectMaxBonus, DegenerateInstanceTiesToLowestTriplet) {
  Mat phi = Mat::Zero(3, 2);
  phi.col(0).setConstant(0.5);
  const Instance inst({phi, phi}, Vec::Zero(2), 1.0, 1.0, false);
  const Selection sel = select_max_bonus(Mat::Identity(2, 2), inst);
  EXPECT_EQ(sel.triplet, (Triplet{0, 0, 1}));
  EXPECT_EQ(sel.bonus, 0.0);
}

TEST(SelectTopK, OrderedDistinctAndConsistentWithMax) {
  Rng rng = make_rng(0, 0, 9);
  const Instance inst = test_instance(3);
  const Mat M = random_spd(rng, 3);
  const auto top = select_top_k(M, inst, 12);
  ASSERT_EQ(top.size(), 12U);
  EXPECT_EQ(top.front().triplet, select_max_bonus(M, inst).triplet);
  std::set<Triplet> seen;
  for (std::size_t j = 0; j < top.size(); ++j) {
    EXPECT_TRUE(seen.insert(top[j].triplet).second);
    EXPECT_LT(top[j].triplet.a, top[j].triplet.a_prime);
    if (j > 0) {
      EXPECT_LE(top[j].bonus, top[j - 1].bonus);
    }
  }
  // Exhausting the pool returns every duel once.
  const std::size_t pool = inst.n_contexts() * inst.n_actions() * (inst.n_actions() - 1) / 2;
  EXPECT_EQ(select_top_k(M, inst, pool + 5).size(), pool);
}

TEST(SelectTopK, CandidatePathMatchesFullScan) {
  Rng rng = make_rng(0, 0, 10);
  const Instance inst = test_instance(4);
  const Mat M = random_spd(rng, 3);
  std::vector<Triplet> all;
  for (std::size_t x = 0; x < inst.n_contexts(); ++x) {
    for (std::size_t a = 0; a < inst.n_actions(); ++a) {
      for (std::size_t b = a + 1; b < inst.n_actions(); ++b) all.push_back({x, a, b});
    }
  }
  std::reverse(all.begin(), all.end());
  const auto full = select_top_k(M, inst, 7);
  const auto cand = select_top_k(M, inst, 7, all);
  ASSERT_EQ(full.size(), cand.size());
  for (std::size_t j = 0; j < full.size(); ++j) {
    EXPECT_EQ(full[j].triplet, cand[j].triplet);
    EXPECT_EQ(full[j].bonus, cand[j].bonus);
  }
}

TEST(EllipticPotential, EmptyHistory) {
  const PotentialAudit a = elliptic_potential_audit({}, 1.0, 3, 1.0);
  EXPECT_EQ(a.sum, 0.0);
  EXPECT_EQ(a.bound, 0.0);
  EXPECT_TRUE(a.ok);
}

TEST(EllipticPotential, HarmonicSumHandComputation) {
  const std::vector<Vec> hist(100, Vec::Ones(1));
  const PotentialAudit a = elliptic_potential_audit(hist, 1.0, 1, 1.0);
  double harmonic = 0.0;
  for (int s = 0; s < 100; ++s) harmonic += 1.0 / (1.0 + s);
  EXPECT_NEAR(a.sum, harmonic, 1e-12);
  EXPECT_NEAR(a.sum, 5.187, 1e-3);
  EXPECT_NEAR(a.bound, 2.0 * std::log(101.0), 1e-12);
  EXPECT_NEAR(a.bound, 9.231, 1e-3);
  EXPECT_TRUE(a.ok);
}

TEST(EllipticPotential, RandomUnitBallHistory) {
  Rng rng = make_rng(0, 0, 11);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Vec> hist;
  for (int i = 0; i < 500; ++i) {
    Vec z = random_vec(rng, 5);
    hist.push_back(z * (std::pow(unif(rng), 0.2) / z.norm()));
  }
  EXPECT_TRUE(elliptic_potential_audit(hist, 1.0, 5, 1.0).ok);
}

TEST(HDominatesV, EmptyHistoryHolds) {
  EXPECT_TRUE(h_dominates_v_check({}, Vec::Zero(3), 0.1, 7.0));
  EXPECT_NEAR(h_minus_v_min_eigenvalue({}, Vec::Zero(3), 0.1, 7.0), 0.0, 1e-12);
}

TEST(HDominatesV, HoldsWithTrueKappaFailsWithShrunkKappa) {
  // Saturated logits: z^T theta = 5 on every sample.
  Vec z(2);
  z << 1.0, 0.0;
  Vec theta(2);
  theta << 5.0, 0.0;
  const std::vector<Vec> hist(40, z);
  const double kappa = inverse_sigmoid_dot(5.0);
  EXPECT_TRUE(h_dominates_v_check(hist, theta, 0.01, kappa));
  EXPECT_FALSE(h_dominates_v_check(hist, theta, 0.01, kappa / 100.0));
}

TEST(HDominatesV, RandomTracesInsideTheBall) {
  Rng rng = make_rng(0, 0, 12);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Instance inst = test_instance(s);
    const double kappa = compute_kappa(inst);
    std::vector<Vec> hist;
    std::uniform_int_distribution<std::size_t> ctx(0, inst.n_contexts() - 1);
    std::uniform_int_distribution<std::size_t> act(0, inst.n_actions() - 1);
    for (int i = 0; i < 200; ++i) {
      const std::size_t a = act(rng);
      std::size_t b = act(rng);
      while (b == a) b = act(rng);
      hist.push_back(inst.difference({ctx(rng), a, b}));
    }
    Vec theta = random_vec(rng, 3);
    theta.array() -= theta.mean();
    theta *= inst.S() / theta.norm();
    EXPECT_TRUE(h_dominates_v_check(hist, theta, default_lambda_H(inst.S()), kappa));
  }
}

TEST(DesignMatrices, RidgeFloorsAndHistory) {
  Rng rng = make_rng(0, 0, 13);
  DesignMatrices D(3, 0.2, 0.9);
  for (int i = 0; i < 30; ++i) D.update_V(random_vec(rng, 3));
  D.rebuild_H(random_vec(rng, 3));
  EXPECT_EQ(D.history.size(), 30U);
  EXPECT_GE(min_eig(D.H), 0.2 - 1e-9);
  EXPECT_GE(min_eig(D.V.matrix()), 0.9 - 1e-9);
  EXPECT_LE((D.H - D.H.transpose()).norm(), 1e-12);
  EXPECT_LE((D.V.matrix() - D.V.matrix().transpose()).norm(), 1e-12);
}

#pragma once

#include <Eigen/Cholesky>
#include <cstddef>
#include <span>
#include <vector>

#include "apo/estimation.hpp"
#include "apo/model.hpp"

namespace apo {

// Ridge for H: 1 / (4 S^2 (2 + 2S)^2). Returns 1 when S == 0, where the
// formula degenerates.
double default_lambda_H(double S);

// sum_s sigmoid_dot(z_s^T theta) z_s z_s^T + lambda_H I.
Mat build_H(std::span<const Vec> history, const Vec& theta, double lambda_H);
// Same matrix from an objective's merged sample store.
Mat build_H(const LogisticObjective& data, const Vec& theta, double lambda_H);

// V = lambda I + sum z z^T with a cached inverse kept current by rank-one
// (Sherman-Morrison) updates and recomputed from scratch every
// kRefreshPeriod updates to bound the accumulated drift.
class CovarianceMatrix {
 public:
  static constexpr std::size_t kRefreshPeriod = 256;

  CovarianceMatrix(std::size_t dim, double lambda);

  void update(const Vec& z);
  const Mat& matrix() const { return V_; }
  const Mat& inverse() const { return V_inv_; }
  double lambda() const { return lambda_; }
  std::size_t n_updates() const { return n_updates_; }
  // z^T V^{-1} z through the cached inverse.
  double inv_quadratic(const Vec& z) const;

 private:
  Mat V_;
  Mat V_inv_;
  double lambda_;
  std::size_t n_updates_ = 0;
};

// Sigmoid-weighted matrix H and plain covariance V with their ridges and the
// history of observed differences.
struct DesignMatrices {
  DesignMatrices(std::size_t dim, double lambda_H, double lambda_V);

  // V += z z^T and z is appended to the history. H is untouched.
  void update_V(const Vec& z);
  // H = build_H(history, theta, lambda_H).
  void rebuild_H(const Vec& theta);

  Mat H;
  CovarianceMatrix V;
  double lambda_H;
  std::vector<Vec> history;
};

// sqrt(z^T M^{-1} z) through a Cholesky solve. Throws MatrixConditioning if M
// is not symmetric positive definite.
double weighted_inv_norm(const Mat& M, const Vec& z);

// Uncertainty of the duel t: ||z||_{H^{-1}} when use_H, else ||z||_{V^{-1}}.
double bonus(const DesignMatrices& D, const Instance& inst, const Triplet& t, bool use_H);

struct Selection {
  Triplet triplet;
  double bonus = 0.0;
};

// Evaluates ||phi(x,a) - phi(x,a')||_{M^{-1}} for many duels against one
// frozen matrix. M = L L^T is factored once; each context's features are
// mapped to Y = L^{-1} Phi^T, after which the bonus of (a, a') is the
// Euclidean distance between columns a and a' of Y.
class BonusScanner {
 public:
  // Throws MatrixConditioning if M is not SPD.
  explicit BonusScanner(const Mat& M);

  // Bonuses of every a < a' of context x in lexicographic pair order.
  void context_bonuses(const Instance& inst, std::size_t x, std::vector<double>& out) const;
  double bonus(const Vec& z) const;

 private:
  Eigen::LLT<Mat> llt_;
};

// Triplet (x, a < a') with the largest bonus under M; ties go to the
// lexicographically lowest (x, a, a').
Selection select_max_bonus(const Mat& M, const Instance& inst);

// The k highest-bonus distinct triplets among `candidates` (all a < a' when
// empty), ordered by decreasing bonus, ties to the lexicographically lowest.
std::vector<Selection> select_top_k(const Mat& M, const Instance& inst, std::size_t k,
                                    std::span<const Triplet> candidates = {});

struct PotentialAudit {
  double sum = 0.0;
  double bound = 0.0;
  bool ok = true;
};

// sum_s ||z_s||^2_{V_s^{-1}} with V_s = lambda_V I + sum_{r<s} z_r z_r^T,
// against 2 d log(1 + T L^2 / (lambda_V d)).
PotentialAudit elliptic_potential_audit(std::span<const Vec> history, double lambda_V,
                                        std::size_t d, double L);

// Smallest eigenvalue of kappa H - V where H = build_H(history, theta,
// lambda_base) and V = sum z z^T + kappa lambda_base I.
double h_minus_v_min_eigenvalue(std::span<const Vec> history, const Vec& theta,
                                double lambda_base, double kappa);
// True iff kappa H - V has no eigenvalue below -1e-8.
bool h_dominates_v_check(std::span<const Vec> history, const Vec& theta, double lambda_base,
                         double kappa);

}  // namespace apo

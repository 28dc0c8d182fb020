#include "apo/design.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "apo/errors.hpp"
#include "apo/kernels.hpp"

namespace apo {
namespace {

void check_square(const Mat& M, Eigen::Index d, const char* what) {
  if (M.rows() != M.cols() || M.rows() != d) {
    throw DimensionMismatch(std::string(what) + " has the wrong shape");
  }
}

// Columns of Y = L^{-1} Phi^T for context x.
Mat transformed_features(const Eigen::LLT<Mat>& llt, const Instance& inst, std::size_t x) {
  Mat Y = inst.context_features(x).transpose();
  llt.matrixL().solveInPlace(Y);
  return Y;
}

double pair_bonus(const Mat& Y, std::size_t a, std::size_t b) {
  const auto d = static_cast<std::size_t>(Y.rows());
  const std::span<const double> ya(Y.col(static_cast<Eigen::Index>(a)).data(), d);
  const std::span<const double> yb(Y.col(static_cast<Eigen::Index>(b)).data(), d);
  return std::sqrt(kernels::squared_distance(ya, yb));
}

}  // namespace

double default_lambda_H(double S) {
  if (S <= 0.0) return 1.0;
  const double w = 2.0 + 2.0 * S;
  return 1.0 / (4.0 * S * S * w * w);
}

Mat build_H(std::span<const Vec> history, const Vec& theta, double lambda_H) {
  const Eigen::Index d = theta.size();
  Mat H = lambda_H * Mat::Identity(d, d);
  for (const Vec& z : history) {
    if (z.size() != d) throw DimensionMismatch("history vector has the wrong dimension");
    H.selfadjointView<Eigen::Lower>().rankUpdate(z, sigmoid_dot(z.dot(theta)));
  }
  H.triangularView<Eigen::StrictlyUpper>() = H.transpose();
  return H;
}

Mat build_H(const LogisticObjective& data, const Vec& theta, double lambda_H) {
  Mat H = data.hessian(theta);
  H.diagonal().array() += lambda_H;
  return H;
}

CovarianceMatrix::CovarianceMatrix(std::size_t dim, double lambda)
    : V_(lambda * Mat::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim))),
      V_inv_((1.0 / lambda) *
             Mat::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim))),
      lambda_(lambda) {
  if (!(lambda > 0.0)) throw Error("covariance ridge must be > 0");
}

void CovarianceMatrix::update(const Vec& z) {
  if (z.size() != V_.rows()) throw DimensionMismatch("update vector has the wrong dimension");
  V_.noalias() += z * z.transpose();
  ++n_updates_;
  if (n_updates_ % kRefreshPeriod == 0) {
    V_inv_ = V_.llt().solve(Mat::Identity(V_.rows(), V_.cols()));
    return;
  }
  const Vec u = V_inv_ * z;
  V_inv_.noalias() -= (u * u.transpose()) / (1.0 + z.dot(u));
}

double CovarianceMatrix::inv_quadratic(const Vec& z) const {
  if (z.size() != V_.rows()) throw DimensionMismatch("vector has the wrong dimension");
  return z.dot(V_inv_ * z);
}

DesignMatrices::DesignMatrices(std::size_t dim, double lambda_H_, double lambda_V)
    : H(lambda_H_ * Mat::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim))),
      V(dim, lambda_V),
      lambda_H(lambda_H_) {
  if (!(lambda_H_ > 0.0)) throw Error("lambda_H must be > 0");
}

void DesignMatrices::update_V(const Vec& z) {
  V.update(z);
  history.push_back(z);
}

void DesignMatrices::rebuild_H(const Vec& theta) { H = build_H(history, theta, lambda_H); }

double weighted_inv_norm(const Mat& M, const Vec& z) {
  check_square(M, z.size(), "weighted-norm matrix");
  Eigen::LLT<Mat> llt(M);
  if (llt.info() != Eigen::Success) throw MatrixConditioning("matrix is not positive definite");
  const Vec w = llt.matrixL().solve(z);
  return w.norm();
}

double bonus(const DesignMatrices& D, const Instance& inst, const Triplet& t, bool use_H) {
  return weighted_inv_norm(use_H ? D.H : D.V.matrix(), inst.difference(t));
}

BonusScanner::BonusScanner(const Mat& M) : llt_(M) {
  if (M.rows() != M.cols()) throw DimensionMismatch("bonus matrix must be square");
  if (llt_.info() != Eigen::Success) throw MatrixConditioning("matrix is not positive definite");
}

void BonusScanner::context_bonuses(const Instance& inst, std::size_t x,
                                   std::vector<double>& out) const {
  if (inst.dim() != static_cast<std::size_t>(llt_.rows())) {
    throw DimensionMismatch("instance dimension differs from the bonus matrix");
  }
  const Mat Y = transformed_features(llt_, inst, x);
  const std::size_t n = inst.n_actions();
  out.clear();
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) out.push_back(pair_bonus(Y, a, b));
  }
}

double BonusScanner::bonus(const Vec& z) const {
  if (z.size() != llt_.rows()) throw DimensionMismatch("vector has the wrong dimension");
  return llt_.matrixL().solve(z).norm();
}

Selection select_max_bonus(const Mat& M, const Instance& inst) {
  const BonusScanner scanner(M);
  const std::size_t n = inst.n_actions();
  if (n < 2) throw InvalidTriplet("selection needs at least two actions");
  Selection best{{0, 0, 1}, -1.0};
  std::vector<double> scores;
  for (std::size_t x = 0; x < inst.n_contexts(); ++x) {
    scanner.context_bonuses(inst, x, scores);
    std::size_t k = 0;
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b, ++k) {
        if (scores[k] > best.bonus) best = {{x, a, b}, scores[k]};
      }
    }
  }
  return best;
}

std::vector<Selection> select_top_k(const Mat& M, const Instance& inst, std::size_t k,
                                    std::span<const Triplet> candidates) {
  const BonusScanner scanner(M);
  const std::size_t n = inst.n_actions();
  std::vector<Selection> scored;
  if (candidates.empty()) {
    std::vector<double> scores;
    for (std::size_t x = 0; x < inst.n_contexts(); ++x) {
      scanner.context_bonuses(inst, x, scores);
      std::size_t i = 0;
      for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b, ++i) scored.push_back({{x, a, b}, scores[i]});
      }
    }
  } else {
    // Same arithmetic as the full scan so both paths agree bit for bit.
    Eigen::LLT<Mat> llt(M);
    std::map<std::size_t, Mat> Y_of;
    for (const Triplet& t : candidates) {
      inst.validate(t);
      auto it = Y_of.find(t.context);
      if (it == Y_of.end()) it = Y_of.emplace(t.context, transformed_features(llt, inst, t.context)).first;
      const std::size_t lo = std::min(t.a, t.a_prime);
      const std::size_t hi = std::max(t.a, t.a_prime);
      scored.push_back({t, pair_bonus(it->second, lo, hi)});
    }
  }
  k = std::min(k, scored.size());
  auto better = [](const Selection& l, const Selection& r) {
    if (l.bonus != r.bonus) return l.bonus > r.bonus;
    return l.triplet < r.triplet;
  };
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end(),
                    better);
  scored.resize(k);
  return scored;
}

PotentialAudit elliptic_potential_audit(std::span<const Vec> history, double lambda_V,
                                        std::size_t d, double L) {
  PotentialAudit out;
  const double T = static_cast<double>(history.size());
  const double dd = static_cast<double>(d);
  out.bound = 2.0 * dd * std::log1p(T * L * L / (lambda_V * dd));
  CovarianceMatrix V(d, lambda_V);
  for (const Vec& z : history) {
    out.sum += V.inv_quadratic(z);
    V.update(z);
  }
  out.ok = out.sum <= out.bound + 1e-9;
  return out;
}

double h_minus_v_min_eigenvalue(std::span<const Vec> history, const Vec& theta,
                                double lambda_base, double kappa) {
  const Eigen::Index d = theta.size();
  const Mat H = build_H(history, theta, lambda_base);
  Mat V = kappa * lambda_base * Mat::Identity(d, d);
  for (const Vec& z : history) V.noalias() += z * z.transpose();
  const Mat diff = kappa * H - V;
  Eigen::SelfAdjointEigenSolver<Mat> eig(diff, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

bool h_dominates_v_check(std::span<const Vec> history, const Vec& theta, double lambda_base,
                         double kappa) {
  return h_minus_v_min_eigenvalue(history, theta, lambda_base, kappa) >= -1e-8;
}

}  // namespace apo

#include "apo/model.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "apo/errors.hpp"

namespace apo {
namespace {

constexpr double kNormSlack = 1e-12;
constexpr double kZeroSumTol = 1e-12;

}  // namespace

Instance::Instance(std::vector<Mat> features, Vec theta_star, double S,
                   double L, bool zero_sum_constraint)
    : features_(std::move(features)),
      theta_star_(std::move(theta_star)),
      S_(S),
      L_(L),
      zero_sum_(zero_sum_constraint),
      n_actions_(0) {
  if (features_.empty()) throw InvalidInstance("instance needs at least one context");
  if (!(S_ >= 0.0) || !std::isfinite(S_)) throw InvalidInstance("S must be finite and >= 0");
  if (!(L_ > 0.0) || !std::isfinite(L_)) throw InvalidInstance("L must be finite and > 0");
  const auto d = theta_star_.size();
  if (d == 0) throw InvalidInstance("dimension must be positive");
  n_actions_ = static_cast<std::size_t>(features_.front().rows());
  if (n_actions_ == 0) throw InvalidInstance("instance needs at least one action");
  for (std::size_t x = 0; x < features_.size(); ++x) {
    const Mat& phi = features_[x];
    if (static_cast<std::size_t>(phi.rows()) != n_actions_ || phi.cols() != d) {
      throw InvalidInstance("context " + std::to_string(x) +
                            " has a feature block of the wrong shape");
    }
    if (!phi.allFinite()) {
      throw InvalidInstance("context " + std::to_string(x) + " has non-finite features");
    }
    for (Eigen::Index a = 0; a < phi.rows(); ++a) {
      if (phi.row(a).norm() > L_ * (1.0 + kNormSlack)) {
        throw InvalidInstance("feature norm of (" + std::to_string(x) + ", " +
                              std::to_string(a) + ") exceeds L");
      }
    }
  }
  if (!theta_star_.allFinite()) throw InvalidInstance("theta_star must be finite");
  if (theta_star_.norm() > S_ * (1.0 + kNormSlack) + kNormSlack) {
    throw InvalidInstance("||theta_star|| exceeds S");
  }
  if (zero_sum_ && std::abs(theta_star_.sum()) > kZeroSumTol) {
    throw InvalidInstance("theta_star violates the zero-sum constraint");
  }
}

const Mat& Instance::context_features(std::size_t x) const {
  if (x >= features_.size()) {
    throw InvalidIndex("context index " + std::to_string(x) + " out of range");
  }
  return features_[x];
}

Vec Instance::feature(std::size_t x, std::size_t a) const {
  const Mat& phi = context_features(x);
  if (a >= n_actions_) throw InvalidIndex("action index " + std::to_string(a) + " out of range");
  return phi.row(static_cast<Eigen::Index>(a)).transpose();
}

void Instance::validate(const Triplet& t) const {
  if (t.context >= n_contexts() || t.a >= n_actions_ || t.a_prime >= n_actions_) {
    throw InvalidTriplet("triplet (" + std::to_string(t.context) + ", " +
                         std::to_string(t.a) + ", " + std::to_string(t.a_prime) +
                         ") out of range");
  }
  if (t.a == t.a_prime) throw InvalidTriplet("triplet actions must differ");
}

Vec Instance::difference(const Triplet& t) const {
  validate(t);
  const Mat& phi = features_[t.context];
  return (phi.row(static_cast<Eigen::Index>(t.a)) -
          phi.row(static_cast<Eigen::Index>(t.a_prime)))
      .transpose();
}

PreferenceSample make_sample(const Instance& inst, const Triplet& t, int y) {
  return PreferenceSample{t, y, inst.difference(t)};
}

Policy Policy::deterministic(std::vector<std::size_t> actions) {
  std::vector<std::vector<std::size_t>> sets;
  sets.reserve(actions.size());
  for (std::size_t a : actions) sets.push_back({a});
  return Policy(std::move(sets));
}

Policy Policy::set_valued(std::vector<std::vector<std::size_t>> survivors) {
  for (const auto& s : survivors) {
    if (s.empty()) throw InvalidPolicy("set-valued policy has an empty survivor set");
  }
  return Policy(std::move(survivors));
}

bool Policy::is_deterministic() const {
  for (const auto& s : actions_) {
    if (s.size() != 1) return false;
  }
  return true;
}

std::size_t Policy::action(std::size_t x) const {
  if (x >= actions_.size()) throw InvalidPolicy("context out of range for policy");
  if (actions_[x].size() != 1) throw InvalidPolicy("policy is set-valued at this context");
  return actions_[x].front();
}

std::span<const std::size_t> Policy::survivors(std::size_t x) const {
  if (x >= actions_.size()) throw InvalidPolicy("context out of range for policy");
  return actions_[x];
}

void Policy::validate(std::size_t n_contexts, std::size_t n_actions) const {
  if (actions_.size() != n_contexts) {
    throw InvalidPolicy("policy covers " + std::to_string(actions_.size()) +
                        " contexts, instance has " + std::to_string(n_contexts));
  }
  for (const auto& s : actions_) {
    if (s.empty()) throw InvalidPolicy("empty survivor set");
    for (std::size_t a : s) {
      if (a >= n_actions) throw InvalidPolicy("policy action out of range");
    }
  }
}

double sigmoid(double w) {
  if (w >= 0.0) {
    return 1.0 / (1.0 + std::exp(-w));
  }
  const double e = std::exp(w);
  return e / (1.0 + e);
}

double sigmoid_dot(double w) {
  // Written through e = exp(-|w|) so both factors keep full relative precision.
  const double e = std::exp(-std::abs(w));
  const double denom = 1.0 + e;
  return e / (denom * denom);
}

double inverse_sigmoid_dot(double w) {
  const double a = std::abs(w);
  return 2.0 + std::exp(a) + std::exp(-a);
}

double softplus(double w) {
  return std::max(w, 0.0) + std::log1p(std::exp(-std::abs(w)));
}

double pref_prob(const Instance& inst, const Triplet& t) {
  return sigmoid(inst.difference(t).dot(inst.theta_star()));
}

int sample_preference(const Instance& inst, const Triplet& t, Rng& rng) {
  std::bernoulli_distribution coin(pref_prob(inst, t));
  return coin(rng) ? 1 : 0;
}

double latent_reward(const Instance& inst, std::size_t x, std::size_t a) {
  return inst.feature(x, a).dot(inst.theta_star());
}

double suboptimality_gap(const Instance& inst, const Policy& pol) {
  pol.validate(inst.n_contexts(), inst.n_actions());
  double worst = 0.0;
  for (std::size_t x = 0; x < inst.n_contexts(); ++x) {
    const Vec rewards = inst.context_features(x) * inst.theta_star();
    const double best = rewards.maxCoeff();
    for (std::size_t a : pol.survivors(x)) {
      worst = std::max(worst, best - rewards[static_cast<Eigen::Index>(a)]);
    }
  }
  return worst;
}

double compute_kappa(const Instance& inst) {
  double kappa = 4.0;
  const auto d = static_cast<double>(inst.dim());
  for (std::size_t x = 0; x < inst.n_contexts(); ++x) {
    const Mat& phi = inst.context_features(x);
    for (Eigen::Index a = 0; a < phi.rows(); ++a) {
      for (Eigen::Index b = a + 1; b < phi.rows(); ++b) {
        Vec z = (phi.row(a) - phi.row(b)).transpose();
        if (inst.zero_sum_constraint()) z.array() -= z.sum() / d;
        kappa = std::max(kappa, inverse_sigmoid_dot(inst.S() * z.norm()));
      }
    }
  }
  return kappa;
}

Policy greedy_policy(const Instance& inst, const Vec& theta) {
  if (static_cast<std::size_t>(theta.size()) != inst.dim()) {
    throw DimensionMismatch("theta has dimension " + std::to_string(theta.size()) +
                            ", instance has " + std::to_string(inst.dim()));
  }
  std::vector<std::size_t> actions(inst.n_contexts(), 0);
  for (std::size_t x = 0; x < inst.n_contexts(); ++x) {
    const Vec scores = inst.context_features(x) * theta;
    std::size_t best = 0;
    for (Eigen::Index a = 1; a < scores.size(); ++a) {
      if (scores[a] > scores[static_cast<Eigen::Index>(best)]) best = static_cast<std::size_t>(a);
    }
    actions[x] = best;
  }
  return Policy::deterministic(std::move(actions));
}

}  // namespace apo

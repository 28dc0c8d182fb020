#pragma once

// Contextual preference environment under the Bradley-Terry-Luce model:
// linear latent rewards r(x, a) = phi(x, a)^T theta*, duel outcomes
// y ~ Ber(sigmoid(z^T theta*)) with z = phi(x, a) - phi(x, a').

#include <Eigen/Core>
#include <compare>
#include <cstddef>
#include <span>
#include <vector>

#include "apo/rng.hpp"

namespace apo {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct Triplet {
  std::size_t context = 0;
  std::size_t a = 0;
  std::size_t a_prime = 0;

  friend auto operator<=>(const Triplet&, const Triplet&) = default;
};

class Instance {
 public:
  // `features[x]` is an (n_actions x d) matrix whose rows are phi(x, a).
  // Throws InvalidInstance when an invariant fails: ragged shapes, a feature
  // norm above L, ||theta_star|| above S, or a nonzero coordinate sum while
  // the zero-sum flag is set.
  Instance(std::vector<Mat> features, Vec theta_star, double S, double L,
           bool zero_sum_constraint);

  std::size_t n_contexts() const { return features_.size(); }
  std::size_t n_actions() const { return n_actions_; }
  std::size_t dim() const { return static_cast<std::size_t>(theta_star_.size()); }
  const Vec& theta_star() const { return theta_star_; }
  double S() const { return S_; }
  double L() const { return L_; }
  bool zero_sum_constraint() const { return zero_sum_; }

  const Mat& context_features(std::size_t x) const;
  Vec feature(std::size_t x, std::size_t a) const;

  // Throws InvalidTriplet for out-of-range indices or a == a_prime.
  void validate(const Triplet& t) const;
  // z = phi(x, a) - phi(x, a'); validates t.
  Vec difference(const Triplet& t) const;

 private:
  std::vector<Mat> features_;
  Vec theta_star_;
  double S_;
  double L_;
  bool zero_sum_;
  std::size_t n_actions_;
};

struct PreferenceSample {
  Triplet triplet;
  int y = 0;
  Vec z;
};

PreferenceSample make_sample(const Instance& inst, const Triplet& t, int y);

// Per-context action choice. A deterministic policy holds exactly one action
// per context; a set-valued policy holds a nonempty survivor set per context
// and is evaluated against its worst member.
class Policy {
 public:
  static Policy deterministic(std::vector<std::size_t> actions);
  static Policy set_valued(std::vector<std::vector<std::size_t>> survivors);

  std::size_t n_contexts() const { return actions_.size(); }
  bool is_deterministic() const;
  // Throws InvalidPolicy if the context holds more than one action.
  std::size_t action(std::size_t x) const;
  std::span<const std::size_t> survivors(std::size_t x) const;

  // Throws InvalidPolicy when the shape or any index is wrong for `n_actions`.
  void validate(std::size_t n_contexts, std::size_t n_actions) const;

 private:
  explicit Policy(std::vector<std::vector<std::size_t>> actions)
      : actions_(std::move(actions)) {}
  std::vector<std::vector<std::size_t>> actions_;
};

// 1 / (1 + e^{-w}), evaluated on the side of zero that never overflows.
double sigmoid(double w);
// sigma(w) * (1 - sigma(w)).
double sigmoid_dot(double w);
// 1 / sigmoid_dot(w) = 2 + e^w + e^{-w}.
double inverse_sigmoid_dot(double w);
// log(1 + e^w) without overflow.
double softplus(double w);

double pref_prob(const Instance& inst, const Triplet& t);
int sample_preference(const Instance& inst, const Triplet& t, Rng& rng);
double latent_reward(const Instance& inst, std::size_t x, std::size_t a);

double suboptimality_gap(const Instance& inst, const Policy& pol);

// Worst-case inverse link slope over all duels and all theta in the
// parameter set: max over (x, a != a') of 1 / sigmoid_dot(S * ||P z||), with P
// the projection onto the zero-sum subspace when the flag is set.
double compute_kappa(const Instance& inst);

// argmax_a phi(x, a)^T theta per context, ties to the lowest action index.
Policy greedy_policy(const Instance& inst, const Vec& theta);

}  // namespace apo

#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "apo/design.hpp"
#include "apo/estimation.hpp"
#include "apo/model.hpp"

namespace apo {

// One per-round metrics row.
struct RunRecord {
  std::size_t t = 0;
  // Suboptimality gap of the policy the learner would return if stopped now.
  double gap = 0.0;
  // ||theta_hat_t - theta*||_{H_t(theta_hat_t)}; NaN where undefined.
  double est_error = 0.0;
  // Bonus of the selected duel (the maximum over candidates for the active
  // learners).
  double max_bonus = 0.0;
  // Running sum of ||z_s||^2_{V_s^{-1}} (BTL learners) or of the selected
  // bonuses (general-preference learner).
  double potential_sum = 0.0;
  Triplet selected;
  // False for rounds in which no duel was queried.
  bool queried = true;
};

// True for the rounds that enter a trace: every round up to 2000, every
// 10th round after that, and the final round.
bool is_logged_round(std::size_t t, std::size_t T);

struct LearnerResult {
  Policy policy = Policy::deterministic({});
  std::vector<RunRecord> trace;
  // APO: theta_hat_1 .. theta_hat_{T+1}; Uniform: the single fit; batch APO:
  // the parameter after each batch.
  std::vector<Vec> theta_hats;
  std::vector<PreferenceSample> samples;
  double lambda_H = 0.0;
  double lambda_V = 0.0;
  double kappa = 0.0;
};

struct ApoConfig {
  // Ridge for H; default_lambda_H(S) when unset.
  std::optional<double> lambda_H;
  // Ridge for V; kappa * lambda_H when unset.
  std::optional<double> lambda_V;
  // Select with the H_t(theta_hat_t) bonus (true) or the V_t bonus (false).
  bool use_H = true;
  // Average theta_hat_2 .. theta_hat_{T+1} instead of theta_hat_1 .. theta_hat_T.
  bool average_shifted = false;
  // Record every round instead of the thinned schedule.
  bool log_every_round = false;
  MLEConfig mle;
};

// Learner state after t completed rounds.
struct ApoState {
  ApoState(const Instance& inst, double lambda_H, double lambda_V);

  std::vector<PreferenceSample> samples;
  // theta_hat_1 = 0, ..., theta_hat_{round+1}.
  std::vector<Vec> theta_hats;
  LogisticObjective data;
  // H = H_{round+1}(theta_hat_{round+1}); V = lambda_V I + sum z z^T.
  DesignMatrices design;
  std::size_t round = 0;
};

// Duel maximizing the bonus under H (use_H) or V; ties to the lowest
// (x, a, a').
Selection apo_select(const ApoState& state, const Instance& inst, bool use_H = true);

LearnerResult apo_run(const Instance& inst, std::size_t T, const ApoConfig& config, Rng& rng);

struct UniformConfig {
  std::optional<double> lambda_H;
  std::optional<double> lambda_V;
  bool log_every_round = false;
  MLEConfig mle;
};

// Contexts i.i.d. uniform, action pairs uniform over unordered distinct
// pairs, one MLE on all samples, greedy policy. Trace rows refit the MLE on
// the prefix at each logged round.
LearnerResult uniform_run(const Instance& inst, std::size_t T, const UniformConfig& config,
                          Rng& rng);

struct BatchApoConfig {
  std::size_t B = 1;
  double eta = 1.0;
  int n_inner = 10;
  std::optional<double> lambda_H;
  std::optional<double> lambda_V;
  // Cap on the candidate pool scored per batch; 0 scores every a < a' duel.
  std::size_t max_candidates = 0;
  bool log_every_round = false;
};

// Per batch: top-B duels by V bonus under the frozen V, labels, n_inner
// projected gradient steps of size eta on the mean log-loss over all data,
// then V += sum z z^T. Final policy is greedy in the last parameter.
LearnerResult batch_apo_run(const Instance& inst, std::size_t T, const BatchApoConfig& config,
                            Rng& rng);

}  // namespace apo

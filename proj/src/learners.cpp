#include "apo/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "apo/errors.hpp"

namespace apo {
namespace {

struct Ridges {
  double lambda_H;
  double lambda_V;
  double kappa;
};

Ridges resolve_ridges(const Instance& inst, std::optional<double> lambda_H,
                      std::optional<double> lambda_V) {
  Ridges r{};
  r.kappa = compute_kappa(inst);
  r.lambda_H = lambda_H ? *lambda_H : default_lambda_H(inst.S());
  r.lambda_V = lambda_V ? *lambda_V : r.kappa * r.lambda_H;
  if (!(r.lambda_H > 0.0)) throw Error("lambda_H must be > 0");
  if (!(r.lambda_V > 0.0)) throw Error("lambda_V must be > 0");
  return r;
}

double h_norm(const Mat& H, const Vec& v) { return std::sqrt(std::max(0.0, v.dot(H * v))); }

void check_horizon(std::size_t T) {
  if (T < 1) throw Error("horizon T must be >= 1");
}

// Uniformly random unordered pair a < a' of n actions.
std::pair<std::size_t, std::size_t> random_pair(std::size_t n, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, n * (n - 1) / 2 - 1);
  std::size_t k = pick(rng);
  for (std::size_t a = 0; a + 1 < n; ++a) {
    const std::size_t row = n - 1 - a;
    if (k < row) return {a, a + 1 + k};
    k -= row;
  }
  return {0, 1};
}

ThetaEstimate fit_at_round(const LogisticObjective& data, const Instance& inst,
                           const MLEConfig& cfg, std::size_t t) {
  try {
    return solve_mle(data, inst.S(), inst.zero_sum_constraint(), cfg);
  } catch (const NumericalFailure& e) {
    throw NumericalFailure("round " + std::to_string(t) + ": " + e.what(), e.iterate());
  }
}

}  // namespace

bool is_logged_round(std::size_t t, std::size_t T) {
  return t <= 2000 || t % 10 == 0 || t == T;
}

ApoState::ApoState(const Instance& inst, double lambda_H, double lambda_V)
    : theta_hats{Vec::Zero(static_cast<Eigen::Index>(inst.dim()))},
      data(inst.dim()),
      design(inst.dim(), lambda_H, lambda_V) {}

Selection apo_select(const ApoState& state, const Instance& inst, bool use_H) {
  return select_max_bonus(use_H ? state.design.H : state.design.V.matrix(), inst);
}

LearnerResult apo_run(const Instance& inst, std::size_t T, const ApoConfig& config, Rng& rng) {
  check_horizon(T);
  const Ridges r = resolve_ridges(inst, config.lambda_H, config.lambda_V);
  ApoState state(inst, r.lambda_H, r.lambda_V);
  LearnerResult out;
  out.lambda_H = r.lambda_H;
  out.lambda_V = r.lambda_V;
  out.kappa = r.kappa;

  Vec theta_sum = Vec::Zero(static_cast<Eigen::Index>(inst.dim()));
  double potential = 0.0;
  MLEConfig mle = config.mle;
  for (std::size_t t = 1; t <= T; ++t) {
    const Vec theta_t = state.theta_hats.back();
    const Selection sel = apo_select(state, inst, config.use_H);
    const double est_error = h_norm(state.design.H, theta_t - inst.theta_star());

    const int y = sample_preference(inst, sel.triplet, rng);
    PreferenceSample sample = make_sample(inst, sel.triplet, y);
    state.data.add(sample);
    potential += state.design.V.inv_quadratic(sample.z);
    state.design.update_V(sample.z);
    state.samples.push_back(std::move(sample));

    mle.init = theta_t;
    const ThetaEstimate fit = fit_at_round(state.data, inst, mle, t);
    state.theta_hats.push_back(fit.theta);
    state.design.H = build_H(state.data, fit.theta, r.lambda_H);
    state.round = t;

    theta_sum += config.average_shifted ? fit.theta : theta_t;
    if (config.log_every_round || is_logged_round(t, T)) {
      const Vec avg = theta_sum / static_cast<double>(t);
      out.trace.push_back({t, suboptimality_gap(inst, greedy_policy(inst, avg)), est_error,
                           sel.bonus, potential, sel.triplet, true});
    }
  }
  out.policy = greedy_policy(inst, theta_sum / static_cast<double>(T));
  out.theta_hats = std::move(state.theta_hats);
  out.samples = std::move(state.samples);
  return out;
}

LearnerResult uniform_run(const Instance& inst, std::size_t T, const UniformConfig& config,
                          Rng& rng) {
  check_horizon(T);
  if (inst.n_actions() < 2) throw InvalidTriplet("uniform learner needs at least two actions");
  const Ridges r = resolve_ridges(inst, config.lambda_H, config.lambda_V);
  LearnerResult out;
  out.lambda_H = r.lambda_H;
  out.lambda_V = r.lambda_V;
  out.kappa = r.kappa;

  std::uniform_int_distribution<std::size_t> pick_context(0, inst.n_contexts() - 1);
  LogisticObjective data(inst.dim());
  CovarianceMatrix V(inst.dim(), r.lambda_V);
  double potential = 0.0;
  MLEConfig mle = config.mle;
  std::optional<Vec> warm;
  for (std::size_t t = 1; t <= T; ++t) {
    const std::size_t x = pick_context(rng);
    const auto [a, b] = random_pair(inst.n_actions(), rng);
    const Triplet trip{x, a, b};
    const int y = sample_preference(inst, trip, rng);
    PreferenceSample sample = make_sample(inst, trip, y);
    const double bonus_t = std::sqrt(V.inv_quadratic(sample.z));
    potential += bonus_t * bonus_t;
    V.update(sample.z);
    data.add(sample);
    out.samples.push_back(std::move(sample));

    if (t == T) {
      // The learner's single fit on all T samples, from the default start.
      const ThetaEstimate fit = fit_at_round(data, inst, config.mle, t);
      const Mat H = build_H(data, fit.theta, r.lambda_H);
      out.policy = greedy_policy(inst, fit.theta);
      out.theta_hats.push_back(fit.theta);
      out.trace.push_back({t, suboptimality_gap(inst, out.policy),
                           h_norm(H, fit.theta - inst.theta_star()), bonus_t, potential, trip,
                           true});
    } else if (config.log_every_round || is_logged_round(t, T)) {
      mle.init = warm;
      const ThetaEstimate fit = fit_at_round(data, inst, mle, t);
      warm = fit.theta;
      const Mat H = build_H(data, fit.theta, r.lambda_H);
      out.trace.push_back({t, suboptimality_gap(inst, greedy_policy(inst, fit.theta)),
                           h_norm(H, fit.theta - inst.theta_star()), bonus_t, potential, trip,
                           true});
    }
  }
  return out;
}

LearnerResult batch_apo_run(const Instance& inst, std::size_t T, const BatchApoConfig& config,
                            Rng& rng) {
  check_horizon(T);
  if (config.B < 1) throw Error("batch size B must be >= 1");
  if (!(config.eta > 0.0)) throw Error("learning rate eta must be > 0");
  if (config.n_inner < 0) throw Error("n_inner must be >= 0");
  if (inst.n_actions() < 2) throw InvalidTriplet("batch APO needs at least two actions");
  const Ridges r = resolve_ridges(inst, config.lambda_H, config.lambda_V);
  LearnerResult out;
  out.lambda_H = r.lambda_H;
  out.lambda_V = r.lambda_V;
  out.kappa = r.kappa;

  const auto d = static_cast<Eigen::Index>(inst.dim());
  const std::size_t n = inst.n_actions();
  std::vector<Triplet> pool;
  for (std::size_t x = 0; x < inst.n_contexts(); ++x) {
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) pool.push_back({x, a, b});
    }
  }
  const bool subsample = config.max_candidates > 0 && config.max_candidates < pool.size();

  CovarianceMatrix V(inst.dim(), r.lambda_V);        // frozen within a batch
  CovarianceMatrix V_seq(inst.dim(), r.lambda_V);    // per-sample, for the potential
  LogisticObjective data(inst.dim());
  Vec theta = Vec::Zero(d);
  Vec grad(d);
  double potential = 0.0;
  std::size_t t = 0;
  while (t < T) {
    const std::size_t b = std::min(config.B, T - t);
    std::vector<Selection> picks;
    if (subsample) {
      std::vector<Triplet> cand;
      cand.reserve(config.max_candidates);
      std::sample(pool.begin(), pool.end(), std::back_inserter(cand), config.max_candidates, rng);
      picks = select_top_k(V.matrix(), inst, b, cand);
    } else {
      picks = select_top_k(V.matrix(), inst, b);
    }
    const std::size_t first_round = t + 1;
    std::vector<std::pair<Selection, double>> rows;
    for (const Selection& s : picks) {
      const int y = sample_preference(inst, s.triplet, rng);
      PreferenceSample sample = make_sample(inst, s.triplet, y);
      data.add(sample);
      potential += V_seq.inv_quadratic(sample.z);
      V_seq.update(sample.z);
      out.samples.push_back(std::move(sample));
      rows.emplace_back(s, potential);
    }
    const double scale = 1.0 / static_cast<double>(data.n_samples());
    for (int k = 0; k < config.n_inner; ++k) {
      const double f = data.loss_and_grad(theta, grad);
      if (!std::isfinite(f)) {
        throw NumericalFailure("round " + std::to_string(t + picks.size()) +
                                   ": non-finite log-loss",
                               theta);
      }
      theta = project_theta(theta - config.eta * scale * grad, inst.S(), inst.zero_sum_constraint());
    }
    for (std::size_t j = first_round - 1; j < out.samples.size(); ++j) V.update(out.samples[j].z);
    out.theta_hats.push_back(theta);

    const Policy pol = greedy_policy(inst, theta);
    const double gap = suboptimality_gap(inst, pol);
    const double err = h_norm(build_H(data, theta, r.lambda_H), theta - inst.theta_star());
    for (std::size_t j = 0; j < rows.size(); ++j) {
      const std::size_t round = first_round + j;
      if (config.log_every_round || is_logged_round(round, T)) {
        out.trace.push_back({round, gap, err, rows[j].first.bonus, rows[j].second,
                             rows[j].first.triplet, true});
      }
    }
    t += picks.size();
    if (picks.empty()) break;
  }
  out.policy = greedy_policy(inst, theta);
  return out;
}

}  // namespace apo

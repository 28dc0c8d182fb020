#include "apo/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "apo/errors.hpp"
#include "apo/kernels.hpp"

namespace apo {

LogisticObjective::LogisticObjective(std::size_t dim) : columns_(dim) {
  if (dim == 0) throw DimensionMismatch("objective dimension must be positive");
}

LogisticObjective::LogisticObjective(std::span<const PreferenceSample> samples,
                                     std::size_t dim)
    : LogisticObjective(dim) {
  for (const auto& s : samples) add(s);
}

void LogisticObjective::add(const Vec& z, int y) {
  if (static_cast<std::size_t>(z.size()) != dim()) {
    throw DimensionMismatch("sample has dimension " + std::to_string(z.size()) +
                            ", objective has " + std::to_string(dim()));
  }
  std::vector<double> key(z.begin(), z.end());
  auto [it, inserted] = row_of_.try_emplace(std::move(key), count_.size());
  if (inserted) {
    for (std::size_t j = 0; j < dim(); ++j) columns_[j].push_back(z[static_cast<Eigen::Index>(j)]);
    wins_.push_back(0.0);
    losses_.push_back(0.0);
    count_.push_back(0.0);
  }
  const std::size_t row = it->second;
  (y != 0 ? wins_ : losses_)[row] += 1.0;
  count_[row] += 1.0;
  ++n_samples_;
}

void LogisticObjective::check_dim(const Vec& theta) const {
  if (static_cast<std::size_t>(theta.size()) != dim()) {
    throw DimensionMismatch("theta has dimension " + std::to_string(theta.size()) +
                            ", samples have " + std::to_string(dim()));
  }
}

std::vector<double> LogisticObjective::logits(const Vec& theta) const {
  std::vector<double> w(count_.size(), 0.0);
  for (std::size_t j = 0; j < dim(); ++j) {
    kernels::axpy(theta[static_cast<Eigen::Index>(j)], columns_[j], w);
  }
  return w;
}

double LogisticObjective::loss(const Vec& theta) const {
  check_dim(theta);
  const std::vector<double> w = logits(theta);
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double tail = std::log1p(std::exp(-std::abs(w[i])));
    total += wins_[i] * (std::max(-w[i], 0.0) + tail) +
             losses_[i] * (std::max(w[i], 0.0) + tail);
  }
  return total;
}

double LogisticObjective::loss_and_grad(const Vec& theta, Vec& grad) const {
  check_dim(theta);
  std::vector<double> w = logits(theta);
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double e = std::exp(-std::abs(w[i]));
    const double tail = std::log1p(e);
    total += wins_[i] * (std::max(-w[i], 0.0) + tail) +
             losses_[i] * (std::max(w[i], 0.0) + tail);
    const double p = w[i] >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
    // Reuse the logit buffer for the residual count * sigma - wins.
    w[i] = count_[i] * p - wins_[i];
  }
  grad.resize(static_cast<Eigen::Index>(dim()));
  for (std::size_t j = 0; j < dim(); ++j) {
    grad[static_cast<Eigen::Index>(j)] = kernels::dot(w, columns_[j]);
  }
  return total;
}

Mat LogisticObjective::hessian(const Vec& theta) const {
  check_dim(theta);
  std::vector<double> weight = logits(theta);
  for (std::size_t i = 0; i < weight.size(); ++i) {
    weight[i] = count_[i] * sigmoid_dot(weight[i]);
  }
  const auto d = static_cast<Eigen::Index>(dim());
  Mat h(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index k = 0; k <= j; ++k) {
      const double v = kernels::weighted_dot(weight, columns_[static_cast<std::size_t>(j)],
                                             columns_[static_cast<std::size_t>(k)]);
      h(j, k) = v;
      h(k, j) = v;
    }
  }
  return h;
}

double log_loss(std::span<const PreferenceSample> samples, const Vec& theta) {
  if (samples.empty()) return 0.0;
  return LogisticObjective(samples, static_cast<std::size_t>(theta.size())).loss(theta);
}

Vec log_loss_grad(std::span<const PreferenceSample> samples, const Vec& theta) {
  Vec grad = Vec::Zero(theta.size());
  if (samples.empty()) return grad;
  LogisticObjective(samples, static_cast<std::size_t>(theta.size())).loss_and_grad(theta, grad);
  return grad;
}

Vec project_theta(const Vec& v, double S, bool zero_sum) {
  Vec out = v;
  if (zero_sum && out.size() > 0) out.array() -= out.mean();
  const double norm = out.norm();
  if (norm > S) {
    out *= (norm > 0.0 ? S / norm : 0.0);
  }
  return out;
}

ThetaEstimate solve_mle(const LogisticObjective& objective, double S,
                        bool zero_sum, const MLEConfig& config) {
  if (config.max_iters < 1) throw Error("MLEConfig.max_iters must be >= 1");
  if (!(config.tol > 0.0)) throw Error("MLEConfig.tol must be > 0");
  const auto d = static_cast<Eigen::Index>(objective.dim());
  Vec theta = config.init ? *config.init : Vec::Zero(d);
  if (theta.size() != d) throw DimensionMismatch("MLE init has the wrong dimension");
  theta = project_theta(theta, S, zero_sum);

  Vec grad(d);
  double f = objective.loss_and_grad(theta, grad);
  if (!std::isfinite(f)) throw NumericalFailure("non-finite log-loss at the initial point", theta);

  const bool fixed = config.step_size.has_value();
  const double ref_step = fixed ? *config.step_size : 1.0;
  if (!(ref_step > 0.0)) throw Error("MLEConfig.step_size must be > 0");

  ThetaEstimate best{theta, f, 0, false};
  double step = fixed ? ref_step : 1.0 / std::max(1.0, grad.lpNorm<Eigen::Infinity>());
  Vec cand(d);
  Vec cand_grad(d);
  int iter = 0;
  for (; iter < config.max_iters; ++iter) {
    const double mapping =
        (theta - project_theta(theta - ref_step * grad, S, zero_sum)).norm() / ref_step;
    if (mapping < config.tol) {
      best.converged = true;
      break;
    }
    double f_cand = 0.0;
    if (fixed) {
      cand = project_theta(theta - step * grad, S, zero_sum);
      f_cand = objective.loss_and_grad(cand, cand_grad);
      if (!std::isfinite(f_cand)) throw NumericalFailure("non-finite log-loss", cand);
    } else {
      bool accepted = false;
      for (int bt = 0; bt < 80; ++bt) {
        cand = project_theta(theta - step * grad, S, zero_sum);
        f_cand = objective.loss_and_grad(cand, cand_grad);
        if (!std::isfinite(f_cand)) throw NumericalFailure("non-finite log-loss", cand);
        // Near the optimum the decrease required by tol can sit below the
        // rounding noise of the summed loss; the slack lets the (exact)
        // gradient keep driving the iterate instead of stalling.
        const double noise = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(f));
        if (f_cand <= f + config.sufficient_decrease * grad.dot(cand - theta) + noise) {
          accepted = true;
          break;
        }
        step *= config.backtrack_factor;
      }
      if (!accepted) break;  // no decrease representable in floating point
    }
    const Vec s = cand - theta;
    const Vec yv = cand_grad - grad;
    theta = cand;
    grad = cand_grad;
    f = f_cand;
    if (f < best.final_loss) {
      best.theta = theta;
      best.final_loss = f;
    }
    if (!fixed) {
      const double sy = s.dot(yv);
      if (sy > 0.0) step = std::clamp(s.squaredNorm() / sy, 1e-12, 1e12);
    }
  }
  if (best.converged || f <= best.final_loss) {
    best.theta = theta;
    best.final_loss = f;
  }
  best.iterations = iter;
  return best;
}

ThetaEstimate solve_mle(std::span<const PreferenceSample> samples,
                        std::size_t dim, double S, bool zero_sum,
                        const MLEConfig& config) {
  return solve_mle(LogisticObjective(samples, dim), S, zero_sum, config);
}

double gamma_radius(double t, double d, double S, double delta, double C) {
  constexpr double e = std::numbers::e;
  const double a = std::max(S * t / d, e);
  const double b = std::max(t / delta, e);
  return C * std::pow(S, 1.5) * std::sqrt(d * std::log(a) + std::log(b));
}

double beta_mle_radius(double t, double d, double S, double delta) {
  constexpr double e = std::numbers::e;
  return std::sqrt(10.0 * d * std::log(S * t / (4.0 * d) + e) +
                   2.0 * (e - 2.0 + S) * std::log(1.0 / delta));
}

}  // namespace apo

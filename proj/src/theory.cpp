#include "apo/theory.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "apo/errors.hpp"
#include "apo/model.hpp"
#include "json.hpp"

namespace apo {
namespace {

// Quadrature over [0, 1] split into fixed panels first so the adaptive
// refinement never stops on a lucky three-point estimate.
template <class F>
double integrate_unit(F&& f, double tol) {
  constexpr int kPanels = 8;
  double total = 0.0;
  for (int k = 0; k < kPanels; ++k) {
    total += adaptive_simpson(f, static_cast<double>(k) / kPanels,
                              static_cast<double>(k + 1) / kPanels, tol / kPanels);
  }
  return total;
}

double log_sigmoid(double w) { return -softplus(-w); }

void finish(BoundReport& r) { r.ok = r.max_violation <= r.tolerance; }

}  // namespace

std::string BoundReport::to_json() const {
  nlohmann::json doc{{"name", name},
                     {"points_checked", points_checked},
                     {"max_violation", max_violation},
                     {"tolerance", tolerance},
                     {"ok", ok}};
  return doc.dump();
}

double tilde_alpha(double z, double z_prime, double tol) {
  const double dz = z_prime - z;
  return integrate_unit([&](double v) { return (1.0 - v) * sigmoid_dot(z + v * dz); }, tol);
}

double tilde_alpha_substituted(double z, double z_prime, double tol) {
  const double dz = z - z_prime;
  return integrate_unit([&](double v) { return v * sigmoid_dot(z_prime + v * dz); }, tol);
}

BoundReport check_self_concordance_bound(double grid_min, double grid_max, double step, double C,
                                         double quad_tol) {
  BoundReport r{"self_concordance", 0, -std::numeric_limits<double>::infinity(), 1e-9, true};
  const long long n = std::llround((grid_max - grid_min) / step);
  for (long long i = 0; i <= n; ++i) {
    const double z = grid_min + static_cast<double>(i) * step;
    for (long long j = 0; j <= n; ++j) {
      const double zp = grid_min + static_cast<double>(j) * step;
      const double w = 2.0 + std::abs(z - zp);
      const double rhs = sigmoid_dot(zp) / (C * w * w);
      r.max_violation = std::max(r.max_violation, rhs - tilde_alpha(z, zp, quad_tol));
      ++r.points_checked;
    }
  }
  finish(r);
  return r;
}

double kl_ber_logistic(double p_logit, double q_logit) {
  return sigmoid(-p_logit) * (q_logit - p_logit) + log_sigmoid(p_logit) - log_sigmoid(q_logit);
}

BoundReport check_kl_quadratic_bound(double grid_min, double grid_max, double step) {
  BoundReport r{"kl_quadratic", 0, -std::numeric_limits<double>::infinity(), 1e-12, true};
  const long long n = std::llround((grid_max - grid_min) / step);
  for (long long i = 0; i <= n; ++i) {
    const double p = grid_min + static_cast<double>(i) * step;
    for (long long j = 0; j <= n; ++j) {
      const double q = grid_min + static_cast<double>(j) * step;
      const double diff = p - q;
      r.max_violation = std::max(r.max_violation, kl_ber_logistic(p, q) - diff * diff / 8.0);
      ++r.points_checked;
    }
  }
  finish(r);
  return r;
}

double kl_divergence(std::span<const double> P, std::span<const double> Q) {
  if (P.size() != Q.size()) throw Error("distributions have different supports");
  double kl = 0.0;
  for (std::size_t i = 0; i < P.size(); ++i) {
    if (P[i] > 0.0) kl += P[i] * std::log(P[i] / Q[i]);
  }
  return kl;
}

BoundReport check_bretagnolle_huber(std::span<const double> P, std::span<const double> Q,
                                    std::optional<std::vector<bool>> event) {
  if (P.size() != Q.size() || P.empty()) throw Error("distributions have different supports");
  for (std::size_t i = 0; i < P.size(); ++i) {
    if (!(P[i] > 0.0) || !(Q[i] > 0.0)) throw Error("distributions must be strictly positive");
  }
  const std::size_t n = P.size();
  const double rhs = 0.5 * std::exp(-kl_divergence(P, Q));
  BoundReport r{"bretagnolle_huber", 0, -std::numeric_limits<double>::infinity(), 1e-12, true};
  auto check_mask = [&](auto in_event) {
    double pa = 0.0;
    double qc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (in_event(i)) {
        pa += P[i];
      } else {
        qc += Q[i];
      }
    }
    r.max_violation = std::max(r.max_violation, rhs - (pa + qc));
    ++r.points_checked;
  };
  if (event) {
    if (event->size() != n) throw Error("event mask has the wrong size");
    check_mask([&](std::size_t i) { return static_cast<bool>((*event)[i]); });
  } else {
    if (n > 16) throw Error("exhaustive event check supports at most 16 points");
    for (std::uint32_t mask = 0; mask < (1U << n); ++mask) {
      check_mask([&](std::size_t i) { return ((mask >> i) & 1U) != 0; });
    }
  }
  finish(r);
  return r;
}

double apo_rate_bound(double T, double d, double S, double kappa, double lambda_H, double delta,
                      double C) {
  const double conf = d * std::log(S * T / d) + std::log(T / delta);
  const double potential = std::log1p(T / (lambda_H * kappa * d));
  return C * std::pow(S, 1.5) * std::sqrt(conf * potential * kappa * d / T);
}

double gen_rate_bound(double T, double class_size, double d_E, double delta) {
  return std::sqrt(std::log(class_size * T / delta) * d_E / T);
}

}  // namespace apo

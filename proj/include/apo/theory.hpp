#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace apo {

struct BoundReport {
  std::string name;
  long long points_checked = 0;
  // Largest amount by which the inequality failed (<= 0 when it always held).
  double max_violation = 0.0;
  double tolerance = 0.0;
  bool ok = true;

  // {"name":..., "points_checked":..., "max_violation":..., "ok":...}
  std::string to_json() const;
};

// Adaptive Simpson quadrature of f over [a, b] to absolute accuracy tol.
template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol);

// int_0^1 (1 - v) sigmoid_dot(z + v (z' - z)) dv.
double tilde_alpha(double z, double z_prime, double tol = 1e-10);
// The same integral after v -> 1 - v: int_0^1 v sigmoid_dot(z' + v (z - z')) dv.
double tilde_alpha_substituted(double z, double z_prime, double tol = 1e-10);

// Checks tilde_alpha(z, z') >= sigmoid_dot(z') / (C (2 + |z - z'|)^2) on the
// square grid [grid_min, grid_max]^2.
BoundReport check_self_concordance_bound(double grid_min = -10.0, double grid_max = 10.0,
                                         double step = 0.1, double C = 1.01,
                                         double quad_tol = 1e-10);

// KL(Ber(sigmoid(p)) || Ber(sigmoid(q))).
double kl_ber_logistic(double p_logit, double q_logit);

// Checks KL(Ber(sigmoid(p)), Ber(sigmoid(q))) <= (p - q)^2 / 8 on a grid.
BoundReport check_kl_quadratic_bound(double grid_min = -10.0, double grid_max = 10.0,
                                     double step = 0.05);

// sum_i P_i log(P_i / Q_i).
double kl_divergence(std::span<const double> P, std::span<const double> Q);

// Checks P(A) + Q(A^c) >= exp(-KL(P, Q)) / 2 for the event given as a mask,
// or for all 2^n events when `event` is empty (n <= 16). Throws Error on a
// support mismatch, n > 16 with no event, or non-positive entries.
BoundReport check_bretagnolle_huber(std::span<const double> P, std::span<const double> Q,
                                    std::optional<std::vector<bool>> event = std::nullopt);

// C S^{3/2} sqrt((d log(S T / d) + log(T / delta)) log(1 + T / (lambda kappa d)) kappa d / T).
double apo_rate_bound(double T, double d, double S, double kappa, double lambda_H, double delta,
                      double C = 1.0);

// sqrt(log(class_size T / delta) d_E / T).
double gen_rate_bound(double T, double class_size, double d_E, double delta);

}  // namespace apo

#include "apo/detail/simpson.hpp"

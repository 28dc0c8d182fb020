#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "apo/model.hpp"

namespace apo {

struct MLEConfig {
  int max_iters = 2000;
  // Threshold on the norm of the gradient mapping theta - P(theta - step * g)
  // divided by step (step = 1 under backtracking).
  double tol = 1e-8;
  // Fixed step when set; otherwise Armijo backtracking from a
  // Barzilai-Borwein trial step.
  std::optional<double> step_size;
  double backtrack_factor = 0.5;
  double sufficient_decrease = 1e-4;
  // Starting point; zero when unset. Projected onto the parameter set first.
  std::optional<Vec> init;
};

struct ThetaEstimate {
  Vec theta;
  double final_loss = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Binary log-loss over a growing preference dataset, stored column-major
// (one array per feature coordinate) so that the per-sample arithmetic runs
// through the vector kernels. Samples with bit-identical z are merged into
// one row carrying win/loss counts; the loss is unchanged by the merge.
class LogisticObjective {
 public:
  explicit LogisticObjective(std::size_t dim);
  LogisticObjective(std::span<const PreferenceSample> samples, std::size_t dim);

  void add(const Vec& z, int y);
  void add(const PreferenceSample& s) { add(s.z, s.y); }

  std::size_t dim() const { return columns_.size(); }
  std::size_t n_samples() const { return n_samples_; }
  std::size_t n_unique() const { return count_.size(); }

  double loss(const Vec& theta) const;
  // Returns the loss and writes the gradient into `grad`.
  double loss_and_grad(const Vec& theta, Vec& grad) const;
  // sum_s sigmoid_dot(z_s^T theta) z_s z_s^T (the Hessian of the loss).
  Mat hessian(const Vec& theta) const;

 private:
  std::vector<double> logits(const Vec& theta) const;
  void check_dim(const Vec& theta) const;

  std::vector<std::vector<double>> columns_;
  std::vector<double> wins_;
  std::vector<double> losses_;
  std::vector<double> count_;
  std::map<std::vector<double>, std::size_t> row_of_;
  std::size_t n_samples_ = 0;
};

// -sum_s [y_s log sigmoid(z_s^T theta) + (1 - y_s) log(1 - sigmoid(z_s^T theta))]
double log_loss(std::span<const PreferenceSample> samples, const Vec& theta);
// sum_s (sigmoid(z_s^T theta) - y_s) z_s
Vec log_loss_grad(std::span<const PreferenceSample> samples, const Vec& theta);

// Euclidean projection onto {||theta|| <= S} intersected, when zero_sum is
// set, with {<1, theta> = 0}. The subspace contains the origin, so centring
// and then radially shrinking is the exact projection onto the intersection.
Vec project_theta(const Vec& v, double S, bool zero_sum);

// Constrained maximum likelihood by projected gradient descent.
// Throws NumericalFailure if the loss becomes non-finite.
ThetaEstimate solve_mle(const LogisticObjective& objective, double S,
                        bool zero_sum, const MLEConfig& config = {});
ThetaEstimate solve_mle(std::span<const PreferenceSample> samples,
                        std::size_t dim, double S, bool zero_sum,
                        const MLEConfig& config = {});

// C S^{3/2} sqrt(d log(S t / d) + log(t / delta)); both log arguments are
// clamped below at e.
double gamma_radius(double t, double d, double S, double delta, double C = 1.0);

// sqrt(10 d log(S t / (4 d) + e) + 2 (e - 2 + S) log(1 / delta))
double beta_mle_radius(double t, double d, double S, double delta);

}  // namespace apo

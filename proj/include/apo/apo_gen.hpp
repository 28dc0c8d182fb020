#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "apo/learners.hpp"
#include "apo/model.hpp"

namespace apo {

// Finite class of preference tables f(x, a, a') in [0, 1]. Every member
// satisfies f(x, a, a') + f(x, a', a) = 1 and has a Condorcet winner at every
// context (an action preferred with probability >= 1/2 over all others).
class FunctionClass {
 public:
  static constexpr double kTolerance = 1e-12;

  // values[i][x][a][a'] for member i. Throws InvalidInstance on shape,
  // range, complement or Condorcet violations, or a bad truth index.
  FunctionClass(std::vector<std::vector<std::vector<std::vector<double>>>> values,
                std::size_t truth_index);

  std::size_t size() const { return n_members_; }
  std::size_t n_contexts() const { return n_contexts_; }
  std::size_t n_actions() const { return n_actions_; }
  std::size_t truth_index() const { return truth_; }

  double value(std::size_t i, std::size_t x, std::size_t a, std::size_t a_prime) const {
    return table_[((i * n_contexts_ + x) * n_actions_ + a) * n_actions_ + a_prime];
  }
  double value(std::size_t i, const Triplet& t) const {
    return value(i, t.context, t.a, t.a_prime);
  }
  double truth(const Triplet& t) const { return value(truth_, t); }

  // Lowest-index Condorcet winner of member i at context x.
  std::size_t condorcet_winner(std::size_t i, std::size_t x) const;
  // a*(x): the Condorcet winner of the true member.
  std::size_t optimal_action(std::size_t x) const { return condorcet_winner(truth_, x); }

  void validate(const Triplet& t) const;

 private:
  std::vector<double> table_;
  std::size_t n_members_ = 0;
  std::size_t n_contexts_ = 0;
  std::size_t n_actions_ = 0;
  std::size_t truth_ = 0;
};

// JSON form {"n_contexts", "n_actions", "values": [[[[f]]]], "truth_index"}.
std::string function_class_to_json(const FunctionClass& F);
FunctionClass function_class_from_json(const std::string& text);
FunctionClass load_function_class(const std::filesystem::path& path);

// BTL class over an instance's features: member i is
// f_i(x, a, a') = sigmoid((phi(x,a) - phi(x,a'))^T theta_i), with theta_i
// ranging over the Cartesian grid grid_values^d (first coordinate slowest).
FunctionClass make_btl_grid_class(const Instance& inst, std::span<const double> grid_values,
                                  std::size_t truth_index);
// The grid parameter of member i of make_btl_grid_class.
Vec btl_grid_theta(std::size_t i, std::size_t d, std::span<const double> grid_values);

struct GenSample {
  Triplet triplet;
  int y = 0;
};

// argmin_i sum_s (y_s - f_i(s))^2, ties to the lowest index.
std::size_t least_squares_fit(const FunctionClass& F, std::span<const GenSample> samples);

// 2 log(2 N / delta) + 2 sqrt(log(4 t (t + 1) / delta)) + 4.
double beta_gen(std::size_t t, std::size_t class_size, double delta);

// {i : sum_s (f_i(s) - f_fit(s))^2 <= beta}, ascending.
std::vector<std::size_t> confidence_set(const FunctionClass& F, std::span<const GenSample> samples,
                                        std::size_t fit_index, double beta);

// max - min of f(x, a, a') over the confidence set.
double gen_bonus(const FunctionClass& F, std::span<const std::size_t> conf_set, const Triplet& t);

// {a in prev : f_fit(x,a,a0) + bonus(x,a,a0) >= 1/2 for all a0 in prev}; if
// empty, the single action maximizing min_{a0} (f_fit + bonus).
std::vector<std::size_t> eliminate_actions(const FunctionClass& F, std::size_t fit_index,
                                           std::span<const std::size_t> conf_set, std::size_t x,
                                           std::span<const std::size_t> prev_set);

// Pessimistic gap of a set-valued policy: max_x max_{a in pol(x)}
// f*(x, a*(x), a) - 1/2.
double gen_suboptimality(const FunctionClass& F, const Policy& pol);

enum class GenQueryRule {
  kActive,   // argmax of the bonus over active contexts and surviving pairs
  kUniform,  // uniformly random context and unordered action pair
};

struct GenConfig {
  double delta = 0.1;
  GenQueryRule rule = GenQueryRule::kActive;
  bool log_every_round = false;
};

struct GenResult {
  Policy policy = Policy::set_valued({});
  std::vector<RunRecord> trace;
  // Per round: whether the true member was in the confidence set, and
  // whether a*(x) was in every active set after elimination.
  std::vector<bool> realizable;
  std::vector<bool> optimal_retained;
  std::vector<GenSample> samples;
  // Rounds actually played; smaller than T once every context is retired.
  std::size_t rounds_played = 0;
};

GenResult apo_gen_run(const FunctionClass& F, std::size_t T, const GenConfig& config, Rng& rng);

}  // namespace apo

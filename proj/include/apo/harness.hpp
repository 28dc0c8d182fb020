#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "apo/apo_gen.hpp"
#include "apo/instances.hpp"
#include "apo/learners.hpp"

namespace apo {

enum class LearnerKind { kApo, kUniform, kBatchApo, kApoGen };

struct GenLearnerParams {
  std::vector<double> grid{-1.0, 0.0, 1.0};
  // Grid member used as the truth; the member nearest to theta* when unset.
  std::optional<std::size_t> truth_index;
  GenQueryRule rule = GenQueryRule::kActive;
};

struct LearnerSpec {
  LearnerKind kind = LearnerKind::kApo;
  // Name in the output ("apo", "uniform", "batch_apo", "apo_gen" unless
  // overridden by "label").
  std::string label;
  ApoConfig apo;
  UniformConfig uniform;
  BatchApoConfig batch;
  GenLearnerParams gen;
};

struct ExperimentConfig {
  InstanceSpec instance;
  std::vector<LearnerSpec> learners;
  std::size_t T = 0;
  std::vector<std::uint64_t> seeds;
  double delta = 0.1;
  std::optional<double> lambda_H;
  std::optional<double> lambda_V;
  std::string output_path = ".";
  std::uint64_t seed_base = 0;
  // Concurrent runs; 0 uses the hardware concurrency.
  std::size_t workers = 0;
};

// Parses and validates the JSON config. Errors name the offending field,
// e.g. "learners[0].params.B". Throws ConfigError.
ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::string& path);

struct RunOutput {
  std::string learner;
  std::uint64_t seed = 0;
  std::vector<RunRecord> trace;
  // Empty when the run succeeded.
  std::string error;
};

struct AggregateRow {
  std::string learner;
  std::size_t t = 0;
  double gap_mean = 0.0;
  double gap_q10 = 0.0;
  double gap_q90 = 0.0;
  double est_error_mean = 0.0;
  std::size_t n_seeds = 0;
};

struct ExperimentResult {
  std::vector<RunOutput> runs;  // ordered by (learner, seed) as configured
  std::vector<AggregateRow> aggregates;
  bool all_ok = true;
};

// Runs fn(0) .. fn(n-1) on up to `workers` threads (0 = hardware
// concurrency). The first exception thrown by fn is rethrown after all
// workers finish.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

// One learner on one seed. The generator is make_rng(seed_base, seed,
// hash_name(label)), so runs are independent of each other and of ordering.
RunOutput run_learner(const LearnerSpec& spec, const Instance& inst, std::size_t T,
                      std::uint64_t seed, std::uint64_t seed_base, double delta,
                      std::optional<double> lambda_H = std::nullopt,
                      std::optional<double> lambda_V = std::nullopt);

// Executes every (learner, seed) pair; failed runs are reported, not fatal.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const Instance& inst);

// Linear-interpolation empirical quantile of unsorted values, q in [0, 1].
double empirical_quantile(std::vector<double> values, double q);

// Per (learner, t): mean and 10/90% quantiles of the gap, mean est_error,
// over the successful runs. Throws Error if a learner's runs disagree on
// their round grid.
std::vector<AggregateRow> aggregate(const std::vector<RunOutput>& runs);

inline constexpr const char* kRawCsvHeader =
    "learner,instance,seed,t,gap,est_error,max_bonus,potential_sum,ctx,act_a,act_b";
inline constexpr const char* kAggregateCsvHeader =
    "learner,t,gap_mean,gap_q10,gap_q90,est_error_mean,n_seeds";

void write_raw_csv(std::ostream& out, const std::string& instance_label,
                   const std::vector<RunOutput>& runs);
void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows);
// Reads a raw CSV back into run streams (ordered as they appear).
std::vector<RunOutput> read_raw_csv(std::istream& in);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t points = 0;
  // Points skipped because the value was not positive (log undefined).
  std::size_t skipped = 0;
};

// Least-squares line through (log t, log value) over t_min <= t <= t_max.
SlopeFit fit_loglog_slope(const std::vector<std::size_t>& t, const std::vector<double>& value,
                          std::size_t t_min, std::size_t t_max);

// Writes <dir>/raw.csv and <dir>/aggregate.csv.
void write_experiment_outputs(const std::string& dir, const std::string& instance_label,
                              const ExperimentResult& result);

}  // namespace apo

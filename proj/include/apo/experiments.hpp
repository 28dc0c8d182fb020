#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "apo/learners.hpp"
#include "apo/theory.hpp"

namespace apo {

// Uniform Learner vs APO on make_lower_bound_instance(N), T rounds each,
// seeds 0 .. n_seeds-1 (generators as in run_learner with labels "uniform"
// and "apo").
struct LowerBoundSeed {
  std::uint64_t seed = 0;
  double uniform_bad_gap = 0.0;   // reward gap at the bad context
  double apo_gap = 0.0;           // suboptimality gap of APO's policy
  std::size_t apo_first_bad = 0;  // first round APO queried the bad context; 0 = never
  LearnerResult uniform;
  LearnerResult apo;
};

struct LowerBoundReport {
  std::size_t N = 0;
  std::size_t T = 0;
  double alpha = 0.0;
  std::vector<LowerBoundSeed> seeds;

  // Fraction of seeds whose uniform bad-context gap equals alpha/2.
  double uniform_fraction_at_half_alpha() const;
  double apo_fraction_zero_gap() const;
  double apo_mean_gap() const;
  // Largest first-bad-query round over seeds (0 if some seed never queried it).
  std::size_t apo_latest_first_bad() const;
  bool apo_always_queries_bad() const;
};

LowerBoundReport reproduce_lower_bound(std::size_t N, std::size_t T, std::size_t n_seeds,
                                       std::uint64_t seed_base = 0, std::size_t workers = 0);

// Bretagnolle-Huber on `pairs` random strictly positive distributions over
// `support` points with exhaustive events, merged into one report.
BoundReport check_bretagnolle_huber_random(std::size_t pairs, std::size_t support,
                                           std::uint64_t seed);

}  // namespace apo

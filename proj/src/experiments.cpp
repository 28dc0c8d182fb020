#include "apo/experiments.hpp"

#include <algorithm>
#include <cmath>

#include "apo/harness.hpp"
#include "apo/instances.hpp"

namespace apo {

double LowerBoundReport::uniform_fraction_at_half_alpha() const {
  if (seeds.empty()) return 0.0;
  const auto hits = std::count_if(seeds.begin(), seeds.end(), [&](const LowerBoundSeed& s) {
    return std::abs(s.uniform_bad_gap - alpha / 2.0) <= 1e-9 * alpha;
  });
  return static_cast<double>(hits) / static_cast<double>(seeds.size());
}

double LowerBoundReport::apo_fraction_zero_gap() const {
  if (seeds.empty()) return 0.0;
  const auto hits =
      std::count_if(seeds.begin(), seeds.end(), [](const LowerBoundSeed& s) { return s.apo_gap == 0.0; });
  return static_cast<double>(hits) / static_cast<double>(seeds.size());
}

double LowerBoundReport::apo_mean_gap() const {
  double sum = 0.0;
  for (const auto& s : seeds) sum += s.apo_gap;
  return seeds.empty() ? 0.0 : sum / static_cast<double>(seeds.size());
}

std::size_t LowerBoundReport::apo_latest_first_bad() const {
  std::size_t latest = 0;
  for (const auto& s : seeds) {
    if (s.apo_first_bad == 0) return 0;
    latest = std::max(latest, s.apo_first_bad);
  }
  return latest;
}

bool LowerBoundReport::apo_always_queries_bad() const {
  return std::all_of(seeds.begin(), seeds.end(),
                     [](const LowerBoundSeed& s) { return s.apo_first_bad != 0; });
}

LowerBoundReport reproduce_lower_bound(std::size_t N, std::size_t T, std::size_t n_seeds,
                                       std::uint64_t seed_base, std::size_t workers) {
  const Instance inst = make_lower_bound_instance(N);
  const std::size_t bad = lower_bound_bad_context(N);
  LowerBoundReport report;
  report.N = N;
  report.T = T;
  report.alpha = inst.S();
  report.seeds.resize(n_seeds);
  parallel_for(n_seeds, workers, [&](std::size_t k) {
    LowerBoundSeed& s = report.seeds[k];
    s.seed = k;
    Rng urng = make_rng(seed_base, k, hash_name("uniform"));
    s.uniform = uniform_run(inst, T, UniformConfig{}, urng);
    const std::size_t chosen = s.uniform.policy.action(bad);
    double best = -1e300;
    for (std::size_t a = 0; a < inst.n_actions(); ++a) best = std::max(best, latent_reward(inst, bad, a));
    s.uniform_bad_gap = best - latent_reward(inst, bad, chosen);

    Rng arng = make_rng(seed_base, k, hash_name("apo"));
    ApoConfig cfg;
    cfg.log_every_round = true;
    s.apo = apo_run(inst, T, cfg, arng);
    s.apo_gap = suboptimality_gap(inst, s.apo.policy);
    for (std::size_t t = 0; t < s.apo.samples.size(); ++t) {
      if (s.apo.samples[t].triplet.context == bad) {
        s.apo_first_bad = t + 1;
        break;
      }
    }
  });
  return report;
}

BoundReport check_bretagnolle_huber_random(std::size_t pairs, std::size_t support,
                                           std::uint64_t seed) {
  Rng rng = make_rng(seed, 0, hash_name("bretagnolle_huber"));
  std::uniform_real_distribution<double> unif(0.01, 1.0);
  BoundReport merged{"bretagnolle_huber", 0, -1e300, 1e-12, true};
  for (std::size_t k = 0; k < pairs; ++k) {
    std::vector<double> P(support);
    std::vector<double> Q(support);
    double sp = 0.0;
    double sq = 0.0;
    for (std::size_t i = 0; i < support; ++i) {
      P[i] = unif(rng);
      Q[i] = unif(rng);
      sp += P[i];
      sq += Q[i];
    }
    for (std::size_t i = 0; i < support; ++i) {
      P[i] /= sp;
      Q[i] /= sq;
    }
    const BoundReport r = check_bretagnolle_huber(P, Q);
    merged.points_checked += r.points_checked;
    merged.max_violation = std::max(merged.max_violation, r.max_violation);
  }
  merged.ok = merged.max_violation <= merged.tolerance;
  return merged;
}

}  // namespace apo

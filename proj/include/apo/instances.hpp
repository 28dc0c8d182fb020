#pragma once

#include <cstdint>
#include <string>

#include "apo/model.hpp"

namespace apo {

// Many-context instance on which uniform context sampling fails.
//
// N contexts, two actions each, d = 2. Contexts 0..N-2 are "good" with
// feature difference z_g = [1, 0]; context N-1 is the "bad" one with
// z_b = [-1/2, sqrt(3)/2]. theta* = alpha [1/2, sqrt(3)/2] bisects the two,
// alpha = 2 log(N - 1), so every duel has z^T theta* = alpha / 2 and action 0
// is optimal everywhere. Features are phi(x, 0) = z_x / 2, phi(x, 1) = -z_x / 2.
// Requires N >= 3.
Instance make_lower_bound_instance(std::size_t N);

// Index of the bad context in make_lower_bound_instance(N).
inline std::size_t lower_bound_bad_context(std::size_t N) { return N - 1; }

// Single context whose 2^d actions are the corners of {-1/2, 1/2}^d; action
// i has coordinate j equal to +1/2 iff bit j of i is set. theta* is drawn
// uniformly from {-1/sqrt(T_ref), +1/sqrt(T_ref)}^d. Requires 1 <= d <= 12.
Instance make_hypercube_instance(std::size_t d, std::size_t T_ref, Rng& rng);

// Features i.i.d. uniform on the unit sphere (L = 1); theta* uniform on the
// radius-S sphere inside the zero-sum subspace. Requires d >= 2.
Instance make_random_instance(std::size_t n_contexts, std::size_t n_actions,
                              std::size_t d, double S, Rng& rng);

enum class InstanceKind { kLowerBound, kHypercube, kRandom, kFile };

struct InstanceSpec {
  InstanceKind kind = InstanceKind::kRandom;
  std::size_t N = 0;            // lower_bound
  std::size_t d = 0;            // hypercube, random
  std::size_t T_ref = 0;        // hypercube
  std::size_t n_contexts = 0;   // random
  std::size_t n_actions = 0;    // random
  double S = 1.0;               // random
  std::uint64_t seed = 0;       // hypercube, random
  std::string path;             // file

  // Short label used in CSV output: "lower_bound", "hypercube", "random", "file".
  std::string label() const;
};

// Parses the JSON object form, e.g.
//   {"kind": "random", "n_contexts": 50, "n_actions": 10, "d": 5, "S": 2, "seed": 7}
// `field` prefixes error paths. Throws ConfigError.
InstanceSpec parse_instance_spec(const std::string& text, const std::string& field = "instance");

Instance build_instance(const InstanceSpec& spec);

}  // namespace apo

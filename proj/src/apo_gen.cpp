#include "apo/apo_gen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "apo/errors.hpp"
#include "json.hpp"

namespace apo {
namespace {

constexpr double kHalf = 0.5;

std::string member_path(std::size_t i, std::size_t x, std::size_t a, std::size_t b) {
  return "values[" + std::to_string(i) + "][" + std::to_string(x) + "][" + std::to_string(a) +
         "][" + std::to_string(b) + "]";
}

}  // namespace

FunctionClass::FunctionClass(std::vector<std::vector<std::vector<std::vector<double>>>> values,
                             std::size_t truth_index)
    : n_members_(values.size()), truth_(truth_index) {
  if (values.empty()) throw InvalidInstance("function class is empty");
  n_contexts_ = values[0].size();
  if (n_contexts_ == 0) throw InvalidInstance("function class has no contexts");
  n_actions_ = values[0][0].size();
  if (n_actions_ == 0) throw InvalidInstance("function class has no actions");
  if (truth_index >= n_members_) throw InvalidInstance("truth_index out of range");
  table_.reserve(n_members_ * n_contexts_ * n_actions_ * n_actions_);
  for (std::size_t i = 0; i < n_members_; ++i) {
    if (values[i].size() != n_contexts_) throw InvalidInstance("ragged function class");
    for (std::size_t x = 0; x < n_contexts_; ++x) {
      if (values[i][x].size() != n_actions_) throw InvalidInstance("ragged function class");
      for (std::size_t a = 0; a < n_actions_; ++a) {
        if (values[i][x][a].size() != n_actions_) throw InvalidInstance("ragged function class");
        for (std::size_t b = 0; b < n_actions_; ++b) {
          const double v = values[i][x][a][b];
          if (!(v >= 0.0 && v <= 1.0)) {
            throw InvalidInstance(member_path(i, x, a, b) + " outside [0, 1]");
          }
          table_.push_back(v);
        }
      }
    }
  }
  for (std::size_t i = 0; i < n_members_; ++i) {
    for (std::size_t x = 0; x < n_contexts_; ++x) {
      for (std::size_t a = 0; a < n_actions_; ++a) {
        for (std::size_t b = a; b < n_actions_; ++b) {
          if (std::abs(value(i, x, a, b) + value(i, x, b, a) - 1.0) > kTolerance) {
            throw InvalidInstance(member_path(i, x, a, b) + " violates f(x,a,a') + f(x,a',a) = 1");
          }
        }
      }
      condorcet_winner(i, x);  // throws if none exists
    }
  }
}

std::size_t FunctionClass::condorcet_winner(std::size_t i, std::size_t x) const {
  for (std::size_t a = 0; a < n_actions_; ++a) {
    bool wins = true;
    for (std::size_t b = 0; b < n_actions_ && wins; ++b) {
      wins = value(i, x, a, b) >= kHalf - kTolerance;
    }
    if (wins) return a;
  }
  throw InvalidInstance("member " + std::to_string(i) + " has no Condorcet winner at context " +
                        std::to_string(x));
}

void FunctionClass::validate(const Triplet& t) const {
  if (t.context >= n_contexts_ || t.a >= n_actions_ || t.a_prime >= n_actions_ ||
      t.a == t.a_prime) {
    throw InvalidTriplet("triplet out of range for the function class");
  }
}

std::string function_class_to_json(const FunctionClass& F) {
  using nlohmann::json;
  json values = json::array();
  for (std::size_t i = 0; i < F.size(); ++i) {
    json member = json::array();
    for (std::size_t x = 0; x < F.n_contexts(); ++x) {
      json ctx = json::array();
      for (std::size_t a = 0; a < F.n_actions(); ++a) {
        std::vector<double> row(F.n_actions());
        for (std::size_t b = 0; b < F.n_actions(); ++b) row[b] = F.value(i, x, a, b);
        ctx.push_back(row);
      }
      member.push_back(std::move(ctx));
    }
    values.push_back(std::move(member));
  }
  json doc{{"n_contexts", F.n_contexts()},
           {"n_actions", F.n_actions()},
           {"values", std::move(values)},
           {"truth_index", F.truth_index()}};
  return doc.dump();
}

FunctionClass function_class_from_json(const std::string& text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("function_class", std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("function_class", "expected a JSON object");
  static const std::set<std::string> kKnown{"n_contexts", "n_actions", "values", "truth_index"};
  for (const auto& [key, value] : doc.items()) {
    if (!kKnown.contains(key)) throw ConfigError("function_class." + key, "unknown field");
  }
  for (const auto& key : kKnown) {
    if (!doc.contains(key)) throw ConfigError("function_class." + key, "missing field");
  }
  try {
    const auto nx = doc.at("n_contexts").get<std::size_t>();
    const auto na = doc.at("n_actions").get<std::size_t>();
    auto values = doc.at("values").get<std::vector<std::vector<std::vector<std::vector<double>>>>>();
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (values[i].size() != nx) {
        throw ConfigError("function_class.values[" + std::to_string(i) + "]",
                          "context count differs from n_contexts");
      }
      for (const auto& ctx : values[i]) {
        if (ctx.size() != na) {
          throw ConfigError("function_class.values[" + std::to_string(i) + "]",
                            "action count differs from n_actions");
        }
      }
    }
    return FunctionClass(std::move(values), doc.at("truth_index").get<std::size_t>());
  } catch (const json::exception& e) {
    throw ConfigError("function_class", std::string("wrong value type: ") + e.what());
  } catch (const InvalidInstance& e) {
    throw ConfigError("function_class", e.what());
  }
}

FunctionClass load_function_class(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("function_class", "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return function_class_from_json(buffer.str());
}

Vec btl_grid_theta(std::size_t i, std::size_t d, std::span<const double> grid_values) {
  const std::size_t g = grid_values.size();
  Vec theta(static_cast<Eigen::Index>(d));
  for (std::size_t j = d; j-- > 0;) {
    theta[static_cast<Eigen::Index>(j)] = grid_values[i % g];
    i /= g;
  }
  return theta;
}

FunctionClass make_btl_grid_class(const Instance& inst, std::span<const double> grid_values,
                                  std::size_t truth_index) {
  if (grid_values.empty()) throw InvalidInstance("grid needs at least one value");
  const std::size_t d = inst.dim();
  std::size_t members = 1;
  for (std::size_t j = 0; j < d; ++j) {
    members *= grid_values.size();
    if (members > 1'000'000) throw InvalidInstance("grid class too large");
  }
  const std::size_t nx = inst.n_contexts();
  const std::size_t na = inst.n_actions();
  std::vector<std::vector<std::vector<std::vector<double>>>> values(
      members, std::vector<std::vector<std::vector<double>>>(
                   nx, std::vector<std::vector<double>>(na, std::vector<double>(na))));
  for (std::size_t i = 0; i < members; ++i) {
    const Vec theta = btl_grid_theta(i, d, grid_values);
    for (std::size_t x = 0; x < nx; ++x) {
      const Vec r = inst.context_features(x) * theta;
      for (std::size_t a = 0; a < na; ++a) {
        for (std::size_t b = 0; b < na; ++b) {
          values[i][x][a][b] = a == b ? kHalf
                                      : sigmoid(r[static_cast<Eigen::Index>(a)] -
                                                r[static_cast<Eigen::Index>(b)]);
        }
      }
    }
  }
  return FunctionClass(std::move(values), truth_index);
}

std::size_t least_squares_fit(const FunctionClass& F, std::span<const GenSample> samples) {
  std::size_t best = 0;
  double best_sse = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < F.size(); ++i) {
    double sse = 0.0;
    for (const auto& s : samples) {
      const double r = static_cast<double>(s.y) - F.value(i, s.triplet);
      sse += r * r;
    }
    if (sse < best_sse) {
      best_sse = sse;
      best = i;
    }
  }
  return best;
}

double beta_gen(std::size_t t, std::size_t class_size, double delta) {
  const double tt = static_cast<double>(t);
  return 2.0 * std::log(2.0 * static_cast<double>(class_size) / delta) +
         2.0 * std::sqrt(std::log(4.0 * tt * (tt + 1.0) / delta)) + 4.0;
}

std::vector<std::size_t> confidence_set(const FunctionClass& F, std::span<const GenSample> samples,
                                        std::size_t fit_index, double beta) {
  if (fit_index >= F.size()) throw InvalidIndex("fit index out of range");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < F.size(); ++i) {
    double sse = 0.0;
    for (const auto& s : samples) {
      const double r = F.value(i, s.triplet) - F.value(fit_index, s.triplet);
      sse += r * r;
    }
    if (sse <= beta || i == fit_index) out.push_back(i);
  }
  return out;
}

double gen_bonus(const FunctionClass& F, std::span<const std::size_t> conf_set, const Triplet& t) {
  if (conf_set.empty()) throw Error("confidence set is empty");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i : conf_set) {
    const double v = F.value(i, t);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return hi - lo;
}

std::vector<std::size_t> eliminate_actions(const FunctionClass& F, std::size_t fit_index,
                                           std::span<const std::size_t> conf_set, std::size_t x,
                                           std::span<const std::size_t> prev_set) {
  if (prev_set.empty()) throw Error("previous action set is empty");
  std::vector<std::size_t> kept;
  std::size_t fallback = prev_set.front();
  double fallback_score = -std::numeric_limits<double>::infinity();
  for (std::size_t a : prev_set) {
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t a0 : prev_set) {
      const Triplet t{x, a, a0};
      const double optimistic = F.value(fit_index, t) + (a == a0 ? 0.0 : gen_bonus(F, conf_set, t));
      worst = std::min(worst, optimistic);
    }
    if (worst >= kHalf - FunctionClass::kTolerance) kept.push_back(a);
    if (worst > fallback_score) {
      fallback_score = worst;
      fallback = a;
    }
  }
  if (kept.empty()) kept.push_back(fallback);
  return kept;
}

double gen_suboptimality(const FunctionClass& F, const Policy& pol) {
  pol.validate(F.n_contexts(), F.n_actions());
  double gap = -std::numeric_limits<double>::infinity();
  for (std::size_t x = 0; x < F.n_contexts(); ++x) {
    const std::size_t star = F.optimal_action(x);
    for (std::size_t a : pol.survivors(x)) {
      gap = std::max(gap, F.value(F.truth_index(), x, star, a) - kHalf);
    }
  }
  if (gap < -FunctionClass::kTolerance) {
    throw Error("negative general-preference gap; the Condorcet assumption is broken");
  }
  return gap;
}

GenResult apo_gen_run(const FunctionClass& F, std::size_t T, const GenConfig& config, Rng& rng) {
  if (T < 1) throw Error("horizon T must be >= 1");
  if (!(config.delta > 0.0 && config.delta < 1.0)) throw Error("delta must lie in (0, 1)");
  if (F.n_actions() < 2) throw Error("general-preference learner needs at least two actions");
  const std::size_t M = F.size();
  const std::size_t nx = F.n_contexts();
  const std::size_t na = F.n_actions();

  std::vector<std::vector<std::size_t>> active(nx);
  for (auto& s : active) {
    s.resize(na);
    for (std::size_t a = 0; a < na; ++a) s[a] = a;
  }
  std::vector<bool> context_active(nx, true);
  std::vector<double> sse(M, 0.0);            // sum (y - f_i)^2
  std::vector<double> pair_sse(M * M, 0.0);   // sum (f_i - f_j)^2

  GenResult out;
  double potential = 0.0;
  std::uniform_int_distribution<std::size_t> pick_context(0, nx - 1);
  std::uniform_int_distribution<std::size_t> pick_pair(0, na * (na - 1) / 2 - 1);
  auto policy_now = [&] { return Policy::set_valued(active); };

  for (std::size_t t = 1; t <= T; ++t) {
    const std::size_t fit =
        static_cast<std::size_t>(std::min_element(sse.begin(), sse.end()) - sse.begin());
    const double beta = beta_gen(t, M, config.delta / static_cast<double>(T));
    std::vector<std::size_t> conf;
    for (std::size_t i = 0; i < M; ++i) {
      if (pair_sse[fit * M + i] <= beta || i == fit) conf.push_back(i);
    }
    out.realizable.push_back(std::binary_search(conf.begin(), conf.end(), F.truth_index()));

    for (std::size_t x = 0; x < nx; ++x) {
      if (!context_active[x]) continue;
      active[x] = eliminate_actions(F, fit, conf, x, active[x]);
      if (active[x].size() == 1) context_active[x] = false;
    }
    bool retained = true;
    for (std::size_t x = 0; x < nx && retained; ++x) {
      retained = std::binary_search(active[x].begin(), active[x].end(), F.optimal_action(x));
    }
    out.optimal_retained.push_back(retained);

    Selection sel{{0, 0, 1}, -1.0};
    bool have = false;
    if (config.rule == GenQueryRule::kActive) {
      for (std::size_t x = 0; x < nx; ++x) {
        if (!context_active[x]) continue;
        const auto& A = active[x];
        for (std::size_t i = 0; i < A.size(); ++i) {
          for (std::size_t j = i + 1; j < A.size(); ++j) {
            const Triplet trip{x, A[i], A[j]};
            const double b = gen_bonus(F, conf, trip);
            if (b > sel.bonus) {
              sel = {trip, b};
              have = true;
            }
          }
        }
      }
    } else {
      std::size_t k = pick_pair(rng);
      const std::size_t x = pick_context(rng);
      for (std::size_t a = 0; a + 1 < na; ++a) {
        const std::size_t row = na - 1 - a;
        if (k < row) {
          sel.triplet = {x, a, a + 1 + k};
          break;
        }
        k -= row;
      }
      sel.bonus = gen_bonus(F, conf, sel.triplet);
      have = true;
    }

    const bool logged = config.log_every_round || is_logged_round(t, T);
    if (!have) {
      // Every context is retired; the remaining budget is never spent.
      if (logged) {
        out.trace.push_back({t, gen_suboptimality(F, policy_now()),
                             std::numeric_limits<double>::quiet_NaN(), 0.0, potential,
                             Triplet{0, 0, 0}, false});
      }
      continue;
    }
    std::bernoulli_distribution coin(F.truth(sel.triplet));
    const int y = coin(rng) ? 1 : 0;
    out.samples.push_back({sel.triplet, y});
    ++out.rounds_played;
    for (std::size_t i = 0; i < M; ++i) {
      const double fi = F.value(i, sel.triplet);
      const double r = static_cast<double>(y) - fi;
      sse[i] += r * r;
      for (std::size_t j = 0; j < M; ++j) {
        const double dlt = fi - F.value(j, sel.triplet);
        pair_sse[i * M + j] += dlt * dlt;
      }
    }
    potential += sel.bonus;
    if (logged) {
      out.trace.push_back({t, gen_suboptimality(F, policy_now()),
                           std::numeric_limits<double>::quiet_NaN(), sel.bonus, potential,
                           sel.triplet, true});
    }
  }
  out.policy = policy_now();
  return out;
}

}  // namespace apo

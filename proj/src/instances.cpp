#include "apo/instances.hpp"

#include <cmath>
#include <set>

#include "apo/errors.hpp"
#include "apo/instance_io.hpp"
#include "json.hpp"

namespace apo {
namespace {

Vec random_unit_vector(std::size_t d, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec v(static_cast<Eigen::Index>(d));
  do {
    for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = normal(rng);
  } while (v.norm() < 1e-12);
  return v / v.norm();
}

}  // namespace

Instance make_lower_bound_instance(std::size_t N) {
  if (N < 3) throw InvalidInstance("lower-bound instance needs N >= 3");
  const double alpha = 2.0 * std::log(static_cast<double>(N - 1));
  const double half_root3 = std::sqrt(3.0) / 2.0;
  Vec z_good(2);
  z_good << 1.0, 0.0;
  Vec z_bad(2);
  z_bad << -0.5, half_root3;
  Vec theta(2);
  theta << alpha * 0.5, alpha * half_root3;

  std::vector<Mat> features;
  features.reserve(N);
  for (std::size_t x = 0; x < N; ++x) {
    const Vec& z = (x == lower_bound_bad_context(N)) ? z_bad : z_good;
    Mat phi(2, 2);
    phi.row(0) = (z / 2.0).transpose();
    phi.row(1) = (-z / 2.0).transpose();
    features.push_back(std::move(phi));
  }
  return Instance(std::move(features), std::move(theta), alpha, 1.0, false);
}

Instance make_hypercube_instance(std::size_t d, std::size_t T_ref, Rng& rng) {
  if (d == 0 || d > 12) throw InvalidInstance("hypercube instance needs 1 <= d <= 12");
  if (T_ref == 0) throw InvalidInstance("hypercube instance needs T_ref >= 1");
  const std::size_t n_actions = std::size_t{1} << d;
  Mat phi(static_cast<Eigen::Index>(n_actions), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n_actions; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      phi(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          ((i >> j) & 1U) ? 0.5 : -0.5;
    }
  }
  const double magnitude = 1.0 / std::sqrt(static_cast<double>(T_ref));
  std::bernoulli_distribution coin(0.5);
  Vec theta(static_cast<Eigen::Index>(d));
  for (Eigen::Index j = 0; j < theta.size(); ++j) theta[j] = coin(rng) ? magnitude : -magnitude;
  const double S = std::sqrt(static_cast<double>(d) / static_cast<double>(T_ref));
  const double L = std::sqrt(static_cast<double>(d)) / 2.0;
  return Instance({std::move(phi)}, std::move(theta), S, L, false);
}

Instance make_random_instance(std::size_t n_contexts, std::size_t n_actions,
                              std::size_t d, double S, Rng& rng) {
  if (n_contexts == 0 || n_actions == 0 || d == 0) {
    throw InvalidInstance("random instance needs positive sizes");
  }
  if (d < 2) throw InvalidInstance("zero-sum subspace is trivial for d < 2");
  if (!(S > 0.0)) throw InvalidInstance("random instance needs S > 0");
  std::vector<Mat> features;
  features.reserve(n_contexts);
  for (std::size_t x = 0; x < n_contexts; ++x) {
    Mat phi(static_cast<Eigen::Index>(n_actions), static_cast<Eigen::Index>(d));
    for (std::size_t a = 0; a < n_actions; ++a) {
      phi.row(static_cast<Eigen::Index>(a)) = random_unit_vector(d, rng).transpose();
    }
    features.push_back(std::move(phi));
  }
  Vec theta;
  do {
    theta = random_unit_vector(d, rng);
    theta.array() -= theta.mean();
  } while (theta.norm() < 1e-6);
  theta *= S / theta.norm();
  // Re-centre after scaling so the coordinate sum is zero to rounding.
  theta.array() -= theta.mean();
  return Instance(std::move(features), std::move(theta), S, 1.0, true);
}

std::string InstanceSpec::label() const {
  switch (kind) {
    case InstanceKind::kLowerBound:
      return "lower_bound";
    case InstanceKind::kHypercube:
      return "hypercube";
    case InstanceKind::kRandom:
      return "random";
    case InstanceKind::kFile:
      return "file";
  }
  return "unknown";
}

InstanceSpec parse_instance_spec(const std::string& text, const std::string& field) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(field, std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError(field, "expected a JSON object");
  if (!doc.contains("kind")) throw ConfigError(field + ".kind", "missing field");

  InstanceSpec spec;
  std::set<std::string> allowed{"kind"};
  auto need_size = [&](const char* key) -> std::size_t {
    allowed.insert(key);
    if (!doc.contains(key)) throw ConfigError(field + "." + key, "missing field");
    const json& v = doc.at(key);
    if (!v.is_number_integer() || v.get<long long>() <= 0) {
      throw ConfigError(field + "." + key, "expected a positive integer");
    }
    return v.get<std::size_t>();
  };
  auto opt_seed = [&]() {
    allowed.insert("seed");
    if (doc.contains("seed")) {
      const json& v = doc.at("seed");
      if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw ConfigError(field + ".seed", "expected a nonnegative integer");
      }
      spec.seed = v.get<std::uint64_t>();
    }
  };

  const json& kind = doc.at("kind");
  if (!kind.is_string()) throw ConfigError(field + ".kind", "expected a string");
  const auto name = kind.get<std::string>();
  if (name == "lower_bound") {
    spec.kind = InstanceKind::kLowerBound;
    spec.N = need_size("N");
    if (spec.N < 3) throw ConfigError(field + ".N", "must be >= 3");
  } else if (name == "hypercube") {
    spec.kind = InstanceKind::kHypercube;
    spec.d = need_size("d");
    spec.T_ref = need_size("T_ref");
    if (spec.d > 12) throw ConfigError(field + ".d", "must be <= 12");
    opt_seed();
  } else if (name == "random") {
    spec.kind = InstanceKind::kRandom;
    spec.n_contexts = need_size("n_contexts");
    spec.n_actions = need_size("n_actions");
    spec.d = need_size("d");
    allowed.insert("S");
    if (!doc.contains("S")) throw ConfigError(field + ".S", "missing field");
    if (!doc.at("S").is_number() || !(doc.at("S").get<double>() > 0.0)) {
      throw ConfigError(field + ".S", "expected a positive number");
    }
    spec.S = doc.at("S").get<double>();
    if (spec.d < 2) throw ConfigError(field + ".d", "must be >= 2 for the zero-sum subspace");
    opt_seed();
  } else if (name == "file") {
    spec.kind = InstanceKind::kFile;
    allowed.insert("path");
    if (!doc.contains("path") || !doc.at("path").is_string()) {
      throw ConfigError(field + ".path", "expected a string");
    }
    spec.path = doc.at("path").get<std::string>();
  } else {
    throw ConfigError(field + ".kind", "unknown kind '" + name + "'");
  }
  for (const auto& [key, value] : doc.items()) {
    if (!allowed.contains(key)) throw ConfigError(field + "." + key, "unknown field");
  }
  return spec;
}

Instance build_instance(const InstanceSpec& spec) {
  switch (spec.kind) {
    case InstanceKind::kLowerBound:
      return make_lower_bound_instance(spec.N);
    case InstanceKind::kHypercube: {
      Rng rng = make_rng(spec.seed, 0, hash_name("instance"));
      return make_hypercube_instance(spec.d, spec.T_ref, rng);
    }
    case InstanceKind::kRandom: {
      Rng rng = make_rng(spec.seed, 0, hash_name("instance"));
      return make_random_instance(spec.n_contexts, spec.n_actions, spec.d, spec.S, rng);
    }
    case InstanceKind::kFile:
      return load_instance(spec.path);
  }
  throw InvalidInstance("unknown instance kind");
}

}  // namespace apo

#include "apo/instance_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "apo/errors.hpp"
#include "json.hpp"

namespace apo {

using nlohmann::json;

std::string instance_to_json(const Instance& inst) {
  json features = json::array();
  for (std::size_t x = 0; x < inst.n_contexts(); ++x) {
    const Mat& phi = inst.context_features(x);
    json ctx = json::array();
    for (Eigen::Index a = 0; a < phi.rows(); ++a) {
      ctx.push_back(std::vector<double>(phi.row(a).begin(), phi.row(a).end()));
    }
    features.push_back(std::move(ctx));
  }
  json doc{
      {"d", inst.dim()},
      {"S", inst.S()},
      {"L", inst.L()},
      {"zero_sum", inst.zero_sum_constraint()},
      {"theta_star", std::vector<double>(inst.theta_star().begin(), inst.theta_star().end())},
      {"features", std::move(features)},
  };
  return doc.dump();
}

Instance instance_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("instance", std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("instance", "expected a JSON object");
  static const std::set<std::string> kKnown{"d", "S", "L", "zero_sum", "theta_star", "features"};
  for (const auto& [key, value] : doc.items()) {
    if (!kKnown.contains(key)) throw ConfigError("instance." + key, "unknown field");
  }
  for (const auto& key : kKnown) {
    if (!doc.contains(key)) throw ConfigError("instance." + key, "missing field");
  }
  try {
    const auto d = doc.at("d").get<std::size_t>();
    const auto theta = doc.at("theta_star").get<std::vector<double>>();
    if (theta.size() != d) throw ConfigError("instance.theta_star", "length differs from d");
    const auto raw = doc.at("features").get<std::vector<std::vector<std::vector<double>>>>();
    std::vector<Mat> features;
    features.reserve(raw.size());
    for (std::size_t x = 0; x < raw.size(); ++x) {
      Mat phi(static_cast<Eigen::Index>(raw[x].size()), static_cast<Eigen::Index>(d));
      for (std::size_t a = 0; a < raw[x].size(); ++a) {
        if (raw[x][a].size() != d) {
          throw ConfigError("instance.features[" + std::to_string(x) + "][" +
                                std::to_string(a) + "]",
                            "length differs from d");
        }
        for (std::size_t j = 0; j < d; ++j) {
          phi(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(j)) = raw[x][a][j];
        }
      }
      features.push_back(std::move(phi));
    }
    return Instance(std::move(features),
                    Eigen::Map<const Vec>(theta.data(), static_cast<Eigen::Index>(d)),
                    doc.at("S").get<double>(), doc.at("L").get<double>(),
                    doc.at("zero_sum").get<bool>());
  } catch (const json::exception& e) {
    throw ConfigError("instance", std::string("wrong value type: ") + e.what());
  }
}

Instance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("instance", "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return instance_from_json(buffer.str());
}

void save_instance(const Instance& inst, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << instance_to_json(inst) << '\n';
}

}  // namespace apo

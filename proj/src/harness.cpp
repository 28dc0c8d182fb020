#include "apo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "apo/errors.hpp"
#include "json.hpp"

namespace apo {
namespace {

using nlohmann::json;

// Typed access to one JSON object with unknown-key rejection.
class Fields {
 public:
  Fields(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_, "expected a JSON object");
  }

  std::string at(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }
  bool has(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key);
  }
  const json& raw(const std::string& key) {
    if (!has(key)) throw ConfigError(at(key), "missing field");
    return obj_.at(key);
  }
  std::size_t positive_size(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number_integer() || v.get<long long>() <= 0) {
      throw ConfigError(at(key), "expected a positive integer");
    }
    return v.get<std::size_t>();
  }
  std::size_t size(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw ConfigError(at(key), "expected a nonnegative integer");
    }
    return v.get<std::size_t>();
  }
  double positive_number(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number() || !(v.get<double>() > 0.0) || !std::isfinite(v.get<double>())) {
      throw ConfigError(at(key), "expected a positive number");
    }
    return v.get<double>();
  }
  bool boolean(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(at(key), "expected true or false");
    return v.get<bool>();
  }
  std::string string(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigError(at(key), "expected a string");
    return v.get<std::string>();
  }
  void reject_unknown() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.contains(key)) throw ConfigError(at(key), "unknown field");
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

void parse_mle(Fields& p, MLEConfig& mle) {
  if (p.has("mle_max_iters")) {
    mle.max_iters = static_cast<int>(std::min<std::size_t>(p.positive_size("mle_max_iters"), 1'000'000));
  }
  if (p.has("mle_tol")) mle.tol = p.positive_number("mle_tol");
}

LearnerSpec parse_learner(const json& entry, const std::string& path) {
  Fields f(entry, path);
  LearnerSpec spec;
  const std::string name = f.string("name");
  spec.label = f.has("label") ? f.string("label") : name;
  if (spec.label.empty() || spec.label.find_first_of(",\"\n") != std::string::npos) {
    throw ConfigError(f.at("label"), "must be nonempty without commas, quotes or newlines");
  }
  static const json kEmpty = json::object();
  const json& params = f.has("params") ? f.raw("params") : kEmpty;
  Fields p(params, f.at("params"));
  if (name == "apo") {
    spec.kind = LearnerKind::kApo;
    if (p.has("use_H")) spec.apo.use_H = p.boolean("use_H");
    if (p.has("average_shifted")) spec.apo.average_shifted = p.boolean("average_shifted");
    parse_mle(p, spec.apo.mle);
  } else if (name == "uniform") {
    spec.kind = LearnerKind::kUniform;
    parse_mle(p, spec.uniform.mle);
  } else if (name == "batch_apo") {
    spec.kind = LearnerKind::kBatchApo;
    spec.batch.B = p.positive_size("B");
    if (p.has("eta")) spec.batch.eta = p.positive_number("eta");
    if (p.has("n_inner")) spec.batch.n_inner = static_cast<int>(std::min<std::size_t>(p.size("n_inner"), 1'000'000));
    if (p.has("max_candidates")) spec.batch.max_candidates = p.size("max_candidates");
  } else if (name == "apo_gen") {
    spec.kind = LearnerKind::kApoGen;
    if (p.has("grid")) {
      const json& g = p.raw("grid");
      if (!g.is_array() || g.empty()) throw ConfigError(p.at("grid"), "expected a nonempty array");
      spec.gen.grid.clear();
      for (const auto& v : g) {
        if (!v.is_number()) throw ConfigError(p.at("grid"), "expected numbers");
        spec.gen.grid.push_back(v.get<double>());
      }
    }
    if (p.has("truth_index")) spec.gen.truth_index = p.size("truth_index");
    if (p.has("rule")) {
      const std::string rule = p.string("rule");
      if (rule == "active") {
        spec.gen.rule = GenQueryRule::kActive;
      } else if (rule == "uniform") {
        spec.gen.rule = GenQueryRule::kUniform;
      } else {
        throw ConfigError(p.at("rule"), "expected \"active\" or \"uniform\"");
      }
    }
  } else {
    throw ConfigError(f.at("name"), "unknown learner '" + name + "'");
  }
  p.reject_unknown();
  f.reject_unknown();
  return spec;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::size_t nearest_grid_member(const Instance& inst, const std::vector<double>& grid) {
  std::size_t members = 1;
  for (std::size_t j = 0; j < inst.dim(); ++j) members *= grid.size();
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < members; ++i) {
    const double dist = (btl_grid_theta(i, inst.dim(), grid) - inst.theta_star()).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = i;
    }
  }
  return best;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("malformed JSON: ") + e.what());
  }
  Fields f(doc, "");
  ExperimentConfig cfg;
  cfg.instance = parse_instance_spec(f.raw("instance").dump(), "instance");
  const json& learners = f.raw("learners");
  if (!learners.is_array() || learners.empty()) {
    throw ConfigError("learners", "expected a nonempty array");
  }
  std::set<std::string> labels;
  for (std::size_t i = 0; i < learners.size(); ++i) {
    const std::string path = "learners[" + std::to_string(i) + "]";
    cfg.learners.push_back(parse_learner(learners[i], path));
    if (!labels.insert(cfg.learners.back().label).second) {
      throw ConfigError(path + ".label", "duplicate learner label '" + cfg.learners.back().label + "'");
    }
  }
  cfg.T = f.positive_size("T");
  const json& seeds = f.raw("seeds");
  if (!seeds.is_array() || seeds.empty()) throw ConfigError("seeds", "expected a nonempty array");
  std::set<std::uint64_t> distinct;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    if (!seeds[i].is_number_integer() || seeds[i].get<long long>() < 0) {
      throw ConfigError("seeds[" + std::to_string(i) + "]", "expected a nonnegative integer");
    }
    const auto s = seeds[i].get<std::uint64_t>();
    if (!distinct.insert(s).second) {
      throw ConfigError("seeds[" + std::to_string(i) + "]", "duplicate seed");
    }
    cfg.seeds.push_back(s);
  }
  if (f.has("delta")) {
    cfg.delta = f.positive_number("delta");
    if (!(cfg.delta < 1.0)) throw ConfigError("delta", "must lie in (0, 1)");
  }
  if (f.has("lambda_H")) cfg.lambda_H = f.positive_number("lambda_H");
  if (f.has("lambda_V")) cfg.lambda_V = f.positive_number("lambda_V");
  if (f.has("output_path")) cfg.output_path = f.string("output_path");
  if (f.has("seed_base")) {
    const json& v = f.raw("seed_base");
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw ConfigError("seed_base", "expected a nonnegative integer");
    }
    cfg.seed_base = v.get<std::uint64_t>();
  }
  if (f.has("workers")) cfg.workers = f.size("workers");
  f.reject_unknown();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_experiment_config(buffer.str());
}

void parallel_for(std::size_t n, std::size_t workers,
                  const std::function<void(std::size_t)>& fn) {
  if (workers == 0) workers = std::max(1U, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            const std::lock_guard lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
          }
        }
      });
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

RunOutput run_learner(const LearnerSpec& spec, const Instance& inst, std::size_t T,
                      std::uint64_t seed, std::uint64_t seed_base, double delta,
                      std::optional<double> lambda_H, std::optional<double> lambda_V) {
  RunOutput out;
  out.learner = spec.label;
  out.seed = seed;
  Rng rng = make_rng(seed_base, seed, hash_name(spec.label));
  try {
    switch (spec.kind) {
      case LearnerKind::kApo: {
        ApoConfig cfg = spec.apo;
        if (lambda_H) cfg.lambda_H = lambda_H;
        if (lambda_V) cfg.lambda_V = lambda_V;
        out.trace = apo_run(inst, T, cfg, rng).trace;
        break;
      }
      case LearnerKind::kUniform: {
        UniformConfig cfg = spec.uniform;
        if (lambda_H) cfg.lambda_H = lambda_H;
        if (lambda_V) cfg.lambda_V = lambda_V;
        out.trace = uniform_run(inst, T, cfg, rng).trace;
        break;
      }
      case LearnerKind::kBatchApo: {
        BatchApoConfig cfg = spec.batch;
        if (lambda_H) cfg.lambda_H = lambda_H;
        if (lambda_V) cfg.lambda_V = lambda_V;
        out.trace = batch_apo_run(inst, T, cfg, rng).trace;
        break;
      }
      case LearnerKind::kApoGen: {
        const std::size_t truth =
            spec.gen.truth_index ? *spec.gen.truth_index : nearest_grid_member(inst, spec.gen.grid);
        const FunctionClass F = make_btl_grid_class(inst, spec.gen.grid, truth);
        GenConfig cfg;
        cfg.delta = delta;
        cfg.rule = spec.gen.rule;
        out.trace = apo_gen_run(F, T, cfg, rng).trace;
        break;
      }
    }
  } catch (const std::exception& e) {
    out.trace.clear();
    out.error = e.what();
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Instance& inst) {
  ExperimentResult result;
  const std::size_t n_seeds = cfg.seeds.size();
  result.runs.resize(cfg.learners.size() * n_seeds);
  parallel_for(result.runs.size(), cfg.workers, [&](std::size_t k) {
    const LearnerSpec& spec = cfg.learners[k / n_seeds];
    result.runs[k] = run_learner(spec, inst, cfg.T, cfg.seeds[k % n_seeds], cfg.seed_base,
                                 cfg.delta, cfg.lambda_H, cfg.lambda_V);
  });
  for (const auto& r : result.runs) result.all_ok = result.all_ok && r.error.empty();
  result.aggregates = aggregate(result.runs);
  return result;
}

double empirical_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<AggregateRow> aggregate(const std::vector<RunOutput>& runs) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const RunOutput*>> by_learner;
  for (const auto& r : runs) {
    if (!r.error.empty()) continue;
    auto [it, inserted] = by_learner.try_emplace(r.learner);
    if (inserted) order.push_back(r.learner);
    it->second.push_back(&r);
  }
  std::vector<AggregateRow> rows;
  for (const auto& name : order) {
    const auto& group = by_learner[name];
    const auto& grid = group.front()->trace;
    for (const RunOutput* r : group) {
      bool same = r->trace.size() == grid.size();
      for (std::size_t i = 0; same && i < grid.size(); ++i) same = r->trace[i].t == grid[i].t;
      if (!same) throw Error("runs of learner '" + name + "' have different round grids");
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
      std::vector<double> gaps;
      double gap_sum = 0.0;
      double err_sum = 0.0;
      for (const RunOutput* r : group) {
        gaps.push_back(r->trace[i].gap);
        gap_sum += r->trace[i].gap;
        err_sum += r->trace[i].est_error;
      }
      const auto n = static_cast<double>(group.size());
      rows.push_back({name, grid[i].t, gap_sum / n, empirical_quantile(gaps, 0.1),
                      empirical_quantile(gaps, 0.9), err_sum / n, group.size()});
    }
  }
  return rows;
}

void write_raw_csv(std::ostream& out, const std::string& instance_label,
                   const std::vector<RunOutput>& runs) {
  out << kRawCsvHeader << '\n';
  for (const auto& r : runs) {
    for (const auto& rec : r.trace) {
      out << r.learner << ',' << instance_label << ',' << r.seed << ',' << rec.t << ','
          << format_double(rec.gap) << ',' << format_double(rec.est_error) << ','
          << format_double(rec.max_bonus) << ',' << format_double(rec.potential_sum) << ',';
      if (rec.queried) {
        out << rec.selected.context << ',' << rec.selected.a << ',' << rec.selected.a_prime;
      } else {
        out << "-1,-1,-1";
      }
      out << '\n';
    }
  }
}

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
  out << kAggregateCsvHeader << '\n';
  for (const auto& row : rows) {
    out << row.learner << ',' << row.t << ',' << format_double(row.gap_mean) << ','
        << format_double(row.gap_q10) << ',' << format_double(row.gap_q90) << ','
        << format_double(row.est_error_mean) << ',' << row.n_seeds << '\n';
  }
}

std::vector<RunOutput> read_raw_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kRawCsvHeader) {
    throw Error("raw CSV header mismatch");
  }
  std::vector<RunOutput> runs;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != 11) throw Error("raw CSV line " + std::to_string(line_no) + ": expected 11 cells");
    const std::uint64_t seed = std::stoull(cells[2]);
    if (runs.empty() || runs.back().learner != cells[0] || runs.back().seed != seed) {
      runs.push_back({cells[0], seed, {}, {}});
    }
    RunRecord rec;
    rec.t = std::stoull(cells[3]);
    rec.gap = std::strtod(cells[4].c_str(), nullptr);
    rec.est_error = std::strtod(cells[5].c_str(), nullptr);
    rec.max_bonus = std::strtod(cells[6].c_str(), nullptr);
    rec.potential_sum = std::strtod(cells[7].c_str(), nullptr);
    rec.queried = cells[8] != "-1";
    if (rec.queried) {
      rec.selected = {std::stoull(cells[8]), std::stoull(cells[9]), std::stoull(cells[10])};
    }
    runs.back().trace.push_back(rec);
  }
  return runs;
}

SlopeFit fit_loglog_slope(const std::vector<std::size_t>& t, const std::vector<double>& value,
                          std::size_t t_min, std::size_t t_max) {
  if (t.size() != value.size()) throw Error("slope fit needs matching t and value arrays");
  SlopeFit fit;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t_min || t[i] > t_max) continue;
    if (!(value[i] > 0.0)) {
      ++fit.skipped;
      continue;
    }
    const double x = std::log(static_cast<double>(t[i]));
    const double y = std::log(value[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++fit.points;
  }
  if (fit.points < 2) throw Error("slope fit needs at least two positive points");
  const auto n = static_cast<double>(fit.points);
  fit.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.intercept = (sy - fit.slope * sx) / n;
  return fit;
}

void write_experiment_outputs(const std::string& dir, const std::string& instance_label,
                              const ExperimentResult& result) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  std::ofstream raw(base / "raw.csv");
  std::ofstream agg(base / "aggregate.csv");
  if (!raw || !agg) throw Error("cannot write outputs under " + dir);
  write_raw_csv(raw, instance_label, result.runs);
  write_aggregate_csv(agg, result.aggregates);
}

}  // namespace apo

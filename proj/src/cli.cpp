#include "apo/cli.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "apo/errors.hpp"
#include "apo/experiments.hpp"
#include "apo/harness.hpp"
#include "apo/instance_io.hpp"
#include "apo/instances.hpp"
#include "apo/theory.hpp"

namespace apo {
namespace {

struct GlobalOptions {
  std::uint64_t seed_base = 0;
  bool quiet = false;
  std::size_t workers = 0;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("instance", "cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// Accepts an inline InstanceSpec object, a path to one, or a path to a full
// instance document.
std::pair<std::string, Instance> resolve_instance(const std::string& arg) {
  const bool inline_json = arg.find('{') != std::string::npos;
  const std::string text = inline_json ? arg : read_file(arg);
  if (text.find("\"kind\"") != std::string::npos) {
    const InstanceSpec spec = parse_instance_spec(text, "instance");
    return {spec.label(), build_instance(spec)};
  }
  return {"file", instance_from_json(text)};
}

void print_summary(const ExperimentResult& result) {
  std::printf("%-12s %8s %14s %14s %14s %14s %6s\n", "learner", "t", "gap_mean", "gap_q10",
              "gap_q90", "est_error", "seeds");
  for (std::size_t i = 0; i < result.aggregates.size(); ++i) {
    const AggregateRow& row = result.aggregates[i];
    const bool last = i + 1 == result.aggregates.size() ||
                      result.aggregates[i + 1].learner != row.learner;
    if (!last) continue;
    std::printf("%-12s %8zu %14.6g %14.6g %14.6g %14.6g %6zu\n", row.learner.c_str(), row.t,
                row.gap_mean, row.gap_q10, row.gap_q90, row.est_error_mean, row.n_seeds);
  }
  for (const auto& run : result.runs) {
    if (!run.error.empty()) {
      std::fprintf(stderr, "run failed: learner=%s seed=%llu: %s\n", run.learner.c_str(),
                   static_cast<unsigned long long>(run.seed), run.error.c_str());
    }
  }
}

int cmd_run(const GlobalOptions& g, const std::string& config_path, const std::string& out_dir,
            bool seed_base_given) {
  ExperimentConfig cfg = load_experiment_config(config_path);
  if (seed_base_given) cfg.seed_base = g.seed_base;
  if (g.workers) cfg.workers = g.workers;
  if (!out_dir.empty()) cfg.output_path = out_dir;
  const Instance inst = build_instance(cfg.instance);
  const ExperimentResult result = run_experiment(cfg, inst);
  write_experiment_outputs(cfg.output_path, cfg.instance.label(), result);
  if (!g.quiet) print_summary(result);
  return result.all_ok ? 0 : 1;
}

int cmd_compare(const GlobalOptions& g, const std::string& instance_arg,
                const std::string& learners, std::size_t T, std::size_t n_seeds,
                const std::string& out_dir) {
  auto [label, inst] = resolve_instance(instance_arg);
  ExperimentConfig cfg;
  cfg.T = T;
  cfg.seed_base = g.seed_base;
  cfg.workers = g.workers;
  for (std::size_t s = 0; s < n_seeds; ++s) cfg.seeds.push_back(s);
  std::stringstream ss(learners);
  std::size_t index = 0;
  for (std::string name; std::getline(ss, name, ','); ++index) {
    const std::string field = "learners[" + std::to_string(index) + "]";
    LearnerSpec spec;
    spec.label = name;
    if (name == "apo") {
      spec.kind = LearnerKind::kApo;
    } else if (name == "uniform") {
      spec.kind = LearnerKind::kUniform;
    } else if (name == "batch_apo") {
      spec.kind = LearnerKind::kBatchApo;
      spec.batch.B = 10;
    } else if (name == "apo_gen") {
      spec.kind = LearnerKind::kApoGen;
    } else {
      throw ConfigError(field, "unknown learner '" + name + "'");
    }
    for (const auto& other : cfg.learners) {
      if (other.label == name) throw ConfigError(field, "duplicate learner '" + name + "'");
    }
    cfg.learners.push_back(spec);
  }
  if (cfg.learners.empty()) throw ConfigError("learners", "no learner given");
  const ExperimentResult result = run_experiment(cfg, inst);
  if (!out_dir.empty()) write_experiment_outputs(out_dir, label, result);
  if (!g.quiet) print_summary(result);
  return result.all_ok ? 0 : 1;
}

int cmd_reproduce_lb(const GlobalOptions& g, std::size_t N, std::size_t T, std::size_t n_seeds,
                     const std::string& out_dir) {
  if (N < 3) throw ConfigError("N", "must be >= 3");
  const LowerBoundReport rep = reproduce_lower_bound(N, T, n_seeds, g.seed_base, g.workers);
  if (!out_dir.empty()) {
    ExperimentResult result;
    for (const char* name : {"uniform", "apo"}) {
      for (const auto& s : rep.seeds) {
        const LearnerResult& lr = std::string(name) == "apo" ? s.apo : s.uniform;
        result.runs.push_back({name, s.seed, lr.trace, {}});
      }
    }
    result.aggregates = aggregate(result.runs);
    write_experiment_outputs(out_dir, "lower_bound", result);
  }
  if (!g.quiet) {
    std::printf("lower-bound instance: N=%zu T=%zu seeds=%zu alpha=%.6f alpha/2=%.6f\n", N, T,
                n_seeds, rep.alpha, rep.alpha / 2.0);
    std::printf("uniform: bad-context gap = alpha/2 in %.1f%% of seeds (bound 1-2T/N = %.1f%%)\n",
                100.0 * rep.uniform_fraction_at_half_alpha(),
                100.0 * (1.0 - 2.0 * static_cast<double>(T) / static_cast<double>(N)));
    std::printf("apo: gap = 0 in %.1f%% of seeds, mean gap %.6f\n",
                100.0 * rep.apo_fraction_zero_gap(), rep.apo_mean_gap());
    if (rep.apo_always_queries_bad()) {
      std::printf("apo: bad context first queried by round %zu in every seed\n",
                  rep.apo_latest_first_bad());
    } else {
      std::printf("apo: bad context never queried in some seed\n");
    }
  }
  return 0;
}

int cmd_check_theory(const GlobalOptions& g, double grid_step) {
  if (!(grid_step > 0.0)) throw ConfigError("grid-step", "must be > 0");
  std::vector<BoundReport> reports;
  reports.push_back(check_self_concordance_bound(-10.0, 10.0, grid_step));
  reports.push_back(check_kl_quadratic_bound(-10.0, 10.0, grid_step / 2.0));
  reports.push_back(check_bretagnolle_huber_random(100, 8, g.seed_base));
  bool ok = true;
  for (const auto& r : reports) {
    ok = ok && r.ok;
    if (!g.quiet) std::cout << r.to_json() << '\n';
  }
  return ok ? 0 : 1;
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Active preference optimization simulator"};
  app.require_subcommand(1);
  GlobalOptions g;
  auto* seed_opt = app.add_option("--seed-base", g.seed_base, "Base of all seed derivations");
  app.add_flag("--quiet", g.quiet, "Suppress summaries");
  app.add_option("--workers", g.workers, "Concurrent runs (0 = all cores)");

  std::string config_path;
  std::string out_dir;
  auto* run = app.add_subcommand("run", "Run an experiment from a JSON config");
  run->add_option("--config", config_path, "Experiment config")->required();
  run->add_option("--out", out_dir, "Output directory (overrides output_path)");
  run->fallthrough();

  std::string instance_arg;
  std::string learners = "apo,uniform";
  std::size_t T = 1000;
  std::size_t n_seeds = 10;
  auto* compare = app.add_subcommand("compare", "Compare learners on one instance");
  compare->add_option("--instance", instance_arg, "Instance spec JSON or path")->required();
  compare->add_option("--learners", learners, "Comma-separated learner names");
  compare->add_option("--T", T, "Horizon")->check(CLI::PositiveNumber);
  compare->add_option("--seeds", n_seeds, "Number of seeds")->check(CLI::PositiveNumber);
  compare->add_option("--out", out_dir, "Output directory");
  compare->fallthrough();

  std::size_t N = 1000;
  std::size_t lb_T = 50;
  std::size_t lb_seeds = 100;
  auto* lb = app.add_subcommand("reproduce-lb", "Uniform vs APO on the lower-bound instance");
  lb->add_option("--N", N, "Number of contexts")->check(CLI::Range(std::size_t{3}, std::size_t{100000000}));
  lb->add_option("--T", lb_T, "Horizon")->check(CLI::PositiveNumber);
  lb->add_option("--seeds", lb_seeds, "Number of seeds")->check(CLI::PositiveNumber);
  lb->add_option("--out", out_dir, "Output directory");
  lb->fallthrough();

  double grid_step = 0.1;
  auto* theory = app.add_subcommand("check-theory", "Numeric checks of the analytic inequalities");
  theory->add_option("--grid-step", grid_step, "Grid step of the two-dimensional checks");
  theory->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 2;
  }

  try {
    if (run->parsed()) return cmd_run(g, config_path, out_dir, seed_opt->count() > 0);
    if (compare->parsed()) return cmd_compare(g, instance_arg, learners, T, n_seeds, out_dir);
    if (lb->parsed()) return cmd_reproduce_lb(g, N, lb_T, lb_seeds, out_dir);
    if (theory->parsed()) return cmd_check_theory(g, grid_step);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace apo

#include "btal/bounds.hpp"
#include "btal/experiment.hpp"
#include "btal/seeds.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace {

struct RunOptions {
  btal::ExperimentConfig cfg;
  std::vector<std::string> algorithms{"btal"};
  std::string out{"results"};
  std::string data_root;
  std::string manifest;
};

void add_common(CLI::App* app, btal::ExperimentConfig& cfg, std::string& data_root, std::string& manifest) {
  app->add_option("--dataset", cfg.dataset, "Dataset name from the manifest")->required();
  app->add_option("--repeats", cfg.repeats, "Independent seeded repeats")->capture_default_str();
  app->add_option("--seed", cfg.seed, "Master seed")->capture_default_str();
  app->add_option("--delta", cfg.delta, "Confidence parameter")->capture_default_str();
  app->add_option("--class-size", cfg.class_size, "Initial hypothesis class size")->capture_default_str();
  app->add_option("--norm-bound", cfg.norm_bound, "Norm bound of sampled hyperplanes")->capture_default_str();
  app->add_option("--n-new", cfg.n_new, "Hypotheses generated per querying round")->capture_default_str();
  app->add_option("--support", cfg.max_support, "Support size of convex combinations")->capture_default_str();
  app->add_option("--stream-length", cfg.stream_length, "Stream length (0: one pass over train)")
      ->capture_default_str();
  app->add_option("--train-fraction", cfg.train_fraction, "Train share of the split")->capture_default_str();
  app->add_option("--query-prob", cfg.query_probability, "Query probability of the random control")
      ->capture_default_str();
  app->add_option("--teacher-pool", cfg.teacher_pool, "Pre-trained teacher candidates (black-box)")
      ->capture_default_str();
  app->add_flag("!--shared-class", cfg.redraw_class, "Reuse the repeat-0 hypothesis class in every repeat");
  app->add_option("--jobs", cfg.jobs, "Worker threads (0: hardware concurrency)")->capture_default_str();
  app->add_option("--data-root", data_root, std::string("Dataset root (default: $") + btal::kDataRootEnv + ")");
  app->add_option("--manifest", manifest, "Dataset manifest JSON (default: built-in)");
}

void finish_paths(btal::ExperimentConfig& cfg, const std::string& data_root, const std::string& manifest) {
  if (!data_root.empty()) cfg.data_root = data_root;
  if (!manifest.empty()) cfg.manifest = manifest;
}

int do_run(RunOptions& o) {
  finish_paths(o.cfg, o.data_root, o.manifest);
  std::vector<btal::Algorithm> algos;
  for (const auto& name : o.algorithms) algos.push_back(btal::parse_algorithm(name));
  const auto results = btal::run_matched(o.cfg, algos);
  const std::filesystem::path out = o.out;
  std::filesystem::create_directories(out);
  btal::write_runs(results, out / "runs.csv");
  btal::write_manifest(o.cfg, algos, out / "manifest.json");
  btal::emit_tables(btal::aggregate(results), out);
  std::cout << "wrote " << results.size() << " runs to " << out.string() << "\n";
  return 0;
}

int do_aggregate(const std::vector<std::string>& inputs, const std::string& out) {
  std::vector<btal::RunResult> all;
  for (const auto& in : inputs) {
    auto runs = btal::read_runs(in);
    all.insert(all.end(), std::make_move_iterator(runs.begin()), std::make_move_iterator(runs.end()));
  }
  btal::emit_tables(btal::aggregate(all), out);
  std::cout << "aggregated " << all.size() << " runs into " << out << "\n";
  return 0;
}

int do_report(const std::vector<std::string>& inputs) {
  struct Acc {
    double queries = 0, alive = 0, test_error = 0, alpha = 0;
    std::size_t n = 0, pruned = 0, updates = 0;
  };
  std::map<std::pair<std::string, std::string>, Acc> acc;
  for (const auto& in : inputs)
    for (const auto& r : btal::read_runs(in)) {
      auto& a = acc[{r.dataset, btal::to_string(r.algorithm)}];
      a.queries += static_cast<double>(r.summary.queries);
      a.alive += static_cast<double>(r.summary.alive);
      a.test_error += r.summary.test_error;
      a.alpha += r.summary.alpha_sum;
      a.updates += r.summary.teacher_updates;
      a.pruned += r.summary.initial_teacher_pruned ? 1 : 0;
      ++a.n;
    }
  std::printf("%-12s %-13s %5s %10s %10s %10s %10s %8s %7s\n", "dataset", "algorithm", "runs", "queries", "alive",
              "test_err", "alpha_sum", "updates", "pruned");
  for (const auto& [key, a] : acc) {
    const double n = static_cast<double>(a.n);
    std::printf("%-12s %-13s %5zu %10.1f %10.1f %10.4f %10.4f %8.2f %7zu\n", key.first.c_str(), key.second.c_str(),
                a.n, a.queries / n, a.alive / n, a.test_error / n, a.alpha / n, static_cast<double>(a.updates) / n,
                a.pruned);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Teaching-guided hypothesis pruning benchmarks"};
  app.set_config("--config", "", "TOML/INI config file with option values");
  app.require_subcommand(1);

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Run algorithms on matched seeded repeats and write runs, tables and manifest");
  add_common(run_cmd, run.cfg, run.data_root, run.manifest);
  run_cmd->add_option("--algo", run.algorithms, "iwal, iwal-d, btal, btal-plus, random-query")
      ->delimiter(',')
      ->capture_default_str();
  run_cmd->add_option("--out", run.out, "Output directory")->capture_default_str();

  std::vector<std::string> agg_inputs;
  std::string agg_out{"tables"};
  auto* agg_cmd = app.add_subcommand("aggregate", "Rebuild figure tables from run files");
  agg_cmd->add_option("--runs", agg_inputs, "Run files written by `run`")->required();
  agg_cmd->add_option("--out", agg_out, "Output directory")->capture_default_str();

  std::vector<std::string> report_inputs;
  auto* report_cmd = app.add_subcommand("report", "Print per-algorithm summaries of run files");
  report_cmd->add_option("--runs", report_inputs, "Run files written by `run`")->required();

  btal::BoundsOptions bounds;
  bounds.retention.repeats = 20;
  bounds.retention.class_size = 2000;
  std::string bounds_out{"bounds.csv"};
  std::string bounds_root;
  std::string bounds_manifest;
  auto* bounds_cmd = app.add_subcommand("bounds", "Empirical checks of the concentration, retention and hull results");
  add_common(bounds_cmd, bounds.retention, bounds_root, bounds_manifest);
  bounds_cmd->add_option("--runs-concentration", bounds.concentration.runs, "Synthetic runs for the concentration check")->capture_default_str();
  bounds_cmd->add_option("--runs-unbiased", bounds.unbiasedness.runs, "Synthetic runs for the unbiasedness check")->capture_default_str();
  bounds_cmd->add_option("--hull-trials", bounds.hull.trials, "Random trials for the hull check")->capture_default_str();
  bounds_cmd->add_option("--out", bounds_out, "Report file")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return do_run(run);
    if (*agg_cmd) return do_aggregate(agg_inputs, agg_out);
    if (*report_cmd) return do_report(report_inputs);
    if (*bounds_cmd) {
      finish_paths(bounds.retention, bounds_root, bounds_manifest);
      bounds.concentration.seed = btal::derive_seed(bounds.retention.seed, 101);
      bounds.unbiasedness.seed = btal::derive_seed(bounds.retention.seed, 102);
      bounds.hull.seed = btal::derive_seed(bounds.retention.seed, 103);
      const auto report = btal::run_bounds(bounds);
      btal::write_bounds_report(report, bounds_out);
      bool ok = true;
      for (const auto& c : report.checks) {
        std::printf("%-14s %-4s measured=%.6g nominal=%.6g sigma=%.6g  %s\n", c.name.c_str(), c.pass ? "pass" : "FAIL",
                    c.measured, c.nominal, c.sigma, c.note.c_str());
        ok = ok && c.pass;
      }
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}

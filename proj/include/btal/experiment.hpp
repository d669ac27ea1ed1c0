#pragma once

#include "btal/blackbox.hpp"
#include "btal/data.hpp"
#include "btal/pruning.hpp"
#include "btal/teaching.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace btal {

enum class Algorithm { Iwal, IwalD, Btal, BtalPlus, RandomQuery };

std::string to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& name);
bool uses_hypothesis_class(Algorithm a);

struct ExperimentConfig {
  std::string dataset;
  Algorithm algorithm{Algorithm::Btal};
  std::size_t class_size{10000};
  double norm_bound{1.0};
  double delta{0.1};
  std::size_t n_new{10};
  std::size_t max_support{5};
  std::size_t stream_length{0};  // 0: one pass over the training split
  std::size_t repeats{20};
  std::uint64_t seed{0};
  double train_fraction{0.7};
  double query_probability{1.0};  // random-query control
  bool redraw_class{true};        // false keeps the repeat-0 class for every repeat
  std::size_t teacher_pool{10};   // black-box setting: pre-trained teacher candidates
  std::size_t jobs{0};            // worker threads; 0 uses the hardware concurrency
  std::filesystem::path data_root;
  std::filesystem::path manifest;  // empty: built-in manifest
};

/// All violations, so a bad config is reported in one go before any run starts.
std::vector<std::string> validate(const ExperimentConfig& cfg);

struct RunRow {
  std::size_t t{0};
  std::size_t queries{0};
  std::size_t alive{0};
  double p{0.0};
  double teacher_error{0.0};  // mean normalized loss of the teaching hypothesis on the holdout split
  double test_error{0.0};     // 0/1 error of the current output hypothesis on the test split
  double alpha{0.0};
  bool teacher_updated{false};
};

struct RunSummary {
  std::size_t queries{0};
  std::size_t alive{0};
  double test_error{0.0};
  double teacher_error_initial{0.0};
  double teacher_error_final{0.0};
  double alpha_sum{0.0};
  std::size_t teacher_updates{0};
  bool initial_teacher_pruned{false};
  std::size_t backtracks{0};
  std::size_t stream_length{0};
};

struct RunResult {
  Algorithm algorithm{Algorithm::Btal};
  std::string dataset;
  std::size_t repeat{0};
  std::uint64_t seed{0};
  std::vector<RunRow> rows;  // t = 0 first, then every querying round, then the final round
  RunSummary summary;
};

/// Everything the algorithms of one repeat share, so runs on the same repeat see the same split, class, stream
/// order and Bernoulli draws.
struct RunInputs {
  std::string dataset;
  std::size_t repeat{0};
  std::uint64_t seed{0};
  ProcessedDataset data;
  std::vector<Hypothesisd> hypothesis_class;  // empty for the black-box algorithms
  std::vector<std::size_t> stream;            // rows of data.train in arrival order
};

/// Emitted at every pruning event of the class-based algorithms.
struct PruneEvent {
  Algorithm algorithm;
  std::size_t t;
  std::span<const double> errors;  // averaged L_t, aligned with `candidates`
  const CandidateSet& candidates;  // before pruning
  std::size_t best;
  double delta;
  double slack;     // uniform slack (IWAL, BTAL); the 2*delta ceiling for IWAL-D
  double feedback;  // F(best) for BTAL, 0 otherwise
  const std::vector<std::size_t>& survivors;
};

struct RunHooks {
  std::function<void(const PruneEvent&)> on_prune;
};

std::uint64_t repeat_seed(std::uint64_t master, std::size_t repeat);

RunInputs prepare_run(const ResolvedDataset& dataset, const ExperimentConfig& cfg, std::size_t repeat);

RunResult run_once(const RunInputs& inputs, const ExperimentConfig& cfg, const RunHooks& hooks = {});

/// `repeats` independent seeded runs of cfg.algorithm; throws with every validation error joined.
std::vector<RunResult> run_experiment(const ExperimentConfig& cfg);

/// Runs several algorithms on matched repeats (same inputs per repeat).
std::vector<RunResult> run_matched(const ExperimentConfig& cfg, std::span<const Algorithm> algorithms,
                                   const RunHooks& hooks = {});

// ---------------------------------------------------------------------------------------------------------------
// Aggregation

enum class Figure { Alive, TeacherError, TestError, Queries, Accuracy };

std::string figure_file(Figure f);

struct CurvePoint {
  double x{0.0};
  double mean{0.0};
  double stderr_{0.0};
};

struct Curve {
  Figure figure;
  Algorithm algorithm;
  std::string dataset;
  std::vector<CurvePoint> points;
};

struct AggregateResult {
  std::vector<Curve> curves;

  const Curve* find(Figure f, Algorithm a, const std::string& dataset) const;
};

/// Mean and standard error (sample std / sqrt(n)) of one value per run.
CurvePoint mean_stderr(double x, std::span<const double> values);

/// Query-count gridpoints floor(2^(k/2)), deduplicated, up to max_queries.
std::vector<std::size_t> log2_query_grid(std::size_t max_queries);

/// Curves for every (algorithm, dataset) present. Grids are shared across all results passed in; runs that end
/// before a gridpoint carry their final value forward.
AggregateResult aggregate(std::span<const RunResult> results);

/// One delimiter-separated table per figure plus nothing else; each file is written atomically.
void emit_tables(const AggregateResult& agg, const std::filesystem::path& out_dir);

/// Per-round rows of every run, and the reverse.
void write_runs(std::span<const RunResult> results, const std::filesystem::path& path);
std::vector<RunResult> read_runs(const std::filesystem::path& path);

/// Config + per-repeat seeds + build stamp as JSON.
void write_manifest(const ExperimentConfig& cfg, std::span<const Algorithm> algorithms,
                    const std::filesystem::path& path);

/// Writes `content` to a sibling temp file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string build_stamp();

}  // namespace btal

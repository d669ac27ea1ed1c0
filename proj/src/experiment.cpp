#include "btal/experiment.hpp"

#include "btal/seeds.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#ifndef BTAL_BUILD_STAMP
#define BTAL_BUILD_STAMP "unknown"
#endif

namespace btal {

namespace {

// Child-seed indices of a repeat.
constexpr std::uint64_t kSplitStream = 1;
constexpr std::uint64_t kClassStream = 2;
constexpr std::uint64_t kOrderStream = 3;
constexpr std::uint64_t kQueryStream = 4;
constexpr std::uint64_t kImproveStream = 5;
constexpr std::uint64_t kTeacherStream = 6;

constexpr Algorithm kAllAlgorithms[] = {Algorithm::Iwal, Algorithm::IwalD, Algorithm::Btal, Algorithm::BtalPlus,
                                        Algorithm::RandomQuery};

}  // namespace

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Iwal: return "iwal";
    case Algorithm::IwalD: return "iwal-d";
    case Algorithm::Btal: return "btal";
    case Algorithm::BtalPlus: return "btal-plus";
    case Algorithm::RandomQuery: return "random-query";
  }
  return "?";
}

Algorithm parse_algorithm(const std::string& name) {
  for (Algorithm a : kAllAlgorithms)
    if (to_string(a) == name) return a;
  throw std::invalid_argument("unknown algorithm '" + name + "' (expected iwal, iwal-d, btal, btal-plus, random-query)");
}

bool uses_hypothesis_class(Algorithm a) {
  return a == Algorithm::Iwal || a == Algorithm::IwalD || a == Algorithm::Btal;
}

std::vector<std::string> validate(const ExperimentConfig& cfg) {
  std::vector<std::string> errors;
  if (cfg.dataset.empty()) errors.push_back("dataset must be set");
  if (cfg.repeats < 1) errors.push_back("repeats must be >= 1");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) errors.push_back("delta must be in (0,1)");
  if (cfg.class_size < 1) errors.push_back("class-size must be >= 1");
  if (!(cfg.norm_bound > 0.0)) errors.push_back("norm-bound must be > 0");
  if (cfg.max_support < 2) errors.push_back("support size must be >= 2");
  if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0)) errors.push_back("train-fraction must be in (0,1)");
  if (!(cfg.query_probability > 0.0 && cfg.query_probability <= 1.0)) {
    errors.push_back("query-prob must be in (0,1]");
  }
  if (cfg.algorithm == Algorithm::BtalPlus && cfg.teacher_pool < 1) errors.push_back("teacher-pool must be >= 1");
  if (!cfg.manifest.empty() && !std::filesystem::exists(cfg.manifest)) {
    errors.push_back("manifest file not found: " + cfg.manifest.string());
  }
  return errors;
}

std::uint64_t repeat_seed(std::uint64_t master, std::size_t repeat) { return derive_seed(master, repeat); }

RunInputs prepare_run(const ResolvedDataset& dataset, const ExperimentConfig& cfg, std::size_t repeat) {
  RunInputs in;
  in.dataset = cfg.dataset.empty() ? dataset.binary.name : cfg.dataset;
  in.repeat = repeat;
  in.seed = repeat_seed(cfg.seed, repeat);

  PipelineOptions opts;
  opts.train_fraction = cfg.train_fraction;
  in.data = split(dataset.binary, opts, derive_seed(in.seed, kSplitStream));

  if (uses_hypothesis_class(cfg.algorithm)) {
    const std::uint64_t class_seed =
        derive_seed(cfg.redraw_class ? in.seed : repeat_seed(cfg.seed, 0), kClassStream);
    in.hypothesis_class = generate_hyperplane_class<double>(in.data.train.cols(), cfg.class_size, cfg.norm_bound,
                                                            class_seed);
  }

  const std::size_t n_train = in.data.train_labels.size();
  const std::size_t length = cfg.stream_length == 0 ? n_train : cfg.stream_length;
  std::mt19937_64 order_rng(derive_seed(in.seed, kOrderStream));
  std::vector<std::size_t> pass(n_train);
  in.stream.reserve(length);
  while (in.stream.size() < length) {
    std::iota(pass.begin(), pass.end(), std::size_t{0});
    std::shuffle(pass.begin(), pass.end(), order_rng);
    for (std::size_t i = 0; i < n_train && in.stream.size() < length; ++i) in.stream.push_back(pass[i]);
  }
  return in;
}

namespace {

/// Predictions of every hypothesis on every row, in column blocks so memory stays bounded.
template <typename F>
void for_each_prediction_block(const std::vector<Hypothesisd>& hyps, const SampleMatrix<double>& x, F&& f) {
  const Eigen::Index dim = x.cols();
  constexpr std::size_t kBlock = 512;
  Eigen::MatrixXd w;
  VectorX<double> b;
  for (std::size_t start = 0; start < hyps.size(); start += kBlock) {
    const std::size_t stop = std::min(hyps.size(), start + kBlock);
    w.resize(dim, static_cast<Eigen::Index>(stop - start));
    b.resize(static_cast<Eigen::Index>(stop - start));
    for (std::size_t i = start; i < stop; ++i) {
      w.col(static_cast<Eigen::Index>(i - start)) = hyps[i].weights;
      b[static_cast<Eigen::Index>(i - start)] = hyps[i].bias;
    }
    Eigen::MatrixXd preds = x * w;  // rows x block
    preds.rowwise() += b.transpose();
    f(start, preds);
  }
}

/// Index of the lowest mean normalized loss on (x, y); lowest index on ties.
std::size_t min_risk_index(const std::vector<Hypothesisd>& hyps, const SampleMatrix<double>& x,
                           const std::vector<int>& y) {
  std::vector<double> risk(hyps.size(), 0.0);
  for_each_prediction_block(hyps, x, [&](std::size_t start, const Eigen::MatrixXd& preds) {
    for (Eigen::Index j = 0; j < preds.cols(); ++j) {
      double total = 0.0;
      for (Eigen::Index i = 0; i < preds.rows(); ++i) total += margin_loss(y[static_cast<std::size_t>(i)] * preds(i, j));
      risk[start + static_cast<std::size_t>(j)] = total;
    }
  });
  return static_cast<std::size_t>(std::min_element(risk.begin(), risk.end()) - risk.begin());
}

/// Normalized losses of each hypothesis on the disagreement subset for both labels, for IWAL-D's lazy L(h, best).
struct SubsetLosses {
  Eigen::MatrixXd pos;  // hypotheses x subset rows
  Eigen::MatrixXd neg;

  SubsetLosses(const std::vector<Hypothesisd>& hyps, const SampleMatrix<double>& subset) {
    pos.resize(static_cast<Eigen::Index>(hyps.size()), subset.rows());
    neg.resize(pos.rows(), pos.cols());
    for_each_prediction_block(hyps, subset, [&](std::size_t start, const Eigen::MatrixXd& preds) {
      const auto rows = static_cast<Eigen::Index>(start);
      pos.middleRows(rows, preds.cols()) = preds.transpose().unaryExpr([](double m) { return margin_loss(m); });
      neg.middleRows(rows, preds.cols()) = preds.transpose().unaryExpr([](double m) { return margin_loss(-m); });
    });
  }

  double disagreement(std::size_t a, std::size_t b) const {
    const auto ia = static_cast<Eigen::Index>(a);
    const auto ib = static_cast<Eigen::Index>(b);
    return (pos.row(ia) - pos.row(ib)).cwiseAbs().cwiseMax((neg.row(ia) - neg.row(ib)).cwiseAbs()).mean();
  }
};

RunResult run_class_based(const RunInputs& in, const ExperimentConfig& cfg, const RunHooks& hooks) {
  const ProcessedDataset& d = in.data;
  const Algorithm algo = cfg.algorithm;
  RunResult res;
  res.algorithm = algo;
  res.dataset = in.dataset;
  res.repeat = in.repeat;
  res.seed = in.seed;

  CandidateSet cands(in.hypothesis_class);
  LearnerTrace trace(cands.size());
  const SlackSchedule schedule{in.hypothesis_class.size(), cfg.delta};
  std::mt19937_64 query_rng(derive_seed(in.seed, kQueryStream));
  std::mt19937_64 improve_rng(derive_seed(in.seed, kImproveStream));

  std::optional<SubsetLosses> subset_losses;
  std::vector<double> disagreement_cache;  // L(i, best) for the current best; negative when not yet computed
  std::size_t cached_best = 0;
  if (algo == Algorithm::IwalD) {
    subset_losses.emplace(in.hypothesis_class, *d.subset);
    disagreement_cache.assign(in.hypothesis_class.size(), -1.0);
  }

  std::optional<Teacher> teacher;
  std::size_t initial_teacher = 0;
  auto holdout_error = [&](const Hypothesisd& h) { return empirical_risk(h, d.test, d.test_labels); };
  if (algo == Algorithm::Btal) {
    initial_teacher = min_risk_index(in.hypothesis_class, d.train, d.train_labels);
    teacher.emplace(in.hypothesis_class[initial_teacher], d.subset);
    res.summary.teacher_error_initial = holdout_error(teacher->current());
    teacher->record_initial(res.summary.teacher_error_initial);
  }
  const ImprovementConfig improve{cfg.n_new, cfg.max_support, 0};

  double teacher_error_sum = 0.0;  // L_t of the current teacher, tracked even after it leaves the live set
  std::vector<double> averaged(cands.size(), 0.0);
  std::size_t best = 0;
  auto push_row = [&](std::size_t t, double p, double alpha, bool updated) {
    RunRow row;
    row.t = t;
    row.queries = trace.queries;
    row.alive = cands.alive_count();
    row.p = p;
    row.teacher_error = teacher ? teacher->history().back().proxy : 0.0;
    row.test_error = zero_one_error(cands[best], d.test, d.test_labels);
    row.alpha = alpha;
    row.teacher_updated = updated;
    res.rows.push_back(row);
  };
  push_row(0, 1.0, 0.0, false);

  const std::size_t horizon = in.stream.size();
  for (std::size_t t = 1; t <= horizon; ++t) {
    const std::size_t row = in.stream[t - 1];
    const VectorX<double> x = d.train.row(static_cast<Eigen::Index>(row)).transpose();
    const double p = max_set_disagreement(cands, x);
    const bool queried = sample_query(std::min(p, 1.0), query_rng);
    QueryRecord record{t, std::max(p, kMinQueryProbability), queried, std::nullopt};
    if (queried) record.label = d.train_labels[row];
    update_weighted_errors(trace, cands, record, x);
    if (teacher && queried) teacher_error_sum += normalized_loss(teacher->current(), x, *record.label) / record.p;
    cands.round = t;
    if (!queried) {
      if (t == horizon) push_row(t, p, 0.0, false);
      continue;
    }

    // Slack terms are on the scale of the averaged importance-weighted error L_t / t.
    const double td = static_cast<double>(t);
    averaged.resize(cands.size());
    for (std::size_t i : cands.alive_indices()) averaged[i] = trace.errors[i] / td;
    best = empirical_optimal(averaged, cands);
    const double delta = delta_t(schedule, t);

    std::vector<std::size_t> survivors;
    double slack = 2.0 * delta;
    double feedback = 0.0;
    switch (algo) {
      case Algorithm::Iwal:
        survivors = prune_iwal(averaged, cands, best, delta);
        break;
      case Algorithm::IwalD:
        if (best != cached_best) {
          std::fill(disagreement_cache.begin(), disagreement_cache.end(), -1.0);
          cached_best = best;
        }
        survivors = prune_iwal_d(averaged, cands, best, delta, [&](std::size_t i) {
          if (disagreement_cache[i] < 0.0) disagreement_cache[i] = subset_losses->disagreement(i, best);
          return disagreement_cache[i];
        });
        break;
      case Algorithm::Btal:
        feedback = teacher->feedback(cands[best]);
        slack = btal_slack(delta, feedback);
        survivors = prune_btal(averaged, cands, best, delta, feedback);
        break;
      default:
        throw std::logic_error("run_class_based: unsupported algorithm");
    }
    if (hooks.on_prune) hooks.on_prune(PruneEvent{algo, t, averaged, cands, best, delta, slack, feedback, survivors});
    if (algo == Algorithm::Btal && !res.summary.initial_teacher_pruned && cands.is_alive(initial_teacher) &&
        !std::binary_search(survivors.begin(), survivors.end(), initial_teacher)) {
      res.summary.initial_teacher_pruned = true;
    }
    cands.retain(survivors);

    double alpha = 0.0;
    bool updated = false;
    if (algo == Algorithm::Btal && cfg.n_new > 0) {
      std::vector<const Hypothesisd*> alive;
      alive.reserve(cands.alive_count());
      for (std::size_t i : cands.alive_indices()) alive.push_back(&cands[i]);
      std::vector<Hypothesisd> fresh = generate_convex(alive, improve, improve_rng);

      const double teacher_avg = teacher_error_sum / td;
      const std::vector<double> fresh_errors = replay_weighted_errors(trace, fresh);
      std::vector<double> betas(fresh.size());
      for (std::size_t k = 0; k < fresh.size(); ++k) {
        betas[k] = improvement_score(teacher_avg, fresh_errors[k] / td, teacher->feedback(fresh[k]), delta);
      }
      const ImprovementRecord rec = maybe_update_teacher(*teacher, fresh, betas, t, holdout_error);
      alpha = rec.alpha;
      updated = rec.teacher_updated;
      if (updated) teacher_error_sum = fresh_errors[rec.installed];
      if (updated) ++res.summary.teacher_updates;
      res.summary.alpha_sum += alpha;

      for (std::size_t k = 0; k < fresh.size(); ++k) {
        const std::size_t idx = cands.add(std::move(fresh[k]));
        trace.errors.resize(cands.size(), 0.0);
        trace.errors[idx] = fresh_errors[k];
      }
    }
    push_row(t, p, alpha, updated);
  }

  res.summary.queries = trace.queries;
  res.summary.alive = cands.alive_count();
  res.summary.test_error = res.rows.back().test_error;
  res.summary.teacher_error_final = teacher ? teacher->history().back().proxy : 0.0;
  res.summary.stream_length = horizon;
  return res;
}

/// Plain logistic regression by full-batch gradient descent; used to pre-train black-box teachers.
Hypothesisd fit_logistic(const SampleMatrix<double>& x, const std::vector<int>& y, const std::vector<std::size_t>& rows) {
  Hypothesisd h = Hypothesisd::zero(x.cols());
  constexpr int kEpochs = 300;
  constexpr double kRate = 2.0;
  constexpr double kRidge = 1e-3;
  const double n = static_cast<double>(rows.size());
  for (int epoch = 0; epoch < kEpochs; ++epoch) {
    VectorX<double> gw = VectorX<double>::Zero(x.cols());
    double gb = 0.0;
    for (std::size_t r : rows) {
      const double m = y[r] * predict(h, x.row(static_cast<Eigen::Index>(r)));
      const double s = m >= 0 ? std::exp(-m) / (1.0 + std::exp(-m)) : 1.0 / (1.0 + std::exp(m));
      gw -= (y[r] * s) * x.row(static_cast<Eigen::Index>(r)).transpose();
      gb -= y[r] * s;
    }
    h.weights -= kRate * (gw / n + kRidge * h.weights);
    h.bias -= kRate * gb / n;
  }
  return h;
}

/// Teacher for the black-box setting: best out-of-bag model among bootstrap-trained logistic regressions.
Hypothesisd pretrain_teacher(const ProcessedDataset& d, std::size_t pool, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t n = d.train_labels.size();
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  Hypothesisd best;
  double best_err = 2.0;
  for (std::size_t k = 0; k < pool; ++k) {
    std::vector<std::size_t> rows(n);
    std::vector<bool> in_bag(n, false);
    for (auto& r : rows) in_bag[r = pick(rng)] = true;
    const Hypothesisd h = fit_logistic(d.train, d.train_labels, rows);
    std::size_t wrong = 0;
    std::size_t total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (in_bag[i]) continue;
      ++total;
      const int pred = predict(h, d.train.row(static_cast<Eigen::Index>(i))) >= 0 ? 1 : -1;
      if (pred != d.train_labels[i]) ++wrong;
    }
    const double err = total ? static_cast<double>(wrong) / static_cast<double>(total) : 1.0;
    if (err < best_err) {
      best_err = err;
      best = h;
    }
  }
  return best;
}

RunResult run_black_box(const RunInputs& in, const ExperimentConfig& cfg) {
  const ProcessedDataset& d = in.data;
  RunResult res;
  res.algorithm = cfg.algorithm;
  res.dataset = in.dataset;
  res.repeat = in.repeat;
  res.seed = in.seed;

  IncrementalLearner learner = IncrementalLearner::zero(d.train.cols());
  std::mt19937_64 query_rng(derive_seed(in.seed, kQueryStream));
  auto holdout_error = [&](const Hypothesisd& h) { return empirical_risk(h, d.test, d.test_labels); };

  std::optional<BtalPlusState> state;
  if (cfg.algorithm == Algorithm::BtalPlus) {
    Teacher teacher(pretrain_teacher(d, cfg.teacher_pool, derive_seed(in.seed, kTeacherStream)), d.subset);
    res.summary.teacher_error_initial = holdout_error(teacher.current());
    teacher.record_initial(res.summary.teacher_error_initial);
    state.emplace(BtalPlusState{std::move(teacher), learner, LearnerTrace{}, query_rng,
                                std::mt19937_64(derive_seed(in.seed, kImproveStream))});
  }
  const BtalPlusConfig bp_cfg{SlackSchedule{cfg.class_size, cfg.delta}, cfg.n_new};

  std::size_t queries = 0;
  auto current = [&]() -> const Hypothesisd& { return state ? state->learner.current : learner.current; };
  auto push_row = [&](std::size_t t, double p, double alpha, bool updated) {
    RunRow row;
    row.t = t;
    row.queries = queries;
    row.p = p;
    row.alive = 1;
    row.teacher_error = state ? state->teacher.history().back().proxy : 0.0;
    row.test_error = zero_one_error(current(), d.test, d.test_labels);
    row.alpha = alpha;
    row.teacher_updated = updated;
    res.rows.push_back(row);
  };
  push_row(0, 1.0, 0.0, false);

  const std::size_t horizon = in.stream.size();
  for (std::size_t t = 1; t <= horizon; ++t) {
    const std::size_t row = in.stream[t - 1];
    const VectorX<double> x = d.train.row(static_cast<Eigen::Index>(row)).transpose();
    const auto label = [&] { return d.train_labels[row]; };
    bool queried = false;
    double p = cfg.query_probability;
    double alpha = 0.0;
    bool updated = false;
    if (state) {
      const auto r = btal_plus_round(*state, x, label, bp_cfg, holdout_error);
      queried = r.queried;
      p = r.p;
      if (r.backtrack && !r.backtrack->accepted) ++res.summary.backtracks;
      if (r.improvement) {
        alpha = r.improvement->alpha;
        updated = r.improvement->teacher_updated;
        res.summary.alpha_sum += alpha;
        if (updated) ++res.summary.teacher_updates;
      }
    } else {
      queried = random_query_round(learner, x, label, cfg.query_probability, query_rng);
    }
    if (queried) ++queries;
    if (queried || t == horizon) push_row(t, p, alpha, updated);
  }

  res.summary.queries = queries;
  res.summary.alive = 1;
  res.summary.test_error = res.rows.back().test_error;
  res.summary.teacher_error_final = state ? state->teacher.history().back().proxy : 0.0;
  res.summary.stream_length = horizon;
  return res;
}

DatasetManifest manifest_for(const ExperimentConfig& cfg) {
  return cfg.manifest.empty() ? DatasetManifest::builtin() : DatasetManifest::load(cfg.manifest);
}

std::filesystem::path data_root_for(const ExperimentConfig& cfg) {
  return cfg.data_root.empty() ? default_data_root() : cfg.data_root;
}

ResolvedDataset resolve_for(const ExperimentConfig& cfg) {
  return resolve_dataset(manifest_for(cfg), cfg.dataset, data_root_for(cfg));
}

/// "file" when the entry's file is present, "synthetic" when the fallback profile stands in for it.
std::string data_source_for(const ExperimentConfig& cfg) {
  const DatasetManifest manifest = manifest_for(cfg);
  const auto it = manifest.entries.find(cfg.dataset);
  if (it == manifest.entries.end()) return "unknown";
  const auto& path = it->second.path;
  const bool present = std::filesystem::exists(path.is_absolute() ? path : data_root_for(cfg) / path);
  return present || !it->second.fallback ? "file" : "synthetic";
}

void throw_if_invalid(const ExperimentConfig& cfg) {
  const auto errors = validate(cfg);
  if (errors.empty()) return;
  std::string msg = "invalid experiment config:";
  for (const auto& e : errors) msg += "\n  - " + e;
  throw std::invalid_argument(msg);
}

}  // namespace

RunResult run_once(const RunInputs& inputs, const ExperimentConfig& cfg, const RunHooks& hooks) {
  if (uses_hypothesis_class(cfg.algorithm)) {
    if (inputs.hypothesis_class.empty()) throw std::invalid_argument("run_once: inputs carry no hypothesis class");
    return run_class_based(inputs, cfg, hooks);
  }
  return run_black_box(inputs, cfg);
}

std::vector<RunResult> run_matched(const ExperimentConfig& cfg, std::span<const Algorithm> algorithms,
                                   const RunHooks& hooks) {
  if (algorithms.empty()) throw std::invalid_argument("run_matched: no algorithms given");
  for (Algorithm a : algorithms) {
    ExperimentConfig c = cfg;
    c.algorithm = a;
    throw_if_invalid(c);
  }
  const ResolvedDataset dataset = resolve_for(cfg);
  const bool any_class = std::any_of(algorithms.begin(), algorithms.end(), uses_hypothesis_class);

  std::vector<std::vector<RunResult>> per_repeat(cfg.repeats);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::mutex hook_mutex;
  RunHooks locked;
  if (hooks.on_prune) {
    locked.on_prune = [&](const PruneEvent& e) {
      std::lock_guard<std::mutex> lock(hook_mutex);
      hooks.on_prune(e);
    };
  }

  auto worker = [&] {
    for (std::size_t r = next++; r < cfg.repeats; r = next++) {
      try {
        ExperimentConfig c = cfg;
        c.algorithm = any_class ? Algorithm::Iwal : algorithms.front();
        const RunInputs inputs = prepare_run(dataset, c, r);
        for (Algorithm a : algorithms) {
          c.algorithm = a;
          per_repeat[r].push_back(run_once(inputs, c, locked));
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::size_t jobs = cfg.jobs ? cfg.jobs : std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, cfg.repeats);
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<RunResult> out;
  for (auto& rs : per_repeat)
    for (auto& r : rs) out.push_back(std::move(r));
  return out;
}

std::vector<RunResult> run_experiment(const ExperimentConfig& cfg) {
  const Algorithm algos[] = {cfg.algorithm};
  return run_matched(cfg, algos);
}

// ---------------------------------------------------------------------------------------------------------------

std::string figure_file(Figure f) {
  switch (f) {
    case Figure::Alive: return "alive.csv";
    case Figure::TeacherError: return "teacher_error.csv";
    case Figure::TestError: return "test_error.csv";
    case Figure::Queries: return "queries.csv";
    case Figure::Accuracy: return "accuracy.csv";
  }
  return "fig.csv";
}

const Curve* AggregateResult::find(Figure f, Algorithm a, const std::string& dataset) const {
  for (const auto& c : curves)
    if (c.figure == f && c.algorithm == a && c.dataset == dataset) return &c;
  return nullptr;
}

CurvePoint mean_stderr(double x, std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean_stderr: no values");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() == 1) return {x, mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {x, mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

std::vector<std::size_t> log2_query_grid(std::size_t max_queries) {
  std::vector<std::size_t> grid;
  for (int k = 0;; ++k) {
    const auto g = static_cast<std::size_t>(std::floor(std::pow(2.0, k / 2.0)));
    if (g > max_queries) break;
    if (grid.empty() || grid.back() != g) grid.push_back(g);
  }
  return grid;
}

namespace {

std::vector<std::size_t> linear_grid(std::size_t max_value, std::size_t points, bool include_zero) {
  std::vector<std::size_t> grid;
  if (include_zero) grid.push_back(0);
  for (std::size_t k = 1; k <= points; ++k) {
    const auto g = static_cast<std::size_t>(std::llround(static_cast<double>(k) * static_cast<double>(max_value) /
                                                         static_cast<double>(points)));
    if (g == 0 || (!grid.empty() && grid.back() == g)) continue;
    grid.push_back(g);
  }
  return grid;
}

/// Last row whose `key` does not exceed the gridpoint; rows are sorted by key.
template <typename Key>
const RunRow& row_at(const std::vector<RunRow>& rows, std::size_t g, Key key) {
  const RunRow* hit = &rows.front();
  for (const auto& r : rows) {
    if (key(r) > g) break;
    hit = &r;
  }
  return *hit;
}

}  // namespace

AggregateResult aggregate(std::span<const RunResult> results) {
  if (results.empty()) throw std::invalid_argument("aggregate: no results");

  std::map<std::string, std::map<int, std::vector<const RunResult*>>> groups;
  for (const auto& r : results) {
    if (r.rows.empty()) throw std::invalid_argument("aggregate: run without rows");
    groups[r.dataset][static_cast<int>(r.algorithm)].push_back(&r);
  }

  AggregateResult agg;
  for (const auto& [dataset, by_algo] : groups) {
    std::size_t max_queries = 0;
    std::size_t max_t = 0;
    for (const auto& [a, runs] : by_algo)
      for (const RunResult* r : runs) {
        max_queries = std::max(max_queries, r->rows.back().queries);
        max_t = std::max(max_t, r->rows.back().t);
      }
    const auto log_grid = log2_query_grid(max_queries);
    const auto t_grid = linear_grid(max_t, 50, false);
    const auto q_grid = linear_grid(max_queries, 50, true);

    for (const auto& [a, runs] : by_algo) {
      const auto algo = static_cast<Algorithm>(a);
      auto curve = [&](Figure fig, const std::vector<std::size_t>& grid, bool log_x, auto key, auto value) {
        Curve c{fig, algo, dataset, {}};
        std::vector<double> vals(runs.size());
        for (std::size_t g : grid) {
          for (std::size_t i = 0; i < runs.size(); ++i) vals[i] = value(row_at(runs[i]->rows, g, key));
          c.points.push_back(mean_stderr(log_x ? std::log2(static_cast<double>(g)) : static_cast<double>(g), vals));
        }
        agg.curves.push_back(std::move(c));
      };
      const auto by_queries = [](const RunRow& r) { return r.queries; };
      const auto by_t = [](const RunRow& r) { return r.t; };

      if (uses_hypothesis_class(algo)) {
        curve(Figure::Alive, log_grid, true, by_queries, [](const RunRow& r) { return double(r.alive); });
        curve(Figure::TestError, log_grid, true, by_queries, [](const RunRow& r) { return r.test_error; });
      } else {
        curve(Figure::Accuracy, q_grid, false, by_queries, [](const RunRow& r) { return 1.0 - r.test_error; });
      }
      if (algo == Algorithm::Btal || algo == Algorithm::BtalPlus) {
        curve(Figure::TeacherError, log_grid, true, by_queries, [](const RunRow& r) { return r.teacher_error; });
      }
      curve(Figure::Queries, t_grid, false, by_t, [](const RunRow& r) { return double(r.queries); });
    }
  }
  return agg;
}

namespace {

std::string fmt(double v, const char* spec = "%.10g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + tmp.string());
    os << content;
    if (!os.flush()) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw std::runtime_error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

void emit_tables(const AggregateResult& agg, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (!std::filesystem::is_directory(out_dir)) throw std::runtime_error("cannot create directory " + out_dir.string());
  for (Figure f : {Figure::Alive, Figure::TeacherError, Figure::TestError, Figure::Queries, Figure::Accuracy}) {
    std::ostringstream os;
    os << "x,mean,stderr,algorithm,dataset\n";
    for (const auto& c : agg.curves) {
      if (c.figure != f) continue;
      for (const auto& p : c.points) {
        os << fmt(p.x) << ',' << fmt(p.mean) << ',' << fmt(p.stderr_) << ',' << to_string(c.algorithm) << ','
           << c.dataset << '\n';
      }
    }
    write_file_atomic(out_dir / figure_file(f), os.str());
  }
}

namespace {

constexpr const char* kRowsHeader = "algorithm,dataset,repeat,seed,t,queries,alive,p,teacher_error,test_error,alpha,"
                                    "teacher_updated";
constexpr const char* kSummaryHeader = "algorithm,dataset,repeat,seed,queries,alive,test_error,teacher_error_initial,"
                                       "teacher_error_final,alpha_sum,teacher_updates,initial_teacher_pruned,"
                                       "backtracks,stream_length";

std::filesystem::path summary_path(const std::filesystem::path& rows_path) {
  std::filesystem::path p = rows_path;
  p.replace_extension(".summary.csv");
  return p;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void write_runs(std::span<const RunResult> results, const std::filesystem::path& path) {
  std::ostringstream rows;
  std::ostringstream sums;
  rows << kRowsHeader << '\n';
  sums << kSummaryHeader << '\n';
  for (const auto& r : results) {
    const std::string prefix =
        to_string(r.algorithm) + ',' + r.dataset + ',' + std::to_string(r.repeat) + ',' + std::to_string(r.seed) + ',';
    for (const auto& w : r.rows) {
      rows << prefix << w.t << ',' << w.queries << ',' << w.alive << ',' << fmt(w.p, "%.17g") << ','
           << fmt(w.teacher_error, "%.17g") << ',' << fmt(w.test_error, "%.17g") << ',' << fmt(w.alpha, "%.17g")
           << ',' << (w.teacher_updated ? 1 : 0) << '\n';
    }
    const auto& s = r.summary;
    sums << prefix << s.queries << ',' << s.alive << ',' << fmt(s.test_error, "%.17g") << ','
         << fmt(s.teacher_error_initial, "%.17g") << ',' << fmt(s.teacher_error_final, "%.17g") << ','
         << fmt(s.alpha_sum, "%.17g") << ',' << s.teacher_updates << ',' << (s.initial_teacher_pruned ? 1 : 0) << ','
         << s.backtracks << ',' << s.stream_length << '\n';
  }
  write_file_atomic(path, rows.str());
  write_file_atomic(summary_path(path), sums.str());
}

std::vector<RunResult> read_runs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open run file " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != kRowsHeader) throw std::runtime_error(path.string() + ": not a run file");

  std::vector<RunResult> out;
  std::map<std::tuple<std::string, std::string, std::size_t>, std::size_t> index;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 12) throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": bad field count");
    const auto key = std::make_tuple(f[0], f[1], std::stoull(f[2]));
    auto it = index.find(key);
    if (it == index.end()) {
      RunResult r;
      r.algorithm = parse_algorithm(f[0]);
      r.dataset = f[1];
      r.repeat = std::stoull(f[2]);
      r.seed = std::stoull(f[3]);
      it = index.emplace(key, out.size()).first;
      out.push_back(std::move(r));
    }
    RunRow w;
    w.t = std::stoull(f[4]);
    w.queries = std::stoull(f[5]);
    w.alive = std::stoull(f[6]);
    w.p = std::stod(f[7]);
    w.teacher_error = std::stod(f[8]);
    w.test_error = std::stod(f[9]);
    w.alpha = std::stod(f[10]);
    w.teacher_updated = f[11] == "1";
    out[it->second].rows.push_back(w);
  }

  std::ifstream sin(summary_path(path));
  if (sin) {
    std::getline(sin, line);
    while (std::getline(sin, line)) {
      if (line.empty()) continue;
      const auto f = split_csv(line);
      if (f.size() != 14) throw std::runtime_error(summary_path(path).string() + ": bad field count");
      const auto it = index.find(std::make_tuple(f[0], f[1], std::stoull(f[2])));
      if (it == index.end()) continue;
      auto& s = out[it->second].summary;
      s.queries = std::stoull(f[4]);
      s.alive = std::stoull(f[5]);
      s.test_error = std::stod(f[6]);
      s.teacher_error_initial = std::stod(f[7]);
      s.teacher_error_final = std::stod(f[8]);
      s.alpha_sum = std::stod(f[9]);
      s.teacher_updates = std::stoull(f[10]);
      s.initial_teacher_pruned = f[11] == "1";
      s.backtracks = std::stoull(f[12]);
      s.stream_length = std::stoull(f[13]);
    }
  }
  return out;
}

std::string build_stamp() { return BTAL_BUILD_STAMP; }

void write_manifest(const ExperimentConfig& cfg, std::span<const Algorithm> algorithms,
                    const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["build"] = build_stamp();
  j["dataset"] = cfg.dataset;
  j["data_source"] = data_source_for(cfg);
  std::vector<std::string> names;
  for (Algorithm a : algorithms) names.push_back(to_string(a));
  j["algorithms"] = names;
  j["class_size"] = cfg.class_size;
  j["norm_bound"] = cfg.norm_bound;
  j["delta"] = cfg.delta;
  j["n_new"] = cfg.n_new;
  j["max_support"] = cfg.max_support;
  j["stream_length"] = cfg.stream_length;
  j["repeats"] = cfg.repeats;
  j["seed"] = cfg.seed;
  j["train_fraction"] = cfg.train_fraction;
  j["query_probability"] = cfg.query_probability;
  j["redraw_class"] = cfg.redraw_class;
  j["teacher_pool"] = cfg.teacher_pool;
  j["manifest"] = cfg.manifest.string();
  std::vector<std::uint64_t> seeds;
  for (std::size_t r = 0; r < cfg.repeats; ++r) seeds.push_back(repeat_seed(cfg.seed, r));
  j["repeat_seeds"] = seeds;
  write_file_atomic(path, j.dump(2) + "\n");
}

}  // namespace btal

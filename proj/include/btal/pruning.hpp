#pragma once

#include "btal/hypothesis.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace btal {

/// Lower clamp on query probabilities; bounds the importance weight 1/p at 1e4.
inline constexpr double kMinQueryProbability = 1e-4;

/// Hypotheses under consideration plus a live mask. Entries are never erased, so indices stay stable
/// for the lifetime of a run; pruned entries are only flagged dead.
class CandidateSet {
 public:
  CandidateSet() = default;
  explicit CandidateSet(std::vector<Hypothesisd> hypotheses);

  std::size_t size() const { return hypotheses_.size(); }
  std::size_t alive_count() const { return alive_indices_.size(); }
  bool is_alive(std::size_t i) const { return alive_[i]; }
  const std::vector<std::size_t>& alive_indices() const { return alive_indices_; }
  const Hypothesisd& operator[](std::size_t i) const { return hypotheses_[i]; }
  const std::vector<Hypothesisd>& hypotheses() const { return hypotheses_; }

  /// Appends a live hypothesis and returns its index.
  std::size_t add(Hypothesisd h);

  /// Keeps exactly `survivors` alive. They must be a non-empty subset of the current live set.
  void retain(const std::vector<std::size_t>& survivors);

  /// Predictions of the live hypotheses at x, in alive_indices() order.
  void live_predictions(const VectorX<double>& x, VectorX<double>& out) const;

  std::size_t round{0};

 private:
  void pack() const;

  std::vector<Hypothesisd> hypotheses_;
  std::vector<bool> alive_;
  std::vector<std::size_t> alive_indices_;
  // Live hypotheses packed row-wise in alive_indices() order; add() appends, a shrinking retain() repacks lazily.
  mutable std::vector<double> packed_weights_;
  mutable std::vector<double> packed_bias_;
  mutable bool packed_{false};
};

struct QueryRecord {
  std::size_t t{0};
  double p{1.0};
  bool queried{false};
  std::optional<int> label;
};

/// A queried point kept for replaying importance-weighted errors of hypotheses born later in the run.
struct LoggedQuery {
  VectorX<double> x;
  int y{1};
  double p{1.0};  // clamped probability actually used for the Bernoulli trial
};

/// Importance-weighted cumulative errors L_t(h) = sum_k (Q_k / p_k) * loss(h, x_k, y_k).
struct LearnerTrace {
  std::vector<double> errors;  // aligned with CandidateSet indices
  std::vector<QueryRecord> history;
  std::vector<LoggedQuery> log;
  std::size_t queries{0};
  // The log's features packed row-wise, with y and 1/p alongside, for batched replays.
  std::vector<double> packed_x;
  std::vector<double> packed_y;
  std::vector<double> packed_weight;

  explicit LearnerTrace(std::size_t n = 0) : errors(n, 0.0) {}

  /// Current round count t (number of records seen).
  std::size_t rounds() const { return history.size(); }
};

struct SlackSchedule {
  std::size_t class_size{1};
  double delta{0.1};
};

/// One row of the per-round trace handed to the experiment harness.
struct TraceRow {
  std::size_t t{0};
  double p{0.0};
  bool queried{false};
  std::size_t alive{0};
  double best_error{0.0};
  std::size_t queries{0};
};

double max_set_disagreement(const CandidateSet& c, std::span<const double> x);

template <typename Derived>
double max_set_disagreement(const CandidateSet& c, const Eigen::MatrixBase<Derived>& x) {
  const VectorX<double> v = x.derived().transpose();
  return max_set_disagreement(c, std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

/// Bernoulli(max(p, kMinQueryProbability)). Consumes exactly one uniform draw.
bool sample_query(double p, std::mt19937_64& rng);

/// Adds (1/p) * loss(h, x, y) to every live hypothesis when the record was queried; no-op otherwise.
/// The query is appended to the trace's log and history either way.
void update_weighted_errors(LearnerTrace& trace, const CandidateSet& c, const QueryRecord& record,
                            const VectorX<double>& x);

/// Replays the query log against a hypothesis that was not tracked incrementally.
double replay_weighted_error(const LearnerTrace& trace, const Hypothesisd& h);
double replay_weighted_error(std::span<const LoggedQuery> log, const Hypothesisd& h);
/// Batched replay: one pass over the log for all hypotheses.
std::vector<double> replay_weighted_errors(std::span<const LoggedQuery> log, std::span<const Hypothesisd> hs);
std::vector<double> replay_weighted_errors(const LearnerTrace& trace, std::span<const Hypothesisd> hs);

/// argmin of L over live hypotheses; lowest index wins ties.
std::size_t empirical_optimal(const LearnerTrace& trace, const CandidateSet& c);
std::size_t empirical_optimal(std::span<const double> errors, const CandidateSet& c);

double delta_t(const SlackSchedule& s, std::size_t t);

/// Pruning rules. `errors` are compared on whatever scale the slack is expressed in; survivors are returned
/// in increasing index order. All comparisons are inclusive.
std::vector<std::size_t> prune_with_slack(std::span<const double> errors, const CandidateSet& c, std::size_t best,
                                          double slack);
std::vector<std::size_t> prune_iwal(std::span<const double> errors, const CandidateSet& c, std::size_t best,
                                    double delta);
/// `disagreement_to_best(i)` returns the estimated disagreement between hypothesis i and `best`; it is only
/// evaluated for hypotheses inside the band where the verdict depends on it.
std::vector<std::size_t> prune_iwal_d(std::span<const double> errors, const CandidateSet& c, std::size_t best,
                                      double delta, const std::function<double(std::size_t)>& disagreement_to_best);
std::vector<std::size_t> prune_btal(std::span<const double> errors, const CandidateSet& c, std::size_t best,
                                    double delta, double feedback_of_best);

inline double btal_slack(double delta, double feedback_of_best) { return (1.0 + feedback_of_best) * delta; }

}  // namespace btal

#pragma once

#include "btal/hypothesis.hpp"
#include "btal/pruning.hpp"
#include "btal/teaching.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

namespace btal {

/// Linear learner updated by importance-weighted gradient steps on the normalized logistic loss, with step
/// size eta0 / sqrt(steps). `snapshot` is the hypothesis before the most recent step.
struct IncrementalLearner {
  Hypothesisd current;
  Hypothesisd snapshot;
  double eta0{0.5};
  std::size_t steps{0};

  static IncrementalLearner zero(Eigen::Index dim, double eta0 = 0.5) {
    return {Hypothesisd::zero(dim), Hypothesisd::zero(dim), eta0, 0};
  }
};

struct BacktrackState {
  double phi{0.0};             // (1 + F(previous learner)) * delta_{t-1}
  double error_candidate{0.0};  // averaged L_{t-1} of the freshly updated learner
  double error_previous{0.0};   // averaged L_{t-1} of the learner before the update
  bool accepted{true};
};

/// Gradient of the normalized logistic loss w.r.t. (w, b), returned as a Hypothesis-shaped step.
Hypothesisd normalized_loss_gradient(const Hypothesisd& h, const VectorX<double>& x, int y);

/// Query probability for the black-box setting: worst-case loss gap between teacher and the learner as it
/// stands before this round's update.
double tl_query_probability(const Teacher& teacher, const IncrementalLearner& learner, const VectorX<double>& x);

/// One gradient step with weight 1/p; the pre-step hypothesis becomes the snapshot.
void incremental_update(IncrementalLearner& learner, const VectorX<double>& x, int y, double p);

/// Evaluates the backtracking inequality; reverts the learner to its snapshot when it fails.
bool backtrack_check(BacktrackState& state, IncrementalLearner& learner);

Hypothesisd pair_combination(const Hypothesisd& teacher, const Hypothesisd& learner, double lambda);

/// n hypotheses lambda * teacher + (1 - lambda) * learner with lambda ~ U(0, 1).
std::vector<Hypothesisd> generate_pair_hypotheses(const Hypothesisd& teacher, const Hypothesisd& learner,
                                                  std::size_t n, std::mt19937_64& rng);

struct BtalPlusConfig {
  SlackSchedule slack;
  std::size_t n_new{10};
};

/// Mutable state of one BTAL+ run.
struct BtalPlusState {
  Teacher teacher;
  IncrementalLearner learner;
  LearnerTrace trace;
  std::mt19937_64 query_rng;
  std::mt19937_64 improve_rng;
};

struct BtalPlusRoundResult {
  std::size_t t{0};
  double p{0.0};
  bool queried{false};
  std::optional<BacktrackState> backtrack;  // absent on round 1 and on non-query rounds
  std::optional<ImprovementRecord> improvement;
};

/// One round: query probability, Bernoulli trial, label, learner update, backtracking, pair generation and
/// the beta-gated teacher update. `label` is only invoked when the point is queried.
BtalPlusRoundResult btal_plus_round(BtalPlusState& state, const VectorX<double>& x, const std::function<int()>& label,
                                    const BtalPlusConfig& cfg,
                                    const std::function<double(const Hypothesisd&)>& teacher_proxy = {});

/// Uniform-random querying control: query with fixed probability q, same learner update with weight 1/q.
bool random_query_round(IncrementalLearner& learner, const VectorX<double>& x, const std::function<int()>& label,
                        double q, std::mt19937_64& rng);

}  // namespace btal

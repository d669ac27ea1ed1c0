#include "btal/blackbox.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace btal {

Hypothesisd normalized_loss_gradient(const Hypothesisd& h, const VectorX<double>& x, int y) {
  if (y != 1 && y != -1) throw std::invalid_argument("normalized_loss_gradient: label must be -1 or +1");
  const double margin = y * predict(h, x);
  const double g = margin_loss(margin);
  // d g / d loss = (1 - g^2) / 2 and d loss / d margin = -sigmoid(-margin).
  const double sig = margin >= 0 ? std::exp(-margin) / (1.0 + std::exp(-margin)) : 1.0 / (1.0 + std::exp(margin));
  const double dmargin = -0.5 * (1.0 - g * g) * sig;
  return Hypothesisd(dmargin * y * x, dmargin * y);
}

double tl_query_probability(const Teacher& teacher, const IncrementalLearner& learner, const VectorX<double>& x) {
  return pointwise_disagreement(teacher.current(), learner.current, x);
}

void incremental_update(IncrementalLearner& learner, const VectorX<double>& x, int y, double p) {
  if (!(p > 0.0)) throw std::invalid_argument("incremental_update: query probability must be > 0");
  ++learner.steps;
  const double eta = learner.eta0 / std::sqrt(static_cast<double>(learner.steps));
  const Hypothesisd grad = normalized_loss_gradient(learner.current, x, y);
  learner.snapshot = learner.current;
  learner.current.weights -= (eta / p) * grad.weights;
  learner.current.bias -= (eta / p) * grad.bias;
}

bool backtrack_check(BacktrackState& state, IncrementalLearner& learner) {
  state.accepted = state.error_candidate <= state.error_previous + state.phi;
  if (!state.accepted) learner.current = learner.snapshot;
  return state.accepted;
}

Hypothesisd pair_combination(const Hypothesisd& teacher, const Hypothesisd& learner, double lambda) {
  if (teacher.dim() != learner.dim()) throw std::invalid_argument("pair_combination: dimension mismatch");
  return Hypothesisd(lambda * teacher.weights + (1.0 - lambda) * learner.weights,
                     lambda * teacher.bias + (1.0 - lambda) * learner.bias);
}

std::vector<Hypothesisd> generate_pair_hypotheses(const Hypothesisd& teacher, const Hypothesisd& learner,
                                                  std::size_t n, std::mt19937_64& rng) {
  if (n == 0) throw std::invalid_argument("generate_pair_hypotheses: n must be >= 1");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Hypothesisd> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(pair_combination(teacher, learner, unit(rng)));
  return out;
}

BtalPlusRoundResult btal_plus_round(BtalPlusState& state, const VectorX<double>& x, const std::function<int()>& label,
                                    const BtalPlusConfig& cfg,
                                    const std::function<double(const Hypothesisd&)>& teacher_proxy) {
  BtalPlusRoundResult res;
  res.t = state.trace.rounds() + 1;
  res.p = tl_query_probability(state.teacher, state.learner, x);
  res.queried = sample_query(std::min(res.p, 1.0), state.query_rng);

  const CandidateSet no_candidates;
  QueryRecord record{res.t, std::max(res.p, kMinQueryProbability), res.queried, std::nullopt};
  if (!res.queried) {
    update_weighted_errors(state.trace, no_candidates, record, x);
    return res;
  }
  const int y = label();
  record.label = y;

  // Slack and errors at t-1 use the log as it stood before this query.
  std::optional<BacktrackState> bt;
  if (res.t >= 2) {
    BacktrackState s;
    s.phi = (1.0 + state.teacher.feedback(state.learner.current)) * delta_t(cfg.slack, res.t - 1);
    bt = s;
  }

  incremental_update(state.learner, x, y, record.p);
  if (bt) {
    const Hypothesisd both[] = {state.learner.snapshot, state.learner.current};
    const auto errors = replay_weighted_errors(state.trace, both);
    const double prev_t = static_cast<double>(res.t - 1);
    bt->error_previous = errors[0] / prev_t;
    bt->error_candidate = errors[1] / prev_t;
    backtrack_check(*bt, state.learner);
    res.backtrack = bt;
  }

  update_weighted_errors(state.trace, no_candidates, record, x);

  if (cfg.n_new > 0) {
    std::vector<Hypothesisd> batch{state.teacher.current()};
    const auto candidates = generate_pair_hypotheses(state.teacher.current(), state.learner.current, cfg.n_new,
                                                     state.improve_rng);
    batch.insert(batch.end(), candidates.begin(), candidates.end());
    const auto errors = replay_weighted_errors(state.trace, batch);
    const double t = static_cast<double>(res.t);
    const double delta = delta_t(cfg.slack, res.t);
    std::vector<double> betas;
    betas.reserve(candidates.size());
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      betas.push_back(improvement_score(errors[0] / t, errors[k + 1] / t, state.teacher.feedback(candidates[k]), delta));
    }
    res.improvement = maybe_update_teacher(state.teacher, candidates, betas, res.t, teacher_proxy);
  }
  return res;
}

bool random_query_round(IncrementalLearner& learner, const VectorX<double>& x, const std::function<int()>& label,
                        double q, std::mt19937_64& rng) {
  if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("random_query_round: probability must be in (0,1]");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (!(unit(rng) < q)) return false;
  incremental_update(learner, x, label(), q);
  return true;
}

}  // namespace btal

#include "btal/pruning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace btal {

CandidateSet::CandidateSet(std::vector<Hypothesisd> hypotheses)
    : hypotheses_(std::move(hypotheses)), alive_(hypotheses_.size(), true) {
  if (hypotheses_.empty()) throw std::invalid_argument("CandidateSet: at least one hypothesis required");
  alive_indices_.resize(hypotheses_.size());
  for (std::size_t i = 0; i < hypotheses_.size(); ++i) alive_indices_[i] = i;
}

std::size_t CandidateSet::add(Hypothesisd h) {
  if (!hypotheses_.empty() && h.dim() != hypotheses_.front().dim()) {
    throw std::invalid_argument("CandidateSet::add: dimension mismatch");
  }
  hypotheses_.push_back(std::move(h));
  alive_.push_back(true);
  alive_indices_.push_back(hypotheses_.size() - 1);
  if (packed_) {
    const Hypothesisd& back = hypotheses_.back();
    packed_weights_.insert(packed_weights_.end(), back.weights.data(), back.weights.data() + back.weights.size());
    packed_bias_.push_back(back.bias);
  }
  return hypotheses_.size() - 1;
}

void CandidateSet::retain(const std::vector<std::size_t>& survivors) {
  if (survivors.empty()) throw std::logic_error("CandidateSet::retain: pruning would empty the candidate set");
  for (std::size_t i : survivors) {
    if (i >= hypotheses_.size() || !alive_[i]) {
      throw std::logic_error("CandidateSet::retain: survivor " + std::to_string(i) + " is not alive");
    }
  }
  std::vector<std::size_t> next = survivors;
  std::sort(next.begin(), next.end());
  next.erase(std::unique(next.begin(), next.end()), next.end());
  if (next == alive_indices_) return;
  for (std::size_t i : alive_indices_) alive_[i] = false;
  for (std::size_t i : next) alive_[i] = true;
  alive_indices_ = std::move(next);
  packed_ = false;
}

void CandidateSet::pack() const {
  packed_weights_.clear();
  packed_bias_.clear();
  for (std::size_t i : alive_indices_) {
    const Hypothesisd& h = hypotheses_[i];
    packed_weights_.insert(packed_weights_.end(), h.weights.data(), h.weights.data() + h.weights.size());
    packed_bias_.push_back(h.bias);
  }
  packed_ = true;
}

void CandidateSet::live_predictions(const VectorX<double>& x, VectorX<double>& out) const {
  if (hypotheses_.empty()) throw std::invalid_argument("live_predictions: empty candidate set");
  if (x.size() != hypotheses_.front().dim()) throw std::invalid_argument("live_predictions: dimension mismatch");
  if (!packed_) pack();
  const auto n = static_cast<Eigen::Index>(alive_indices_.size());
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMajor> w(packed_weights_.data(), n, x.size());
  out.noalias() = w * x;
  out += Eigen::Map<const VectorX<double>>(packed_bias_.data(), n);
}

double max_set_disagreement(const CandidateSet& c, std::span<const double> x) {
  if (c.alive_count() == 0) throw std::invalid_argument("max_set_disagreement: no live hypotheses");
  const VectorX<double> xv = Eigen::Map<const VectorX<double>>(x.data(), static_cast<Eigen::Index>(x.size()));
  // The normalized loss is monotone in the margin, so the extreme losses for either label sit at the
  // extreme predictions.
  VectorX<double> preds;
  c.live_predictions(xv, preds);
  return prediction_disagreement(preds.minCoeff(), preds.maxCoeff());
}

bool sample_query(double p, std::mt19937_64& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("sample_query: probability outside [0,1]");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  return unit(rng) < std::max(p, kMinQueryProbability);
}

void update_weighted_errors(LearnerTrace& trace, const CandidateSet& c, const QueryRecord& record,
                            const VectorX<double>& x) {
  if (record.queried != record.label.has_value()) {
    throw std::invalid_argument("update_weighted_errors: label must be present exactly when queried");
  }
  trace.history.push_back(record);
  if (!record.queried) return;
  if (!(record.p > 0.0)) throw std::invalid_argument("update_weighted_errors: query probability must be > 0");
  if (trace.errors.size() < c.size()) trace.errors.resize(c.size(), 0.0);

  const int y = *record.label;
  const double weight = 1.0 / record.p;
  if (c.alive_count() > 0) {
    if (y != 1 && y != -1) throw std::invalid_argument("update_weighted_errors: label must be -1 or +1");
    VectorX<double> preds;
    c.live_predictions(x, preds);
    const Eigen::ArrayXd losses = 1.0 / (1.0 + 2.0 * (static_cast<double>(y) * preds.array()).exp());
    const auto& alive = c.alive_indices();
    for (std::size_t k = 0; k < alive.size(); ++k) trace.errors[alive[k]] += weight * losses[static_cast<Eigen::Index>(k)];
  }
  trace.log.push_back({x, y, record.p});
  trace.packed_x.insert(trace.packed_x.end(), x.data(), x.data() + x.size());
  trace.packed_y.push_back(static_cast<double>(y));
  trace.packed_weight.push_back(weight);
  ++trace.queries;
}

double replay_weighted_error(std::span<const LoggedQuery> log, const Hypothesisd& h) {
  double total = 0.0;
  for (const auto& q : log) total += normalized_loss(h, q.x, q.y) / q.p;
  return total;
}

std::vector<double> replay_weighted_errors(std::span<const LoggedQuery> log, std::span<const Hypothesisd> hs) {
  std::vector<double> totals(hs.size(), 0.0);
  if (hs.empty()) return totals;
  const Eigen::Index dim = hs.front().dim();
  Eigen::MatrixXd w(dim, static_cast<Eigen::Index>(hs.size()));
  Eigen::RowVectorXd b(w.cols());
  for (std::size_t j = 0; j < hs.size(); ++j) {
    if (hs[j].dim() != dim) throw std::invalid_argument("replay_weighted_errors: mixed dimensions");
    w.col(static_cast<Eigen::Index>(j)) = hs[j].weights;
    b[static_cast<Eigen::Index>(j)] = hs[j].bias;
  }
  Eigen::RowVectorXd preds(w.cols());
  for (const auto& q : log) {
    if (q.x.size() != dim) throw std::invalid_argument("replay_weighted_errors: dimension mismatch");
    preds.noalias() = q.x.transpose() * w;
    preds += b;
    for (std::size_t j = 0; j < hs.size(); ++j) totals[j] += margin_loss(q.y * preds[static_cast<Eigen::Index>(j)]) / q.p;
  }
  return totals;
}

std::vector<double> replay_weighted_errors(const LearnerTrace& trace, std::span<const Hypothesisd> hs) {
  const auto n = static_cast<Eigen::Index>(trace.log.size());
  if (hs.empty() || n == 0 || trace.packed_y.size() != trace.log.size()) return replay_weighted_errors(trace.log, hs);
  const Eigen::Index dim = hs.front().dim();
  if (static_cast<Eigen::Index>(trace.packed_x.size()) != n * dim) {
    throw std::invalid_argument("replay_weighted_errors: dimension mismatch");
  }
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const Eigen::Map<const RowMajor> x(trace.packed_x.data(), n, dim);
  const Eigen::Map<const Eigen::ArrayXd> y(trace.packed_y.data(), n);
  const Eigen::Map<const Eigen::VectorXd> weight(trace.packed_weight.data(), n);
  const auto k = static_cast<Eigen::Index>(hs.size());
  Eigen::MatrixXd w(dim, k);
  Eigen::RowVectorXd b(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const Hypothesisd& h = hs[static_cast<std::size_t>(j)];
    if (h.dim() != dim) throw std::invalid_argument("replay_weighted_errors: mixed dimensions");
    w.col(j) = h.weights;
    b[j] = h.bias;
  }
  Eigen::MatrixXd margins = x * w;
  margins.rowwise() += b;
  margins.array().colwise() *= y;
  const Eigen::RowVectorXd sums = weight.transpose() * (1.0 / (1.0 + 2.0 * margins.array().exp())).matrix();
  return std::vector<double>(sums.data(), sums.data() + k);
}

double replay_weighted_error(const LearnerTrace& trace, const Hypothesisd& h) {
  return replay_weighted_errors(trace, std::span<const Hypothesisd>(&h, 1)).front();
}

std::size_t empirical_optimal(std::span<const double> errors, const CandidateSet& c) {
  if (c.alive_count() == 0) throw std::invalid_argument("empirical_optimal: no live hypotheses");
  std::size_t best = c.alive_indices().front();
  for (std::size_t i : c.alive_indices())
    if (errors[i] < errors[best]) best = i;
  return best;
}

std::size_t empirical_optimal(const LearnerTrace& trace, const CandidateSet& c) {
  if (trace.errors.size() < c.size()) throw std::invalid_argument("empirical_optimal: trace not aligned with set");
  return empirical_optimal(std::span<const double>(trace.errors), c);
}

double delta_t(const SlackSchedule& s, std::size_t t) {
  if (t == 0) throw std::invalid_argument("delta_t: t must be >= 1");
  if (s.class_size == 0) throw std::invalid_argument("delta_t: class size must be >= 1");
  if (!(s.delta > 0.0)) throw std::invalid_argument("delta_t: delta must be > 0");
  const double td = static_cast<double>(t);
  const double h = static_cast<double>(s.class_size);
  return std::sqrt((2.0 / td) * std::log(2.0 * td * (td + 1.0) * h * h / s.delta));
}

namespace {

void check_best(std::span<const double> errors, const CandidateSet& c, std::size_t best) {
  if (best >= c.size() || !c.is_alive(best)) throw std::invalid_argument("pruning: best hypothesis is not alive");
  if (errors.size() < c.size()) throw std::invalid_argument("pruning: error vector not aligned with set");
}

}  // namespace

std::vector<std::size_t> prune_with_slack(std::span<const double> errors, const CandidateSet& c, std::size_t best,
                                          double slack) {
  check_best(errors, c, best);
  if (!(slack >= 0.0)) throw std::invalid_argument("pruning: slack must be non-negative");
  const double bound = errors[best] + slack;
  std::vector<std::size_t> out;
  for (std::size_t i : c.alive_indices())
    if (errors[i] <= bound) out.push_back(i);
  return out;
}

std::vector<std::size_t> prune_iwal(std::span<const double> errors, const CandidateSet& c, std::size_t best,
                                    double delta) {
  return prune_with_slack(errors, c, best, 2.0 * delta);
}

std::vector<std::size_t> prune_iwal_d(std::span<const double> errors, const CandidateSet& c, std::size_t best,
                                      double delta, const std::function<double(std::size_t)>& disagreement_to_best) {
  check_best(errors, c, best);
  const double base = errors[best];
  std::vector<std::size_t> out;
  for (std::size_t i : c.alive_indices()) {
    const double gap = errors[i] - base;
    if (gap <= delta) {
      out.push_back(i);
    } else if (gap <= 2.0 * delta) {
      const double d = disagreement_to_best(i);
      if (gap <= (1.0 + d) * delta) out.push_back(i);
    }
  }
  return out;
}

std::vector<std::size_t> prune_btal(std::span<const double> errors, const CandidateSet& c, std::size_t best,
                                    double delta, double feedback_of_best) {
  if (!(feedback_of_best >= 0.0 && feedback_of_best <= 1.0)) {
    throw std::invalid_argument("prune_btal: teacher feedback outside [0,1]");
  }
  return prune_with_slack(errors, c, best, btal_slack(delta, feedback_of_best));
}

}  // namespace btal

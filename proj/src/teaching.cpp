#include "btal/teaching.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace btal {

Teacher::Teacher(Hypothesisd initial, std::shared_ptr<const SampleMatrix<double>> feedback_subset)
    : current_(std::move(initial)), subset_(std::move(feedback_subset)) {
  if (!subset_ || subset_->rows() == 0) throw std::invalid_argument("Teacher: feedback subset is empty");
  if (subset_->cols() != current_.dim()) throw std::invalid_argument("Teacher: subset dimension mismatch");
  subset_predictions_ = (*subset_ * current_.weights).array() + current_.bias;
}

double Teacher::feedback(const Hypothesisd& h) const {
  if (h.dim() != current_.dim()) throw std::invalid_argument("Teacher::feedback: dimension mismatch");
  const VectorX<double> preds = (*subset_ * h.weights).array() + h.bias;
  constexpr Eigen::Index kChunk = 256;
  double total = 0.0;
  for (Eigen::Index start = 0; start < preds.size(); start += kChunk) {
    const Eigen::Index stop = std::min(preds.size(), start + kChunk);
    double chunk = 0.0;
    for (Eigen::Index i = start; i < stop; ++i) chunk += prediction_disagreement(subset_predictions_[i], preds[i]);
    total += chunk;
  }
  return total / static_cast<double>(preds.size());
}

void Teacher::install(Hypothesisd h, std::size_t round, double proxy) {
  if (h.dim() != current_.dim()) throw std::invalid_argument("Teacher::install: dimension mismatch");
  if (!history_.empty() && round <= history_.back().round) {
    throw std::logic_error("Teacher::install: history rounds must be strictly increasing");
  }
  current_ = std::move(h);
  subset_predictions_ = (*subset_ * current_.weights).array() + current_.bias;
  history_.push_back({round, proxy});
}

void Teacher::record_initial(double proxy) {
  if (!history_.empty()) throw std::logic_error("Teacher::record_initial: history already started");
  history_.push_back({0, proxy});
}

double teacher_feedback(const Teacher& teacher, const Hypothesisd& h) { return teacher.feedback(h); }

Hypothesisd convex_combination(std::span<const Hypothesisd* const> support, std::span<const double> lambda) {
  if (support.empty() || support.size() != lambda.size()) {
    throw std::invalid_argument("convex_combination: support and weights must be non-empty and aligned");
  }
  Hypothesisd out = Hypothesisd::zero(support.front()->dim());
  for (std::size_t j = 0; j < support.size(); ++j) {
    if (lambda[j] == 0.0) continue;
    out.weights += lambda[j] * support[j]->weights;
    out.bias += lambda[j] * support[j]->bias;
  }
  return out;
}

std::vector<Hypothesisd> generate_convex(std::span<const Hypothesisd* const> alive, const ImprovementConfig& cfg,
                                         std::mt19937_64& rng) {
  if (alive.empty()) throw std::invalid_argument("generate_convex: no live hypotheses");
  if (cfg.max_support < 2) throw std::invalid_argument("generate_convex: support size must be >= 2");
  const std::size_t m = std::min(alive.size(), cfg.max_support);

  std::vector<std::size_t> picked(m);
  std::vector<const Hypothesisd*> support(m);
  std::vector<double> lambda(m);
  std::exponential_distribution<double> expo(1.0);

  std::vector<Hypothesisd> out;
  out.reserve(cfg.n);
  for (std::size_t k = 0; k < cfg.n; ++k) {
    // m distinct members, uniformly: Floyd's algorithm, O(m^2) regardless of the live count.
    const std::size_t n_alive = alive.size();
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t top = n_alive - m + j;
      std::uniform_int_distribution<std::size_t> pick(0, top);
      std::size_t v = pick(rng);
      if (std::find(picked.begin(), picked.begin() + static_cast<std::ptrdiff_t>(j), v) !=
          picked.begin() + static_cast<std::ptrdiff_t>(j)) {
        v = top;
      }
      picked[j] = v;
      support[j] = alive[v];
    }
    // Normalized Exp(1) draws are Dirichlet(1, ..., 1).
    double sum = 0.0;
    for (double& l : lambda) sum += (l = expo(rng));
    for (double& l : lambda) l /= sum;
    out.push_back(convex_combination(support, lambda));
  }
  return out;
}

double improvement_score(double teacher_error, double candidate_error, double candidate_feedback, double delta) {
  return teacher_error - candidate_error - (1.0 + candidate_feedback) * delta;
}

double improvement_score(const LearnerTrace& trace, double delta, const Teacher& teacher,
                         const Hypothesisd& candidate) {
  const double t = static_cast<double>(std::max<std::size_t>(trace.rounds(), 1));
  return improvement_score(replay_weighted_error(trace, teacher.current()) / t,
                           replay_weighted_error(trace, candidate) / t, teacher.feedback(candidate), delta);
}

ImprovementRecord maybe_update_teacher(Teacher& teacher, std::span<const Hypothesisd> candidates,
                                       std::span<const double> betas, std::size_t round,
                                       const std::function<double(const Hypothesisd&)>& proxy) {
  if (candidates.size() != betas.size()) {
    throw std::invalid_argument("maybe_update_teacher: one beta per candidate required");
  }
  ImprovementRecord rec;
  rec.round = round;
  rec.betas.assign(betas.begin(), betas.end());
  if (betas.empty()) return rec;

  const auto best = static_cast<std::size_t>(std::max_element(betas.begin(), betas.end()) - betas.begin());
  rec.alpha = std::max(betas[best], 0.0);
  if (betas[best] > 0.0) {
    teacher.install(candidates[best], round, proxy ? proxy(candidates[best]) : 0.0);
    rec.teacher_updated = true;
    rec.installed = best;
  }
  return rec;
}

}  // namespace btal

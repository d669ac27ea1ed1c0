#pragma once

#include "btal/hypothesis.hpp"
#include "btal/pruning.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <utility>
#include <vector>

namespace btal {

/// Black-box teacher: holds a teaching hypothesis and answers disagreement queries against it, estimated on
/// an unlabeled subset. Nothing else about the teacher is observable.
class Teacher {
 public:
  struct HistoryEntry {
    std::size_t round;
    double proxy;  // generalization-error proxy of the hypothesis installed at `round`
  };

  Teacher(Hypothesisd initial, std::shared_ptr<const SampleMatrix<double>> feedback_subset);

  const Hypothesisd& current() const { return current_; }
  const SampleMatrix<double>& feedback_subset() const { return *subset_; }
  const std::vector<HistoryEntry>& history() const { return history_; }

  /// F(h): mean worst-case loss gap between the teaching hypothesis and h over the feedback subset.
  double feedback(const Hypothesisd& h) const;

  /// Replaces the teaching hypothesis. Rounds in the history must be strictly increasing.
  void install(Hypothesisd h, std::size_t round, double proxy);
  void record_initial(double proxy);

 private:
  Hypothesisd current_;
  std::shared_ptr<const SampleMatrix<double>> subset_;
  VectorX<double> subset_predictions_;
  std::vector<HistoryEntry> history_;
};

double teacher_feedback(const Teacher& teacher, const Hypothesisd& h);

struct ImprovementConfig {
  std::size_t n{10};          // new hypotheses per querying round
  std::size_t max_support{5};  // support size m of each convex combination, capped by the live count
  std::uint64_t seed{0};
};

struct ImprovementRecord {
  std::size_t round{0};
  std::vector<double> betas;
  double alpha{0.0};
  bool teacher_updated{false};
  std::size_t installed{0};  // index into the candidate list when updated
};

Hypothesisd convex_combination(std::span<const Hypothesisd* const> support, std::span<const double> lambda);

/// n random points of the convex hull of `alive`: Dirichlet(1, ..., 1) weights over a uniformly drawn
/// support of min(|alive|, max_support) distinct members.
std::vector<Hypothesisd> generate_convex(std::span<const Hypothesisd* const> alive, const ImprovementConfig& cfg,
                                         std::mt19937_64& rng);

/// beta = L(teacher) - L(candidate) - (1 + F(candidate)) * delta, with errors on the slack's scale.
double improvement_score(double teacher_error, double candidate_error, double candidate_feedback, double delta);

/// Same score with both errors replayed from the trace's query log and averaged over the rounds seen.
double improvement_score(const LearnerTrace& trace, double delta, const Teacher& teacher, const Hypothesisd& candidate);

/// Installs the highest-beta candidate when its beta is strictly positive (lowest index on ties).
/// `proxy` evaluates the generalization-error proxy recorded in the teacher's history.
ImprovementRecord maybe_update_teacher(Teacher& teacher, std::span<const Hypothesisd> candidates,
                                       std::span<const double> betas, std::size_t round,
                                       const std::function<double(const Hypothesisd&)>& proxy = {});

}  // namespace btal

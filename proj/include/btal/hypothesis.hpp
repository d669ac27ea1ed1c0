#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace btal {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Row-major sample matrix: one sample per row.
template <typename Scalar>
using SampleMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Affine predictor h(x) = <w, x> + b.
template <typename Scalar>
struct Hypothesis {
  VectorX<Scalar> weights;
  Scalar bias{0};

  Hypothesis() = default;
  Hypothesis(VectorX<Scalar> w, Scalar b) : weights(std::move(w)), bias(b) {}

  static Hypothesis zero(Eigen::Index dim) { return Hypothesis(VectorX<Scalar>::Zero(dim), Scalar(0)); }

  Eigen::Index dim() const { return weights.size(); }

  /// Euclidean norm of the stacked (w, b) vector.
  Scalar norm() const { return std::sqrt(weights.squaredNorm() + bias * bias); }

  bool operator==(const Hypothesis& o) const { return bias == o.bias && weights == o.weights; }
};

using Hypothesisd = Hypothesis<double>;

template <typename Scalar, typename Derived>
Scalar predict(const Hypothesis<Scalar>& h, const Eigen::MatrixBase<Derived>& x) {
  if (x.size() != h.weights.size()) {
    throw std::invalid_argument("predict: feature dimension " + std::to_string(x.size()) +
                                " does not match hypothesis dimension " + std::to_string(h.weights.size()));
  }
  return h.weights.dot(x.derived().transpose().template cast<Scalar>()) + h.bias;
}

/// log(1 + exp(-m)) without overflow for large |m|.
template <typename Scalar>
Scalar logistic_loss(Scalar margin) {
  using std::abs;
  using std::exp;
  using std::log1p;
  return std::max(-margin, Scalar(0)) + log1p(exp(-abs(margin)));
}

/// Squash a non-negative loss into [0, 1): 2 / (1 + exp(-v)) - 1, i.e. tanh(v / 2).
template <typename Scalar>
Scalar squash_loss(Scalar raw) {
  using std::tanh;
  return tanh(raw / Scalar(2));
}

/// Normalized logistic loss as a function of the margin y * h(x). Non-increasing in the margin.
/// Closed form of the composition: tanh(log(1 + e^-m) / 2) = 1 / (1 + 2 e^m).
template <typename Scalar>
Scalar margin_loss(Scalar margin) {
  using std::exp;
  return Scalar(1) / (Scalar(1) + Scalar(2) * exp(margin));
}

struct LossValue {
  double raw;
  double normalized;
};

template <typename Scalar, typename Derived>
LossValue loss_value(const Hypothesis<Scalar>& h, const Eigen::MatrixBase<Derived>& x, int y) {
  if (y != 1 && y != -1) throw std::invalid_argument("loss: label must be -1 or +1");
  const double raw = logistic_loss<double>(y * static_cast<double>(predict(h, x)));
  return {raw, squash_loss(raw)};
}

template <typename Scalar, typename Derived>
Scalar normalized_loss(const Hypothesis<Scalar>& h, const Eigen::MatrixBase<Derived>& x, int y) {
  if (y != 1 && y != -1) throw std::invalid_argument("normalized_loss: label must be -1 or +1");
  return margin_loss<Scalar>(Scalar(y) * predict(h, x));
}

/// Worst-case-over-labels loss gap between two predictions at the same point.
template <typename Scalar>
Scalar prediction_disagreement(Scalar pred_a, Scalar pred_b) {
  using std::abs;
  const Scalar pos = abs(margin_loss(pred_a) - margin_loss(pred_b));
  const Scalar neg = abs(margin_loss(-pred_a) - margin_loss(-pred_b));
  return std::max(pos, neg);
}

template <typename Scalar, typename Derived>
Scalar pointwise_disagreement(const Hypothesis<Scalar>& h, const Hypothesis<Scalar>& h2,
                              const Eigen::MatrixBase<Derived>& x) {
  return prediction_disagreement(predict(h, x), predict(h2, x));
}

/// Mean of pointwise_disagreement over the rows of `samples`.
template <typename Scalar, typename Derived>
Scalar empirical_disagreement(const Hypothesis<Scalar>& h, const Hypothesis<Scalar>& h2,
                              const Eigen::MatrixBase<Derived>& samples) {
  if (samples.rows() == 0) throw std::invalid_argument("empirical_disagreement: empty sample set");
  // Fixed-size chunks keep the summation order independent of how the work is split.
  constexpr Eigen::Index kChunk = 256;
  Scalar total(0);
  for (Eigen::Index start = 0; start < samples.rows(); start += kChunk) {
    const Eigen::Index stop = std::min(samples.rows(), start + kChunk);
    Scalar chunk(0);
    for (Eigen::Index i = start; i < stop; ++i) chunk += pointwise_disagreement(h, h2, samples.row(i));
    total += chunk;
  }
  return total / Scalar(samples.rows());
}

/// Mean absolute loss difference under the observed labels (no max over y).
template <typename Scalar, typename Derived>
Scalar rho_disagreement(const Hypothesis<Scalar>& h, const Hypothesis<Scalar>& h2,
                        const Eigen::MatrixBase<Derived>& samples, const std::vector<int>& labels) {
  using std::abs;
  if (samples.rows() == 0) throw std::invalid_argument("rho_disagreement: empty sample set");
  if (static_cast<std::size_t>(samples.rows()) != labels.size()) {
    throw std::invalid_argument("rho_disagreement: label count does not match sample count");
  }
  Scalar total(0);
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    total += abs(normalized_loss(h, samples.row(i), y) - normalized_loss(h2, samples.row(i), y));
  }
  return total / Scalar(samples.rows());
}

/// Mean normalized loss; the empirical risk R^(h).
template <typename Scalar, typename Derived>
Scalar empirical_risk(const Hypothesis<Scalar>& h, const Eigen::MatrixBase<Derived>& samples,
                      const std::vector<int>& labels) {
  if (samples.rows() == 0) throw std::invalid_argument("empirical_risk: empty sample set");
  Scalar total(0);
  for (Eigen::Index i = 0; i < samples.rows(); ++i)
    total += normalized_loss(h, samples.row(i), labels[static_cast<std::size_t>(i)]);
  return total / Scalar(samples.rows());
}

/// 0/1 error of sign(h(x)); a zero prediction counts as +1.
template <typename Scalar, typename Derived>
double zero_one_error(const Hypothesis<Scalar>& h, const Eigen::MatrixBase<Derived>& samples,
                      const std::vector<int>& labels) {
  if (samples.rows() == 0) throw std::invalid_argument("zero_one_error: empty sample set");
  std::size_t wrong = 0;
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    const int pred = predict(h, samples.row(i)) >= Scalar(0) ? 1 : -1;
    if (pred != labels[static_cast<std::size_t>(i)]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(samples.rows());
}

/// Random bounded-norm hyperplanes. Each (w, b) gets a direction from uniform [-1, 1] coordinates and a
/// radius uniform on (0, norm_bound].
template <typename Scalar>
std::vector<Hypothesis<Scalar>> generate_hyperplane_class(Eigen::Index dim, std::size_t count, Scalar norm_bound,
                                                          std::uint64_t seed) {
  if (count == 0) throw std::invalid_argument("generate_hyperplane_class: count must be >= 1");
  if (dim < 1) throw std::invalid_argument("generate_hyperplane_class: dim must be >= 1");
  if (!(norm_bound > Scalar(0))) throw std::invalid_argument("generate_hyperplane_class: norm_bound must be > 0");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coord(-1.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<Hypothesis<Scalar>> out;
  out.reserve(count);
  VectorX<double> v(dim + 1);
  while (out.size() < count) {
    for (Eigen::Index i = 0; i <= dim; ++i) v[i] = coord(rng);
    const double n = v.norm();
    if (n == 0.0) continue;
    // 1 - U lies in (0, 1], so the radius is never zero.
    const double radius = static_cast<double>(norm_bound) * (1.0 - unit(rng));
    const VectorX<double> scaled = v * (radius / n);
    Hypothesis<Scalar> h(scaled.head(dim).template cast<Scalar>(), static_cast<Scalar>(scaled[dim]));
    // Rounding in the rescale can overshoot the bound by an ulp.
    while (h.norm() > norm_bound) {
      const Scalar shrink = std::nextafter(norm_bound / h.norm(), Scalar(0));
      h.weights *= shrink;
      h.bias *= shrink;
    }
    out.push_back(std::move(h));
  }
  return out;
}

}  // namespace btal

#pragma once

#include "btal/experiment.hpp"
#include "btal/hypothesis.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace btal {

/// Nodes and weights of n-point Gauss-Hermite quadrature for the standard normal (weights sum to 1).
struct GaussHermite {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GaussHermite gauss_hermite(int n);

/// Two-dimensional Gaussian mixture with logistic-link labels: P(y = +1 | x) = sigmoid(link_w . x + link_b).
/// Both the feature density and the label noise are known, so risks have a quadrature oracle.
struct MixtureDistribution {
  std::vector<double> weights;
  std::vector<Eigen::Vector2d> means;
  std::vector<Eigen::Matrix2d> chol;  // lower Cholesky factors of the covariances
  Eigen::Vector2d link_w{1.0, 1.0};
  double link_b{0.0};

  static MixtureDistribution standard();

  double positive_probability(const Eigen::Vector2d& x) const;
  std::pair<Eigen::Vector2d, int> sample(std::mt19937_64& rng) const;

  /// E_x f(x) by tensor-product Gauss-Hermite quadrature per component.
  template <typename F>
  double expect(F&& f, int nodes = 96) const {
    const GaussHermite gh = gauss_hermite(nodes);
    double total = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
      double part = 0.0;
      for (int i = 0; i < nodes; ++i)
        for (int j = 0; j < nodes; ++j) {
          const Eigen::Vector2d z(gh.nodes[i], gh.nodes[j]);
          part += gh.weights[i] * gh.weights[j] * f(Eigen::Vector2d(means[k] + chol[k] * z));
        }
      total += weights[k] * part;
    }
    return total;
  }
};

/// R(h): expected normalized loss under the mixture.
double true_risk(const Hypothesisd& h, const MixtureDistribution& d, int nodes = 96);
/// Expected worst-case loss gap between h and h2 over the feature density.
double true_disagreement(const Hypothesisd& h, const Hypothesisd& h2, const MixtureDistribution& d, int nodes = 96);

struct BoundsCheck {
  std::string name;
  double nominal{0.0};   // nominal rate (delta) or tolerance
  double measured{0.0};  // measured frequency or statistic
  double sigma{0.0};     // binomial standard error at the nominal rate, or the largest standard error
  std::size_t runs{0};
  bool pass{false};
  std::string note;
};

struct BoundsReport {
  std::vector<BoundsCheck> checks;
  double epsilon_proxy{0.0};

  const BoundsCheck* find(const std::string& name) const;
};

struct ConcentrationOptions {
  std::size_t class_size{20};
  std::size_t runs{200};
  std::size_t horizon{500};
  double delta{0.1};
  double norm_bound{3.0};
  std::uint64_t seed{1};
};

/// Fraction of runs in which some pair violates |L(h) - L(h') - (R(h) - R(h'))| <= (1 + L(h, h')) * Delta_T
/// with averaged errors, IWAL query probabilities over the fixed class, and oracle R and L.
BoundsCheck check_concentration(const MixtureDistribution& d, const ConcentrationOptions& opts);

struct UnbiasednessOptions {
  std::size_t class_size{10};
  std::size_t runs{500};
  std::size_t horizon{200};
  double query_probability{0.5};
  double norm_bound{3.0};
  std::uint64_t seed{2};
};

/// Mean over runs of L_T(h) / T against the oracle R(h) for every hypothesis; passes within 3 standard errors.
BoundsCheck check_unbiasedness(const MixtureDistribution& d, const UnbiasednessOptions& opts);

struct HullOptions {
  std::size_t trials{1000};
  std::size_t hull_samples{200};
  std::uint64_t seed{3};
};

/// Largest increase of the maximal pairwise disagreement at x when convex combinations join the set.
BoundsCheck check_hull_equality(const HullOptions& opts);

/// Runs that pruned the initial teacher among BTAL runs without self-improvement.
BoundsCheck check_retention(const ExperimentConfig& cfg);

struct ThetaEstimate {
  std::vector<double> radii;
  std::vector<double> values;  // per-radius mean worst-case gap divided by r; NaN when skipped
  double theta{0.0};
  std::size_t reference{0};
  std::string note;
};

/// Ball membership uses rho on (x, labels); the gap expectation uses the same rows. Radii: `points` log-spaced
/// values from the 5th percentile to the maximum of the positive rho values.
ThetaEstimate estimate_theta(const std::vector<Hypothesisd>& hypotheses, std::size_t reference,
                             const SampleMatrix<double>& x, const std::vector<int>& labels, std::size_t points = 20);

/// Same, on an explicit radii grid.
ThetaEstimate estimate_theta(const std::vector<Hypothesisd>& hypotheses, std::size_t reference,
                             const SampleMatrix<double>& x, const std::vector<int>& labels,
                             const std::vector<double>& radii);

struct BoundsOptions {
  ExperimentConfig retention;  // dataset, class size, seed; n_new is forced to 0
  ConcentrationOptions concentration;
  UnbiasednessOptions unbiasedness;
  HullOptions hull;
};

BoundsReport run_bounds(const BoundsOptions& opts);

void write_bounds_report(const BoundsReport& report, const std::filesystem::path& path);

}  // namespace btal

#include "btal/bounds.hpp"

#include "btal/pruning.hpp"
#include "btal/seeds.hpp"
#include "btal/teaching.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace btal {

GaussHermite gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: need at least one node");
  // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite recurrence.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  GaussHermite gh;
  gh.nodes.resize(n);
  gh.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    gh.nodes[i] = solver.eigenvalues()[i];
    gh.weights[i] = solver.eigenvectors()(0, i) * solver.eigenvectors()(0, i);
  }
  return gh;
}

MixtureDistribution MixtureDistribution::standard() {
  MixtureDistribution d;
  d.weights = {0.6, 0.4};
  d.means = {Eigen::Vector2d(-0.8, 0.2), Eigen::Vector2d(0.9, -0.4)};
  Eigen::Matrix2d a;
  a << 0.7, 0.0, 0.25, 0.5;
  Eigen::Matrix2d b;
  b << 0.5, 0.0, -0.2, 0.8;
  d.chol = {a, b};
  d.link_w = Eigen::Vector2d(2.0, -1.0);
  d.link_b = 0.3;
  return d;
}

double MixtureDistribution::positive_probability(const Eigen::Vector2d& x) const {
  return 1.0 / (1.0 + std::exp(-(link_w.dot(x) + link_b)));
}

std::pair<Eigen::Vector2d, int> MixtureDistribution::sample(std::mt19937_64& rng) const {
  std::discrete_distribution<std::size_t> component(weights.begin(), weights.end());
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t k = component(rng);
  const Eigen::Vector2d z(normal(rng), normal(rng));
  const Eigen::Vector2d x = means[k] + chol[k] * z;
  const int y = unit(rng) < positive_probability(x) ? 1 : -1;
  return {x, y};
}

double true_risk(const Hypothesisd& h, const MixtureDistribution& d, int nodes) {
  if (h.dim() != 2) throw std::invalid_argument("true_risk: hypothesis must be two-dimensional");
  return d.expect(
      [&](const Eigen::Vector2d& x) {
        const double m = predict(h, x);
        const double eta = d.positive_probability(x);
        return eta * margin_loss(m) + (1.0 - eta) * margin_loss(-m);
      },
      nodes);
}

double true_disagreement(const Hypothesisd& h, const Hypothesisd& h2, const MixtureDistribution& d, int nodes) {
  if (h.dim() != 2 || h2.dim() != 2) throw std::invalid_argument("true_disagreement: hypotheses must be 2-D");
  return d.expect([&](const Eigen::Vector2d& x) { return prediction_disagreement(predict(h, x), predict(h2, x)); },
                  nodes);
}

const BoundsCheck* BoundsReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

namespace {

double binomial_sigma(double rate, std::size_t runs) {
  return std::sqrt(rate * (1.0 - rate) / static_cast<double>(runs));
}

}  // namespace

BoundsCheck check_concentration(const MixtureDistribution& d, const ConcentrationOptions& opts) {
  if (opts.runs == 0 || opts.horizon == 0) throw std::invalid_argument("check_concentration: empty schedule");
  const auto hyps = generate_hyperplane_class<double>(2, opts.class_size, opts.norm_bound, derive_seed(opts.seed, 0));
  const std::size_t n = hyps.size();
  std::vector<double> risk(n);
  for (std::size_t i = 0; i < n; ++i) risk[i] = true_risk(hyps[i], d);
  Eigen::MatrixXd gap(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) gap(i, j) = gap(j, i) = i == j ? 0.0 : true_disagreement(hyps[i], hyps[j], d);

  const double delta = delta_t(SlackSchedule{n, opts.delta}, opts.horizon);
  const double horizon = static_cast<double>(opts.horizon);
  std::size_t violated_runs = 0;
  double worst_ratio = 0.0;
  for (std::size_t run = 0; run < opts.runs; ++run) {
    std::mt19937_64 rng(derive_seed(opts.seed, run + 1));
    CandidateSet cands(hyps);
    LearnerTrace trace(n);
    for (std::size_t t = 1; t <= opts.horizon; ++t) {
      const auto [x, y] = d.sample(rng);
      const VectorX<double> xv = x;
      const double p = max_set_disagreement(cands, xv);
      const bool queried = sample_query(p, rng);
      QueryRecord rec{t, std::max(p, kMinQueryProbability), queried, std::nullopt};
      if (queried) rec.label = y;
      update_weighted_errors(trace, cands, rec, xv);
    }
    bool violated = false;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double lhs = std::abs((trace.errors[i] - trace.errors[j]) / horizon - (risk[i] - risk[j]));
        const double slack = (1.0 + gap(i, j)) * delta;
        worst_ratio = std::max(worst_ratio, lhs / slack);
        if (lhs > slack) violated = true;
      }
    if (violated) ++violated_runs;
  }
  BoundsCheck c;
  c.name = "concentration";
  c.nominal = opts.delta;
  c.runs = opts.runs;
  c.measured = static_cast<double>(violated_runs) / static_cast<double>(opts.runs);
  c.sigma = binomial_sigma(opts.delta, opts.runs);
  c.pass = c.measured <= c.nominal + 3.0 * c.sigma;
  std::ostringstream note;
  note << "class=" << n << " T=" << opts.horizon << " largest deviation/slack=" << worst_ratio;
  c.note = note.str();
  return c;
}

BoundsCheck check_unbiasedness(const MixtureDistribution& d, const UnbiasednessOptions& opts) {
  if (opts.runs < 2 || opts.horizon == 0) throw std::invalid_argument("check_unbiasedness: need >= 2 runs");
  if (!(opts.query_probability >= kMinQueryProbability && opts.query_probability <= 1.0)) {
    throw std::invalid_argument("check_unbiasedness: query probability must be in [p_min, 1]");
  }
  const auto hyps = generate_hyperplane_class<double>(2, opts.class_size, opts.norm_bound, derive_seed(opts.seed, 0));
  const std::size_t n = hyps.size();
  Eigen::MatrixXd estimates(opts.runs, n);
  const CandidateSet cands(hyps);
  for (std::size_t run = 0; run < opts.runs; ++run) {
    std::mt19937_64 rng(derive_seed(opts.seed, run + 1));
    LearnerTrace trace(n);
    for (std::size_t t = 1; t <= opts.horizon; ++t) {
      const auto [x, y] = d.sample(rng);
      const bool queried = sample_query(opts.query_probability, rng);
      QueryRecord rec{t, opts.query_probability, queried, std::nullopt};
      if (queried) rec.label = y;
      update_weighted_errors(trace, cands, rec, VectorX<double>(x));
    }
    for (std::size_t i = 0; i < n; ++i) estimates(run, i) = trace.errors[i] / static_cast<double>(opts.horizon);
  }

  BoundsCheck c;
  c.name = "unbiasedness";
  c.nominal = 3.0;
  c.runs = opts.runs;
  c.pass = true;
  const double runs = static_cast<double>(opts.runs);
  for (std::size_t i = 0; i < n; ++i) {
    const auto col = estimates.col(i);
    const double mean = col.mean();
    const double se = std::sqrt((col.array() - mean).square().sum() / (runs - 1.0) / runs);
    const double z = se > 0 ? std::abs(mean - true_risk(hyps[i], d)) / se : 0.0;
    c.measured = std::max(c.measured, z);
    c.sigma = std::max(c.sigma, se);
    if (z > 3.0) c.pass = false;
  }
  std::ostringstream note;
  note << "largest |mean - R|/stderr over " << n << " hypotheses; p=" << opts.query_probability
       << " T=" << opts.horizon;
  c.note = note.str();
  return c;
}

BoundsCheck check_hull_equality(const HullOptions& opts) {
  std::mt19937_64 rng(opts.seed);
  std::uniform_int_distribution<std::size_t> set_size(2, 6);
  std::uniform_int_distribution<int> dims(1, 5);
  std::normal_distribution<double> normal;
  // Brute force over pairs, deliberately independent of the min/max shortcut in max_set_disagreement.
  auto pairwise_max = [](const std::vector<double>& preds) {
    double best = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i)
      for (std::size_t j = i + 1; j < preds.size(); ++j) best = std::max(best, prediction_disagreement(preds[i], preds[j]));
    return best;
  };

  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t trial = 0; trial < opts.trials; ++trial) {
    const int dim = dims(rng);
    std::vector<Hypothesisd> set;
    const std::size_t m = set_size(rng);
    const double scale = std::exp(2.0 * normal(rng));
    for (std::size_t k = 0; k < m; ++k) {
      Hypothesisd h = Hypothesisd::zero(dim);
      for (int j = 0; j < dim; ++j) h.weights[j] = scale * normal(rng);
      h.bias = scale * normal(rng);
      set.push_back(std::move(h));
    }
    VectorX<double> x(dim);
    for (int j = 0; j < dim; ++j) x[j] = normal(rng);

    std::vector<double> preds;
    for (const auto& h : set) preds.push_back(predict(h, x));
    const double base = pairwise_max(preds);

    std::vector<const Hypothesisd*> ptrs;
    for (const auto& h : set) ptrs.push_back(&h);
    const ImprovementConfig cfg{opts.hull_samples, m, 0};
    for (const auto& h : generate_convex(ptrs, cfg, rng)) preds.push_back(predict(h, x));
    worst = std::max(worst, pairwise_max(preds) - base);
  }
  BoundsCheck c;
  c.name = "hull_equality";
  c.nominal = 1e-9;
  c.measured = worst;
  c.runs = opts.trials;
  c.pass = worst <= 1e-9;
  c.note = "largest excess of the maximal disagreement after adding hull samples";
  return c;
}

BoundsCheck check_retention(const ExperimentConfig& base) {
  ExperimentConfig cfg = base;
  cfg.algorithm = Algorithm::Btal;
  cfg.n_new = 0;
  const auto results = run_experiment(cfg);
  std::size_t pruned = 0;
  for (const auto& r : results)
    if (r.summary.initial_teacher_pruned) ++pruned;
  BoundsCheck c;
  c.name = "retention";
  c.nominal = cfg.delta;
  c.runs = results.size();
  c.measured = static_cast<double>(pruned) / static_cast<double>(c.runs);
  c.sigma = binomial_sigma(cfg.delta, c.runs);
  c.pass = c.measured <= c.nominal + 3.0 * c.sigma;
  c.note = cfg.dataset + ": " + std::to_string(pruned) + " of " + std::to_string(c.runs) + " runs pruned the teacher";
  return c;
}

ThetaEstimate estimate_theta(const std::vector<Hypothesisd>& hypotheses, std::size_t reference,
                             const SampleMatrix<double>& x, const std::vector<int>& labels,
                             const std::vector<double>& radii) {
  if (hypotheses.empty() || reference >= hypotheses.size()) throw std::invalid_argument("estimate_theta: bad reference");
  if (x.rows() == 0 || static_cast<std::size_t>(x.rows()) != labels.size()) {
    throw std::invalid_argument("estimate_theta: need matching non-empty samples and labels");
  }
  const Hypothesisd& ref = hypotheses[reference];
  const std::size_t n = hypotheses.size();
  std::vector<double> rho(n);
  for (std::size_t i = 0; i < n; ++i) rho[i] = rho_disagreement(ref, hypotheses[i], x, labels);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rho[a] < rho[b]; });

  ThetaEstimate est;
  est.reference = reference;
  est.radii = radii;
  est.values.assign(radii.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<std::size_t> ranked(radii.size());
  std::iota(ranked.begin(), ranked.end(), std::size_t{0});
  std::sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) { return radii[a] < radii[b]; });

  // Balls are nested in r, so a running per-sample maximum over hypotheses sorted by rho serves every radius.
  const auto rows = static_cast<std::size_t>(x.rows());
  VectorX<double> ref_pred(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) ref_pred[r] = predict(ref, x.row(r));
  std::vector<double> running(rows, 0.0);
  std::size_t next = 0;
  std::size_t skipped = 0;
  for (std::size_t g : ranked) {
    const double r = radii[g];
    if (!(r > 0.0)) throw std::invalid_argument("estimate_theta: radii must be positive");
    for (; next < n && rho[order[next]] <= r; ++next) {
      const Hypothesisd& h = hypotheses[order[next]];
      for (std::size_t s = 0; s < rows; ++s) {
        const double gap = prediction_disagreement(ref_pred[static_cast<Eigen::Index>(s)],
                                                   predict(h, x.row(static_cast<Eigen::Index>(s))));
        running[s] = std::max(running[s], gap);
      }
    }
    if (next == 0) {
      ++skipped;
      continue;
    }
    est.values[g] = std::accumulate(running.begin(), running.end(), 0.0) / static_cast<double>(rows) / r;
    est.theta = std::max(est.theta, est.values[g]);
  }
  if (skipped) est.note = std::to_string(skipped) + " radii skipped: empty ball";
  return est;
}

ThetaEstimate estimate_theta(const std::vector<Hypothesisd>& hypotheses, std::size_t reference,
                             const SampleMatrix<double>& x, const std::vector<int>& labels, std::size_t points) {
  if (points < 2) throw std::invalid_argument("estimate_theta: need at least two radii");
  if (hypotheses.empty() || reference >= hypotheses.size()) throw std::invalid_argument("estimate_theta: bad reference");
  std::vector<double> positive;
  for (const auto& h : hypotheses) {
    const double r = rho_disagreement(hypotheses[reference], h, x, labels);
    if (r > 0.0) positive.push_back(r);
  }
  if (positive.empty()) {
    ThetaEstimate est;
    est.reference = reference;
    est.note = "no hypothesis at positive rho distance";
    return est;
  }
  std::sort(positive.begin(), positive.end());
  const double lo = positive[static_cast<std::size_t>(std::floor(0.05 * static_cast<double>(positive.size() - 1)))];
  const double hi = positive.back();
  std::vector<double> radii(points);
  for (std::size_t k = 0; k < points; ++k) {
    const double f = static_cast<double>(k) / static_cast<double>(points - 1);
    radii[k] = hi > lo ? std::exp(std::log(lo) + f * (std::log(hi) - std::log(lo))) : lo;
  }
  ThetaEstimate est = estimate_theta(hypotheses, reference, x, labels, radii);
  const std::string floor_note = "radii start at the 5th percentile of positive rho";
  est.note = est.note.empty() ? floor_note : est.note + "; " + floor_note;
  return est;
}

BoundsReport run_bounds(const BoundsOptions& opts) {
  BoundsReport report;
  const MixtureDistribution d = MixtureDistribution::standard();
  report.checks.push_back(check_concentration(d, opts.concentration));
  report.checks.push_back(check_unbiasedness(d, opts.unbiasedness));
  report.checks.push_back(check_hull_equality(opts.hull));
  report.checks.push_back(check_retention(opts.retention));

  // Theta and the epsilon proxy on repeat 0 of the retention dataset.
  ExperimentConfig cfg = opts.retention;
  cfg.algorithm = Algorithm::Btal;
  const DatasetManifest manifest =
      cfg.manifest.empty() ? DatasetManifest::builtin() : DatasetManifest::load(cfg.manifest);
  const ResolvedDataset resolved =
      resolve_dataset(manifest, cfg.dataset, cfg.data_root.empty() ? default_data_root() : cfg.data_root);
  const RunInputs in = prepare_run(resolved, cfg, 0);
  const auto& hyps = in.hypothesis_class;
  std::size_t teacher = 0;
  std::size_t holdout_best = 0;
  double teacher_risk = std::numeric_limits<double>::infinity();
  double holdout_risk = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    const double tr = empirical_risk(hyps[i], in.data.train, in.data.train_labels);
    if (tr < teacher_risk) teacher_risk = tr, teacher = i;
    const double te = empirical_risk(hyps[i], in.data.test, in.data.test_labels);
    if (te < holdout_risk) holdout_risk = te, holdout_best = i;
  }
  std::vector<int> subset_labels;
  for (std::size_t r : in.data.subset_rows) subset_labels.push_back(in.data.train_labels[r]);
  const ThetaEstimate theta = estimate_theta(hyps, teacher, *in.data.subset, subset_labels);
  report.epsilon_proxy = empirical_disagreement(hyps[teacher], hyps[holdout_best], *in.data.subset);

  BoundsCheck t;
  t.name = "theta";
  t.measured = theta.theta;
  t.runs = 1;
  t.pass = std::isfinite(theta.theta);
  t.note = cfg.dataset + " teacher reference; " + theta.note;
  report.checks.push_back(t);

  BoundsCheck e;
  e.name = "epsilon_proxy";
  e.measured = report.epsilon_proxy;
  e.runs = 1;
  e.pass = report.epsilon_proxy >= 0.0 && report.epsilon_proxy <= 1.0;
  e.note = "disagreement between the teacher and the holdout-best class member";
  report.checks.push_back(e);
  return report;
}

void write_bounds_report(const BoundsReport& report, const std::filesystem::path& path) {
  std::ostringstream os;
  os << "check,nominal,measured,sigma,runs,pass,note\n";
  char buf[256];
  for (const auto& c : report.checks) {
    std::snprintf(buf, sizeof buf, "%s,%.10g,%.10g,%.10g,%zu,%s,", c.name.c_str(), c.nominal, c.measured, c.sigma,
                  c.runs, c.pass ? "pass" : "fail");
    std::string note = c.note;
    std::replace(note.begin(), note.end(), ',', ';');
    os << buf << note << '\n';
  }
  write_file_atomic(path, os.str());
}

}  // namespace btal

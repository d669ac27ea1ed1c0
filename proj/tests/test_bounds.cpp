#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "btal/bounds.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

using btal::Hypothesisd;
using btal::MixtureDistribution;

namespace {

Hypothesisd make(double w0, double w1, double b) {
  Hypothesisd h = Hypothesisd::zero(2);
  h.weights << w0, w1;
  h.bias = b;
  return h;
}

}  // namespace

TEST_CASE("Gauss-Hermite rule integrates polynomials exactly") {
  for (int n : {3, 8, 32, 96}) {
    const auto gh = btal::gauss_hermite(n);
    REQUIRE(gh.nodes.size() == static_cast<std::size_t>(n));
    double w = 0, m1 = 0, m2 = 0, m4 = 0;
    for (int i = 0; i < n; ++i) {
      const double z = gh.nodes[static_cast<std::size_t>(i)];
      const double wi = gh.weights[static_cast<std::size_t>(i)];
      CHECK(wi > 0.0);
      w += wi;
      m1 += wi * z;
      m2 += wi * z * z;
      m4 += wi * z * z * z * z;
    }
    CHECK(w == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(m1) < 1e-12);
    CHECK(m2 == doctest::Approx(1.0).epsilon(1e-11));
    CHECK(m4 == doctest::Approx(3.0).epsilon(1e-10));
  }
  CHECK_THROWS_AS(btal::gauss_hermite(0), std::invalid_argument);
}

TEST_CASE("mixture moments from quadrature match the closed form") {
  const auto d = MixtureDistribution::standard();
  CHECK(d.expect([](const Eigen::Vector2d&) { return 1.0; }) == doctest::Approx(1.0).epsilon(1e-12));
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d second = Eigen::Matrix2d::Zero();
  for (std::size_t k = 0; k < d.weights.size(); ++k) {
    mean += d.weights[k] * d.means[k];
    second += d.weights[k] * (d.chol[k] * d.chol[k].transpose() + d.means[k] * d.means[k].transpose());
  }
  CHECK(d.expect([](const Eigen::Vector2d& x) { return x[0]; }) == doctest::Approx(mean[0]).epsilon(1e-12));
  CHECK(d.expect([](const Eigen::Vector2d& x) { return x[0] * x[1]; }) == doctest::Approx(second(0, 1)).epsilon(1e-11));
}

TEST_CASE("true risk agrees with Monte Carlo and across quadrature orders") {
  const auto d = MixtureDistribution::standard();
  std::mt19937_64 rng(1);
  const std::vector<Hypothesisd> hs{make(2, -1, 0.3), make(-1, 0.5, 0), make(0.2, 0.2, -1)};
  constexpr int kSamples = 200000;
  for (const auto& h : hs) {
    const double quad = btal::true_risk(h, d);
    CHECK(std::abs(quad - btal::true_risk(h, d, 64)) < 1e-6);
    double sum = 0, sq = 0;
    for (int i = 0; i < kSamples; ++i) {
      const auto [x, y] = d.sample(rng);
      const double l = btal::normalized_loss(h, Eigen::VectorXd(x), y);
      sum += l;
      sq += l * l;
    }
    const double mc = sum / kSamples;
    const double se = std::sqrt((sq / kSamples - mc * mc) / kSamples);
    CHECK(std::abs(quad - mc) <= 4.0 * se);
  }
  CHECK(btal::true_risk(make(0, 0, 0), d) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("true disagreement") {
  const auto d = MixtureDistribution::standard();
  const auto a = make(2, -1, 0.3);
  const auto b = make(-1, 0.5, 0);
  CHECK(btal::true_disagreement(a, a, d) == 0.0);
  CHECK(btal::true_disagreement(a, b, d) == doctest::Approx(btal::true_disagreement(b, a, d)).epsilon(1e-14));
  // The risk gap is dominated by the disagreement.
  CHECK(std::abs(btal::true_risk(a, d) - btal::true_risk(b, d)) <= btal::true_disagreement(a, b, d));
}

TEST_CASE("concentration check") {
  const auto d = MixtureDistribution::standard();
  btal::ConcentrationOptions opts;
  opts.runs = 60;
  opts.horizon = 200;
  const auto c = btal::check_concentration(d, opts);
  CHECK(c.name == "concentration");
  CHECK(c.runs == 60);
  CHECK(c.pass);
  CHECK(c.measured <= c.nominal + 3.0 * c.sigma);
  CHECK(c.sigma == doctest::Approx(std::sqrt(0.1 * 0.9 / 60)));

  // One round: the slack exceeds any averaged error gap.
  opts.horizon = 1;
  opts.runs = 20;
  CHECK(btal::check_concentration(d, opts).measured == 0.0);
}

TEST_CASE("unbiasedness check") {
  const auto d = MixtureDistribution::standard();
  btal::UnbiasednessOptions opts;
  opts.runs = 100;
  opts.horizon = 100;
  const auto c = btal::check_unbiasedness(d, opts);
  CHECK(c.pass);
  CHECK(c.measured <= 3.0);
}

TEST_CASE("hull equality check") {
  btal::HullOptions opts;
  opts.trials = 200;
  const auto c = btal::check_hull_equality(opts);
  CHECK(c.pass);
  CHECK(c.measured <= 1e-9);
  CHECK(c.runs == 200);
}

TEST_CASE("theta on hand-checkable classes") {
  btal::SampleMatrix<double> x(1, 2);
  x << 0.5, 0.25;
  const std::vector<int> y{1};
  const auto a = make(1, 0, 0);
  const auto b = make(-2, 1, 0.5);
  const double pa = btal::predict(a, Eigen::VectorXd(x.row(0).transpose()));
  const double pb = btal::predict(b, Eigen::VectorXd(x.row(0).transpose()));
  const double rho = std::abs(btal::margin_loss(pa) - btal::margin_loss(pb));
  const double gap = btal::prediction_disagreement(pa, pb);

  // Only the reference is inside the small ball.
  const auto tight = btal::estimate_theta({a, b}, 0, x, y, std::vector<double>{rho / 2});
  CHECK(tight.values[0] == 0.0);
  const auto wide = btal::estimate_theta({a, b}, 0, x, y, std::vector<double>{rho, 2 * rho});
  CHECK(wide.values[0] == doctest::Approx(gap / rho).epsilon(1e-14));
  CHECK(wide.values[1] == doctest::Approx(gap / (2 * rho)).epsilon(1e-14));
  CHECK(wide.theta == doctest::Approx(gap / rho).epsilon(1e-14));
  CHECK_THROWS_AS(btal::estimate_theta({a, b}, 0, x, y, std::vector<double>{0.0}), std::invalid_argument);
  CHECK_THROWS_AS(btal::estimate_theta({a, b}, 2, x, y, std::vector<double>{1.0}), std::invalid_argument);

  const auto lonely = btal::estimate_theta({a, a}, 0, x, y, std::size_t{20});
  CHECK(lonely.theta == 0.0);
  CHECK_FALSE(lonely.note.empty());
}

TEST_CASE("theta is unchanged by duplicating the class") {
  std::mt19937_64 rng(4);
  const auto cls = btal::generate_hyperplane_class<double>(2, 60, 5.0, 9);
  btal::SampleMatrix<double> x(80, 2);
  std::vector<int> y(80);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Eigen::Index r = 0; r < 80; ++r) {
    x(r, 0) = u(rng);
    x(r, 1) = u(rng);
    y[static_cast<std::size_t>(r)] = x(r, 0) > x(r, 1) ? 1 : -1;
  }
  auto doubled = cls;
  doubled.insert(doubled.end(), cls.begin(), cls.end());
  const auto one = btal::estimate_theta(cls, 3, x, y, std::size_t{20});
  const auto two = btal::estimate_theta(doubled, 3, x, y, std::size_t{20});
  REQUIRE(one.radii.size() == 20);
  CHECK(one.radii == two.radii);
  CHECK(one.theta == two.theta);
  CHECK(std::isfinite(one.theta));
  for (std::size_t k = 1; k < one.radii.size(); ++k) CHECK(one.radii[k] > one.radii[k - 1]);
}

TEST_CASE("retention check on a small bundled set") {
  btal::ExperimentConfig cfg;
  cfg.dataset = "wine";
  cfg.class_size = 300;
  cfg.norm_bound = 20.0;
  cfg.repeats = 4;
  cfg.jobs = 1;
  cfg.data_root = BTAL_TEST_DATA_DIR;
  const auto c = btal::check_retention(cfg);
  CHECK(c.runs == 4);
  CHECK(c.name == "retention");
  CHECK(c.pass == (c.measured <= c.nominal + 3.0 * c.sigma));
  CHECK(c.measured <= 0.25);
}

TEST_CASE("report file") {
  btal::BoundsReport r;
  r.checks.push_back({"hull_equality", 1e-9, 0.0, 0.0, 5, true, "a note, with a comma"});
  const auto path = std::filesystem::temp_directory_path() / "btal_bounds_report.csv";
  btal::write_bounds_report(r, path);
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str().rfind("check,nominal,measured,sigma,runs,pass,note\n", 0) == 0);
  CHECK(ss.str().find("hull_equality") != std::string::npos);
  CHECK(r.find("hull_equality") != nullptr);
  CHECK(r.find("missing") == nullptr);
  std::filesystem::remove(path);
}

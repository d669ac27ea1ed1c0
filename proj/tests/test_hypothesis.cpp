#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "btal/hypothesis.hpp"

#include <cmath>
#include <random>

using btal::Hypothesisd;
using btal::SampleMatrix;
using btal::VectorX;

namespace {

Hypothesisd make(std::initializer_list<double> w, double b) {
  Hypothesisd h = Hypothesisd::zero(static_cast<Eigen::Index>(w.size()));
  Eigen::Index i = 0;
  for (double v : w) h.weights[i++] = v;
  h.bias = b;
  return h;
}

// Long-double evaluation of g(l(m)) straight from the two defining formulas.
long double reference_loss(long double margin) {
  const long double raw = std::log1p(std::exp(-margin));
  return 2.0L / (1.0L + std::exp(-raw)) - 1.0L;
}

Hypothesisd random_hypothesis(std::mt19937_64& rng, Eigen::Index dim, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  Hypothesisd h = Hypothesisd::zero(dim);
  for (Eigen::Index j = 0; j < dim; ++j) h.weights[j] = n(rng);
  h.bias = n(rng);
  return h;
}

SampleMatrix<double> random_points(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index dim) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SampleMatrix<double> x(rows, dim);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < dim; ++c) x(r, c) = u(rng);
  return x;
}

}  // namespace

TEST_CASE("predict evaluates the affine map") {
  CHECK(btal::predict(Hypothesisd::zero(3), VectorX<double>::Constant(3, 0.4)) == 0.0);
  CHECK(btal::predict(make({1, 1}, -1), Eigen::Vector2d(0.5, 0.5)) == doctest::Approx(0.0));
  CHECK(btal::predict(make({2}, 0.1), VectorX<double>::Constant(1, 0.3)) == doctest::Approx(0.7).epsilon(1e-15));
  CHECK_THROWS_AS(btal::predict(make({1, 2}, 0), VectorX<double>::Zero(3)), std::invalid_argument);
}

TEST_CASE("normalized loss at hand-checked margins") {
  const auto zero = btal::loss_value(make({0}, 0), VectorX<double>::Zero(1), 1);
  CHECK(zero.raw == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(zero.normalized == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  const auto wrong = btal::loss_value(make({1}, 0), VectorX<double>::Ones(1), -1);
  CHECK(wrong.raw == doctest::Approx(1.31326168751822283).epsilon(1e-14));
  CHECK(wrong.normalized == doctest::Approx(0.576116884765829110).epsilon(1e-14));
  CHECK(btal::margin_loss(-1.0) == doctest::Approx(0.576116884765829110).epsilon(1e-14));

  CHECK(btal::margin_loss(40.0) < 1e-16);
  CHECK(btal::margin_loss(1e3) == 0.0);
  CHECK(btal::margin_loss(-1e3) == 1.0);
  CHECK_THROWS_AS(btal::normalized_loss(make({1}, 0), VectorX<double>::Ones(1), 0), std::invalid_argument);
}

TEST_CASE("normalized loss matches the composed definition and stays in range") {
  for (double m = -30.0; m <= 30.0; m += 0.37) {
    const long double ref = reference_loss(m);
    CHECK(btal::margin_loss(m) == doctest::Approx(static_cast<double>(ref)).epsilon(1e-12));
    CHECK(btal::squash_loss(btal::logistic_loss(m)) == doctest::Approx(btal::margin_loss(m)).epsilon(1e-12));
  }
  double previous = 1.0;
  for (double m = -1e3; m <= 1e3; m += 0.5) {
    const double v = btal::margin_loss(m);
    CHECK(std::isfinite(v));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(v <= previous);
    previous = v;
  }
  CHECK(std::isfinite(btal::logistic_loss(-1e3)));
  CHECK(btal::logistic_loss(-1e3) == doctest::Approx(1e3));
}

TEST_CASE("pointwise disagreement on the opposite pair") {
  const Hypothesisd h = make({1}, 0);
  const Hypothesisd h2 = make({-1}, 0);
  const VectorX<double> x = VectorX<double>::Ones(1);
  const double expected = 0.420754481268865503;  // |g(l(-1)) - g(l(1))|, both labels give the same gap
  CHECK(btal::pointwise_disagreement(h, h2, x) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(btal::pointwise_disagreement(h2, h, x) == btal::pointwise_disagreement(h, h2, x));
  CHECK(btal::pointwise_disagreement(h, h, x) == 0.0);
}

TEST_CASE("pointwise disagreement is a pseudometric") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto x = random_points(rng, 1, 4).row(0).transpose().eval();
    const auto a = random_hypothesis(rng, 4, 3.0);
    const auto b = random_hypothesis(rng, 4, 3.0);
    const auto c = random_hypothesis(rng, 4, 3.0);
    const double ab = btal::pointwise_disagreement(a, b, x);
    const double bc = btal::pointwise_disagreement(b, c, x);
    const double ac = btal::pointwise_disagreement(a, c, x);
    CHECK(ab == btal::pointwise_disagreement(b, a, x));
    CHECK(ac <= ab + bc + 1e-12);
    CHECK(ab >= 0.0);
    CHECK(ab <= 1.0);
  }
}

TEST_CASE("empirical and rho disagreement against two-loop references") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto h = random_hypothesis(rng, 3, 2.0);
    const auto h2 = random_hypothesis(rng, 3, 2.0);
    const auto x = random_points(rng, 100, 3);
    std::vector<int> y(100);
    for (auto& v : y) v = rng() % 2 ? 1 : -1;

    double emp = 0.0;
    double rho = 0.0;
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      double worst = 0.0;
      for (int label : {-1, 1}) {
        const double la = static_cast<double>(reference_loss(label * (x.row(r).dot(h.weights) + h.bias)));
        const double lb = static_cast<double>(reference_loss(label * (x.row(r).dot(h2.weights) + h2.bias)));
        worst = std::max(worst, std::abs(la - lb));
        if (label == y[static_cast<std::size_t>(r)]) rho += std::abs(la - lb);
      }
      emp += worst;
    }
    emp /= 100.0;
    rho /= 100.0;
    const double got_emp = btal::empirical_disagreement(h, h2, x);
    const double got_rho = btal::rho_disagreement(h, h2, x, y);
    CHECK(got_emp == doctest::Approx(emp).epsilon(1e-12));
    CHECK(got_rho == doctest::Approx(rho).epsilon(1e-12));
    CHECK(got_rho <= got_emp + 1e-15);

    // Risk gap is bounded by the disagreement on the same points.
    const double gap = std::abs(btal::empirical_risk(h, x, y) - btal::empirical_risk(h2, x, y));
    CHECK(gap <= got_emp + 1e-12);
  }
}

TEST_CASE("empirical disagreement edge cases") {
  const Hypothesisd h = make({1, -2}, 0.5);
  const Hypothesisd h2 = make({0.3, 1}, -0.2);
  SampleMatrix<double> one(1, 2);
  one << 0.25, 0.75;
  CHECK(btal::empirical_disagreement(h, h2, one) ==
        doctest::Approx(btal::pointwise_disagreement(h, h2, one.row(0))).epsilon(1e-15));
  CHECK(btal::empirical_disagreement(h, h, one) == 0.0);
  const SampleMatrix<double> empty(0, 2);
  CHECK_THROWS_AS(btal::empirical_disagreement(h, h2, empty), std::invalid_argument);
  CHECK_THROWS_AS(btal::rho_disagreement(h, h2, empty, std::vector<int>{}), std::invalid_argument);
}

TEST_CASE("chunked summation is independent of row count alignment") {
  std::mt19937_64 rng(8);
  const auto h = random_hypothesis(rng, 2, 1.0);
  const auto h2 = random_hypothesis(rng, 2, 1.0);
  const auto x = random_points(rng, 1000, 2);
  long double naive = 0.0L;
  for (Eigen::Index r = 0; r < x.rows(); ++r) naive += btal::pointwise_disagreement(h, h2, x.row(r));
  CHECK(btal::empirical_disagreement(h, h2, x) == doctest::Approx(static_cast<double>(naive / 1000.0L)).epsilon(1e-13));
}

TEST_CASE("hyperplane class generation") {
  const auto cls = btal::generate_hyperplane_class<double>(3, 10000, 1.0, 42);
  CHECK(cls.size() == 10000);
  for (const auto& h : cls) {
    CHECK(h.weights.size() == 3);
    CHECK(h.norm() <= 1.0);
  }
  CHECK(cls == btal::generate_hyperplane_class<double>(3, 10000, 1.0, 42));
  CHECK_FALSE(cls == btal::generate_hyperplane_class<double>(3, 10000, 1.0, 43));

  const auto wide = btal::generate_hyperplane_class<double>(5, 2000, 20.0, 1);
  double largest = 0.0;
  for (const auto& h : wide) {
    CHECK(h.norm() <= 20.0);
    largest = std::max(largest, h.norm());
  }
  CHECK(largest > 19.0);  // radii cover the whole range
  CHECK_THROWS_AS(btal::generate_hyperplane_class<double>(3, 0, 1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(btal::generate_hyperplane_class<double>(3, 5, 0.0, 1), std::invalid_argument);
}

TEST_CASE("zero-one error counts a non-negative prediction as positive") {
  SampleMatrix<double> x(3, 1);
  x << 0.0, 1.0, -1.0;
  const Hypothesisd h = make({1}, 0);
  CHECK(btal::zero_one_error(h, x, std::vector<int>{1, 1, -1}) == 0.0);
  CHECK(btal::zero_one_error(h, x, std::vector<int>{-1, 1, 1}) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("float instantiation") {
  btal::Hypothesis<float> h = btal::Hypothesis<float>::zero(2);
  h.weights << 1.0f, -1.0f;
  const Eigen::Vector2f x(0.25f, 0.75f);
  CHECK(btal::predict(h, x) == doctest::Approx(-0.5f));
  CHECK(btal::normalized_loss(h, x, -1) == doctest::Approx(btal::margin_loss(0.5)).epsilon(1e-6));
}

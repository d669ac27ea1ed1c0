#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "btal/teaching.hpp"

#include <cmath>
#include <random>

using btal::Hypothesisd;
using btal::SampleMatrix;
using btal::Teacher;

namespace {

Hypothesisd make(std::initializer_list<double> w, double b) {
  Hypothesisd h = Hypothesisd::zero(static_cast<Eigen::Index>(w.size()));
  Eigen::Index i = 0;
  for (double v : w) h.weights[i++] = v;
  h.bias = b;
  return h;
}

Hypothesisd random_hypothesis(std::mt19937_64& rng, Eigen::Index dim) {
  std::normal_distribution<double> n(0.0, 2.0);
  Hypothesisd h = Hypothesisd::zero(dim);
  for (Eigen::Index j = 0; j < dim; ++j) h.weights[j] = n(rng);
  h.bias = n(rng);
  return h;
}

std::shared_ptr<const SampleMatrix<double>> random_subset(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index dim) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto s = std::make_shared<SampleMatrix<double>>(rows, dim);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < dim; ++c) (*s)(r, c) = u(rng);
  return s;
}

}  // namespace

TEST_CASE("teacher feedback") {
  std::mt19937_64 rng(1);
  const auto subset = random_subset(rng, 700, 3);
  const Hypothesisd ht = random_hypothesis(rng, 3);
  Teacher teacher(ht, subset);
  CHECK(teacher.feedback(ht) == 0.0);
  for (int trial = 0; trial < 30; ++trial) {
    const auto h = random_hypothesis(rng, 3);
    const double f = teacher.feedback(h);
    CHECK(f == doctest::Approx(btal::empirical_disagreement(ht, h, *subset)).epsilon(1e-12));
    CHECK(btal::teacher_feedback(teacher, h) == f);
    CHECK(f >= 0.0);
    CHECK(f <= 1.0);
  }
  CHECK_THROWS_AS(teacher.feedback(Hypothesisd::zero(2)), std::invalid_argument);
  CHECK_THROWS_AS(Teacher(ht, std::make_shared<SampleMatrix<double>>(0, 3)), std::invalid_argument);
  CHECK_THROWS_AS(Teacher(ht, nullptr), std::invalid_argument);
}

TEST_CASE("teacher history") {
  std::mt19937_64 rng(2);
  Teacher teacher(make({1, 0}, 0), random_subset(rng, 10, 2));
  teacher.record_initial(0.3);
  CHECK_THROWS_AS(teacher.record_initial(0.3), std::logic_error);
  const Hypothesisd next = make({0, 1}, 0);
  teacher.install(next, 5, 0.2);
  CHECK(teacher.current() == next);
  CHECK(teacher.feedback(next) == 0.0);
  CHECK_THROWS_AS(teacher.install(next, 5, 0.1), std::logic_error);
  REQUIRE(teacher.history().size() == 2);
  CHECK(teacher.history()[1].round == 5);
  CHECK(teacher.history()[1].proxy == 0.2);
}

TEST_CASE("convex combinations") {
  const Hypothesisd a = make({1, 2}, 3);
  const Hypothesisd b = make({-1, 4}, 0.5);
  const Hypothesisd* both[] = {&a, &b};
  const double vertex[] = {0.0, 1.0};
  CHECK(btal::convex_combination(both, vertex) == b);
  const double half[] = {0.5, 0.5};
  CHECK(btal::convex_combination(both, half) == make({0, 3}, 1.75));
  const double one[] = {1.0};
  CHECK_THROWS_AS(btal::convex_combination(both, one), std::invalid_argument);

  // Predictions are linear in the weights.
  std::mt19937_64 rng(3);
  const auto c = random_hypothesis(rng, 2);
  const Hypothesisd* three[] = {&a, &b, &c};
  const double lambda[] = {0.2, 0.3, 0.5};
  const auto mix = btal::convex_combination(three, lambda);
  const Eigen::Vector2d x(0.4, 0.9);
  const double expected = 0.2 * btal::predict(a, Eigen::VectorXd(x)) + 0.3 * btal::predict(b, Eigen::VectorXd(x)) +
                          0.5 * btal::predict(c, Eigen::VectorXd(x));
  CHECK(btal::predict(mix, Eigen::VectorXd(x)) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("generated hull points stay inside the hull") {
  std::mt19937_64 rng(4);
  std::vector<Hypothesisd> pool;
  for (int i = 0; i < 12; ++i) pool.push_back(random_hypothesis(rng, 2));
  std::vector<const Hypothesisd*> alive;
  for (const auto& h : pool) alive.push_back(&h);

  btal::ImprovementConfig cfg;
  cfg.n = 200;
  std::mt19937_64 gen(9);
  const auto out = btal::generate_convex(alive, cfg, gen);
  REQUIRE(out.size() == 200);
  // Every coordinate lies within the pool's range; the bias too.
  for (const auto& h : out) {
    for (Eigen::Index j = 0; j < 2; ++j) {
      double lo = 1e300, hi = -1e300;
      for (const auto& p : pool) {
        lo = std::min(lo, p.weights[j]);
        hi = std::max(hi, p.weights[j]);
      }
      CHECK(h.weights[j] >= lo - 1e-12);
      CHECK(h.weights[j] <= hi + 1e-12);
    }
  }

  std::mt19937_64 again(9);
  CHECK(btal::generate_convex(alive, cfg, again) == out);

  // A single live member is returned unchanged.
  std::vector<const Hypothesisd*> single{&pool[0]};
  cfg.n = 3;
  for (const auto& h : btal::generate_convex(single, cfg, gen)) {
    CHECK(h.weights.isApprox(pool[0].weights, 1e-15));
    CHECK(h.bias == doctest::Approx(pool[0].bias));
  }
  CHECK_THROWS_AS(btal::generate_convex(std::span<const Hypothesisd* const>{}, cfg, gen), std::invalid_argument);
}

TEST_CASE("convex supports are drawn uniformly without repetition") {
  // One-hot directions in 6 dimensions make the support and the weights readable from the output.
  std::vector<Hypothesisd> pool;
  for (int i = 0; i < 6; ++i) {
    Hypothesisd h = Hypothesisd::zero(6);
    h.weights[i] = 1.0;
    pool.push_back(h);
  }
  std::vector<const Hypothesisd*> alive;
  for (const auto& h : pool) alive.push_back(&h);
  btal::ImprovementConfig cfg;
  cfg.n = 6000;
  cfg.max_support = 3;
  std::mt19937_64 rng(10);
  std::vector<int> hits(6, 0);
  double first_weight = 0.0;
  int first_count = 0;
  for (const auto& h : btal::generate_convex(alive, cfg, rng)) {
    int support = 0;
    for (int i = 0; i < 6; ++i)
      if (h.weights[i] > 0.0) {
        ++support;
        ++hits[static_cast<std::size_t>(i)];
      }
    CHECK(support == 3);
    CHECK(h.weights.sum() == doctest::Approx(1.0).epsilon(1e-14));
    if (h.weights[0] > 0.0) {
      first_weight += h.weights[0];
      ++first_count;
    }
  }
  // Each member appears in half of the supports; Dirichlet(1,1,1) weights average 1/3.
  for (int c : hits) CHECK(std::abs(c - 3000) < 5 * std::sqrt(6000 * 0.25));
  CHECK(first_weight / first_count == doctest::Approx(1.0 / 3.0).epsilon(0.03));
}

TEST_CASE("improvement score") {
  CHECK(btal::improvement_score(0.4, 0.4, 0.0, 0.25) == -0.25);
  // Exact boundary: the gap equals the slack, so beta is zero.
  CHECK(btal::improvement_score(1.0, 0.5, 1.0, 0.25) == 0.0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const double lt = u(rng), lc = u(rng), f = u(rng), d = u(rng);
    CHECK(btal::improvement_score(lt, lc, f, d) == doctest::Approx(lt - lc - d - f * d).epsilon(1e-14));
  }
}

TEST_CASE("improvement score from a trace") {
  std::mt19937_64 rng(6);
  const auto subset = random_subset(rng, 50, 2);
  const Hypothesisd ht = random_hypothesis(rng, 2);
  const Teacher teacher(ht, subset);
  btal::CandidateSet none;
  btal::LearnerTrace trace(0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t t = 1; t <= 40; ++t) {
    const Eigen::VectorXd x = Eigen::Vector2d(u(rng), u(rng));
    const bool q = t % 3 != 0;
    btal::QueryRecord rec{t, 0.5, q, std::nullopt};
    if (q) rec.label = u(rng) < 0.5 ? 1 : -1;
    btal::update_weighted_errors(trace, none, rec, x);
  }
  CHECK(btal::improvement_score(trace, 0.1, teacher, ht) == doctest::Approx(-0.1).epsilon(1e-14));
  const auto cand = random_hypothesis(rng, 2);
  double lt = 0.0, lc = 0.0;
  for (const auto& q : trace.log) {
    lt += btal::normalized_loss(ht, q.x, q.y) / q.p;
    lc += btal::normalized_loss(cand, q.x, q.y) / q.p;
  }
  const double expected = (lt - lc) / 40.0 - (1.0 + btal::empirical_disagreement(ht, cand, *subset)) * 0.1;
  CHECK(btal::improvement_score(trace, 0.1, teacher, cand) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("teacher updates are gated on a strictly positive beta") {
  std::mt19937_64 rng(7);
  Teacher teacher(make({1}, 0), random_subset(rng, 5, 1));
  const std::vector<Hypothesisd> cands{make({2}, 0), make({3}, 0), make({4}, 0)};

  auto rec = btal::maybe_update_teacher(teacher, cands, std::vector<double>{-0.1, 0.0, -3.0}, 1);
  CHECK_FALSE(rec.teacher_updated);
  CHECK(rec.alpha == 0.0);
  CHECK(teacher.current() == make({1}, 0));
  CHECK(teacher.history().empty());

  int proxy_calls = 0;
  rec = btal::maybe_update_teacher(teacher, cands, std::vector<double>{-0.1, 0.2, 0.05}, 2, [&](const Hypothesisd& h) {
    ++proxy_calls;
    return h.weights[0] / 10.0;
  });
  CHECK(rec.teacher_updated);
  CHECK(rec.installed == 1);
  CHECK(rec.alpha == 0.2);
  CHECK(teacher.current() == cands[1]);
  CHECK(proxy_calls == 1);
  REQUIRE(teacher.history().size() == 1);
  CHECK(teacher.history()[0].proxy == doctest::Approx(0.3));

  rec = btal::maybe_update_teacher(teacher, cands, std::vector<double>{0.4, 0.4, 0.1}, 3);
  CHECK(rec.installed == 0);
  CHECK(teacher.current() == cands[0]);

  rec = btal::maybe_update_teacher(teacher, {}, {}, 4);
  CHECK_FALSE(rec.teacher_updated);
  CHECK_THROWS_AS(btal::maybe_update_teacher(teacher, cands, std::vector<double>{0.1}, 5), std::invalid_argument);
}

#include <algorithm>
#include <set>

#include "doctest.h"
#include "sgdwr/optimizers.hpp"
#include "sgdwr/problems.hpp"

using namespace sgdwr;

TEST_CASE("without-replacement schedules are disjoint sorted batches") {
  const Hyperparams h{0.1, 3, 3};
  BatchSchedule s = make_schedule(10, h, Policy::WithoutReplacement, 5, 1);
  REQUIRE(s.batches.size() == 3);
  std::set<int> seen;
  for (const Batch& b : s.batches) {
    CHECK(b.size() == 3);
    CHECK(std::is_sorted(b.begin(), b.end()));
    for (int i : b) CHECK(seen.insert(i).second);
  }
  CHECK(seen.size() == 9);  // one leftover example dropped
  CHECK_THROWS_AS(make_schedule(10, Hyperparams{0.1, 4, 3}, Policy::WithoutReplacement, 1), Error);
}

TEST_CASE("with-replacement batches have no duplicates inside a batch") {
  const Hyperparams h{0.1, 50, 4};
  BatchSchedule s = make_schedule(5, h, Policy::WithReplacement, 9, 2);
  for (const Batch& b : s.batches) CHECK(std::set<int>(b.begin(), b.end()).size() == 4);
  CHECK_THROWS_AS(make_schedule(3, h, Policy::WithReplacement, 1), Error);
}

TEST_CASE("shuffle-once reuses its partition across epochs; fresh shuffles do not") {
  const Hyperparams h{0.1, 5, 2};
  CHECK(make_schedule(10, h, Policy::ShuffleOnce, 3, 1).batches == make_schedule(10, h, Policy::ShuffleOnce, 3, 7).batches);
  CHECK(make_schedule(10, h, Policy::WithoutReplacement, 3, 1).batches !=
        make_schedule(10, h, Policy::WithoutReplacement, 3, 2).batches);
  BatchSchedule f = make_schedule(4, h, Policy::FullBatch, 0);
  CHECK(f.batches.size() == 5);
  CHECK(f.batches[0] == Batch{0, 1, 2, 3});
}

TEST_CASE("seed derivation is a fixed function") {
  CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));
  CHECK(derive_seed(1, 2) != derive_seed(2, 1));
  CHECK(policy_from_string("WithoutReplacement") == Policy::WithoutReplacement);
  CHECK_THROWS_AS(policy_from_string("Adam"), Error);
}

TEST_CASE("run_epoch follows theta <- theta - eta grad(batch)") {
  Problem p = toy_diagonal_problem();
  const Hyperparams h{0.01, 3, 1};
  BatchSchedule s;
  s.batches = {{2}, {0}, {1}};
  TrajectoryRecord r = run_epoch(*p.oracle, p.data, p.init, s, h);
  REQUIRE(r.thetas.size() == 4);
  REQUIRE(r.losses.size() == 4);
  Vec th = p.init;
  for (const Batch& b : s.batches) th -= h.eta * grad(*p.oracle, th, p.data, b);
  CHECK(r.thetas.back() == th);
  CHECK(r.losses[0] == doctest::Approx(77.0 / 3));
  CHECK(run_epoch_endpoint(*p.oracle, p.data, p.init, s, h) == th);
}

TEST_CASE("deviation_first_order worked examples") {
  Problem p = saddle_problem({4, 1.0, 0.5, 0.3});
  Vec th(2);
  th << 0.2, -0.1;
  const Hyperparams h1{0.05, 1, 2};
  BatchSchedule s;
  s.batches = {{1, 3}};
  Vec want = -h1.eta * grad(*p.oracle, th, p.data, s.batches[0]) + h1.eta * grad(*p.oracle, th, p.data);
  CHECK((deviation_first_order(*p.oracle, p.data, th, s, h1) - want).norm() < 1e-16);
  const Hyperparams hf{0.05, 3, 4};
  CHECK(deviation_first_order(*p.oracle, p.data, th, make_schedule(4, hf, Policy::FullBatch, 0), hf).norm() == 0);

  // per-example quadratics, n = 4, b = 1, k = 4: exact
  Problem q = saddle_problem({4, 1.0, 0.5, 0.0});
  const Hyperparams h{0.1, 4, 1};
  BatchSchedule o;
  o.batches = {{3}, {0}, {2}, {1}};
  Vec m = deviation_measured(*q.oracle, q.data, th, o, h);
  Vec f = deviation_first_order(*q.oracle, q.data, th, o, h);
  CHECK((m - f).norm() <= 1e-12 * m.norm());
}

TEST_CASE("one-big-step reference differs from k small steps") {
  Problem p = toy_diagonal_problem();
  const Hyperparams h{0.01, 3, 1};
  Vec a = gd_endpoint(*p.oracle, p.data, p.init, h, GdReference::KSmallSteps);
  Vec b = gd_endpoint(*p.oracle, p.data, p.init, h, GdReference::OneBigStep);
  CHECK((b - (p.init - 0.03 * grad(*p.oracle, p.init, p.data))).norm() < 1e-14);
  CHECK((a - b).norm() > 0);
}

TEST_CASE("divergence guard reports the step") {
  Problem p = scalar_quadratic_problem(1);
  const Hyperparams h{3.0, 100, 1};
  try {
    run_epoch(*p.oracle, p.data, p.init, make_schedule(1, h, Policy::FullBatch, 0), h);
    FAIL("expected divergence");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::DivergenceDetected);
    CHECK(e.step() == 40);  // |1 - 3|^t > 1e12 first at t = 40
  }
}

TEST_CASE("noised full batch is seeded") {
  Problem p = toy_diagonal_problem();
  const Hyperparams h{0.01, 3, 3};
  NoiseSpec n{NoiseSpec::Kind::GaussianIsotropic, 0.5};
  Vec a = run_epoch_endpoint(*p.oracle, p.data, p.init, make_schedule(3, h, Policy::NoisedFullBatch, 4, 1), h, n);
  Vec b = run_epoch_endpoint(*p.oracle, p.data, p.init, make_schedule(3, h, Policy::NoisedFullBatch, 4, 1), h, n);
  Vec c = run_epoch_endpoint(*p.oracle, p.data, p.init, make_schedule(3, h, Policy::FullBatch, 0), h);
  CHECK(a == b);
  CHECK(a != c);
}

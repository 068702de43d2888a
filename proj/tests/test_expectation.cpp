#include "doctest.h"
#include "sgdwr/expectation.hpp"
#include "sgdwr/problems.hpp"

using namespace sgdwr;

namespace {
FunctionSequence identity(std::vector<double> d, int k) {
  FunctionSequence fs;
  fs.values.resize(static_cast<size_t>(k));
  for (auto& row : fs.values)
    for (double x : d) row.push_back(Mat::Constant(1, 1, x));
  return fs;
}
}  // namespace

TEST_CASE("tuple enumeration") {
  CHECK(enumerate_tuples(3, 2).size() == 6);
  CHECK(enumerate_tuples(6, 6).size() == 720);
  auto singles = enumerate_tuples(4, 1);
  REQUIRE(singles.size() == 4);
  CHECK(singles[3] == std::vector<int>{3});
  auto t = enumerate_tuples(3, 2);
  CHECK(t[0] == std::vector<int>{0, 1});
  CHECK(t[5] == std::vector<int>{2, 1});
  CHECK(tuple_count(10, 3) == 720);
  CHECK_THROWS_AS(enumerate_tuples(12, 12), Error);
}

TEST_CASE("set partitions") {
  CHECK(set_partitions(3).size() == 5);
  CHECK(set_partitions(4).size() == 15);
  CHECK(set_partitions(4, 2).size() == 10);  // no block larger than 2
}

TEST_CASE("worked expectation examples") {
  FunctionSequence a = identity({1, 2}, 2), b = identity({1, 2, 3}, 2);
  CHECK(expectation_enumerated(a).value(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(expectation_enumerated(b).value(0, 0) == doctest::Approx(11.0 / 3).epsilon(1e-15));
  CHECK(expectation_closed_form(build_moment_table(a, 2), 2, 2, kFullOrder).value(0, 0) ==
        doctest::Approx(2.0).epsilon(1e-15));
  CHECK(expectation_closed_form(build_moment_table(b, 2), 2, 3, kFullOrder).value(0, 0) ==
        doctest::Approx(11.0 / 3).epsilon(1e-15));
  // for k = 2 the pair form is already exact
  CHECK(expectation_closed_form(build_moment_table(b, 2), 2, 3, 2).value(0, 0) ==
        doctest::Approx(11.0 / 3).epsilon(1e-15));
  ExpectationEstimate e = expectation_enumerated(b);
  CHECK(e.method == EstimateMethod::Enumeration);
  CHECK(e.samples == 6);
  CHECK(e.stderr_.isZero(0));
}

TEST_CASE("missing moments are reported") {
  FunctionSequence a = identity({1, 2, 3, 4}, 3);
  CHECK_THROWS_AS(expectation_closed_form(build_moment_table(a, 2), 3, 4, kFullOrder), Error);
  CHECK_THROWS_AS(expectation_closed_form(build_moment_table(a, 1), 3, 4, 2), Error);
}

TEST_CASE("non-commutative products keep their order") {
  FunctionSequence fs;
  Mat A(2, 2), B(2, 2);
  A << 0, 1, 0, 0;
  B << 0, 0, 1, 0;
  fs.values = {{A, B, A + B}, {B, A, A - B}};
  const Mat e = expectation_enumerated(fs).value;
  const Mat c = expectation_closed_form(build_moment_table(fs, 2), 2, 3, kFullOrder).value;
  CHECK((e - c).norm() < 1e-14);
}

TEST_CASE("schedule counts") {
  CHECK(schedule_count(6, Hyperparams{0.1, 6, 1}, Policy::WithoutReplacement) == 720);
  CHECK(schedule_count(4, Hyperparams{0.1, 2, 2}, Policy::WithoutReplacement) == 6);
  CHECK(schedule_count(4, Hyperparams{0.1, 3, 1}, Policy::WithReplacement) == 64);
  CHECK(schedule_count(4, Hyperparams{0.1, 3, 1}, Policy::FullBatch) == 1);
  long visits = 0;
  for_each_schedule(4, Hyperparams{0.1, 2, 2}, Policy::WithoutReplacement, [&](const BatchSchedule&) { ++visits; });
  CHECK(visits == 6);
}

TEST_CASE("expected deviation edge cases") {
  Problem p = saddle_problem({4, 1.0, 0.5, 0.2});
  Vec th(2);
  th << 0.1, 0.3;
  CHECK(exact_expected_deviation(*p.oracle, p.data, th, Hyperparams{0.1, 1, 4}, Policy::WithoutReplacement)
            .value.norm() == 0);
  ExpectationEstimate a =
      mc_expected_deviation(*p.oracle, p.data, th, Hyperparams{0.1, 4, 1}, Policy::WithoutReplacement, 100, 3);
  ExpectationEstimate b =
      mc_expected_deviation(*p.oracle, p.data, th, Hyperparams{0.1, 4, 1}, Policy::WithoutReplacement, 100, 3);
  CHECK(a.value == b.value);
  CHECK(a.method == EstimateMethod::MonteCarlo);
  CHECK(a.samples == 100);
  ExpectationEstimate s =
      mc_expected_deviation(*p.oracle, p.data, th, Hyperparams{0.1, 4, 1}, Policy::WithoutReplacement, 24, 3, true);
  ExpectationEstimate x =
      exact_expected_deviation(*p.oracle, p.data, th, Hyperparams{0.1, 4, 1}, Policy::WithoutReplacement);
  CHECK((s.value - x.value).norm() <= 1e-15 * (1 + x.value.norm()));
}

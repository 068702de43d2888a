#include <cmath>

#include "doctest.h"
#include "sgdwr/predictors.hpp"
#include "sgdwr/problems.hpp"

using namespace sgdwr;

TEST_CASE("epoch-count formulas") {
  const Hyperparams h{0.01, 100, 1};
  CHECK(flat_travel_epochs(0.5, h).epochs_predicted == doctest::Approx(400));
  CHECK(flat_travel_epochs(0.5, Hyperparams{0.01, 100, 2}).epochs_predicted == doctest::Approx(800));
  CHECK(highorder_saddle_epochs(1, Hyperparams{0.1, 10, 2}).epochs_predicted == doctest::Approx(40));
  CHECK(highorder_saddle_epochs(0.5, h).kind == ForecastKind::HighOrder);
  CHECK(strict_saddle_epochs(1, -1, h).epochs_predicted == doctest::Approx(2 * std::log(100.0)));
  CHECK(strict_saddle_epochs(1, -1, h).epochs_predicted == doctest::Approx(9.21).epsilon(1e-3));
  CHECK_THROWS_AS(flat_travel_epochs(0, h), Error);
  CHECK_THROWS_AS(strict_saddle_epochs(1, 0, h), Error);
}

TEST_CASE("edge-of-stability margin") {
  const Hyperparams h{0.02, 50, 1};
  CHECK(eos_alpha(100, 100, 1, 1e-4, h).alpha_eos == 0.0);
  EoSForecast f = eos_alpha(100, 100, 1, 1e-2, h);
  CHECK(f.alpha_eos == doctest::Approx(std::log(100.0)).epsilon(1e-14));
  CHECK(f.threshold == doctest::Approx(50 + std::log(100.0)));
  CHECK(f.breaks);
  CHECK(eos_relative_margin(0.01, 7.68) == doctest::Approx(0.6).epsilon(0.05));
  try {
    eos_alpha(10, 20, -1, 1e-2, h);
    FAIL("expected HypothesisNotMet");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::HypothesisNotMet);
    const std::string w = e.what();
    CHECK(w.find("lambda2 > 1/eta") != std::string::npos);
    CHECK(w.find("u > 0") != std::string::npos);
    CHECK(w.find("lambda1 >= lambda2") != std::string::npos);
  }
}

TEST_CASE("closed-form saddle path") {
  const Hyperparams h{0.01, 100, 1};
  const double beta = saddle_beta(-1, h);
  CHECK(beta == doctest::Approx(std::expm1(1.0) / -1.0));
  CHECK(saddle_beta(-1, h, true) == doctest::Approx((std::pow(1.01, 100) - 1) / -1.0));
  CHECK(saddle_beta(0, h) == -h.c());
  ClosedFormSaddlePath p = saddle_closed_form_path(0.3, beta, -1, 0.2, 3);
  REQUIRE(p.rows.size() == 4);
  CHECK(p.rows[0].displacement == 0);
  CHECK(p.rows[0].loss_change == 0);
  CHECK(p.rows[1].displacement == doctest::Approx(-0.3 + beta * 0.2));
  CHECK(p.rows[1].regularizer_part == doctest::Approx(-0.3));
  CHECK(p.rows[2].displacement == doctest::Approx((1 + (1 + -beta)) * (-0.3 + beta * 0.2)));
  CHECK(p.rows[2].gradient_change == doctest::Approx(-p.rows[2].displacement));
  ClosedFormSaddlePath lin = saddle_closed_form_path(0.1, -1.0, 0, 0.0, 3);
  CHECK(lin.rows[3].displacement == doctest::Approx(-0.3));
}

TEST_CASE("escape measurement") {
  Problem sad = saddle_problem({20, 1.0, 1.0, 0.0});
  const Hyperparams h{0.05, 20, 1};
  CHECK(measure_escape_epochs(*sad.oracle, sad.data, sad.init, h, Policy::FullBatch, 1.0, 10, 1) == 11);
  const int e = measure_escape_epochs(*sad.oracle, sad.data, sad.init, h, Policy::WithoutReplacement, 1.0, 100, 1);
  const double t = measure_escape_time(*sad.oracle, sad.data, sad.init, h, Policy::WithoutReplacement, 1.0, 100, 1);
  CHECK(e <= 100);
  CHECK(t <= e);
  CHECK(t > e - 1);
  CHECK(median({3.0, 1.0, 2.0, 10.0}) == 2.5);
}

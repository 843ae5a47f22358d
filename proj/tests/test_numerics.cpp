// Apache License, Version 2.0, refer to LICENSE

#include <cmath>
#include <stdexcept>

#include "cviat/numerics.hpp"
#include "doctest.h"

using namespace cviat;

// Reference values: tests/oracles/special_values.py (mpmath, 40 digits).
TEST_CASE("digamma matches high-precision references") {
  const struct {
    double x, expected;
  } cases[] = {
      {1e-3, -1000.5755719318103005}, {0.01, -100.5608854578686745},
      {0.1, -10.423754940411076795},  {0.5, -1.9635100260214234794},
      {1.0, -0.57721566490153286061}, {2.0, 0.42278433509846713939},
      {2.5, 0.70315664064524318723},  {5.0, 1.5061176684318004727},
      {6.0, 1.7061176684318004727},   {12.5, 2.4851956512749120482},
      {50.0, 3.901989673427892197},   {100.0, 4.6001618527380874002},
      {1000.0, 6.9072551956488120521}, {12345.678, 9.4210208207417608869},
  };
  for (const auto& c : cases) {
    CAPTURE(c.x);
    CHECK(std::abs(digamma(c.x) - c.expected) <= 1e-10 * std::max(1.0, std::abs(c.expected)));
  }
}

TEST_CASE("digamma recurrence") {
  for (double x : {0.01, 0.1, 1.0, 10.0, 100.0}) {
    CAPTURE(x);
    CHECK(std::abs(digamma(x + 1.0) - digamma(x) - 1.0 / x) <= 1e-12);
  }
}

TEST_CASE("digamma domain") {
  CHECK_THROWS_AS(digamma(0.0), std::domain_error);
  CHECK_THROWS_AS(digamma(-1.5), std::domain_error);
  CHECK_THROWS_AS(digamma(std::nan("")), std::domain_error);
  CHECK(std::isfinite(digamma(1e-9)));
}

TEST_CASE("digamma of an array is coefficient-wise") {
  Eigen::Array3d x(0.5, 2.0, 50.0);
  const Eigen::Array3d y = cviat::digamma(x);
  for (int i = 0; i < 3; ++i) CHECK(y(i) == digamma(x(i)));
}

TEST_CASE("log_gamma_ratio") {
  CHECK(log_gamma_ratio(2.0, 0) == 0.0);
  CHECK(log_gamma_ratio(1.0, 3) == doctest::Approx(1.7917594692280550008).epsilon(1e-14));
  CHECK(log_gamma_ratio(0.5, 1) == doctest::Approx(std::log(0.5)).epsilon(1e-15));
  CHECK(log_gamma_ratio(3.7, 250) ==
        doctest::Approx(std::lgamma(253.7) - std::lgamma(3.7)).epsilon(1e-12));
  CHECK_THROWS_AS(log_gamma_ratio(0.0, 2), std::domain_error);
  CHECK_THROWS_AS(log_gamma_ratio(1.0, -1), std::domain_error);
}

TEST_CASE("log_gamma_ratio is additive in n") {
  for (double a : {1e-4, 0.3, 2.0, 75.0}) {
    for (int n1 : {0, 1, 7, 40}) {
      for (int n2 : {0, 3, 100}) {
        const double whole = log_gamma_ratio(a, n1 + n2);
        const double parts = log_gamma_ratio(a, n1) + log_gamma_ratio(a + n1, n2);
        CHECK(std::abs(whole - parts) <= 1e-11 * std::max(1.0, std::abs(whole)));
      }
    }
  }
}

TEST_CASE("log_gamma_ratio survives huge counts") {
  const double v = log_gamma_ratio(1e-300, 100000);
  CHECK(std::isfinite(v));
  CHECK(v == doctest::Approx(std::log(1e-300) + std::lgamma(100000.0)).epsilon(1e-12));
}

TEST_CASE("step size") {
  CHECK(step_size(0, Schedule(64, 0.6)) == doctest::Approx(0.082469244423305891211).epsilon(1e-14));
  CHECK(step_size(36, Schedule(64, 1.0)) == doctest::Approx(0.01).epsilon(1e-15));
  CHECK_THROWS_WITH(step_size(0, Schedule(0, 1.0)), doctest::Contains("zero base"));
  CHECK(step_size(0, Schedule(0.5, 0.6)) == 1.0);
  CHECK_THROWS_AS(Schedule(64, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(Schedule(64, 1.1), std::invalid_argument);
  CHECK_THROWS_AS(Schedule(-1, 0.7), std::invalid_argument);
  double prev = 1.0;
  for (int t = 1; t < 1000; t += 37) {
    const double r = step_size(t, Schedule());
    CHECK(r < prev);
    prev = r;
  }
}

TEST_CASE("floor_normalize") {
  Vector a = floor_normalize(Eigen::Vector2d(1, 3));
  CHECK(a(0) == doctest::Approx(0.25));
  CHECK(a(1) == doctest::Approx(0.75));
  Vector b = floor_normalize(Eigen::Vector2d(-1, 1));
  CHECK(b(0) == doctest::Approx(1e-12).epsilon(1e-6));
  CHECK(b(1) == doctest::Approx(1.0));
  CHECK(std::abs(b.sum() - 1.0) <= 1e-15);
  Vector c = floor_normalize(Eigen::Vector2d(0, 0));
  CHECK(c(0) == 0.5);
  CHECK(c(1) == 0.5);
}

TEST_CASE("blend") {
  const Eigen::Vector2d old(0.2, 0.8), upd(0.4, 0.6);
  const Vector mid = blend(old, upd, 0.5);
  CHECK(mid(0) == doctest::Approx(0.3));
  CHECK(mid(1) == doctest::Approx(0.7));
  CHECK(blend(old, upd, 1.0) == Vector(upd));
  CHECK_THROWS_AS(blend(old, upd, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(blend(old, upd, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(blend(Vector(old), Vector::Ones(3), 0.5), std::invalid_argument);
  const Matrix m1 = Matrix::Constant(2, 3, 1.0), m2 = Matrix::Constant(2, 3, 3.0);
  CHECK(blend(m1, m2, 0.25).isApproxToConstant(1.5));
}

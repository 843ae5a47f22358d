// Apache License, Version 2.0, refer to LICENSE

#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <stdexcept>

#include <Eigen/Dense>

namespace cviat {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using IntVector = Eigen::VectorXi;

namespace detail {
void warn_tiny_digamma_argument(double x);
}  // namespace detail

/// Digamma function. Shifts the argument up to x >= 6 with
/// psi(x) = psi(x + 1) - 1 / x, then applies the asymptotic series
/// psi(x) ~ ln x - 1/(2x) - sum_k B_2k / (2k x^2k).
template <std::floating_point Scalar>
Scalar digamma(Scalar x) {
  if (!(x > Scalar(0))) {
    throw std::domain_error("digamma: argument must be positive");
  }
  if (x < Scalar(1e-6)) detail::warn_tiny_digamma_argument(static_cast<double>(x));
  Scalar shift(0);
  while (x < Scalar(6)) {
    shift -= Scalar(1) / x;
    x += Scalar(1);
  }
  const Scalar inv = Scalar(1) / x;
  const Scalar inv2 = inv * inv;
  // Bernoulli terms B_2k / 2k for k = 1..7.
  const Scalar series =
      inv2 * (Scalar(1) / 12 -
              inv2 * (Scalar(1) / 120 -
                      inv2 * (Scalar(1) / 252 -
                              inv2 * (Scalar(1) / 240 -
                                      inv2 * (Scalar(1) / 132 -
                                              inv2 * (Scalar(691) / 32760 -
                                                      inv2 * (Scalar(1) / 12)))))));
  return shift + std::log(x) - Scalar(0.5) * inv - series;
}

/// Coefficient-wise digamma of an Eigen expression.
template <typename Derived>
Eigen::Array<typename Derived::Scalar, Derived::RowsAtCompileTime, Derived::ColsAtCompileTime>
digamma(const Eigen::ArrayBase<Derived>& x) {
  using S = typename Derived::Scalar;
  return x.derived().unaryExpr([](S v) { return digamma(v); });
}

/// log Gamma(a + n) - log Gamma(a), accumulated as sum_{i<n} log(a + i).
double log_gamma_ratio(double a, std::int64_t n);

/// Robbins-Monro schedule rho_t = (tau0 + t)^(-kappa).
class Schedule {
 public:
  Schedule() = default;
  Schedule(double tau0, double kappa);

  double tau0() const { return tau0_; }
  double kappa() const { return kappa_; }

 private:
  double tau0_ = 64.0;
  double kappa_ = 0.6;
};

double step_size(std::int64_t t, const Schedule& sched);

/// Clamp every entry to at least eps and rescale onto the simplex.
Vector floor_normalize(const Eigen::Ref<const Vector>& weights, double eps = 1e-12);

/// (1 - rho) * old + rho * updated, for vectors or matrices of equal shape.
template <typename DerivedA, typename DerivedB>
typename DerivedA::PlainObject blend(const Eigen::MatrixBase<DerivedA>& old,
                                     const Eigen::MatrixBase<DerivedB>& updated, double rho) {
  if (!(rho > 0.0 && rho <= 1.0)) {
    throw std::invalid_argument("blend: step size must lie in (0, 1]");
  }
  if (old.rows() != updated.rows() || old.cols() != updated.cols()) {
    throw std::invalid_argument("blend: shape mismatch");
  }
  return (1.0 - rho) * old.derived() + rho * updated.derived();
}

}  // namespace cviat

// Apache License, Version 2.0, refer to LICENSE

#include "cviat/numerics.hpp"

#include <algorithm>
#include <atomic>
#include <string>

#include "cviat/log.hpp"
#include "text_io.hpp"

namespace cviat {

namespace detail {
void warn_tiny_digamma_argument(double x) {
  static std::atomic<bool> warned{false};
  if (!warned.exchange(true)) {
    log_warn("digamma evaluated at " + text::format_double(x) +
             " (below 1e-6); further occurrences are not reported");
  }
}
}  // namespace detail

double log_gamma_ratio(double a, std::int64_t n) {
  if (!(a > 0.0)) throw std::domain_error("log_gamma_ratio: a must be positive");
  if (n < 0) throw std::domain_error("log_gamma_ratio: n must be nonnegative");
  // Multiply short runs before taking the log; each partial product stays
  // far from overflow because factors are bounded by a + n.
  double total = 0.0;
  double product = 1.0;
  for (std::int64_t i = 0; i < n; ++i) {
    product *= a + static_cast<double>(i);
    if (product > 1e250 || product < 1e-250) {
      total += std::log(product);
      product = 1.0;
    }
  }
  return total + std::log(product);
}

Schedule::Schedule(double tau0, double kappa) : tau0_(tau0), kappa_(kappa) {
  if (!(tau0 >= 0.0)) throw std::invalid_argument("schedule: tau0 must be nonnegative");
  if (!(kappa > 0.5 && kappa <= 1.0)) {
    throw std::invalid_argument("schedule: kappa must lie in (0.5, 1]");
  }
}

double step_size(std::int64_t t, const Schedule& sched) {
  const double base = sched.tau0() + static_cast<double>(t);
  if (!(base > 0.0)) throw std::domain_error("step_size: zero base (tau0 + t must be positive)");
  return std::min(1.0, std::pow(base, -sched.kappa()));
}

Vector floor_normalize(const Eigen::Ref<const Vector>& weights, double eps) {
  if (weights.size() == 0) throw std::invalid_argument("floor_normalize: empty vector");
  if (!(eps > 0.0)) throw std::invalid_argument("floor_normalize: eps must be positive");
  Vector out = weights.cwiseMax(eps);
  out /= out.sum();
  return out;
}

}  // namespace cviat

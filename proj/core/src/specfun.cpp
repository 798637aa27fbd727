#include "mipipe/specfun.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/polygamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "mipipe/rng.hpp"

namespace mipipe::specfun {

namespace {
void require_positive(double x, const char* fn) {
  if (!(x > 0.0)) {
    throw std::domain_error(std::string(fn) + ": argument must be positive, got " +
                            std::to_string(x));
  }
}
}  // namespace

double log_gamma(double x) {
  require_positive(x, "log_gamma");
  return std::lgamma(x);
}

double digamma(double x) {
  require_positive(x, "digamma");
  return boost::math::digamma(x);
}

double trigamma(double x) {
  require_positive(x, "trigamma");
  return boost::math::trigamma(x);
}

double tetragamma(double x) {
  require_positive(x, "tetragamma");
  return boost::math::polygamma(2, x);
}

double trigamma_inverse(double y) {
  require_positive(y, "trigamma_inverse");
  // Asymptotic shortcuts: trigamma(x) ~ 1/x^2 as x->0+, ~ 1/x as x->inf.
  if (y > 1e12) return 1.0 / std::sqrt(y);
  if (y < 1e-12) return 1.0 / y;
  double x = 0.5 + 1.0 / y;
  for (int iter = 0; iter < 50; ++iter) {
    const double tri = trigamma(x);
    const double dif = tri * (1.0 - tri / y) / tetragamma(x);
    x += dif;
    if (std::abs(dif) < 1e-8 * x) break;
  }
  return x;
}

double reg_incomplete_beta(double a, double b, double x) {
  require_positive(a, "reg_incomplete_beta");
  require_positive(b, "reg_incomplete_beta");
  if (x < 0.0 || x > 1.0) {
    throw std::domain_error("reg_incomplete_beta: x must lie in [0,1]");
  }
  return boost::math::ibeta(a, b, x);
}

double student_cdf(double t, double nu) {
  require_positive(nu, "student_cdf");
  if (std::isnan(t)) throw std::domain_error("student_cdf: t is NaN");
  if (t == 0.0) return 0.5;
  const double tail = 0.5 * reg_incomplete_beta(nu / 2.0, 0.5, nu / (nu + t * t));
  return t > 0.0 ? 1.0 - tail : tail;
}

double student_two_sided_p(double t, double nu) {
  require_positive(nu, "student_two_sided_p");
  if (std::isinf(t)) return 0.0;
  if (t == 0.0) return 1.0;
  return reg_incomplete_beta(nu / 2.0, 0.5, nu / (nu + t * t));
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("normal_quantile: p must lie in (0,1)");
  }
  return std::sqrt(2.0) * boost::math::erf_inv(2.0 * p - 1.0);
}

}  // namespace mipipe::specfun

namespace mipipe {

double RngStream::normal() {
  return specfun::normal_quantile(uniform_oo());
}

double RngStream::gamma_shape(double k) {
  // Marsaglia & Tsang (2000); shape boost below 1.
  if (k < 1.0) return gamma_shape(k + 1.0) * std::pow(uniform_oo(), 1.0 / k);
  const double d = k - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = uniform_oo();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double RngStream::chi_squared(double df) {
  if (!(df > 0.0)) throw std::invalid_argument("chi_squared: df must be positive");
  return 2.0 * gamma_shape(df / 2.0);
}

}  // namespace mipipe

#pragma once

namespace mipipe::specfun {

// Gamma-family special functions and the Student CDF needed by the
// empirical-Bayes variance moderation. Arguments outside the stated
// domains throw std::domain_error.

double log_gamma(double x);  // x > 0
double digamma(double x);    // x > 0
double trigamma(double x);   // x > 0
double tetragamma(double x); // psi''(x), x > 0

// Solve trigamma(x) = y for x > 0. Newton iteration on 1/trigamma from
// the starting point 0.5 + 1/y, tolerance 1e-8, at most 50 steps.
double trigamma_inverse(double y);  // y > 0

// Regularized incomplete beta I_x(a, b).
double reg_incomplete_beta(double a, double b, double x);

// P(T <= t) for Student's t with nu > 0 degrees of freedom.
double student_cdf(double t, double nu);

// Two-sided tail 2*(1 - student_cdf(|t|, nu)), computed directly from the
// incomplete beta so it stays accurate far into the tail.
double student_two_sided_p(double t, double nu);

double normal_cdf(double z);
double normal_quantile(double p);  // 0 < p < 1

}  // namespace mipipe::specfun

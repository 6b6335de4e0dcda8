#pragma once

#include <cstddef>

namespace cryptoscan {

// Numerical building blocks for the vote-distribution tests. Everything
// here is deterministic and accurate to ~1e-12 over the ranges the
// pipeline uses (df <= ~20, chi2 <= ~1e7).

// Regularized lower incomplete gamma P(a, x): series expansion for
// x < a + 1, Lentz continued fraction otherwise.
double regularized_gamma_p(double a, double x);

// Q(a, x) = 1 - P(a, x), computed directly so tiny tails keep precision.
double regularized_gamma_q(double a, double x);

double chi2_cdf(double x, double df);
double chi2_pdf(double x, double df);

double log_beta_fn(double a, double b);
double log_choose(std::size_t n, std::size_t k);

} // namespace cryptoscan

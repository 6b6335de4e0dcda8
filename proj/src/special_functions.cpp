#include "cryptoscan/special_functions.hpp"

#include <cmath>
#include <limits>

#include "cryptoscan/errors.hpp"

namespace cryptoscan {

namespace {

constexpr int kMaxIterations = 500;
constexpr double kEpsilon = 1e-15;
constexpr double kTiny = 1e-300;

// Series: P(a,x) = x^a e^-x / Gamma(a) * sum_n x^n / (a (a+1) ... (a+n)).
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double term = sum;
    for (int i = 0; i < kMaxIterations; ++i) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * kEpsilon) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Modified Lentz continued fraction for Q(a,x), valid for x >= a + 1.
double gamma_q_continued_fraction(double a, double x) {
    double b = x + 1.0 - a;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= kMaxIterations; ++i) {
        double an = -static_cast<double>(i) * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = b + an / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < kEpsilon) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

} // namespace

double regularized_gamma_p(double a, double x) {
    if (a <= 0.0) throw ContractError("regularized_gamma_p needs a > 0");
    if (x < 0.0) throw ContractError("regularized_gamma_p needs x >= 0");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_continued_fraction(a, x);
}

double regularized_gamma_q(double a, double x) {
    if (a <= 0.0) throw ContractError("regularized_gamma_q needs a > 0");
    if (x < 0.0) throw ContractError("regularized_gamma_q needs x >= 0");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_continued_fraction(a, x);
}

double chi2_cdf(double x, double df) {
    if (df <= 0.0) throw ContractError("chi2_cdf needs df > 0");
    if (x <= 0.0) return 0.0;
    return regularized_gamma_p(df / 2.0, x / 2.0);
}

double chi2_pdf(double x, double df) {
    if (df <= 0.0) throw ContractError("chi2_pdf needs df > 0");
    if (x < 0.0) return 0.0;
    if (x == 0.0) {
        if (df < 2.0) return std::numeric_limits<double>::infinity();
        return df == 2.0 ? 0.5 : 0.0;
    }
    double half = df / 2.0;
    double log_pdf = (half - 1.0) * std::log(x) - x / 2.0 -
                     half * std::log(2.0) - std::lgamma(half);
    return std::exp(log_pdf);
}

double log_beta_fn(double a, double b) {
    if (a <= 0.0 || b <= 0.0)
        throw ContractError("log_beta_fn needs positive arguments");
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

double log_choose(std::size_t n, std::size_t k) {
    if (k > n) throw ContractError("log_choose needs k <= n");
    return std::lgamma(static_cast<double>(n) + 1.0) -
           std::lgamma(static_cast<double>(k) + 1.0) -
           std::lgamma(static_cast<double>(n - k) + 1.0);
}

} // namespace cryptoscan

#include <cmath>
#include <vector>

#include "doctest.h"

#include "cryptoscan/special_functions.hpp"

using namespace cryptoscan;

namespace {

// Independent chi-squared CDF oracle built only on libm: the closed forms
//   F_1(x) = erf(sqrt(x/2)),  F_2(x) = 1 - exp(-x/2)
// advanced with the recurrence
//   F_{d+2}(x) = F_d(x) - (x/2)^(d/2) exp(-x/2) / Gamma(d/2 + 1).
double oracle_chi2_cdf(double x, int df) {
    double f = (df % 2 == 1) ? std::erf(std::sqrt(x / 2.0))
                             : 1.0 - std::exp(-x / 2.0);
    for (int d = (df % 2 == 1) ? 1 : 2; d < df; d += 2) {
        f -= std::exp((d / 2.0) * std::log(x / 2.0) - x / 2.0 -
                      std::lgamma(d / 2.0 + 1.0));
    }
    return f;
}

const double kGrid[] = {0.1, 0.5, 1.0, 2.0, 3.5, 5.0, 8.0, 13.0, 20.0, 35.0,
                        50.0};

} // namespace

TEST_CASE("chi2_cdf matches the libm recurrence oracle to 1e-8") {
    for (int df = 1; df <= 10; ++df) {
        for (double x : kGrid) {
            CAPTURE(df);
            CAPTURE(x);
            CHECK(std::abs(chi2_cdf(x, df) - oracle_chi2_cdf(x, df)) < 1e-8);
        }
    }
}

TEST_CASE("chi2_cdf is a proper distribution function") {
    for (int df = 1; df <= 12; ++df) {
        CHECK(chi2_cdf(0.0, df) == doctest::Approx(0.0));
        double prev = 0.0;
        for (double x : kGrid) {
            double f = chi2_cdf(x, df);
            CHECK(f >= prev);
            CHECK(f <= 1.0);
            prev = f;
        }
        CHECK(chi2_cdf(1e6, df) == doctest::Approx(1.0));
    }
    // Exponential special case, exact form.
    for (double x : kGrid)
        CHECK(chi2_cdf(x, 2) == doctest::Approx(1.0 - std::exp(-x / 2.0)));
}

TEST_CASE("chi2_pdf integrates to the CDF") {
    // Simpson's rule over [0, x]; an independent consistency check tying
    // the density to the distribution function.
    auto integral = [](double x, double df) {
        // The density has a sqrt-type kink at 0 for odd df, so Simpson
        // converges slowly there; a fine grid keeps the oracle's own
        // discretization error well under the tolerance.
        const int steps = 100000; // even
        double h = x / steps;
        double sum = chi2_pdf(1e-12, df) + chi2_pdf(x, df);
        for (int i = 1; i < steps; ++i)
            sum += chi2_pdf(i * h, df) * (i % 2 ? 4.0 : 2.0);
        return sum * h / 3.0;
    };
    for (double df : {2.0, 3.0, 5.0, 8.0}) {
        for (double x : {1.0, 4.0, 9.0}) {
            CAPTURE(df);
            CAPTURE(x);
            CHECK(std::abs(integral(x, df) - chi2_cdf(x, df)) < 1e-6);
        }
    }
}

TEST_CASE("regularized gamma halves are complementary") {
    for (double a : {0.5, 1.0, 2.5, 7.0, 15.0}) {
        CHECK(regularized_gamma_p(a, 0.0) == doctest::Approx(0.0));
        CHECK(regularized_gamma_q(a, 0.0) == doctest::Approx(1.0));
        for (double x : kGrid) {
            CAPTURE(a);
            CAPTURE(x);
            CHECK(regularized_gamma_p(a, x) + regularized_gamma_q(a, x) ==
                  doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    // P(1, x) = 1 - exp(-x) exactly.
    for (double x : kGrid)
        CHECK(regularized_gamma_p(1.0, x) ==
              doctest::Approx(1.0 - std::exp(-x)).epsilon(1e-12));
}

TEST_CASE("log_beta_fn agrees with the lgamma identity") {
    for (double a : {0.5, 1.0, 2.0, 3.7, 10.0, 50.0}) {
        for (double b : {0.5, 1.3, 4.0, 25.0}) {
            double expected =
                std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
            CHECK(log_beta_fn(a, b) == doctest::Approx(expected).epsilon(1e-12));
            CHECK(log_beta_fn(a, b) == doctest::Approx(log_beta_fn(b, a)));
        }
    }
    CHECK(log_beta_fn(1.0, 1.0) == doctest::Approx(0.0)); // B(1,1) = 1
}

TEST_CASE("log_choose reproduces exact small binomials") {
    CHECK(log_choose(5, 2) == doctest::Approx(std::log(10.0)));
    CHECK(log_choose(10, 0) == doctest::Approx(0.0));
    CHECK(log_choose(10, 10) == doctest::Approx(0.0));
    CHECK(log_choose(52, 5) == doctest::Approx(std::log(2598960.0)));
    for (std::size_t n = 1; n <= 30; ++n)
        for (std::size_t k = 0; k <= n; ++k)
            CHECK(log_choose(n, k) == doctest::Approx(log_choose(n, n - k)));
}

TEST_CASE("log_choose satisfies the Pascal identity") {
    for (std::size_t n = 2; n <= 40; ++n) {
        for (std::size_t k = 1; k < n; ++k) {
            double lhs = std::exp(log_choose(n, k));
            double rhs = std::exp(log_choose(n - 1, k - 1)) +
                         std::exp(log_choose(n - 1, k));
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
        }
    }
}

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cryptoscan/votes.hpp"

namespace cryptoscan {

// Distribution of true-vote counts over packages: counts[k] packages
// received exactly k true votes from the n models.
struct VoteHistogram {
    std::size_t n = 0;
    std::vector<std::size_t> counts; // size n + 1

    std::size_t total() const;
    double mean() const;     // average true-vote count
    double variance() const; // population variance of the count
};

struct BinomialFit {
    double p_hat = 0.0; // sum k * counts[k] / (n * N)
};

struct BetaBinomialFit {
    double alpha = 0.0;
    double beta = 0.0;
    double log_likelihood = 0.0;
    bool converged = false;
    int iterations = 0;
};

struct GofResult {
    double chi2 = 0.0;
    std::size_t df = 0;
    double p_value = 0.0;
    double alpha_level = 0.0;
    double critical_value = 0.0;
    bool rejected = false; // chi2 > critical_value
    std::string merged_cells;
    std::size_t cells_after_merge = 0;
    std::size_t n_estimated_params = 0;
};

// How far the observed vote variance exceeds the independent-vote
// baseline, and what that costs in effective ensemble size:
//   deff  = var_obs / var_ind          (var_ind = n p (1 - p))
//   n_eff = n / deff
//   rho   = (deff - 1) / (n - 1)
struct DesignEffectReport {
    double var_obs = 0.0;
    double var_ind = 0.0;
    double deff = 0.0;
    double n_eff = 0.0;
    double rho = 0.0;
};

// Builds the true-vote histogram from a complete vote table. Throws
// DataError on an empty table and ContractError on any empty cell.
VoteHistogram histogram(const VoteTable& table);

BinomialFit fit_binomial(const VoteHistogram& hist);

std::vector<double> binomial_cell_probs(std::size_t n, double p);
std::vector<double> betabinomial_cell_probs(std::size_t n, double alpha,
                                            double beta);
double betabinomial_log_pmf(std::size_t n, std::size_t k, double alpha,
                            double beta);
double betabinomial_log_likelihood(const VoteHistogram& hist, double alpha,
                                   double beta);

// Maximum-likelihood beta-binomial fit: method-of-moments start, then a
// derivative-free simplex over (log alpha, log beta). Converges when the
// simplex spread in log-likelihood drops below 1e-10, capped at 500
// iterations (converged = false, best point still returned). Throws
// DataError on a zero-variance histogram; callers fall back to the
// binomial report.
BetaBinomialFit fit_betabinomial(const VoteHistogram& hist);

// Pearson chi-squared goodness of fit. expected_probs must sum to 1
// within 1e-9 (ContractError otherwise). Adjacent cells merge from the
// high-k tail inward until every expected count reaches 5, then
// df = cells_after_merge - 1 - n_estimated_params. Throws DataError when
// merging leaves df < 1.
GofResult chi2_gof(const VoteHistogram& hist,
                   const std::vector<double>& expected_probs,
                   std::size_t n_estimated_params, double alpha_level);

// Upper-tail critical value: the x with 1 - chi2_cdf(x, df) = alpha,
// bisected to 1e-6.
double chi2_critical(double alpha_level, std::size_t df);

// Throws DataError when p_hat is 0 or 1 (no variance to compare against)
// and ContractError when n < 2.
DesignEffectReport design_effect(const VoteHistogram& hist,
                                 const BinomialFit& fit);
DesignEffectReport design_effect_from_moments(double var_obs, std::size_t n,
                                              double p_hat);

// Effective ensemble size n / (1 + (n - 1) rho) as a function of nominal
// size. Strictly increasing in n for rho in (0, 1); approaches 1 / rho
// from below (2.0 when rho = 0.5).
double neff_curve(std::size_t n, double rho);

} // namespace cryptoscan

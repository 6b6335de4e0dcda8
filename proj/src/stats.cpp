#include "cryptoscan/stats.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "cryptoscan/errors.hpp"
#include "cryptoscan/special_functions.hpp"

namespace cryptoscan {

// ===== histogram and moments ==============================================

std::size_t VoteHistogram::total() const {
    std::size_t sum = 0;
    for (std::size_t c : counts) sum += c;
    return sum;
}

double VoteHistogram::mean() const {
    std::size_t N = total();
    if (N == 0) return 0.0;
    double weighted = 0.0;
    for (std::size_t k = 0; k < counts.size(); ++k)
        weighted += static_cast<double>(k) * static_cast<double>(counts[k]);
    return weighted / static_cast<double>(N);
}

double VoteHistogram::variance() const {
    std::size_t N = total();
    if (N == 0) return 0.0;
    double mu = mean();
    double sq = 0.0;
    for (std::size_t k = 0; k < counts.size(); ++k) {
        double d = static_cast<double>(k) - mu;
        sq += d * d * static_cast<double>(counts[k]);
    }
    return sq / static_cast<double>(N);
}

VoteHistogram histogram(const VoteTable& table) {
    if (table.rows.empty())
        throw DataError("cannot build a vote histogram from an empty table");

    VoteHistogram hist;
    hist.n = table.model_count();
    hist.counts.assign(hist.n + 1, 0);
    for (const auto& [package, votes] : table.rows) {
        std::size_t k = 0;
        for (const std::optional<bool>& v : votes) {
            if (!v.has_value())
                throw ContractError("histogram needs a complete vote table; '" +
                                    package + "' has an empty cell");
            if (*v) ++k;
        }
        hist.counts[k]++;
    }
    return hist;
}

// ===== parametric fits =====================================================

BinomialFit fit_binomial(const VoteHistogram& hist) {
    if (hist.n == 0 || hist.total() == 0)
        throw DataError("cannot fit a binomial to an empty histogram");
    return BinomialFit{hist.mean() / static_cast<double>(hist.n)};
}

std::vector<double> binomial_cell_probs(std::size_t n, double p) {
    std::vector<double> probs(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
        if ((p == 0.0 && k > 0) || (p == 1.0 && k < n)) {
            probs[k] = 0.0;
            continue;
        }
        if (p == 0.0 || p == 1.0) {
            probs[k] = 1.0;
            continue;
        }
        double log_pmf = log_choose(n, k) + static_cast<double>(k) * std::log(p) +
                         static_cast<double>(n - k) * std::log1p(-p);
        probs[k] = std::exp(log_pmf);
    }
    return probs;
}

double betabinomial_log_pmf(std::size_t n, std::size_t k, double alpha,
                            double beta) {
    if (alpha <= 0.0 || beta <= 0.0)
        throw ContractError("beta-binomial parameters must be positive");
    return log_choose(n, k) +
           log_beta_fn(static_cast<double>(k) + alpha,
                       static_cast<double>(n - k) + beta) -
           log_beta_fn(alpha, beta);
}

std::vector<double> betabinomial_cell_probs(std::size_t n, double alpha,
                                            double beta) {
    std::vector<double> probs(n + 1);
    for (std::size_t k = 0; k <= n; ++k)
        probs[k] = std::exp(betabinomial_log_pmf(n, k, alpha, beta));
    return probs;
}

double betabinomial_log_likelihood(const VoteHistogram& hist, double alpha,
                                   double beta) {
    double ll = 0.0;
    for (std::size_t k = 0; k <= hist.n; ++k) {
        if (hist.counts[k] == 0) continue;
        ll += static_cast<double>(hist.counts[k]) *
              betabinomial_log_pmf(hist.n, k, alpha, beta);
    }
    return ll;
}

namespace {

// Objective for the simplex: negative log-likelihood over
// (log alpha, log beta), walled off where exp() would overflow.
double neg_ll(const VoteHistogram& hist, double log_alpha, double log_beta) {
    if (std::fabs(log_alpha) > 30.0 || std::fabs(log_beta) > 30.0)
        return 1e300;
    return -betabinomial_log_likelihood(hist, std::exp(log_alpha),
                                        std::exp(log_beta));
}

struct SimplexPoint {
    std::array<double, 2> x;
    double f;
};

} // namespace

BetaBinomialFit fit_betabinomial(const VoteHistogram& hist) {
    const std::size_t N = hist.total();
    if (hist.n == 0 || N == 0)
        throw DataError("cannot fit a beta-binomial to an empty histogram");
    if (hist.variance() <= 0.0)
        throw DataError(
            "zero-variance histogram: all packages share one vote count; "
            "report the degenerate binomial instead");

    // Method-of-moments start: mu = mean/n, rho from the variance ratio,
    // clamped into the open interval the parameterization needs.
    const double n = static_cast<double>(hist.n);
    double mu = hist.mean() / n;
    mu = std::min(1.0 - 1e-9, std::max(1e-9, mu));
    double var_ind = n * mu * (1.0 - mu);
    double rho = (hist.variance() / var_ind - 1.0) / (n - 1.0);
    rho = std::min(1.0 - 1e-6, std::max(1e-6, rho));
    const double s = (1.0 - rho) / rho;

    std::array<double, 2> start = {std::log(mu * s), std::log((1.0 - mu) * s)};

    // Nelder-Mead with standard coefficients; 2-D is small enough that
    // this comfortably outruns any gradient bookkeeping.
    const double reflect = 1.0, expand = 2.0, contract = 0.5, shrink = 0.5;
    const double tolerance = 1e-10;
    const int max_iterations = 500;

    std::array<SimplexPoint, 3> simplex;
    simplex[0] = {start, neg_ll(hist, start[0], start[1])};
    simplex[1] = {{start[0] + 0.5, start[1]},
                  neg_ll(hist, start[0] + 0.5, start[1])};
    simplex[2] = {{start[0], start[1] + 0.5},
                  neg_ll(hist, start[0], start[1] + 0.5)};

    BetaBinomialFit fit;
    int iteration = 0;
    for (; iteration < max_iterations; ++iteration) {
        std::sort(simplex.begin(), simplex.end(),
                  [](const SimplexPoint& a, const SimplexPoint& b) {
                      return a.f < b.f;
                  });
        if (simplex[2].f - simplex[0].f < tolerance) {
            fit.converged = true;
            break;
        }

        std::array<double, 2> centroid = {
            (simplex[0].x[0] + simplex[1].x[0]) / 2.0,
            (simplex[0].x[1] + simplex[1].x[1]) / 2.0};
        auto at = [&](double factor) {
            std::array<double, 2> x = {
                centroid[0] + factor * (centroid[0] - simplex[2].x[0]),
                centroid[1] + factor * (centroid[1] - simplex[2].x[1])};
            return SimplexPoint{x, neg_ll(hist, x[0], x[1])};
        };

        SimplexPoint reflected = at(reflect);
        if (reflected.f < simplex[0].f) {
            SimplexPoint expanded = at(reflect * expand);
            simplex[2] = expanded.f < reflected.f ? expanded : reflected;
        } else if (reflected.f < simplex[1].f) {
            simplex[2] = reflected;
        } else {
            SimplexPoint contracted = at(reflected.f < simplex[2].f
                                             ? reflect * contract
                                             : -contract);
            if (contracted.f < std::min(reflected.f, simplex[2].f)) {
                simplex[2] = contracted;
            } else {
                for (int i = 1; i < 3; ++i) {
                    simplex[i].x[0] =
                        simplex[0].x[0] + shrink * (simplex[i].x[0] - simplex[0].x[0]);
                    simplex[i].x[1] =
                        simplex[0].x[1] + shrink * (simplex[i].x[1] - simplex[0].x[1]);
                    simplex[i].f = neg_ll(hist, simplex[i].x[0], simplex[i].x[1]);
                }
            }
        }
    }

    std::sort(simplex.begin(), simplex.end(),
              [](const SimplexPoint& a, const SimplexPoint& b) {
                  return a.f < b.f;
              });
    fit.alpha = std::exp(simplex[0].x[0]);
    fit.beta = std::exp(simplex[0].x[1]);
    fit.log_likelihood = -simplex[0].f;
    fit.iterations = iteration;
    return fit;
}

// ===== goodness of fit =====================================================

GofResult chi2_gof(const VoteHistogram& hist,
                   const std::vector<double>& expected_probs,
                   std::size_t n_estimated_params, double alpha_level) {
    if (expected_probs.size() != hist.counts.size())
        throw ContractError("expected_probs must have n + 1 cells");
    double prob_sum = 0.0;
    for (double p : expected_probs) prob_sum += p;
    if (std::fabs(prob_sum - 1.0) > 1e-9)
        throw ContractError("expected cell probabilities must sum to 1");
    if (alpha_level <= 0.0 || alpha_level >= 1.0)
        throw ContractError("alpha_level must be in (0, 1)");

    const double N = static_cast<double>(hist.total());
    if (N == 0.0) throw DataError("cannot test an empty histogram");

    // Cells as (first k, last k, observed, expected), merged from the
    // high-k tail inward until every expected count reaches 5.
    struct Cell {
        std::size_t lo, hi;
        double observed, expected;
    };
    std::vector<Cell> cells;
    for (std::size_t k = 0; k < hist.counts.size(); ++k)
        cells.push_back({k, k, static_cast<double>(hist.counts[k]),
                         N * expected_probs[k]});

    bool merged_any = false;
    for (;;) {
        std::size_t deficient = cells.size();
        for (std::size_t i = cells.size(); i-- > 0;) {
            if (cells[i].expected < 5.0) {
                deficient = i;
                break;
            }
        }
        if (deficient == cells.size()) break;
        if (cells.size() == 1)
            throw DataError("expected counts cannot reach 5 in any grouping");
        merged_any = true;
        std::size_t into = deficient > 0 ? deficient - 1 : 1;
        cells[into].lo = std::min(cells[into].lo, cells[deficient].lo);
        cells[into].hi = std::max(cells[into].hi, cells[deficient].hi);
        cells[into].observed += cells[deficient].observed;
        cells[into].expected += cells[deficient].expected;
        cells.erase(cells.begin() + static_cast<std::ptrdiff_t>(deficient));
    }

    GofResult result;
    result.alpha_level = alpha_level;
    result.n_estimated_params = n_estimated_params;
    result.cells_after_merge = cells.size();

    std::ostringstream merged;
    if (!merged_any) {
        merged << "none";
    } else {
        bool first = true;
        for (const Cell& cell : cells) {
            if (cell.lo == cell.hi) continue;
            if (!first) merged << ", ";
            merged << "k=" << cell.lo << ".." << cell.hi;
            first = false;
        }
    }
    result.merged_cells = merged.str();

    if (cells.size() < 2 + n_estimated_params)
        throw DataError("merging left too few cells: df would be < 1");
    result.df = cells.size() - 1 - n_estimated_params;

    for (const Cell& cell : cells) {
        double diff = cell.observed - cell.expected;
        result.chi2 += diff * diff / cell.expected;
    }
    result.p_value = regularized_gamma_q(static_cast<double>(result.df) / 2.0,
                                         result.chi2 / 2.0);
    result.critical_value = chi2_critical(alpha_level, result.df);
    result.rejected = result.chi2 > result.critical_value;
    return result;
}

double chi2_critical(double alpha_level, std::size_t df) {
    if (alpha_level <= 0.0 || alpha_level >= 1.0)
        throw ContractError("alpha_level must be in (0, 1)");
    if (df == 0) throw ContractError("chi2_critical needs df >= 1");

    const double target = 1.0 - alpha_level;
    double lo = 0.0;
    double hi = std::max(10.0, static_cast<double>(df));
    while (chi2_cdf(hi, static_cast<double>(df)) < target) hi *= 2.0;

    // Bisection to 1e-6, then one Newton polish for good measure.
    while (hi - lo > 1e-7) {
        double mid = (lo + hi) / 2.0;
        if (chi2_cdf(mid, static_cast<double>(df)) < target)
            lo = mid;
        else
            hi = mid;
    }
    double x = (lo + hi) / 2.0;
    double pdf = chi2_pdf(x, static_cast<double>(df));
    if (pdf > 1e-12)
        x -= (chi2_cdf(x, static_cast<double>(df)) - target) / pdf;
    return x;
}

// ===== design effect =======================================================

DesignEffectReport design_effect_from_moments(double var_obs, std::size_t n,
                                              double p_hat) {
    if (n < 2)
        throw ContractError("design effect needs an ensemble of at least 2");
    if (p_hat <= 0.0 || p_hat >= 1.0)
        throw DataError("degenerate vote share (p_hat is 0 or 1); "
                        "no variance baseline exists");
    if (var_obs < 0.0) throw ContractError("variance cannot be negative");
    if (var_obs == 0.0)
        throw DataError("zero observed vote variance; design effect undefined");

    DesignEffectReport report;
    report.var_obs = var_obs;
    report.var_ind = static_cast<double>(n) * p_hat * (1.0 - p_hat);
    report.deff = report.var_obs / report.var_ind;
    report.n_eff = static_cast<double>(n) / report.deff;
    report.rho = (report.deff - 1.0) / (static_cast<double>(n) - 1.0);
    return report;
}

DesignEffectReport design_effect(const VoteHistogram& hist,
                                 const BinomialFit& fit) {
    return design_effect_from_moments(hist.variance(), hist.n, fit.p_hat);
}

double neff_curve(std::size_t n, double rho) {
    if (n == 0) throw ContractError("neff_curve needs n >= 1");
    if (rho < 0.0 || rho > 1.0)
        throw ContractError("neff_curve needs rho in [0, 1]");
    return static_cast<double>(n) /
           (1.0 + (static_cast<double>(n) - 1.0) * rho);
}

} // namespace cryptoscan

#include "ruinopt/closed_forms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ruinopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Dense-matrix Cholesky solve, enough for the small portfolio systems.
// Returns false when the matrix is not positive definite.
bool cholesky_factor(std::vector<std::vector<double>> a, std::vector<std::vector<double>>& l) {
    const std::size_t n = a.size();
    l.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double sum = a[i][j];
            for (std::size_t k = 0; k < j; ++k) sum -= l[i][k] * l[j][k];
            if (i == j) {
                if (!(sum > 0)) return false;
                l[i][i] = std::sqrt(sum);
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    return true;
}

std::vector<double> cholesky_solve(const std::vector<std::vector<double>>& l,
                                   std::vector<double> b) {
    const std::size_t n = l.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < i; ++k) b[i] -= l[i][k] * b[k];
        b[i] /= l[i][i];
    }
    for (std::size_t ii = n; ii-- > 0;) {
        for (std::size_t k = ii + 1; k < n; ++k) b[ii] -= l[k][ii] * b[k];
        b[ii] /= l[ii][ii];
    }
    return b;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

void PropReinsuranceParams::validate() const {
    if (!(eta > 0) || !(eta < theta))
        throw ParameterError("proportional reinsurance requires 0 < eta < theta");
    if (!(sigma > 0)) throw ParameterError("proportional reinsurance requires sigma > 0");
}

void XlParams::validate() const {
    if (!(eta > 0) || !(eta < theta))
        throw ParameterError("XL reinsurance requires 0 < eta < theta");
    if (!(lambda > 0)) throw ParameterError("XL reinsurance requires lambda > 0");
}

void InvestmentParams::validate() const {
    if (!(sigma_s > 0) || !(sigma_i > 0))
        throw ParameterError("investment requires sigma_s > 0 and sigma_i > 0");
    if (m == 0 || std::isnan(m)) throw ParameterError("investment requires m != 0");
}

double CombinedParams::theta_upper() const {
    return eta + std::sqrt(eta * eta + m * m * sigma_s * sigma_s / (sigma_i * sigma_i));
}

void CombinedParams::validate() const {
    if (!(sigma_s > 0) || !(sigma_i > 0))
        throw ParameterError("combined problem requires sigma_s > 0 and sigma_i > 0");
    if (!(eta > 0) || !(theta > eta))
        throw ParameterError("combined problem requires 0 < eta < theta");
    // Admit the boundary itself up to rounding.
    if (theta > theta_upper() * (1.0 + 1e-12))
        throw ParameterError(
            "combined problem requires theta <= eta + sqrt(eta^2 + m^2 sigma_s^2 / sigma_i^2)");
}

void PortfolioParams::validate() const {
    const std::size_t n = mu.size();
    if (n == 0) throw ParameterError("portfolio needs at least one asset");
    if (a.size() != n) throw ParameterError("portfolio covariance must be n x n");
    for (const auto& row : a)
        if (row.size() != n) throw ParameterError("portfolio covariance must be n x n");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double scale = std::max({1.0, std::abs(a[i][j]), std::abs(a[j][i])});
            if (std::abs(a[i][j] - a[j][i]) > 1e-10 * scale)
                throw ParameterError("portfolio covariance must be symmetric");
        }
}

double prop_reinsurance_optimal(const PropReinsuranceParams& p) {
    p.validate();
    return std::min(2.0 * (1.0 - p.eta / p.theta), 1.0);
}

double xl_exponential_objective(double u, const XlParams& p, XlVariant variant) {
    p.validate();
    if (!(u > 0)) throw std::domain_error("XL objective requires u > 0");
    const double lu = p.lambda * u;
    const double e = std::exp(-lu);
    const double numer = (p.theta * (1.0 - e) - (p.theta - p.eta)) / p.lambda;
    const double denom =
        variant == XlVariant::exact_moments
            ? 2.0 - e * (2.0 + 2.0 * lu)
            : 2.0 - e * (2.0 + 2.0 * lu - lu * lu * (p.lambda - 1.0));
    if (!(denom > 0)) return -kInf;
    return numer / denom;
}

double xl_exponential_optimal(const XlParams& p, XlVariant variant) {
    p.validate();
    auto objective = [&](double u) { return xl_exponential_objective(u, p, variant); };

    // Both variants approach eta / (2 lambda) as u -> inf. Double the right
    // edge until the tail has flattened onto that limit; the objective has an
    // interior maximum exactly when some scanned point beats the limit. An
    // interior bump below the tail (possible for the printed-text variant at
    // lambda != 1) must surface as an error, not as the bump.
    const double limit = p.eta / (2.0 * p.lambda);
    const double margin = 1e-9 * std::max(1.0, std::abs(limit));
    const double lo = 1e-9 / p.lambda;
    double u_max = 2.0 / p.lambda;
    const int coarse = 128;
    double best_val = -kInf;
    bool bracketed = false;
    for (int doubling = 0; doubling < 60; ++doubling) {
        for (int i = 0; i < coarse; ++i) {
            const double u = lo + (u_max - lo) * static_cast<double>(i) / (coarse - 1);
            best_val = std::max(best_val, objective(u));
        }
        const double edge = objective(u_max);
        if (std::abs(edge - limit) <= 1e-12 * std::max(1.0, std::abs(limit))) {
            bracketed = best_val > limit + margin;
            break;
        }
        u_max *= 2.0;
    }
    if (!bracketed)
        throw ConvergenceError(
            "XL objective has no interior maximum (supremum approached as u -> inf)", u_max);

    Tolerance tol;
    tol.abs_tol = 1e-12;
    return maximize_1d(objective, Interval(lo, u_max), tol).x;
}

double investment_optimal(const InvestmentParams& p) {
    p.validate();
    const double root =
        std::sqrt(p.eta * p.eta * p.sigma_i * p.sigma_i + p.m * p.m * p.sigma_s * p.sigma_s);
    const double u = (root - p.eta * p.sigma_i) / (p.m * p.sigma_i);

    // Stationarity of (eta + u m) / (sigma_s^2 + sigma_i^2 u^2) at u.
    const double var = p.sigma_s * p.sigma_s + p.sigma_i * p.sigma_i * u * u;
    const double stat = p.m * var - (p.eta + u * p.m) * 2.0 * p.sigma_i * p.sigma_i * u;
    if (std::abs(stat) > 1e-8 * std::max(1.0, std::abs(p.m) * var))
        throw NumericsError("investment optimum failed its stationarity check");
    return u;
}

std::pair<double, double> combined_optimal(const CombinedParams& p) {
    p.validate();
    const double denom =
        p.m * p.m * p.sigma_s * p.sigma_s + p.theta * p.theta * p.sigma_i * p.sigma_i;
    const double a_star = 2.0 * p.m * p.sigma_s * p.sigma_s * (p.theta - p.eta) / denom;
    const double b_unc = 2.0 * p.theta * p.sigma_i * p.sigma_i * (p.theta - p.eta) / denom;
    return {a_star, std::min(b_unc, 1.0)};
}

double portfolio_ratio(const PortfolioParams& p, const std::vector<double>& pi) {
    double quad = 0;
    for (std::size_t i = 0; i < pi.size(); ++i)
        for (std::size_t j = 0; j < pi.size(); ++j) quad += pi[i] * p.a[i][j] * pi[j];
    return dot(pi, p.mu) / quad;
}

std::vector<double> portfolio_optimal(const PortfolioParams& p, const Tolerance& tol) {
    p.validate();
    const std::size_t n = p.mu.size();
    if (n == 1) return {1.0};

    std::vector<std::vector<double>> l;
    if (!cholesky_factor(p.a, l))
        throw ParameterError("portfolio covariance is not positive definite");

    const std::vector<double> y = cholesky_solve(l, p.mu);          // a^{-1} mu
    const std::vector<double> z = cholesky_solve(l, std::vector<double>(n, 1.0));  // a^{-1} 1
    const double alpha = dot(y, p.mu);
    const double beta = dot(z, p.mu);  // = 1' a^{-1} mu
    const double gamma = dot(z, std::vector<double>(n, 1.0));

    // R(c) for pi(c) = (y - c z) / (beta - c gamma). The denominator of the
    // quadratic form simplifies to (y - cz)'(mu - c 1).
    auto ratio_of_c = [&](double c) {
        const double norm = beta - c * gamma;
        const double q1 = alpha - c * beta;
        const double q2 = alpha - 2.0 * c * beta + c * c * gamma;
        const double norm_scale = std::abs(beta) + std::abs(c * gamma) + 1.0;
        if (std::abs(norm) < 1e-12 * norm_scale || !(q2 > 0)) return -kInf;
        return norm * q1 / q2;
    };

    const double mu_lo = *std::min_element(p.mu.begin(), p.mu.end());
    const double mu_hi = *std::max_element(p.mu.begin(), p.mu.end());
    double spread = mu_hi - mu_lo;
    if (!(spread > 0)) spread = std::max(1.0, std::abs(mu_hi));

    // Scan c over the drift range, widening while the maximizer sticks to an
    // edge: for nearly parallel mu and 1 the optimal multiplier can sit far
    // outside the initial window.
    Tolerance scan_tol = tol;
    scan_tol.abs_tol = std::min(tol.abs_tol, 1e-12);
    double c_lo = mu_lo - 10.0 * spread;
    double c_hi = mu_hi + 10.0 * spread;
    MaxResult1D best{};
    for (int widen = 0; widen < 60; ++widen) {
        best = maximize_1d(ratio_of_c, Interval(c_lo, c_hi), scan_tol, 4096);
        const double margin = 0.01 * (c_hi - c_lo);
        const bool at_lo = best.x <= c_lo + margin;
        const bool at_hi = best.x >= c_hi - margin;
        if (best.flat || (!at_lo && !at_hi)) break;
        const double width = c_hi - c_lo;
        if (at_lo) c_lo -= 2.0 * width;
        if (at_hi) c_hi += 2.0 * width;
    }
    if (best.value == -kInf)
        throw NumericsError("portfolio candidate normalizer degenerate for all scanned c");

    const double c = best.x;
    std::vector<double> pi(n);
    for (std::size_t i = 0; i < n; ++i) pi[i] = y[i] - c * z[i];
    double sum = 0;
    for (double w : pi) sum += w;
    for (double& w : pi) w /= sum;
    return pi;
}

ControlFamily prop_reinsurance_family(const PropReinsuranceParams& p) {
    p.validate();
    const double theta = p.theta, eta = p.eta, sigma = p.sigma;
    Parametric1D fam{
        [theta, eta](double, double u) { return u * theta - (theta - eta); },
        [sigma](double, double u) { return u * sigma; },
        Interval(0.0, 1.0),
    };
    return {fam};
}

ControlFamily xl_family(const XlParams& p, XlVariant variant, double u_max) {
    p.validate();
    if (u_max <= 0) u_max = 60.0 / p.lambda;
    const double theta = p.theta, eta = p.eta, lambda = p.lambda;
    Parametric1D fam{
        [theta, eta, lambda](double, double u) {
            const double e = std::exp(-lambda * u);
            return (theta * (1.0 - e) - (theta - eta)) / lambda;
        },
        [lambda, variant](double, double u) {
            const double lu = lambda * u;
            const double e = std::exp(-lu);
            const double den = variant == XlVariant::exact_moments
                                   ? 2.0 - e * (2.0 + 2.0 * lu)
                                   : 2.0 - e * (2.0 + 2.0 * lu - lu * lu * (lambda - 1.0));
            if (!(den > 0)) return 0.0;  // excluded by the sigma floor
            return std::sqrt(den) / lambda;
        },
        Interval(1e-9 / p.lambda, u_max),
    };
    return {fam};
}

ControlFamily investment_family(const InvestmentParams& p, double u_span) {
    p.validate();
    // |u*| <= sigma_s / sigma_i, so this span always brackets the optimum.
    if (u_span <= 0) u_span = 2.0 * p.sigma_s / p.sigma_i + 1.0;
    const double eta = p.eta, m = p.m, ss = p.sigma_s, si = p.sigma_i;
    Parametric1D fam{
        [eta, m](double, double u) { return eta + u * m; },
        [ss, si](double, double u) { return std::sqrt(ss * ss + si * si * u * u); },
        Interval(-u_span, u_span),
    };
    return {fam};
}

ControlFamily combined_family(const CombinedParams& p, double a_span) {
    p.validate();
    if (a_span <= 0) {
        const double a_star = std::abs(combined_optimal(p).first);
        a_span = 10.0 * a_star + 1.0;
    }
    const double theta = p.theta, eta = p.eta, m = p.m, ss = p.sigma_s, si = p.sigma_i;
    Parametric2D fam{
        [theta, eta, m](double, double a, double b) {
            return b * theta - (theta - eta) + m * a;
        },
        [ss, si](double, double a, double b) {
            return std::sqrt(ss * ss * b * b + si * si * a * a);
        },
        Interval(-a_span, a_span),  // A
        Interval(0.0, 1.0),         // b
    };
    return {fam};
}

}  // namespace ruinopt

#pragma once

// Closed-form and semi-closed-form ruin-minimizing controls for the five
// standard applications: proportional reinsurance, excess-of-loss reinsurance
// with exponential claims, investment, combined reinsurance + investment, and
// the fully invested portfolio. Each solver is cross-checkable against the
// generic extremal_choice maximizer through the matching family builder.

#include <utility>
#include <vector>

#include "ruinopt/model.hpp"
#include "ruinopt/numerics.hpp"

namespace ruinopt {

struct PropReinsuranceParams {
    double theta;  // reinsurer loading
    double eta;    // insurer loading
    double sigma;  // diffusion scale
    void validate() const;
};

struct XlParams {
    double theta;
    double eta;
    double lambda;  // exponential claim rate
    void validate() const;
};

// paper_text evaluates the printed ratio whose denominator carries the extra
// u^2 lambda^2 (lambda - 1) term; exact_moments uses lambda^2 E[min{Z,u}^2].
// The two coincide identically at lambda = 1.
enum class XlVariant { paper_text, exact_moments };

struct InvestmentParams {
    double eta;      // premium drift
    double m;        // asset drift
    double sigma_s;  // surplus volatility
    double sigma_i;  // asset volatility
    void validate() const;
};

struct CombinedParams {
    double theta;
    double eta;
    double m;
    double sigma_s;
    double sigma_i;
    void validate() const;
    double theta_upper() const;  // eta + sqrt(eta^2 + m^2 sigma_s^2 / sigma_i^2)
};

struct PortfolioParams {
    std::vector<double> mu;              // asset drifts
    std::vector<std::vector<double>> a;  // covariance matrix, symmetric positive definite
    void validate() const;
};

// Retention level u* = 2(1 - eta/theta) ∧ 1. Independent of sigma.
double prop_reinsurance_optimal(const PropReinsuranceParams& p);

// Drift-to-variance ratio of the XL contract at limit u > 0.
double xl_exponential_objective(double u, const XlParams& p,
                                XlVariant variant = XlVariant::exact_moments);

// Numerical maximizer of the XL objective over (0, u_max] with u_max grown
// adaptively until the objective is past its peak. For theta = 2 and
// lambda = eta = 1 this equals 2 + W0(-2 e^-2).
double xl_exponential_optimal(const XlParams& p,
                              XlVariant variant = XlVariant::exact_moments);

// Amount invested in the risky asset:
// u* = (sqrt(eta^2 sigma_i^2 + m^2 sigma_s^2) - eta sigma_i) / (m sigma_i).
double investment_optimal(const InvestmentParams& p);

// (A*, b*) of the combined problem; b* is capped at 1 and reaches the cap
// exactly on the boundary of the standing assumption.
std::pair<double, double> combined_optimal(const CombinedParams& p);

// Fully invested portfolio maximizing (pi' mu) / (pi' a pi) subject to
// sum(pi) = 1, via the stationarity family pi(c) ∝ a^{-1}(mu - c 1).
std::vector<double> portfolio_optimal(const PortfolioParams& p, const Tolerance& tol = {});

// Achieved ratio (pi' mu) / (pi' a pi) of a portfolio.
double portfolio_ratio(const PortfolioParams& p, const std::vector<double>& pi);

// Control families matching the solvers above, for generic maximizer
// cross-checks and for simulation. Spans of 0 pick a default control range.
ControlFamily prop_reinsurance_family(const PropReinsuranceParams& p);
ControlFamily xl_family(const XlParams& p, XlVariant variant = XlVariant::exact_moments,
                        double u_max = 0);
ControlFamily investment_family(const InvestmentParams& p, double u_span = 0);
ControlFamily combined_family(const CombinedParams& p, double a_span = 0);

}  // namespace ruinopt

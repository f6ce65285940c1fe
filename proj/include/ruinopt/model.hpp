#pragma once

// Admissible control sets K(x), the extremal coefficient pair obtained by
// maximizing the drift-to-variance ratio mu/sigma^2 pointwise, and regime
// selection for switching problems.

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "ruinopt/numerics.hpp"

namespace ruinopt {

// Controls whose volatility falls below this floor are excluded from the
// scan; a vanishing-volatility control is always dominated by re-selecting a
// strictly diffusive one.
inline constexpr double kSigmaFloor = 1e-8;

struct Parametric1D {
    std::function<double(double, double)> mu;     // (x, u)
    std::function<double(double, double)> sigma;  // (x, u), > 0 on the admissible set
    Interval u_range;
};

struct Parametric2D {
    std::function<double(double, double, double)> mu;     // (x, u1, u2)
    std::function<double(double, double, double)> sigma;  // (x, u1, u2)
    Interval range1;
    Interval range2;
};

struct Regime {
    std::function<double(double)> mu;
    std::function<double(double)> sigma;
};

struct ControlFamily {
    std::variant<Parametric1D, Parametric2D, std::vector<Regime>> spec;
};

using ControlValue = std::variant<double, std::array<double, 2>, std::size_t>;

struct ControlChoice {
    double ratio = 0;  // mu / sigma^2 at the maximizer
    ControlValue control;
    double mu = 0;
    double sigma = 0;
};

// The extremal drift/volatility pair (m, s) as evaluable functions. s > 0 on
// the domain. Evaluation is read-only after construction and safe to share
// across threads. `constant` marks state-independent coefficients, which lets
// downstream kernels take a cheaper path.
struct CoefficientField {
    std::function<double(double)> m;
    std::function<double(double)> s;
    Interval domain{0.0, 1.0};
    bool constant = false;
    double m0 = 0, s0 = 0;  // set when constant

    double ratio(double x) const {
        const double sv = s(x);
        return m(x) / (sv * sv);
    }

    static CoefficientField constants(double m_val, double s_val,
                                      Interval dom = Interval(0.0, 1.0));
    static CoefficientField from_functions(std::function<double(double)> m_fn,
                                           std::function<double(double)> s_fn,
                                           Interval dom);
    // Linear interpolation of (x, m, s) triples; evaluation outside the table
    // clamps to the nearest endpoint.
    static CoefficientField tabulated(std::vector<double> xs, std::vector<double> ms,
                                      std::vector<double> ss);
};

// Maximizer of mu/sigma^2 over the admissible set at state x. Parametric
// families go through the generic 1-D/2-D maximizers, regime lists through
// exhaustive comparison; ties pick the smallest control / lowest index.
ControlChoice extremal_choice(const ControlFamily& family, double x,
                              const Tolerance& tol = {});

// Index of the ratio-maximizing regime at every grid point; ties to the
// lowest index.
std::vector<std::size_t> extremal_regime_partition(const std::vector<Regime>& regimes,
                                                   std::span<const double> grid);

// Extremal field backed by per-point maximization, memoized on a uniform grid
// over `domain`; off-grid queries are re-evaluated exactly so m/s^2 equals
// extremal_choice(x).ratio pointwise.
//
// Existence of a unique weak solution for the diffusion driven by (m, s) is
// the caller's obligation (local integrability of (1 + |m|)/s^2 suffices);
// it is not checked numerically.
CoefficientField build_extremal_field(const ControlFamily& family, Interval domain,
                                      const Tolerance& tol = {},
                                      std::size_t cache_points = 4096);

}  // namespace ruinopt

#pragma once

// Scale function of the extremal diffusion and the minimal probability of
// ever falling below a barrier:
//
//   p(x) = int_b^x exp(-2 int_b^xi m(u)/s(u)^2 du) dxi,
//   min ruin probability = 1 - p(x0) / p(inf),
//
// with p(inf) approximated on a doubling horizon. Both integrals are
// accumulated in a single left-to-right adaptive sweep; the inner integral is
// never recomputed from the barrier.

#include "ruinopt/model.hpp"
#include "ruinopt/numerics.hpp"

namespace ruinopt {

struct ScaleFunctionResult {
    double p_x = 0;        // p at the query point x0
    double p_upper = 0;    // p at the truncation abscissa
    double upper = 0;      // truncation abscissa
    bool converged = false;
    double tail_estimate = 0;  // last-interval increment of p
    bool clamped = false;      // exp(-2I) overflowed and was clamped
};

struct RuinQuery {
    CoefficientField coeffs;
    double barrier_b = 0;
    double x0 = 1;

    void validate() const {
        if (!(x0 > barrier_b)) throw ParameterError("ruin query requires x0 > barrier");
    }
};

// p(x0) and p(upper) for a fixed truncation point upper >= x0.
ScaleFunctionResult scale_function(const RuinQuery& q, double upper,
                                   const Tolerance& tol = {});

struct RuinResult {
    double prob = 1;  // 1 - p(x0)/p(upper)
    ScaleFunctionResult diag;
};

// Extends the sweep over the doubling horizon U_k = x0 + 2^k (x0 - b) until
// the relative increment of p drops below tol.rel_tol or k = 60. When the
// increments do not decay (p(inf) = inf) the probability is 1 and the
// converged flag is false: ruin is certain but was asserted by a divergence
// heuristic rather than proved by decay.
RuinResult min_ruin_probability(const RuinQuery& q, const Tolerance& tol = {});

}  // namespace ruinopt

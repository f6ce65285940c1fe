#include "ruinopt/ruin.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace ruinopt {

namespace {

// Left-to-right adaptive sweep of the coupled system
//   I'(xi) = m(xi)/s(xi)^2,  p'(xi) = exp(-2 I(xi)),
// advanced with RK4 and step-doubling error control, so partial sums of the
// inner integral are reused across the whole sweep.
class ScaleSweeper {
public:
    ScaleSweeper(const CoefficientField& f, double barrier, const Tolerance& tol)
        : f_(f), tol_(tol), xi_(barrier) {
        tol_.validate();
        h_ = 1.0 / 64.0;
        r_left_ = ratio_at(xi_);
    }

    void advance_to(double target) {
        while (xi_ < target) {
            double h = std::min(h_, target - xi_);
            for (;;) {
                if (try_step(h)) break;
                h *= 0.5;
                if (h < 1e-13 * std::max(1.0, std::abs(xi_)))
                    throw NumericsError("scale function sweep stalled: step underflow");
            }
            if (h == h_ && last_err_ratio_ < 0.02) h_ *= 2.0;
            else if (last_err_ratio_ > 0.25) h_ = std::max(h * 0.5, 0.5 * h_);
        }
    }

    double p() const { return p_; }
    double last_increment() const { return last_dp_; }
    bool clamped() const { return clamped_; }

private:
    double ratio_at(double x) {
        const double s = f_.s(x);
        if (!(s > 0) || !std::isfinite(s)) {
            std::ostringstream os;
            os << "coefficient s(x) <= 0 or non-finite at x = " << x;
            throw NumericsError(os.str());
        }
        const double r = f_.m(x) / (s * s);
        if (std::isnan(r)) {
            std::ostringstream os;
            os << "drift ratio m/s^2 is NaN at x = " << x;
            throw NumericsError(os.str());
        }
        return r;
    }

    double growth(double I) {
        double e = -2.0 * I;
        if (e > 700.0) {
            clamped_ = true;
            e = 700.0;
        }
        return std::exp(e);
    }

    struct State {
        double I, p;
    };

    // One RK4 step of size h from (xi, I, p) given the ratio values at the
    // left end, midpoint and right end of the step.
    State rk4(double h, State y, double r0, double rm, double r1) {
        const double k1I = r0, k1p = growth(y.I);
        const double k2I = rm, k2p = growth(y.I + 0.5 * h * k1I);
        const double k3I = rm, k3p = growth(y.I + 0.5 * h * k2I);
        const double k4I = r1, k4p = growth(y.I + h * k3I);
        return {y.I + h / 6.0 * (k1I + 2 * k2I + 2 * k3I + k4I),
                y.p + h / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)};
    }

    bool try_step(double h) {
        const double r_m = ratio_at(xi_ + 0.5 * h);
        const double r_r = ratio_at(xi_ + h);
        const State full = rk4(h, {I_, p_}, r_left_, r_m, r_r);

        const double r_q1 = ratio_at(xi_ + 0.25 * h);
        const double r_q3 = ratio_at(xi_ + 0.75 * h);
        State half = rk4(0.5 * h, {I_, p_}, r_left_, r_q1, r_m);
        half = rk4(0.5 * h, half, r_m, r_q3, r_r);

        const double dp = half.p - p_;
        const double err_p = std::abs(half.p - full.p) / 15.0;
        const double err_I = std::abs(half.I - full.I) / 15.0;
        const double tol_p = std::max(tol_.abs_tol * h, tol_.rel_tol * (std::abs(p_) + std::abs(dp)));
        const double tol_I = std::max(tol_.abs_tol * h, tol_.rel_tol * std::max(1.0, std::abs(half.I)));
        last_err_ratio_ = std::max(err_p / tol_p, err_I / tol_I);
        if (last_err_ratio_ > 1.0) return false;

        I_ = half.I + (half.I - full.I) / 15.0;
        p_ = half.p + (half.p - full.p) / 15.0;
        last_dp_ = dp;
        xi_ += h;
        r_left_ = r_r;
        return true;
    }

    const CoefficientField& f_;
    Tolerance tol_;
    double xi_;
    double I_ = 0;
    double p_ = 0;
    double h_;
    double r_left_;
    double last_dp_ = 0;
    double last_err_ratio_ = 0;
    bool clamped_ = false;
};

Tolerance sweep_tolerance(const Tolerance& tol) {
    Tolerance t = tol;
    t.abs_tol = std::min(tol.abs_tol, 1e-12);
    t.rel_tol = std::min(tol.rel_tol > 0 ? tol.rel_tol : 1e-12, 1e-12);
    return t;
}

}  // namespace

ScaleFunctionResult scale_function(const RuinQuery& q, double upper, const Tolerance& tol) {
    q.validate();
    if (!(upper >= q.x0)) throw ParameterError("scale_function requires upper >= x0");

    ScaleSweeper sweep(q.coeffs, q.barrier_b, sweep_tolerance(tol));
    ScaleFunctionResult r;
    sweep.advance_to(q.x0);
    r.p_x = sweep.p();
    sweep.advance_to(upper);
    r.p_upper = sweep.p();
    r.upper = upper;
    r.tail_estimate = sweep.last_increment();
    r.clamped = sweep.clamped();
    r.converged = !r.clamped;
    return r;
}

RuinResult min_ruin_probability(const RuinQuery& q, const Tolerance& tol) {
    q.validate();
    const double stop_rel = tol.rel_tol > 0 ? tol.rel_tol : 1e-9;
    constexpr double kDivergenceGuard = 1e250;

    ScaleSweeper sweep(q.coeffs, q.barrier_b, sweep_tolerance(tol));
    sweep.advance_to(q.x0);
    const double p_x = sweep.p();

    RuinResult out;
    out.diag.p_x = p_x;

    const double span = q.x0 - q.barrier_b;
    double p_prev = p_x;
    double incr_prev = -1;
    bool converged = false;
    bool diverging = false;
    double upper = q.x0;

    for (int k = 0; k <= 60; ++k) {
        upper = q.x0 + std::ldexp(span, k);
        sweep.advance_to(upper);
        const double p_here = sweep.p();
        const double incr = p_here - p_prev;
        p_prev = p_here;
        out.diag.tail_estimate = incr;

        if (sweep.clamped() || p_here > kDivergenceGuard) {
            diverging = true;
            break;
        }
        if (incr <= stop_rel * p_here) {
            converged = true;
            break;
        }
        if (k == 60 && incr_prev >= 0 && incr >= 0.9 * incr_prev) diverging = true;
        incr_prev = incr;
    }

    out.diag.p_upper = sweep.p();
    out.diag.upper = upper;
    out.diag.clamped = sweep.clamped();
    out.diag.converged = converged;

    if (diverging) {
        out.prob = 1.0;
        return out;
    }
    out.prob = std::clamp(1.0 - p_x / out.diag.p_upper, 0.0, 1.0);
    return out;
}

}  // namespace ruinopt

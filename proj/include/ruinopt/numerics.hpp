#pragma once

// Shared scalar kernels: adaptive quadrature, 1-D/2-D maximization,
// the upper branch of Lambert's W function, and monotone table inversion.
// Everything here is a pure function of its arguments and safe to call
// from any number of threads.

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "ruinopt/errors.hpp"

namespace ruinopt {

struct Interval {
    double lo;
    double hi;

    Interval(double lo_, double hi_);

    double length() const { return hi - lo; }
    double mid() const { return 0.5 * (lo + hi); }
    bool finite() const;
};

struct Tolerance {
    double abs_tol = 1e-10;
    double rel_tol = 1e-9;
    int max_iter = 200000;

    void validate() const;
};

// Adaptive Simpson quadrature with interval-halving error estimate.
// Returns I with estimated error <= max(abs_tol, rel_tol * |I|).
// Throws NumericsError if f produces a NaN (the message names the abscissa)
// and ConvergenceError (carrying the partial sum) if the subdivision budget
// tol.max_iter is exhausted.
double integrate(const std::function<double(double)>& f, const Interval& iv,
                 const Tolerance& tol = {});

struct MaxResult1D {
    double x = 0;
    double value = 0;
    bool flat = false;  // objective was constant over the scan grid
};

struct MaxResult2D {
    std::array<double, 2> x{0, 0};
    double value = 0;
    bool flat = false;
};

// Global grid scan followed by golden-section refinement. Unimodality is not
// assumed; the result is guaranteed to be at least as good as every scanned
// grid point. -inf values mark excluded points and are skipped; NaN is an
// error; a constant objective returns the interval midpoint with flat=true.
MaxResult1D maximize_1d(const std::function<double(double)>& f,
                        const Interval& iv, const Tolerance& tol = {},
                        int grid_points = 1024);

// Grid scan over a box followed by Nelder-Mead refinement clamped to the box.
MaxResult2D maximize_2d(const std::function<double(double, double)>& f,
                        const Interval& box_x, const Interval& box_y,
                        const Tolerance& tol = {}, int grid_per_axis = 64);

// Upper branch W0 of the Lambert W function, the inverse of w -> w*exp(w) on
// [-1/e, inf). Halley iteration from a branch-aware initial guess; the result
// satisfies |w*exp(w) - x| <= 1e-12 * max(1, |x|).
// Throws std::domain_error for x < -1/e.
double lambert_w0(double x);

// Piecewise-linear inverse of a nondecreasing table: returns the smallest x
// with ys(x) >= y. On flat segments this is the left endpoint. Requires
// ys.front() <= y <= ys.back(); xs strictly increasing and ys nondecreasing
// are preconditions (not revalidated per call).
double monotone_inverse(std::span<const double> xs, std::span<const double> ys,
                        double y);

// Piecewise-linear forward interpolation on a strictly increasing abscissa
// table; x outside the table is clamped to the endpoints.
double interp_linear(std::span<const double> xs, std::span<const double> ys,
                     double x);

}  // namespace ruinopt

#include "ruinopt/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ruinopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double checked_eval(const std::function<double(double)>& f, double x) {
    const double v = f(x);
    if (std::isnan(v)) {
        std::ostringstream os;
        os << "integrand returned NaN at x = " << x;
        throw NumericsError(os.str());
    }
    return v;
}

double simpson(double h, double fa, double fm, double fb) {
    return (fa + 4.0 * fm + fb) * (h / 6.0);
}

}  // namespace

Interval::Interval(double lo_, double hi_) : lo(lo_), hi(hi_) {
    if (std::isnan(lo) || std::isnan(hi) || !(lo < hi) || std::isinf(lo)) {
        std::ostringstream os;
        os << "invalid interval [" << lo_ << ", " << hi_ << "]";
        throw ParameterError(os.str());
    }
}

bool Interval::finite() const { return std::isfinite(lo) && std::isfinite(hi); }

void Tolerance::validate() const {
    if (!(abs_tol > 0) || !(rel_tol >= 0) || max_iter < 1)
        throw ParameterError("tolerance requires abs_tol > 0, rel_tol >= 0, max_iter >= 1");
}

double integrate(const std::function<double(double)>& f, const Interval& iv,
                 const Tolerance& tol) {
    tol.validate();
    if (!iv.finite()) throw ParameterError("integrate requires a finite interval");

    struct Panel {
        double a, b, fa, fm, fb, estimate, eps;
    };

    const double fa = checked_eval(f, iv.lo);
    const double fb = checked_eval(f, iv.hi);
    const double fm = checked_eval(f, iv.mid());
    const double whole = simpson(iv.length(), fa, fm, fb);
    const double eps0 = std::max(tol.abs_tol, tol.rel_tol * std::abs(whole));

    std::vector<Panel> stack{{iv.lo, iv.hi, fa, fm, fb, whole, eps0}};
    double accepted = 0.0;
    int subdivisions = 0;

    while (!stack.empty()) {
        Panel p = stack.back();
        stack.pop_back();

        const double m = 0.5 * (p.a + p.b);
        const double h = p.b - p.a;
        const double fl = checked_eval(f, 0.5 * (p.a + m));
        const double fr = checked_eval(f, 0.5 * (m + p.b));
        const double left = simpson(0.5 * h, p.fa, fl, p.fm);
        const double right = simpson(0.5 * h, p.fm, fr, p.fb);
        const double err = (left + right - p.estimate) / 15.0;

        if (std::abs(err) <= p.eps || h <= 1e-15 * (std::abs(p.a) + std::abs(p.b) + 1.0)) {
            accepted += left + right + err;
            continue;
        }
        if (++subdivisions > tol.max_iter) {
            double partial = accepted + left + right;
            for (const Panel& q : stack) partial += q.estimate;
            throw ConvergenceError("integrate: subdivision budget exhausted", partial);
        }
        stack.push_back({p.a, m, p.fa, fl, p.fm, left, 0.5 * p.eps});
        stack.push_back({m, p.b, p.fm, fr, p.fb, right, 0.5 * p.eps});
    }
    return accepted;
}

namespace {

// Golden-section ascent on [a, b]; f values of -inf are tolerated (treated as
// "worse than anything finite").
MaxResult1D golden_max(const std::function<double(double)>& f, double a, double b,
                       const Tolerance& tol) {
    constexpr double invphi = 0.6180339887498949;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = checked_eval(f, x1);
    double f2 = checked_eval(f, x2);
    int it = 0;
    while (b - a > tol.abs_tol && it++ < tol.max_iter) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = checked_eval(f, x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = checked_eval(f, x1);
        }
    }
    return f1 >= f2 ? MaxResult1D{x1, f1, false} : MaxResult1D{x2, f2, false};
}

}  // namespace

MaxResult1D maximize_1d(const std::function<double(double)>& f, const Interval& iv,
                        const Tolerance& tol, int grid_points) {
    tol.validate();
    if (!iv.finite()) throw ParameterError("maximize_1d requires a finite interval");
    if (grid_points < 2) throw ParameterError("maximize_1d needs at least 2 grid points");

    const int n = grid_points;
    int best = -1;
    double best_val = -kInf;
    double lo_val = kInf, hi_val = -kInf;
    bool any_excluded = false;
    std::vector<double> xs(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double x = iv.lo + iv.length() * static_cast<double>(i) / (n - 1);
        xs[static_cast<std::size_t>(i)] = x;
        const double v = checked_eval(f, x);
        if (v == -kInf) {
            any_excluded = true;
            continue;
        }
        lo_val = std::min(lo_val, v);
        hi_val = std::max(hi_val, v);
        if (v > best_val) {
            best_val = v;
            best = i;
        }
    }
    if (best < 0) throw NumericsError("maximize_1d: objective is -inf at every grid point");

    if (!any_excluded &&
        hi_val - lo_val <= 1e-13 * std::max(1.0, std::abs(hi_val))) {
        return {iv.mid(), checked_eval(f, iv.mid()), true};
    }

    const double a = xs[static_cast<std::size_t>(std::max(0, best - 1))];
    const double b = xs[static_cast<std::size_t>(std::min(n - 1, best + 1))];
    MaxResult1D refined = golden_max(f, a, b, tol);
    // On value ties (f can be flat at floating-point resolution) prefer the
    // exact bracket and grid abscissae over an interior golden point.
    for (double cand : {a, b, xs[static_cast<std::size_t>(best)]}) {
        const double v = checked_eval(f, cand);
        if (v >= refined.value) refined = {cand, v, false};
    }
    return refined;
}

namespace {

struct Vertex {
    std::array<double, 2> x;
    double value;
};

double clampd(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

}  // namespace

MaxResult2D maximize_2d(const std::function<double(double, double)>& f,
                        const Interval& box_x, const Interval& box_y,
                        const Tolerance& tol, int grid_per_axis) {
    tol.validate();
    if (!box_x.finite() || !box_y.finite())
        throw ParameterError("maximize_2d requires a finite box");
    if (grid_per_axis < 2) throw ParameterError("maximize_2d needs at least 2 grid points per axis");

    auto eval = [&](double x, double y) {
        const double v = f(x, y);
        if (std::isnan(v)) {
            std::ostringstream os;
            os << "objective returned NaN at (" << x << ", " << y << ")";
            throw NumericsError(os.str());
        }
        return v;
    };

    const int n = grid_per_axis;
    double best_val = -kInf;
    std::array<double, 2> best{box_x.mid(), box_y.mid()};
    double lo_val = kInf, hi_val = -kInf;
    bool any_excluded = false;
    for (int i = 0; i < n; ++i) {
        const double x = box_x.lo + box_x.length() * static_cast<double>(i) / (n - 1);
        for (int j = 0; j < n; ++j) {
            const double y = box_y.lo + box_y.length() * static_cast<double>(j) / (n - 1);
            const double v = eval(x, y);
            if (v == -kInf) {
                any_excluded = true;
                continue;
            }
            lo_val = std::min(lo_val, v);
            hi_val = std::max(hi_val, v);
            if (v > best_val) {
                best_val = v;
                best = {x, y};
            }
        }
    }
    if (best_val == -kInf)
        throw NumericsError("maximize_2d: objective is -inf at every grid point");
    if (!any_excluded && hi_val - lo_val <= 1e-13 * std::max(1.0, std::abs(hi_val)))
        return {{box_x.mid(), box_y.mid()}, eval(box_x.mid(), box_y.mid()), true};

    // Nelder-Mead from the best grid cell, candidates projected into the box.
    const double hx = box_x.length() / (n - 1);
    const double hy = box_y.length() / (n - 1);
    auto clamped_eval = [&](std::array<double, 2>& p) {
        p[0] = clampd(p[0], box_x.lo, box_x.hi);
        p[1] = clampd(p[1], box_y.lo, box_y.hi);
        return eval(p[0], p[1]);
    };

    std::array<Vertex, 3> s;
    s[0] = {best, best_val};
    s[1].x = {clampd(best[0] + hx, box_x.lo, box_x.hi), best[1]};
    s[1].value = eval(s[1].x[0], s[1].x[1]);
    s[2].x = {best[0], clampd(best[1] + hy, box_y.lo, box_y.hi)};
    s[2].value = eval(s[2].x[0], s[2].x[1]);

    const int max_nm = std::min(tol.max_iter, 400);
    for (int it = 0; it < max_nm; ++it) {
        std::sort(s.begin(), s.end(),
                  [](const Vertex& u, const Vertex& v) { return u.value > v.value; });
        const double spread = std::max(std::abs(s[0].x[0] - s[2].x[0]),
                                       std::abs(s[0].x[1] - s[2].x[1]));
        if (spread < tol.abs_tol) break;

        const std::array<double, 2> c{0.5 * (s[0].x[0] + s[1].x[0]),
                                      0.5 * (s[0].x[1] + s[1].x[1])};
        std::array<double, 2> xr{c[0] + (c[0] - s[2].x[0]), c[1] + (c[1] - s[2].x[1])};
        const double fr = clamped_eval(xr);
        if (fr > s[0].value) {
            std::array<double, 2> xe{c[0] + 2.0 * (c[0] - s[2].x[0]),
                                     c[1] + 2.0 * (c[1] - s[2].x[1])};
            const double fe = clamped_eval(xe);
            s[2] = fe > fr ? Vertex{xe, fe} : Vertex{xr, fr};
        } else if (fr > s[1].value) {
            s[2] = {xr, fr};
        } else {
            std::array<double, 2> xc{c[0] + 0.5 * (s[2].x[0] - c[0]),
                                     c[1] + 0.5 * (s[2].x[1] - c[1])};
            const double fc = clamped_eval(xc);
            if (fc > s[2].value) {
                s[2] = {xc, fc};
            } else {
                for (int k = 1; k < 3; ++k) {
                    s[k].x = {0.5 * (s[k].x[0] + s[0].x[0]), 0.5 * (s[k].x[1] + s[0].x[1])};
                    s[k].value = eval(s[k].x[0], s[k].x[1]);
                }
            }
        }
    }
    std::sort(s.begin(), s.end(),
              [](const Vertex& u, const Vertex& v) { return u.value > v.value; });
    if (s[0].value >= best_val) return {s[0].x, s[0].value, false};
    return {best, best_val, false};
}

double lambert_w0(double x) {
    const double neg_inv_e = -std::exp(-1.0);
    if (std::isnan(x) || x < neg_inv_e)
        throw std::domain_error("lambert_w0: argument below -1/e");
    if (x == 0.0) return 0.0;

    double w;
    const double p2 = 2.0 * (1.0 + std::exp(1.0) * x);
    if (p2 <= 0.0) return -1.0;  // branch point
    if (p2 < 0.09) {
        // Series around the branch point in p = sqrt(2(e*x + 1)).
        const double p = std::sqrt(p2);
        w = -1.0 +
            p * (1.0 +
                 p * (-1.0 / 3.0 +
                      p * (11.0 / 72.0 +
                           p * (-43.0 / 540.0 +
                                p * (769.0 / 17280.0 + p * (-221.0 / 8505.0))))));
    } else if (x > 3.0) {
        const double l = std::log(x);
        const double ll = std::log(l);
        w = l - ll + ll / l;
    } else {
        w = std::log1p(x);
    }

    // Halley iteration on f(w) = w*exp(w) - x.
    for (int it = 0; it < 40; ++it) {
        const double ew = std::exp(w);
        const double res = w * ew - x;
        if (std::abs(res) <= 0.5e-12 * std::max(1.0, std::abs(x))) return w;
        const double denom = ew * (w + 1.0) - (w + 2.0) * res / (2.0 * w + 2.0);
        if (denom == 0.0) break;
        w -= res / denom;
        if (w < -1.0) w = -1.0 + 1e-16;
    }
    return w;
}

double monotone_inverse(std::span<const double> xs, std::span<const double> ys,
                        double y) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw ParameterError("monotone_inverse: tables need equal length >= 2");
    if (!(y >= ys.front()) || !(y <= ys.back()))
        throw ParameterError("monotone_inverse: value outside table range");

    const auto it = std::lower_bound(ys.begin(), ys.end(), y);
    const std::size_t j = static_cast<std::size_t>(it - ys.begin());
    if (j == 0) return xs.front();
    const double y0 = ys[j - 1], y1 = ys[j];
    if (y1 == y0) return xs[j - 1];
    return xs[j - 1] + (y - y0) / (y1 - y0) * (xs[j] - xs[j - 1]);
}

double interp_linear(std::span<const double> xs, std::span<const double> ys,
                     double x) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw ParameterError("interp_linear: tables need equal length >= 2");
    if (x <= xs.front()) return ys.front();
    if (x >= xs.back()) return ys.back();
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t j = static_cast<std::size_t>(it - xs.begin());
    const double x0 = xs[j - 1], x1 = xs[j];
    return ys[j - 1] + (x - x0) / (x1 - x0) * (ys[j] - ys[j - 1]);
}

}  // namespace ruinopt

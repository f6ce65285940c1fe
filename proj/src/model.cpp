#include "ruinopt/model.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace ruinopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Ratio of a (mu, sigma) pair with the sigma floor applied: excluded controls
// map to -inf, which the maximizers skip.
double floored_ratio(double mu, double sigma) {
    if (std::isnan(mu) || std::isnan(sigma))
        return std::numeric_limits<double>::quiet_NaN();
    if (!(sigma >= kSigmaFloor)) return -kInf;
    return mu / (sigma * sigma);
}

}  // namespace

CoefficientField CoefficientField::constants(double m_val, double s_val, Interval dom) {
    if (!(s_val > 0)) throw ParameterError("coefficient field requires s > 0");
    CoefficientField f;
    f.m = [m_val](double) { return m_val; };
    f.s = [s_val](double) { return s_val; };
    f.domain = dom;
    f.constant = true;
    f.m0 = m_val;
    f.s0 = s_val;
    return f;
}

CoefficientField CoefficientField::from_functions(std::function<double(double)> m_fn,
                                                  std::function<double(double)> s_fn,
                                                  Interval dom) {
    CoefficientField f;
    f.m = std::move(m_fn);
    f.s = std::move(s_fn);
    f.domain = dom;
    return f;
}

CoefficientField CoefficientField::tabulated(std::vector<double> xs, std::vector<double> ms,
                                             std::vector<double> ss) {
    if (xs.size() < 2 || xs.size() != ms.size() || xs.size() != ss.size())
        throw ParameterError("tabulated field needs >= 2 (x, m, s) triples of equal length");
    for (std::size_t i = 0; i + 1 < xs.size(); ++i)
        if (!(xs[i] < xs[i + 1]))
            throw ParameterError("tabulated field abscissae must be strictly increasing");
    for (double s : ss)
        if (!(s > 0)) throw ParameterError("tabulated field requires s > 0 everywhere");

    auto xs_p = std::make_shared<std::vector<double>>(std::move(xs));
    auto ms_p = std::make_shared<std::vector<double>>(std::move(ms));
    auto ss_p = std::make_shared<std::vector<double>>(std::move(ss));
    CoefficientField f;
    f.domain = Interval(xs_p->front(), xs_p->back());
    f.m = [xs_p, ms_p](double x) { return interp_linear(*xs_p, *ms_p, x); };
    f.s = [xs_p, ss_p](double x) { return interp_linear(*xs_p, *ss_p, x); };
    return f;
}

ControlChoice extremal_choice(const ControlFamily& family, double x, const Tolerance& tol) {
    ControlChoice choice;

    if (const auto* p1 = std::get_if<Parametric1D>(&family.spec)) {
        auto objective = [&](double u) { return floored_ratio(p1->mu(x, u), p1->sigma(x, u)); };
        MaxResult1D r = maximize_1d(objective, p1->u_range, tol);
        choice.ratio = r.value;
        choice.control = r.x;
        choice.mu = p1->mu(x, r.x);
        choice.sigma = p1->sigma(x, r.x);
        return choice;
    }
    if (const auto* p2 = std::get_if<Parametric2D>(&family.spec)) {
        auto objective = [&](double u1, double u2) {
            return floored_ratio(p2->mu(x, u1, u2), p2->sigma(x, u1, u2));
        };
        MaxResult2D r = maximize_2d(objective, p2->range1, p2->range2, tol);
        choice.ratio = r.value;
        choice.control = r.x;
        choice.mu = p2->mu(x, r.x[0], r.x[1]);
        choice.sigma = p2->sigma(x, r.x[0], r.x[1]);
        return choice;
    }

    const auto& regimes = std::get<std::vector<Regime>>(family.spec);
    if (regimes.empty()) throw ParameterError("regime list must be non-empty");
    std::size_t best = regimes.size();
    double best_ratio = -kInf;
    for (std::size_t i = 0; i < regimes.size(); ++i) {
        const double mu = regimes[i].mu(x);
        const double sg = regimes[i].sigma(x);
        const double r = floored_ratio(mu, sg);
        if (std::isnan(r)) {
            std::ostringstream os;
            os << "regime " << i << " returned NaN at x = " << x;
            throw NumericsError(os.str());
        }
        if (r > best_ratio) {
            best_ratio = r;
            best = i;
        }
    }
    if (best == regimes.size() || best_ratio == -kInf)
        throw NumericsError("all regimes excluded (sigma below floor)");
    choice.ratio = best_ratio;
    choice.control = best;
    choice.mu = regimes[best].mu(x);
    choice.sigma = regimes[best].sigma(x);
    return choice;
}

std::vector<std::size_t> extremal_regime_partition(const std::vector<Regime>& regimes,
                                                   std::span<const double> grid) {
    if (regimes.empty()) throw ParameterError("regime list must be non-empty");
    if (grid.empty()) throw ParameterError("partition grid must be non-empty");
    ControlFamily family{std::vector<Regime>(regimes)};
    std::vector<std::size_t> out;
    out.reserve(grid.size());
    for (double x : grid) out.push_back(std::get<std::size_t>(extremal_choice(family, x).control));
    return out;
}

CoefficientField build_extremal_field(const ControlFamily& family, Interval domain,
                                      const Tolerance& tol, std::size_t cache_points) {
    if (!domain.finite()) throw ParameterError("extremal field domain must be finite");
    if (cache_points < 2) throw ParameterError("extremal field cache needs >= 2 points");

    struct Cache {
        ControlFamily family;
        Tolerance tol;
        double lo, step;
        std::vector<double> ms, ss;

        Cache(const ControlFamily& fam, const Tolerance& t, double lo_, double step_)
            : family(fam), tol(t), lo(lo_), step(step_) {}

        double coeff(double x, bool want_m) const {
            const double pos = (x - lo) / step;
            const double idx = std::round(pos);
            if (idx >= 0 && idx < static_cast<double>(ms.size()) &&
                std::abs(pos - idx) * step <= 1e-12 * std::max(1.0, std::abs(x))) {
                const auto i = static_cast<std::size_t>(idx);
                return want_m ? ms[i] : ss[i];
            }
            const ControlChoice c = extremal_choice(family, x, tol);
            return want_m ? c.mu : c.sigma;
        }
    };

    auto cache = std::make_shared<Cache>(family, tol,
                                         domain.lo,
                                         domain.length() / static_cast<double>(cache_points - 1));
    cache->ms.resize(cache_points);
    cache->ss.resize(cache_points);
    for (std::size_t i = 0; i < cache_points; ++i) {
        const double x = domain.lo + cache->step * static_cast<double>(i);
        const ControlChoice c = extremal_choice(family, x, tol);
        cache->ms[i] = c.mu;
        cache->ss[i] = c.sigma;
    }

    CoefficientField f;
    f.domain = domain;
    f.m = [cache](double x) { return cache->coeff(x, true); };
    f.s = [cache](double x) { return cache->coeff(x, false); };
    return f;
}

}  // namespace ruinopt

#include "ruinopt/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "ruinopt/rng.hpp"

namespace ruinopt::mc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

std::uint64_t SimConfig::n_steps() const {
    return static_cast<std::uint64_t>(std::llround(horizon / dt));
}

void SimConfig::validate() const {
    if (!(dt > 0) || !(horizon >= dt)) throw ParameterError("simulation requires dt > 0 and horizon >= dt");
    if (n_paths < 1) throw ParameterError("simulation requires n_paths >= 1");
    if (n_steps() < 1 || n_steps() > (1ULL << 40))
        throw ParameterError("simulation step count out of range");
}

DriftVol DriftVol::from_field(const CoefficientField& f) {
    if (f.constant) return constants(f.m0, f.s0);
    DriftVol d;
    d.mu = f.m;
    d.sigma = f.s;
    return d;
}

DriftVol DriftVol::constants(double mu_val, double sigma_val) {
    DriftVol d;
    d.mu = [mu_val](double) { return mu_val; };
    d.sigma = [sigma_val](double) { return sigma_val; };
    d.constant = true;
    d.mu0 = mu_val;
    d.sigma0 = sigma_val;
    return d;
}

DriftVol apply_policy(const ControlFamily& family, FeedbackPolicy policy) {
    DriftVol d;
    if (const auto* p1 = std::get_if<Parametric1D>(&family.spec)) {
        auto mu = p1->mu;
        auto sg = p1->sigma;
        d.mu = [mu, policy](double x) { return mu(x, std::get<double>(policy(x))); };
        d.sigma = [sg, policy](double x) { return sg(x, std::get<double>(policy(x))); };
        return d;
    }
    if (const auto* p2 = std::get_if<Parametric2D>(&family.spec)) {
        auto mu = p2->mu;
        auto sg = p2->sigma;
        d.mu = [mu, policy](double x) {
            const auto u = std::get<std::array<double, 2>>(policy(x));
            return mu(x, u[0], u[1]);
        };
        d.sigma = [sg, policy](double x) {
            const auto u = std::get<std::array<double, 2>>(policy(x));
            return sg(x, u[0], u[1]);
        };
        return d;
    }
    const auto regimes = std::get<std::vector<Regime>>(family.spec);
    d.mu = [regimes, policy](double x) { return regimes.at(std::get<std::size_t>(policy(x))).mu(x); };
    d.sigma = [regimes, policy](double x) {
        return regimes.at(std::get<std::size_t>(policy(x))).sigma(x);
    };
    return d;
}

namespace {

// Euler-Maruyama walk of a single path. The visitor sees every step as
// (k, x_k, sigma_k, x_{k+1}, qv_k, qv_{k+1}) and may stop the walk early by
// returning false; finish() receives the state where the walk ended.
// Returns false when a coefficient evaluation failed (invalid path).
template <class MuFn, class SgFn, class Visitor>
bool run_path(const MuFn& mu_fn, const SgFn& sg_fn, const SimConfig& cfg,
              std::uint64_t path_index, Visitor& vis) {
    const std::uint64_t n = cfg.n_steps();
    const double dt = cfg.dt;
    const double sqdt = std::sqrt(dt);
    NormalStream normals(CounterRng::for_path(cfg.seed, path_index));

    double x = cfg.x0;
    double qv = 0.0;
    for (std::uint64_t k = 0; k < n; ++k) {
        const double m = mu_fn(x);
        const double s = sg_fn(x);
        if (!std::isfinite(m) || !std::isfinite(s) || !(s > 0)) return false;
        const double z = normals.next(k);
        const double x1 = x + m * dt + s * sqdt * z;
        const double qv1 = qv + s * s * dt;
        const bool go_on = vis.step(k, x, s, x1, qv, qv1);
        x = x1;
        qv = qv1;
        if (!go_on) break;
    }
    const double s_end = sg_fn(x);
    if (!std::isfinite(s_end) || !(s_end > 0)) return false;
    vis.finish(x, s_end);
    return true;
}

template <class Visitor>
bool dispatch_path(const DriftVol& c, const SimConfig& cfg, std::uint64_t path_index,
                   Visitor& vis) {
    try {
        if (c.constant) {
            const double m0 = c.mu0, s0 = c.sigma0;
            auto mu = [m0](double) { return m0; };
            auto sg = [s0](double) { return s0; };
            return run_path(mu, sg, cfg, path_index, vis);
        }
        auto mu = [&c](double x) { return c.mu(x); };
        auto sg = [&c](double x) { return c.sigma(x); };
        return run_path(mu, sg, cfg, path_index, vis);
    } catch (...) {
        return false;
    }
}

struct FullPathVisitor {
    SimulatedPath path;
    double dt;

    FullPathVisitor(const SimConfig& cfg) : dt(cfg.dt) {
        const std::size_t n = static_cast<std::size_t>(cfg.n_steps());
        path.times.reserve(n + 1);
        path.values.reserve(n + 1);
        path.sigmas.reserve(n + 1);
        path.qv.reserve(n + 1);
        path.times.push_back(0.0);
        path.values.push_back(cfg.x0);
        path.qv.push_back(0.0);
    }

    bool step(std::uint64_t k, double, double s, double x1, double, double qv1) {
        path.sigmas.push_back(s);
        path.times.push_back(static_cast<double>(k + 1) * dt);
        path.values.push_back(x1);
        path.qv.push_back(qv1);
        return true;
    }

    void finish(double, double s_end) { path.sigmas.push_back(s_end); }
};

struct SummaryVisitor {
    double barrier, alpha, dt;
    bool bridge, stop_on_ruin;
    CounterRng rng;
    PathSummary out;

    SummaryVisitor(const SimConfig& cfg, std::uint64_t path_index, double barrier_,
                   double alpha_, bool stop_on_ruin_)
        : barrier(barrier_),
          alpha(alpha_),
          dt(cfg.dt),
          bridge(cfg.bridge_correction),
          stop_on_ruin(stop_on_ruin_),
          rng(CounterRng::for_path(cfg.seed, path_index)) {
        out.path = path_index;
        out.terminal = cfg.x0;
        out.run_min = cfg.x0;
        out.run_max = cfg.x0;
        out.ruined = cfg.x0 <= barrier;
        out.drawdown = cfg.x0 <= alpha * cfg.x0;
    }

    bool step(std::uint64_t k, double x, double s, double x1, double, double) {
        if (x1 < out.run_min) out.run_min = x1;
        if (x1 > out.run_max) out.run_max = x1;
        if (!out.ruined) {
            if (x1 <= barrier) {
                out.ruined = true;
            } else if (bridge && x > barrier) {
                const double expo = -2.0 * (x - barrier) * (x1 - barrier) / (s * s * dt);
                if (expo > -40.0 && rng.uniform(4 * k + 2) < std::exp(expo)) out.ruined = true;
            }
        }
        if (!out.drawdown && x1 <= alpha * out.run_max) out.drawdown = true;
        out.terminal = x1;
        return !(stop_on_ruin && out.ruined);
    }

    void finish(double, double) {}
};

// Streams the quadratic-variation time change: the path is resampled at the
// uniform changed-time grid j * dtau as soon as each grid point's bracket is
// known, and the requested functional is folded in on the fly. Interpolation
// matches time_change()/interp_linear bit for bit.
struct ChangedFunctionalVisitor {
    double dtau, dt;
    std::uint64_t j = 1, last_j;
    FunctionalSpec fn;
    double run_max, acc, last_value;

    ChangedFunctionalVisitor(const SimConfig& cfg, const FunctionalSpec& fn_,
                             double changed_horizon, double changed_dt)
        : dtau(changed_dt),
          dt(cfg.dt),
          last_j(static_cast<std::uint64_t>(std::floor(changed_horizon / changed_dt + 1e-9))),
          fn(fn_),
          run_max(cfg.x0),
          acc(kInf),
          last_value(cfg.x0) {
        apply(cfg.x0);
    }

    void apply(double x) {
        last_value = x;
        if (x > run_max) run_max = x;
        switch (fn.kind) {
            case Functional::infimum:
                acc = std::min(acc, x);
                break;
            case Functional::terminal:
                break;
            case Functional::drawdown_margin:
                acc = std::min(acc, x - fn.alpha * run_max);
                break;
        }
    }

    bool step(std::uint64_t k, double x, double, double x1, double qv0, double qv1) {
        while (j <= last_j) {
            const double tau = static_cast<double>(j) * dtau;
            if (!(tau <= qv1)) break;
            const double tk = static_cast<double>(k) * dt;
            const double tk1 = static_cast<double>(k + 1) * dt;
            const double tstar = tk + (tau - qv0) / (qv1 - qv0) * (tk1 - tk);
            const double xj =
                tstar >= tk1 ? x1 : x + (tstar - tk) / (tk1 - tk) * (x1 - x);
            apply(xj);
            ++j;
        }
        return j <= last_j;
    }

    void finish(double, double) {}

    double result() const {
        return fn.kind == Functional::terminal ? last_value : acc;
    }
};

template <class Body>
void parallel_paths(std::uint64_t n, const Body& body) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 64)
#endif
    for (long long i = 0; i < static_cast<long long>(n); ++i)
        body(static_cast<std::uint64_t>(i));
}

template <class Body>
void serial_paths(std::uint64_t n, const Body& body) {
    for (std::uint64_t i = 0; i < n; ++i) body(i);
}

template <class Loop>
Ensemble simulate_impl(const DriftVol& coeffs, const SimConfig& cfg, const Loop& loop) {
    cfg.validate();
    const std::uint64_t n = cfg.n_paths;
    std::vector<SimulatedPath> paths(n);
    std::vector<char> ok(n, 0);

    loop(n, [&](std::uint64_t i) {
        FullPathVisitor vis(cfg);
        if (dispatch_path(coeffs, cfg, i, vis)) {
            paths[i] = std::move(vis.path);
            ok[i] = 1;
        }
    });

    Ensemble e;
    e.cfg = cfg;
    e.paths.reserve(n);
    e.ids.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        if (ok[i]) {
            e.paths.push_back(std::move(paths[i]));
            e.ids.push_back(i);
        } else {
            ++e.n_invalid;
        }
    }
    return e;
}

template <class Loop>
std::vector<PathSummary> summaries_impl(const DriftVol& coeffs, const SimConfig& cfg,
                                        double barrier, double alpha, bool stop_on_ruin,
                                        const Loop& loop) {
    cfg.validate();
    std::vector<PathSummary> out(cfg.n_paths);
    loop(cfg.n_paths, [&](std::uint64_t i) {
        SummaryVisitor vis(cfg, i, barrier, alpha, stop_on_ruin);
        vis.out.valid = dispatch_path(coeffs, cfg, i, vis);
        out[i] = vis.out;
    });
    return out;
}

Estimate fraction_estimate(std::uint64_t hits, std::uint64_t n) {
    Estimate e;
    e.n = n;
    if (n == 0) throw NumericsError("estimator has no valid paths");
    e.prob = static_cast<double>(hits) / static_cast<double>(n);
    e.se = std::sqrt(e.prob * (1.0 - e.prob) / static_cast<double>(n));
    return e;
}

}  // namespace

Ensemble simulate(const DriftVol& coeffs, const SimConfig& cfg) {
    return simulate_impl(coeffs, cfg,
                         [](std::uint64_t n, auto&& body) { parallel_paths(n, body); });
}

Ensemble simulate_serial(const DriftVol& coeffs, const SimConfig& cfg) {
    return simulate_impl(coeffs, cfg,
                         [](std::uint64_t n, auto&& body) { serial_paths(n, body); });
}

Ensemble simulate(const CoefficientField& field, const SimConfig& cfg) {
    return simulate(DriftVol::from_field(field), cfg);
}

Ensemble simulate(const ControlFamily& family, const FeedbackPolicy& policy,
                  const SimConfig& cfg) {
    return simulate(apply_policy(family, policy), cfg);
}

TimeChangedPath time_change(const SimulatedPath& path, std::size_t n_grid) {
    const std::size_t n = path.times.size();
    if (n < 2 || path.values.size() != n || path.qv.size() != n)
        throw ParameterError("time_change: path arrays must have equal length >= 2");
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (!(path.qv[i + 1] > path.qv[i])) {
            std::ostringstream os;
            os << "time_change: quadratic variation is flat at t = " << path.times[i]
               << " (sigma underflow)";
            throw NumericsError(os.str());
        }
    if (n_grid == 0) n_grid = n;
    if (n_grid < 2) throw ParameterError("time_change: grid needs >= 2 points");

    const double qv_end = path.qv.back();
    const double step = qv_end / static_cast<double>(n_grid - 1);
    TimeChangedPath out;
    out.changed_times.resize(n_grid);
    out.values.resize(n_grid);
    for (std::size_t j = 0; j < n_grid; ++j) {
        const double tau = std::min(static_cast<double>(j) * step, qv_end);
        const double tstar = monotone_inverse(path.times, path.qv, tau);
        out.changed_times[j] = tau;
        out.values[j] = interp_linear(path.times, path.values, tstar);
    }
    return out;
}

std::vector<double> realized_qv(const TimeChangedPath& path) {
    std::vector<double> out(path.values.size(), 0.0);
    for (std::size_t i = 1; i < path.values.size(); ++i) {
        const double d = path.values[i] - path.values[i - 1];
        out[i] = out[i - 1] + d * d;
    }
    return out;
}

Estimate empirical_ruin(const Ensemble& ensemble, double barrier) {
    const SimConfig& cfg = ensemble.cfg;
    if (std::isnan(barrier)) throw ParameterError("empirical_ruin: barrier is NaN");

    std::uint64_t crossed = 0;
    for (std::size_t pi = 0; pi < ensemble.paths.size(); ++pi) {
        const SimulatedPath& p = ensemble.paths[pi];
        const CounterRng rng = CounterRng::for_path(cfg.seed, ensemble.ids[pi]);
        bool hit = p.values.front() <= barrier;
        for (std::size_t k = 0; !hit && k + 1 < p.values.size(); ++k) {
            const double x = p.values[k];
            const double x1 = p.values[k + 1];
            if (x1 <= barrier) {
                hit = true;
            } else if (cfg.bridge_correction && x > barrier) {
                const double s = p.sigmas[k];
                const double expo = -2.0 * (x - barrier) * (x1 - barrier) / (s * s * cfg.dt);
                if (expo > -40.0 && rng.uniform(4 * k + 2) < std::exp(expo)) hit = true;
            }
        }
        if (hit) ++crossed;
    }
    return fraction_estimate(crossed, ensemble.paths.size());
}

Estimate empirical_drawdown(const Ensemble& ensemble, double alpha) {
    if (!(alpha >= 0.0) || !(alpha <= 1.0))
        throw std::domain_error("empirical_drawdown: alpha must lie in [0, 1]");
    if (!(ensemble.cfg.x0 >= 0))
        throw ParameterError("empirical_drawdown: requires x0 >= 0");

    std::uint64_t hits = 0;
    for (const SimulatedPath& p : ensemble.paths) {
        double run_max = p.values.front();
        bool hit = p.values.front() <= alpha * run_max;
        for (std::size_t k = 1; !hit && k < p.values.size(); ++k) {
            const double x = p.values[k];
            if (x > run_max) run_max = x;
            if (x <= alpha * run_max) hit = true;
        }
        if (hit) ++hits;
    }
    return fraction_estimate(hits, ensemble.paths.size());
}

std::string FunctionalSpec::name() const {
    switch (kind) {
        case Functional::infimum:
            return "infimum";
        case Functional::terminal:
            return "terminal";
        case Functional::drawdown_margin: {
            char buf[48];
            std::snprintf(buf, sizeof buf, "drawdown_margin(alpha=%g)", alpha);
            return buf;
        }
    }
    return "unknown";
}

double path_functional(const TimeChangedPath& path, const FunctionalSpec& fn) {
    if (path.values.empty()) throw ParameterError("path_functional: empty path");
    switch (fn.kind) {
        case Functional::terminal:
            return path.values.back();
        case Functional::infimum:
            return *std::min_element(path.values.begin(), path.values.end());
        case Functional::drawdown_margin: {
            double run_max = path.values.front();
            double acc = kInf;
            for (double x : path.values) {
                if (x > run_max) run_max = x;
                acc = std::min(acc, x - fn.alpha * run_max);
            }
            return acc;
        }
    }
    throw ParameterError("path_functional: unknown functional");
}

DominanceReport dominance_from_samples(std::vector<double> fa, std::vector<double> fb,
                                       std::string functional_name) {
    if (fa.empty() || fb.empty())
        throw ParameterError("dominance check requires non-empty ensembles");
    std::sort(fa.begin(), fa.end());
    std::sort(fb.begin(), fb.end());
    const double na = static_cast<double>(fa.size());
    const double nb = static_cast<double>(fb.size());

    std::vector<double> pooled;
    pooled.reserve(fa.size() + fb.size());
    pooled.insert(pooled.end(), fa.begin(), fa.end());
    pooled.insert(pooled.end(), fb.begin(), fb.end());
    std::sort(pooled.begin(), pooled.end());
    pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());

    double best_diff = -kInf;
    double best_fa = 0, best_fb = 0;
    std::size_t ia = 0, ib = 0;
    for (double v : pooled) {
        while (ia < fa.size() && fa[ia] <= v) ++ia;
        while (ib < fb.size() && fb[ib] <= v) ++ib;
        const double Fa = static_cast<double>(ia) / na;
        const double Fb = static_cast<double>(ib) / nb;
        if (Fb - Fa > best_diff) {
            best_diff = Fb - Fa;
            best_fa = Fa;
            best_fb = Fb;
        }
    }

    DominanceReport rep;
    rep.functional_name = std::move(functional_name);
    rep.max_violation = std::max(best_diff, 0.0);
    rep.violation_se =
        std::sqrt(best_fa * (1.0 - best_fa) / na + best_fb * (1.0 - best_fb) / nb);
    rep.dominant = rep.max_violation <= 3.0 * rep.violation_se;

    const std::size_t grid_n = std::min<std::size_t>(pooled.size(), 401);
    rep.cdf_grid.resize(grid_n);
    rep.cdf_a.resize(grid_n);
    rep.cdf_b.resize(grid_n);
    for (std::size_t g = 0; g < grid_n; ++g) {
        const double v = pooled[g * (pooled.size() - 1) / std::max<std::size_t>(grid_n - 1, 1)];
        rep.cdf_grid[g] = v;
        rep.cdf_a[g] = static_cast<double>(
                           std::upper_bound(fa.begin(), fa.end(), v) - fa.begin()) / na;
        rep.cdf_b[g] = static_cast<double>(
                           std::upper_bound(fb.begin(), fb.end(), v) - fb.begin()) / nb;
    }
    return rep;
}

DominanceReport dominance_check(std::span<const TimeChangedPath> a,
                                std::span<const TimeChangedPath> b,
                                const FunctionalSpec& fn) {
    std::vector<double> fa, fb;
    fa.reserve(a.size());
    fb.reserve(b.size());
    for (const auto& p : a) fa.push_back(path_functional(p, fn));
    for (const auto& p : b) fb.push_back(path_functional(p, fn));
    return dominance_from_samples(std::move(fa), std::move(fb), fn.name());
}

std::vector<PathSummary> simulate_summaries(const DriftVol& coeffs, const SimConfig& cfg,
                                            double barrier, double alpha) {
    return summaries_impl(coeffs, cfg, barrier, alpha, false,
                          [](std::uint64_t n, auto&& body) { parallel_paths(n, body); });
}

std::vector<PathSummary> simulate_summaries_serial(const DriftVol& coeffs,
                                                   const SimConfig& cfg, double barrier,
                                                   double alpha) {
    return summaries_impl(coeffs, cfg, barrier, alpha, false,
                          [](std::uint64_t n, auto&& body) { serial_paths(n, body); });
}

Estimate empirical_ruin_stream(const DriftVol& coeffs, const SimConfig& cfg,
                               double barrier) {
    const auto sums = summaries_impl(
        coeffs, cfg, barrier, 0.0, true,
        [](std::uint64_t n, auto&& body) { parallel_paths(n, body); });
    std::uint64_t crossed = 0, valid = 0;
    for (const PathSummary& s : sums) {
        if (!s.valid) continue;
        ++valid;
        if (s.ruined) ++crossed;
    }
    return fraction_estimate(crossed, valid);
}

namespace {

template <class Loop>
std::vector<double> changed_functionals_impl(const DriftVol& coeffs, const SimConfig& cfg,
                                             const FunctionalSpec& fn,
                                             double changed_horizon, double changed_dt,
                                             const Loop& loop) {
    cfg.validate();
    if (!(changed_dt > 0) || !(changed_horizon >= changed_dt))
        throw ParameterError("changed_functionals requires changed_dt > 0 and horizon >= dt");
    std::vector<double> out(cfg.n_paths, std::numeric_limits<double>::quiet_NaN());
    loop(cfg.n_paths, [&](std::uint64_t i) {
        ChangedFunctionalVisitor vis(cfg, fn, changed_horizon, changed_dt);
        if (dispatch_path(coeffs, cfg, i, vis)) out[i] = vis.result();
    });
    // Invalid paths are excluded, mirroring simulate().
    std::vector<double> clean;
    clean.reserve(out.size());
    for (double v : out)
        if (!std::isnan(v)) clean.push_back(v);
    return clean;
}

}  // namespace

std::vector<double> changed_functionals(const DriftVol& coeffs, const SimConfig& cfg,
                                        const FunctionalSpec& fn, double changed_horizon,
                                        double changed_dt) {
    return changed_functionals_impl(
        coeffs, cfg, fn, changed_horizon, changed_dt,
        [](std::uint64_t n, auto&& body) { parallel_paths(n, body); });
}

std::vector<double> changed_functionals_serial(const DriftVol& coeffs, const SimConfig& cfg,
                                               const FunctionalSpec& fn,
                                               double changed_horizon, double changed_dt) {
    return changed_functionals_impl(
        coeffs, cfg, fn, changed_horizon, changed_dt,
        [](std::uint64_t n, auto&& body) { serial_paths(n, body); });
}

double median_qv_step(const DriftVol& coeffs, const SimConfig& cfg,
                      std::uint64_t pilot_paths) {
    SimConfig pilot = cfg;
    pilot.n_paths = std::min<std::uint64_t>(std::max<std::uint64_t>(pilot_paths, 1), cfg.n_paths);
    Ensemble e = simulate_serial(coeffs, pilot);
    if (e.paths.empty()) throw NumericsError("median_qv_step: pilot produced no valid paths");
    std::vector<double> steps;
    for (const auto& p : e.paths)
        for (std::size_t k = 1; k < p.qv.size(); ++k) steps.push_back(p.qv[k] - p.qv[k - 1]);
    std::nth_element(steps.begin(), steps.begin() + steps.size() / 2, steps.end());
    return steps[steps.size() / 2];
}

double min_qv_end(const DriftVol& coeffs, const SimConfig& cfg, std::uint64_t pilot_paths) {
    SimConfig pilot = cfg;
    pilot.n_paths = std::min<std::uint64_t>(std::max<std::uint64_t>(pilot_paths, 1), cfg.n_paths);
    Ensemble e = simulate_serial(coeffs, pilot);
    if (e.paths.empty()) throw NumericsError("min_qv_end: pilot produced no valid paths");
    double lo = kInf;
    for (const auto& p : e.paths) lo = std::min(lo, p.qv.back());
    return lo;
}

}  // namespace ruinopt::mc

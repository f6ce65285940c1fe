#pragma once

// Euler-Maruyama simulation of controlled diffusions, the quadratic-variation
// time change, and empirical estimators for ruin, drawdown and stochastic
// dominance.
//
// Every path is a pure function of (seed, path index) through a counter-based
// generator, so ensembles are bit-identical regardless of how many OpenMP
// threads run the loop. Each parallel kernel has a serial twin (suffix
// `_serial`) kept as the reference implementation for tests and benchmarks.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ruinopt/model.hpp"
#include "ruinopt/numerics.hpp"

namespace ruinopt::mc {

struct SimConfig {
    double x0 = 0;
    double horizon = 1;
    double dt = 1e-3;
    std::uint64_t n_paths = 1;
    std::uint64_t seed = 1;
    bool bridge_correction = true;

    std::uint64_t n_steps() const;
    void validate() const;
};

struct SimulatedPath {
    std::vector<double> times;
    std::vector<double> values;
    std::vector<double> sigmas;  // sigma sampled at each step's left endpoint
    std::vector<double> qv;      // cumulative integral of sigma^2
};

struct TimeChangedPath {
    std::vector<double> changed_times;  // uniform grid over [0, qv_end]
    std::vector<double> values;
};

struct Ensemble {
    SimConfig cfg;
    std::vector<SimulatedPath> paths;
    std::vector<std::uint64_t> ids;  // path indices (excluded paths leave gaps)
    std::uint64_t n_invalid = 0;
};

// Drift and volatility along a path; the constant flag enables a cheaper
// simulation kernel.
struct DriftVol {
    std::function<double(double)> mu;
    std::function<double(double)> sigma;
    bool constant = false;
    double mu0 = 0, sigma0 = 0;

    static DriftVol from_field(const CoefficientField& f);
    static DriftVol constants(double mu_val, double sigma_val);
};

// State-feedback policy: maps the current state to an admissible control of
// the family. Combined with a ControlFamily it induces a DriftVol.
using FeedbackPolicy = std::function<ControlValue(double x)>;

DriftVol apply_policy(const ControlFamily& family, FeedbackPolicy policy);

// Full-path ensembles. Memory scales with n_paths * n_steps; the streaming
// estimators below are the tool for large runs.
Ensemble simulate(const DriftVol& coeffs, const SimConfig& cfg);
Ensemble simulate_serial(const DriftVol& coeffs, const SimConfig& cfg);
Ensemble simulate(const CoefficientField& field, const SimConfig& cfg);
Ensemble simulate(const ControlFamily& family, const FeedbackPolicy& policy,
                  const SimConfig& cfg);

// Resamples a path at T(t) = inf{u : qv(u) >= t} for t on a uniform grid of
// n_grid points over [0, qv_end] (n_grid = 0 picks the original point count).
// Requires strictly increasing qv.
TimeChangedPath time_change(const SimulatedPath& path, std::size_t n_grid = 0);

// Cumulative realized quadratic variation sum (dX)^2 of a changed path.
std::vector<double> realized_qv(const TimeChangedPath& path);

struct Estimate {
    double prob = 0;
    double se = 0;  // binomial standard error
    std::uint64_t n = 0;
};

// Fraction of paths whose running minimum reaches the barrier. With
// cfg.bridge_correction set, each step whose endpoints lie above the barrier
// additionally registers a crossing with the Brownian-bridge probability
// exp(-2 (X_k - b)(X_{k+1} - b) / (sigma_k^2 dt)).
Estimate empirical_ruin(const Ensemble& ensemble, double barrier);

// Fraction of paths with X_t <= alpha * max_{s<=t} X_s at some grid time.
// Requires alpha in [0, 1] and x0 >= 0.
Estimate empirical_drawdown(const Ensemble& ensemble, double alpha);

enum class Functional { infimum, terminal, drawdown_margin };

struct FunctionalSpec {
    Functional kind = Functional::infimum;
    double alpha = 0.5;  // used by drawdown_margin
    std::string name() const;
};

// Scalar path functional of a time-changed path: running minimum, terminal
// value, or the running minimum of X - alpha * runmax(X).
double path_functional(const TimeChangedPath& path, const FunctionalSpec& fn);

struct DominanceReport {
    std::string functional_name;
    std::vector<double> cdf_grid;
    std::vector<double> cdf_a;
    std::vector<double> cdf_b;
    double max_violation = 0;
    double violation_se = 0;  // standard error scale at the max-violation point
    bool dominant = false;    // max_violation <= 3 * violation_se
};

// Tests whether ensemble b stochastically dominates ensemble a on the given
// functional: dominance predicts CDF_b <= CDF_a pointwise, and the report's
// max_violation is sup_y (CDF_b(y) - CDF_a(y)).
DominanceReport dominance_check(std::span<const TimeChangedPath> a,
                                std::span<const TimeChangedPath> b,
                                const FunctionalSpec& fn);
DominanceReport dominance_from_samples(std::vector<double> fa, std::vector<double> fb,
                                       std::string functional_name);

// ---- Streaming kernels (no per-step storage) ------------------------------

// Per-path digest produced in one pass: exactly what the columnar ensemble
// export carries.
struct PathSummary {
    std::uint64_t path = 0;
    double terminal = 0;
    double run_min = 0;
    double run_max = 0;
    bool ruined = false;
    bool drawdown = false;
    bool valid = true;
};

std::vector<PathSummary> simulate_summaries(const DriftVol& coeffs, const SimConfig& cfg,
                                            double barrier, double alpha);
std::vector<PathSummary> simulate_summaries_serial(const DriftVol& coeffs,
                                                   const SimConfig& cfg, double barrier,
                                                   double alpha);

// Ruin estimate with per-path early exit once the barrier is hit.
Estimate empirical_ruin_stream(const DriftVol& coeffs, const SimConfig& cfg,
                               double barrier);

// Per-path functional of the time-changed path, resampled on the fly on a
// uniform changed-time grid with spacing `changed_dt` over [0, changed_horizon].
// Matches path_functional(time_change(path)) evaluated on the same grid.
std::vector<double> changed_functionals(const DriftVol& coeffs, const SimConfig& cfg,
                                        const FunctionalSpec& fn, double changed_horizon,
                                        double changed_dt);
std::vector<double> changed_functionals_serial(const DriftVol& coeffs, const SimConfig& cfg,
                                               const FunctionalSpec& fn,
                                               double changed_horizon, double changed_dt);

// Median quadratic-variation step from a deterministic pilot run (used to
// pick the comparison grid spacing for dominance checks).
double median_qv_step(const DriftVol& coeffs, const SimConfig& cfg,
                      std::uint64_t pilot_paths = 16);

// Smallest terminal quadratic variation across a pilot run: the changed-time
// horizon every path of the ensemble reaches.
double min_qv_end(const DriftVol& coeffs, const SimConfig& cfg,
                  std::uint64_t pilot_paths = 16);

}  // namespace ruinopt::mc

#include "ruinopt/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ruinopt/montecarlo.hpp"
#include "ruinopt/ruin.hpp"
#include "ruinopt/spec_io.hpp"

namespace ruinopt::cli {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "ruinopt 0.1.0";
constexpr int kSchemaVersion = 1;

struct Opts {
    std::string spec_text;
    double x0 = 1.0;
    double barrier = 0.0;
    double alpha = 0.5;
    std::uint64_t seed = 12345;
    std::uint64_t paths = 10000;
    double dt = 1e-3;
    double horizon = 10.0;
    std::string functional = "infimum";
    std::string policy = "extremal";
    std::string policy_a = "extremal";
    std::string policy_b = "extremal";
    std::string out_path;
    std::string grid;
    bool no_bridge = false;
    double rel_tol = 1e-9;
};

json base_report(const std::string& command, const ModelSpec& spec, const Opts& o) {
    json rep;
    rep["command"] = command;
    rep["version"] = kVersion;
    rep["schema_version"] = kSchemaVersion;
    rep["seed"] = o.seed;
    rep["inputs"]["spec"] = spec.doc;
    rep["inputs"]["spec_hash"] = spec.hash();
    rep["inputs"]["family"] = family_name(spec.family);
    return rep;
}

mc::FunctionalSpec parse_functional(const std::string& name, double alpha) {
    mc::FunctionalSpec fn;
    fn.alpha = alpha;
    if (name == "infimum") fn.kind = mc::Functional::infimum;
    else if (name == "terminal") fn.kind = mc::Functional::terminal;
    else if (name == "drawdown_margin") fn.kind = mc::Functional::drawdown_margin;
    else throw ParameterError("functional must be infimum, terminal or drawdown_margin");
    return fn;
}

// The memoization window for state-dependent extremal fields; queries past it
// fall back to exact per-point maximization.
std::pair<double, double> field_domain(double barrier, double x0) {
    const double w = std::max(std::abs(x0 - barrier), 1.0);
    return {std::min(barrier, x0) - 4.0 * w, std::max(barrier, x0) + 16.0 * w};
}

void write_ensemble_file(const std::string& path,
                         const std::vector<mc::PathSummary>& sums) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw ParameterError("cannot open export file: " + path);
    std::fputs("path,terminal,run_min,run_max,ruin,drawdown\n", f);
    for (const mc::PathSummary& s : sums) {
        if (!s.valid) continue;
        std::fprintf(f, "%llu,%.17g,%.17g,%.17g,%d,%d\n",
                     static_cast<unsigned long long>(s.path), s.terminal, s.run_min,
                     s.run_max, s.ruined ? 1 : 0, s.drawdown ? 1 : 0);
    }
    std::fclose(f);
}

int cmd_optimal(const Opts& o, std::ostream& out) {
    const ModelSpec spec = load_model_spec(o.spec_text);
    const ExtremalSolution sol = solve_optimal(spec);
    json rep = base_report("optimal", spec, o);
    rep["outputs"] = sol.outputs;
    rep["outputs"]["m"] = sol.m;
    rep["outputs"]["s"] = sol.s;

    // Cross-check against the generic ratio maximizer where a control family
    // exists (everything but the portfolio, whose solver is already generic).
    if (const auto family = control_family(spec)) {
        const ControlChoice choice = extremal_choice(*family, o.x0);
        double resid = 0;
        if (const auto* u = std::get_if<double>(&choice.control))
            resid = std::abs(*u - sol.outputs.value("u_star", *u));
        else if (const auto* uv = std::get_if<std::array<double, 2>>(&choice.control))
            resid = std::max(std::abs((*uv)[0] - sol.outputs.value("A_star", (*uv)[0])),
                             std::abs((*uv)[1] - sol.outputs.value("b_star", (*uv)[1])));
        rep["diagnostics"]["cross_check_residual"] = resid;
        rep["diagnostics"]["cross_check_ratio"] = choice.ratio;
    }
    out << rep.dump(2) << "\n";
    return 0;
}

int cmd_ruin(const Opts& o, std::ostream& out) {
    const ModelSpec spec = load_model_spec(o.spec_text);
    const auto [lo, hi] = field_domain(o.barrier, o.x0);
    RuinQuery q{extremal_field(spec, lo, hi), o.barrier, o.x0};
    Tolerance tol;
    tol.rel_tol = o.rel_tol;

    json rep = base_report("ruin", spec, o);
    rep["inputs"]["x0"] = o.x0;
    rep["inputs"]["barrier"] = o.barrier;
    rep["inputs"]["rel_tol"] = o.rel_tol;
    try {
        const RuinResult r = min_ruin_probability(q, tol);
        rep["outputs"]["ruin_probability"] = r.prob;
        rep["outputs"]["p_x0"] = r.diag.p_x;
        rep["outputs"]["p_upper"] = r.diag.p_upper;
        rep["outputs"]["upper"] = r.diag.upper;
        rep["diagnostics"]["converged"] = r.diag.converged;
        rep["diagnostics"]["tail_estimate"] = r.diag.tail_estimate;
        rep["diagnostics"]["clamped"] = r.diag.clamped;
        if (!r.diag.converged)
            rep["diagnostics"]["note"] =
                "p(upper) kept growing on the doubling horizon: p(inf) diverges and "
                "ruin is certain";
        out << rep.dump(2) << "\n";
        return 0;
    } catch (const NumericsError& e) {
        rep["error"] = e.what();
        out << rep.dump(2) << "\n";
        return 3;
    }
}

int cmd_simulate(const Opts& o, std::ostream& out) {
    const ModelSpec spec = load_model_spec(o.spec_text);
    const auto [lo, hi] = field_domain(o.barrier, o.x0);
    const mc::DriftVol coeffs = policy_coeffs(spec, o.policy, lo, hi);

    mc::SimConfig cfg;
    cfg.x0 = o.x0;
    cfg.horizon = o.horizon;
    cfg.dt = o.dt;
    cfg.n_paths = o.paths;
    cfg.seed = o.seed;
    cfg.bridge_correction = !o.no_bridge;

    const auto sums = mc::simulate_summaries(coeffs, cfg, o.barrier, o.alpha);
    std::uint64_t valid = 0, ruined = 0, drawdown = 0;
    for (const auto& s : sums) {
        if (!s.valid) continue;
        ++valid;
        ruined += s.ruined;
        drawdown += s.drawdown;
    }
    if (valid == 0) throw NumericsError("all paths failed coefficient evaluation");

    const double pr = static_cast<double>(ruined) / static_cast<double>(valid);
    const double pd = static_cast<double>(drawdown) / static_cast<double>(valid);
    const std::string out_path = o.out_path.empty() ? "ensemble.csv" : o.out_path;
    write_ensemble_file(out_path, sums);

    json rep = base_report("simulate", spec, o);
    rep["inputs"]["x0"] = o.x0;
    rep["inputs"]["barrier"] = o.barrier;
    rep["inputs"]["alpha"] = o.alpha;
    rep["inputs"]["policy"] = o.policy;
    rep["inputs"]["paths"] = o.paths;
    rep["inputs"]["dt"] = o.dt;
    rep["inputs"]["horizon"] = o.horizon;
    rep["inputs"]["bridge_correction"] = cfg.bridge_correction;
    rep["outputs"]["empirical_ruin"] = pr;
    rep["outputs"]["empirical_ruin_se"] =
        std::sqrt(pr * (1 - pr) / static_cast<double>(valid));
    rep["outputs"]["empirical_drawdown"] = pd;
    rep["outputs"]["empirical_drawdown_se"] =
        std::sqrt(pd * (1 - pd) / static_cast<double>(valid));
    rep["outputs"]["ensemble_file"] = out_path;
    rep["diagnostics"]["n_valid"] = valid;
    rep["diagnostics"]["n_invalid"] = static_cast<std::uint64_t>(sums.size()) - valid;
    out << rep.dump(2) << "\n";
    return 0;
}

int cmd_dominance(const Opts& o, std::ostream& out) {
    const ModelSpec spec = load_model_spec(o.spec_text);
    const auto [lo, hi] = field_domain(o.barrier, o.x0);
    const mc::DriftVol ca = policy_coeffs(spec, o.policy_a, lo, hi);
    const mc::DriftVol cb = policy_coeffs(spec, o.policy_b, lo, hi);
    const mc::FunctionalSpec fn = parse_functional(o.functional, o.alpha);

    mc::SimConfig cfg;
    cfg.x0 = o.x0;
    cfg.horizon = o.horizon;
    cfg.dt = o.dt;
    cfg.n_paths = o.paths;
    cfg.seed = o.seed;

    // Both ensembles are compared after their own time changes on a common
    // changed-time window, with grid spacing set by the coarser ensemble.
    const double t_changed = std::min(mc::min_qv_end(ca, cfg), mc::min_qv_end(cb, cfg));
    const double dtau = std::max(mc::median_qv_step(ca, cfg), mc::median_qv_step(cb, cfg));
    mc::SimConfig cfg_b = cfg;
    cfg_b.seed = cfg.seed + 0x5DEECE66DULL;  // independent ensemble

    std::vector<double> fa = mc::changed_functionals(ca, cfg, fn, t_changed, dtau);
    std::vector<double> fb = mc::changed_functionals(cb, cfg_b, fn, t_changed, dtau);
    const mc::DominanceReport rep_d =
        mc::dominance_from_samples(std::move(fa), std::move(fb), fn.name());

    json rep = base_report("dominance", spec, o);
    rep["inputs"]["policy_a"] = o.policy_a;
    rep["inputs"]["policy_b"] = o.policy_b;
    rep["inputs"]["functional"] = rep_d.functional_name;
    rep["inputs"]["paths"] = o.paths;
    rep["inputs"]["dt"] = o.dt;
    rep["inputs"]["horizon"] = o.horizon;
    rep["outputs"]["max_violation"] = rep_d.max_violation;
    rep["outputs"]["violation_se"] = rep_d.violation_se;
    rep["outputs"]["dominant"] = rep_d.dominant;
    rep["outputs"]["changed_horizon"] = t_changed;
    rep["outputs"]["changed_dt"] = dtau;

    if (!o.out_path.empty()) {
        std::FILE* f = std::fopen(o.out_path.c_str(), "wb");
        if (!f) throw ParameterError("cannot open export file: " + o.out_path);
        std::fputs("value,cdf_a,cdf_b\n", f);
        for (std::size_t i = 0; i < rep_d.cdf_grid.size(); ++i)
            std::fprintf(f, "%.17g,%.17g,%.17g\n", rep_d.cdf_grid[i], rep_d.cdf_a[i],
                         rep_d.cdf_b[i]);
        std::fclose(f);
        rep["outputs"]["cdf_file"] = o.out_path;
    }
    out << rep.dump(2) << "\n";
    return 0;
}

int cmd_regimes(const Opts& o, std::ostream& out) {
    const ModelSpec spec = load_model_spec(o.spec_text);
    if (spec.family != Family::custom_regimes)
        throw ParameterError("the regimes command needs a custom_regimes spec");

    double lo = 0.0, hi = 1.0;
    std::size_t n = 101;
    bool have_range = false;
    if (!o.grid.empty()) {
        double glo, ghi;
        long gn;
        if (std::sscanf(o.grid.c_str(), "%lf:%lf:%ld", &glo, &ghi, &gn) != 3 || gn < 2 ||
            !(glo < ghi))
            throw ParameterError("--grid must be lo:hi:n with lo < hi and n >= 2");
        lo = glo;
        hi = ghi;
        n = static_cast<std::size_t>(gn);
        have_range = true;
    }
    if (!have_range) {
        for (const auto& t : spec.regimes) {
            if (t.is_constant) continue;
            lo = have_range ? std::min(lo, t.xs.front()) : t.xs.front();
            hi = have_range ? std::max(hi, t.xs.back()) : t.xs.back();
            have_range = true;
        }
    }

    std::vector<Regime> regimes;
    for (const auto& t : spec.regimes) regimes.push_back(t.to_regime());
    std::vector<double> grid(n);
    for (std::size_t i = 0; i < n; ++i)
        grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    const std::vector<std::size_t> part = extremal_regime_partition(regimes, grid);

    json rep = base_report("regimes", spec, o);
    rep["inputs"]["grid"] = {{"lo", lo}, {"hi", hi}, {"n", n}};
    rep["outputs"]["x"] = grid;
    rep["outputs"]["regime"] = part;
    json boundaries = json::array();
    for (std::size_t i = 1; i < part.size(); ++i)
        if (part[i] != part[i - 1])
            boundaries.push_back({{"x_lo", grid[i - 1]},
                                  {"x_hi", grid[i]},
                                  {"from", part[i - 1]},
                                  {"to", part[i]}});
    rep["outputs"]["boundaries"] = boundaries;
    out << rep.dump(2) << "\n";
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"ruin-minimizing controls for one-dimensional controlled diffusions"};
    app.name("ruinopt");
    app.require_subcommand(1);

    Opts o;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--spec", o.spec_text,
                        "model spec: path to a JSON file or inline JSON")
            ->required();
        cmd->add_option("--seed", o.seed, "random seed");
    };

    CLI::App* c_optimal = app.add_subcommand("optimal", "closed-form optimal controls");
    add_common(c_optimal);

    CLI::App* c_ruin = app.add_subcommand("ruin", "minimal ruin probability via the scale function");
    add_common(c_ruin);
    c_ruin->add_option("--x0", o.x0, "initial state");
    c_ruin->add_option("--barrier", o.barrier, "ruin barrier");
    c_ruin->add_option("--rel-tol", o.rel_tol, "truncation stopping tolerance");

    CLI::App* c_sim = app.add_subcommand("simulate", "Monte Carlo ruin/drawdown estimates + ensemble export");
    add_common(c_sim);
    c_sim->add_option("--x0", o.x0, "initial state");
    c_sim->add_option("--barrier", o.barrier, "ruin barrier");
    c_sim->add_option("--alpha", o.alpha, "drawdown fraction");
    c_sim->add_option("--paths", o.paths, "number of paths");
    c_sim->add_option("--dt", o.dt, "time step");
    c_sim->add_option("--horizon", o.horizon, "simulation horizon");
    c_sim->add_option("--policy", o.policy, "control policy: extremal or a constant control");
    c_sim->add_option("--out", o.out_path, "ensemble export file (default ensemble.csv)");
    c_sim->add_flag("--no-bridge", o.no_bridge, "disable the bridge crossing correction");

    CLI::App* c_dom = app.add_subcommand("dominance", "stochastic dominance check of two policies");
    add_common(c_dom);
    c_dom->add_option("--x0", o.x0, "initial state");
    c_dom->add_option("--alpha", o.alpha, "drawdown fraction for drawdown_margin");
    c_dom->add_option("--paths", o.paths, "number of paths per ensemble");
    c_dom->add_option("--dt", o.dt, "time step");
    c_dom->add_option("--horizon", o.horizon, "simulation horizon");
    c_dom->add_option("--functional", o.functional, "infimum, terminal or drawdown_margin");
    c_dom->add_option("--policy-a", o.policy_a, "policy of the reference ensemble");
    c_dom->add_option("--policy-b", o.policy_b, "policy of the claimed-dominant ensemble");
    c_dom->add_option("--out", o.out_path, "CDF export file");

    CLI::App* c_reg = app.add_subcommand("regimes", "extremal regime partition of a switching spec");
    add_common(c_reg);
    c_reg->add_option("--grid", o.grid, "evaluation grid lo:hi:n");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help() << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (c_optimal->parsed()) return cmd_optimal(o, out);
        if (c_ruin->parsed()) return cmd_ruin(o, out);
        if (c_sim->parsed()) return cmd_simulate(o, out);
        if (c_dom->parsed()) return cmd_dominance(o, out);
        if (c_reg->parsed()) return cmd_regimes(o, out);
        err << "error: no subcommand selected\n";
        return 2;
    } catch (const ConvergenceError& e) {
        json rep;
        rep["error"] = e.what();
        rep["partial"] = e.partial();
        out << rep.dump(2) << "\n";
        err << "error: " << e.what() << "\n";
        return 3;
    } catch (const NumericsError& e) {
        json rep;
        rep["error"] = e.what();
        out << rep.dump(2) << "\n";
        err << "error: " << e.what() << "\n";
        return 3;
    } catch (const ParameterError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        err << "error: invalid spec document: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace ruinopt::cli

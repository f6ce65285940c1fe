#include "ruinopt/spec_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace ruinopt::cli {

using nlohmann::json;

namespace {

double require_number(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key))
        throw ParameterError(where + "." + key + " is required");
    if (!j.at(key).is_number())
        throw ParameterError(where + "." + key + " must be a number");
    return j.at(key).get<double>();
}

std::vector<double> number_array(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty()) throw ParameterError(field + " must be a non-empty array");
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& v : j) {
        if (!v.is_number()) throw ParameterError(field + " must contain numbers only");
        out.push_back(v.get<double>());
    }
    return out;
}

}  // namespace

std::string family_name(Family f) {
    switch (f) {
        case Family::prop_reinsurance: return "prop_reinsurance";
        case Family::xl_exponential: return "xl_exponential";
        case Family::investment: return "investment";
        case Family::combined: return "combined";
        case Family::portfolio: return "portfolio";
        case Family::custom_regimes: return "custom_regimes";
        case Family::custom_tabulated: return "custom_tabulated";
    }
    return "unknown";
}

Regime RegimeTable::to_regime() const {
    if (is_constant) {
        const double m = mu0, s = sigma0;
        return {[m](double) { return m; }, [s](double) { return s; }};
    }
    auto xs_p = std::make_shared<std::vector<double>>(xs);
    auto mu_p = std::make_shared<std::vector<double>>(mus);
    auto sg_p = std::make_shared<std::vector<double>>(sigmas);
    return {[xs_p, mu_p](double x) { return interp_linear(*xs_p, *mu_p, x); },
            [xs_p, sg_p](double x) { return interp_linear(*xs_p, *sg_p, x); }};
}

std::string ModelSpec::hash() const {
    const std::string dump = doc.dump();
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ModelSpec parse_model_spec(const json& j) {
    if (!j.is_object()) throw ParameterError("spec must be a JSON object");
    if (!j.contains("family") || !j.at("family").is_string())
        throw ParameterError("spec.family is required and must be a string");

    ModelSpec spec;
    spec.doc = j;
    const std::string fam = j.at("family").get<std::string>();

    const json params = j.value("params", json::object());

    if (fam == "prop_reinsurance") {
        spec.family = Family::prop_reinsurance;
        spec.prop = {require_number(params, "theta", "params"),
                     require_number(params, "eta", "params"),
                     require_number(params, "sigma", "params")};
        spec.prop.validate();
    } else if (fam == "xl_exponential") {
        spec.family = Family::xl_exponential;
        spec.xl = {require_number(params, "theta", "params"),
                   require_number(params, "eta", "params"),
                   require_number(params, "lambda", "params")};
        spec.xl.validate();
        const std::string variant = j.value("variant", "exact_moments");
        if (variant == "exact_moments") spec.xl_variant = XlVariant::exact_moments;
        else if (variant == "paper_text") spec.xl_variant = XlVariant::paper_text;
        else throw ParameterError("spec.variant must be exact_moments or paper_text");
    } else if (fam == "investment") {
        spec.family = Family::investment;
        spec.inv = {require_number(params, "eta", "params"),
                    require_number(params, "m", "params"),
                    require_number(params, "sigma_s", "params"),
                    require_number(params, "sigma_i", "params")};
        spec.inv.validate();
    } else if (fam == "combined") {
        spec.family = Family::combined;
        spec.comb = {require_number(params, "theta", "params"),
                     require_number(params, "eta", "params"),
                     require_number(params, "m", "params"),
                     require_number(params, "sigma_s", "params"),
                     require_number(params, "sigma_i", "params")};
        spec.comb.validate();
    } else if (fam == "portfolio") {
        spec.family = Family::portfolio;
        if (!j.contains("mu")) throw ParameterError("spec.mu is required for portfolio");
        spec.port.mu = number_array(j.at("mu"), "spec.mu");
        if (!j.contains("a") || !j.at("a").is_array())
            throw ParameterError("spec.a (covariance rows) is required for portfolio");
        for (const auto& row : j.at("a")) spec.port.a.push_back(number_array(row, "spec.a row"));
        spec.port.validate();
    } else if (fam == "custom_regimes") {
        spec.family = Family::custom_regimes;
        if (!j.contains("regimes") || !j.at("regimes").is_array() || j.at("regimes").empty())
            throw ParameterError("spec.regimes must be a non-empty array");
        for (std::size_t i = 0; i < j.at("regimes").size(); ++i) {
            const json& r = j.at("regimes").at(i);
            std::ostringstream where;
            where << "spec.regimes[" << i << "]";
            RegimeTable t;
            if (r.contains("x")) {
                t.xs = number_array(r.at("x"), where.str() + ".x");
                t.mus = number_array(r.at("mu"), where.str() + ".mu");
                t.sigmas = number_array(r.at("sigma"), where.str() + ".sigma");
                if (t.xs.size() != t.mus.size() || t.xs.size() != t.sigmas.size() ||
                    t.xs.size() < 2)
                    throw ParameterError(where.str() + " tables need equal lengths >= 2");
                for (std::size_t k = 0; k + 1 < t.xs.size(); ++k)
                    if (!(t.xs[k] < t.xs[k + 1]))
                        throw ParameterError(where.str() + ".x must be strictly increasing");
                for (double s : t.sigmas)
                    if (!(s > 0)) throw ParameterError(where.str() + ".sigma must be > 0");
            } else {
                t.is_constant = true;
                t.mu0 = require_number(r, "mu", where.str());
                t.sigma0 = require_number(r, "sigma", where.str());
                if (!(t.sigma0 > 0)) throw ParameterError(where.str() + ".sigma must be > 0");
            }
            spec.regimes.push_back(std::move(t));
        }
    } else if (fam == "custom_tabulated") {
        spec.family = Family::custom_tabulated;
        if (!j.contains("points") || !j.at("points").is_array() || j.at("points").size() < 2)
            throw ParameterError("spec.points must be an array of >= 2 [x, m, s] triples");
        for (const auto& p : j.at("points")) {
            const auto triple = number_array(p, "spec.points entry");
            if (triple.size() != 3)
                throw ParameterError("spec.points entries must be [x, m, s] triples");
            spec.tabulated.push_back({triple[0], triple[1], triple[2]});
        }
        for (std::size_t k = 0; k + 1 < spec.tabulated.size(); ++k)
            if (!(spec.tabulated[k][0] < spec.tabulated[k + 1][0]))
                throw ParameterError("spec.points x values must be strictly increasing");
        for (const auto& t : spec.tabulated)
            if (!(t[2] > 0)) throw ParameterError("spec.points s values must be > 0");
    } else {
        throw ParameterError("spec.family '" + fam + "' is not recognized");
    }
    return spec;
}

ModelSpec load_model_spec(const std::string& path_or_inline) {
    json j;
    const auto first = path_or_inline.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && path_or_inline[first] == '{') {
        j = json::parse(path_or_inline);
    } else {
        std::ifstream in(path_or_inline);
        if (!in) throw ParameterError("cannot open spec file: " + path_or_inline);
        in >> j;
    }
    return parse_model_spec(j);
}

ExtremalSolution solve_optimal(const ModelSpec& spec) {
    ExtremalSolution sol;
    switch (spec.family) {
        case Family::prop_reinsurance: {
            const double u = prop_reinsurance_optimal(spec.prop);
            sol.m = u * spec.prop.theta - (spec.prop.theta - spec.prop.eta);
            sol.s = u * spec.prop.sigma;
            sol.outputs["u_star"] = u;
            sol.outputs["ratio"] = sol.m / (sol.s * sol.s);
            break;
        }
        case Family::xl_exponential: {
            const double u = xl_exponential_optimal(spec.xl, spec.xl_variant);
            const auto& fam = std::get<Parametric1D>(control_family(spec)->spec);
            sol.m = fam.mu(0.0, u);
            sol.s = fam.sigma(0.0, u);
            sol.outputs["u_star"] = u;
            sol.outputs["ratio"] = sol.m / (sol.s * sol.s);
            sol.outputs["variant"] =
                spec.xl_variant == XlVariant::exact_moments ? "exact_moments" : "paper_text";
            break;
        }
        case Family::investment: {
            const double u = investment_optimal(spec.inv);
            sol.m = spec.inv.eta + u * spec.inv.m;
            sol.s = std::sqrt(spec.inv.sigma_s * spec.inv.sigma_s +
                              spec.inv.sigma_i * spec.inv.sigma_i * u * u);
            sol.outputs["u_star"] = u;
            sol.outputs["ratio"] = sol.m / (sol.s * sol.s);
            break;
        }
        case Family::combined: {
            const auto [a_star, b_star] = combined_optimal(spec.comb);
            sol.m = b_star * spec.comb.theta - (spec.comb.theta - spec.comb.eta) +
                    spec.comb.m * a_star;
            sol.s = std::sqrt(spec.comb.sigma_s * spec.comb.sigma_s * b_star * b_star +
                              spec.comb.sigma_i * spec.comb.sigma_i * a_star * a_star);
            sol.outputs["A_star"] = a_star;
            sol.outputs["b_star"] = b_star;
            sol.outputs["ratio"] = sol.m / (sol.s * sol.s);
            break;
        }
        case Family::portfolio: {
            const std::vector<double> pi = portfolio_optimal(spec.port);
            const double ratio = portfolio_ratio(spec.port, pi);
            double quad = 0;
            for (std::size_t i = 0; i < pi.size(); ++i)
                for (std::size_t k = 0; k < pi.size(); ++k)
                    quad += pi[i] * spec.port.a[i][k] * pi[k];
            double drift = 0;
            for (std::size_t i = 0; i < pi.size(); ++i) drift += pi[i] * spec.port.mu[i];
            // Log-wealth coefficients of the fully invested portfolio.
            sol.m = drift - 0.5 * quad;
            sol.s = std::sqrt(quad);
            sol.outputs["pi"] = pi;
            sol.outputs["ratio"] = ratio;
            sol.outputs["log_wealth_drift"] = sol.m;
            sol.outputs["log_wealth_vol"] = sol.s;
            break;
        }
        default:
            throw ParameterError("optimal controls require a closed-form family spec");
    }
    return sol;
}

CoefficientField extremal_field(const ModelSpec& spec, double domain_lo, double domain_hi) {
    if (spec.family == Family::custom_tabulated) {
        std::vector<double> xs, ms, ss;
        for (const auto& t : spec.tabulated) {
            xs.push_back(t[0]);
            ms.push_back(t[1]);
            ss.push_back(t[2]);
        }
        return CoefficientField::tabulated(std::move(xs), std::move(ms), std::move(ss));
    }
    if (spec.family == Family::custom_regimes) {
        std::vector<Regime> regimes;
        for (const auto& t : spec.regimes) regimes.push_back(t.to_regime());
        return build_extremal_field(ControlFamily{std::move(regimes)},
                                    Interval(domain_lo, domain_hi));
    }
    const ExtremalSolution sol = solve_optimal(spec);
    return CoefficientField::constants(sol.m, sol.s, Interval(domain_lo, domain_hi));
}

std::optional<ControlFamily> control_family(const ModelSpec& spec) {
    switch (spec.family) {
        case Family::prop_reinsurance:
            return prop_reinsurance_family(spec.prop);
        case Family::xl_exponential:
            return xl_family(spec.xl, spec.xl_variant);
        case Family::investment:
            return investment_family(spec.inv);
        case Family::combined:
            return combined_family(spec.comb);
        case Family::custom_regimes: {
            std::vector<Regime> regimes;
            for (const auto& t : spec.regimes) regimes.push_back(t.to_regime());
            return ControlFamily{std::move(regimes)};
        }
        default:
            return std::nullopt;
    }
}

namespace {

std::vector<double> parse_numbers(const std::string& text) {
    std::vector<double> out;
    std::string cleaned;
    for (char c : text)
        cleaned += (c == ',' || c == '=' ? ' ' : c);
    std::istringstream is(cleaned);
    std::string tok;
    while (is >> tok) {
        try {
            std::size_t used = 0;
            const double v = std::stod(tok, &used);
            if (used == tok.size()) out.push_back(v);
        } catch (...) {
            // non-numeric tokens ("u", "A", "b", "regime") are labels
        }
    }
    return out;
}

}  // namespace

mc::DriftVol policy_coeffs(const ModelSpec& spec, const std::string& policy,
                           double domain_lo, double domain_hi) {
    if (policy.empty() || policy == "extremal")
        return mc::DriftVol::from_field(extremal_field(spec, domain_lo, domain_hi));

    const std::vector<double> vals = parse_numbers(policy);
    const auto family = control_family(spec);
    if (!family)
        throw ParameterError("policy overrides are not available for family " +
                             family_name(spec.family));

    if (const auto* p1 = std::get_if<Parametric1D>(&family->spec)) {
        if (vals.size() != 1)
            throw ParameterError("policy for a 1-D control family needs one value, got '" +
                                 policy + "'");
        const double u = vals[0];
        if (u < p1->u_range.lo || u > p1->u_range.hi)
            throw ParameterError("policy control outside the admissible range");
        const double m = p1->mu(0.0, u);
        const double s = p1->sigma(0.0, u);
        if (!(s > 0)) throw ParameterError("policy control has sigma <= 0");
        return mc::DriftVol::constants(m, s);
    }
    if (const auto* p2 = std::get_if<Parametric2D>(&family->spec)) {
        if (vals.size() != 2)
            throw ParameterError("policy for a 2-D control family needs two values, got '" +
                                 policy + "'");
        const double m = p2->mu(0.0, vals[0], vals[1]);
        const double s = p2->sigma(0.0, vals[0], vals[1]);
        if (!(s > 0)) throw ParameterError("policy control has sigma <= 0");
        return mc::DriftVol::constants(m, s);
    }

    const auto& regimes = std::get<std::vector<Regime>>(family->spec);
    if (vals.size() != 1 || vals[0] < 0 || vals[0] != std::floor(vals[0]) ||
        static_cast<std::size_t>(vals[0]) >= regimes.size())
        throw ParameterError("policy for a regime family must be a valid regime index");
    const std::size_t idx = static_cast<std::size_t>(vals[0]);
    mc::DriftVol d;
    d.mu = regimes[idx].mu;
    d.sigma = regimes[idx].sigma;
    return d;
}

}  // namespace ruinopt::cli

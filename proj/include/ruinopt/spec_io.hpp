#pragma once

// Model specification documents: a JSON object naming one of the built-in
// control families (or a custom regime/table spec) with its numeric
// parameters. This is the CLI's input surface.

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ruinopt/closed_forms.hpp"
#include "ruinopt/model.hpp"
#include "ruinopt/montecarlo.hpp"

namespace ruinopt::cli {

enum class Family {
    prop_reinsurance,
    xl_exponential,
    investment,
    combined,
    portfolio,
    custom_regimes,
    custom_tabulated,
};

std::string family_name(Family f);

struct RegimeTable {
    bool is_constant = false;
    double mu0 = 0, sigma0 = 0;
    std::vector<double> xs, mus, sigmas;

    Regime to_regime() const;
};

struct ModelSpec {
    Family family = Family::prop_reinsurance;
    nlohmann::json doc;  // parsed document, echoed into reports

    PropReinsuranceParams prop{};
    XlParams xl{};
    XlVariant xl_variant = XlVariant::exact_moments;
    InvestmentParams inv{};
    CombinedParams comb{};
    PortfolioParams port{};

    std::vector<std::array<double, 3>> tabulated;  // (x, m, s) triples
    std::vector<RegimeTable> regimes;

    bool closed_form() const { return family != Family::custom_regimes && family != Family::custom_tabulated; }
    std::string hash() const;  // FNV-1a of the canonical dump
};

// Parses and validates a spec document; error messages name the offending
// field. `load` accepts either a file path or an inline JSON string (anything
// starting with '{').
ModelSpec parse_model_spec(const nlohmann::json& j);
ModelSpec load_model_spec(const std::string& path_or_inline);

// Extremal coefficients at the optimum plus the solved controls, for the
// closed-form families.
struct ExtremalSolution {
    nlohmann::json outputs;  // family-specific control values and achieved ratio
    double m = 0;
    double s = 1;
};
ExtremalSolution solve_optimal(const ModelSpec& spec);

// Extremal coefficient field for any family. Custom regimes are maximized
// over [domain_lo, domain_hi]; built-in families are state-independent.
CoefficientField extremal_field(const ModelSpec& spec, double domain_lo, double domain_hi);

// Generic control family for cross-checks and policy simulation; empty for
// portfolio and tabulated specs.
std::optional<ControlFamily> control_family(const ModelSpec& spec);

// Drift/volatility for a policy string: "extremal", a constant control
// ("0.3", "u=0.3", "A=0.2,b=0.8", "0.2,0.8"), or a regime index
// ("regime=1"). The domain bounds are used when the extremal field of a
// custom regime spec has to be built.
mc::DriftVol policy_coeffs(const ModelSpec& spec, const std::string& policy,
                           double domain_lo, double domain_hi);

}  // namespace ruinopt::cli

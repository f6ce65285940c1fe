#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "ruinopt/closed_forms.hpp"
#include "ruinopt/model.hpp"

using namespace ruinopt;

TEST_CASE("prop_reinsurance_optimal: formula cases") {
    CHECK(prop_reinsurance_optimal({2.0, 1.0, 1.0}) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(prop_reinsurance_optimal({4.0, 3.0, 1.0}) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(prop_reinsurance_optimal({1.5, 1.4, 2.0}) ==
          doctest::Approx(2.0 / 15.0).epsilon(1e-13));
    CHECK_THROWS_AS(prop_reinsurance_optimal({1.0, 1.5, 1.0}), ParameterError);
}

TEST_CASE("prop_reinsurance_optimal: independent of the diffusion scale") {
    for (double sigma : {0.2, 1.0, 7.5})
        CHECK(prop_reinsurance_optimal({3.0, 2.0, sigma}) ==
              doctest::Approx(2.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("xl_exponential_objective: value at u=1 for theta=2, eta=lambda=1") {
    // (1 - 2/e) / (2 - 4/e); numerator and denominator share the factor
    // (1 - 2/e), so the printed expression evaluates to exactly 1/2.
    const XlParams p{2.0, 1.0, 1.0};
    const double expected = (1.0 - 2.0 * std::exp(-1.0)) / (2.0 - 4.0 * std::exp(-1.0));
    CHECK(expected == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(xl_exponential_objective(1.0, p, XlVariant::paper_text) ==
          doctest::Approx(expected).epsilon(1e-14));
    CHECK(xl_exponential_objective(1.0, p, XlVariant::exact_moments) ==
          doctest::Approx(expected).epsilon(1e-14));
    CHECK_THROWS_AS(xl_exponential_objective(0.0, p), std::domain_error);
}

TEST_CASE("xl_exponential_objective: variants coincide at lambda = 1") {
    const XlParams p{2.7, 1.3, 1.0};
    std::mt19937 gen(17);
    std::uniform_real_distribution<double> us(1e-3, 30.0);
    for (int i = 0; i < 100; ++i) {
        const double u = us(gen);
        CHECK(xl_exponential_objective(u, p, XlVariant::paper_text) ==
              doctest::Approx(xl_exponential_objective(u, p, XlVariant::exact_moments))
                  .epsilon(1e-13));
    }
}

TEST_CASE("xl_exponential_objective: large-u limit of the exact-moments variant") {
    // numerator -> eta/lambda, denominator -> 2.
    for (const XlParams p : {XlParams{2.0, 1.0, 1.0}, XlParams{3.0, 1.4, 2.0}}) {
        const double limit = p.eta / (2.0 * p.lambda);
        CHECK(xl_exponential_objective(50.0 / p.lambda, p, XlVariant::exact_moments) ==
              doctest::Approx(limit).epsilon(1e-10));
    }
}

TEST_CASE("xl_exponential_optimal: Lambert W solution at theta=2, eta=lambda=1") {
    const XlParams p{2.0, 1.0, 1.0};
    const double closed = 2.0 + lambert_w0(-2.0 * std::exp(-2.0));
    CHECK(closed == doctest::Approx(1.59362).epsilon(1e-4));
    CHECK(std::abs(xl_exponential_optimal(p, XlVariant::exact_moments) - closed) < 1e-6);
    CHECK(std::abs(xl_exponential_optimal(p, XlVariant::paper_text) - closed) < 1e-6);
}

TEST_CASE("xl_exponential_optimal: Lambert form holds for general theta/eta") {
    // Stationarity of the exact-moments ratio reduces to (1 - e^-v)/v = eta/theta,
    // i.e. v* = theta/eta + W0(-(theta/eta) e^{-theta/eta}), u* = v*/lambda.
    std::mt19937 gen(23);
    std::uniform_real_distribution<double> thetas(1.2, 4.0), fracs(0.3, 0.9),
        lambdas(0.4, 2.5);
    for (int i = 0; i < 25; ++i) {
        const double theta = thetas(gen);
        const double eta = fracs(gen) * theta;
        const double lambda = lambdas(gen);
        const XlParams p{theta, eta, lambda};
        const double r = theta / eta;
        const double v = r + lambert_w0(-r * std::exp(-r));
        CHECK(xl_exponential_optimal(p, XlVariant::exact_moments) ==
              doctest::Approx(v / lambda).epsilon(1e-6));
    }
}

TEST_CASE("xl_exponential_optimal: printed variant without an interior maximum errors") {
    // At lambda > 1 the printed denominator's extra term can push the
    // supremum out to u = inf; the solver must refuse rather than return the
    // interior bump it passes on the way.
    const XlParams p{2.17213, 1.02861, 1.4795};
    CHECK_THROWS_AS(xl_exponential_optimal(p, XlVariant::paper_text), ConvergenceError);
    CHECK(std::isfinite(xl_exponential_optimal(p, XlVariant::exact_moments)));
}

TEST_CASE("xl_exponential_optimal: rate scaling moves the optimum as u*/c") {
    const XlParams base{2.4, 1.1, 1.0};
    const XlParams scaled{2.4, 1.1, 2.0};
    const double u1 = xl_exponential_optimal(base, XlVariant::exact_moments);
    const double u2 = xl_exponential_optimal(scaled, XlVariant::exact_moments);
    CHECK(u2 == doctest::Approx(u1 / 2.0).epsilon(1e-7));
}

TEST_CASE("investment_optimal: formula cases") {
    CHECK(investment_optimal({0.0, 1.0, 2.0, 1.0}) == doctest::Approx(2.0).epsilon(1e-13));
    CHECK(investment_optimal({1.0, 1.0, 1.0, 1.0}) ==
          doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-13));
    CHECK_THROWS_AS(investment_optimal({1.0, 0.0, 1.0, 1.0}), ParameterError);
}

TEST_CASE("investment_optimal: matches the generic 1-D maximizer") {
    std::mt19937 gen(31);
    std::uniform_real_distribution<double> etas(0.0, 2.0), ms(0.3, 2.0), sg(0.3, 2.0);
    for (int i = 0; i < 20; ++i) {
        InvestmentParams p{etas(gen), ms(gen) * (i % 2 ? 1.0 : -1.0), sg(gen), sg(gen)};
        const double u_closed = investment_optimal(p);
        auto ratio = [&](double u) {
            return (p.eta + u * p.m) / (p.sigma_s * p.sigma_s + p.sigma_i * p.sigma_i * u * u);
        };
        const double span = 2.0 * p.sigma_s / p.sigma_i + 1.0;
        const auto r = maximize_1d(ratio, Interval(-span, span));
        CHECK(u_closed == doctest::Approx(r.x).epsilon(1e-6));
    }
}

TEST_CASE("combined_optimal: formula case and boundary") {
    const auto [a_star, b_star] = combined_optimal({2.0, 1.0, 1.0, 1.0, 1.0});
    CHECK(a_star == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(b_star == doctest::Approx(0.8).epsilon(1e-14));

    // On the boundary theta = eta + sqrt(eta^2 + m^2 sigma_s^2 / sigma_i^2)
    // the cap binds exactly: b* = 1.
    CombinedParams boundary{1.0 + std::sqrt(2.0), 1.0, 1.0, 1.0, 1.0};
    const auto [ab, bb] = combined_optimal(boundary);
    CHECK(std::abs(bb - 1.0) <= 4e-15);
    CHECK(ab > 0);

    CombinedParams beyond = boundary;
    beyond.theta = boundary.theta + 1e-6;
    CHECK_THROWS_AS(combined_optimal(beyond), ParameterError);
}

TEST_CASE("combined_optimal: b* never exceeds one on random draws") {
    std::mt19937 gen(37);
    std::uniform_real_distribution<double> etas(0.3, 2.0), ms(0.3, 2.0), sg(0.4, 2.0),
        frac(0.05, 0.95);
    for (int i = 0; i < 50; ++i) {
        CombinedParams p{0, etas(gen), ms(gen), sg(gen), sg(gen)};
        p.theta = p.eta + frac(gen) * (p.theta_upper() - p.eta);
        const auto [a_star, b_star] = combined_optimal(p);
        CHECK(b_star <= 1.0);
        CHECK(std::isfinite(a_star));
    }
}

TEST_CASE("combined_optimal: matches the generic 2-D maximizer") {
    const CombinedParams p{2.0, 1.0, 1.0, 1.0, 1.0};
    const auto [a_star, b_star] = combined_optimal(p);
    auto ratio = [&](double a, double b) {
        const double den = p.sigma_s * p.sigma_s * b * b + p.sigma_i * p.sigma_i * a * a;
        if (den < 1e-16) return -std::numeric_limits<double>::infinity();
        return (b * p.theta - (p.theta - p.eta) + p.m * a) / den;
    };
    Tolerance tol;
    tol.abs_tol = 1e-11;
    const auto r = maximize_2d(ratio, Interval(-10.0 * a_star, 10.0 * a_star),
                               Interval(0.0, 1.0), tol, 96);
    CHECK(a_star == doctest::Approx(r.x[0]).epsilon(1e-4));
    CHECK(b_star == doctest::Approx(r.x[1]).epsilon(1e-4));
}

TEST_CASE("portfolio_optimal: forced and symmetric cases") {
    PortfolioParams one{{0.7}, {{2.0}}};
    CHECK(portfolio_optimal(one) == std::vector<double>{1.0});

    PortfolioParams sym{{1.0, 1.0}, {{1.0, 0.0}, {0.0, 1.0}}};
    const auto pi = portfolio_optimal(sym);
    CHECK(pi[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(pi[1] == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("portfolio_optimal: n=2 against a dense grid oracle") {
    PortfolioParams p{{2.0, 1.0}, {{1.0, 0.0}, {0.0, 1.0}}};
    const auto pi = portfolio_optimal(p);

    // Brute force over pi1 with pi2 = 1 - pi1.
    const int n = 10000000;
    double best = -std::numeric_limits<double>::infinity(), best_p1 = 0;
    for (int i = 0; i < n; ++i) {
        const double p1 = -3.0 + 7.0 * i / (n - 1.0);
        const double p2 = 1.0 - p1;
        const double v = (2.0 * p1 + p2) / (p1 * p1 + p2 * p2);
        if (v > best) {
            best = v;
            best_p1 = p1;
        }
    }
    CHECK(pi[0] == doctest::Approx(best_p1).epsilon(1e-6));
    CHECK(portfolio_ratio(p, pi) >= best - 1e-9);
}

TEST_CASE("portfolio_optimal: weights sum to one and beat a validation grid") {
    std::mt19937 gen(41);
    std::uniform_real_distribution<double> mus(-1.0, 2.0), off(-0.3, 0.3), diag(0.5, 2.0);
    for (int trial = 0; trial < 15; ++trial) {
        PortfolioParams p;
        p.mu = {mus(gen), mus(gen), mus(gen)};
        const double o01 = off(gen), o02 = off(gen), o12 = off(gen);
        p.a = {{diag(gen), o01, o02}, {o01, diag(gen), o12}, {o02, o12, diag(gen)}};
        std::vector<double> pi;
        try {
            pi = portfolio_optimal(p);
        } catch (const ParameterError&) {
            continue;  // a random draw that is not positive definite
        }
        double sum = 0;
        for (double w : pi) sum += w;
        CHECK(std::abs(sum - 1.0) <= 1e-12);

        const double ours = portfolio_ratio(p, pi);
        const int g = 120;
        for (int i = 0; i <= g; ++i)
            for (int j = 0; j <= g - 0; ++j) {
                const double p1 = -2.0 + 5.0 * i / static_cast<double>(g);
                const double p2 = -2.0 + 5.0 * j / static_cast<double>(g);
                const std::vector<double> cand{p1, p2, 1.0 - p1 - p2};
                CHECK(ours >= portfolio_ratio(p, cand) - 1e-7);
            }
    }
}

TEST_CASE("portfolio_optimal: rejects indefinite covariance") {
    PortfolioParams bad{{1.0, 1.0}, {{1.0, 2.0}, {2.0, 1.0}}};
    CHECK_THROWS_AS(portfolio_optimal(bad), ParameterError);
    PortfolioParams asym{{1.0, 1.0}, {{1.0, 0.2}, {0.3, 1.0}}};
    CHECK_THROWS_AS(portfolio_optimal(asym), ParameterError);
}

TEST_CASE("closed forms agree with extremal_choice on random draws") {
    std::mt19937 gen(43);
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    for (int i = 0; i < 20; ++i) {
        // proportional reinsurance
        PropReinsuranceParams pp{0.5 + 3.5 * u01(gen), 0, 0.3 + 2.0 * u01(gen)};
        pp.eta = pp.theta * (0.1 + 0.8 * u01(gen));
        const double u_cf = prop_reinsurance_optimal(pp);
        const auto c = extremal_choice(prop_reinsurance_family(pp), 0.0);
        CHECK(std::abs(std::get<double>(c.control) - u_cf) < 1e-4);

        // investment
        InvestmentParams ip{2.0 * u01(gen), (0.3 + 1.7 * u01(gen)) * (i % 2 ? 1 : -1),
                            0.3 + 1.7 * u01(gen), 0.3 + 1.7 * u01(gen)};
        const double ui = investment_optimal(ip);
        const auto ci = extremal_choice(investment_family(ip), 0.0);
        CHECK(std::abs(std::get<double>(ci.control) - ui) < 1e-4);
        const double si = ip.sigma_s * ip.sigma_s + ip.sigma_i * ip.sigma_i * ui * ui;
        CHECK(std::abs(ci.ratio - (ip.eta + ui * ip.m) / si) < 1e-6);
    }
}

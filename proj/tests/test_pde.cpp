#include <doctest.h>

#include <cmath>

#include "xvabsde/errors.hpp"
#include "xvabsde/ode.hpp"
#include "xvabsde/pde.hpp"

using namespace xvabsde;

namespace {

PdeGridSpec grid_spec(int n, double width = 2.0) {
    PdeGridSpec g;
    g.n_space = n;
    g.n_time = n;
    g.x_width = width;
    return g;
}

ContractSpec call_contract(double strike, double L, double alpha) {
    ContractSpec c;
    c.T = 1.0;
    c.payoff = CallPayoff{strike};
    c.closeout = CloseoutSpec{L, L, alpha};
    return c;
}

} // namespace

TEST_CASE("pde: classical one-rate call reproduces the closed form") {
    const MarketSpec m = one_rate_market(0.02, 0.2, 0.05, 0.10);
    const ContractSpec c = call_contract(100.0, 0.0, 1.0);
    const PdeSolution sol = solve_pde_system(m, c, grid_spec(400));
    const double price = sol.value(PdeField::UPlus, 0.0, 100.0);
    CHECK(std::abs(price - 8.91604) <= 0.01);
    CHECK(std::abs(sol.value(PdeField::UMinus, 0.0, 100.0) - 8.91604) <= 0.01);
    // the reference-value surface is the same price here
    CHECK(std::abs(sol.value(PdeField::V, 0.0, 100.0) - 8.91604) <= 0.01);
}

TEST_CASE("pde: constant payoff matches the RK4 oracle to 1e-6") {
    MarketSpec m = reference_market();
    m.alpha = 0.4;
    ContractSpec c;
    c.T = 1.0;
    c.payoff = ConstantPayoff{100.0};
    c.closeout = CloseoutSpec{0.5, 0.5, 0.4};
    PdeGridSpec g = grid_spec(64);
    g.n_time = 2000;
    g.picard_iters = 6;
    const PdeSolution sol = solve_pde_system(m, c, g);
    NumericsConfig fine;
    fine.n_steps = 4000;
    const OdeSolution oracle_p = solve_reduced_ode(DriverId::FullPlus, m, c, fine);
    const OdeSolution oracle_m = solve_reduced_ode(DriverId::FullMinus, m, c, fine);
    // x-independent: compare at several spots
    for (double s : {80.0, 100.0, 125.0}) {
        CHECK(std::abs(sol.value(PdeField::UPlus, 0.0, s) - oracle_p.y0) <= 1e-6);
        CHECK(std::abs(sol.value(PdeField::UMinus, 0.0, s) - oracle_m.y0) <= 1e-6);
    }
}

TEST_CASE("pde: zero spreads and equal collateral rates collapse the system") {
    MarketSpec m = reference_market();
    m.r_f = RateSchedule::constant({0.03, 0.03});
    m.r_r = RateSchedule::constant({0.02, 0.02});
    m.r_col = RateSchedule::constant({0.01, 0.01});
    const ContractSpec c = call_contract(100.0, 0.5, 1.0);
    const PdeSolution sol = solve_pde_system(m, c, grid_spec(100));
    for (int ti = 0; ti < sol.n_t(); ti += 17) {
        for (int j = 0; j < sol.n_x(); j += 11) {
            CHECK(sol.node(PdeField::UPlus, ti, j) == sol.node(PdeField::UMinus, ti, j));
        }
    }
}

TEST_CASE("pde: buyer value never exceeds the seller value nodewise") {
    const MarketSpec m = reference_market();
    const ContractSpec c = call_contract(100.0, 0.5, 1.0);
    const PdeSolution sol = solve_pde_system(m, c, grid_spec(150));
    for (int ti = 0; ti < sol.n_t(); ++ti) {
        for (int j = 0; j < sol.n_x(); ++j) {
            CHECK(sol.node(PdeField::UMinus, ti, j) <=
                  sol.node(PdeField::UPlus, ti, j) + 1e-9);
        }
    }
}

TEST_CASE("pde: surface queries") {
    const MarketSpec m = one_rate_market(0.02, 0.2, 0.0, 0.0);
    const ContractSpec c = call_contract(100.0, 0.0, 1.0);
    const PdeSolution sol = solve_pde_system(m, c, grid_spec(200));

    SUBCASE("node-exact query returns the stored value") {
        const int ti = sol.n_t() / 2;
        const int j = sol.n_x() / 3;
        const double q = sol.value(PdeField::UPlus, sol.t[ti], std::exp(sol.x[j]));
        CHECK(q == doctest::Approx(sol.node(PdeField::UPlus, ti, j)).epsilon(1e-12));
    }
    SUBCASE("midpoint of two x-nodes averages a linear slice") {
        // the terminal slice is linear in e^x above the kink; use deep ITM nodes
        const int ti = sol.n_t() - 1;
        const int j = sol.n_x() - 10;
        const double s_mid = 0.5 * (std::exp(sol.x[j]) + std::exp(sol.x[j + 1]));
        const double q = sol.value(PdeField::UPlus, sol.t[ti], s_mid);
        const double lin = 0.5 * (sol.node(PdeField::UPlus, ti, j) +
                                  sol.node(PdeField::UPlus, ti, j + 1));
        // bilinear in log-price: interior points interpolate within the cell hull
        CHECK(q >= std::min(sol.node(PdeField::UPlus, ti, j), sol.node(PdeField::UPlus, ti, j + 1)));
        CHECK(q <= std::max(sol.node(PdeField::UPlus, ti, j), sol.node(PdeField::UPlus, ti, j + 1)));
        CHECK(q == doctest::Approx(lin).epsilon(5e-3));
    }
    SUBCASE("price_at is the same query") {
        CHECK(price_at(sol, PdeField::UPlus, 0.0, 100.0) ==
              sol.value(PdeField::UPlus, 0.0, 100.0));
        CHECK(std::abs(price_at(sol, PdeField::UPlus, 0.0, 100.0) - 8.91604) <= 0.01);
    }
    SUBCASE("out-of-hull queries are rejected") {
        CHECK_THROWS_AS(sol.value(PdeField::UPlus, -0.1, 100.0), DomainError);
        CHECK_THROWS_AS(sol.value(PdeField::UPlus, 0.5, 100.0 * std::exp(3.0)), DomainError);
    }
}

TEST_CASE("pde: refinement study") {
    SUBCASE("classical call converges at second order in space") {
        const MarketSpec m = one_rate_market(0.02, 0.2, 0.0, 0.0);
        const ContractSpec c = call_contract(100.0, 0.0, 1.0);
        const RefineStudy study = refine_study(m, c, grid_spec(50), 4);
        REQUIRE(study.rows.size() == 4);
        CHECK(study.order_plus >= 1.7);
        CHECK(study.order_plus <= 2.3);
    }
    SUBCASE("constant payoff settles to 1e-6 by the second level") {
        MarketSpec m = reference_market();
        m.alpha = 0.4;
        ContractSpec c;
        c.T = 1.0;
        c.payoff = ConstantPayoff{100.0};
        c.closeout = CloseoutSpec{0.5, 0.5, 0.4};
        PdeGridSpec base = grid_spec(32);
        base.n_time = 1000;
        base.picard_iters = 6;
        const RefineStudy study = refine_study(m, c, base, 3);
        CHECK(std::abs(study.rows[1].u_plus0 - study.rows[2].u_plus0) <= 1e-6);
    }
    SUBCASE("zero volatility is rejected as pure transport") {
        const MarketSpec m = one_rate_market(0.02, 0.0, 0.0, 0.0);
        const ContractSpec c = call_contract(100.0, 0.0, 1.0);
        CHECK_THROWS_AS(refine_study(m, c, grid_spec(50), 2), ConfigError);
    }
    SUBCASE("fewer than two levels is rejected") {
        const MarketSpec m = one_rate_market(0.02, 0.2, 0.0, 0.0);
        const ContractSpec c = call_contract(100.0, 0.0, 1.0);
        CHECK_THROWS_AS(refine_study(m, c, grid_spec(50), 1), ConfigError);
    }
    SUBCASE("multi-asset configurations are rejected") {
        MarketSpec m = one_rate_market(0.02, 0.2, 0.0, 0.0);
        m.n = 2;
        m.S0 = {100.0, 100.0};
        m.sigma = MatrixSchedule::constant(Mat::identity(2));
        m.sigma_I = RowSchedule::constant({0.1, 0.0});
        m.sigma_C = RowSchedule::constant({0.15, 0.0});
        const ContractSpec c = call_contract(100.0, 0.0, 1.0);
        CHECK_THROWS_AS(solve_pde_system(m, c, grid_spec(50)), ConfigError);
    }
}

TEST_CASE("pde: doubling the box width leaves the center value unchanged") {
    const MarketSpec m = reference_market();
    const ContractSpec c = call_contract(100.0, 0.5, 1.0);
    const PdeSolution narrow = solve_pde_system(m, c, grid_spec(200, 2.0));
    PdeGridSpec wide_spec = grid_spec(400, 4.0); // same spatial resolution
    wide_spec.n_time = 200;
    const PdeSolution wide = solve_pde_system(m, c, wide_spec);
    CHECK(narrow.value(PdeField::UPlus, 0.0, 100.0) ==
          doctest::Approx(wide.value(PdeField::UPlus, 0.0, 100.0)).epsilon(1e-5));
}

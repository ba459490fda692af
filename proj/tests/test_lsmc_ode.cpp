#include <doctest.h>

#include <cmath>

#include "xvabsde/errors.hpp"
#include "xvabsde/lsmc.hpp"
#include "xvabsde/ode.hpp"
#include "xvabsde/stats.hpp"

using namespace xvabsde;

namespace {

ContractSpec constant_contract(double value, double L, double alpha) {
    ContractSpec c;
    c.T = 1.0;
    c.payoff = ConstantPayoff{value};
    c.closeout = CloseoutSpec{L, L, alpha};
    return c;
}

NumericsConfig ode_numerics(int n_steps) {
    NumericsConfig num;
    num.n_steps = n_steps;
    return num;
}

} // namespace

TEST_CASE("backward ODE: pure discounting and classical collapse") {
    SUBCASE("all rates equal, no hazards") {
        const MarketSpec m = one_rate_market(0.01, 0.2, 0.0, 0.0);
        const ContractSpec c = constant_contract(100.0, 0.0, 1.0);
        const OdeSolution sol = solve_reduced_ode(DriverId::FullPlus, m, c, ode_numerics(500));
        CHECK(sol.y0 == doctest::Approx(100.0 * std::exp(-0.01)).epsilon(1e-10));
    }
    SUBCASE("classical collapse holds for any hazards") {
        const MarketSpec m = one_rate_market(0.01, 0.2, 0.4, 0.9);
        const ContractSpec c = constant_contract(100.0, 0.0, 1.0);
        for (DriverId id : {DriverId::FullPlus, DriverId::FullMinus, DriverId::ZerothPlus,
                            DriverId::ZerothMinus}) {
            const OdeSolution sol = solve_reduced_ode(id, m, c, ode_numerics(500));
            CHECK(sol.y0 == doctest::Approx(100.0 * std::exp(-0.01)).epsilon(1e-9));
        }
    }
    SUBCASE("non-constant payoffs are rejected") {
        const MarketSpec m = one_rate_market(0.01, 0.2, 0.0, 0.0);
        ContractSpec c;
        c.payoff = CallPayoff{100.0};
        CHECK_THROWS_AS(solve_reduced_ode(DriverId::FullPlus, m, c, ode_numerics(100)),
                        ConfigError);
    }
}

TEST_CASE("backward ODE: reference fixture self-convergence and pinned value") {
    MarketSpec m = reference_market();
    m.alpha = 0.4;
    const ContractSpec c = constant_contract(100.0, 0.5, 0.4);
    const OdeSolution coarse = solve_reduced_ode(DriverId::ZerothPlus, m, c, ode_numerics(2000));
    const OdeSolution fine = solve_reduced_ode(DriverId::ZerothPlus, m, c, ode_numerics(4000));
    CHECK(std::abs(coarse.y0 - fine.y0) <= 1e-8);
    // frozen regression value for the zeroth-order seller equation
    CHECK(fine.y0 == doctest::Approx(97.002630116318).epsilon(1e-9));

    const OdeSolution full_p = solve_reduced_ode(DriverId::FullPlus, m, c, ode_numerics(4000));
    const OdeSolution full_m = solve_reduced_ode(DriverId::FullMinus, m, c, ode_numerics(4000));
    const OdeSolution zero_m = solve_reduced_ode(DriverId::ZerothMinus, m, c, ode_numerics(4000));
    CHECK(full_m.y0 <= zero_m.y0);
    CHECK(zero_m.y0 <= fine.y0);
    CHECK(fine.y0 <= full_p.y0);
}

TEST_CASE("lsmc: classical collapse to the risk-free price") {
    const MarketSpec m = one_rate_market(0.02, 0.2, 0.05, 0.10);
    ContractSpec c;
    c.T = 1.0;
    c.payoff = CallPayoff{100.0};
    c.closeout = CloseoutSpec{0.0, 0.0, 1.0};
    NumericsConfig num;
    num.n_paths = 20000;
    num.n_steps = 50;
    const PathBatch batch = simulate_asset_paths(m, c.T, num, Measure::P);
    const VhatSolution vhat = solve_vhat(m, c, batch);
    for (DriverId id : {DriverId::FullPlus, DriverId::FullMinus}) {
        const ReducedSolution sol = solve_reduced_lsmc(id, m, c, batch, vhat, num);
        CHECK(std::abs(sol.y0 - vhat.v0()) <= 3.0 * sol.se_y0);
    }
}

TEST_CASE("lsmc: terminal slice equals the payoff exactly") {
    const MarketSpec m = reference_market();
    ContractSpec c;
    c.T = 1.0;
    c.payoff = CallPayoff{100.0};
    c.closeout = CloseoutSpec{0.5, 0.5, 1.0};
    NumericsConfig num;
    num.n_paths = 500;
    num.n_steps = 10;
    const PathBatch batch = simulate_asset_paths(m, c.T, num, Measure::P);
    const VhatSolution vhat = solve_vhat(m, c, batch);
    const ReducedSolution sol =
        solve_reduced_lsmc(DriverId::FullPlus, m, c, batch, vhat, num);
    for (int p = 0; p < batch.n_paths; ++p) {
        const double xi = std::max(batch.price(p, num.n_steps, 0) - 100.0, 0.0);
        CHECK(sol.y_at(p, num.n_steps) == xi);
    }
}

TEST_CASE("lsmc: constant payoff tracks the ODE oracle") {
    MarketSpec m = reference_market();
    m.alpha = 0.4;
    const ContractSpec c = constant_contract(100.0, 0.5, 0.4);
    NumericsConfig num;
    num.n_paths = 5000;
    num.n_steps = 50;
    const PathBatch batch = simulate_asset_paths(m, c.T, num, Measure::P);
    const VhatSolution vhat = solve_vhat(m, c, batch);
    const NumericsConfig fine = ode_numerics(2000);
    for (auto [id, name] : {std::pair{DriverId::ZerothPlus, "zeroth"},
                            std::pair{DriverId::FullPlus, "full"}}) {
        INFO(name);
        const ReducedSolution mc = solve_reduced_lsmc(id, m, c, batch, vhat, num);
        const OdeSolution ode = solve_reduced_ode(id, m, c, fine);
        CHECK(std::abs(mc.y0 - ode.y0) / std::abs(ode.y0) <= 0.005);
    }
}

TEST_CASE("lsmc: per-step fixed point is converged") {
    const MarketSpec m = reference_market();
    ContractSpec c;
    c.T = 1.0;
    c.payoff = CallPayoff{100.0};
    c.closeout = CloseoutSpec{0.5, 0.5, 1.0};
    NumericsConfig num;
    num.n_paths = 2000;
    num.n_steps = 25;
    num.picard_tol = 1e-14;
    const PathBatch batch = simulate_asset_paths(m, c.T, num, Measure::P);
    const VhatSolution vhat = solve_vhat(m, c, batch);
    num.picard_iters = 5;
    const ReducedSolution five = solve_reduced_lsmc(DriverId::FullPlus, m, c, batch, vhat, num);
    num.picard_iters = 12;
    const ReducedSolution twelve = solve_reduced_lsmc(DriverId::FullPlus, m, c, batch, vhat, num);
    CHECK(five.y0 == doctest::Approx(twelve.y0).epsilon(1e-9));
}

TEST_CASE("first-order correction") {
    MarketSpec m = reference_market();
    m.alpha = 0.4;
    const ContractSpec c = constant_contract(100.0, 0.5, 0.4);
    NumericsConfig num;
    num.n_paths = 5000;
    num.n_steps = 50;
    const PathBatch batch = simulate_asset_paths(m, c.T, num, Measure::P);
    const VhatSolution vhat = solve_vhat(m, c, batch);
    const ReducedSolution zeroth =
        solve_reduced_lsmc(DriverId::ZerothPlus, m, c, batch, vhat, num);

    SUBCASE("zero spreads give an identically zero correction") {
        MarketSpec flat = m;
        flat.r_f = RateSchedule::constant({0.03, 0.03});
        flat.r_r = RateSchedule::constant({0.02, 0.02});
        const VhatSolution vhat_flat = solve_vhat(flat, c, batch);
        const ReducedSolution zero_flat =
            solve_reduced_lsmc(DriverId::ZerothPlus, flat, c, batch, vhat_flat, num);
        const ReducedSolution first =
            solve_first_order(Side::Plus, flat, c, batch, zero_flat, vhat_flat, num);
        for (int p = 0; p < 100; ++p) {
            for (int i = 0; i <= num.n_steps; ++i) CHECK(first.y_at(p, i) == 0.0);
        }
    }
    SUBCASE("seller-side source makes the correction nonnegative") {
        const ReducedSolution first =
            solve_first_order(Side::Plus, m, c, batch, zeroth, vhat, num);
        CHECK(first.y0 >= -3.0 * first.se_y0);
    }
    SUBCASE("matches the joint RK4 oracle for constant payoffs") {
        const ReducedSolution first =
            solve_first_order(Side::Plus, m, c, batch, zeroth, vhat, num);
        const FirstOrderOde oracle = solve_first_order_ode(Side::Plus, m, c, ode_numerics(2000));
        CHECK(std::abs(first.y0 - oracle.first.y0) / std::abs(oracle.first.y0) <= 0.005);
    }
}

TEST_CASE("lsmc: perfectly collinear states surface as a numeric error") {
    // two assets driven by the same Brownian row make the degree-1 features
    // linearly dependent
    MarketSpec m = reference_market();
    m.n = 2;
    m.S0 = {100.0, 100.0};
    Mat sg(2, 2);
    sg(0, 0) = 0.2;
    sg(1, 0) = 0.2;
    sg(0, 1) = 1e-9; // keep sigma formally invertible
    sg(1, 1) = 2e-9;
    m.sigma = MatrixSchedule::constant(sg);
    m.sigma_I = RowSchedule::constant({0.1, 0.0});
    m.sigma_C = RowSchedule::constant({0.15, 0.0});
    ContractSpec c;
    c.T = 1.0;
    c.payoff = BasketPayoff{{0.5, 0.5}, 100.0};
    c.closeout = CloseoutSpec{0.5, 0.5, 1.0};
    NumericsConfig num;
    num.n_paths = 500;
    num.n_steps = 4;
    num.basis_degree = 1;
    const PathBatch batch = simulate_asset_paths(m, c.T, num, Measure::P);
    try {
        const VhatSolution vhat = solve_vhat(m, c, batch, VhatMode::ForceRegression);
        solve_reduced_lsmc(DriverId::FullPlus, m, c, batch, vhat, num);
        FAIL("expected a rank-deficiency error");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("rank-deficient at step") != std::string::npos);
    }
}

TEST_CASE("lift to the full filtration") {
    const MarketSpec m = one_rate_market(0.02, 0.2, 0.05, 0.10);
    ContractSpec c;
    c.T = 1.0;
    c.payoff = CallPayoff{100.0};
    NumericsConfig num;
    num.n_paths = 3000;
    num.n_steps = 20;
    const PathBatch batch = simulate_asset_paths(m, c.T, num, Measure::P);

    SUBCASE("classical collapse gives vanishing jump sizes") {
        // constant payoff: the collapse is representable exactly by the
        // regression, so u_i shrinks to the time-discretization error
        c.payoff = ConstantPayoff{100.0};
        c.closeout = CloseoutSpec{0.0, 0.0, 1.0};
        const VhatSolution vhat = solve_vhat(m, c, batch);
        const ReducedSolution sol =
            solve_reduced_lsmc(DriverId::FullPlus, m, c, batch, vhat, num);
        const FullSolution full = lift_solution(sol, vhat, c.closeout, batch);
        for (int p = 0; p < batch.n_paths; p += 100) {
            for (int i = 0; i <= num.n_steps; ++i) {
                CHECK(std::abs(full.u1_at(p, i)) <= 1e-2);
                CHECK(std::abs(full.u2_at(p, i)) <= 1e-2);
            }
        }
    }
    SUBCASE("full write-off makes u1 the negated value") {
        MarketSpec m0 = m;
        m0.alpha = 0.0;
        c.closeout = CloseoutSpec{1.0, 0.0, 0.0};
        const VhatSolution vhat = solve_vhat(m0, c, batch);
        const ReducedSolution sol =
            solve_reduced_lsmc(DriverId::FullPlus, m0, c, batch, vhat, num);
        const FullSolution full = lift_solution(sol, vhat, c.closeout, batch);
        for (int p = 0; p < 30; ++p) {
            for (int i = 0; i <= num.n_steps; ++i) {
                if (vhat.on_batch(batch, p, i) > 0.0) {
                    CHECK(full.u1_at(p, i) == doctest::Approx(-sol.y_at(p, i)).epsilon(1e-12));
                }
            }
        }
    }
}

TEST_CASE("price bounds") {
    SUBCASE("zero spreads and equal collateral rates collapse the interval") {
        MarketSpec m = reference_market();
        m.r_f = RateSchedule::constant({0.03, 0.03});
        m.r_r = RateSchedule::constant({0.02, 0.02});
        m.r_col = RateSchedule::constant({0.01, 0.01});
        ContractSpec c;
        c.T = 1.0;
        c.payoff = CallPayoff{100.0};
        c.closeout = CloseoutSpec{0.5, 0.5, 1.0};
        NumericsConfig num;
        num.n_paths = 4000;
        num.n_steps = 25;
        const PriceBounds b = price_bounds(m, c, num);
        CHECK(b.p_lower == b.p_upper);
    }
    SUBCASE("reference fixture has a positive width and doubles with the payoff") {
        const MarketSpec m = reference_market();
        ContractSpec c;
        c.T = 1.0;
        c.payoff = CallPayoff{100.0};
        c.closeout = CloseoutSpec{0.5, 0.5, 1.0};
        NumericsConfig num;
        num.n_paths = 4000;
        num.n_steps = 25;
        const PriceBounds base = price_bounds(m, c, num);
        CHECK(base.p_upper > base.p_lower);
        ContractSpec scaled = c;
        scaled.payoff = payoff_scaled(c.payoff, 2.0);
        const PriceBounds doubled = price_bounds(m, scaled, num);
        CHECK(doubled.p_lower == doctest::Approx(2.0 * base.p_lower).epsilon(1e-10));
        CHECK(doubled.p_upper == doctest::Approx(2.0 * base.p_upper).epsilon(1e-10));
    }
}

#include <doctest.h>

#include <cmath>

#include "xvabsde/analysis.hpp"
#include "xvabsde/errors.hpp"
#include "xvabsde/stats.hpp"
#include "xvabsde/vhat.hpp"

using namespace xvabsde;

namespace {

ContractSpec call_contract(double strike, double L, double alpha) {
    ContractSpec c;
    c.T = 1.0;
    c.payoff = CallPayoff{strike};
    c.closeout = CloseoutSpec{L, L, alpha};
    return c;
}

} // namespace

TEST_CASE("no-arbitrage margins at the reference constants") {
    const MarketSpec m = reference_market();
    const std::vector<double> grid = {0.0, 0.5, 1.0};
    const NoArbReport rep = check_noarb(m, grid);
    CHECK(rep.all_pass);
    CHECK(std::abs(rep.by_id("48-h1").worst_margin - 0.0275) <= 1e-12);
    CHECK(std::abs(rep.by_id("48-h2").worst_margin - 0.07875) <= 1e-12);
    CHECK(std::abs(rep.by_id("49").worst_margin - 0.013) <= 1e-12);
    CHECK(std::abs(rep.by_id("19f").worst_margin - 0.01) <= 1e-12);
    CHECK(std::abs(rep.by_id("44").worst_margin - 0.004) <= 1e-12);
}

TEST_CASE("no-arbitrage checker flags a vanished hazard") {
    MarketSpec m = reference_market();
    m.h1 = ScalarSchedule::constant(0.0);
    const NoArbReport rep = check_noarb(m, std::vector<double>{0.0});
    CHECK_FALSE(rep.all_pass);
    CHECK_FALSE(rep.by_id("48-h1").pass);
    CHECK(std::abs(rep.by_id("48-h1").worst_margin - (-0.0225)) <= 1e-12);
    CHECK(rep.by_id("48-h2").pass);
}

TEST_CASE("no-arbitrage margins are trivially nonnegative with equal rates") {
    const MarketSpec m = one_rate_market(0.02, 0.2, 0.0, 0.0);
    const NoArbReport rep = check_noarb(m, std::vector<double>{0.0, 1.0});
    CHECK(rep.all_pass);
}

TEST_CASE("no-arbitrage margins respond affinely to rate bumps") {
    MarketSpec m = reference_market();
    const NoArbReport base = check_noarb(m, std::vector<double>{0.0});
    const double delta = 1e-4;
    RatePair rf = m.r_f.values[0];
    rf.r_minus += delta;
    m.r_f = RateSchedule::constant(rf);
    const NoArbReport bumped = check_noarb(m, std::vector<double>{0.0});
    CHECK(std::abs((base.by_id("48-h1").worst_margin - bumped.by_id("48-h1").worst_margin) -
                   delta) <= 1e-12);
}

TEST_CASE("ordering chain with equal rates collapses to one value") {
    MarketSpec m = reference_market();
    m.r_f = RateSchedule::constant({0.03, 0.03});
    m.r_r = RateSchedule::constant({0.02, 0.02});
    m.r_col = RateSchedule::constant({0.01, 0.01});
    const ContractSpec c = call_contract(100.0, 0.5, 1.0);
    NumericsConfig num;
    num.n_paths = 3000;
    num.n_steps = 20;
    const OrderingReport rep = ordering_check(m, c, num);
    CHECK(rep.chain_ok);
    CHECK(rep.y_minus == rep.y_plus);
    CHECK(rep.y0_minus == rep.y0_plus);
}

TEST_CASE("ordering chain on the reference fixture") {
    const MarketSpec m = reference_market();
    const ContractSpec c = call_contract(100.0, 0.5, 1.0);
    NumericsConfig num;
    num.n_paths = 10000;
    num.n_steps = 50;
    const OrderingReport rep = ordering_check(m, c, num);
    CHECK(rep.chain_ok);
    CHECK(rep.first_violation.empty());
    CHECK(rep.y_minus < rep.y0_minus);
    CHECK(rep.y0_minus < rep.y0_plus);
    CHECK(rep.y0_plus < rep.y_plus);
    // pinned seeded fixture for the chain values
    CHECK(rep.y_minus == doctest::Approx(8.615).epsilon(0.02));
    CHECK(rep.y_plus == doctest::Approx(9.21).epsilon(0.02));
}

TEST_CASE("ordering chain for constant payoffs verified against the RK4 oracle") {
    MarketSpec m = reference_market();
    m.alpha = 0.4;
    ContractSpec c;
    c.T = 1.0;
    c.payoff = ConstantPayoff{100.0};
    c.closeout = CloseoutSpec{0.5, 0.5, 0.4};
    NumericsConfig num;
    num.n_paths = 2000;
    num.n_steps = 25;
    const OrderingReport mc = ordering_check(m, c, num);
    NumericsConfig fine;
    fine.n_steps = 2000;
    const double oracle[4] = {
        solve_reduced_ode(DriverId::FullMinus, m, c, fine).y0,
        solve_reduced_ode(DriverId::ZerothMinus, m, c, fine).y0,
        solve_reduced_ode(DriverId::ZerothPlus, m, c, fine).y0,
        solve_reduced_ode(DriverId::FullPlus, m, c, fine).y0,
    };
    CHECK(oracle[0] <= oracle[1]);
    CHECK(oracle[1] <= oracle[2]);
    CHECK(oracle[2] <= oracle[3]);
    // the simulated chain agrees with the deterministic one up to the
    // first-order time bias of the backward scheme
    CHECK(mc.y_minus == doctest::Approx(oracle[0]).epsilon(2e-3));
    CHECK(mc.y0_minus == doctest::Approx(oracle[1]).epsilon(2e-3));
    CHECK(mc.y0_plus == doctest::Approx(oracle[2]).epsilon(2e-3));
    CHECK(mc.y_plus == doctest::Approx(oracle[3]).epsilon(2e-3));
}

TEST_CASE("ordering endpoints coincide with the price bounds on the same seed") {
    const MarketSpec m = reference_market();
    const ContractSpec c = call_contract(100.0, 0.5, 1.0);
    NumericsConfig num;
    num.n_paths = 3000;
    num.n_steps = 20;
    const OrderingReport chain = ordering_check(m, c, num);
    const PriceBounds bounds = price_bounds(m, c, num);
    CHECK(chain.y_minus == bounds.p_lower);
    CHECK(chain.y_plus == bounds.p_upper);
}

TEST_CASE("pde and lsmc price the reference call consistently") {
    const MarketSpec m = reference_market();
    const ContractSpec c = call_contract(100.0, 0.5, 1.0);
    NumericsConfig num;
    num.n_paths = 50000;
    num.n_steps = 100;
    const PriceBounds mc = price_bounds(m, c, num);
    const PdeSolution grid = solve_pde_system(m, c, pde_grid(num));
    const double pde_upper = grid.value(PdeField::UPlus, 0.0, 100.0);
    const double pde_lower = grid.value(PdeField::UMinus, 0.0, 100.0);
    const double tol_up = std::max(3.0 * mc.se_upper, 0.01 * std::abs(pde_upper));
    const double tol_lo = std::max(3.0 * mc.se_lower, 0.01 * std::abs(pde_lower));
    CHECK(std::abs(mc.p_upper - pde_upper) <= tol_up);
    CHECK(std::abs(mc.p_lower - pde_lower) <= tol_lo);
}

TEST_CASE("epsilon sweep input validation and zero exclusion") {
    MarketSpec base = reference_market();
    base.r_f = RateSchedule::constant({0.03, 0.03});
    base.r_r = RateSchedule::constant({0.02, 0.02});
    const ContractSpec c = call_contract(100.0, 0.5, 1.0);
    NumericsConfig num;
    num.n_steps = 50;
    num.pde.n_space = 100;

    SUBCASE("empty list rejected") {
        CHECK_THROWS_AS(
            epsilon_sweep(base, c, std::vector<double>{}, 0, SweepEngine::Pde, num),
            ConfigError);
    }
    SUBCASE("non-decreasing list rejected") {
        CHECK_THROWS_AS(epsilon_sweep(base, c, std::vector<double>{0.01, 0.02}, 0,
                                      SweepEngine::Pde, num),
                        ConfigError);
    }
    SUBCASE("base market with spreads rejected") {
        CHECK_THROWS_AS(epsilon_sweep(reference_market(), c, std::vector<double>{0.01}, 0,
                                      SweepEngine::Pde, num),
                        ConfigError);
    }
    SUBCASE("eps = 0 has exactly zero error and is excluded from the fit") {
        const SweepResult r = epsilon_sweep(base, c, std::vector<double>{0.01, 0.0}, 0,
                                            SweepEngine::Pde, num);
        REQUIRE(r.points.size() == 2);
        CHECK(r.points[1].err_total == 0.0);
        CHECK(r.points[1].excluded);
        CHECK_FALSE(r.points[0].excluded);
    }
}

TEST_CASE("epsilon sweep errors obey the triangle inequality across orders") {
    MarketSpec base = reference_market();
    base.r_f = RateSchedule::constant({0.03, 0.03});
    base.r_r = RateSchedule::constant({0.02, 0.02});
    const ContractSpec c = call_contract(100.0, 0.5, 1.0);
    NumericsConfig num;
    num.n_paths = 3000;
    num.n_steps = 25;
    const std::vector<double> eps = {0.01};
    const SweepResult r0 = epsilon_sweep(base, c, eps, 0, SweepEngine::Lsmc, num);
    const SweepResult r1 = epsilon_sweep(base, c, eps, 1, SweepEngine::Lsmc, num);

    // norm of the first-order term itself, via a zero reference solution
    MarketSpec bumped = base;
    for (RatePair& p : bumped.r_f.values) p = RatePair::from_mid_spread(p.mid(), eps[0]);
    for (RatePair& p : bumped.r_r.values) p = RatePair::from_mid_spread(p.mid(), eps[0]);
    const PathBatch batch = simulate_asset_paths(bumped, c.T, num, Measure::P);
    const VhatSolution vhat = solve_vhat(bumped, c, batch);
    const ReducedSolution zeroth =
        solve_reduced_lsmc(DriverId::ZerothPlus, bumped, c, batch, vhat, num);
    const ReducedSolution first =
        solve_first_order(Side::Plus, bumped, c, batch, zeroth, vhat, num);
    ReducedSolution zero = first;
    std::fill(zero.y.begin(), zero.y.end(), 0.0);
    std::fill(zero.z.begin(), zero.z.end(), 0.0);
    const double first_norm = lsmc_gap_norm(first, zero, nullptr, 0.0, false) +
                              lsmc_gap_norm(first, zero, nullptr, 0.0, true);
    CHECK(r0.points[0].err_plus <= r1.points[0].err_plus + first_norm + 1e-12);
}

TEST_CASE("first-order homogeneous forms are discriminated by the decay rate") {
    MarketSpec base = reference_market();
    base.r_f = RateSchedule::constant({0.03, 0.03});
    base.r_r = RateSchedule::constant({0.02, 0.02});
    const ContractSpec c = call_contract(100.0, 0.5, 1.0);
    NumericsConfig num;
    num.n_steps = 100;
    num.pde.n_space = 100;
    const std::vector<double> eps = {0.02, 0.01, 0.005};
    const SweepResult strict =
        epsilon_sweep(base, c, eps, 1, SweepEngine::Pde, num, FirstOrderForm::ZeroCloseout);
    const SweepResult printed = epsilon_sweep(base, c, eps, 1, SweepEngine::Pde, num,
                                              FirstOrderForm::InheritedCloseout);
    CHECK(strict.slope >= 1.6);
    CHECK(strict.slope <= 2.5);
    // the variant that keeps the base close-out values in the homogeneous
    // part carries an order-one defect: its error does not decay
    CHECK(printed.slope <= 0.5);
    CHECK(printed.points.back().err_total > 10.0 * strict.points.back().err_total);
}

TEST_CASE("positive homogeneity") {
    SUBCASE("ode engine, constant payoff") {
        MarketSpec m = reference_market();
        m.alpha = 0.4;
        ContractSpec c;
        c.T = 1.0;
        c.payoff = ConstantPayoff{100.0};
        c.closeout = CloseoutSpec{0.5, 0.5, 0.4};
        NumericsConfig num;
        num.n_steps = 500;
        const double ks[3] = {1.0, 2.0, 3.0};
        const HomogeneityResult r =
            homogeneity_check(m, c, ks, num, HomogeneityEngine::Ode);
        CHECK(r.deviations[0] == 0.0); // k = 1 re-solves the identical problem
        CHECK(r.max_rel_deviation <= 1e-10);
    }
    SUBCASE("lsmc engine, call payoff on the same seed") {
        const MarketSpec m = reference_market();
        const ContractSpec c = call_contract(100.0, 0.5, 1.0);
        NumericsConfig num;
        num.n_paths = 2000;
        num.n_steps = 20;
        const double ks[2] = {2.0, 3.0};
        const HomogeneityResult r =
            homogeneity_check(m, c, ks, num, HomogeneityEngine::Lsmc);
        CHECK(r.max_rel_deviation <= 1e-10);
    }
}

TEST_CASE("replication: constant payoff with defaults on") {
    MarketSpec m = reference_market();
    m.alpha = 0.4;
    ContractSpec c;
    c.T = 1.0;
    c.payoff = ConstantPayoff{100.0};
    c.closeout = CloseoutSpec{0.5, 0.5, 0.4};
    NumericsConfig num;
    num.n_steps = 200;
    num.n_paths = 2000;
    const ReplicationReport rep = replicate(m, c, num, 2000, Side::Plus, HedgeEngine::Ode);
    CHECK(rep.rel_error <= 0.02);
    CHECK(rep.y_start > 90.0);
}

TEST_CASE("replication: buyer side of the classical fixture") {
    const MarketSpec m = one_rate_market(0.02, 0.2, 0.0, 0.0);
    const ContractSpec c = call_contract(100.0, 0.0, 1.0);
    NumericsConfig num;
    num.n_steps = 200;
    const ReplicationReport rep = replicate(m, c, num, 2000, Side::Minus, HedgeEngine::Pde);
    CHECK(rep.rel_error <= 0.02);
    CHECK(rep.y_start == doctest::Approx(8.916).epsilon(1e-3));
}

TEST_CASE("replication: lsmc hedge-field transfer drives the hedge") {
    const MarketSpec m = one_rate_market(0.02, 0.2, 0.0, 0.0);
    const ContractSpec c = call_contract(100.0, 0.0, 1.0);
    NumericsConfig num;
    num.n_steps = 50;
    num.n_paths = 20000;
    const ReplicationReport rep = replicate(m, c, num, 1000, Side::Plus, HedgeEngine::Lsmc);
    // regression-transferred fields carry estimation noise on top of the
    // discrete-hedging error
    CHECK(rep.rel_error <= 0.05);
    CHECK(rep.y_start == doctest::Approx(8.916).epsilon(0.02));
}

TEST_CASE("martingale diagnostic in a single-rate world") {
    SUBCASE("call fixture with defaults") {
        const MarketSpec m = one_rate_market(0.02, 0.2, 0.05, 0.10);
        const ContractSpec c = call_contract(100.0, 0.0, 1.0);
        NumericsConfig num;
        num.n_steps = 100;
        num.n_paths = 20000;
        const MartingaleReport rep = martingale_diagnostic(m, c, num);
        CHECK(rep.within_3se);
    }
    SUBCASE("degenerate deterministic case has zero drift") {
        MarketSpec m = one_rate_market(0.02, 0.0, 0.0, 0.0);
        ContractSpec c;
        c.T = 1.0;
        c.payoff = ConstantPayoff{100.0};
        c.closeout = CloseoutSpec{0.0, 0.0, 1.0};
        NumericsConfig num;
        num.n_steps = 50;
        num.n_paths = 128;
        const MartingaleReport rep = martingale_diagnostic(m, c, num);
        CHECK(rep.max_abs_drift <= 1e-10);
    }
    SUBCASE("spreads are rejected") {
        const MarketSpec m = reference_market();
        const ContractSpec c = call_contract(100.0, 0.0, 1.0);
        NumericsConfig num;
        CHECK_THROWS_AS(martingale_diagnostic(m, c, num), ConfigError);
    }
}

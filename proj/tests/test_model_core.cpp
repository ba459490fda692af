#include <doctest.h>

#include <cmath>

#include "xvabsde/errors.hpp"
#include "xvabsde/market.hpp"
#include "xvabsde/schedule.hpp"

using namespace xvabsde;

TEST_CASE("rate pair mid/spread reconstruction") {
    const RatePair rf{0.035, 0.025};
    CHECK(rf.mid() == doctest::Approx(0.03).epsilon(1e-15));
    CHECK(rf.half_spread() == doctest::Approx(0.005).epsilon(1e-15));
    const RatePair back = RatePair::from_mid_spread(rf.mid(), rf.half_spread());
    CHECK(back.r_minus == doctest::Approx(rf.r_minus).epsilon(1e-15));
    CHECK(back.r_plus == doctest::Approx(rf.r_plus).epsilon(1e-15));
    CHECK(rf.r_minus >= rf.mid());
    CHECK(rf.mid() >= rf.r_plus);
}

TEST_CASE("coefficient_at right-continuous lookup") {
    const ScalarSchedule s({0.0, 0.5}, {0.01, 0.02});
    CHECK(coefficient_at(s, 0.25, 1.0) == 0.01);
    CHECK(coefficient_at(s, 0.5, 1.0) == 0.02); // right-continuity at the breakpoint
    const ScalarSchedule single({0.0}, {0.03});
    CHECK(coefficient_at(single, 1.0, 1.0) == 0.03); // horizon uses the last interval
    CHECK_THROWS_AS(coefficient_at(s, -0.1, 1.0), DomainError);
    CHECK_THROWS_AS(coefficient_at(s, 1.5, 1.0), DomainError);
}

TEST_CASE("coefficient_at is idempotent under value-duplicating refinement") {
    const ScalarSchedule s({0.0, 0.5}, {0.01, 0.02});
    const ScalarSchedule refined({0.0, 0.25, 0.5, 0.75}, {0.01, 0.01, 0.02, 0.02});
    for (double t : {0.0, 0.1, 0.25, 0.3, 0.5, 0.6, 0.75, 0.9}) {
        CHECK(s.at(t) == refined.at(t));
    }
}

TEST_CASE("schedule integration walks the pieces") {
    const ScalarSchedule s({0.0, 0.5}, {0.01, 0.02});
    CHECK(integrate(s, 0.0, 1.0) == doctest::Approx(0.015).epsilon(1e-14));
    CHECK(integrate(s, 0.25, 0.75) == doctest::Approx(0.0075).epsilon(1e-14));
    CHECK(integrate(s, 0.6, 0.6) == 0.0);
}

TEST_CASE("payoff menu evaluation") {
    const double s110[1] = {110.0};
    CHECK(payoff_eval(CallPayoff{100.0}, s110) == 10.0);
    CHECK(payoff_eval(PutPayoff{100.0}, s110) == 0.0);
    CHECK(payoff_eval(ForwardPayoff{100.0}, s110) == 10.0);
    CHECK(payoff_eval(ConstantPayoff{100.0}, s110) == 100.0);
    const double s2[2] = {110.0, 90.0};
    CHECK(payoff_eval(BasketPayoff{{0.5, 0.5}, 95.0}, s2) == 5.0);
}

TEST_CASE("close-out values per the loss-rate rule") {
    CloseoutSpec c;
    c.L_I = 0.5;
    c.L_C = 0.5;
    c.alpha = 0.4;
    SUBCASE("positive reference value") {
        const auto [p1, p2] = closeout_eval(c, 10.0);
        CHECK(p1 == doctest::Approx(7.0).epsilon(1e-15));
        CHECK(p2 == doctest::Approx(10.0).epsilon(1e-15));
    }
    SUBCASE("negative reference value") {
        const auto [p1, p2] = closeout_eval(c, -10.0);
        CHECK(p1 == doctest::Approx(-10.0).epsilon(1e-15));
        CHECK(p2 == doctest::Approx(-7.0).epsilon(1e-15));
    }
    SUBCASE("zero loss rates pass the value through") {
        c.L_I = 0.0;
        c.L_C = 0.0;
        const auto [p1, p2] = closeout_eval(c, 5.0);
        CHECK(p1 == 5.0);
        CHECK(p2 == 5.0);
    }
    SUBCASE("full collateralization removes the haircut") {
        c.alpha = 1.0;
        for (double v : {-3.0, 0.0, 7.5}) {
            const auto [p1, p2] = closeout_eval(c, v);
            CHECK(p1 == v);
            CHECK(p2 == v);
        }
    }
    SUBCASE("monotone in the reference value") {
        double prev1 = -1e300, prev2 = -1e300;
        for (double v = -20.0; v <= 20.0; v += 0.25) {
            const auto [p1, p2] = closeout_eval(c, v);
            CHECK(p1 >= prev1);
            CHECK(p2 >= prev2);
            prev1 = p1;
            prev2 = p2;
        }
    }
}

TEST_CASE("market validation: reference constants pass with flag_44") {
    const ValidationReport report = validate_market(reference_market());
    CHECK(report.valid());
    CHECK(report.flag_44);
}

TEST_CASE("market validation: negative funding spread is flagged") {
    MarketSpec m = reference_market();
    m.r_f = RateSchedule::constant({0.02, 0.03});
    const ValidationReport report = validate_market(m);
    REQUIRE_FALSE(report.valid());
    CHECK(report.violations.front().code == "funding_spread");
}

TEST_CASE("market validation: singular sigma is flagged with its time") {
    MarketSpec m = reference_market();
    m.sigma = MatrixSchedule({0.0, 0.5}, {Mat::scalar(0.2), Mat::scalar(0.0)});
    const ValidationReport report = validate_market(m);
    REQUIRE_FALSE(report.valid());
    CHECK(report.violations.front().code == "sigma_singular");
    CHECK(report.violations.front().message.find("0.5") != std::string::npos);
}

TEST_CASE("market validation: hazard sign and alpha range") {
    MarketSpec m = reference_market();
    m.h1 = ScalarSchedule::constant(-0.01);
    m.alpha = 1.5;
    const ValidationReport report = validate_market(m);
    REQUIRE_FALSE(report.valid());
    bool hazard = false, alpha = false;
    for (const Violation& v : report.violations) {
        hazard = hazard || v.code == "hazard_negative";
        alpha = alpha || v.code == "alpha_range";
    }
    CHECK(hazard);
    CHECK(alpha);
}

TEST_CASE("contract validation catches basket weight mismatch") {
    const MarketSpec m = reference_market();
    ContractSpec c;
    c.T = 1.0;
    c.payoff = BasketPayoff{{0.5, 0.5}, 100.0};
    c.closeout.alpha = m.alpha;
    const auto violations = validate_contract(c, m);
    REQUIRE_FALSE(violations.empty());
    CHECK(violations.front().code == "basket_weights");
}

TEST_CASE("payoff scaling stays in the menu") {
    const PayoffSpec scaled = payoff_scaled(CallPayoff{100.0}, 2.0);
    const auto& basket = std::get<BasketPayoff>(scaled);
    CHECK(basket.weights == std::vector<double>{2.0});
    CHECK(basket.strike == 200.0);
    const double s[1] = {130.0};
    CHECK(payoff_eval(scaled, s) == doctest::Approx(2.0 * payoff_eval(CallPayoff{100.0}, s)));
    CHECK_THROWS_AS(payoff_scaled(PutPayoff{100.0}, 2.0), ConfigError);
}

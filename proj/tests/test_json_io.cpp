#include <doctest.h>

#include "xvabsde/errors.hpp"
#include "xvabsde/json_io.hpp"

using namespace xvabsde;

namespace {

RunConfig reference_config() {
    RunConfig c;
    c.market = reference_market();
    c.contract.T = 1.0;
    c.contract.payoff = CallPayoff{100.0};
    c.contract.closeout = CloseoutSpec{0.5, 0.5, 1.0};
    return c;
}

} // namespace

TEST_CASE("run config survives a JSON round trip") {
    const RunConfig config = reference_config();
    const std::string text = to_json(config).dump();
    const RunConfig back = parse_run_config(text);
    CHECK(to_json(back).dump() == text);
    CHECK(back.market.r_f.values[0].r_minus == 0.035);
    CHECK(back.market.sigma.values[0](0, 0) == 0.2);
    CHECK(std::get<CallPayoff>(back.contract.payoff).strike == 100.0);
    CHECK(back.numerics.seed == 12345);
}

TEST_CASE("payoff variants round trip") {
    RunConfig config = reference_config();
    config.contract.payoff = BasketPayoff{{1.5}, 150.0};
    RunConfig back = parse_run_config(to_json(config).dump());
    CHECK(std::get<BasketPayoff>(back.contract.payoff).weights == std::vector<double>{1.5});
    config.contract.payoff = ConstantPayoff{42.0};
    back = parse_run_config(to_json(config).dump());
    CHECK(std::get<ConstantPayoff>(back.contract.payoff).value == 42.0);
}

TEST_CASE("malformed JSON reports line and column") {
    try {
        parse_run_config("{\n  \"market\": [,]\n}");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string what = e.what();
        CHECK(what.find("line") != std::string::npos);
        CHECK(what.find("column") != std::string::npos);
    }
}

TEST_CASE("schema violations are config errors") {
    CHECK_THROWS_AS(parse_run_config("{}"), ConfigError);
    // mismatched collateralization levels between market and close-out
    RunConfig config = reference_config();
    config.contract.closeout.alpha = 0.25;
    CHECK_THROWS_AS(parse_run_config(to_json(config).dump()), ConfigError);
    // unknown payoff type
    Json j = to_json(reference_config());
    j["contract"]["payoff"] = Json{{"type", "swaption"}};
    CHECK_THROWS_AS(parse_run_config(j.dump()), ConfigError);
}

TEST_CASE("report envelope embeds the version and resolved config") {
    const RunConfig config = reference_config();
    const Json env = report_envelope(config, "price", Json{{"p_lower", 1.0}});
    CHECK(env.at("version").get<std::string>() == std::string("0.1.0"));
    CHECK(env.at("command").get<std::string>() == "price");
    CHECK(env.at("config").at("market").at("alpha").get<double>() == 1.0);
    CHECK(env.at("report").at("p_lower").get<double>() == 1.0);
}

TEST_CASE("csv renderings carry headers and one row per record") {
    XVAReport xva;
    xva.v0 = 1.0;
    const std::string xcsv = xva_csv(xva);
    CHECK(xcsv.find("v0,se_v0,va1") == 0);
    CHECK(std::count(xcsv.begin(), xcsv.end(), '\n') == 2);

    NoArbReport noarb;
    noarb.conditions.push_back({"19f", 0.01, true});
    noarb.conditions.push_back({"49", -0.1, false});
    const std::string ncsv = noarb_csv(noarb);
    CHECK(ncsv.find("condition,worst_margin,pass") == 0);
    CHECK(std::count(ncsv.begin(), ncsv.end(), '\n') == 3);

    SweepResult sweep;
    sweep.points.push_back({0.01, 1.0, 1.0, 2.0, false});
    const std::string scsv = sweep_csv(sweep);
    CHECK(scsv.find("eps,err_plus") == 0);
    CHECK(std::count(scsv.begin(), scsv.end(), '\n') == 2);
}

TEST_CASE("serialization is deterministic") {
    const RunConfig config = reference_config();
    CHECK(to_json(config).dump() == to_json(config).dump());
    const Json env1 = report_envelope(config, "xva", to_json(XVAReport{}));
    const Json env2 = report_envelope(config, "xva", to_json(XVAReport{}));
    CHECK(env1.dump() == env2.dump());
}

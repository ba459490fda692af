// Command-line front end: config ingestion, experiment orchestration, report
// emission. Exit codes: 0 success, 1 negative domain verdict (failed check),
// 2 configuration error, 3 numerical error.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "xvabsde/analysis.hpp"
#include "xvabsde/errors.hpp"
#include "xvabsde/json_io.hpp"
#include "xvabsde/lsmc.hpp"
#include "xvabsde/pde.hpp"
#include "xvabsde/version.hpp"
#include "xvabsde/xva.hpp"

namespace {

using namespace xvabsde;

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> paths;
    std::optional<int> steps;
    std::string engine = "lsmc";
    std::string out_path;
    std::string csv_path;
};

RunConfig load_and_validate(const CommonOpts& opts, bool enforce_market = true) {
    RunConfig config = load_run_config(opts.config_path);
    if (opts.seed) config.numerics.seed = *opts.seed;
    if (opts.paths) config.numerics.n_paths = *opts.paths;
    if (opts.steps) config.numerics.n_steps = *opts.steps;

    if (enforce_market) {
        const ValidationReport market_report = validate_market(config.market);
        if (!market_report.valid()) {
            throw ConfigError("invalid market: " + market_report.violations.front().message);
        }
        const auto contract_violations = validate_contract(config.contract, config.market);
        if (!contract_violations.empty()) {
            throw ConfigError("invalid contract: " + contract_violations.front().message);
        }
        const auto numeric_violations = validate_numerics(config.numerics);
        if (!numeric_violations.empty()) {
            throw ConfigError("invalid numerics: " + numeric_violations.front().message);
        }
    }
    return config;
}

void emit(const RunConfig& config, const std::string& command, const Json& body,
          const CommonOpts& opts, const std::string& csv = "") {
    const Json envelope = report_envelope(config, command, body);
    const std::string text = envelope.dump(2) + "\n";
    std::cout << text;
    if (!opts.out_path.empty()) {
        std::ofstream out(opts.out_path);
        if (!out) throw ConfigError("cannot write " + opts.out_path);
        out << text;
    }
    if (!opts.csv_path.empty() && !csv.empty()) {
        std::ofstream out(opts.csv_path);
        if (!out) throw ConfigError("cannot write " + opts.csv_path);
        out << csv;
    }
}

int cmd_validate(const CommonOpts& opts) {
    const RunConfig config = load_and_validate(opts, /*enforce_market=*/false);
    const ValidationReport market_report = validate_market(config.market);
    Json body = to_json(market_report);
    Json extra = Json::array();
    for (const Violation& v : validate_contract(config.contract, config.market)) {
        extra.push_back({{"code", v.code}, {"message", v.message}});
    }
    for (const Violation& v : validate_numerics(config.numerics)) {
        extra.push_back({{"code", v.code}, {"message", v.message}});
    }
    body["contract_numerics_violations"] = extra;
    const bool ok = market_report.valid() && extra.empty();
    body["valid"] = ok;
    emit(config, "validate", body, opts);
    return ok ? 0 : 1;
}

int cmd_price(const CommonOpts& opts) {
    const RunConfig config = load_and_validate(opts);
    Json body;
    if (opts.engine == "pde") {
        const PdeSolution sol =
            solve_pde_system(config.market, config.contract, pde_grid(config.numerics));
        const double spot = config.market.S0[0];
        body = Json{{"p_lower", sol.value(PdeField::UMinus, 0.0, spot)},
                    {"p_upper", sol.value(PdeField::UPlus, 0.0, spot)},
                    {"se_lower", 0.0},
                    {"se_upper", 0.0},
                    {"engine", "pde"}};
    } else if (opts.engine == "lsmc") {
        const PriceBounds bounds = price_bounds(config.market, config.contract, config.numerics);
        body = to_json(bounds);
        body["engine"] = "lsmc";
    } else {
        throw ConfigError("unknown engine: " + opts.engine + " (expected lsmc or pde)");
    }
    emit(config, "price", body, opts);
    return 0;
}

int cmd_xva(const CommonOpts& opts) {
    const RunConfig config = load_and_validate(opts);
    XVAReport report = compute_xva(config.market, config.contract, config.numerics);
    const ClassicalXva classical =
        compute_classical_xva(config.market, config.contract, config.numerics);
    report.dva = classical.dva;
    report.se_dva = classical.se_dva;
    report.cva = classical.cva;
    report.se_cva = classical.se_cva;
    report.fva = classical.fva;
    report.se_fva = classical.se_fva;
    report.colva_plus = classical.colva_plus;
    report.se_colva_plus = classical.se_colva_plus;
    report.colva_minus = classical.colva_minus;
    report.se_colva_minus = classical.se_colva_minus;
    const TelescopingReport telescoping =
        telescoping_check(config.market, config.contract, config.numerics);

    Json body = to_json(report);
    body["fva_minus_va3"] = report.fva - report.va3; // the two conventions compared
    body["telescoping"] = to_json(telescoping);
    emit(config, "xva", body, opts, xva_csv(report));
    return 0;
}

int cmd_check_noarb(const CommonOpts& opts) {
    const RunConfig config = load_and_validate(opts);
    const std::vector<double> grid =
        uniform_grid(config.contract.T, config.numerics.n_steps);
    const NoArbReport report = check_noarb(config.market, grid);
    emit(config, "check-noarb", to_json(report), opts, noarb_csv(report));
    return report.all_pass ? 0 : 1;
}

int cmd_ordering(const CommonOpts& opts) {
    const RunConfig config = load_and_validate(opts);
    const OrderingReport report =
        ordering_check(config.market, config.contract, config.numerics);
    emit(config, "ordering", to_json(report), opts, ordering_csv(report));
    return report.chain_ok ? 0 : 1;
}

int cmd_sweep(const CommonOpts& opts, const std::vector<double>& eps_list, int order) {
    const RunConfig config = load_and_validate(opts);
    if (eps_list.empty()) throw ConfigError("sweep: --eps list must not be empty");
    const SweepEngine engine = opts.engine == "pde" ? SweepEngine::Pde : SweepEngine::Lsmc;
    const SweepResult result = epsilon_sweep(config.market, config.contract, eps_list, order,
                                             engine, config.numerics);
    emit(config, "sweep", to_json(result), opts, sweep_csv(result));
    return 0;
}

int cmd_replicate(const CommonOpts& opts, int eval_paths, const std::string& side_name) {
    const RunConfig config = load_and_validate(opts);
    const Side side = side_name == "buyer" ? Side::Minus : Side::Plus;
    HedgeEngine engine = HedgeEngine::Auto;
    if (opts.engine == "pde") engine = HedgeEngine::Pde;
    if (opts.engine == "ode") engine = HedgeEngine::Ode;
    if (opts.engine == "lsmc") engine = HedgeEngine::Lsmc;
    const ReplicationReport report =
        replicate(config.market, config.contract, config.numerics, eval_paths, side, engine);
    emit(config, "replicate", to_json(report), opts, replicate_csv(report));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bilateral-default derivative pricing with asymmetric rates"};
    app.set_version_flag("--version", XVABSDE_VERSION);
    app.require_subcommand(1);

    CommonOpts opts;
    std::vector<double> eps_list;
    int order = 0;
    int eval_paths = 1000;
    std::string side_name = "seller";

    auto add_common = [&](CLI::App* cmd, bool with_engine = true) {
        cmd->add_option("-c,--config", opts.config_path, "JSON run configuration")->required();
        cmd->add_option("--seed", opts.seed, "override numerics.seed");
        cmd->add_option("--paths", opts.paths, "override numerics.n_paths");
        cmd->add_option("--steps", opts.steps, "override numerics.n_steps");
        cmd->add_option("-o,--out", opts.out_path, "write the JSON report to a file");
        cmd->add_option("--csv", opts.csv_path, "write the CSV report to a file");
        if (with_engine) cmd->add_option("--engine", opts.engine, "lsmc | pde (replicate also: ode, auto)");
    };

    CLI::App* validate = app.add_subcommand("validate", "check a configuration");
    add_common(validate, false);
    CLI::App* price = app.add_subcommand("price", "super/subhedging price interval");
    add_common(price);
    CLI::App* xva = app.add_subcommand("xva", "zeroth-order decomposition and classical terms");
    add_common(xva, false);
    CLI::App* noarb = app.add_subcommand("check-noarb", "sufficient no-arbitrage conditions");
    add_common(noarb, false);
    CLI::App* ordering = app.add_subcommand("ordering", "value ordering chain");
    add_common(ordering, false);
    CLI::App* sweep = app.add_subcommand("sweep", "spread-perturbation convergence study");
    add_common(sweep);
    sweep->add_option("--eps", eps_list, "decreasing spread values")->delimiter(',');
    sweep->add_option("--order", order, "approximation order (0 or 1)");
    CLI::App* replicate_cmd = app.add_subcommand("replicate", "terminal hedging error study");
    add_common(replicate_cmd);
    replicate_cmd->add_option("--eval-paths", eval_paths, "number of fresh evaluation paths");
    replicate_cmd->add_option("--side", side_name, "seller | buyer");

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) return cmd_validate(opts);
        if (price->parsed()) return cmd_price(opts);
        if (xva->parsed()) return cmd_xva(opts);
        if (noarb->parsed()) return cmd_check_noarb(opts);
        if (ordering->parsed()) return cmd_ordering(opts);
        if (sweep->parsed()) return cmd_sweep(opts, eps_list, order);
        if (replicate_cmd->parsed()) return cmd_replicate(opts, eval_paths, side_name);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}

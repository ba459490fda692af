#include "xvabsde/json_io.hpp"

#include <fstream>
#include <sstream>

#include "xvabsde/errors.hpp"
#include "xvabsde/version.hpp"

namespace xvabsde {

namespace {

Json schedule_to_json(const ScalarSchedule& s) {
    return Json{{"breakpoints", s.breakpoints}, {"values", s.values}};
}

Json schedule_to_json(const RateSchedule& s) {
    Json values = Json::array();
    for (const RatePair& p : s.values) {
        values.push_back({{"r_minus", p.r_minus}, {"r_plus", p.r_plus}});
    }
    return Json{{"breakpoints", s.breakpoints}, {"values", values}};
}

Json schedule_to_json(const RowSchedule& s) {
    return Json{{"breakpoints", s.breakpoints}, {"values", s.values}};
}

Json schedule_to_json(const MatrixSchedule& s) {
    Json values = Json::array();
    for (const Mat& m : s.values) {
        Json rows = Json::array();
        for (std::size_t i = 0; i < m.rows; ++i) {
            Json row = Json::array();
            for (std::size_t j = 0; j < m.cols; ++j) row.push_back(m(i, j));
            rows.push_back(row);
        }
        values.push_back(rows);
    }
    return Json{{"breakpoints", s.breakpoints}, {"values", values}};
}

template <class T, class Fn>
Schedule<T> schedule_from_json(const Json& j, Fn&& value_from) {
    Schedule<T> out;
    out.breakpoints = j.at("breakpoints").get<std::vector<double>>();
    for (const Json& v : j.at("values")) out.values.push_back(value_from(v));
    if (out.breakpoints.size() != out.values.size()) {
        throw ConfigError("schedule: breakpoints and values must have equal length");
    }
    return out;
}

ScalarSchedule scalar_schedule(const Json& j) {
    return schedule_from_json<double>(j, [](const Json& v) { return v.get<double>(); });
}

RateSchedule pair_schedule(const Json& j) {
    return schedule_from_json<RatePair>(j, [](const Json& v) {
        return RatePair{v.at("r_minus").get<double>(), v.at("r_plus").get<double>()};
    });
}

RowSchedule row_schedule(const Json& j) {
    return schedule_from_json<std::vector<double>>(
        j, [](const Json& v) { return v.get<std::vector<double>>(); });
}

MatrixSchedule matrix_schedule(const Json& j) {
    return schedule_from_json<Mat>(j, [](const Json& v) {
        const std::size_t rows = v.size();
        Mat m(rows, rows == 0 ? 0 : v.at(0).size());
        for (std::size_t i = 0; i < rows; ++i) {
            const auto row = v.at(i).get<std::vector<double>>();
            if (row.size() != m.cols) throw ConfigError("sigma: ragged matrix value");
            for (std::size_t jj = 0; jj < row.size(); ++jj) m(i, jj) = row[jj];
        }
        return m;
    });
}

} // namespace

Json to_json(const MarketSpec& m) {
    return Json{{"n", m.n},
                {"r_D", schedule_to_json(m.r_D)},
                {"r_f", schedule_to_json(m.r_f)},
                {"r_r", schedule_to_json(m.r_r)},
                {"r_col", schedule_to_json(m.r_col)},
                {"h1", schedule_to_json(m.h1)},
                {"h2", schedule_to_json(m.h2)},
                {"sigma", schedule_to_json(m.sigma)},
                {"sigma_I", schedule_to_json(m.sigma_I)},
                {"sigma_C", schedule_to_json(m.sigma_C)},
                {"S0", m.S0},
                {"PI0", m.PI0},
                {"PC0", m.PC0},
                {"alpha", m.alpha}};
}

Json to_json(const ContractSpec& c) {
    Json payoff = std::visit(
        [](const auto& p) -> Json {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, CallPayoff>) {
                return Json{{"type", "call"}, {"strike", p.strike}};
            } else if constexpr (std::is_same_v<T, PutPayoff>) {
                return Json{{"type", "put"}, {"strike", p.strike}};
            } else if constexpr (std::is_same_v<T, ForwardPayoff>) {
                return Json{{"type", "forward"}, {"strike", p.strike}};
            } else if constexpr (std::is_same_v<T, ConstantPayoff>) {
                return Json{{"type", "constant"}, {"value", p.value}};
            } else {
                return Json{{"type", "basket"}, {"weights", p.weights}, {"strike", p.strike}};
            }
        },
        c.payoff);
    return Json{{"T", c.T},
                {"payoff", payoff},
                {"closeout",
                 Json{{"L_I", c.closeout.L_I}, {"L_C", c.closeout.L_C},
                      {"alpha", c.closeout.alpha}}}};
}

Json to_json(const NumericsConfig& n) {
    return Json{{"n_steps", n.n_steps},
                {"n_paths", n.n_paths},
                {"basis_degree", n.basis_degree},
                {"picard_iters", n.picard_iters},
                {"picard_tol", n.picard_tol},
                {"seed", n.seed},
                {"norm_beta", n.norm_beta},
                {"pde",
                 Json{{"n_space", n.pde.n_space}, {"x_width", n.pde.x_width},
                      {"theta", n.pde.theta}}}};
}

Json to_json(const RunConfig& c) {
    return Json{{"schema_version", c.schema_version},
                {"market", to_json(c.market)},
                {"contract", to_json(c.contract)},
                {"numerics", to_json(c.numerics)}};
}

MarketSpec market_from_json(const Json& j) {
    MarketSpec m;
    m.n = j.at("n").get<int>();
    m.r_D = scalar_schedule(j.at("r_D"));
    m.r_f = pair_schedule(j.at("r_f"));
    m.r_r = pair_schedule(j.at("r_r"));
    m.r_col = pair_schedule(j.at("r_col"));
    m.h1 = scalar_schedule(j.at("h1"));
    m.h2 = scalar_schedule(j.at("h2"));
    m.sigma = matrix_schedule(j.at("sigma"));
    m.sigma_I = row_schedule(j.at("sigma_I"));
    m.sigma_C = row_schedule(j.at("sigma_C"));
    m.S0 = j.at("S0").get<std::vector<double>>();
    m.PI0 = j.at("PI0").get<double>();
    m.PC0 = j.at("PC0").get<double>();
    m.alpha = j.at("alpha").get<double>();
    return m;
}

ContractSpec contract_from_json(const Json& j) {
    ContractSpec c;
    c.T = j.at("T").get<double>();
    const Json& p = j.at("payoff");
    const std::string type = p.at("type").get<std::string>();
    if (type == "call") {
        c.payoff = CallPayoff{p.at("strike").get<double>()};
    } else if (type == "put") {
        c.payoff = PutPayoff{p.at("strike").get<double>()};
    } else if (type == "forward") {
        c.payoff = ForwardPayoff{p.at("strike").get<double>()};
    } else if (type == "constant") {
        c.payoff = ConstantPayoff{p.at("value").get<double>()};
    } else if (type == "basket") {
        c.payoff = BasketPayoff{p.at("weights").get<std::vector<double>>(),
                                p.at("strike").get<double>()};
    } else {
        throw ConfigError("unknown payoff type: " + type);
    }
    const Json& co = j.at("closeout");
    c.closeout.L_I = co.at("L_I").get<double>();
    c.closeout.L_C = co.at("L_C").get<double>();
    c.closeout.alpha = co.at("alpha").get<double>();
    return c;
}

NumericsConfig numerics_from_json(const Json& j) {
    NumericsConfig n;
    n.n_steps = j.value("n_steps", n.n_steps);
    n.n_paths = j.value("n_paths", n.n_paths);
    n.basis_degree = j.value("basis_degree", n.basis_degree);
    n.picard_iters = j.value("picard_iters", n.picard_iters);
    n.picard_tol = j.value("picard_tol", n.picard_tol);
    n.seed = j.value("seed", n.seed);
    n.norm_beta = j.value("norm_beta", n.norm_beta);
    if (j.contains("pde")) {
        const Json& p = j.at("pde");
        n.pde.n_space = p.value("n_space", n.pde.n_space);
        n.pde.x_width = p.value("x_width", n.pde.x_width);
        n.pde.theta = p.value("theta", n.pde.theta);
    }
    return n;
}

RunConfig parse_run_config(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    RunConfig config;
    try {
        config.schema_version = j.value("schema_version", std::string("1"));
        config.market = market_from_json(j.at("market"));
        config.contract = contract_from_json(j.at("contract"));
        if (j.contains("numerics")) config.numerics = numerics_from_json(j.at("numerics"));
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("config schema error: ") + e.what());
    }
    if (config.contract.closeout.alpha != config.market.alpha) {
        throw ConfigError("config: closeout.alpha must equal market.alpha");
    }
    return config;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_run_config(buffer.str());
}

Json to_json(const ValidationReport& report) {
    Json violations = Json::array();
    for (const Violation& v : report.violations) {
        violations.push_back({{"code", v.code}, {"message", v.message}});
    }
    return Json{{"valid", report.valid()}, {"violations", violations},
                {"flag_44", report.flag_44}};
}

Json to_json(const PriceBounds& b) {
    return Json{{"p_lower", b.p_lower},
                {"p_upper", b.p_upper},
                {"se_lower", b.se_lower},
                {"se_upper", b.se_upper}};
}

Json to_json(const XVAReport& r) {
    return Json{{"v0", r.v0},
                {"se_v0", r.se_v0},
                {"va1", r.va1},
                {"se_va1", r.se_va1},
                {"va2", r.va2},
                {"se_va2", r.se_va2},
                {"va3", r.va3},
                {"se_va3", r.se_va3},
                {"va4", r.va4},
                {"se_va4", r.se_va4},
                {"va5_plus", r.va5_plus},
                {"se_va5_plus", r.se_va5_plus},
                {"va5_minus", r.va5_minus},
                {"se_va5_minus", r.se_va5_minus},
                {"total_plus", r.total_plus},
                {"se_total_plus", r.se_total_plus},
                {"total_minus", r.total_minus},
                {"se_total_minus", r.se_total_minus},
                {"dva", r.dva},
                {"se_dva", r.se_dva},
                {"cva", r.cva},
                {"se_cva", r.se_cva},
                {"fva", r.fva},
                {"se_fva", r.se_fva},
                {"colva_plus", r.colva_plus},
                {"se_colva_plus", r.se_colva_plus},
                {"colva_minus", r.colva_minus},
                {"se_colva_minus", r.se_colva_minus},
                {"regression_fallback", r.regression_fallback}};
}

Json to_json(const ClassicalXva& x) {
    return Json{{"dva", x.dva},
                {"se_dva", x.se_dva},
                {"cva", x.cva},
                {"se_cva", x.se_cva},
                {"fva", x.fva},
                {"se_fva", x.se_fva},
                {"colva_plus", x.colva_plus},
                {"se_colva_plus", x.se_colva_plus},
                {"colva_minus", x.colva_minus},
                {"se_colva_minus", x.se_colva_minus}};
}

Json to_json(const TelescopingReport& r) {
    return Json{{"residual", r.residual},   {"se_residual", r.se_residual},
                {"va_sum_hat", r.va_sum_hat}, {"va_sum_bar", r.va_sum_bar},
                {"v_bar0", r.v_bar0},       {"v0", r.v0}};
}

Json to_json(const GirsanovReport& r) {
    return Json{{"direct_spot", r.direct_spot},
                {"se_direct_spot", r.se_direct_spot},
                {"weighted_spot", r.weighted_spot},
                {"se_weighted_spot", r.se_weighted_spot},
                {"direct_payoff", r.direct_payoff},
                {"se_direct_payoff", r.se_direct_payoff},
                {"weighted_payoff", r.weighted_payoff},
                {"se_weighted_payoff", r.se_weighted_payoff},
                {"diff_spot", r.diff_spot},
                {"combined_se_spot", r.combined_se_spot},
                {"diff_payoff", r.diff_payoff},
                {"combined_se_payoff", r.combined_se_payoff}};
}

Json to_json(const NoArbReport& r) {
    Json conditions = Json::array();
    for (const NoArbCondition& c : r.conditions) {
        conditions.push_back(
            {{"id", c.id}, {"worst_margin", c.worst_margin}, {"pass", c.pass}});
    }
    return Json{{"conditions", conditions}, {"all_pass", r.all_pass}};
}

Json to_json(const OrderingReport& r) {
    Json links = Json::array();
    for (const OrderingLink& l : r.links) {
        links.push_back({{"name", l.name}, {"gap", l.gap}, {"se", l.se}, {"pass", l.pass}});
    }
    return Json{{"y_minus", r.y_minus},
                {"se_y_minus", r.se_y_minus},
                {"y0_minus", r.y0_minus},
                {"se_y0_minus", r.se_y0_minus},
                {"y0_plus", r.y0_plus},
                {"se_y0_plus", r.se_y0_plus},
                {"y_plus", r.y_plus},
                {"se_y_plus", r.se_y_plus},
                {"links", links},
                {"chain_ok", r.chain_ok},
                {"first_violation", r.first_violation}};
}

Json to_json(const SweepResult& r) {
    Json points = Json::array();
    for (const SweepPoint& p : r.points) {
        points.push_back({{"eps", p.eps},
                          {"err_plus", p.err_plus},
                          {"err_minus", p.err_minus},
                          {"err_total", p.err_total},
                          {"excluded", p.excluded}});
    }
    return Json{{"points", points},
                {"slope", r.slope},
                {"order", r.order},
                {"engine", r.engine == SweepEngine::Pde ? "pde" : "lsmc"},
                {"monotone_warning", r.monotone_warning}};
}

Json to_json(const ReplicationReport& r) {
    return Json{{"n_eval_paths", r.n_eval_paths},
                {"y_start", r.y_start},
                {"notional", r.notional},
                {"mean_abs_terminal_error", r.mean_abs_terminal_error},
                {"rel_error", r.rel_error},
                {"error_quantiles", r.error_quantiles}};
}

Json to_json(const MartingaleReport& r) {
    return Json{{"block_drifts", r.block_drifts},
                {"block_ses", r.block_ses},
                {"max_abs_drift", r.max_abs_drift},
                {"se_at_max", r.se_at_max},
                {"within_3se", r.within_3se}};
}

Json to_json(const RefineStudy& s) {
    Json rows = Json::array();
    for (const RefineRow& r : s.rows) {
        rows.push_back({{"n_time", r.n_time},
                        {"n_space", r.n_space},
                        {"u_plus0", r.u_plus0},
                        {"u_minus0", r.u_minus0}});
    }
    return Json{{"rows", rows}, {"order_plus", s.order_plus}, {"order_minus", s.order_minus}};
}

Json report_envelope(const RunConfig& config, const std::string& command, Json body) {
    return Json{{"version", version()},
                {"command", command},
                {"config", to_json(config)},
                {"report", std::move(body)}};
}

namespace {

std::string csv_number(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

} // namespace

std::string xva_csv(const XVAReport& r) {
    std::ostringstream os;
    os << "v0,se_v0,va1,se_va1,va2,se_va2,va3,se_va3,va4,se_va4,"
          "va5_plus,se_va5_plus,va5_minus,se_va5_minus,total_plus,se_total_plus,"
          "total_minus,se_total_minus,dva,se_dva,cva,se_cva,fva,se_fva,"
          "colva_plus,se_colva_plus,colva_minus,se_colva_minus\n";
    const double vals[] = {r.v0,          r.se_v0,          r.va1,        r.se_va1,
                           r.va2,         r.se_va2,         r.va3,        r.se_va3,
                           r.va4,         r.se_va4,         r.va5_plus,   r.se_va5_plus,
                           r.va5_minus,   r.se_va5_minus,   r.total_plus, r.se_total_plus,
                           r.total_minus, r.se_total_minus, r.dva,        r.se_dva,
                           r.cva,         r.se_cva,         r.fva,        r.se_fva,
                           r.colva_plus,  r.se_colva_plus,  r.colva_minus, r.se_colva_minus};
    for (std::size_t i = 0; i < std::size(vals); ++i) {
        os << (i ? "," : "") << csv_number(vals[i]);
    }
    os << "\n";
    return os.str();
}

std::string noarb_csv(const NoArbReport& r) {
    std::ostringstream os;
    os << "condition,worst_margin,pass\n";
    for (const NoArbCondition& c : r.conditions) {
        os << c.id << "," << csv_number(c.worst_margin) << "," << (c.pass ? 1 : 0) << "\n";
    }
    return os.str();
}

std::string ordering_csv(const OrderingReport& r) {
    std::ostringstream os;
    os << "link,gap,se,pass\n";
    for (const OrderingLink& l : r.links) {
        os << l.name << "," << csv_number(l.gap) << "," << csv_number(l.se) << ","
           << (l.pass ? 1 : 0) << "\n";
    }
    return os.str();
}

std::string sweep_csv(const SweepResult& r) {
    std::ostringstream os;
    os << "eps,err_plus,err_minus,err_total,excluded\n";
    for (const SweepPoint& p : r.points) {
        os << csv_number(p.eps) << "," << csv_number(p.err_plus) << ","
           << csv_number(p.err_minus) << "," << csv_number(p.err_total) << ","
           << (p.excluded ? 1 : 0) << "\n";
    }
    return os.str();
}

std::string replicate_csv(const ReplicationReport& r) {
    std::ostringstream os;
    os << "n_eval_paths,y_start,notional,mean_abs_terminal_error,rel_error,"
          "q05,q25,q50,q75,q95\n";
    os << r.n_eval_paths << "," << csv_number(r.y_start) << "," << csv_number(r.notional) << ","
       << csv_number(r.mean_abs_terminal_error) << "," << csv_number(r.rel_error);
    for (double q : r.error_quantiles) os << "," << csv_number(q);
    os << "\n";
    return os.str();
}

} // namespace xvabsde

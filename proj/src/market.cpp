#include "xvabsde/market.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "xvabsde/errors.hpp"

namespace xvabsde {

namespace {

void append_breakpoints(std::vector<double>& out, const std::vector<double>& bp) {
    out.insert(out.end(), bp.begin(), bp.end());
}

bool all_finite(std::span<const double> xs) {
    return std::all_of(xs.begin(), xs.end(), [](double x) { return std::isfinite(x); });
}

std::string fmt_time(double t) {
    std::ostringstream os;
    os << t;
    return os.str();
}

template <class T, class Fn>
bool schedule_shape_ok(const Schedule<T>& s, Fn&& value_ok) {
    if (s.values.empty() || s.breakpoints.size() != s.values.size()) return false;
    if (s.breakpoints.front() != 0.0) return false;
    for (std::size_t i = 1; i < s.breakpoints.size(); ++i) {
        if (!(s.breakpoints[i] > s.breakpoints[i - 1])) return false;
        if (!std::isfinite(s.breakpoints[i])) return false;
    }
    for (const T& v : s.values) {
        if (!value_ok(v)) return false;
    }
    return true;
}

} // namespace

std::vector<double> MarketSpec::all_breakpoints() const {
    std::vector<double> out;
    append_breakpoints(out, r_D.breakpoints);
    append_breakpoints(out, r_f.breakpoints);
    append_breakpoints(out, r_r.breakpoints);
    append_breakpoints(out, r_col.breakpoints);
    append_breakpoints(out, h1.breakpoints);
    append_breakpoints(out, h2.breakpoints);
    append_breakpoints(out, sigma.breakpoints);
    append_breakpoints(out, sigma_I.breakpoints);
    append_breakpoints(out, sigma_C.breakpoints);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::pair<double, double> closeout_eval(const CloseoutSpec& c, double v) {
    const double exposure = v - c.alpha * v;
    const double phi1 = v - c.L_I * std::max(exposure, 0.0);
    const double phi2 = v + c.L_C * std::max(-exposure, 0.0);
    return {phi1, phi2};
}

double payoff_eval(const PayoffSpec& payoff, std::span<const double> s) {
    return std::visit(
        [&](const auto& p) -> double {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, CallPayoff>) {
                return std::max(s[0] - p.strike, 0.0);
            } else if constexpr (std::is_same_v<T, PutPayoff>) {
                return std::max(p.strike - s[0], 0.0);
            } else if constexpr (std::is_same_v<T, ForwardPayoff>) {
                return s[0] - p.strike;
            } else if constexpr (std::is_same_v<T, ConstantPayoff>) {
                return p.value;
            } else {
                double acc = 0.0;
                for (std::size_t i = 0; i < p.weights.size(); ++i) acc += p.weights[i] * s[i];
                return std::max(acc - p.strike, 0.0);
            }
        },
        payoff);
}

bool payoff_has_closed_form(const PayoffSpec& payoff, int n_assets) {
    if (std::holds_alternative<BasketPayoff>(payoff)) {
        const auto& b = std::get<BasketPayoff>(payoff);
        return n_assets == 1 && b.weights.size() == 1 && b.weights[0] > 0.0;
    }
    return true;
}

PayoffSpec payoff_scaled(const PayoffSpec& payoff, double k) {
    if (!(k > 0.0)) throw ConfigError("payoff_scaled: scale must be positive");
    return std::visit(
        [&](const auto& p) -> PayoffSpec {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, CallPayoff>) {
                return BasketPayoff{{k}, k * p.strike};
            } else if constexpr (std::is_same_v<T, ConstantPayoff>) {
                return ConstantPayoff{k * p.value};
            } else if constexpr (std::is_same_v<T, BasketPayoff>) {
                BasketPayoff scaled = p;
                for (double& w : scaled.weights) w *= k;
                scaled.strike *= k;
                return scaled;
            } else {
                throw ConfigError("payoff_scaled: " + payoff_kind(payoff) +
                                  " cannot be scaled within the payoff menu");
            }
        },
        payoff);
}

std::string payoff_kind(const PayoffSpec& payoff) {
    return std::visit(
        [](const auto& p) -> std::string {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, CallPayoff>) return "call";
            if constexpr (std::is_same_v<T, PutPayoff>) return "put";
            if constexpr (std::is_same_v<T, ForwardPayoff>) return "forward";
            if constexpr (std::is_same_v<T, ConstantPayoff>) return "constant";
            return "basket";
        },
        payoff);
}

double contract_notional(const ContractSpec& contract, const MarketSpec& market) {
    const double spot = market.S0.empty() ? 1.0 : market.S0[0];
    return std::visit(
        [&](const auto& p) -> double {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, ConstantPayoff>) {
                return std::max(std::abs(p.value), 1.0);
            } else if constexpr (std::is_same_v<T, BasketPayoff>) {
                double basket0 = 0.0;
                for (std::size_t i = 0; i < p.weights.size() && i < market.S0.size(); ++i) {
                    basket0 += p.weights[i] * market.S0[i];
                }
                return std::max({std::abs(p.strike), std::abs(basket0), 1.0});
            } else {
                return std::max({std::abs(p.strike), spot, 1.0});
            }
        },
        contract.payoff);
}

ValidationReport validate_market(const MarketSpec& market, double sigma_min_singular) {
    ValidationReport report;
    auto add = [&](std::string code, std::string message) {
        report.violations.push_back({std::move(code), std::move(message)});
    };

    if (market.n < 1) add("n_assets", "asset count must be at least 1");
    const auto scalar_ok = [](double v) { return std::isfinite(v); };
    const auto pair_ok = [](const RatePair& p) {
        return std::isfinite(p.r_minus) && std::isfinite(p.r_plus);
    };
    const auto row_ok = [&](const std::vector<double>& r) {
        return r.size() == static_cast<std::size_t>(market.n) && all_finite(r);
    };
    const auto mat_ok = [&](const Mat& m) {
        return m.rows == static_cast<std::size_t>(market.n) && m.cols == m.rows &&
               all_finite(m.data);
    };

    struct NamedScalar {
        const char* name;
        const ScalarSchedule* s;
    };
    for (const auto& [name, s] : {NamedScalar{"r_D", &market.r_D}, NamedScalar{"h1", &market.h1},
                                  NamedScalar{"h2", &market.h2}}) {
        if (!schedule_shape_ok(*s, scalar_ok)) {
            add("schedule_shape", std::string(name) + " schedule malformed or non-finite");
        }
    }
    struct NamedPair {
        const char* name;
        const RateSchedule* s;
    };
    for (const auto& [name, s] :
         {NamedPair{"r_f", &market.r_f}, NamedPair{"r_r", &market.r_r},
          NamedPair{"r_col", &market.r_col}}) {
        if (!schedule_shape_ok(*s, pair_ok)) {
            add("schedule_shape", std::string(name) + " schedule malformed or non-finite");
        }
    }
    if (!schedule_shape_ok(market.sigma, mat_ok)) {
        add("schedule_shape", "sigma schedule malformed, wrong shape, or non-finite");
    }
    if (!schedule_shape_ok(market.sigma_I, row_ok)) {
        add("schedule_shape", "sigma_I schedule malformed, wrong shape, or non-finite");
    }
    if (!schedule_shape_ok(market.sigma_C, row_ok)) {
        add("schedule_shape", "sigma_C schedule malformed, wrong shape, or non-finite");
    }
    if (!report.violations.empty()) return report; // shape errors mask the value checks

    for (std::size_t k = 0; k < market.r_f.values.size(); ++k) {
        if (market.r_f.values[k].half_spread() < 0.0) {
            add("funding_spread", "funding spread negative (borrow rate below lend rate) from t=" +
                                      fmt_time(market.r_f.breakpoints[k]));
        }
    }
    for (std::size_t k = 0; k < market.r_r.values.size(); ++k) {
        if (market.r_r.values[k].half_spread() < 0.0) {
            add("repo_spread", "repo spread negative (borrow rate below lend rate) from t=" +
                                   fmt_time(market.r_r.breakpoints[k]));
        }
    }
    for (std::size_t k = 0; k < market.h1.values.size(); ++k) {
        if (market.h1.values[k] < 0.0) {
            add("hazard_negative", "h1 negative from t=" + fmt_time(market.h1.breakpoints[k]));
        }
    }
    for (std::size_t k = 0; k < market.h2.values.size(); ++k) {
        if (market.h2.values[k] < 0.0) {
            add("hazard_negative", "h2 negative from t=" + fmt_time(market.h2.breakpoints[k]));
        }
    }
    for (std::size_t k = 0; k < market.sigma.values.size(); ++k) {
        if (min_singular_value(market.sigma.values[k]) <= sigma_min_singular) {
            add("sigma_singular",
                "sigma not invertible at t=" + fmt_time(market.sigma.breakpoints[k]));
        }
    }
    if (!(market.alpha >= 0.0 && market.alpha <= 1.0)) {
        add("alpha_range", "alpha outside [0, 1]");
    }
    if (market.S0.size() != static_cast<std::size_t>(market.n) ||
        std::any_of(market.S0.begin(), market.S0.end(),
                    [](double s) { return !(s > 0.0) || !std::isfinite(s); })) {
        add("initial_prices", "S0 must hold n strictly positive finite prices");
    }
    if (!(market.PI0 > 0.0) || !(market.PC0 > 0.0)) {
        add("initial_prices", "PI0 and PC0 must be strictly positive");
    }

    report.flag_44 = std::all_of(market.r_col.values.begin(), market.r_col.values.end(),
                                 [](const RatePair& p) { return p.r_minus >= p.r_plus; });
    return report;
}

std::vector<Violation> validate_contract(const ContractSpec& contract, const MarketSpec& market) {
    std::vector<Violation> out;
    if (!(contract.T > 0.0) || !std::isfinite(contract.T)) {
        out.push_back({"maturity", "maturity must be positive and finite"});
    }
    const auto& c = contract.closeout;
    if (!(c.L_I >= 0.0 && c.L_I <= 1.0 && c.L_C >= 0.0 && c.L_C <= 1.0)) {
        out.push_back({"loss_rates", "loss rates must lie in [0, 1]"});
    }
    if (!(c.alpha >= 0.0 && c.alpha <= 1.0)) {
        out.push_back({"alpha_range", "close-out alpha outside [0, 1]"});
    }
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, BasketPayoff>) {
                if (p.weights.size() != static_cast<std::size_t>(market.n)) {
                    out.push_back({"basket_weights", "basket weights length must equal n"});
                }
                if (!all_finite(p.weights) || !std::isfinite(p.strike)) {
                    out.push_back({"payoff_params", "payoff parameters must be finite"});
                }
            } else if constexpr (std::is_same_v<T, ConstantPayoff>) {
                if (!std::isfinite(p.value)) {
                    out.push_back({"payoff_params", "payoff parameters must be finite"});
                }
            } else {
                if (!std::isfinite(p.strike)) {
                    out.push_back({"payoff_params", "payoff parameters must be finite"});
                }
            }
        },
        contract.payoff);
    return out;
}

std::vector<Violation> validate_numerics(const NumericsConfig& numerics) {
    std::vector<Violation> out;
    if (numerics.n_steps < 2) out.push_back({"n_steps", "n_steps must be at least 2"});
    if (numerics.n_paths < 2) out.push_back({"n_paths", "n_paths must be at least 2"});
    if (numerics.picard_iters < 1) out.push_back({"picard_iters", "picard_iters must be >= 1"});
    if (numerics.basis_degree < 0) out.push_back({"basis_degree", "basis_degree must be >= 0"});
    if (!(numerics.pde.theta >= 0.0 && numerics.pde.theta <= 1.0)) {
        out.push_back({"theta", "theta must lie in [0, 1]"});
    }
    if (numerics.pde.n_space < 2) out.push_back({"n_space", "pde.n_space must be at least 2"});
    if (!(numerics.pde.x_width > 0.0)) out.push_back({"x_width", "pde.x_width must be positive"});
    return out;
}

MarketSpec reference_market() {
    MarketSpec m;
    m.n = 1;
    m.r_D = ScalarSchedule::constant(0.01);
    m.r_f = RateSchedule::constant({0.035, 0.025});
    m.r_r = RateSchedule::constant({0.025, 0.015});
    m.r_col = RateSchedule::constant({0.012, 0.008});
    m.h1 = ScalarSchedule::constant(0.05);
    m.h2 = ScalarSchedule::constant(0.10);
    m.sigma = MatrixSchedule::constant(Mat::scalar(0.2));
    m.sigma_I = RowSchedule::constant({0.1});
    m.sigma_C = RowSchedule::constant({0.15});
    m.S0 = {100.0};
    m.PI0 = 1.0;
    m.PC0 = 1.0;
    m.alpha = 1.0;
    return m;
}

MarketSpec one_rate_market(double r, double sigma, double h1, double h2) {
    MarketSpec m;
    m.n = 1;
    m.r_D = ScalarSchedule::constant(r);
    m.r_f = RateSchedule::constant({r, r});
    m.r_r = RateSchedule::constant({r, r});
    m.r_col = RateSchedule::constant({r, r});
    m.h1 = ScalarSchedule::constant(h1);
    m.h2 = ScalarSchedule::constant(h2);
    m.sigma = MatrixSchedule::constant(Mat::scalar(sigma));
    m.sigma_I = RowSchedule::constant({0.1});
    m.sigma_C = RowSchedule::constant({0.15});
    m.S0 = {100.0};
    m.PI0 = 1.0;
    m.PC0 = 1.0;
    m.alpha = 1.0;
    return m;
}

} // namespace xvabsde

#include "xvabsde/ode.hpp"

#include <algorithm>
#include <cmath>

#include "xvabsde/errors.hpp"

namespace xvabsde {

namespace {

double constant_payoff_value(const ContractSpec& contract) {
    if (!std::holds_alternative<ConstantPayoff>(contract.payoff)) {
        throw ConfigError("backward ODE requires a constant payoff");
    }
    return std::get<ConstantPayoff>(contract.payoff).value;
}

std::vector<double> ode_grid(const MarketSpec& market, const ContractSpec& contract,
                             const NumericsConfig& numerics) {
    return merge_times(uniform_grid(contract.T, std::max(numerics.n_steps, 2)),
                       market.all_breakpoints());
}

} // namespace

double OdeSolution::value_at(double t) const {
    if (t <= grid.front()) return y.front();
    if (t >= grid.back()) return y.back();
    const auto it = std::upper_bound(grid.begin(), grid.end(), t);
    const std::size_t hi = static_cast<std::size_t>(it - grid.begin());
    const std::size_t lo = hi - 1;
    const double w = (t - grid[lo]) / (grid[hi] - grid[lo]);
    return (1.0 - w) * y[lo] + w * y[hi];
}

OdeSolution solve_reduced_ode(DriverId id, const MarketSpec& market, const ContractSpec& contract,
                              const NumericsConfig& numerics) {
    const double payoff = constant_payoff_value(contract);
    const double T = contract.T;
    const CloseoutSpec closeout = contract.closeout;
    const std::vector<double> empty_z; // scalar equation, integrand identically zero

    OdeSolution sol;
    sol.grid = ode_grid(market, contract, numerics);
    sol.y.assign(sol.grid.size(), 0.0);
    sol.y.back() = payoff;

    auto rhs = [&](double t, double y) {
        const DriverCoeffs c = driver_coeffs(market, t);
        const double vh = payoff * std::exp(-integrate(market.r_D, t, T));
        const auto [p1, p2] = closeout_eval(closeout, vh);
        return reduce_driver(id, c, y, empty_z, vh, p1, p2);
    };

    for (std::size_t i = sol.grid.size() - 1; i-- > 0;) {
        const double t1 = sol.grid[i + 1];
        const double h = t1 - sol.grid[i];
        const double y1 = sol.y[i + 1];
        // backward-in-time RK4: dy/dt = -rhs, stepping from t1 to t1 - h
        const double k1 = rhs(t1, y1);
        const double k2 = rhs(t1 - 0.5 * h, y1 + 0.5 * h * k1);
        const double k3 = rhs(t1 - 0.5 * h, y1 + 0.5 * h * k2);
        const double k4 = rhs(t1 - h, y1 + h * k3);
        sol.y[i] = y1 + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    sol.y0 = sol.y.front();
    return sol;
}

FirstOrderOde solve_first_order_ode(Side side, const MarketSpec& market,
                                    const ContractSpec& contract, const NumericsConfig& numerics,
                                    FirstOrderForm form) {
    const double payoff = constant_payoff_value(contract);
    const double T = contract.T;
    const CloseoutSpec closeout = contract.closeout;
    const std::vector<double> empty_z;
    const DriverId zeroth_id = side == Side::Plus ? DriverId::ZerothPlus : DriverId::ZerothMinus;

    FirstOrderOde out;
    out.zeroth.grid = ode_grid(market, contract, numerics);
    out.first.grid = out.zeroth.grid;
    out.zeroth.y.assign(out.zeroth.grid.size(), 0.0);
    out.first.y.assign(out.first.grid.size(), 0.0);
    out.zeroth.y.back() = payoff;
    out.first.y.back() = 0.0;

    struct Pair {
        double y0, y1;
    };
    auto rhs = [&](double t, Pair p) -> Pair {
        const DriverCoeffs c = driver_coeffs(market, t);
        const double vh = payoff * std::exp(-integrate(market.r_D, t, T));
        const auto [p1, p2] = closeout_eval(closeout, vh);
        Pair d;
        d.y0 = reduce_driver(zeroth_id, c, p.y0, empty_z, vh, p1, p2);
        d.y1 = first_order_homogeneous(c, form, p.y1, empty_z, p1, p2) +
               first_order_source(c, side, p.y0, empty_z, vh, p1, p2);
        return d;
    };

    for (std::size_t i = out.zeroth.grid.size() - 1; i-- > 0;) {
        const double t1 = out.zeroth.grid[i + 1];
        const double h = t1 - out.zeroth.grid[i];
        const Pair y1{out.zeroth.y[i + 1], out.first.y[i + 1]};
        const Pair k1 = rhs(t1, y1);
        const Pair k2 = rhs(t1 - 0.5 * h, {y1.y0 + 0.5 * h * k1.y0, y1.y1 + 0.5 * h * k1.y1});
        const Pair k3 = rhs(t1 - 0.5 * h, {y1.y0 + 0.5 * h * k2.y0, y1.y1 + 0.5 * h * k2.y1});
        const Pair k4 = rhs(t1 - h, {y1.y0 + h * k3.y0, y1.y1 + h * k3.y1});
        out.zeroth.y[i] = y1.y0 + h / 6.0 * (k1.y0 + 2.0 * k2.y0 + 2.0 * k3.y0 + k4.y0);
        out.first.y[i] = y1.y1 + h / 6.0 * (k1.y1 + 2.0 * k2.y1 + 2.0 * k3.y1 + k4.y1);
    }
    out.zeroth.y0 = out.zeroth.y.front();
    out.first.y0 = out.first.y.front();
    return out;
}

} // namespace xvabsde

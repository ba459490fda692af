#include "xvabsde/pde.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <string>

#include "xvabsde/errors.hpp"

namespace xvabsde {

namespace {

// Tridiagonal form of the generator (1/2) sigma^2 d_xx + (r_D - sigma^2/2) d_x
// in log-price; at the boundaries the second derivative is closed with
// linear extrapolation, leaving a one-sided first derivative.
struct StepOp {
    std::vector<double> lower, diag, upper;
};

StepOp make_operator(double sig_sq, double r_d, int n_nodes, double dx) {
    StepOp op;
    op.lower.assign(static_cast<std::size_t>(n_nodes), 0.0);
    op.diag.assign(static_cast<std::size_t>(n_nodes), 0.0);
    op.upper.assign(static_cast<std::size_t>(n_nodes), 0.0);
    const double diff = 0.5 * sig_sq / (dx * dx);
    const double drift = (r_d - 0.5 * sig_sq) / (2.0 * dx);
    for (int j = 1; j + 1 < n_nodes; ++j) {
        op.lower[j] = diff - drift;
        op.diag[j] = -2.0 * diff;
        op.upper[j] = diff + drift;
    }
    const double b_over_dx = (r_d - 0.5 * sig_sq) / dx;
    op.diag[0] = -b_over_dx;
    op.upper[0] = b_over_dx;
    op.lower[n_nodes - 1] = -b_over_dx;
    op.diag[n_nodes - 1] = b_over_dx;
    return op;
}

void apply_operator(const StepOp& op, std::span<const double> y, std::span<double> out) {
    const int n = static_cast<int>(y.size());
    out[0] = op.diag[0] * y[0] + op.upper[0] * y[1];
    for (int j = 1; j + 1 < n; ++j) {
        out[j] = op.lower[j] * y[j - 1] + op.diag[j] * y[j] + op.upper[j] * y[j + 1];
    }
    out[n - 1] = op.lower[n - 1] * y[n - 2] + op.diag[n - 1] * y[n - 1];
}

void thomas_solve(std::vector<double> a, std::vector<double> b, std::vector<double> c,
                  std::vector<double> d, std::span<double> x) {
    const int n = static_cast<int>(b.size());
    for (int j = 1; j < n; ++j) {
        const double w = a[j] / b[j - 1];
        b[j] -= w * c[j - 1];
        d[j] -= w * d[j - 1];
    }
    x[n - 1] = d[n - 1] / b[n - 1];
    for (int j = n - 2; j >= 0; --j) x[j] = (d[j] - c[j] * x[j + 1]) / b[j];
}

void gradient(std::span<const double> y, double dx, std::span<double> out) {
    const int n = static_cast<int>(y.size());
    out[0] = (y[1] - y[0]) / dx;
    for (int j = 1; j + 1 < n; ++j) out[j] = (y[j + 1] - y[j - 1]) / (2.0 * dx);
    out[n - 1] = (y[n - 1] - y[n - 2]) / dx;
}

// Cell average of the terminal payoff over [a, b] in log-price; closed forms
// for the exponential-kink payoffs, nodal value as a fallback.
double payoff_cell_average(const PayoffSpec& payoff, double a, double b) {
    const double len = b - a;
    auto call_integral = [&](double k) {
        // int_a^b (e^x - k)^+ dx
        if (k <= 0.0) return (std::exp(b) - std::exp(a)) - k * len;
        const double xk = std::log(k);
        if (b <= xk) return 0.0;
        const double lo = std::max(a, xk);
        return (std::exp(b) - std::exp(lo)) - k * (b - lo);
    };
    return std::visit(
        [&](const auto& p) -> double {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, ConstantPayoff>) {
                return p.value;
            } else if constexpr (std::is_same_v<T, CallPayoff>) {
                return call_integral(p.strike) / len;
            } else if constexpr (std::is_same_v<T, PutPayoff>) {
                // (k - e^x)^+ = (e^x - k)^+ - (e^x - k)
                return (call_integral(p.strike) -
                        ((std::exp(b) - std::exp(a)) - p.strike * len)) /
                       len;
            } else if constexpr (std::is_same_v<T, ForwardPayoff>) {
                return ((std::exp(b) - std::exp(a)) - p.strike * len) / len;
            } else {
                if (p.weights.size() == 1 && p.weights[0] > 0.0) {
                    return p.weights[0] * call_integral(p.strike / p.weights[0]) / len;
                }
                const double mid[1] = {std::exp(0.5 * (a + b))};
                return payoff_eval(PayoffSpec(p), mid);
            }
        },
        payoff);
}

// driver(t_index, t, y, z, out): fills the per-node source for the slice.
using SliceDriver =
    std::function<void(int, double, std::span<const double>, std::span<const double>,
                       std::span<double>)>;

struct Workspace {
    std::vector<double> z, f_next, f_cur, ly, rhs, iterate, a, b, c, d;
};

// Backward theta-scheme with a per-step fixed-point refinement of the
// driver source; the first two backward steps run fully implicit to damp
// terminal kinks.
std::vector<double> theta_solve(const MarketSpec& market, const std::vector<double>& tg,
                                const std::vector<double>& x, const PdeGridSpec& grid,
                                std::vector<double> terminal, const SliceDriver& driver) {
    const int n_t = static_cast<int>(tg.size());
    const int n_x = static_cast<int>(x.size());
    const double dx = x[1] - x[0];

    std::vector<double> field(static_cast<std::size_t>(n_t) * n_x, 0.0);
    std::copy(terminal.begin(), terminal.end(), field.begin() + static_cast<std::size_t>(n_t - 1) * n_x);

    Workspace w;
    w.z.resize(n_x);
    w.f_next.resize(n_x);
    w.f_cur.resize(n_x);
    w.ly.resize(n_x);
    w.rhs.resize(n_x);
    w.iterate.resize(n_x);
    w.a.resize(n_x);
    w.b.resize(n_x);
    w.c.resize(n_x);
    w.d.resize(n_x);

    for (int k = n_t - 2; k >= 0; --k) {
        const double t0 = tg[k];
        const double t1 = tg[k + 1];
        const double dt = t1 - t0;
        const double theta = (k >= n_t - 3) ? 1.0 : grid.theta; // startup damping

        const Mat sg = market.sigma.at(t0);
        const double sig = sg(0, 0);
        const double sig_sq = sig * sig;
        const double r_d = market.r_D.at(t0);
        const StepOp op = make_operator(sig_sq, r_d, n_x, dx);

        const std::span<const double> y_next{field.data() + static_cast<std::size_t>(k + 1) * n_x,
                                             static_cast<std::size_t>(n_x)};
        std::span<double> y_cur{field.data() + static_cast<std::size_t>(k) * n_x,
                                static_cast<std::size_t>(n_x)};

        const double sig_next = market.sigma.at(t1)(0, 0);
        gradient(y_next, dx, w.z);
        for (int j = 0; j < n_x; ++j) w.z[j] *= sig_next;
        driver(k + 1, t1, y_next, w.z, w.f_next);
        apply_operator(op, y_next, w.ly);

        // explicit portion of the step
        for (int j = 0; j < n_x; ++j) {
            w.rhs[j] = y_next[j] + dt * (1.0 - theta) * (w.ly[j] + w.f_next[j]);
        }

        std::copy(y_next.begin(), y_next.end(), w.iterate.begin());
        for (int it = 0; it < grid.picard_iters; ++it) {
            gradient(w.iterate, dx, w.z);
            for (int j = 0; j < n_x; ++j) w.z[j] *= sig;
            driver(k, t0, w.iterate, w.z, w.f_cur);
            for (int j = 0; j < n_x; ++j) {
                w.a[j] = -dt * theta * op.lower[j];
                w.b[j] = 1.0 - dt * theta * op.diag[j];
                w.c[j] = -dt * theta * op.upper[j];
                w.d[j] = w.rhs[j] + dt * theta * w.f_cur[j];
            }
            thomas_solve(w.a, w.b, w.c, w.d, y_cur);
            double change = 0.0, scale = 1.0;
            for (int j = 0; j < n_x; ++j) {
                change = std::max(change, std::abs(y_cur[j] - w.iterate[j]));
                scale = std::max(scale, std::abs(y_cur[j]));
            }
            std::copy(y_cur.begin(), y_cur.end(), w.iterate.begin());
            if (change <= grid.picard_tol * scale) break;
        }
        for (int j = 0; j < n_x; ++j) {
            if (!std::isfinite(y_cur[j])) {
                throw NumericError("pde solve blew up at t=" + std::to_string(t0));
            }
        }
    }
    return field;
}

struct GridAxes {
    std::vector<double> tg;
    std::vector<double> x;
};

GridAxes build_axes(const MarketSpec& market, const ContractSpec& contract,
                    const PdeGridSpec& grid) {
    if (market.n != 1) throw ConfigError("pde solver supports a single asset only");
    if (grid.n_space < 2 || grid.n_time < 2) throw ConfigError("pde grid too coarse");
    for (const Mat& m : market.sigma.values) {
        if (!(std::abs(m(0, 0)) > 0.0)) {
            throw ConfigError("zero volatility makes the equation pure transport; unsupported");
        }
    }
    GridAxes axes;
    axes.tg = merge_times(uniform_grid(contract.T, grid.n_time), market.all_breakpoints());
    const double x0 = std::log(market.S0[0]);
    axes.x.resize(static_cast<std::size_t>(grid.n_space) + 1);
    for (int j = 0; j <= grid.n_space; ++j) {
        axes.x[j] = x0 - grid.x_width + 2.0 * grid.x_width * j / grid.n_space;
    }
    return axes;
}

std::vector<double> terminal_slice(const PayoffSpec& payoff, const std::vector<double>& x) {
    const double dx = x[1] - x[0];
    std::vector<double> out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        out[j] = payoff_cell_average(payoff, x[j] - 0.5 * dx, x[j] + 0.5 * dx);
    }
    return out;
}

PdeSolution solve_impl(const MarketSpec& market, const ContractSpec& contract,
                       const PdeGridSpec& grid, bool with_orders, FirstOrderForm form) {
    const GridAxes axes = build_axes(market, contract, grid);
    const int n_x = static_cast<int>(axes.x.size());
    const CloseoutSpec closeout = contract.closeout;

    PdeSolution sol;
    sol.x = axes.x;
    sol.t = axes.tg;
    sol.sigma1.breakpoints = market.sigma.breakpoints;
    for (const Mat& m : market.sigma.values) sol.sigma1.values.push_back(m(0, 0));

    std::vector<double> terminal = terminal_slice(contract.payoff, axes.x);

    // reference value: linear reaction -r_D v
    auto v_driver = [&](int, double t, std::span<const double> y, std::span<const double>,
                        std::span<double> out) {
        const double r_d = market.r_D.at(t);
        for (std::size_t j = 0; j < y.size(); ++j) out[j] = -r_d * y[j];
    };
    sol.v = theta_solve(market, axes.tg, axes.x, grid, terminal, v_driver);

    auto reduced_driver = [&market, &sol, closeout, n_x](DriverId id) {
        return [&market, &sol, closeout, n_x, id](int ti, double t, std::span<const double> y,
                                                  std::span<const double> z, std::span<double> out) {
            const DriverCoeffs c = driver_coeffs(market, t);
            for (std::size_t j = 0; j < y.size(); ++j) {
                const double vh = sol.v[static_cast<std::size_t>(ti) * n_x + j];
                const auto [p1, p2] = closeout_eval(closeout, vh);
                const std::span<const double> zj{z.data() + j, 1};
                out[j] = reduce_driver(id, c, y[j], zj, vh, p1, p2);
            }
        };
    };
    sol.u_plus = theta_solve(market, axes.tg, axes.x, grid, terminal, reduced_driver(DriverId::FullPlus));
    sol.u_minus =
        theta_solve(market, axes.tg, axes.x, grid, terminal, reduced_driver(DriverId::FullMinus));

    if (with_orders) {
        sol.has_orders = true;
        sol.u0_plus =
            theta_solve(market, axes.tg, axes.x, grid, terminal, reduced_driver(DriverId::ZerothPlus));
        sol.u0_minus = theta_solve(market, axes.tg, axes.x, grid, terminal,
                                   reduced_driver(DriverId::ZerothMinus));

        const double dx = sol.dx();
        auto first_driver = [&market, &sol, closeout, n_x, dx, form](Side side) {
            const std::vector<double>* u0 = side == Side::Plus ? &sol.u0_plus : &sol.u0_minus;
            return [&market, &sol, closeout, n_x, dx, form, side, u0](
                       int ti, double t, std::span<const double> y, std::span<const double> z,
                       std::span<double> out) {
                const DriverCoeffs c = driver_coeffs(market, t);
                const double sig = market.sigma.at(t)(0, 0);
                const double* u0_slice = u0->data() + static_cast<std::size_t>(ti) * n_x;
                for (std::size_t j = 0; j < y.size(); ++j) {
                    const double vh = sol.v[static_cast<std::size_t>(ti) * n_x + j];
                    const auto [p1, p2] = closeout_eval(closeout, vh);
                    const std::span<const double> zj{z.data() + j, 1};
                    // zeroth-order integrand at the node, one-sided at the edges
                    double du0;
                    if (j == 0) {
                        du0 = (u0_slice[1] - u0_slice[0]) / dx;
                    } else if (j + 1 == static_cast<std::size_t>(n_x)) {
                        du0 = (u0_slice[j] - u0_slice[j - 1]) / dx;
                    } else {
                        du0 = (u0_slice[j + 1] - u0_slice[j - 1]) / (2.0 * dx);
                    }
                    const double z0 = sig * du0;
                    const std::span<const double> z0j{&z0, 1};
                    out[j] = first_order_homogeneous(c, form, y[j], zj, p1, p2) +
                             first_order_source(c, side, u0_slice[j], z0j, vh, p1, p2);
                }
            };
        };
        std::vector<double> zero_terminal(static_cast<std::size_t>(n_x), 0.0);
        sol.u1_plus =
            theta_solve(market, axes.tg, axes.x, grid, zero_terminal, first_driver(Side::Plus));
        sol.u1_minus =
            theta_solve(market, axes.tg, axes.x, grid, zero_terminal, first_driver(Side::Minus));
    }
    return sol;
}

} // namespace

PdeGridSpec pde_grid(const NumericsConfig& numerics) {
    PdeGridSpec g;
    g.n_space = numerics.pde.n_space;
    g.n_time = numerics.n_steps;
    g.x_width = numerics.pde.x_width;
    g.theta = numerics.pde.theta;
    g.picard_iters = numerics.picard_iters;
    g.picard_tol = numerics.picard_tol;
    return g;
}

const std::vector<double>& PdeSolution::field(PdeField f) const {
    switch (f) {
        case PdeField::V: return v;
        case PdeField::UPlus: return u_plus;
        case PdeField::UMinus: return u_minus;
        case PdeField::U0Plus: return u0_plus;
        case PdeField::U0Minus: return u0_minus;
        case PdeField::U1Plus: return u1_plus;
        default: return u1_minus;
    }
}

double PdeSolution::value(PdeField f, double time, double spot) const {
    const std::vector<double>& fld = field(f);
    if (fld.empty()) throw DomainError("pde field not solved");
    const double xi = std::log(spot);
    if (time < t.front() - 1e-12 || time > t.back() + 1e-12 || xi < x.front() - 1e-12 ||
        xi > x.back() + 1e-12) {
        throw DomainError("pde query outside the grid hull");
    }
    const auto locate = [](const std::vector<double>& axis, double q, std::size_t& lo, double& w) {
        const auto it = std::upper_bound(axis.begin(), axis.end(), q);
        std::size_t hi = static_cast<std::size_t>(it - axis.begin());
        hi = std::clamp<std::size_t>(hi, 1, axis.size() - 1);
        lo = hi - 1;
        w = std::clamp((q - axis[lo]) / (axis[hi] - axis[lo]), 0.0, 1.0);
    };
    std::size_t ti, xj;
    double wt, wx;
    locate(t, time, ti, wt);
    locate(x, xi, xj, wx);
    const std::size_t nx = x.size();
    const double f00 = fld[ti * nx + xj], f01 = fld[ti * nx + xj + 1];
    const double f10 = fld[(ti + 1) * nx + xj], f11 = fld[(ti + 1) * nx + xj + 1];
    return (1.0 - wt) * ((1.0 - wx) * f00 + wx * f01) + wt * ((1.0 - wx) * f10 + wx * f11);
}

double PdeSolution::z_value(PdeField f, double time, double spot) const {
    const std::vector<double>& fld = field(f);
    if (fld.empty()) throw DomainError("pde field not solved");
    const double xi = std::log(spot);
    const double h = dx();
    const double lo = x.front(), hi = x.back();
    const double xi_m = std::clamp(xi - 0.5 * h, lo, hi);
    const double xi_p = std::clamp(xi + 0.5 * h, lo, hi);
    const double u_m = value(f, time, std::exp(xi_m));
    const double u_p = value(f, time, std::exp(xi_p));
    return sigma1.at(time) * (u_p - u_m) / (xi_p - xi_m);
}

PdeSolution solve_pde_system(const MarketSpec& market, const ContractSpec& contract,
                             const PdeGridSpec& grid) {
    return solve_impl(market, contract, grid, false, FirstOrderForm::ZeroCloseout);
}

PdeSolution solve_pde_system_with_orders(const MarketSpec& market, const ContractSpec& contract,
                                         const PdeGridSpec& grid, FirstOrderForm form) {
    return solve_impl(market, contract, grid, true, form);
}

double price_at(const PdeSolution& solution, PdeField field, double time, double spot) {
    return solution.value(field, time, spot);
}

void dump_pde_csv(const PdeSolution& solution, std::ostream& os) {
    os << "t,S,V,U_plus,U_minus\n";
    for (int ti = 0; ti < solution.n_t(); ++ti) {
        for (int j = 0; j < solution.n_x(); ++j) {
            os << solution.t[ti] << "," << std::exp(solution.x[j]) << ","
               << solution.node(PdeField::V, ti, j) << ","
               << solution.node(PdeField::UPlus, ti, j) << ","
               << solution.node(PdeField::UMinus, ti, j) << "\n";
        }
    }
}

RefineStudy refine_study(const MarketSpec& market, const ContractSpec& contract, PdeGridSpec base,
                         int levels) {
    if (levels < 2) throw ConfigError("refine_study: need at least two levels");
    RefineStudy study;
    const double spot = market.S0[0];
    for (int l = 0; l < levels; ++l) {
        const PdeSolution sol = solve_pde_system(market, contract, base);
        RefineRow row;
        row.n_time = base.n_time;
        row.n_space = base.n_space;
        row.u_plus0 = sol.value(PdeField::UPlus, 0.0, spot);
        row.u_minus0 = sol.value(PdeField::UMinus, 0.0, spot);
        study.rows.push_back(row);
        base.n_time *= 2;
        base.n_space *= 2;
    }
    auto order_from = [&](auto&& pick) {
        const std::size_t n = study.rows.size();
        if (n < 3) return std::numeric_limits<double>::quiet_NaN();
        const double d1 = std::abs(pick(study.rows[n - 3]) - pick(study.rows[n - 2]));
        const double d2 = std::abs(pick(study.rows[n - 2]) - pick(study.rows[n - 1]));
        if (!(d2 > 0.0)) return std::numeric_limits<double>::quiet_NaN();
        return std::log2(d1 / d2);
    };
    study.order_plus = order_from([](const RefineRow& r) { return r.u_plus0; });
    study.order_minus = order_from([](const RefineRow& r) { return r.u_minus0; });
    return study;
}

} // namespace xvabsde

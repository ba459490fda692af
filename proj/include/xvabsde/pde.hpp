#pragma once

#include <vector>

#include "xvabsde/drivers.hpp"
#include "xvabsde/market.hpp"

namespace xvabsde {

/// Discretization of the single-asset backward system in log-price: a
/// uniform spatial grid on [log S0 - x_width, log S0 + x_width] and a uniform
/// time grid (refined with coefficient breakpoints). The linear operator is
/// theta-weighted; the driver source is lagged and refined by a small
/// fixed-point loop per step.
struct PdeGridSpec {
    int n_space = 400;
    int n_time = 400;
    double x_width = 2.0;
    double theta = 0.5;
    int picard_iters = 4;
    double picard_tol = 1e-12;
};

PdeGridSpec pde_grid(const NumericsConfig& numerics);

enum class PdeField { V, UPlus, UMinus, U0Plus, U0Minus, U1Plus, U1Minus };

/// Value surfaces on the time-space grid: the reference value V and the
/// seller/buyer value functions, plus the zeroth/first-order fields when
/// solved with orders.
struct PdeSolution {
    std::vector<double> x; // log-price nodes
    std::vector<double> t; // ascending times
    std::vector<double> v;
    std::vector<double> u_plus, u_minus;
    std::vector<double> u0_plus, u0_minus, u1_plus, u1_minus;
    bool has_orders = false;
    ScalarSchedule sigma1; // scalar volatility schedule, for integrand queries

    int n_x() const { return static_cast<int>(x.size()); }
    int n_t() const { return static_cast<int>(t.size()); }
    double dx() const { return x[1] - x[0]; }

    const std::vector<double>& field(PdeField f) const;
    double node(PdeField f, int ti, int j) const {
        return field(f)[static_cast<std::size_t>(ti) * x.size() + j];
    }

    /// Bilinear interpolation in (t, log s). Throws DomainError outside the
    /// grid hull.
    double value(PdeField f, double time, double spot) const;

    /// Martingale integrand sigma(t) S dU/dS = sigma(t) dU/dxi, interpolated.
    double z_value(PdeField f, double time, double spot) const;
};

/// Solves the reference-value equation and both semilinear value-function
/// equations (single asset, deterministic coefficients, terminal payoff a
/// function of S(T)).
PdeSolution solve_pde_system(const MarketSpec& market, const ContractSpec& contract,
                             const PdeGridSpec& grid);

/// As solve_pde_system, additionally solving the zeroth-order and
/// first-order-correction fields used by the spread-perturbation studies.
PdeSolution solve_pde_system_with_orders(const MarketSpec& market, const ContractSpec& contract,
                                         const PdeGridSpec& grid,
                                         FirstOrderForm form = FirstOrderForm::ZeroCloseout);

/// Interpolated surface query (spec-level name for PdeSolution::value).
double price_at(const PdeSolution& solution, PdeField field, double time, double spot);

struct RefineRow {
    int n_time = 0;
    int n_space = 0;
    double u_plus0 = 0.0;
    double u_minus0 = 0.0;
};

struct RefineStudy {
    std::vector<RefineRow> rows;
    double order_plus = 0.0;  // Richardson estimate from the last three rows
    double order_minus = 0.0;
};

/// Successive simultaneous halving of the time and space steps.
RefineStudy refine_study(const MarketSpec& market, const ContractSpec& contract,
                         PdeGridSpec base, int levels);

/// Debug dump of the (t, S, V, U_plus, U_minus) surfaces (not a stability
/// contract).
void dump_pde_csv(const PdeSolution& solution, std::ostream& os);

} // namespace xvabsde

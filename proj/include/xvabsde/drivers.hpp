#pragma once

#include <span>
#include <vector>

#include "xvabsde/market.hpp"

namespace xvabsde {

/// Seller (+) / buyer (-) side of the hedging problem.
enum class Side { Plus, Minus };

/// Market coefficients entering the drivers at a fixed time, with the
/// sigma^{-1} 1 projections precomputed so per-path evaluation stays cheap.
struct DriverCoeffs {
    double t = 0.0;
    double r_D = 0.0;
    double r_f0 = 0.0, eps_f = 0.0;
    double r_r0 = 0.0, eps_r = 0.0;
    double r_col_minus = 0.0, r_col_plus = 0.0;
    double h1 = 0.0, h2 = 0.0;
    double alpha = 0.0;
    std::vector<double> sigma_inv_one;  // sigma(t)^{-1} 1
    std::vector<double> sigma_I, sigma_C;
    double sI_sinv1 = 0.0; // sigma_I sigma^{-1} 1
    double sC_sinv1 = 0.0;
};

DriverCoeffs driver_coeffs(const MarketSpec& market, double t);

/// Arguments of the full-filtration drivers.
struct DriverPoint {
    double t = 0.0;
    double y = 0.0;
    std::vector<double> z;
    double u1 = 0.0, u2 = 0.0;
    double v_hat = 0.0;
};

/// Arguments of the reduced (Brownian-filtration) drivers; p1, p2 are the
/// close-out values at the reference state.
struct ReducedPoint {
    double t = 0.0;
    double y = 0.0;
    std::vector<double> z;
    double v_hat = 0.0;
    double p1 = 0.0, p2 = 0.0;
};

/// Rate-asymmetry-free linear part: cost of carry of the hedge positions at
/// mid rates.
double f0(const DriverCoeffs& c, double y, std::span<const double> z, double u1, double u2);

/// |y + u1 + u2 - alpha v| : magnitude of the funding account position.
double funding_abs(const DriverCoeffs& c, double y, double u1, double u2, double v_hat);

/// |(z + u1 sigma_I + u2 sigma_C) sigma^{-1} 1| : magnitude of the repo
/// account position.
double repo_abs(const DriverCoeffs& c, std::span<const double> z, double u1, double u2);

/// Side-dependent collateral remuneration term.
double collateral_term(const DriverCoeffs& c, Side side, double v_hat);

/// Linear driver of the zeroth-order (spread-free) problem.
double f0_pm(const DriverCoeffs& c, Side side, double y, std::span<const double> z, double u1,
             double u2, double v_hat);

/// Spread terms: +/- (eps_f |funding| + eps_r |repo|).
double f1_pm(const DriverCoeffs& c, Side side, double y, std::span<const double> z, double u1,
             double u2, double v_hat);

/// Full seller driver; equals f0_pm(Plus) + f1_pm(Plus) bitwise.
double f_plus(const DriverCoeffs& c, double y, std::span<const double> z, double u1, double u2,
              double v_hat);

/// Full buyer driver; the reflection -f_plus at the negated point.
double f_minus(const DriverCoeffs& c, double y, std::span<const double> z, double u1, double u2,
               double v_hat);

enum class DriverId { FullPlus, FullMinus, ZerothPlus, ZerothMinus };

Side driver_side(DriverId id);

/// Reduced driver: the chosen driver at u_i = p_i - y plus the hazard
/// absorption terms (p1 - y) h1 + (p2 - y) h2.
double reduce_driver(DriverId id, const DriverCoeffs& c, double y, std::span<const double> z,
                     double v_hat, double p1, double p2);

/// Homogeneous coefficient choice for the first-order correction equation.
/// ZeroCloseout applies the filtration reduction to the correction process
/// itself (its close-out values vanish, giving a -y (h1 + h2) feedback);
/// InheritedCloseout keeps the base claim's close-out values and no hazard
/// feedback.
enum class FirstOrderForm { ZeroCloseout, InheritedCloseout };

double first_order_homogeneous(const DriverCoeffs& c, FirstOrderForm form, double y,
                               std::span<const double> z, double p1, double p2);

/// Source of the first-order equation: the spread terms evaluated at the
/// frozen zeroth-order reduced solution.
double first_order_source(const DriverCoeffs& c, Side side, double y0,
                          std::span<const double> z0, double v_hat, double p1, double p2);

// Spec-level wrappers (alpha overrides the market's collateralization level).
double f0(const MarketSpec& market, const DriverPoint& pt);
double f_plus(const MarketSpec& market, const DriverPoint& pt, double alpha);
double f_minus(const MarketSpec& market, const DriverPoint& pt, double alpha);
double f0_pm(const MarketSpec& market, const DriverPoint& pt, double alpha, Side side);
double f1_pm(const MarketSpec& market, const DriverPoint& pt, double alpha, Side side);
double reduce_driver(DriverId id, const MarketSpec& market, const ReducedPoint& rp, double alpha);

/// Portfolio positions recovered from BSDE solution fields. Cash legs are
/// money amounts: repo_cash = -pi' S, collateral_cash = alpha v_hat,
/// funding_cash = y + u1 + u2 - alpha v_hat.
struct HedgeRatios {
    std::vector<double> pi;
    double pi_I = 0.0;
    double pi_C = 0.0;
    double funding_cash = 0.0;
    double repo_cash = 0.0;
    double collateral_cash = 0.0;
};

HedgeRatios hedge_from_solution(const MarketSpec& market, double t, std::span<const double> s,
                                double p_I_pre, double p_C_pre, std::span<const double> z,
                                double u1, double u2, double v_hat, double y);

} // namespace xvabsde

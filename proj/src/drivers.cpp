#include "xvabsde/drivers.hpp"

#include <cmath>

#include "xvabsde/errors.hpp"
#include "xvabsde/linalg.hpp"

namespace xvabsde {

DriverCoeffs driver_coeffs(const MarketSpec& market, double t) {
    DriverCoeffs c;
    c.t = t;
    c.r_D = market.r_D.at(t);
    const RatePair rf = market.r_f.at(t);
    const RatePair rr = market.r_r.at(t);
    const RatePair rc = market.r_col.at(t);
    c.r_f0 = rf.mid();
    c.eps_f = rf.half_spread();
    c.r_r0 = rr.mid();
    c.eps_r = rr.half_spread();
    c.r_col_minus = rc.r_minus;
    c.r_col_plus = rc.r_plus;
    c.h1 = market.h1.at(t);
    c.h2 = market.h2.at(t);
    c.alpha = market.alpha;
    c.sigma_I = market.sigma_I.at(t);
    c.sigma_C = market.sigma_C.at(t);
    try {
        c.sigma_inv_one = solve_dense(market.sigma.at(t),
                                      std::vector<double>(static_cast<std::size_t>(market.n), 1.0));
    } catch (const NumericError&) {
        // A singular sigma is tolerable exactly when every term carrying the
        // repo projection vanishes (one-rate worlds with zero volatility).
        if (c.r_r0 == c.r_D && c.eps_r == 0.0) {
            c.sigma_inv_one.assign(static_cast<std::size_t>(market.n), 0.0);
        } else {
            throw;
        }
    }
    c.sI_sinv1 = dot(c.sigma_I, c.sigma_inv_one);
    c.sC_sinv1 = dot(c.sigma_C, c.sigma_inv_one);
    return c;
}

double f0(const DriverCoeffs& c, double y, std::span<const double> z, double u1, double u2) {
    const double z_proj = dot(z, c.sigma_inv_one);
    const double carry_I = -(c.r_f0 - c.r_D) + (c.r_r0 - c.r_D) * c.sI_sinv1;
    const double carry_C = -(c.r_f0 - c.r_D) + (c.r_r0 - c.r_D) * c.sC_sinv1;
    return -c.r_f0 * y + (c.r_r0 - c.r_D) * z_proj + carry_I * u1 + carry_C * u2;
}

double funding_abs(const DriverCoeffs& c, double y, double u1, double u2, double v_hat) {
    return std::abs(y + u1 + u2 - c.alpha * v_hat);
}

double repo_abs(const DriverCoeffs& c, std::span<const double> z, double u1, double u2) {
    return std::abs(dot(z, c.sigma_inv_one) + u1 * c.sI_sinv1 + u2 * c.sC_sinv1);
}

double collateral_term(const DriverCoeffs& c, Side side, double v_hat) {
    const double v_pos = std::max(v_hat, 0.0);
    const double v_neg = std::max(-v_hat, 0.0);
    if (side == Side::Plus) {
        return c.alpha * (c.r_f0 * v_hat - c.r_col_plus * v_pos + c.r_col_minus * v_neg);
    }
    return c.alpha * (c.r_f0 * v_hat + c.r_col_plus * v_neg - c.r_col_minus * v_pos);
}

double f0_pm(const DriverCoeffs& c, Side side, double y, std::span<const double> z, double u1,
             double u2, double v_hat) {
    return f0(c, y, z, u1, u2) + collateral_term(c, side, v_hat);
}

double f1_pm(const DriverCoeffs& c, Side side, double y, std::span<const double> z, double u1,
             double u2, double v_hat) {
    const double magnitude =
        c.eps_f * funding_abs(c, y, u1, u2, v_hat) + c.eps_r * repo_abs(c, z, u1, u2);
    return side == Side::Plus ? magnitude : -magnitude;
}

double f_plus(const DriverCoeffs& c, double y, std::span<const double> z, double u1, double u2,
              double v_hat) {
    return f0_pm(c, Side::Plus, y, z, u1, u2, v_hat) + f1_pm(c, Side::Plus, y, z, u1, u2, v_hat);
}

double f_minus(const DriverCoeffs& c, double y, std::span<const double> z, double u1, double u2,
               double v_hat) {
    return f0_pm(c, Side::Minus, y, z, u1, u2, v_hat) + f1_pm(c, Side::Minus, y, z, u1, u2, v_hat);
}

Side driver_side(DriverId id) {
    return (id == DriverId::FullPlus || id == DriverId::ZerothPlus) ? Side::Plus : Side::Minus;
}

double reduce_driver(DriverId id, const DriverCoeffs& c, double y, std::span<const double> z,
                     double v_hat, double p1, double p2) {
    const double u1 = p1 - y;
    const double u2 = p2 - y;
    double base;
    switch (id) {
        case DriverId::FullPlus: base = f_plus(c, y, z, u1, u2, v_hat); break;
        case DriverId::FullMinus: base = f_minus(c, y, z, u1, u2, v_hat); break;
        case DriverId::ZerothPlus: base = f0_pm(c, Side::Plus, y, z, u1, u2, v_hat); break;
        default: base = f0_pm(c, Side::Minus, y, z, u1, u2, v_hat); break;
    }
    return base + u1 * c.h1 + u2 * c.h2;
}

double first_order_homogeneous(const DriverCoeffs& c, FirstOrderForm form, double y,
                               std::span<const double> z, double p1, double p2) {
    if (form == FirstOrderForm::ZeroCloseout) {
        return f0(c, y, z, -y, -y) - y * (c.h1 + c.h2);
    }
    return f0(c, y, z, p1 - y, p2 - y);
}

double first_order_source(const DriverCoeffs& c, Side side, double y0,
                          std::span<const double> z0, double v_hat, double p1, double p2) {
    return f1_pm(c, side, y0, z0, p1 - y0, p2 - y0, v_hat);
}

namespace {

DriverCoeffs coeffs_with_alpha(const MarketSpec& market, double t, double alpha) {
    DriverCoeffs c = driver_coeffs(market, t);
    c.alpha = alpha;
    return c;
}

} // namespace

double f0(const MarketSpec& market, const DriverPoint& pt) {
    return f0(driver_coeffs(market, pt.t), pt.y, pt.z, pt.u1, pt.u2);
}

double f_plus(const MarketSpec& market, const DriverPoint& pt, double alpha) {
    return f_plus(coeffs_with_alpha(market, pt.t, alpha), pt.y, pt.z, pt.u1, pt.u2, pt.v_hat);
}

double f_minus(const MarketSpec& market, const DriverPoint& pt, double alpha) {
    return f_minus(coeffs_with_alpha(market, pt.t, alpha), pt.y, pt.z, pt.u1, pt.u2, pt.v_hat);
}

double f0_pm(const MarketSpec& market, const DriverPoint& pt, double alpha, Side side) {
    return f0_pm(coeffs_with_alpha(market, pt.t, alpha), side, pt.y, pt.z, pt.u1, pt.u2, pt.v_hat);
}

double f1_pm(const MarketSpec& market, const DriverPoint& pt, double alpha, Side side) {
    return f1_pm(coeffs_with_alpha(market, pt.t, alpha), side, pt.y, pt.z, pt.u1, pt.u2, pt.v_hat);
}

double reduce_driver(DriverId id, const MarketSpec& market, const ReducedPoint& rp, double alpha) {
    return reduce_driver(id, coeffs_with_alpha(market, rp.t, alpha), rp.y, rp.z, rp.v_hat, rp.p1,
                         rp.p2);
}

HedgeRatios hedge_from_solution(const MarketSpec& market, double t, std::span<const double> s,
                                double p_I_pre, double p_C_pre, std::span<const double> z,
                                double u1, double u2, double v_hat, double y) {
    if (!(p_I_pre > 0.0) || !(p_C_pre > 0.0)) {
        throw DomainError("hedge_from_solution: pre-default bond prices must be positive");
    }
    const int n = market.n;
    for (int a = 0; a < n; ++a) {
        if (!(s[a] > 0.0)) throw DomainError("hedge_from_solution: asset prices must be positive");
    }
    const Mat sg = market.sigma.at(t);
    const std::vector<double> sigma_I = market.sigma_I.at(t);
    const std::vector<double> sigma_C = market.sigma_C.at(t);

    std::vector<double> rhs(static_cast<std::size_t>(n));
    double rhs_scale = 0.0;
    for (int a = 0; a < n; ++a) {
        rhs[a] = z[a] + u1 * sigma_I[a] + u2 * sigma_C[a];
        rhs_scale = std::max(rhs_scale, std::abs(rhs[a]));
    }

    Mat sg_t(sg.cols, sg.rows);
    for (std::size_t i = 0; i < sg.rows; ++i)
        for (std::size_t j = 0; j < sg.cols; ++j) sg_t(j, i) = sg(i, j);
    std::vector<double> w;
    try {
        w = solve_dense(sg_t, rhs); // (sigma^T)^{-1} rhs
    } catch (const NumericError&) {
        // degenerate volatility carries no diffusion exposure to hedge
        if (rhs_scale <= 1e-7 * std::max({1.0, std::abs(y), std::abs(v_hat)})) {
            w.assign(static_cast<std::size_t>(n), 0.0);
        } else {
            throw;
        }
    }

    HedgeRatios h;
    h.pi.resize(static_cast<std::size_t>(n));
    double pi_dot_s = 0.0;
    for (int a = 0; a < n; ++a) {
        h.pi[a] = w[a] / s[a];
        pi_dot_s += h.pi[a] * s[a];
    }
    h.pi_I = -u1 / p_I_pre;
    h.pi_C = -u2 / p_C_pre;
    h.repo_cash = -pi_dot_s;
    h.collateral_cash = market.alpha * v_hat;
    h.funding_cash = y + u1 + u2 - market.alpha * v_hat;
    return h;
}

} // namespace xvabsde

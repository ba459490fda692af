#include "xvabsde/xva.hpp"

#include <cmath>
#include <functional>
#include <iostream>
#include <optional>

#include "xvabsde/drivers.hpp"
#include "xvabsde/errors.hpp"
#include "xvabsde/parallel.hpp"
#include "xvabsde/regression.hpp"
#include "xvabsde/stats.hpp"
#include "xvabsde/vhat.hpp"

namespace xvabsde {

namespace {

ScalarSchedule derived_schedule(const MarketSpec& market,
                                const std::function<double(const DriverCoeffs&)>& fn) {
    ScalarSchedule out;
    out.breakpoints = market.all_breakpoints();
    if (out.breakpoints.empty() || out.breakpoints.front() != 0.0) {
        out.breakpoints.insert(out.breakpoints.begin(), 0.0);
    }
    out.values.reserve(out.breakpoints.size());
    for (double bp : out.breakpoints) out.values.push_back(fn(driver_coeffs(market, bp)));
    return out;
}

// V (repo-measure value discounted at the funding mid) and V_hat (risk-free
// reference) as functions of the simulated state, evaluated on a batch.
// Closed forms for menu payoffs; nested per-step regressions otherwise.
class StateValues {
public:
    StateValues(const MarketSpec& market, const ContractSpec& contract,
                const NumericsConfig& numerics, const PathBatch& batch, bool& used_fallback) {
        const ScalarSchedule rf0 = mid_schedule(market.r_f);
        const ScalarSchedule rr0 = mid_schedule(market.r_r);
        if (payoff_has_closed_form(contract.payoff, market.n)) {
            analytic_ = true;
            pricer_v_.emplace(contract.payoff, rr0, rf0, market.sigma, contract.T);
            pricer_vhat_.emplace(contract.payoff, market.r_D, market.r_D, market.sigma, contract.T);
            slices_v_.reserve(batch.grid.size());
            slices_vhat_.reserve(batch.grid.size());
            for (double t : batch.grid) {
                slices_v_.push_back(pricer_v_->slice(t));
                slices_vhat_.push_back(pricer_vhat_->slice(t));
            }
            v0_ = pricer_v_->value(slices_v_.front(), market.S0);
            se_v0_ = 0.0;
            used_fallback = false;
            return;
        }

        analytic_ = false;
        used_fallback = true;
        std::cerr << "compute_xva: payoff outside the closed-form menu; "
                     "falling back to nested regression for the state values\n";
        const int n_paths = batch.n_paths;
        const int n_steps = batch.n_steps;
        const std::size_t width = batch.grid.size();
        v_values_.assign(static_cast<std::size_t>(n_paths) * width, 0.0);
        vhat_values_.assign(v_values_.size(), 0.0);

        // V by per-step regression on the batch itself
        std::vector<double> terminal(static_cast<std::size_t>(n_paths));
        for (int p = 0; p < n_paths; ++p) {
            terminal[p] = payoff_eval(contract.payoff, batch.assets_at(p, n_steps));
        }
        const PolyBasis basis(batch.n_assets, numerics.basis_degree);
        std::vector<double> target(static_cast<std::size_t>(n_paths));
        for (int p = 0; p < n_paths; ++p) {
            v_values_[static_cast<std::size_t>(p) * width + n_steps] = terminal[p];
        }
        for (int i = n_steps - 1; i >= 0; --i) {
            const double disc = std::exp(-integrate(rf0, batch.grid[i], contract.T));
            for (int p = 0; p < n_paths; ++p) target[p] = disc * terminal[p];
            const StepRegression reg(batch, i, basis);
            const std::vector<double> beta = reg.fit(target);
            for (int p = 0; p < n_paths; ++p) {
                v_values_[static_cast<std::size_t>(p) * width + i] = reg.predict(p, beta);
            }
            if (i == 0) se_v0_ = mean_se(target).se;
        }
        v0_ = v_values_[0];

        // V_hat needs P-measure conditional expectations: fit on a parallel
        // P batch with the same seed and transfer the fitted function.
        const PathBatch batch_p = simulate_asset_paths(market, contract.T, numerics, Measure::P);
        std::vector<double> terminal_p(static_cast<std::size_t>(n_paths));
        for (int p = 0; p < n_paths; ++p) {
            terminal_p[p] = payoff_eval(contract.payoff, batch_p.assets_at(p, n_steps));
        }
        for (int p = 0; p < n_paths; ++p) {
            vhat_values_[static_cast<std::size_t>(p) * width + n_steps] = terminal[p];
        }
        for (int i = n_steps - 1; i >= 0; --i) {
            const double disc = std::exp(-integrate(market.r_D, batch.grid[i], contract.T));
            for (int p = 0; p < n_paths; ++p) target[p] = disc * terminal_p[p];
            const StepRegression reg(batch_p, i, basis);
            const std::vector<double> beta = reg.fit(target);
            for (int p = 0; p < n_paths; ++p) {
                vhat_values_[static_cast<std::size_t>(p) * width + i] =
                    reg.predict_state(batch.assets_at(p, i), beta);
            }
        }
    }

    double v(const PathBatch& batch, int p, int i) const {
        if (analytic_) return pricer_v_->value(slices_v_[i], batch.assets_at(p, i));
        return v_values_[static_cast<std::size_t>(p) * batch.grid.size() + i];
    }
    double vhat(const PathBatch& batch, int p, int i) const {
        if (analytic_) return pricer_vhat_->value(slices_vhat_[i], batch.assets_at(p, i));
        return vhat_values_[static_cast<std::size_t>(p) * batch.grid.size() + i];
    }
    double v0() const { return v0_; }
    double se_v0() const { return se_v0_; }

private:
    bool analytic_ = true;
    std::optional<MenuPricer> pricer_v_, pricer_vhat_;
    std::vector<MenuPricer::Slice> slices_v_, slices_vhat_;
    std::vector<double> v_values_, vhat_values_;
    double v0_ = 0.0;
    double se_v0_ = 0.0;
};

std::vector<double> trapezoid_weights(const std::vector<double>& grid) {
    const std::size_t n = grid.size();
    std::vector<double> w(n, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double dt = grid[i + 1] - grid[i];
        w[i] += 0.5 * dt;
        w[i + 1] += 0.5 * dt;
    }
    return w;
}

struct PerStep {
    double weight_df; // trapezoid weight times DF_R(0, t)
    double h1, h2;
    double r_f0, r_r0, r_D;
    double r_col_minus, r_col_plus;
    double sI, sC;
    double alpha;
};

std::vector<PerStep> per_step_data(const MarketSpec& market, const std::vector<double>& grid,
                                   const ScalarSchedule& discount_rate) {
    const std::vector<double> w = trapezoid_weights(grid);
    std::vector<PerStep> out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const DriverCoeffs c = driver_coeffs(market, grid[i]);
        PerStep& s = out[i];
        s.weight_df = w[i] * std::exp(-integrate(discount_rate, 0.0, grid[i]));
        s.h1 = c.h1;
        s.h2 = c.h2;
        s.r_f0 = c.r_f0;
        s.r_r0 = c.r_r0;
        s.r_D = c.r_D;
        s.r_col_minus = c.r_col_minus;
        s.r_col_plus = c.r_col_plus;
        s.sI = c.sI_sinv1;
        s.sC = c.sC_sinv1;
        s.alpha = c.alpha;
    }
    return out;
}

} // namespace

ScalarSchedule rate_R(const MarketSpec& market) {
    return derived_schedule(market, [](const DriverCoeffs& c) {
        return c.r_D - (c.r_f0 - c.r_D) + (c.r_r0 - c.r_D) * (c.sI_sinv1 + c.sC_sinv1) + c.h1 +
               c.h2;
    });
}

ScalarSchedule rate_classical(const MarketSpec& market) {
    return derived_schedule(market,
                            [](const DriverCoeffs& c) { return c.r_D + c.h1 + c.h2; });
}

XVAReport compute_xva(const MarketSpec& market, const ContractSpec& contract,
                      const NumericsConfig& numerics) {
    const ValidationReport check = validate_market(market);
    if (!check.valid()) {
        throw ConfigError("compute_xva: invalid market: " + check.violations.front().message);
    }
    const PathBatch batch = simulate_asset_paths(market, contract.T, numerics, Measure::PTilde);

    XVAReport report;
    const StateValues sv(market, contract, numerics, batch, report.regression_fallback);
    const std::vector<PerStep> steps = per_step_data(market, batch.grid, rate_R(market));
    const CloseoutSpec closeout = contract.closeout;

    const int n_paths = batch.n_paths;
    std::vector<double> i1(n_paths), i2(n_paths), i3(n_paths), i4(n_paths), i5p(n_paths),
        i5m(n_paths), itp(n_paths), itm(n_paths);

    parallel_chunks(static_cast<std::size_t>(n_paths), [&](std::size_t, std::size_t begin,
                                                            std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            const int pi = static_cast<int>(p);
            double a1 = 0.0, a2 = 0.0, a3 = 0.0, a4 = 0.0, a5p = 0.0, a5m = 0.0;
            for (std::size_t i = 0; i < batch.grid.size(); ++i) {
                const PerStep& s = steps[i];
                const double vh = sv.vhat(batch, pi, static_cast<int>(i));
                const double vv = sv.v(batch, pi, static_cast<int>(i));
                const auto [p1, p2] = closeout_eval(closeout, vh);
                const double phi1_hat = p1 - vv;
                const double phi2_hat = p2 - vv;
                const double base = s.weight_df;
                a1 += base * s.h1 * phi1_hat;
                a2 += base * s.h2 * phi2_hat;
                a3 -= base * (s.r_f0 - s.r_D) * (phi1_hat + phi2_hat);
                a4 += base * (s.r_r0 - s.r_D) * (phi1_hat * s.sI + phi2_hat * s.sC);
                const double vh_pos = std::max(vh, 0.0);
                const double vh_neg = std::max(-vh, 0.0);
                a5p += base * s.alpha *
                       ((s.r_f0 - s.r_col_plus) * vh_pos - (s.r_f0 - s.r_col_minus) * vh_neg);
                a5m += base * s.alpha *
                       ((s.r_f0 - s.r_col_minus) * vh_pos - (s.r_f0 - s.r_col_plus) * vh_neg);
            }
            i1[p] = a1;
            i2[p] = a2;
            i3[p] = a3;
            i4[p] = a4;
            i5p[p] = a5p;
            i5m[p] = a5m;
            itp[p] = a1 + a2 + a3 + a4 + a5p;
            itm[p] = a1 + a2 + a3 + a4 + a5m;
        }
    });

    report.v0 = sv.v0();
    report.se_v0 = sv.se_v0();
    const MeanSe m1 = mean_se(i1), m2 = mean_se(i2), m3 = mean_se(i3), m4 = mean_se(i4);
    const MeanSe m5p = mean_se(i5p), m5m = mean_se(i5m);
    const MeanSe mtp = mean_se(itp), mtm = mean_se(itm);
    report.va1 = m1.mean;
    report.se_va1 = m1.se;
    report.va2 = m2.mean;
    report.se_va2 = m2.se;
    report.va3 = m3.mean;
    report.se_va3 = m3.se;
    report.va4 = m4.mean;
    report.se_va4 = m4.se;
    report.va5_plus = m5p.mean;
    report.se_va5_plus = m5p.se;
    report.va5_minus = m5m.mean;
    report.se_va5_minus = m5m.se;
    report.total_plus = report.v0 + report.va1 + report.va2 + report.va3 + report.va4 +
                        report.va5_plus;
    report.total_minus = report.v0 + report.va1 + report.va2 + report.va3 + report.va4 +
                         report.va5_minus;
    report.se_total_plus = combined_se(mtp.se, report.se_v0);
    report.se_total_minus = combined_se(mtm.se, report.se_v0);
    return report;
}

ClassicalXva compute_classical_xva(const MarketSpec& market, const ContractSpec& contract,
                                   const NumericsConfig& numerics) {
    const ValidationReport check = validate_market(market);
    if (!check.valid()) {
        throw ConfigError("compute_classical_xva: invalid market: " +
                          check.violations.front().message);
    }
    const PathBatch batch = simulate_asset_paths(market, contract.T, numerics, Measure::P);
    const VhatSolution vhat = solve_vhat(market, contract, batch);
    const std::vector<PerStep> steps = per_step_data(market, batch.grid, rate_classical(market));
    const CloseoutSpec closeout = contract.closeout;

    const int n_paths = batch.n_paths;
    std::vector<double> acc_dva(n_paths), acc_cva(n_paths), acc_fva(n_paths), acc_colp(n_paths),
        acc_colm(n_paths);
    parallel_chunks(static_cast<std::size_t>(n_paths), [&](std::size_t, std::size_t begin,
                                                            std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            const int pi = static_cast<int>(p);
            double a_dva = 0.0, a_cva = 0.0, a_fva = 0.0, a_colp = 0.0, a_colm = 0.0;
            for (std::size_t i = 0; i < batch.grid.size(); ++i) {
                const PerStep& s = steps[i];
                const double vh = vhat.on_batch(batch, pi, static_cast<int>(i));
                const auto [p1, p2] = closeout_eval(closeout, vh);
                const double phi1_hat = p1 - vh;
                const double phi2_hat = p2 - vh;
                const double base = s.weight_df;
                a_dva -= base * s.h1 * phi1_hat;
                a_cva += base * s.h2 * phi2_hat;
                a_fva += base * (s.r_f0 - s.r_D) * (p1 + p2);
                const double vh_pos = std::max(vh, 0.0);
                const double vh_neg = std::max(-vh, 0.0);
                a_colp += base * s.alpha *
                          ((s.r_D - s.r_col_plus) * vh_pos - (s.r_D - s.r_col_minus) * vh_neg);
                a_colm += base * s.alpha *
                          ((s.r_D - s.r_col_minus) * vh_pos - (s.r_D - s.r_col_plus) * vh_neg);
            }
            acc_dva[p] = a_dva;
            acc_cva[p] = a_cva;
            acc_fva[p] = a_fva;
            acc_colp[p] = a_colp;
            acc_colm[p] = a_colm;
        }
    });

    ClassicalXva out;
    const MeanSe md = mean_se(acc_dva), mc = mean_se(acc_cva), mf = mean_se(acc_fva);
    const MeanSe mp = mean_se(acc_colp), mm = mean_se(acc_colm);
    out.dva = md.mean;
    out.se_dva = md.se;
    out.cva = mc.mean;
    out.se_cva = mc.se;
    out.fva = mf.mean;
    out.se_fva = mf.se;
    out.colva_plus = mp.mean;
    out.se_colva_plus = mp.se;
    out.colva_minus = mm.mean;
    out.se_colva_minus = mm.se;
    return out;
}

TelescopingReport telescoping_check(const MarketSpec& market, const ContractSpec& contract,
                                    const NumericsConfig& numerics) {
    const ValidationReport check = validate_market(market);
    if (!check.valid()) {
        throw ConfigError("telescoping_check: invalid market: " +
                          check.violations.front().message);
    }
    const PathBatch batch = simulate_asset_paths(market, contract.T, numerics, Measure::PTilde);
    bool fallback = false;
    const StateValues sv(market, contract, numerics, batch, fallback);
    const ScalarSchedule r_sched = rate_R(market);
    const std::vector<PerStep> steps = per_step_data(market, batch.grid, r_sched);
    const double df_r_maturity = std::exp(-integrate(r_sched, 0.0, contract.T));
    const CloseoutSpec closeout = contract.closeout;

    const int n_paths = batch.n_paths;
    std::vector<double> hat(n_paths), bar(n_paths), vbar(n_paths), resid(n_paths);
    parallel_chunks(static_cast<std::size_t>(n_paths), [&](std::size_t, std::size_t begin,
                                                            std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            const int pi = static_cast<int>(p);
            double a_hat = 0.0, a_bar = 0.0;
            for (std::size_t i = 0; i < batch.grid.size(); ++i) {
                const PerStep& s = steps[i];
                const double vh = sv.vhat(batch, pi, static_cast<int>(i));
                const double vv = sv.v(batch, pi, static_cast<int>(i));
                const auto [p1, p2] = closeout_eval(closeout, vh);
                const double base = s.weight_df;
                auto accumulate = [&](double phi1, double phi2) {
                    return base * (s.h1 * phi1 + s.h2 * phi2 -
                                   (s.r_f0 - s.r_D) * (phi1 + phi2) +
                                   (s.r_r0 - s.r_D) * (phi1 * s.sI + phi2 * s.sC));
                };
                a_hat += accumulate(p1 - vv, p2 - vv);
                a_bar += accumulate(p1, p2);
            }
            const double payoff = payoff_eval(contract.payoff, batch.assets_at(pi, batch.n_steps));
            hat[p] = a_hat;
            bar[p] = a_bar;
            vbar[p] = df_r_maturity * payoff;
            resid[p] = a_hat - a_bar - vbar[p] + sv.v0();
        }
    });

    TelescopingReport out;
    const MeanSe mr = mean_se(resid);
    out.residual = std::abs(mr.mean);
    out.se_residual = mr.se;
    out.va_sum_hat = mean_of(hat);
    out.va_sum_bar = mean_of(bar);
    out.v_bar0 = mean_of(vbar);
    out.v0 = sv.v0();
    return out;
}

GirsanovReport girsanov_diagnostic(const MarketSpec& market, const ContractSpec& contract,
                                   const NumericsConfig& numerics) {
    const ValidationReport check = validate_market(market);
    if (!check.valid()) {
        throw ConfigError("girsanov_diagnostic: invalid market: " +
                          check.violations.front().message);
    }
    const PathBatch direct = simulate_asset_paths(market, contract.T, numerics, Measure::PTilde);
    const PathBatch base = simulate_asset_paths(market, contract.T, numerics, Measure::P);
    const std::vector<double> weights = girsanov_weights(market, base);

    const int n_paths = direct.n_paths;
    std::vector<double> d_spot(n_paths), w_spot(n_paths), d_pay(n_paths), w_pay(n_paths);
    for (int p = 0; p < n_paths; ++p) {
        d_spot[p] = direct.price(p, direct.n_steps, 0);
        d_pay[p] = payoff_eval(contract.payoff, direct.assets_at(p, direct.n_steps));
        w_spot[p] = weights[p] * base.price(p, base.n_steps, 0);
        w_pay[p] = weights[p] * payoff_eval(contract.payoff, base.assets_at(p, base.n_steps));
    }

    GirsanovReport out;
    const MeanSe ds = mean_se(d_spot), ws = mean_se(w_spot);
    const MeanSe dp = mean_se(d_pay), wp = mean_se(w_pay);
    out.direct_spot = ds.mean;
    out.se_direct_spot = ds.se;
    out.weighted_spot = ws.mean;
    out.se_weighted_spot = ws.se;
    out.direct_payoff = dp.mean;
    out.se_direct_payoff = dp.se;
    out.weighted_payoff = wp.mean;
    out.se_weighted_payoff = wp.se;
    out.diff_spot = ds.mean - ws.mean;
    out.combined_se_spot = combined_se(ds.se, ws.se);
    out.diff_payoff = dp.mean - wp.mean;
    out.combined_se_payoff = combined_se(dp.se, wp.se);
    return out;
}

} // namespace xvabsde

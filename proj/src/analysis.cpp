#include "xvabsde/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "xvabsde/errors.hpp"
#include "xvabsde/parallel.hpp"
#include "xvabsde/regression.hpp"
#include "xvabsde/rng.hpp"
#include "xvabsde/stats.hpp"
#include "xvabsde/vhat.hpp"

namespace xvabsde {

namespace {

double rate_at(const RatePair& pair, double position) {
    // At a zero position both indicators vanish; the choice is multiplied by
    // zero wherever it enters.
    return position < 0.0 ? pair.r_minus : pair.r_plus;
}

void require_valid(const MarketSpec& market, const char* who) {
    const ValidationReport check = validate_market(market);
    if (!check.valid()) {
        throw ConfigError(std::string(who) + ": invalid market: " +
                          check.violations.front().message);
    }
}

// shape checks only; degenerate volatility is resolved where it matters
void require_structural(const MarketSpec& market, const char* who) {
    const ValidationReport check = validate_market(market);
    for (const Violation& v : check.violations) {
        if (v.code == "schedule_shape" || v.code == "initial_prices" || v.code == "n_assets" ||
            v.code == "alpha_range") {
            throw ConfigError(std::string(who) + ": invalid market: " + v.message);
        }
    }
}

} // namespace

// ---------------------------------------------------------------------------
// no-arbitrage conditions
// ---------------------------------------------------------------------------

const NoArbCondition& NoArbReport::by_id(const std::string& id) const {
    for (const NoArbCondition& c : conditions) {
        if (c.id == id) return c;
    }
    throw DomainError("unknown no-arbitrage condition id: " + id);
}

NoArbReport check_noarb(const MarketSpec& market, std::span<const double> grid_times) {
    require_valid(market, "check_noarb");
    std::vector<double> times(grid_times.begin(), grid_times.end());
    const std::vector<double> bps = market.all_breakpoints();
    times.insert(times.end(), bps.begin(), bps.end());
    if (times.empty()) times.push_back(0.0);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());

    constexpr int n_conditions = 6;
    const char* ids[n_conditions] = {"19f", "19r", "44", "48-h1", "48-h2", "49"};
    double worst[n_conditions];
    std::fill(worst, worst + n_conditions, std::numeric_limits<double>::infinity());

    for (double t : times) {
        if (t < 0.0) continue;
        const RatePair rf = market.r_f.at(t);
        const RatePair rr = market.r_r.at(t);
        const RatePair rc = market.r_col.at(t);
        const double r_d = market.r_D.at(t);
        const double h1 = market.h1.at(t);
        const double h2 = market.h2.at(t);
        const DriverCoeffs c = driver_coeffs(market, t);

        const double margins[n_conditions] = {
            rf.r_minus - rf.r_plus,
            rr.r_minus - rr.r_plus,
            rc.r_minus - rc.r_plus,
            h1 - (rf.r_minus - r_d - (rr.r_plus - r_d) * std::max(c.sI_sinv1, 0.0) +
                  (rr.r_minus - r_d) * std::max(-c.sI_sinv1, 0.0)),
            h2 - (rf.r_minus - r_d - (rr.r_plus - r_d) * std::max(c.sC_sinv1, 0.0) +
                  (rr.r_minus - r_d) * std::max(-c.sC_sinv1, 0.0)),
            rf.r_plus - rc.r_minus,
        };
        for (int k = 0; k < n_conditions; ++k) worst[k] = std::min(worst[k], margins[k]);
    }

    NoArbReport report;
    report.all_pass = true;
    for (int k = 0; k < n_conditions; ++k) {
        NoArbCondition c;
        c.id = ids[k];
        c.worst_margin = worst[k];
        c.pass = worst[k] >= 0.0;
        report.all_pass = report.all_pass && c.pass;
        report.conditions.push_back(std::move(c));
    }
    return report;
}

// ---------------------------------------------------------------------------
// ordering chain
// ---------------------------------------------------------------------------

OrderingReport ordering_check(const MarketSpec& market, const ContractSpec& contract,
                              const NumericsConfig& numerics) {
    require_valid(market, "ordering_check");
    {
        const NoArbReport pre = check_noarb(market, std::vector<double>{0.0});
        if (!pre.by_id("19f").pass || !pre.by_id("19r").pass || !pre.by_id("44").pass) {
            throw ConfigError("ordering_check requires nonnegative spreads and ordered "
                              "collateral rates");
        }
    }
    const PathBatch batch = simulate_asset_paths(market, contract.T, numerics, Measure::P);
    const VhatSolution vhat = solve_vhat(market, contract, batch);

    const ReducedSolution s_minus =
        solve_reduced_lsmc(DriverId::FullMinus, market, contract, batch, vhat, numerics);
    const ReducedSolution s0_minus =
        solve_reduced_lsmc(DriverId::ZerothMinus, market, contract, batch, vhat, numerics);
    const ReducedSolution s0_plus =
        solve_reduced_lsmc(DriverId::ZerothPlus, market, contract, batch, vhat, numerics);
    const ReducedSolution s_plus =
        solve_reduced_lsmc(DriverId::FullPlus, market, contract, batch, vhat, numerics);

    OrderingReport rep;
    rep.y_minus = s_minus.y0;
    rep.se_y_minus = s_minus.se_y0;
    rep.y0_minus = s0_minus.y0;
    rep.se_y0_minus = s0_minus.se_y0;
    rep.y0_plus = s0_plus.y0;
    rep.se_y0_plus = s0_plus.se_y0;
    rep.y_plus = s_plus.y0;
    rep.se_y_plus = s_plus.se_y0;

    const int n_paths = batch.n_paths;
    auto link = [&](const char* name, const ReducedSolution& lo, const ReducedSolution& hi) {
        std::vector<double> diff(static_cast<std::size_t>(n_paths));
        for (int p = 0; p < n_paths; ++p) diff[p] = hi.pathwise[p] - lo.pathwise[p];
        OrderingLink l;
        l.name = name;
        l.gap = hi.y0 - lo.y0;
        l.se = mean_se(diff).se;
        l.pass = l.gap >= -2.0 * l.se;
        rep.links.push_back(l);
        if (!l.pass && rep.first_violation.empty()) rep.first_violation = name;
    };
    link("minus<=zeroth_minus", s_minus, s0_minus);
    link("zeroth_minus<=zeroth_plus", s0_minus, s0_plus);
    link("zeroth_plus<=plus", s0_plus, s_plus);

    // mean ordering across the grid
    bool grid_ok = true;
    std::string grid_violation;
    auto grid_link = [&](const char* name, const ReducedSolution& lo, const ReducedSolution& hi) {
        std::vector<double> diff(static_cast<std::size_t>(n_paths));
        for (int i = 0; i <= batch.n_steps && grid_ok; ++i) {
            for (int p = 0; p < n_paths; ++p) diff[p] = hi.y_at(p, i) - lo.y_at(p, i);
            const MeanSe ms = mean_se(diff);
            if (ms.mean < -2.0 * ms.se) {
                grid_ok = false;
                grid_violation = std::string(name) + " at grid index " + std::to_string(i);
            }
        }
    };
    grid_link("minus<=zeroth_minus", s_minus, s0_minus);
    grid_link("zeroth_minus<=zeroth_plus", s0_minus, s0_plus);
    grid_link("zeroth_plus<=plus", s0_plus, s_plus);

    rep.chain_ok = grid_ok && rep.links[0].pass && rep.links[1].pass && rep.links[2].pass;
    if (rep.first_violation.empty() && !grid_ok) rep.first_violation = grid_violation;
    return rep;
}

// ---------------------------------------------------------------------------
// epsilon sweep
// ---------------------------------------------------------------------------

namespace {

MarketSpec with_spreads(const MarketSpec& base, double eps) {
    MarketSpec m = base;
    for (RatePair& p : m.r_f.values) p = RatePair::from_mid_spread(p.mid(), eps);
    for (RatePair& p : m.r_r.values) p = RatePair::from_mid_spread(p.mid(), eps);
    return m;
}

// lognormal weights of the first asset's log-price at time t under P
std::vector<double> density_weights(const MarketSpec& market, const std::vector<double>& x,
                                    double t) {
    std::vector<double> w(x.size(), 0.0);
    if (t <= 0.0) {
        // point mass at the spot node
        const double x0 = std::log(market.S0[0]);
        std::size_t best = 0;
        for (std::size_t j = 1; j < x.size(); ++j) {
            if (std::abs(x[j] - x0) < std::abs(x[best] - x0)) best = j;
        }
        w[best] = 1.0;
        return w;
    }
    ScalarSchedule var_sched;
    var_sched.breakpoints = market.sigma.breakpoints;
    for (const Mat& m : market.sigma.values) var_sched.values.push_back(m(0, 0) * m(0, 0));
    const double variance = integrate(var_sched, 0.0, t);
    const double mean = std::log(market.S0[0]) + integrate(market.r_D, 0.0, t) - 0.5 * variance;
    double total = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double zscore = (x[j] - mean) / std::sqrt(variance);
        w[j] = std::exp(-0.5 * zscore * zscore);
        total += w[j];
    }
    for (double& v : w) v /= total;
    return w;
}

// beta-weighted gap norms (value and integrand parts) for the pde engine
double pde_gap_err(const MarketSpec& market, const PdeSolution& sol, Side side, int order,
                   double beta) {
    const std::vector<double>& full =
        side == Side::Plus ? sol.u_plus : sol.u_minus;
    const std::vector<double>& zeroth =
        side == Side::Plus ? sol.u0_plus : sol.u0_minus;
    const std::vector<double>& first =
        side == Side::Plus ? sol.u1_plus : sol.u1_minus;
    const int n_x = sol.n_x();
    const int n_t = sol.n_t();
    const double dx = sol.dx();

    double norm_y_sq = 0.0, norm_z_sq = 0.0;
    std::vector<double> gap(static_cast<std::size_t>(n_x));
    for (int ti = 0; ti + 1 < n_t; ++ti) {
        const double t = sol.t[ti];
        const double dt = sol.t[ti + 1] - t;
        const double sig = sol.sigma1.at(t);
        const std::vector<double> w = density_weights(market, sol.x, t);
        for (int j = 0; j < n_x; ++j) {
            const std::size_t idx = static_cast<std::size_t>(ti) * n_x + j;
            gap[j] = full[idx] - zeroth[idx] - (order >= 1 ? first[idx] : 0.0);
        }
        double mean_y_sq = 0.0, mean_z_sq = 0.0;
        for (int j = 0; j < n_x; ++j) {
            mean_y_sq += w[j] * gap[j] * gap[j];
            double dgap;
            if (j == 0) {
                dgap = (gap[1] - gap[0]) / dx;
            } else if (j + 1 == n_x) {
                dgap = (gap[j] - gap[j - 1]) / dx;
            } else {
                dgap = (gap[j + 1] - gap[j - 1]) / (2.0 * dx);
            }
            const double zg = sig * dgap;
            mean_z_sq += w[j] * zg * zg;
        }
        norm_y_sq += std::exp(beta * t) * mean_y_sq * dt;
        norm_z_sq += std::exp(beta * t) * mean_z_sq * dt;
    }
    return std::sqrt(norm_y_sq) + std::sqrt(norm_z_sq);
}

} // namespace

double lsmc_gap_norm(const ReducedSolution& full, const ReducedSolution& approx0,
                     const ReducedSolution* approx1, double beta, bool z_part) {
    const int n_paths = full.n_paths;
    const int n_steps = full.n_steps;
    const int n = full.n_assets;
    double norm_sq = 0.0;
    for (int i = 0; i < n_steps; ++i) {
        const double t = full.grid[i];
        const double dt = full.grid[i + 1] - t;
        double acc = 0.0;
        if (z_part) {
            for (int p = 0; p < n_paths; ++p) {
                for (int a = 0; a < n; ++a) {
                    double g = full.z_at(p, i)[a] - approx0.z_at(p, i)[a];
                    if (approx1) g -= approx1->z_at(p, i)[a];
                    acc += g * g;
                }
            }
        } else {
            for (int p = 0; p < n_paths; ++p) {
                double g = full.y_at(p, i) - approx0.y_at(p, i);
                if (approx1) g -= approx1->y_at(p, i);
                acc += g * g;
            }
        }
        norm_sq += std::exp(beta * t) * (acc / n_paths) * dt;
    }
    return std::sqrt(norm_sq);
}

SweepResult epsilon_sweep(const MarketSpec& market_base, const ContractSpec& contract,
                          std::span<const double> eps_list, int order, SweepEngine engine,
                          const NumericsConfig& numerics, FirstOrderForm form) {
    if (eps_list.empty()) throw ConfigError("epsilon_sweep: eps_list must not be empty");
    for (std::size_t i = 1; i < eps_list.size(); ++i) {
        if (!(eps_list[i] < eps_list[i - 1])) {
            throw ConfigError("epsilon_sweep: eps_list must be strictly decreasing");
        }
    }
    for (const RatePair& p : market_base.r_f.values) {
        if (p.half_spread() != 0.0) {
            throw ConfigError("epsilon_sweep: base market must have zero funding spread");
        }
    }
    for (const RatePair& p : market_base.r_r.values) {
        if (p.half_spread() != 0.0) {
            throw ConfigError("epsilon_sweep: base market must have zero repo spread");
        }
    }
    if (order != 0 && order != 1) throw ConfigError("epsilon_sweep: order must be 0 or 1");
    require_valid(market_base, "epsilon_sweep");

    SweepResult result;
    result.order = order;
    result.engine = engine;
    const double beta = numerics.norm_beta;

    std::optional<PathBatch> batch;
    std::optional<VhatSolution> vhat;
    if (engine == SweepEngine::Lsmc) {
        // the P-measure paths do not depend on the spreads; share them
        batch.emplace(simulate_asset_paths(market_base, contract.T, numerics, Measure::P));
        vhat.emplace(solve_vhat(market_base, contract, *batch));
    }

    for (double eps : eps_list) {
        const MarketSpec market_eps = with_spreads(market_base, eps);
        SweepPoint point;
        point.eps = eps;
        if (engine == SweepEngine::Pde) {
            const PdeSolution sol =
                solve_pde_system_with_orders(market_eps, contract, pde_grid(numerics), form);
            point.err_plus = pde_gap_err(market_eps, sol, Side::Plus, order, beta);
            point.err_minus = pde_gap_err(market_eps, sol, Side::Minus, order, beta);
        } else {
            const ReducedSolution full_p = solve_reduced_lsmc(DriverId::FullPlus, market_eps,
                                                              contract, *batch, *vhat, numerics);
            const ReducedSolution full_m = solve_reduced_lsmc(DriverId::FullMinus, market_eps,
                                                              contract, *batch, *vhat, numerics);
            const ReducedSolution zero_p = solve_reduced_lsmc(DriverId::ZerothPlus, market_eps,
                                                              contract, *batch, *vhat, numerics);
            const ReducedSolution zero_m = solve_reduced_lsmc(DriverId::ZerothMinus, market_eps,
                                                              contract, *batch, *vhat, numerics);
            std::optional<ReducedSolution> first_p, first_m;
            if (order >= 1) {
                first_p.emplace(solve_first_order(Side::Plus, market_eps, contract, *batch, zero_p,
                                                  *vhat, numerics, form));
                first_m.emplace(solve_first_order(Side::Minus, market_eps, contract, *batch,
                                                  zero_m, *vhat, numerics, form));
            }
            auto err_of = [&](const ReducedSolution& f, const ReducedSolution& z0,
                              const ReducedSolution* f1) {
                return lsmc_gap_norm(f, z0, f1, beta, false) + lsmc_gap_norm(f, z0, f1, beta, true);
            };
            point.err_plus = err_of(full_p, zero_p, first_p ? &*first_p : nullptr);
            point.err_minus = err_of(full_m, zero_m, first_m ? &*first_m : nullptr);
        }
        point.err_total = point.err_plus + point.err_minus;
        point.excluded = eps <= 0.0 || point.err_total <= 1e-13;
        result.points.push_back(point);
    }

    // least-squares slope of log err against log eps
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int used = 0;
    for (const SweepPoint& p : result.points) {
        if (p.excluded) continue;
        const double lx = std::log(p.eps);
        const double ly = std::log(p.err_total);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++used;
    }
    result.slope = used >= 2 ? (used * sxy - sx * sy) / (used * sxx - sx * sx)
                             : std::numeric_limits<double>::quiet_NaN();

    for (std::size_t i = 1; i < result.points.size(); ++i) {
        if (result.points[i].excluded || result.points[i - 1].excluded) continue;
        if (result.points[i].err_total > result.points[i - 1].err_total) {
            result.monotone_warning = true; // errors should shrink with eps
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// positive homogeneity
// ---------------------------------------------------------------------------

HomogeneityResult homogeneity_check(const MarketSpec& market, const ContractSpec& contract,
                                    std::span<const double> k_list,
                                    const NumericsConfig& numerics, HomogeneityEngine engine) {
    require_valid(market, "homogeneity_check");
    HomogeneityResult result;

    if (engine == HomogeneityEngine::Ode) {
        const OdeSolution base_p =
            solve_reduced_ode(DriverId::FullPlus, market, contract, numerics);
        const OdeSolution base_m =
            solve_reduced_ode(DriverId::FullMinus, market, contract, numerics);
        for (double k : k_list) {
            ContractSpec scaled = contract;
            scaled.payoff = payoff_scaled(contract.payoff, k);
            const OdeSolution sp = solve_reduced_ode(DriverId::FullPlus, market, scaled, numerics);
            const OdeSolution sm = solve_reduced_ode(DriverId::FullMinus, market, scaled, numerics);
            const double dev_p =
                std::abs(sp.y0 - k * base_p.y0) / std::max(1.0, std::abs(k * base_p.y0));
            const double dev_m =
                std::abs(sm.y0 - k * base_m.y0) / std::max(1.0, std::abs(k * base_m.y0));
            result.k_values.push_back(k);
            result.deviations.push_back(std::max(dev_p, dev_m));
        }
    } else {
        const PathBatch batch = simulate_asset_paths(market, contract.T, numerics, Measure::P);
        const VhatSolution vhat_base = solve_vhat(market, contract, batch);
        const ReducedSolution base_p =
            solve_reduced_lsmc(DriverId::FullPlus, market, contract, batch, vhat_base, numerics);
        const ReducedSolution base_m =
            solve_reduced_lsmc(DriverId::FullMinus, market, contract, batch, vhat_base, numerics);
        for (double k : k_list) {
            ContractSpec scaled = contract;
            scaled.payoff = payoff_scaled(contract.payoff, k);
            const VhatSolution vhat_scaled = solve_vhat(market, scaled, batch);
            const ReducedSolution sp = solve_reduced_lsmc(DriverId::FullPlus, market, scaled,
                                                          batch, vhat_scaled, numerics);
            const ReducedSolution sm = solve_reduced_lsmc(DriverId::FullMinus, market, scaled,
                                                          batch, vhat_scaled, numerics);
            double worst = 0.0;
            for (int p = 0; p < batch.n_paths; ++p) {
                for (int i = 0; i <= batch.n_steps; ++i) {
                    const double ref_p = k * base_p.y_at(p, i);
                    const double ref_m = k * base_m.y_at(p, i);
                    worst = std::max(worst, std::abs(sp.y_at(p, i) - ref_p) /
                                                std::max(1.0, std::abs(ref_p)));
                    worst = std::max(worst, std::abs(sm.y_at(p, i) - ref_m) /
                                                std::max(1.0, std::abs(ref_m)));
                }
            }
            result.k_values.push_back(k);
            result.deviations.push_back(worst);
        }
    }
    for (double d : result.deviations) result.max_rel_deviation = std::max(result.max_rel_deviation, d);
    return result;
}

// ---------------------------------------------------------------------------
// hedge fields
// ---------------------------------------------------------------------------

namespace {

class PdeHedgeField final : public HedgeField {
public:
    PdeHedgeField(std::shared_ptr<const PdeSolution> sol, Side side)
        : sol_(std::move(sol)), field_(side == Side::Plus ? PdeField::UPlus : PdeField::UMinus) {}

    FieldPoint at(double t, std::span<const double> s) const override {
        FieldPoint out;
        out.y = sol_->value(field_, t, s[0]);
        out.z = {sol_->z_value(field_, t, s[0])};
        out.v_hat = sol_->value(PdeField::V, t, s[0]);
        return out;
    }

private:
    std::shared_ptr<const PdeSolution> sol_;
    PdeField field_;
};

class OdeHedgeField final : public HedgeField {
public:
    OdeHedgeField(const MarketSpec& market, const ContractSpec& contract, OdeSolution sol)
        : sol_(std::move(sol)),
          r_D_(market.r_D),
          payoff_value_(std::get<ConstantPayoff>(contract.payoff).value),
          maturity_(contract.T),
          n_assets_(market.n) {}

    FieldPoint at(double t, std::span<const double>) const override {
        FieldPoint out;
        out.y = sol_.value_at(t);
        out.z.assign(static_cast<std::size_t>(n_assets_), 0.0);
        out.v_hat = payoff_value_ * std::exp(-integrate(r_D_, t, maturity_));
        return out;
    }

private:
    OdeSolution sol_;
    ScalarSchedule r_D_;
    double payoff_value_;
    double maturity_;
    int n_assets_;
};

class LsmcHedgeField final : public HedgeField {
public:
    LsmcHedgeField(const MarketSpec& market, const ContractSpec& contract,
                   const NumericsConfig& numerics, DriverId id)
        : market_(market),
          contract_(contract),
          numerics_(numerics),
          id_(id),
          basis_(market.n, numerics.basis_degree) {
        const PathBatch batch = simulate_asset_paths(market, contract.T, numerics, Measure::P);
        vhat_ = solve_vhat(market, contract, batch);
        LsmcOptions options;
        options.keep_regression = true;
        sol_ = solve_reduced_lsmc(id, market, contract, batch, vhat_, numerics, options);
    }

    FieldPoint at(double t, std::span<const double> s) const override {
        FieldPoint out;
        const std::vector<double>& grid = sol_.grid;
        const auto it = std::upper_bound(grid.begin(), grid.end(), t + 1e-12);
        std::size_t i = it == grid.begin() ? 0 : static_cast<std::size_t>(it - grid.begin()) - 1;
        out.v_hat = vhat_.value(t, s);
        if (i >= sol_.fits.size()) { // at maturity
            out.y = payoff_eval(contract_.payoff, s);
            out.z.assign(static_cast<std::size_t>(market_.n), 0.0);
            return out;
        }
        const ReducedSolution::StepFit& fit = sol_.fits[i];
        const double dt = grid[i + 1] - grid[i];
        const double m = eval_fit(fit, fit.beta_y, s);
        out.z.resize(static_cast<std::size_t>(market_.n));
        for (int a = 0; a < market_.n; ++a) out.z[a] = eval_fit(fit, fit.beta_z[a], s) / dt;

        const DriverCoeffs c = driver_coeffs(market_, grid[i]);
        const double vh_node = vhat_.value(grid[i], s);
        const auto [p1, p2] = closeout_eval(contract_.closeout, vh_node);
        double y = m;
        for (int k = 0; k < numerics_.picard_iters; ++k) {
            const double y_next = m + dt * reduce_driver(id_, c, y, out.z, vh_node, p1, p2);
            const double change = std::abs(y_next - y);
            y = y_next;
            if (change <= numerics_.picard_tol * std::max(1.0, std::abs(y))) break;
        }
        out.y = y;
        return out;
    }

private:
    double eval_fit(const ReducedSolution::StepFit& fit, const std::vector<double>& beta,
                    std::span<const double> s) const {
        std::vector<double> logs(s.size());
        for (std::size_t a = 0; a < s.size(); ++a) logs[a] = std::log(s[a]);
        std::vector<double> raw(static_cast<std::size_t>(basis_.size()));
        basis_.eval_logs(logs, raw);
        double acc = 0.0;
        for (std::size_t jj = 0; jj < fit.kept.size(); ++jj) {
            const int j = fit.kept[jj];
            const double f = j == 0 ? 1.0 : (raw[j] - fit.center[j]) / fit.scale[j];
            acc += f * beta[jj];
        }
        return acc;
    }

    MarketSpec market_;
    ContractSpec contract_;
    NumericsConfig numerics_;
    DriverId id_;
    PolyBasis basis_;
    VhatSolution vhat_;
    ReducedSolution sol_;
};

} // namespace

std::unique_ptr<HedgeField> make_pde_field(std::shared_ptr<const PdeSolution> solution,
                                           Side side) {
    return std::make_unique<PdeHedgeField>(std::move(solution), side);
}

std::unique_ptr<HedgeField> make_ode_field(const MarketSpec& market, const ContractSpec& contract,
                                           OdeSolution solution) {
    return std::make_unique<OdeHedgeField>(market, contract, std::move(solution));
}

std::unique_ptr<HedgeField> make_lsmc_field(const MarketSpec& market, const ContractSpec& contract,
                                            const NumericsConfig& numerics, DriverId id) {
    return std::make_unique<LsmcHedgeField>(market, contract, numerics, id);
}

// ---------------------------------------------------------------------------
// replication
// ---------------------------------------------------------------------------

namespace {

struct ForwardPaths {
    std::vector<double> errors;                 // per eval path
    std::vector<double> discounted;             // [path][coarse step], Y / B_D stopped
    std::vector<double> coarse_grid;
};

// Forward Euler of the self-financing wealth with exact lognormal asset and
// bond sub-steps; positions refresh at every grid time and the step splits
// at the first default time.
ForwardPaths simulate_replication(const MarketSpec& market, const ContractSpec& contract,
                                  const NumericsConfig& numerics, int n_eval_paths, Side side,
                                  const HedgeField& field, bool record_discounted) {
    const int n = market.n;
    const double T = contract.T;
    const std::vector<double> coarse = uniform_grid(T, numerics.n_steps);
    const std::vector<double> fine = merge_times(coarse, market.all_breakpoints());
    const int n_fine = static_cast<int>(fine.size()) - 1;
    const CounterRng rng(numerics.seed);
    const double side_sign = side == Side::Plus ? 1.0 : -1.0;

    const std::vector<DefaultSample> defaults =
        sample_default_times(market, T, n_eval_paths, numerics.seed);

    const double y_start = field.at(0.0, market.S0).y;

    ForwardPaths out;
    out.errors.assign(static_cast<std::size_t>(n_eval_paths), 0.0);
    out.coarse_grid = coarse;
    if (record_discounted) {
        out.discounted.assign(static_cast<std::size_t>(n_eval_paths) * coarse.size(), 0.0);
    }

    parallel_chunks(static_cast<std::size_t>(n_eval_paths), [&](std::size_t, std::size_t begin,
                                                                 std::size_t end) {
        std::vector<double> x(static_cast<std::size_t>(n));
        std::vector<double> s(static_cast<std::size_t>(n));
        std::vector<double> dwj(static_cast<std::size_t>(n));
        for (std::size_t p = begin; p < end; ++p) {
            const double tau1 = defaults[p].tau1;
            const double tau2 = defaults[p].tau2;
            const double tau = std::min(tau1, tau2);

            for (int a = 0; a < n; ++a) {
                x[a] = std::log(market.S0[a]);
                s[a] = market.S0[a];
            }
            double log_i = 0.0, log_c = 0.0; // pre-default bond log-factors
            double wealth = y_start;
            double disc_log = 0.0; // integral of r_D up to current time
            int coarse_idx = 0;
            bool stopped = false;
            double error = 0.0;

            auto record = [&](double t, double value_over_bd) {
                if (!record_discounted) return;
                while (coarse_idx < static_cast<int>(coarse.size()) &&
                       coarse[coarse_idx] <= t + 1e-12) {
                    out.discounted[p * coarse.size() + coarse_idx] = value_over_bd;
                    ++coarse_idx;
                }
            };
            record(0.0, wealth);

            for (int j = 0; j < n_fine && !stopped; ++j) {
                const double a_t = fine[j];
                double b_t = fine[j + 1];
                bool default_here = false;
                int default_who = 0;
                if (tau > a_t && tau <= b_t + 1e-14 && tau <= T) {
                    b_t = tau;
                    default_here = true;
                    default_who = tau1 <= tau2 ? 1 : 2;
                }
                const double dt = b_t - a_t;

                // positions from the solution fields at the left endpoint
                const FieldPoint fp = field.at(a_t, s);
                const auto [p1, p2] = closeout_eval(contract.closeout, fp.v_hat);
                const double u1 = p1 - fp.y;
                const double u2 = p2 - fp.y;
                const double bond_i = market.PI0 * std::exp(log_i);
                const double bond_c = market.PC0 * std::exp(log_c);
                const HedgeRatios hedge = hedge_from_solution(market, a_t, s, bond_i, bond_c,
                                                              fp.z, u1, u2, fp.v_hat, wealth);

                const RatePair rf = market.r_f.at(a_t);
                const RatePair rr = market.r_r.at(a_t);
                const RatePair rcol = market.r_col.at(a_t);
                const double rho_f = rate_at(rf, side_sign * hedge.funding_cash);
                const double rho_r = rate_at(rr, side_sign * hedge.repo_cash);
                const double rho_col = rate_at(rcol, side_sign * hedge.collateral_cash);
                const double r_d = market.r_D.at(a_t);
                const double h1 = market.h1.at(a_t);
                const double h2 = market.h2.at(a_t);
                const Mat sg = market.sigma.at(a_t);
                const std::vector<double> sig_i = market.sigma_I.at(a_t);
                const std::vector<double> sig_c = market.sigma_C.at(a_t);

                if (dt > 0.0) {
                    const double sq_dt = std::sqrt(dt);
                    for (int a = 0; a < n; ++a) {
                        dwj[a] = rng.normal(streams::kEvalAssets, p,
                                            static_cast<std::uint64_t>(j) * n + a) *
                                 sq_dt;
                    }
                } else {
                    std::fill(dwj.begin(), dwj.end(), 0.0);
                }

                // wealth increment with frozen positions; deterministic
                // accruals compound exactly over the step so a riskless
                // portfolio tracks the cash account without drift
                double d_wealth = 0.0;
                for (int a = 0; a < n; ++a) {
                    double diff = 0.0;
                    for (int b = 0; b < n; ++b) diff += sg(a, b) * dwj[b];
                    d_wealth += hedge.pi[a] * s[a] * (diff + std::expm1((r_d - rho_r) * dt));
                }
                double diff_i = 0.0, diff_c = 0.0;
                for (int a = 0; a < n; ++a) {
                    diff_i += sig_i[a] * dwj[a];
                    diff_c += sig_c[a] * dwj[a];
                }
                const double dn1 = (default_here && default_who == 1) ? 1.0 : 0.0;
                const double dn2 = (default_here && default_who == 2) ? 1.0 : 0.0;
                d_wealth += hedge.pi_I * bond_i *
                            (diff_i - (dn1 - h1 * dt) + std::expm1((r_d - rho_f) * dt));
                d_wealth += hedge.pi_C * bond_c *
                            (diff_c - (dn2 - h2 * dt) + std::expm1((r_d - rho_f) * dt));
                d_wealth += (wealth - hedge.collateral_cash) * std::expm1(rho_f * dt);
                d_wealth += hedge.collateral_cash * std::expm1(rho_col * dt);
                wealth += d_wealth;

                // advance the state with exact lognormal sub-steps
                for (int a = 0; a < n; ++a) {
                    double row_sq = 0.0, diff = 0.0;
                    for (int b = 0; b < n; ++b) {
                        row_sq += sg(a, b) * sg(a, b);
                        diff += sg(a, b) * dwj[b];
                    }
                    x[a] += (r_d - 0.5 * row_sq) * dt + diff;
                    s[a] = std::exp(x[a]);
                }
                double row_sq_i = 0.0, row_sq_c = 0.0;
                for (int a = 0; a < n; ++a) {
                    row_sq_i += sig_i[a] * sig_i[a];
                    row_sq_c += sig_c[a] * sig_c[a];
                }
                log_i += diff_i + (r_d + h1 - 0.5 * row_sq_i) * dt;
                log_c += diff_c + (r_d + h2 - 0.5 * row_sq_c) * dt;
                disc_log += r_d * dt;

                if (default_here) {
                    const double vh_tau = field.at(b_t, s).v_hat;
                    const auto [q1, q2] = closeout_eval(contract.closeout, vh_tau);
                    const double target = default_who == 1 ? q1 : q2;
                    error = wealth - target;
                    stopped = true;
                } else if (j + 1 == n_fine) {
                    const double target = payoff_eval(contract.payoff, s);
                    error = wealth - target;
                    stopped = true;
                }
                record(b_t, wealth * std::exp(-disc_log));
            }
            out.errors[p] = error;
            // freeze the discounted value after the stop
            if (record_discounted) {
                const double frozen = out.discounted[p * coarse.size() + (coarse_idx - 1)];
                while (coarse_idx < static_cast<int>(coarse.size())) {
                    out.discounted[p * coarse.size() + coarse_idx] = frozen;
                    ++coarse_idx;
                }
            }
        }
    });
    return out;
}

std::unique_ptr<HedgeField> build_field(const MarketSpec& market, const ContractSpec& contract,
                                        const NumericsConfig& numerics, Side side,
                                        HedgeEngine engine) {
    if (engine == HedgeEngine::Auto) {
        if (std::holds_alternative<ConstantPayoff>(contract.payoff)) {
            engine = HedgeEngine::Ode;
        } else if (market.n == 1 && payoff_has_closed_form(contract.payoff, market.n)) {
            engine = HedgeEngine::Pde;
        } else {
            engine = HedgeEngine::Lsmc;
        }
    }
    const DriverId id = side == Side::Plus ? DriverId::FullPlus : DriverId::FullMinus;
    switch (engine) {
        case HedgeEngine::Ode:
            return make_ode_field(market, contract,
                                  solve_reduced_ode(id, market, contract, numerics));
        case HedgeEngine::Pde: {
            auto sol = std::make_shared<PdeSolution>(
                solve_pde_system(market, contract, pde_grid(numerics)));
            return make_pde_field(std::move(sol), side);
        }
        default:
            return make_lsmc_field(market, contract, numerics, id);
    }
}

} // namespace

ReplicationReport replicate(const MarketSpec& market, const ContractSpec& contract,
                            const NumericsConfig& numerics, int n_eval_paths, Side side,
                            HedgeEngine engine) {
    require_structural(market, "replicate");
    if (n_eval_paths < 2) throw ConfigError("replicate: need at least two evaluation paths");
    const std::unique_ptr<HedgeField> field =
        build_field(market, contract, numerics, side, engine);

    const ForwardPaths fw =
        simulate_replication(market, contract, numerics, n_eval_paths, side, *field, false);

    ReplicationReport report;
    report.n_eval_paths = n_eval_paths;
    report.y_start = field->at(0.0, market.S0).y;
    report.notional = contract_notional(contract, market);
    std::vector<double> abs_errors(fw.errors.size());
    for (std::size_t i = 0; i < fw.errors.size(); ++i) abs_errors[i] = std::abs(fw.errors[i]);
    report.mean_abs_terminal_error = mean_of(abs_errors);
    report.rel_error = report.mean_abs_terminal_error / report.notional;
    const double levels[5] = {0.05, 0.25, 0.5, 0.75, 0.95};
    report.error_quantiles = quantiles(fw.errors, levels);
    return report;
}

// ---------------------------------------------------------------------------
// martingale diagnostic
// ---------------------------------------------------------------------------

MartingaleReport martingale_diagnostic(const MarketSpec& market, const ContractSpec& contract,
                                       const NumericsConfig& numerics, int n_blocks) {
    require_structural(market, "martingale_diagnostic");
    // single-rate world required: every account accrues at r_D
    for (double t : market.all_breakpoints()) {
        const double r = market.r_D.at(t);
        for (const RateSchedule* sched : {&market.r_f, &market.r_r, &market.r_col}) {
            const RatePair pair = sched->at(t);
            if (pair.r_minus != r || pair.r_plus != r) {
                throw ConfigError("martingale_diagnostic requires a single-rate market");
            }
        }
    }

    const Side side = Side::Plus;
    const std::unique_ptr<HedgeField> field =
        build_field(market, contract, numerics, side, HedgeEngine::Auto);
    const ForwardPaths fw = simulate_replication(market, contract, numerics, numerics.n_paths,
                                                 side, *field, true);

    const std::vector<double>& grid = fw.coarse_grid;
    const int n_paths = numerics.n_paths;
    n_blocks = std::min<int>(n_blocks, static_cast<int>(grid.size()) - 1);

    MartingaleReport report;
    std::vector<double> incr(static_cast<std::size_t>(n_paths));
    for (int b = 0; b < n_blocks; ++b) {
        const int lo = b * (static_cast<int>(grid.size()) - 1) / n_blocks;
        const int hi = (b + 1) * (static_cast<int>(grid.size()) - 1) / n_blocks;
        const double dt_block = grid[hi] - grid[lo];
        for (int p = 0; p < n_paths; ++p) {
            incr[p] = fw.discounted[static_cast<std::size_t>(p) * grid.size() + hi] -
                      fw.discounted[static_cast<std::size_t>(p) * grid.size() + lo];
        }
        const MeanSe ms = mean_se(incr);
        report.block_drifts.push_back(ms.mean / dt_block);
        report.block_ses.push_back(ms.se / dt_block);
    }
    report.within_3se = true;
    for (std::size_t b = 0; b < report.block_drifts.size(); ++b) {
        const double d = std::abs(report.block_drifts[b]);
        if (d > report.max_abs_drift) {
            report.max_abs_drift = d;
            report.se_at_max = report.block_ses[b];
        }
        if (d > 3.0 * report.block_ses[b]) report.within_3se = false;
    }
    return report;
}

} // namespace xvabsde

#include "xvabsde/lsmc.hpp"

#include <cmath>

#include "xvabsde/errors.hpp"
#include "xvabsde/parallel.hpp"
#include "xvabsde/regression.hpp"
#include "xvabsde/stats.hpp"

namespace xvabsde {

namespace {

// One backward sweep shared by the zeroth/full and first-order solvers.
// driver(step, path, coeffs, y, z_row) evaluates the reduced driver with any
// per-path data captured by the caller; iterate_y controls whether y enters.
template <class DriverFn>
ReducedSolution backward_sweep(const MarketSpec& market, const PathBatch& batch,
                               const NumericsConfig& numerics,
                               const std::vector<double>& terminal, DriverFn&& driver,
                               const LsmcOptions& options) {
    const int n_paths = batch.n_paths;
    const int n_steps = batch.n_steps;
    const int n = batch.n_assets;

    ReducedSolution sol;
    sol.grid = batch.grid;
    sol.n_paths = n_paths;
    sol.n_steps = n_steps;
    sol.n_assets = n;
    sol.basis_degree = numerics.basis_degree;
    sol.y.assign(static_cast<std::size_t>(n_paths) * (n_steps + 1), 0.0);
    sol.z.assign(static_cast<std::size_t>(n_paths) * n_steps * n, 0.0);
    sol.pathwise.assign(static_cast<std::size_t>(n_paths), 0.0);
    if (options.keep_regression) sol.fits.resize(static_cast<std::size_t>(n_steps));

    for (int p = 0; p < n_paths; ++p) {
        sol.y[static_cast<std::size_t>(p) * (n_steps + 1) + n_steps] = terminal[p];
        sol.pathwise[p] = terminal[p];
    }

    const PolyBasis basis(n, numerics.basis_degree);
    std::vector<double> target(static_cast<std::size_t>(n_paths));
    std::vector<double> fitted_mean(static_cast<std::size_t>(n_paths));
    std::vector<std::vector<double>> beta_z(static_cast<std::size_t>(n));

    for (int i = n_steps - 1; i >= 0; --i) {
        const double t = batch.grid[i];
        const double dt = batch.grid[i + 1] - t;
        const DriverCoeffs coeffs = driver_coeffs(market, t);
        const StepRegression reg(batch, i, basis);

        for (int p = 0; p < n_paths; ++p) {
            target[p] = sol.y[static_cast<std::size_t>(p) * (n_steps + 1) + i + 1];
        }
        const std::vector<double> beta_y = reg.fit(target);
        for (int p = 0; p < n_paths; ++p) fitted_mean[p] = reg.predict(p, beta_y);
        // martingale-increment targets, centered by the fitted conditional
        // mean (same expectation, far lower variance)
        for (int a = 0; a < n; ++a) {
            for (int p = 0; p < n_paths; ++p) {
                const double y_next = sol.y[static_cast<std::size_t>(p) * (n_steps + 1) + i + 1];
                target[p] = (y_next - fitted_mean[p]) * batch.dw_at(p, i)[a];
            }
            beta_z[a] = reg.fit(target);
        }

        parallel_chunks(static_cast<std::size_t>(n_paths), [&](std::size_t, std::size_t begin,
                                                                std::size_t end) {
            for (std::size_t p = begin; p < end; ++p) {
                const int pi = static_cast<int>(p);
                double* z_row = sol.z.data() + (p * n_steps + i) * n;
                for (int a = 0; a < n; ++a) z_row[a] = reg.predict(pi, beta_z[a]) / dt;
                const std::span<const double> z_span{z_row, static_cast<std::size_t>(n)};

                const double m = fitted_mean[p];
                double y_it = m;
                for (int k = 0; k < numerics.picard_iters; ++k) {
                    const double y_next = m + dt * driver(i, pi, coeffs, y_it, z_span);
                    const double change = std::abs(y_next - y_it);
                    y_it = y_next;
                    if (change <= numerics.picard_tol * std::max(1.0, std::abs(y_it))) break;
                }
                sol.y[p * (n_steps + 1) + i] = y_it;
                sol.pathwise[p] += dt * driver(i, pi, coeffs, y_it, z_span);
            }
        });

        if (options.keep_regression) {
            ReducedSolution::StepFit& fit = sol.fits[static_cast<std::size_t>(i)];
            fit.beta_y = beta_y;
            fit.beta_z = beta_z;
            fit.kept = reg.kept();
            fit.center = reg.center();
            fit.scale = reg.scale();
        }
    }

    sol.y0 = sol.y[0];
    sol.se_y0 = mean_se(sol.pathwise).se;
    return sol;
}

} // namespace

ReducedSolution solve_reduced_lsmc(DriverId id, const MarketSpec& market,
                                   const ContractSpec& contract, const PathBatch& batch,
                                   const VhatSolution& vhat, const NumericsConfig& numerics,
                                   const LsmcOptions& options) {
    if (batch.measure != Measure::P) {
        throw ConfigError("solve_reduced_lsmc: batch must be simulated under P");
    }
    std::vector<double> terminal(static_cast<std::size_t>(batch.n_paths));
    for (int p = 0; p < batch.n_paths; ++p) {
        terminal[p] = payoff_eval(contract.payoff, batch.assets_at(p, batch.n_steps));
    }
    const CloseoutSpec closeout = contract.closeout;
    auto driver = [&, id](int step, int path, const DriverCoeffs& c, double y,
                          std::span<const double> z) {
        const double vh = vhat.on_batch(batch, path, step);
        const auto [p1, p2] = closeout_eval(closeout, vh);
        return reduce_driver(id, c, y, z, vh, p1, p2);
    };
    return backward_sweep(market, batch, numerics, terminal, driver, options);
}

ReducedSolution solve_first_order(Side side, const MarketSpec& market,
                                  const ContractSpec& contract, const PathBatch& batch,
                                  const ReducedSolution& zeroth, const VhatSolution& vhat,
                                  const NumericsConfig& numerics, FirstOrderForm form,
                                  const LsmcOptions& options) {
    if (zeroth.n_paths != batch.n_paths || zeroth.n_steps != batch.n_steps) {
        throw ConfigError("solve_first_order: zeroth-order solution does not match the batch");
    }
    const std::vector<double> terminal(static_cast<std::size_t>(batch.n_paths), 0.0);
    const CloseoutSpec closeout = contract.closeout;
    auto driver = [&, side, form](int step, int path, const DriverCoeffs& c, double y,
                                  std::span<const double> z) {
        const double vh = vhat.on_batch(batch, path, step);
        const auto [p1, p2] = closeout_eval(closeout, vh);
        const double src = first_order_source(c, side, zeroth.y_at(path, step),
                                              zeroth.z_at(path, step), vh, p1, p2);
        return first_order_homogeneous(c, form, y, z, p1, p2) + src;
    };
    return backward_sweep(market, batch, numerics, terminal, driver, options);
}

FullSolution lift_solution(ReducedSolution reduced, const VhatSolution& vhat,
                           const CloseoutSpec& closeout, const PathBatch& batch) {
    if (reduced.n_paths != batch.n_paths || reduced.n_steps != batch.n_steps) {
        throw ConfigError("lift_solution: shapes disagree");
    }
    FullSolution full;
    full.u1.assign(reduced.y.size(), 0.0);
    full.u2.assign(reduced.y.size(), 0.0);
    for (int p = 0; p < reduced.n_paths; ++p) {
        for (int i = 0; i <= reduced.n_steps; ++i) {
            const double vh = vhat.on_batch(batch, p, i);
            const auto [p1, p2] = closeout_eval(closeout, vh);
            const std::size_t idx = static_cast<std::size_t>(p) * (reduced.n_steps + 1) + i;
            full.u1[idx] = p1 - reduced.y[idx];
            full.u2[idx] = p2 - reduced.y[idx];
        }
    }
    full.reduced = std::move(reduced);
    return full;
}

PriceBounds price_bounds(const MarketSpec& market, const ContractSpec& contract,
                         const NumericsConfig& numerics) {
    const ValidationReport check = validate_market(market);
    if (!check.valid()) {
        throw ConfigError("price_bounds: invalid market: " + check.violations.front().message);
    }
    const PathBatch batch = simulate_asset_paths(market, contract.T, numerics, Measure::P);
    const VhatSolution vhat = solve_vhat(market, contract, batch);
    const ReducedSolution upper =
        solve_reduced_lsmc(DriverId::FullPlus, market, contract, batch, vhat, numerics);
    const ReducedSolution lower =
        solve_reduced_lsmc(DriverId::FullMinus, market, contract, batch, vhat, numerics);

    PriceBounds out;
    out.p_upper = upper.y0;
    out.se_upper = upper.se_y0;
    out.p_lower = lower.y0;
    out.se_lower = lower.se_y0;

    if (check.flag_44) { // spreads are nonnegative here (validation passed)
        std::vector<double> diff(static_cast<std::size_t>(batch.n_paths));
        for (int p = 0; p < batch.n_paths; ++p) diff[p] = upper.pathwise[p] - lower.pathwise[p];
        const double se_diff = mean_se(diff).se;
        if (out.p_lower > out.p_upper + 2.0 * se_diff) {
            throw NumericError("price_bounds: lower bound exceeds upper bound beyond tolerance");
        }
    }
    return out;
}

} // namespace xvabsde

#pragma once

#include <span>
#include <vector>

#include "xvabsde/drivers.hpp"
#include "xvabsde/market.hpp"
#include "xvabsde/paths.hpp"
#include "xvabsde/vhat.hpp"

namespace xvabsde {

/// Solution of a reduced BSDE on the Brownian filtration: per-path value and
/// martingale-integrand fields on the time grid, value and standard error at
/// time zero, and the per-path accumulators used for combined standard
/// errors on common random numbers.
struct ReducedSolution {
    std::vector<double> grid;
    int n_paths = 0;
    int n_steps = 0;
    int n_assets = 0;
    double y0 = 0.0;
    double se_y0 = 0.0;
    std::vector<double> y;        // [path][step], n_steps + 1 values per path
    std::vector<double> z;        // [path][step][asset], n_steps entries per path
    std::vector<double> pathwise; // terminal payoff + accumulated driver, per path

    double y_at(int path, int step) const {
        return y[static_cast<std::size_t>(path) * (n_steps + 1) + step];
    }
    std::span<const double> z_at(int path, int step) const {
        return {z.data() + (static_cast<std::size_t>(path) * n_steps + step) * n_assets,
                static_cast<std::size_t>(n_assets)};
    }

    /// Per-step regression fits, retained on request for evaluating the
    /// value/integrand fields at states not in the training batch.
    struct StepFit {
        std::vector<double> beta_y;
        std::vector<std::vector<double>> beta_z;
        std::vector<int> kept;
        std::vector<double> center;
        std::vector<double> scale;
    };
    std::vector<StepFit> fits;
    int basis_degree = 0;
};

struct LsmcOptions {
    bool keep_regression = false;
};

/// Backward least-squares Monte Carlo for the reduced BSDE with the chosen
/// driver: per step, conditional expectations by cross-sectional polynomial
/// regression, the integrand from the martingale-increment representation,
/// and an implicit-in-y fixed-point step.
ReducedSolution solve_reduced_lsmc(DriverId id, const MarketSpec& market,
                                   const ContractSpec& contract, const PathBatch& batch,
                                   const VhatSolution& vhat, const NumericsConfig& numerics,
                                   const LsmcOptions& options = {});

/// First-order spread-correction BSDE: zero terminal value, linear
/// homogeneous part per the chosen form, spread source frozen at the
/// zeroth-order solution.
ReducedSolution solve_first_order(Side side, const MarketSpec& market,
                                  const ContractSpec& contract, const PathBatch& batch,
                                  const ReducedSolution& zeroth, const VhatSolution& vhat,
                                  const NumericsConfig& numerics,
                                  FirstOrderForm form = FirstOrderForm::ZeroCloseout,
                                  const LsmcOptions& options = {});

/// Full-filtration solution: jump sizes u_i = phi_i(v_hat) - y_bar pathwise.
struct FullSolution {
    ReducedSolution reduced;
    std::vector<double> u1; // [path][step]
    std::vector<double> u2;

    double u1_at(int path, int step) const {
        return u1[static_cast<std::size_t>(path) * (reduced.n_steps + 1) + step];
    }
    double u2_at(int path, int step) const {
        return u2[static_cast<std::size_t>(path) * (reduced.n_steps + 1) + step];
    }
};

FullSolution lift_solution(ReducedSolution reduced, const VhatSolution& vhat,
                           const CloseoutSpec& closeout, const PathBatch& batch);

/// Super-/sub-hedging price interval from the two full drivers on common
/// random numbers.
struct PriceBounds {
    double p_lower = 0.0;
    double p_upper = 0.0;
    double se_lower = 0.0;
    double se_upper = 0.0;
};

PriceBounds price_bounds(const MarketSpec& market, const ContractSpec& contract,
                         const NumericsConfig& numerics);

} // namespace xvabsde

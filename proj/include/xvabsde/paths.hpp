#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "xvabsde/market.hpp"

namespace xvabsde {

/// Simulation measure tag: P prices risky assets with drift r_D, the repo
/// measure (P tilde) with drift r_r^0.
enum class Measure { P, PTilde };

/// Simulated asset paths with their Brownian increments. Stepping is exact
/// lognormal per interval; when schedule breakpoints fall strictly inside a
/// grid step, the step is subdivided internally (fine_grid / dw_fine) and dw
/// holds the aggregated per-step increment.
struct PathBatch {
    Measure measure = Measure::P;
    int n_paths = 0;
    int n_steps = 0;
    int n_assets = 0;
    std::uint64_t seed = 0;
    std::vector<double> grid;      // n_steps + 1 times
    std::vector<double> s;         // [path][step][asset]
    std::vector<double> dw;        // [path][step][asset]
    std::vector<double> fine_grid; // empty when no subdivision was needed
    std::vector<double> dw_fine;   // [path][fine_step][asset]

    bool has_fine() const { return !dw_fine.empty(); }
    int n_fine_steps() const {
        return has_fine() ? static_cast<int>(fine_grid.size()) - 1 : n_steps;
    }

    std::span<const double> assets_at(int path, int step) const {
        return {s.data() + (static_cast<std::size_t>(path) * (n_steps + 1) + step) * n_assets,
                static_cast<std::size_t>(n_assets)};
    }
    double price(int path, int step, int asset) const { return assets_at(path, step)[asset]; }
    std::span<const double> dw_at(int path, int step) const {
        return {dw.data() + (static_cast<std::size_t>(path) * n_steps + step) * n_assets,
                static_cast<std::size_t>(n_assets)};
    }
    std::span<const double> dw_fine_at(int path, int fine_step) const {
        return {dw_fine.data() +
                    (static_cast<std::size_t>(path) * n_fine_steps() + fine_step) * n_assets,
                static_cast<std::size_t>(n_assets)};
    }
};

PathBatch simulate_asset_paths(const MarketSpec& market, double horizon,
                               const NumericsConfig& numerics, Measure measure);

/// Default times of hedger (tau1) and counterparty (tau2) with the underlying
/// unit-exponential draws; +infinity marks no default before any horizon of
/// interest.
struct DefaultSample {
    double tau1 = 0.0;
    double tau2 = 0.0;
    double e1 = 0.0;
    double e2 = 0.0;
};

/// Exact inversion of the piecewise-linear cumulative hazard over an
/// independent unit exponential per obligor.
std::vector<DefaultSample> sample_default_times(const MarketSpec& market, double horizon,
                                                int n_samples, std::uint64_t seed);

/// Defaultable bond paths on the batch grid; prices are exactly zero from the
/// issuer's default time onward.
struct BondPaths {
    int n_paths = 0;
    int n_steps = 0;
    std::vector<double> p_I; // [path][step]
    std::vector<double> p_C;

    double pI(int path, int step) const {
        return p_I[static_cast<std::size_t>(path) * (n_steps + 1) + step];
    }
    double pC(int path, int step) const {
        return p_C[static_cast<std::size_t>(path) * (n_steps + 1) + step];
    }
};

BondPaths defaultable_bond_paths(const MarketSpec& market, const PathBatch& batch,
                                 std::span<const DefaultSample> defaults);

/// Per-path terminal density of the repo measure against P, evaluated along a
/// P-measure batch; used as a cross-check of direct drift-changed simulation.
std::vector<double> girsanov_weights(const MarketSpec& market, const PathBatch& batch);

/// Mid-rate schedule of a two-sided rate schedule.
ScalarSchedule mid_schedule(const RateSchedule& rates);

/// Half-spread schedule of a two-sided rate schedule.
ScalarSchedule spread_schedule(const RateSchedule& rates);

/// Debug dump: path_id, t, S_1..S_n rows (not a stability contract).
void dump_paths_csv(const PathBatch& batch, std::ostream& os);

} // namespace xvabsde

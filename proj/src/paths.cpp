#include "xvabsde/paths.hpp"

#include <cmath>
#include <ostream>

#include "xvabsde/errors.hpp"
#include "xvabsde/parallel.hpp"
#include "xvabsde/rng.hpp"

namespace xvabsde {

namespace {

bool grids_equal(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) return false;
    }
    return true;
}

} // namespace

ScalarSchedule mid_schedule(const RateSchedule& rates) {
    ScalarSchedule out;
    out.breakpoints = rates.breakpoints;
    out.values.reserve(rates.values.size());
    for (const RatePair& p : rates.values) out.values.push_back(p.mid());
    return out;
}

ScalarSchedule spread_schedule(const RateSchedule& rates) {
    ScalarSchedule out;
    out.breakpoints = rates.breakpoints;
    out.values.reserve(rates.values.size());
    for (const RatePair& p : rates.values) out.values.push_back(p.half_spread());
    return out;
}

PathBatch simulate_asset_paths(const MarketSpec& market, double horizon,
                               const NumericsConfig& numerics, Measure measure) {
    // Path generation needs structural validity only; sigma invertibility and
    // spread signs are enforced where sigma^{-1} and the rate pairs are used.
    const ValidationReport check = validate_market(market);
    for (const Violation& v : check.violations) {
        if (v.code == "schedule_shape" || v.code == "initial_prices" || v.code == "n_assets") {
            throw ConfigError("simulate_asset_paths: invalid market: " + v.message);
        }
    }
    if (!(horizon > 0.0)) throw ConfigError("simulate_asset_paths: horizon must be positive");

    const int n = market.n;
    const int n_paths = numerics.n_paths;
    const int n_steps = numerics.n_steps;

    PathBatch batch;
    batch.measure = measure;
    batch.n_paths = n_paths;
    batch.n_steps = n_steps;
    batch.n_assets = n;
    batch.seed = numerics.seed;
    batch.grid = uniform_grid(horizon, n_steps);

    const std::vector<double> fine = merge_times(batch.grid, market.all_breakpoints());
    const bool refined = !grids_equal(fine, batch.grid);
    if (refined) batch.fine_grid = fine;
    const int n_fine = static_cast<int>(fine.size()) - 1;

    // map fine step -> coarse step
    std::vector<int> coarse_of(static_cast<std::size_t>(n_fine));
    {
        int ci = 0;
        for (int j = 0; j < n_fine; ++j) {
            while (ci + 1 < n_steps && fine[j] >= batch.grid[ci + 1] - 1e-14) ++ci;
            coarse_of[j] = ci;
        }
    }

    const ScalarSchedule drift_sched =
        measure == Measure::P ? market.r_D : mid_schedule(market.r_r);

    // per-fine-step coefficients (deterministic in time)
    std::vector<double> dt(static_cast<std::size_t>(n_fine));
    std::vector<double> sqrt_dt(static_cast<std::size_t>(n_fine));
    std::vector<Mat> vol(static_cast<std::size_t>(n_fine));
    std::vector<std::vector<double>> log_drift(static_cast<std::size_t>(n_fine));
    for (int j = 0; j < n_fine; ++j) {
        const double lo = fine[j];
        dt[j] = fine[j + 1] - lo;
        sqrt_dt[j] = std::sqrt(dt[j]);
        vol[j] = market.sigma.at(lo);
        const double mu = drift_sched.at(lo);
        std::vector<double> ld(static_cast<std::size_t>(n));
        for (int a = 0; a < n; ++a) {
            double row_sq = 0.0;
            for (int b = 0; b < n; ++b) row_sq += vol[j](a, b) * vol[j](a, b);
            ld[a] = (mu - 0.5 * row_sq) * dt[j];
        }
        log_drift[j] = std::move(ld);
    }

    batch.s.assign(static_cast<std::size_t>(n_paths) * (n_steps + 1) * n, 0.0);
    batch.dw.assign(static_cast<std::size_t>(n_paths) * n_steps * n, 0.0);
    if (refined) {
        batch.dw_fine.assign(static_cast<std::size_t>(n_paths) * n_fine * n, 0.0);
    }

    const CounterRng rng(numerics.seed);
    parallel_chunks(static_cast<std::size_t>(n_paths), [&](std::size_t, std::size_t begin,
                                                            std::size_t end) {
        std::vector<double> x(static_cast<std::size_t>(n));
        std::vector<double> dwj(static_cast<std::size_t>(n));
        for (std::size_t p = begin; p < end; ++p) {
            for (int a = 0; a < n; ++a) x[a] = std::log(market.S0[a]);
            double* s_row = batch.s.data() + (p * (n_steps + 1)) * n;
            for (int a = 0; a < n; ++a) s_row[a] = market.S0[a];
            double* dw_row = batch.dw.data() + (p * n_steps) * n;
            double* dwf_row = refined ? batch.dw_fine.data() + (p * n_fine) * n : nullptr;

            for (int j = 0; j < n_fine; ++j) {
                for (int a = 0; a < n; ++a) {
                    dwj[a] = rng.normal(streams::kAssets, p,
                                        static_cast<std::uint64_t>(j) * n + a) *
                             sqrt_dt[j];
                }
                const Mat& sg = vol[j];
                for (int a = 0; a < n; ++a) {
                    double diff = 0.0;
                    for (int b = 0; b < n; ++b) diff += sg(a, b) * dwj[b];
                    x[a] += log_drift[j][a] + diff;
                }
                const int ci = coarse_of[j];
                for (int a = 0; a < n; ++a) dw_row[ci * n + a] += dwj[a];
                if (refined) {
                    for (int a = 0; a < n; ++a) dwf_row[j * n + a] = dwj[a];
                }
                // store prices when a coarse grid time is reached
                if (fine[j + 1] >= batch.grid[ci + 1] - 1e-14) {
                    double* out = s_row + static_cast<std::size_t>(ci + 1) * n;
                    for (int a = 0; a < n; ++a) out[a] = std::exp(x[a]);
                }
            }
        }
    });

    return batch;
}

std::vector<DefaultSample> sample_default_times(const MarketSpec& market, double horizon,
                                                int n_samples, std::uint64_t seed) {
    const CounterRng rng(seed);
    std::vector<DefaultSample> out(static_cast<std::size_t>(n_samples));
    constexpr double inf = std::numeric_limits<double>::infinity();

    auto invert = [&](const ScalarSchedule& h, double e) -> double {
        double cum = 0.0;
        double tau = inf;
        h.for_each_piece(0.0, horizon, [&](double lo, double hi, double rate) {
            if (tau < inf) return;
            const double next = cum + rate * (hi - lo);
            if (next >= e) {
                tau = rate > 0.0 ? lo + (e - cum) / rate : lo;
            }
            cum = next;
        });
        return tau;
    };

    parallel_chunks(out.size(), [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            DefaultSample& d = out[i];
            d.e1 = rng.exponential(streams::kDefaultHedger, i, 0);
            d.e2 = rng.exponential(streams::kDefaultCounterparty, i, 0);
            d.tau1 = invert(market.h1, d.e1);
            d.tau2 = invert(market.h2, d.e2);
        }
    });
    return out;
}

BondPaths defaultable_bond_paths(const MarketSpec& market, const PathBatch& batch,
                                 std::span<const DefaultSample> defaults) {
    if (batch.measure != Measure::P) {
        throw ConfigError("defaultable_bond_paths: batch must be simulated under P");
    }
    if (defaults.size() != static_cast<std::size_t>(batch.n_paths)) {
        throw ConfigError("defaultable_bond_paths: one DefaultSample per path required");
    }
    const int n = batch.n_assets;
    const int n_steps = batch.n_steps;
    const std::vector<double>& fine =
        batch.has_fine() ? batch.fine_grid : batch.grid;
    const int n_fine = static_cast<int>(fine.size()) - 1;

    struct Leg {
        std::vector<double> row;  // sigma row at piece start
        double drift;             // (r_D + h - |row|^2/2) dt
    };
    std::vector<Leg> legI(static_cast<std::size_t>(n_fine)), legC(static_cast<std::size_t>(n_fine));
    for (int j = 0; j < n_fine; ++j) {
        const double lo = fine[j];
        const double dt = fine[j + 1] - lo;
        const double rd = market.r_D.at(lo);
        auto make = [&](const RowSchedule& sig, const ScalarSchedule& h) {
            Leg leg;
            leg.row = sig.at(lo);
            double sq = 0.0;
            for (double v : leg.row) sq += v * v;
            leg.drift = (rd + h.at(lo) - 0.5 * sq) * dt;
            return leg;
        };
        legI[j] = make(market.sigma_I, market.h1);
        legC[j] = make(market.sigma_C, market.h2);
    }

    BondPaths bonds;
    bonds.n_paths = batch.n_paths;
    bonds.n_steps = n_steps;
    bonds.p_I.assign(static_cast<std::size_t>(batch.n_paths) * (n_steps + 1), 0.0);
    bonds.p_C.assign(bonds.p_I.size(), 0.0);

    parallel_chunks(static_cast<std::size_t>(batch.n_paths), [&](std::size_t, std::size_t begin,
                                                                  std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            double logI = 0.0, logC = 0.0;
            const double tau1 = defaults[p].tau1;
            const double tau2 = defaults[p].tau2;
            double* rowI = bonds.p_I.data() + p * (n_steps + 1);
            double* rowC = bonds.p_C.data() + p * (n_steps + 1);
            rowI[0] = market.PI0 * (tau1 > 0.0 ? 1.0 : 0.0);
            rowC[0] = market.PC0 * (tau2 > 0.0 ? 1.0 : 0.0);
            int ci = 0;
            for (int j = 0; j < n_fine; ++j) {
                const std::span<const double> dwj = batch.has_fine()
                                                        ? batch.dw_fine_at(static_cast<int>(p), j)
                                                        : batch.dw_at(static_cast<int>(p), j);
                double diffI = 0.0, diffC = 0.0;
                for (int a = 0; a < n; ++a) {
                    diffI += legI[j].row[a] * dwj[a];
                    diffC += legC[j].row[a] * dwj[a];
                }
                logI += legI[j].drift + diffI;
                logC += legC[j].drift + diffC;
                if (fine[j + 1] >= batch.grid[ci + 1] - 1e-14) {
                    ++ci;
                    const double t = batch.grid[ci];
                    rowI[ci] = t < tau1 ? market.PI0 * std::exp(logI) : 0.0;
                    rowC[ci] = t < tau2 ? market.PC0 * std::exp(logC) : 0.0;
                }
            }
        }
    });
    return bonds;
}

std::vector<double> girsanov_weights(const MarketSpec& market, const PathBatch& batch) {
    if (batch.measure != Measure::P) {
        throw ConfigError("girsanov_weights: batch must be simulated under P");
    }
    const int n = batch.n_assets;
    const std::vector<double>& fine = batch.has_fine() ? batch.fine_grid : batch.grid;
    const int n_fine = static_cast<int>(fine.size()) - 1;
    const ScalarSchedule rr0 = mid_schedule(market.r_r);

    std::vector<double> theta(static_cast<std::size_t>(n_fine));
    std::vector<std::vector<double>> sinv1(static_cast<std::size_t>(n_fine));
    std::vector<double> quad(static_cast<std::size_t>(n_fine));
    for (int j = 0; j < n_fine; ++j) {
        const double lo = fine[j];
        const double dt = fine[j + 1] - lo;
        theta[j] = rr0.at(lo) - market.r_D.at(lo);
        sinv1[j] = solve_dense(market.sigma.at(lo), std::vector<double>(n, 1.0));
        double norm_sq = 0.0;
        for (double v : sinv1[j]) norm_sq += v * v;
        quad[j] = 0.5 * theta[j] * theta[j] * norm_sq * dt;
    }

    std::vector<double> weights(static_cast<std::size_t>(batch.n_paths));
    parallel_chunks(weights.size(), [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            double log_e = 0.0;
            for (int j = 0; j < n_fine; ++j) {
                const std::span<const double> dwj =
                    batch.has_fine() ? batch.dw_fine_at(static_cast<int>(p), j)
                                     : batch.dw_at(static_cast<int>(p), j);
                double proj = 0.0;
                for (int a = 0; a < n; ++a) proj += sinv1[j][a] * dwj[a];
                log_e += theta[j] * proj - quad[j];
            }
            weights[p] = std::exp(log_e);
        }
    });
    return weights;
}

void dump_paths_csv(const PathBatch& batch, std::ostream& os) {
    os << "path_id,t";
    for (int a = 0; a < batch.n_assets; ++a) os << ",S_" << (a + 1);
    os << "\n";
    for (int p = 0; p < batch.n_paths; ++p) {
        for (int i = 0; i <= batch.n_steps; ++i) {
            os << p << "," << batch.grid[i];
            const auto row = batch.assets_at(p, i);
            for (double v : row) os << "," << v;
            os << "\n";
        }
    }
}

} // namespace xvabsde

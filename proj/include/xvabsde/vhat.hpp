#pragma once

#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include "xvabsde/market.hpp"
#include "xvabsde/paths.hpp"

namespace xvabsde {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

/// Lognormal closed-form price of a menu payoff under deterministic
/// piecewise-constant drift/discount/volatility schedules. Scalar payoffs
/// read the first asset, whose log is Gaussian with integrated drift and
/// row-variance; single-asset baskets with positive weight are scaled calls.
class MenuPricer {
public:
    MenuPricer(PayoffSpec payoff, ScalarSchedule drift, ScalarSchedule discount,
               MatrixSchedule sigma, double maturity);

    /// Deterministic pieces of the valuation at time t: discount and growth
    /// factors over [t, T] and the integrated variance of the first asset.
    struct Slice {
        double discount = 1.0;
        double growth = 1.0;
        double variance = 0.0;
    };
    Slice slice(double t) const;

    double value(const Slice& sl, std::span<const double> s) const;
    double value(double t, std::span<const double> s) const { return value(slice(t), s); }

    /// First-asset delta (d value / d s_1).
    double delta1(const Slice& sl, std::span<const double> s) const;
    double delta1(double t, std::span<const double> s) const { return delta1(slice(t), s); }

    double maturity() const { return maturity_; }
    const PayoffSpec& payoff() const { return payoff_; }

private:
    PayoffSpec payoff_;
    ScalarSchedule drift_;
    ScalarSchedule discount_;
    ScalarSchedule row_var_; // |sigma row 1|^2
    double maturity_;
};

enum class VhatMode { Auto, ForceRegression };

/// Reference value process of the terminal claim: conditional expectation
/// discounted at the risk-free rate. Closed form for menu payoffs, a
/// per-step polynomial regression estimate otherwise.
class VhatSolution {
public:
    enum class Mode { Analytic, Regression };

    Mode mode() const { return mode_; }
    double v0() const { return v0_; }
    const std::vector<double>& grid() const { return grid_; }

    /// Value at a node of the originating batch.
    double on_batch(const PathBatch& batch, int path, int step) const;

    /// Value as a function of state: exact in analytic mode; in regression
    /// mode the fitted polynomial of the latest grid step at or before t.
    double value(double t, std::span<const double> s) const;

    /// Martingale integrand of the reference value (analytic mode only).
    bool has_delta() const { return mode_ == Mode::Analytic; }
    std::vector<double> delta(double t, std::span<const double> s) const;

    const MenuPricer& pricer() const { return *pricer_; }
    const MenuPricer::Slice& slice(int step) const { return slices_[step]; }

private:
    friend VhatSolution solve_vhat(const MarketSpec&, const ContractSpec&, const PathBatch&, VhatMode);

    struct StepFit {
        std::vector<double> coeffs;
        std::vector<int> kept;
        std::vector<double> center;
        std::vector<double> scale;
    };

    Mode mode_ = Mode::Analytic;
    double v0_ = 0.0;
    std::vector<double> grid_;
    int n_paths_ = 0;
    int n_assets_ = 0;
    int basis_degree_ = 0;
    PayoffSpec payoff_;
    std::shared_ptr<const MenuPricer> pricer_;
    std::vector<MenuPricer::Slice> slices_;
    MatrixSchedule sigma_;
    std::vector<double> values_;   // regression mode, [path][step]
    std::vector<StepFit> fits_;    // regression mode, per step 0..N-1
};

/// Solves the reference-value equation on a P-measure batch.
VhatSolution solve_vhat(const MarketSpec& market, const ContractSpec& contract,
                        const PathBatch& batch, VhatMode mode = VhatMode::Auto);

} // namespace xvabsde

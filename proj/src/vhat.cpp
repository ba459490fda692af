#include "xvabsde/vhat.hpp"

#include <algorithm>
#include <cmath>

#include "xvabsde/errors.hpp"
#include "xvabsde/parallel.hpp"
#include "xvabsde/regression.hpp"

namespace xvabsde {

namespace {

// Undiscounted expectation of (F_T - K)^+ when log F_T ~ N(log F - v/2, v).
double call_core(double fwd, double strike, double variance) {
    if (strike <= 0.0) return fwd - strike;
    if (variance <= 1e-300) return std::max(fwd - strike, 0.0);
    const double sv = std::sqrt(variance);
    const double d1 = std::log(fwd / strike) / sv + 0.5 * sv;
    return fwd * normal_cdf(d1) - strike * normal_cdf(d1 - sv);
}

double call_delta_core(double fwd, double strike, double variance) {
    if (strike <= 0.0) return 1.0;
    if (variance <= 1e-300) return fwd > strike ? 1.0 : (fwd < strike ? 0.0 : 0.5);
    const double sv = std::sqrt(variance);
    return normal_cdf(std::log(fwd / strike) / sv + 0.5 * sv);
}

} // namespace

MenuPricer::MenuPricer(PayoffSpec payoff, ScalarSchedule drift, ScalarSchedule discount,
                       MatrixSchedule sigma, double maturity)
    : payoff_(std::move(payoff)),
      drift_(std::move(drift)),
      discount_(std::move(discount)),
      maturity_(maturity) {
    if (!payoff_has_closed_form(payoff_, sigma.values.empty()
                                             ? 1
                                             : static_cast<int>(sigma.values.front().rows))) {
        throw ConfigError("MenuPricer: payoff has no lognormal closed form");
    }
    row_var_.breakpoints = sigma.breakpoints;
    row_var_.values.reserve(sigma.values.size());
    for (const Mat& m : sigma.values) {
        double sq = 0.0;
        for (std::size_t b = 0; b < m.cols; ++b) sq += m(0, b) * m(0, b);
        row_var_.values.push_back(sq);
    }
}

MenuPricer::Slice MenuPricer::slice(double t) const {
    Slice sl;
    sl.discount = std::exp(-integrate(discount_, t, maturity_));
    sl.growth = std::exp(integrate(drift_, t, maturity_));
    sl.variance = integrate(row_var_, t, maturity_);
    return sl;
}

double MenuPricer::value(const Slice& sl, std::span<const double> s) const {
    return std::visit(
        [&](const auto& p) -> double {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, ConstantPayoff>) {
                return sl.discount * p.value;
            } else if constexpr (std::is_same_v<T, ForwardPayoff>) {
                return sl.discount * (s[0] * sl.growth - p.strike);
            } else if constexpr (std::is_same_v<T, CallPayoff>) {
                return sl.discount * call_core(s[0] * sl.growth, p.strike, sl.variance);
            } else if constexpr (std::is_same_v<T, PutPayoff>) {
                // put = call - forward
                const double fwd = s[0] * sl.growth;
                return sl.discount * (call_core(fwd, p.strike, sl.variance) - (fwd - p.strike));
            } else {
                const double w = p.weights[0];
                const double fwd = w * s[0] * sl.growth;
                return sl.discount * call_core(fwd, p.strike, sl.variance);
            }
        },
        payoff_);
}

double MenuPricer::delta1(const Slice& sl, std::span<const double> s) const {
    return std::visit(
        [&](const auto& p) -> double {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, ConstantPayoff>) {
                return 0.0;
            } else if constexpr (std::is_same_v<T, ForwardPayoff>) {
                return sl.discount * sl.growth;
            } else if constexpr (std::is_same_v<T, CallPayoff>) {
                return sl.discount * sl.growth *
                       call_delta_core(s[0] * sl.growth, p.strike, sl.variance);
            } else if constexpr (std::is_same_v<T, PutPayoff>) {
                return sl.discount * sl.growth *
                       (call_delta_core(s[0] * sl.growth, p.strike, sl.variance) - 1.0);
            } else {
                const double w = p.weights[0];
                return sl.discount * sl.growth * w *
                       call_delta_core(w * s[0] * sl.growth, p.strike, sl.variance);
            }
        },
        payoff_);
}

double VhatSolution::on_batch(const PathBatch& batch, int path, int step) const {
    if (mode_ == Mode::Analytic) {
        return pricer_->value(slices_[static_cast<std::size_t>(step)],
                              batch.assets_at(path, step));
    }
    return values_[static_cast<std::size_t>(path) * grid_.size() + step];
}

double VhatSolution::value(double t, std::span<const double> s) const {
    if (mode_ == Mode::Analytic) return pricer_->value(t, s);
    // regression transfer: use the fit of the last grid step at or before t
    const auto it = std::upper_bound(grid_.begin(), grid_.end(), t + 1e-14);
    std::size_t step = it == grid_.begin() ? 0 : static_cast<std::size_t>(it - grid_.begin()) - 1;
    if (step >= fits_.size()) {
        return payoff_eval(payoff_, s); // at or beyond maturity
    }
    const StepFit& fit = fits_[step];
    const PolyBasis basis(n_assets_, basis_degree_);
    std::vector<double> logs(static_cast<std::size_t>(n_assets_));
    for (int a = 0; a < n_assets_; ++a) logs[a] = std::log(s[a]);
    std::vector<double> raw(static_cast<std::size_t>(basis.size()));
    basis.eval_logs(logs, raw);
    double acc = 0.0;
    for (std::size_t jj = 0; jj < fit.kept.size(); ++jj) {
        const int j = fit.kept[jj];
        const double f = j == 0 ? 1.0 : (raw[j] - fit.center[j]) / fit.scale[j];
        acc += f * fit.coeffs[jj];
    }
    return acc;
}

std::vector<double> VhatSolution::delta(double t, std::span<const double> s) const {
    if (!has_delta()) throw ConfigError("VhatSolution: delta unavailable in regression mode");
    // Delta(t) = sigma(t)^T diag(S) grad V = first-asset delta times s_1 sigma row 1
    const double d1 = pricer_->delta1(t, s);
    const Mat& sg = sigma_.at(t);
    std::vector<double> out(sg.cols);
    for (std::size_t b = 0; b < sg.cols; ++b) out[b] = sg(0, b) * s[0] * d1;
    return out;
}

VhatSolution solve_vhat(const MarketSpec& market, const ContractSpec& contract,
                        const PathBatch& batch, VhatMode mode) {
    if (batch.measure != Measure::P) {
        throw ConfigError("solve_vhat: batch must be simulated under P");
    }
    VhatSolution sol;
    sol.grid_ = batch.grid;
    sol.n_paths_ = batch.n_paths;
    sol.n_assets_ = batch.n_assets;
    sol.payoff_ = contract.payoff;
    sol.sigma_ = market.sigma;

    if (mode != VhatMode::ForceRegression && payoff_has_closed_form(contract.payoff, market.n)) {
        sol.mode_ = VhatSolution::Mode::Analytic;
        sol.pricer_ = std::make_shared<MenuPricer>(contract.payoff, market.r_D, market.r_D,
                                                   market.sigma, contract.T);
        sol.slices_.reserve(sol.grid_.size());
        for (double t : sol.grid_) sol.slices_.push_back(sol.pricer_->slice(t));
        sol.v0_ = sol.pricer_->value(sol.slices_.front(), market.S0);
        return sol;
    }

    // regression fallback: exact one-step discounting of the fitted
    // conditional expectation
    sol.mode_ = VhatSolution::Mode::Regression;
    sol.basis_degree_ = 2;
    const int n_steps = batch.n_steps;
    const int n_paths = batch.n_paths;
    const std::size_t width = sol.grid_.size();
    sol.values_.assign(static_cast<std::size_t>(n_paths) * width, 0.0);
    sol.fits_.resize(static_cast<std::size_t>(n_steps));
    const PolyBasis basis(batch.n_assets, sol.basis_degree_);

    for (int p = 0; p < n_paths; ++p) {
        sol.values_[static_cast<std::size_t>(p) * width + n_steps] =
            payoff_eval(contract.payoff, batch.assets_at(p, n_steps));
    }
    std::vector<double> target(static_cast<std::size_t>(n_paths));
    for (int i = n_steps - 1; i >= 0; --i) {
        const double disc =
            std::exp(-integrate(market.r_D, sol.grid_[i], sol.grid_[i + 1]));
        for (int p = 0; p < n_paths; ++p) {
            target[p] = disc * sol.values_[static_cast<std::size_t>(p) * width + i + 1];
        }
        StepRegression reg(batch, i, basis);
        const std::vector<double> beta = reg.fit(target);
        for (int p = 0; p < n_paths; ++p) {
            sol.values_[static_cast<std::size_t>(p) * width + i] = reg.predict(p, beta);
        }
        VhatSolution::StepFit& fit = sol.fits_[static_cast<std::size_t>(i)];
        fit.coeffs = beta;
        fit.kept = reg.kept();
        fit.center = reg.center();
        fit.scale = reg.scale();
    }
    sol.v0_ = sol.values_[0];
    return sol;
}

} // namespace xvabsde

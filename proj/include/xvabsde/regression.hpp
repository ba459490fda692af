#pragma once

#include <span>
#include <vector>

#include "xvabsde/linalg.hpp"
#include "xvabsde/paths.hpp"

namespace xvabsde {

/// Polynomial features in log-prices up to a total degree, with intercept.
class PolyBasis {
public:
    PolyBasis(int n_assets, int degree);

    int size() const { return static_cast<int>(exponents_.size()); }
    int n_assets() const { return n_assets_; }

    /// Fills out[k] with prod_a logs[a]^e_k[a]; out.size() == size().
    void eval_logs(std::span<const double> logs, std::span<double> out) const;

    const std::vector<std::vector<int>>& exponents() const { return exponents_; }

private:
    int n_assets_;
    std::vector<std::vector<int>> exponents_;
};

/// Cross-sectional ordinary least squares at one backward-induction step.
/// The design matrix (standardized polynomial features of the step's asset
/// states) is factorized once and reused for every regression target at that
/// step. Assembly is chunked with pairwise reduction, so results do not
/// depend on the worker count.
class StepRegression {
public:
    StepRegression(const PathBatch& batch, int step, const PolyBasis& basis);

    /// Fits targets and returns the coefficient vector in feature space
    /// (including dropped-column placeholders). Throws NumericError naming
    /// the step when the Gram matrix is not factorizable.
    std::vector<double> fit(std::span<const double> targets) const;

    /// Fitted value for one training path given coefficients from fit().
    double predict(int path, std::span<const double> coeffs) const;

    /// Fitted value at an arbitrary state (prices), for transferring the
    /// estimated conditional-expectation function to fresh paths.
    double predict_state(std::span<const double> s, std::span<const double> coeffs) const;

    int n_features() const { return basis_size_; }
    const std::vector<int>& kept() const { return kept_; }
    const std::vector<double>& center() const { return center_; }
    const std::vector<double>& scale() const { return scale_; }

private:
    int n_paths_;
    int basis_size_;
    int step_;
    const PolyBasis* basis_;
    std::vector<double> features_;  // [path][feature], standardized, kept columns only
    std::vector<int> kept_;         // indices of non-degenerate columns
    std::vector<double> center_, scale_;
    Mat gram_;                      // factor-ready Gram of kept columns
};

} // namespace xvabsde

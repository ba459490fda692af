#include "xvabsde/regression.hpp"

#include <cmath>
#include <string>

#include "xvabsde/errors.hpp"
#include "xvabsde/parallel.hpp"

namespace xvabsde {

PolyBasis::PolyBasis(int n_assets, int degree) : n_assets_(n_assets) {
    // enumerate multi-indices with |e| <= degree, lowest total degree first
    std::vector<int> current(static_cast<std::size_t>(n_assets), 0);
    const auto total = [](const std::vector<int>& e) {
        int t = 0;
        for (int v : e) t += v;
        return t;
    };
    // odometer enumeration bounded by degree per component, filtered by total
    for (int target = 0; target <= degree; ++target) {
        std::fill(current.begin(), current.end(), 0);
        for (;;) {
            if (total(current) == target) exponents_.push_back(current);
            int pos = 0;
            while (pos < n_assets && current[pos] == degree) {
                current[pos] = 0;
                ++pos;
            }
            if (pos == n_assets) break;
            ++current[pos];
        }
    }
}

void PolyBasis::eval_logs(std::span<const double> logs, std::span<double> out) const {
    for (std::size_t k = 0; k < exponents_.size(); ++k) {
        double v = 1.0;
        const auto& e = exponents_[k];
        for (int a = 0; a < n_assets_; ++a) {
            for (int rep = 0; rep < e[a]; ++rep) v *= logs[a];
        }
        out[k] = v;
    }
}

StepRegression::StepRegression(const PathBatch& batch, int step, const PolyBasis& basis)
    : n_paths_(batch.n_paths),
      basis_size_(basis.size()),
      step_(step),
      basis_(&basis) {
    const int n = batch.n_assets;
    const int k = basis.size();

    // raw features per path
    std::vector<double> raw(static_cast<std::size_t>(n_paths_) * k);
    parallel_chunks(static_cast<std::size_t>(n_paths_), [&](std::size_t, std::size_t begin,
                                                            std::size_t end) {
        std::vector<double> logs(static_cast<std::size_t>(n));
        for (std::size_t p = begin; p < end; ++p) {
            const auto s = batch.assets_at(static_cast<int>(p), step);
            for (int a = 0; a < n; ++a) logs[a] = std::log(s[a]);
            basis.eval_logs(logs, {raw.data() + p * k, static_cast<std::size_t>(k)});
        }
    });

    // column means and centered variances in two deterministic chunked passes
    const std::size_t chunks = chunk_count(static_cast<std::size_t>(n_paths_));
    std::vector<double> part_sum(chunks * k, 0.0);
    parallel_chunks(static_cast<std::size_t>(n_paths_), [&](std::size_t c, std::size_t begin,
                                                            std::size_t end) {
        double* sums = part_sum.data() + c * k;
        for (std::size_t p = begin; p < end; ++p) {
            for (int j = 0; j < k; ++j) sums[j] += raw[p * k + j];
        }
    });
    center_.assign(static_cast<std::size_t>(k), 0.0);
    scale_.assign(static_cast<std::size_t>(k), 1.0);
    std::vector<double> slots_col(chunks);
    for (int j = 0; j < k; ++j) {
        for (std::size_t c = 0; c < chunks; ++c) slots_col[c] = part_sum[c * k + j];
        center_[j] = pairwise_sum(slots_col) / n_paths_;
    }
    std::vector<double> part_sq(chunks * k, 0.0);
    parallel_chunks(static_cast<std::size_t>(n_paths_), [&](std::size_t c, std::size_t begin,
                                                            std::size_t end) {
        double* sqs = part_sq.data() + c * k;
        for (std::size_t p = begin; p < end; ++p) {
            for (int j = 0; j < k; ++j) {
                const double d = raw[p * k + j] - center_[j];
                sqs[j] += d * d;
            }
        }
    });
    for (int j = 0; j < k; ++j) {
        for (std::size_t c = 0; c < chunks; ++c) slots_col[c] = part_sq[c * k + j];
        scale_[j] = std::sqrt(pairwise_sum(slots_col) / n_paths_);
    }

    // keep the intercept plus all non-degenerate columns
    kept_.push_back(0);
    center_[0] = 0.0;
    scale_[0] = 1.0;
    for (int j = 1; j < k; ++j) {
        if (scale_[j] > 1e-10 * std::max(1.0, std::abs(center_[j]))) kept_.push_back(j);
    }
    const int kk = static_cast<int>(kept_.size());

    features_.assign(static_cast<std::size_t>(n_paths_) * kk, 0.0);
    parallel_chunks(static_cast<std::size_t>(n_paths_), [&](std::size_t, std::size_t begin,
                                                            std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            for (int jj = 0; jj < kk; ++jj) {
                const int j = kept_[jj];
                const double v = raw[p * k + j];
                features_[p * kk + jj] = j == 0 ? 1.0 : (v - center_[j]) / scale_[j];
            }
        }
    });

    // Gram matrix, chunked and reduced pairwise per entry
    std::vector<double> part_gram(chunks * kk * kk, 0.0);
    parallel_chunks(static_cast<std::size_t>(n_paths_), [&](std::size_t c, std::size_t begin,
                                                            std::size_t end) {
        double* g = part_gram.data() + c * kk * kk;
        for (std::size_t p = begin; p < end; ++p) {
            const double* f = features_.data() + p * kk;
            for (int i = 0; i < kk; ++i) {
                for (int j = i; j < kk; ++j) g[i * kk + j] += f[i] * f[j];
            }
        }
    });
    gram_ = Mat(static_cast<std::size_t>(kk), static_cast<std::size_t>(kk));
    std::vector<double> slots(chunks);
    for (int i = 0; i < kk; ++i) {
        for (int j = i; j < kk; ++j) {
            for (std::size_t c = 0; c < chunks; ++c) slots[c] = part_gram[c * kk * kk + i * kk + j];
            const double v = pairwise_sum(slots);
            gram_(i, j) = v;
            gram_(j, i) = v;
        }
    }
}

std::vector<double> StepRegression::fit(std::span<const double> targets) const {
    const int kk = static_cast<int>(kept_.size());
    const std::size_t chunks = chunk_count(static_cast<std::size_t>(n_paths_));
    std::vector<double> part_xty(chunks * kk, 0.0);
    parallel_chunks(static_cast<std::size_t>(n_paths_), [&](std::size_t c, std::size_t begin,
                                                            std::size_t end) {
        double* acc = part_xty.data() + c * kk;
        for (std::size_t p = begin; p < end; ++p) {
            const double* f = features_.data() + p * kk;
            const double y = targets[p];
            for (int j = 0; j < kk; ++j) acc[j] += f[j] * y;
        }
    });
    std::vector<double> xty(static_cast<std::size_t>(kk));
    std::vector<double> slots(chunks);
    for (int j = 0; j < kk; ++j) {
        for (std::size_t c = 0; c < chunks; ++c) slots[c] = part_xty[c * kk + j];
        xty[j] = pairwise_sum(slots);
    }

    std::vector<double> beta;
    if (!cholesky_solve(gram_, xty, beta)) {
        throw NumericError("regression matrix rank-deficient at step " + std::to_string(step_));
    }
    return beta;
}

double StepRegression::predict(int path, std::span<const double> coeffs) const {
    const int kk = static_cast<int>(kept_.size());
    const double* f = features_.data() + static_cast<std::size_t>(path) * kk;
    double acc = 0.0;
    for (int j = 0; j < kk; ++j) acc += f[j] * coeffs[j];
    return acc;
}

double StepRegression::predict_state(std::span<const double> s,
                                     std::span<const double> coeffs) const {
    const int n = basis_->n_assets();
    std::vector<double> logs(static_cast<std::size_t>(n));
    for (int a = 0; a < n; ++a) logs[a] = std::log(s[a]);
    std::vector<double> raw(static_cast<std::size_t>(basis_size_));
    basis_->eval_logs(logs, raw);
    double acc = 0.0;
    for (std::size_t jj = 0; jj < kept_.size(); ++jj) {
        const int j = kept_[jj];
        const double f = j == 0 ? 1.0 : (raw[j] - center_[j]) / scale_[j];
        acc += f * coeffs[jj];
    }
    return acc;
}

} // namespace xvabsde

#include "xvabsde/stats.hpp"

#include <algorithm>
#include <cmath>

#include "xvabsde/errors.hpp"
#include "xvabsde/parallel.hpp"

namespace xvabsde {

MeanSe mean_se(std::span<const double> xs) {
    if (xs.size() < 2) throw DomainError("mean_se: need at least two samples");
    std::vector<double> work(xs.begin(), xs.end());
    MeanSe out;
    out.mean = pairwise_sum(work) / static_cast<double>(xs.size());
    for (double& v : work) v = (v - out.mean) * (v - out.mean);
    const double var = pairwise_sum(work) / (static_cast<double>(xs.size()) - 1.0);
    out.se = std::sqrt(var / static_cast<double>(xs.size()));
    return out;
}

double mean_of(std::span<const double> xs) {
    std::vector<double> work(xs.begin(), xs.end());
    return pairwise_sum(work) / static_cast<double>(xs.size());
}

double combined_se(double se_a, double se_b) {
    return std::sqrt(se_a * se_a + se_b * se_b);
}

double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = cdf(xs[i]);
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n;
        worst = std::max({worst, std::abs(f - lo), std::abs(hi - f)});
    }
    return worst;
}

double ks_critical(double alpha, std::size_t n) {
    // c(alpha) = sqrt(-ln(alpha/2) / 2)
    const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
    return c / std::sqrt(static_cast<double>(n));
}

std::vector<double> quantiles(std::vector<double> xs, std::span<const double> levels) {
    std::sort(xs.begin(), xs.end());
    std::vector<double> out;
    out.reserve(levels.size());
    const double n = static_cast<double>(xs.size());
    for (double q : levels) {
        const double pos = std::clamp(q, 0.0, 1.0) * (n - 1.0);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, xs.size() - 1);
        const double w = pos - static_cast<double>(lo);
        out.push_back((1.0 - w) * xs[lo] + w * xs[hi]);
    }
    return out;
}

} // namespace xvabsde

#pragma once

#include <functional>
#include <span>
#include <vector>

namespace xvabsde {

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

/// Sample mean and standard error of the mean (pairwise summation).
MeanSe mean_se(std::span<const double> xs);

double mean_of(std::span<const double> xs);

/// Standard error of a difference of two estimates from independent samples.
double combined_se(double se_a, double se_b);

/// One-sample Kolmogorov-Smirnov statistic against a continuous CDF.
double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf);

/// Asymptotic KS critical value at the given significance level.
double ks_critical(double alpha, std::size_t n);

/// Empirical quantiles (linear interpolation) at the requested levels.
std::vector<double> quantiles(std::vector<double> xs, std::span<const double> levels);

} // namespace xvabsde

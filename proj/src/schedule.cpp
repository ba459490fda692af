#include "xvabsde/schedule.hpp"

namespace xvabsde {

std::vector<double> merge_times(const std::vector<double>& grid,
                                const std::vector<double>& extra) {
    std::vector<double> merged = grid;
    if (grid.empty()) return merged;
    const double lo = grid.front();
    const double hi = grid.back();
    for (double t : extra) {
        if (t > lo && t < hi) merged.push_back(t);
    }
    std::sort(merged.begin(), merged.end());
    merged.erase(std::unique(merged.begin(), merged.end(),
                             [](double a, double b) { return std::abs(a - b) < 1e-14; }),
                 merged.end());
    return merged;
}

std::vector<double> uniform_grid(double horizon, int n_steps) {
    if (!(horizon > 0.0) || n_steps < 1) throw DomainError("uniform_grid: bad arguments");
    std::vector<double> grid(static_cast<std::size_t>(n_steps) + 1);
    for (int i = 0; i <= n_steps; ++i) {
        grid[static_cast<std::size_t>(i)] = horizon * static_cast<double>(i) / n_steps;
    }
    grid.back() = horizon;
    return grid;
}

} // namespace xvabsde

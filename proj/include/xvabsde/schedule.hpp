#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "xvabsde/errors.hpp"
#include "xvabsde/linalg.hpp"

namespace xvabsde {

/// Right-continuous piecewise-constant function of time. breakpoints[0] must
/// be 0 and values[k] applies on [breakpoints[k], breakpoints[k+1]); the last
/// value extends to the right, so evaluation at the horizon uses the final
/// interval.
template <class T>
struct Schedule {
    std::vector<double> breakpoints;
    std::vector<T> values;

    Schedule() = default;
    Schedule(std::vector<double> bp, std::vector<T> vals)
        : breakpoints(std::move(bp)), values(std::move(vals)) {}

    static Schedule constant(T v) { return Schedule({0.0}, {std::move(v)}); }

    bool empty() const { return values.empty(); }

    std::size_t piece_index(double t) const {
        const auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), t);
        const std::size_t idx = static_cast<std::size_t>(it - breakpoints.begin());
        return idx == 0 ? 0 : idx - 1;
    }

    const T& at(double t) const {
        if (!(t >= 0.0)) throw DomainError("schedule evaluated at negative time");
        if (values.empty()) throw DomainError("schedule has no values");
        return values[piece_index(t)];
    }

    /// Calls fn(lo, hi, value) for each constant piece covering [t0, t1].
    template <class Fn>
    void for_each_piece(double t0, double t1, Fn&& fn) const {
        if (!(t1 > t0)) return;
        std::size_t k = piece_index(t0);
        double lo = t0;
        while (lo < t1) {
            const double next_bp =
                (k + 1 < breakpoints.size()) ? breakpoints[k + 1] : t1;
            const double hi = std::min(t1, next_bp);
            if (hi > lo) fn(lo, hi, values[k]);
            lo = hi;
            ++k;
        }
    }
};

using ScalarSchedule = Schedule<double>;
using MatrixSchedule = Schedule<Mat>;
using RowSchedule = Schedule<std::vector<double>>;

/// Spec-level accessor with an explicit horizon: the model is defined on
/// [0, horizon] only.
template <class T>
const T& coefficient_at(const Schedule<T>& schedule, double t, double horizon) {
    if (!(t >= 0.0) || !(t <= horizon)) {
        throw DomainError("coefficient_at: time outside [0, horizon]");
    }
    return schedule.at(t);
}

inline double integrate(const ScalarSchedule& s, double t0, double t1) {
    double acc = 0.0;
    s.for_each_piece(t0, t1, [&](double lo, double hi, double v) { acc += v * (hi - lo); });
    return acc;
}

/// Sorted union of grid times and schedule breakpoints inside [grid.front(),
/// grid.back()]; used to make stepping exact across coefficient changes.
std::vector<double> merge_times(const std::vector<double>& grid,
                                const std::vector<double>& extra);

/// Uniform grid of n_steps+1 times on [0, horizon].
std::vector<double> uniform_grid(double horizon, int n_steps);

} // namespace xvabsde

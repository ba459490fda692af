#pragma once

#include <vector>

#include "xvabsde/drivers.hpp"
#include "xvabsde/market.hpp"

namespace xvabsde {

/// Deterministic backward solution for constant payoffs, where the
/// martingale integrand vanishes and the reduced equation degenerates to a
/// scalar ODE integrated with classical RK4. Grid nodes include every
/// coefficient breakpoint so the fourth order is not lost at discontinuities.
struct OdeSolution {
    std::vector<double> grid; // ascending, grid.front() == 0, grid.back() == T
    std::vector<double> y;    // one value per node
    double y0 = 0.0;

    double value_at(double t) const; // linear interpolation between nodes
};

OdeSolution solve_reduced_ode(DriverId id, const MarketSpec& market, const ContractSpec& contract,
                              const NumericsConfig& numerics);

/// Zeroth- and first-order equations integrated jointly, so the frozen
/// source is evaluated at stage-consistent times.
struct FirstOrderOde {
    OdeSolution zeroth;
    OdeSolution first;
};

FirstOrderOde solve_first_order_ode(Side side, const MarketSpec& market,
                                    const ContractSpec& contract, const NumericsConfig& numerics,
                                    FirstOrderForm form = FirstOrderForm::ZeroCloseout);

} // namespace xvabsde

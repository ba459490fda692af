#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "xvabsde/drivers.hpp"
#include "xvabsde/lsmc.hpp"
#include "xvabsde/market.hpp"
#include "xvabsde/ode.hpp"
#include "xvabsde/pde.hpp"

namespace xvabsde {

/// One sufficient no-arbitrage condition: its code, the worst margin over the
/// evaluation times, and whether it held everywhere.
struct NoArbCondition {
    std::string id;      // one of 19f, 19r, 44, 48-h1, 48-h2, 49
    double worst_margin = 0.0;
    bool pass = false;
};

struct NoArbReport {
    std::vector<NoArbCondition> conditions;
    bool all_pass = false;

    const NoArbCondition& by_id(const std::string& id) const;
};

/// Evaluates the spread-sign conditions, the collateral-rate ordering, the
/// two hazard dominance conditions, and the funding/collateral rate link,
/// pointwise over the given times plus every coefficient breakpoint.
NoArbReport check_noarb(const MarketSpec& market, std::span<const double> grid_times);

struct OrderingLink {
    std::string name; // e.g. "minus<=zeroth_minus"
    double gap = 0.0; // right minus left value at time zero
    double se = 0.0;  // combined SE on common random numbers
    bool pass = false;
};

struct OrderingReport {
    double y_minus = 0.0, y0_minus = 0.0, y0_plus = 0.0, y_plus = 0.0;
    double se_y_minus = 0.0, se_y0_minus = 0.0, se_y0_plus = 0.0, se_y_plus = 0.0;
    std::vector<OrderingLink> links;
    bool chain_ok = false;
    std::string first_violation; // empty when the chain holds
};

/// Solves the four reduced equations on common random numbers and checks the
/// value ordering at time zero (2 combined SE) and in mean across the grid.
OrderingReport ordering_check(const MarketSpec& market, const ContractSpec& contract,
                              const NumericsConfig& numerics);

enum class SweepEngine { Lsmc, Pde };

struct SweepPoint {
    double eps = 0.0;
    double err_plus = 0.0;
    double err_minus = 0.0;
    double err_total = 0.0; // err_plus + err_minus
    bool excluded = false;  // eps == 0 or error at rounding level
};

struct SweepResult {
    std::vector<SweepPoint> points;
    double slope = 0.0; // log-log fit of err_total against eps
    int order = 0;
    SweepEngine engine = SweepEngine::Pde;
    bool monotone_warning = false;
};

/// Sets both lending-borrowing spreads to each eps (mid rates fixed), solves
/// the full and approximating equations, and fits the decay rate of the
/// beta-weighted gap norm (value and integrand parts).
SweepResult epsilon_sweep(const MarketSpec& market_base, const ContractSpec& contract,
                          std::span<const double> eps_list, int order, SweepEngine engine,
                          const NumericsConfig& numerics,
                          FirstOrderForm form = FirstOrderForm::ZeroCloseout);

enum class HomogeneityEngine { Lsmc, Ode };

struct HomogeneityResult {
    std::vector<double> k_values;
    std::vector<double> deviations; // per k, max over both sides
    double max_rel_deviation = 0.0;
};

/// Re-solves with the payoff scaled by each k on the same seed and compares
/// against k times the base values.
HomogeneityResult homogeneity_check(const MarketSpec& market, const ContractSpec& contract,
                                    std::span<const double> k_list,
                                    const NumericsConfig& numerics, HomogeneityEngine engine);

/// Solution fields as functions of (t, s), used to drive hedges on fresh
/// paths.
struct FieldPoint {
    double y = 0.0;
    std::vector<double> z;
    double v_hat = 0.0;
};

class HedgeField {
public:
    virtual ~HedgeField() = default;
    virtual FieldPoint at(double t, std::span<const double> s) const = 0;
};

std::unique_ptr<HedgeField> make_pde_field(std::shared_ptr<const PdeSolution> solution, Side side);
std::unique_ptr<HedgeField> make_ode_field(const MarketSpec& market, const ContractSpec& contract,
                                           OdeSolution solution);
std::unique_ptr<HedgeField> make_lsmc_field(const MarketSpec& market, const ContractSpec& contract,
                                            const NumericsConfig& numerics, DriverId id);

enum class HedgeEngine { Auto, Pde, Ode, Lsmc };

struct ReplicationReport {
    int n_eval_paths = 0;
    double y_start = 0.0;
    double notional = 1.0;
    double mean_abs_terminal_error = 0.0;
    double rel_error = 0.0; // mean abs error over the contract notional
    std::vector<double> error_quantiles; // 5/25/50/75/95 percent
};

/// Forward-simulates the self-financing hedge on fresh paths with sampled
/// defaults and measures the terminal replication error against the contract
/// payout. The buyer side runs the mirrored dynamics from the subhedging
/// value.
ReplicationReport replicate(const MarketSpec& market, const ContractSpec& contract,
                            const NumericsConfig& numerics, int n_eval_paths,
                            Side side = Side::Plus, HedgeEngine engine = HedgeEngine::Auto);

struct MartingaleReport {
    std::vector<double> block_drifts;
    std::vector<double> block_ses;
    double max_abs_drift = 0.0;
    double se_at_max = 0.0;
    bool within_3se = false;
};

/// Single-rate-world diagnostic: the discounted replication wealth must have
/// no drift. Estimated blockwise from fresh replication paths.
MartingaleReport martingale_diagnostic(const MarketSpec& market, const ContractSpec& contract,
                                       const NumericsConfig& numerics, int n_blocks = 8);

/// Discrete beta-weighted squared-norm helpers used by the sweep.
double lsmc_gap_norm(const ReducedSolution& full, const ReducedSolution& approx0,
                     const ReducedSolution* approx1, double beta, bool z_part);

} // namespace xvabsde

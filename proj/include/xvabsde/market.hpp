#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "xvabsde/schedule.hpp"

namespace xvabsde {

/// Two-sided account rate: r_minus accrues on borrowed (negative) balances,
/// r_plus on lent (positive) balances. mid +/- half_spread recovers the pair
/// exactly.
struct RatePair {
    double r_minus = 0.0;
    double r_plus = 0.0;

    double mid() const { return 0.5 * (r_minus + r_plus); }
    double half_spread() const { return 0.5 * (r_minus - r_plus); }

    static RatePair from_mid_spread(double mid, double half_spread) {
        return {mid + half_spread, mid - half_spread};
    }
};

using RateSchedule = Schedule<RatePair>;

/// Market data: the risk-free (OIS) rate, the funding/repo/collateral rate
/// pairs, default intensities of the hedger (1) and counterparty (2),
/// volatilities, initial prices, and the collateralization level.
struct MarketSpec {
    int n = 1;                    // number of non-defaultable risky assets
    ScalarSchedule r_D;
    RateSchedule r_f, r_r, r_col;
    ScalarSchedule h1, h2;
    MatrixSchedule sigma;         // n x n
    RowSchedule sigma_I, sigma_C; // 1 x n rows against the same Brownian motion
    std::vector<double> S0;
    double PI0 = 1.0;
    double PC0 = 1.0;
    double alpha = 0.0;           // collateralization level in [0, 1]

    /// Union of every schedule breakpoint; stepping across these is exact.
    std::vector<double> all_breakpoints() const;
};

/// Close-out rule applied at default to the reference value v:
/// the hedger keeps v - L_I (v - alpha v)^+ at her own default, and
/// receives v + L_C (v - alpha v)^- at the counterparty's default.
struct CloseoutSpec {
    double L_I = 0.0;
    double L_C = 0.0;
    double alpha = 0.0;
};

/// (phi_1(v), phi_2(v)) per the close-out rule.
std::pair<double, double> closeout_eval(const CloseoutSpec& c, double v);

struct CallPayoff {
    double strike = 0.0;
};
struct PutPayoff {
    double strike = 0.0;
};
struct ForwardPayoff {
    double strike = 0.0;
};
struct ConstantPayoff {
    double value = 0.0;
};
struct BasketPayoff {
    std::vector<double> weights;
    double strike = 0.0;
};

/// Closed menu of terminal payoffs. Scalar descriptors read the first asset.
using PayoffSpec = std::variant<CallPayoff, PutPayoff, ForwardPayoff, ConstantPayoff, BasketPayoff>;

double payoff_eval(const PayoffSpec& payoff, std::span<const double> s_terminal);

/// True when the reference value of the payoff has a lognormal closed form
/// (call/put/forward/constant for any n; single-asset baskets with positive
/// weight reduce to scaled calls).
bool payoff_has_closed_form(const PayoffSpec& payoff, int n_assets);

/// Descriptor for k * payoff, staying inside the menu. Throws ConfigError
/// for kinds that cannot be scaled within the menu (put, forward).
PayoffSpec payoff_scaled(const PayoffSpec& payoff, double k);

std::string payoff_kind(const PayoffSpec& payoff);

struct ContractSpec {
    double T = 1.0;
    PayoffSpec payoff = CallPayoff{100.0};
    CloseoutSpec closeout;
};

/// Money scale of a contract, used to normalize replication errors.
double contract_notional(const ContractSpec& contract, const MarketSpec& market);

struct PdeParams {
    int n_space = 400;      // spatial intervals in log-price
    double x_width = 2.0;   // half-width of the log-price box around log S0
    double theta = 0.5;     // time-stepping weight (0.5 = Crank-Nicolson)
};

struct NumericsConfig {
    int n_steps = 100;
    int n_paths = 10000;
    int basis_degree = 2;
    int picard_iters = 5;
    double picard_tol = 1e-12;
    std::uint64_t seed = 12345;
    double norm_beta = 0.0;
    PdeParams pde;
};

struct Violation {
    std::string code;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool flag_44 = false; // informational: collateral borrow rate >= lend rate throughout
    bool valid() const { return violations.empty(); }
};

/// Checks every market invariant (spread signs, sigma invertibility, hazard
/// nonnegativity, alpha range, finiteness). Never throws; all findings go in
/// the report.
ValidationReport validate_market(const MarketSpec& market,
                                 double sigma_min_singular = 1e-10);

/// Configuration-shape checks for a contract against a market (basket weight
/// length, parameter finiteness, maturity sign).
std::vector<Violation> validate_contract(const ContractSpec& contract, const MarketSpec& market);

std::vector<Violation> validate_numerics(const NumericsConfig& numerics);

/// Reference single-asset market: r_D = 1%, funding 3.5%/2.5%, repo
/// 2.5%/1.5%, collateral 1.2%/0.8%, h = (5%, 10%), sigma = 20%,
/// sigma_I = 10%, sigma_C = 15%, alpha = 1, S0 = 100.
MarketSpec reference_market();

/// Single-rate market (every account accrues at r): the classical setting in
/// which the hedging value collapses to the risk-free price.
MarketSpec one_rate_market(double r, double sigma, double h1, double h2);

} // namespace xvabsde

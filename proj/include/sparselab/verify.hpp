#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "sparselab/common.hpp"
#include "sparselab/dyadic.hpp"
#include "sparselab/operators.hpp"
#include "sparselab/space.hpp"
#include "sparselab/weights.hpp"

namespace sl {

enum class CheckMode { exact, explicit_constant, ratio_monitor };

std::string to_string(CheckMode m);
CheckMode parse_check_mode(const std::string& s);  // throws Error(config)

// How a ratio monitor judges stability.
enum class DriftRule { none, grids, seeds, baseline };

struct CheckInfo {
    std::string id;
    CheckMode mode;
    DriftRule drift;
    std::string description;
    int default_n;
    int default_trials;
    bool two_sided = false;  // the infimum of the ratio is monitored as well
};

const std::vector<CheckInfo>& check_registry();
// Throws Error(config) listing the valid ids.
const CheckInfo& find_check(const std::string& id);

struct CheckSpec {
    std::string check_id;
    std::optional<ExponentConfig> config;  // otherwise drawn per trial
    std::optional<MultiIndexPair> pair;    // symbol checks
    std::optional<CheckMode> mode;         // must agree with the registry when given
    int n = 0;                             // 0: registry default
    std::vector<int> grids;                // refinement sizes for ratio monitors; empty: {16, 64}
    int trials = 0;                        // 0: registry default
    std::uint64_t seed = 1;
    std::optional<double> weight_spread;   // a in exp(U[-a,a]); unset cycles {0.5, 1, 2}
    double sparse_delta = 0.5;
    double baseline = std::numeric_limits<double>::quiet_NaN();
    int max_failures_kept = 20;
};

struct CheckFailure {
    int trial = -1;    // -1 for battery-level failures such as drift
    int n = 0;
    std::uint64_t seed = 0;
    std::string message;
    std::vector<std::pair<std::string, Vec>> data;  // reproduction inputs
};

struct GridSummary {
    int n = 0;
    std::uint64_t seed = 0;
    double worst = 0.0;  // sup of the monitored ratio
    double best = std::numeric_limits<double>::infinity();  // inf of the monitored ratio
};

struct CheckReport {
    std::string check_id;
    CheckMode mode = CheckMode::exact;
    int trials = 0;
    int failure_count = 0;
    std::vector<CheckFailure> failures;  // first max_failures_kept
    double worst_ratio = 0.0;
    double explicit_constant = std::numeric_limits<double>::quiet_NaN();
    std::vector<GridSummary> summaries;
    double drift = 1.0;
    std::vector<std::pair<std::string, double>> metrics;
    double runtime_s = 0.0;
    bool pass = true;
};

CheckReport run_check(const CheckSpec& spec);

// Random inputs shared by checks and tools.
Weight random_weight(std::mt19937_64& rng, int n, double spread);
Vec random_function(std::mt19937_64& rng, int n);
// Cubes kept with probability `density`, deepest first, each taking a witness
// of at least delta of its mass from points not yet claimed. delta is the declared value.
SparseFamily random_sparse_family(const DyadicLattice& lat, std::mt19937_64& rng, double density, double delta);

// (sum_x |f|^p w mu)^{1/p}
double lp_norm(const DiscreteSpace& s, const Vec& f, const Weight& w, double p);

// Every quantity of the A* proof chain for one instance with p0 = 1.
// omega: the m weights; u = prod omega_i^{q/p_i}, sigma_i = omega_i^{1-p_i'}.
struct AstarChainTerms {
    double theta = 0.0;
    double beta = 0.0;
    double delta = 0.0;
    double w_const = 0.0;       // [omega]_{A*}
    double c_explicit = 0.0;    // (1/delta)^{(m-eta) theta (beta q - 1)} (q/theta) prod p_i'^theta
    double lhs = 0.0;           // ||A_{gamma}(f sigma)||_{L^q(u)}^theta
    double embed_rhs = 0.0;     // ||A_{theta}(f sigma)||_{L^q(u)}^theta
    double dual_pairing = 0.0;  // sum_Q int_Q g u (mu^eta prod <f sigma>)^theta with the extremal g
    double witness_sum = 0.0;   // sum_Q of the witness-form bounds
    double holder_sum = 0.0;    // after Hoelder inside each cube
    double holder_bound = 0.0;  // after Hoelder over cubes
    double g_side = 0.0;        // (sum_Q <g>_u^{s'} u(E_Q))^{1/s'}, sup_Q <g>_u when s' = inf
    double g_maximal = 0.0;     // ||M^u g||_{L^{s'}(u)}, sup g when s' = inf
    double g_max_bound = 0.0;   // q/theta * ||g||
    Vec f_side;                 // (sum_Q <f_i>_{sigma_i}^{p_i} sigma_i(E_Q))^{1/p_i}
    Vec f_maximal;              // ||M^{sigma_i} f_i||_{L^{p_i}(sigma_i)}
    Vec f_max_bound;            // p_i' ||f_i||_{L^{p_i}(sigma_i)}
    double rhs = 0.0;           // c_explicit [w]^{beta theta} prod ||f_i||^theta
    int cube_step_failures = 0; // per-cube witness step violations
};
AstarChainTerms astar_chain_terms(const SparseFamily& S, const Functions& f, const std::vector<Weight>& omega,
                                  const ExponentConfig& cfg);

// A_{S}(h) = sum_Q <h>_Q chi_Q.
Vec sparse_average(const SparseFamily& S, const Vec& h);
// A_{S,eta} iterated `times` times: h -> A_S(h) * eta.
Vec iterated_weighted_average(const SparseFamily& S, const Vec& h, const Weight& eta, int times);

}  // namespace sl

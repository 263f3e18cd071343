#pragma once

#include <string>
#include <vector>

#include "sparselab/common.hpp"
#include "sparselab/dyadic.hpp"
#include "sparselab/operators.hpp"
#include "sparselab/space.hpp"

namespace sl {

struct DominationConfig {
    int jtilde0 = 0;
    double c_jtilde0 = 0.0;  // dilation C applied to cube balls
    int j0 = 0;
    double alpha = 1.0;      // starting stopping threshold, doubled as needed
    double target_delta = 0.5;
    double r = 1.0;
    int max_depth = -1;      // stopping-time generations; negative means unlimited

    // Fills the truncation constants from A0 and C_adj.
    static DominationConfig defaults(const DiscreteSpace& s, double c_adj);
    void validate() const;  // throws Error(config)
};

// One stopping cube of the construction.
struct StageRecord {
    int cube = 0;             // in the root system
    int depth = 0;
    double alpha = 0.0;       // final threshold at this cube
    double e_mass = 0.0;      // mu(E)
    Index stops;              // the selected P_j
    int r_system = 0;         // R_Q: the adjacent cube containing C B(Q)
    int r_cube = 0;
    double rho = 0.0;         // stage ratio
    double ball_factor = 1.0; // (mu(R_Q) / mu(C B(Q)))^{m/r}
};

struct CoverageAudit {
    bool covered = false;       // annuli exhaust X
    int annuli = 0;
    int max_balls = 0;          // L_j
    int max_annuli_hit = 0;     // annuli met by one enlarged ball
    int bound = 0;              // 2 j0 + 1
    bool dilated_contains_b0 = false;
};

struct DominationCertificate {
    int root_system = 0;
    int root_cube = 0;
    SparseFamily stopping;              // stopping cubes in the root system
    std::vector<SparseFamily> families; // one per adjacent system, cubes R_Q
    std::vector<StageRecord> stages;
    double rho = 0.0;
    double ball_factor = 1.0;
    double multiplicity = 0.0;
    double constant = 0.0;
    double alpha = 0.0;                 // largest threshold used
    double max_ratio = 0.0;
    bool truncated = false;
    Vec residual;                       // uncontrolled part when truncated
    Vec lhs;
    Vec rhs;
    CoverageAudit coverage;
};

// Stopping-time construction for the commutator of I_eta with symbols b and multi-index pair.
DominationCertificate cz_construct(const DiscreteSpace& s, const AdjacentSystems& sys, const Functions& f,
                                   const Functions& b, const MultiIndexPair& pair, double eta,
                                   const DominationConfig& cfg);

// sum over systems, tau subset of tau_ell, t <= k on tau of prod C(k_i,t_i) sparse_higher.
Vec domination_rhs(const std::vector<SparseFamily>& families, const Functions& b, const Functions& f,
                   const MultiIndexPair& pair, double eta, double r);

struct DominationReport {
    bool pass = true;
    double max_ratio = 0.0;
    Vec ratio;       // lhs / rhs, 0 where both vanish, inf where only rhs vanishes
    Index failures;  // points
};

// lhs <= constant * rhs + residual at every point.
DominationReport verify_domination(const DominationCertificate& cert, const Vec& lhs, const Vec& rhs);

struct AugmentResult {
    SparseFamily family;  // contains the input cubes
    Vec cube_constant;    // per cube of family: max_x |b(x)-b_Q| / sum_R <|b-b_R|>_R chi_R(x)
    double constant = 0.0;
    bool vacuous = false; // b constant on every cube
};

// Input must be gamma-sparse with 0 < gamma < 1 (gamma = family.delta).
AugmentResult augment_sparse(const SparseFamily& family, const Vec& b);

}  // namespace sl

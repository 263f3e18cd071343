#pragma once

#include <limits>
#include <string>
#include <vector>

#include "sparselab/common.hpp"
#include "sparselab/dyadic.hpp"
#include "sparselab/space.hpp"

namespace sl {

using Weight = Vec;

// (mu(E)^{-1} sum_E |f|^power mu)^{1/power}
double avg(const DiscreteSpace& s, const Index& e, const Vec& f, double power = 1.0);
// sum_E f sigma mu / sum_E sigma mu
double avg_w(const DiscreteSpace& s, const Index& e, const Vec& f, const Weight& sigma);
// sum_E w mu
double weighted_mass(const DiscreteSpace& s, const Index& e, const Weight& w);

struct YoungFunction {
    enum class Kind { identity, llogl, expl, phi_r_ell, expl_conjugate };
    Kind kind = Kind::identity;
    double r = 1.0;
    double s = 1.0;
    double ell = 1.0;

    static YoungFunction identity() { return {}; }
    static YoungFunction llogl(double r) { return {Kind::llogl, r, 1.0, 1.0}; }        // t(1+log+ t)^r
    static YoungFunction expl(double s) { return {Kind::expl, 1.0, s, 1.0}; }          // e^{t^s}-1
    static YoungFunction phi(double r, double ell) { return {Kind::phi_r_ell, r, 1.0, ell}; }  // t^r(1+(log+ t)^{r ell})
    // Legendre conjugate of e^t - 1: t log t - t + 1 for t >= 1, else 0.
    static YoungFunction expl_conjugate() { return {Kind::expl_conjugate, 1.0, 1.0, 1.0}; }

    double operator()(double t) const;
    std::string name() const;
};

// Luxemburg norm inf{lambda > 0 : avg_E Phi(|f|/lambda) <= 1}; 0 when f vanishes on E.
double orlicz_norm(const DiscreteSpace& s, const Index& e, const Vec& f, const YoungFunction& phi);

struct ExponentConfig {
    int m = 1;
    Vec p{2.0};
    double q = 2.0;
    double eta = 0.0;
    double p0 = 1.0;
    double gamma = 1.0;
    double r = 1.0;
    double q0 = std::numeric_limits<double>::quiet_NaN();

    // Fills eta = sum 1/p_i - 1/q.
    static ExponentConfig make(Vec p, double q, double gamma = 1.0);
    // Throws Error(config) naming the offending field.
    void validate(bool endpoint = false) const;
    double theta() const;
    double beta() const;
};

enum class WeightKind { A_p, A_inf_fujii, A_pq_star, A_pq, W_inf, H_inf, W_inf_i, H_inf_i, A_1q0_star };

std::string to_string(WeightKind k);
WeightKind parse_weight_kind(const std::string& s);  // throws Error(config)

// Which slots a kind reads:
//   A_p, A_inf_fujii : w[0], p = cfg.p[0]
//   A_pq_star, A_pq  : u and w = omega_1..omega_m
//   W_inf, H_inf     : w = the m weights entering the product
//   W_inf_i, H_inf_i : u and w = sigma_1..sigma_m, index i (0-based)
//   A_1q0_star       : w = omega_1..omega_m, u = prod omega_i^{q0}
struct WeightInputs {
    Weight u;
    std::vector<Weight> w;
};

struct ConstantResult {
    double value = 1.0;
    int argmax = -1;  // cube id attaining the supremum
};

ConstantResult weight_constant(WeightKind kind, const DyadicLattice& lat, const WeightInputs& in,
                               const ExponentConfig& cfg, int index = 0);

Weight dual_weight(const Weight& w, double p);

// For x in Q: max over lattice cubes R with x in R subset Q of <f>_R. Entries
// outside Q are zero.
Vec local_dyadic_maximal(const DyadicLattice& lat, int q, const Vec& f);

ConstantResult bmo_norm(const DyadicLattice& lat, const Vec& b);
ConstantResult weighted_bmo_norm(const DyadicLattice& lat, const Vec& b, const Weight& nu);

}  // namespace sl

#pragma once

#include <vector>

#include "sparselab/common.hpp"
#include "sparselab/dyadic.hpp"
#include "sparselab/space.hpp"
#include "sparselab/weights.hpp"

namespace sl {

using Functions = std::vector<Vec>;

// Index sets are 0-based and sorted. t_i <= k_i is admitted (not only t < k).
struct MultiIndexPair {
    Index k;
    Index t;
    Index tau;
    Index tau_ell;
    void validate(int m) const;  // throws Error(config)
};

bool in_set(const Index& set, int i);

// (sum_Q [mu(Q)^eta prod <f_i>_{Q,p0}]^gamma chi_Q)^{1/gamma}
Vec sparse_basic(const SparseFamily& S, const Functions& f, const ExponentConfig& cfg, Exec ex = Exec::parallel);

// First-order symbol operator; cfg.r is the averaging exponent.
Vec sparse_first_order(const SparseFamily& S, const Functions& b, const Functions& f, const Index& tau,
                       const Index& tau_ell, const ExponentConfig& cfg, Exec ex = Exec::parallel);

// Higher-order symbol operator with (k, t) on tau.
Vec sparse_higher(const SparseFamily& S, const Functions& b, const Functions& f, const MultiIndexPair& pair,
                  const ExponentConfig& cfg, Exec ex = Exec::parallel);

// sum_Q mu(Q)^{eta/r} prod_{tau} <f_i>_{Q,r} prod_{tau^c} ||f_j^r||^{1/r}_{L(log L)^r,Q} chi_Q
Vec sparse_endpoint(const SparseFamily& S, const Functions& f, const Index& tau, const ExponentConfig& cfg,
                    Exec ex = Exec::parallel);
// sup_{Q ni x} mu(Q)^{eta/r} prod_{tau} <f_i>_Q prod_{tau^c} ||f_j||_{L(log L)^r,Q}
Vec maximal_endpoint(const DyadicLattice& lat, const Functions& f, const Index& tau, const ExponentConfig& cfg);

// Per-cube term of a sparse sum, for audit dumps: (cube id, coefficient without x-dependent factors).
struct CubeTerm {
    int cube = 0;
    double coefficient = 0.0;
};
std::vector<CubeTerm> sparse_basic_terms(const SparseFamily& S, const Functions& f, const ExponentConfig& cfg);

// sup over closed balls B containing x of mu(B)^eta prod <|f_i|>_B.
Vec frac_maximal(const DiscreteSpace& s, const Functions& f, double eta);

// Kernel (sum_i mu(B(x, d(x,y_i))))^{eta-m}. Tabulated when n^{m+1} <= 2^22.
class FracKernel {
public:
    FracKernel(const DiscreteSpace& s, int m, double eta);
    int m() const { return m_; }
    double eta() const { return eta_; }
    const DiscreteSpace& space() const { return *s_; }
    double V(int x, int y) const { return V_[static_cast<std::size_t>(x) * n_ + y]; }
    // Kernel at x for the tuple encoded base n as `code`, digits y[0..m).
    double at(int x, std::size_t code, const int* y) const;
    bool tabulated() const { return !table_.empty(); }

private:
    const DiscreteSpace* s_;
    int n_;
    int m_;
    double eta_;
    std::size_t tuples_;
    Vec V_;
    Vec table_;
};

// Sum over tuples y in (incl)^m minus (excl)^m of K(x,y) prod g_i(y_i) mu(y_i).
// incl == nullptr means the whole space; excl == nullptr excludes nothing.
double frac_integral_at(const FracKernel& K, int x, const Functions& g, const std::vector<char>* incl,
                        const std::vector<char>* excl);

Vec frac_integral(const DiscreteSpace& s, const Functions& f, double eta, Exec ex = Exec::parallel);
Vec frac_integral(const FracKernel& K, const Functions& f, Exec ex = Exec::parallel);

// I_eta applied to ((b_i(x) - b_i(y_i))^{beta_i} f_i(y_i)), beta_i = k_i on tau_ell, 0 off.
Vec commutator_general(const DiscreteSpace& s, const Functions& b, const Functions& f, const MultiIndexPair& pair,
                       double eta, Exec ex = Exec::parallel);
Vec commutator_general(const FracKernel& K, const Functions& b, const Functions& f, const MultiIndexPair& pair,
                       Exec ex = Exec::parallel);

Vec dyadic_weighted_maximal(const DyadicLattice& lat, const Vec& f, const Weight& sigma);
// (M(|f|^delta))^{1/delta} with M the uncentered ball maximal operator.
Vec m_delta(const DiscreteSpace& s, const Vec& f, double delta);
// delta == 1: sup_{Q ni x} <|f - f_Q|>_Q. Otherwise (M^#(|f|^delta))^{1/delta}.
Vec sharp_maximal_dyadic(const DyadicLattice& lat, const Vec& f, double delta);

struct TruncationConstants {
    int jtilde0 = 0;
    double c_jtilde0 = 0.0;  // 2^{jtilde0+2} A0
    int j0 = 0;
};
// jtilde0 smallest with 2^jtilde0 > max{3 A0, 2 A0 C_adj}; j0 smallest with j0 > jtilde0, 2^j0 > 4 A0.
TruncationConstants truncation_constants(double a0, double c_adj);

// sup_{B ni x} max_{xi in B} |T(f chi over X^m minus (C B)^m)(xi)|; exact over radius breakpoints.
Vec grand_maximal_truncated(const FracKernel& K, const Functions& f, double C);
// Local version: balls B subset of B0, domain (C B0)^m minus (C B)^m. Zero off B0.
Vec local_grand_maximal(const FracKernel& K, const Functions& f, double C, const Ball& b0);

}  // namespace sl

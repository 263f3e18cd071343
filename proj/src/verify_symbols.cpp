// Checks built on symbol operators: endpoint, norm transfer, Bloom, sharp maximal.

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "sparselab/domination.hpp"
#include "verify_internal.hpp"

namespace sl::detail {

namespace {

double factorial(int k) {
    double r = 1.0;
    for (int i = 2; i <= k; ++i) r *= i;
    return r;
}

Functions random_symbols(std::mt19937_64& rng, int m, int n) {
    Functions b(m, Vec(n));
    for (auto& v : b)
        for (double& x : v) x = normal(rng);
    return b;
}

Index all_indices(int m) {
    Index a(m);
    for (int i = 0; i < m; ++i) a[i] = i;
    return a;
}

// Smallest C with |b(x) - b_Q| <= C sum_{P in St, P in Q, x in P} <|b - b_P|>_P for Q in S, x in Q.
double oscillation_constant(const SparseFamily& S, const SparseFamily& St, const Vec& b) {
    const DyadicLattice& lat = *S.lattice;
    const DiscreteSpace& s = lat.space();
    const Weight one(s.size(), 1.0);
    Vec osc(St.cubes.size());
    for (std::size_t c = 0; c < St.cubes.size(); ++c) {
        const Index& e = lat.cube(St.cubes[c]).members;
        const double bp = avg_w(s, e, b, one);
        Vec d(s.size(), 0.0);
        for (int x : e) d[x] = b[x] - bp;
        osc[c] = avg(s, e, d, 1.0);
    }
    double C = 0.0;
    for (int id : S.cubes) {
        const Cube& q = lat.cube(id);
        const double bq = avg_w(s, q.members, b, one);
        for (int x : q.members) {
            const double num = std::abs(b[x] - bq);
            if (num == 0.0) continue;
            Vec parts;
            for (std::size_t c = 0; c < St.cubes.size(); ++c) {
                const Cube& p = lat.cube(St.cubes[c]);
                if (lat.contains(id, p.id) && std::binary_search(p.members.begin(), p.members.end(), x))
                    parts.push_back(osc[c]);
            }
            const double den = pairwise_sum(parts);
            if (!(den > 0.0)) return kInf;
            C = std::max(C, num / den);
        }
    }
    return C;
}

// Adds cubes to S until every symbol in `which` has the oscillation property.
SparseFamily augment_all(const SparseFamily& S, const Functions& b, const Index& which) {
    SparseFamily cur = S;
    cur.delta = std::min(S.delta, 0.5);
    for (int i : which) cur = augment_sparse(cur, b[i]).family;
    return cur;
}

double ap_constant(const DyadicLattice& lat, const Weight& w, double p) {
    ExponentConfig c;
    c.p = {p};
    return weight_constant(WeightKind::A_p, lat, WeightInputs{{}, {w}}, c).value;
}

// sum_{Q in S} mu(Q)^eta (int_Q H) prod_i <F_i>_Q
double dual_sparse_sum(const SparseFamily& S, const Vec& H, const Functions& F, double eta) {
    const DyadicLattice& lat = *S.lattice;
    const DiscreteSpace& s = lat.space();
    const Weight one(s.size(), 1.0);
    Vec terms;
    for (int id : S.cubes) {
        const Cube& q = lat.cube(id);
        double v = std::pow(q.mass, eta) * integral_on(s, q.members, H, one);
        for (const Vec& f : F) v *= avg(s, q.members, f, 1.0);
        terms.push_back(v);
    }
    return pairwise_sum(terms);
}

MultiIndexPair default_pair(int m) {
    MultiIndexPair p;
    p.k = Index(m, 2);
    p.t = Index(m, 1);
    p.tau = all_indices(m);
    p.tau_ell = all_indices(m);
    return p;
}

struct BloomSetup {
    ExponentConfig cfg;
    MultiIndexPair pair;
};

BloomSetup bloom_setup(const CheckSpec& sp, std::mt19937_64& rng, bool need_k_gt_t) {
    BloomSetup b;
    b.cfg = sp.config ? *sp.config : random_config(rng, 2, 2.0, 4.0, 0.5, 1.0);
    b.cfg.r = 1.0;
    b.pair = sp.pair ? *sp.pair : default_pair(b.cfg.m);
    b.pair.validate(b.cfg.m);
    if (!(b.cfg.q > 1.0)) throw Error(ErrorKind::config, "q: Bloom checks need q > 1");
    for (int i : b.pair.tau) {
        if (b.pair.t[i] < 1) throw Error(ErrorKind::config, "t: Bloom checks need t_i >= 1 on tau");
        if (need_k_gt_t && b.pair.k[i] <= b.pair.t[i]) throw Error(ErrorKind::config, "k: iterated weights need k_i > t_i on tau");
    }
    if (b.pair.tau.empty()) throw Error(ErrorKind::config, "tau: Bloom checks need a nonempty tau");
    return b;
}

}  // namespace

Trial trial_bloom_maximal(const CheckSpec& sp, int n, std::uint64_t seed, int t) {
    auto rng = trial_rng(seed, t);
    Env env(n, trial_masses(rng, n, t));
    const DiscreteSpace& s = env.s;
    const DyadicLattice& lat = env.lat;
    const BloomSetup bs = bloom_setup(sp, rng, false);
    const ExponentConfig& cfg = bs.cfg;
    const MultiIndexPair& pr = bs.pair;
    const int m = cfg.m;
    const double a = trial_spread(sp, t);

    std::vector<Weight> mu(m), v(m), eta(m);
    Weight eta0(n, 0.0);
    for (int i : pr.tau) {
        mu[i] = random_weight(rng, n, a);
        v[i] = random_weight(rng, n, a);
        eta[i].resize(n);
        for (int x = 0; x < n; ++x) {
            eta[i][x] = std::pow(mu[i][x] / v[i][x], 1.0 / (pr.t[i] * cfg.p[i]));
            eta0[x] = std::max(eta0[x], eta[i][x]);
        }
    }
    int L = 0;
    for (int i : pr.tau) L += pr.k[i] - pr.t[i];
    const Weight lambda = random_weight(rng, n, a);
    Weight mu0(n);
    for (int x = 0; x < n; ++x) mu0[x] = lambda[x] * std::pow(eta0[x], L * cfg.q);

    const Functions b = random_symbols(rng, m, n);
    Functions f(m);
    for (auto& fi : f) fi = random_function(rng, n);
    const Vec g = random_function(rng, n);
    const SparseFamily S = random_sparse_family(lat, rng, 0.3, sp.sparse_delta);
    const SparseFamily St = augment_all(S, b, pr.tau);

    const Vec A = sparse_higher(S, b, f, pr, cfg, Exec::serial);
    Vec gl(n);
    for (int x = 0; x < n; ++x) gl[x] = g[x] * lambda[x];
    const double lhs = integral(s, A, gl);

    double cst = factorial(L), w0_bmo = 1.0, cmax = 0.0;
    Functions F(m);
    for (int i = 0; i < m; ++i) {
        if (!in_set(pr.tau, i)) {
            F[i] = f[i];
            continue;
        }
        const double Ci = oscillation_constant(S, St, b[i]);
        const double n0 = weighted_bmo_norm(lat, b[i], eta0).value;
        const double ni = weighted_bmo_norm(lat, b[i], eta[i]).value;
        cst *= std::pow(Ci * n0, pr.k[i] - pr.t[i]) * std::pow(Ci * ni, pr.t[i]) * factorial(pr.t[i]);
        w0_bmo *= std::pow(n0, pr.k[i] - pr.t[i]) * std::pow(ni, pr.t[i]);
        cmax = std::max(cmax, Ci);
        F[i] = iterated_weighted_average(St, f[i], eta[i], pr.t[i]);
    }
    const Vec H = iterated_weighted_average(St, gl, eta0, L);
    const double rhs = cst * dual_sparse_sum(S, H, F, cfg.eta);

    double w0 = w0_bmo;
    const double eq = std::max(1.0, 1.0 / (cfg.q - 1.0));
    const double lam_mu0 = ap_constant(lat, lambda, cfg.q) * ap_constant(lat, mu0, cfg.q);
    for (int i : pr.tau) {
        const double ep = std::max(1.0, 1.0 / (cfg.p[i] - 1.0));
        w0 *= std::pow(std::pow(ap_constant(lat, mu[i], cfg.p[i]), (pr.t[i] + 1) / 2.0) *
                           std::pow(ap_constant(lat, v[i], cfg.p[i]), (pr.t[i] - 1) / 2.0),
                       ep) *
              std::pow(lam_mu0, L / 2.0 * eq);
    }

    Trial tr;
    tr.ratio = rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? kInf : 0.0);
    if (!le(lhs, rhs)) tr.errors.push_back("dual form exceeds its derived composite bound");
    tr.max_metrics = {{"W0", w0}, {"augment_constant", cmax}};
    if (!tr.errors.empty()) tr.data = {{"family", family_data(S)}, {"augmented", family_data(St)}, {"g", g}};
    return tr;
}

Trial trial_bloom_iterated(const CheckSpec& sp, int n, std::uint64_t seed, int t) {
    auto rng = trial_rng(seed, t);
    Env env(n, trial_masses(rng, n, t));
    const DiscreteSpace& s = env.s;
    const DyadicLattice& lat = env.lat;
    const BloomSetup bs = bloom_setup(sp, rng, true);
    const ExponentConfig& cfg = bs.cfg;
    const MultiIndexPair& pr = bs.pair;
    const int m = cfg.m;
    const double a = trial_spread(sp, t);
    const Index& tau = pr.tau;
    const int T = static_cast<int>(tau.size());

    const Weight zeta = random_weight(rng, n, a), lambda = random_weight(rng, n, a);
    std::vector<Weight> xi(m), eta(m);
    for (int i : tau) xi[i] = random_weight(rng, n, a);
    for (int j = 0; j < T; ++j) {
        const int i = tau[j];
        const double l = pr.k[i] - pr.t[i];
        eta[i].resize(n);
        for (int x = 0; x < n; ++x) {
            if (j == 0)
                eta[i][x] = std::pow(zeta[x] / xi[i][x], 1.0 / cfg.q);
            else if (j < T - 1)
                eta[i][x] = std::pow(xi[i][x] / xi[tau[j + 1]][x], 1.0 / (l * cfg.q));
            else
                eta[i][x] = std::pow(xi[i][x] / lambda[x], 1.0 / (l * cfg.q));
        }
    }

    const Functions b = random_symbols(rng, m, n);
    Functions f(m);
    for (auto& fi : f) fi = random_function(rng, n);
    const Vec g = random_function(rng, n);
    const SparseFamily S = random_sparse_family(lat, rng, 0.3, sp.sparse_delta);
    const SparseFamily St = augment_all(S, b, tau);

    const Vec A = sparse_higher(S, b, f, pr, cfg, Exec::serial);
    Vec gl(n);
    for (int x = 0; x < n; ++x) gl[x] = g[x] * lambda[x];
    const double lhs = integral(s, A, gl);

    double cst = 1.0, cmax = 0.0;
    Functions F(m);
    for (int i = 0; i < m; ++i) {
        if (!in_set(tau, i)) {
            F[i] = f[i];
            continue;
        }
        const double Ci = oscillation_constant(S, St, b[i]);
        const double ni = weighted_bmo_norm(lat, b[i], eta[i]).value;
        cst *= std::pow(Ci * ni, pr.k[i]) * factorial(pr.t[i]) * factorial(pr.k[i] - pr.t[i]);
        cmax = std::max(cmax, Ci);
        F[i] = iterated_weighted_average(St, f[i], eta[i], pr.t[i]);
    }
    Vec H = gl;
    for (int j = T - 1; j >= 0; --j) H = iterated_weighted_average(St, H, eta[tau[j]], pr.k[tau[j]] - pr.t[tau[j]]);
    const double rhs = cst * dual_sparse_sum(S, H, F, cfg.eta);

    Trial tr;
    tr.ratio = rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? kInf : 0.0);
    tr.max_metrics = {{"augment_constant", cmax}};
    return tr;
}

namespace {

// sum_Q mu^{eta/r} prod_{i in sigma} |b_i(x) - b_{i,Q}| prod_{tau} <f_i>_{Q,r} prod_{tau^c} ||b_j|| ||f_j^r||^{1/r}_{LlogL^r,Q}
Vec delta_operator(const SparseFamily& S, const Functions& b, const Vec& bnorm, const Functions& f, const Index& tau,
                   const Index& sigma, double eta, double r) {
    const DyadicLattice& lat = *S.lattice;
    const DiscreteSpace& s = lat.space();
    const int n = s.size();
    const int m = static_cast<int>(f.size());
    const Weight one(n, 1.0);
    const auto phi = YoungFunction::llogl(r);
    std::vector<Vec> terms(n);
    for (int id : S.cubes) {
        const Cube& q = lat.cube(id);
        double c = std::pow(q.mass, eta / r);
        for (int i = 0; i < m; ++i) {
            if (in_set(tau, i)) {
                c *= avg(s, q.members, f[i], r);
            } else {
                Vec fr(n, 0.0);
                for (int x : q.members) fr[x] = std::pow(std::abs(f[i][x]), r);
                c *= bnorm[i] * std::pow(orlicz_norm(s, q.members, fr, phi), 1.0 / r);
            }
        }
        Vec bq(m);
        for (int i : sigma) bq[i] = avg_w(s, q.members, b[i], one);
        for (int x : q.members) {
            double v = c;
            for (int i : sigma) v *= std::abs(b[i][x] - bq[i]);
            terms[x].push_back(v);
        }
    }
    Vec out(n);
    for (int x = 0; x < n; ++x) out[x] = pairwise_sum(terms[x]);
    return out;
}

}  // namespace

Trial trial_sharp_commutator(const CheckSpec& sp, int n, std::uint64_t seed, int t) {
    auto rng = trial_rng(seed, t);
    Env env(n, trial_masses(rng, n, t));
    const DiscreteSpace& s = env.s;
    const DyadicLattice& lat = env.lat;
    const int m = 2;
    const Index tau = t % 2 == 0 ? Index{0, 1} : Index{0};
    const double eta = (t / 2) % 2 == 0 ? 0.0 : 0.5;
    const double r = 1.0, dlt = 0.2, eps = 0.45;
    (void)sp;

    const Functions b = random_symbols(rng, m, n);
    Functions f(m);
    for (auto& fi : f) fi = random_function(rng, n);
    const SparseFamily S = random_sparse_family(lat, rng, 0.3, sp.sparse_delta);
    Vec bn(m);
    double bprod = 1.0;
    for (int i = 0; i < m; ++i) {
        bn[i] = bmo_norm(lat, b[i]).value;
        bprod *= bn[i];
    }
    ExponentConfig cfg;
    cfg.m = m;
    cfg.p = {2.0, 2.0};
    cfg.eta = eta;
    cfg.r = r;

    const Vec lhs = sharp_maximal_dyadic(lat, delta_operator(S, b, bn, f, tau, tau, eta, r), dlt);
    const Vec mend = maximal_endpoint(lat, f, tau, cfg);
    const Vec aend = m_delta(s, sparse_endpoint(S, f, tau, cfg, Exec::serial), eps);
    Vec rhs(n);
    for (int x = 0; x < n; ++x) rhs[x] = bprod * (mend[x] + aend[x]);
    // Nonempty proper subsets of tau.
    const int T = static_cast<int>(tau.size());
    for (int mask = 1; mask < (1 << T) - 1; ++mask) {
        Index sig, rest;
        double c = 1.0;
        for (int j = 0; j < T; ++j) {
            if (mask & (1 << j)) {
                sig.push_back(tau[j]);
                c *= bn[tau[j]];
            } else {
                rest.push_back(tau[j]);
            }
        }
        const Vec term = m_delta(s, delta_operator(S, b, bn, f, tau, rest, eta, r), eps);
        for (int x = 0; x < n; ++x) rhs[x] += c * term[x];
    }
    Trial tr;
    for (int x = 0; x < n; ++x) {
        if (rhs[x] > 0.0)
            tr.ratio = std::max(tr.ratio, lhs[x] / rhs[x]);
        else if (lhs[x] > 0.0)
            tr.ratio = kInf;
    }
    return tr;
}

Trial trial_endpoint_weak(const CheckSpec& sp, int n, std::uint64_t seed, int t) {
    auto rng = trial_rng(seed, t);
    Env env(n, trial_masses(rng, n, t));
    const DiscreteSpace& s = env.s;
    const DyadicLattice& lat = env.lat;
    const int m = sp.config ? sp.config->m : 1 + t % 2;
    const double eta = sp.config ? sp.config->eta : ((t / 2) % 2 == 0 ? 0.0 : 0.25);
    const double r = sp.config ? sp.config->r : 1.0 + (t / 4) % 2;
    ExponentConfig cfg;
    cfg.m = m;
    cfg.p = Vec(m, 2.0);
    cfg.eta = eta;
    cfg.r = r;
    cfg.q0 = 1.0 / (m - eta);
    const double a = trial_spread(sp, t);

    std::vector<Weight> om(m);
    Functions f(m);
    Weight omega(n, 1.0);
    for (int i = 0; i < m; ++i) {
        om[i] = random_weight(rng, n, a);
        f[i] = random_function(rng, n);
        const double scale = std::exp(normal(rng));
        for (int x = 0; x < n; ++x) {
            f[i][x] *= scale;
            omega[x] *= std::pow(om[i][x], cfg.q0);
        }
    }
    Functions b = random_symbols(rng, m, n);
    for (auto& bi : b) {
        const double nb = bmo_norm(lat, bi).value;
        for (double& v : bi) v /= nb;
    }
    const double W = weight_constant(WeightKind::A_1q0_star, lat, WeightInputs{omega, om}, cfg).value;
    const SparseFamily S = random_sparse_family(lat, rng, 0.3, sp.sparse_delta);
    const Index all = all_indices(m);
    const Vec A0 = sparse_endpoint(S, f, all, cfg, Exec::serial);
    const Vec A1 = sparse_first_order(S, b, f, Index{0}, all, cfg, Exec::serial);

    auto sup_ratio = [&](const Vec& A, const std::function<double(double)>& phi) {
        const double top = std::pow(*std::max_element(A.begin(), A.end()), 1.0 / m);
        double worst = 0.0;
        if (!(top > 0.0)) return worst;
        const int K = 40;
        for (int k = 0; k < K; ++k) {
            const double lam = top * std::pow(0.05, double(k) / (K - 1));
            const double lm = std::pow(lam, m);
            Vec hit(n, 0.0);
            for (int x = 0; x < n; ++x) hit[x] = A[x] > lm ? 1.0 : 0.0;
            const double lhs = integral(s, hit, omega);
            if (lhs == 0.0) continue;
            double rhs = W;
            for (int i = 0; i < m; ++i) {
                Vec pf(n);
                for (int x = 0; x < n; ++x) pf[x] = phi(f[i][x] / lam);
                rhs *= std::pow(integral(s, pf, om[i]), cfg.q0);
            }
            worst = std::max(worst, lhs / rhs);
        }
        return worst;
    };
    const double r0 = sup_ratio(A0, [r](double x) { return std::pow(x, r); });
    const double r1 = sup_ratio(A1, YoungFunction::phi(r, m));
    Trial tr;
    tr.ratio = std::max(r0, r1);
    tr.max_metrics = {{"basic_ratio", r0}, {"symbol_ratio", r1}};
    return tr;
}

Trial trial_caopro(const CheckSpec& sp, int n, std::uint64_t seed, int t) {
    auto rng = trial_rng(seed, t);
    Env env(n, trial_masses(rng, n, t));
    const DiscreteSpace& s = env.s;
    const DyadicLattice& lat = env.lat;
    ExponentConfig cfg = sp.config ? *sp.config : random_config(rng, 2, 1.5, 4.0, 0.5, 1.0);
    cfg.r = 1.0;
    cfg.p0 = 1.0;
    cfg.gamma = 1.0;
    const int m = cfg.m;
    const Index all = all_indices(m);
    const Index tau = t % 2 == 0 ? Index{0} : all;
    const double a = trial_spread(sp, t);

    std::vector<Weight> om(m), sig(m);
    Weight u(n, 1.0);
    for (int i = 0; i < m; ++i) {
        om[i] = random_weight(rng, n, a);
        sig[i] = dual_weight(om[i], cfg.p[i]);
        for (int x = 0; x < n; ++x) u[x] *= std::pow(om[i][x], cfg.q / cfg.p[i]);
    }
    const Functions b = random_symbols(rng, m, n);
    const SparseFamily S = random_sparse_family(lat, rng, 0.3, sp.sparse_delta);

    auto objective = [&](bool symbol, const Functions& f) {
        Functions fs(m, Vec(n));
        double den = 1.0;
        for (int i = 0; i < m; ++i) {
            for (int x = 0; x < n; ++x) fs[i][x] = f[i][x] * sig[i][x];
            den *= lp_norm(s, f[i], sig[i], cfg.p[i]);
        }
        if (!(den > 0.0)) return 0.0;
        const Vec T = symbol ? sparse_first_order(S, b, fs, tau, all, cfg, Exec::serial) : sparse_basic(S, fs, cfg, Exec::serial);
        return lp_norm(s, T, u, cfg.q) / den;
    };
    auto estimate = [&](bool symbol) {
        double best = 0.0;
        for (int start = 0; start < 2; ++start) {
            Functions f(m);
            for (auto& fi : f) fi = random_function(rng, n);
            double cur = objective(symbol, f);
            for (int sweep = 0; sweep < 2; ++sweep)
                for (int i = 0; i < m; ++i)
                    for (int x = 0; x < n; ++x)
                        for (double fac : {0.0, 0.5, 2.0}) {
                            const double old = f[i][x];
                            f[i][x] = old == 0.0 ? (fac == 0.0 ? 0.0 : fac) : old * fac;
                            const double v = objective(symbol, f);
                            if (v > cur)
                                cur = v;
                            else
                                f[i][x] = old;
                        }
            best = std::max(best, cur);
        }
        return best;
    };
    ExponentConfig c1;
    double c0 = std::pow(weight_constant(WeightKind::A_inf_fujii, lat, WeightInputs{{}, {u}}, c1).value, double(tau.size()));
    for (int j = 0; j < m; ++j) {
        if (!in_set(tau, j)) c0 *= weight_constant(WeightKind::A_inf_fujii, lat, WeightInputs{{}, {sig[j]}}, c1).value;
        c0 *= bmo_norm(lat, b[j]).value;
    }
    const double nb = estimate(true);
    const double na = estimate(false);
    Trial tr;
    tr.ratio = nb / (c0 * na);
    tr.max_metrics = {{"symbol_norm_estimate", nb}, {"plain_norm_estimate", na}, {"C0", c0}};
    return tr;
}

std::vector<std::string> young_chain_check(int points, double* worst_ratio) {
    std::vector<std::string> out;
    double worst = 0.0;
    for (int r = 1; r <= 3; ++r) {
        const auto pr = YoungFunction::llogl(r), p2r = YoungFunction::llogl(2.0 * r);
        const double c = std::pow(r + 1.0, r);
        int bad = 0;
        for (int k = 0; k < points; ++k) {
            const double t = 1e-3 * std::pow(1e15, double(k) / (points - 1));
            const double lp = t > 1.0 ? std::log(t) : 0.0;
            const double lower = t * std::pow(1.0 + lp, 2.0 * r);
            const double mid = pr(pr(t));
            const double upper = c * p2r(t);
            if (!le(lower, mid) || !le(mid, upper)) ++bad;
            worst = std::max(worst, mid / upper);
        }
        if (bad > 0) {
            std::ostringstream os;
            os << "Young chain fails at " << bad << " grid points for r = " << r;
            out.push_back(os.str());
        }
    }
    if (worst_ratio) *worst_ratio = worst;
    return out;
}

}  // namespace sl::detail

#include "sparselab/operators.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <string>

namespace sl {

void MultiIndexPair::validate(int m) const {
    auto fail = [](const std::string& f, const std::string& w) { throw Error(ErrorKind::config, f + ": " + w); };
    if (static_cast<int>(k.size()) != m) fail("k", "must have m entries");
    if (static_cast<int>(t.size()) != m) fail("t", "must have m entries");
    for (int i = 0; i < m; ++i) {
        if (k[i] < 0 || t[i] < 0) fail("k", "entries must be nonnegative");
        if (t[i] > k[i]) fail("t", "t_i must not exceed k_i");
    }
    auto check_set = [&](const Index& s, const char* name) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] < 0 || s[i] >= m) fail(name, "index out of range");
            if (i > 0 && s[i] <= s[i - 1]) fail(name, "must be strictly increasing");
        }
    };
    check_set(tau, "tau");
    check_set(tau_ell, "tau_ell");
    for (int i : tau)
        if (!in_set(tau_ell, i)) fail("tau", "must be a subset of tau_ell");
}

bool in_set(const Index& set, int i) { return std::find(set.begin(), set.end(), i) != set.end(); }

namespace {

double ipow(double x, int e) {
    double r = 1.0;
    for (int i = 0; i < e; ++i) r *= x;
    return r;
}

void check_functions(const DiscreteSpace& s, const Functions& f, int m, const char* what) {
    if (static_cast<int>(f.size()) != m) throw Error(ErrorKind::invalid_argument, std::string(what) + ": need m functions");
    for (const Vec& v : f)
        if (static_cast<int>(v.size()) != s.size())
            throw Error(ErrorKind::invalid_argument, std::string(what) + ": need one value per point");
}

double cube_avg(const DiscreteSpace& s, const Index& e, const Vec& g, double r) { return avg(s, e, g, r); }

// Shared sparse-sum kernel. Term of cube c at x:
//   coef[c] * prod_{(i,e) in pw} |b_i(x) - bq[c][i]|^e, raised to gamma,
// summed pairwise in family order; the result is taken to the power 1/gamma.
Vec cube_sum(const SparseFamily& S, const Vec& coef, const std::vector<std::pair<int, int>>& pw, const Functions& b,
             const std::vector<Vec>& bq, double gamma, Exec ex) {
    const DyadicLattice& lat = *S.lattice;
    const int n = lat.space().size();
    const std::size_t nc = S.cubes.size();
    auto term = [&](std::size_t c, int x) {
        double v = coef[c];
        for (auto [i, e] : pw) v *= ipow(std::abs(b[i][x] - bq[c][i]), e);
        return gamma == 1.0 ? v : std::pow(v, gamma);
    };
    Vec out(n, 0.0);
    if (ex == Exec::serial) {
        std::vector<Vec> terms(n);
        for (std::size_t c = 0; c < nc; ++c)
            for (int x : lat.cube(S.cubes[c]).members) terms[x].push_back(term(c, x));
        for (int x = 0; x < n; ++x) out[x] = pairwise_sum(terms[x]);
    } else {
        std::vector<std::vector<int>> hits(n);
        for (std::size_t c = 0; c < nc; ++c)
            for (int x : lat.cube(S.cubes[c]).members) hits[x].push_back(static_cast<int>(c));
#pragma omp parallel for schedule(dynamic, 4)
        for (int x = 0; x < n; ++x) {
            Vec t(hits[x].size());
            for (std::size_t j = 0; j < hits[x].size(); ++j) t[j] = term(hits[x][j], x);
            out[x] = pairwise_sum(t);
        }
    }
    if (gamma != 1.0)
        for (double& v : out) v = std::pow(v, 1.0 / gamma);
    return out;
}

// b_{i,Q} for every family cube.
std::vector<Vec> cube_means(const SparseFamily& S, const Functions& b) {
    const DyadicLattice& lat = *S.lattice;
    const DiscreteSpace& s = lat.space();
    std::vector<Vec> bq(S.cubes.size(), Vec(b.size(), 0.0));
    for (std::size_t c = 0; c < S.cubes.size(); ++c)
        for (std::size_t i = 0; i < b.size(); ++i) {
            const Index& e = lat.cube(S.cubes[c]).members;
            bq[c][i] = avg_w(s, e, b[i], Weight(s.size(), 1.0));
        }
    return bq;
}

template <class F>
void for_cubes(std::size_t nc, Exec ex, F&& body) {
    if (ex == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 4)
        for (std::size_t c = 0; c < nc; ++c) body(c);
    } else {
        for (std::size_t c = 0; c < nc; ++c) body(c);
    }
}

}  // namespace

Vec sparse_basic(const SparseFamily& S, const Functions& f, const ExponentConfig& cfg, Exec ex) {
    const DyadicLattice& lat = *S.lattice;
    const DiscreteSpace& s = lat.space();
    check_functions(s, f, cfg.m, "sparse_basic");
    Vec coef(S.cubes.size());
    for_cubes(S.cubes.size(), ex, [&](std::size_t c) {
        const Cube& q = lat.cube(S.cubes[c]);
        double v = cfg.eta == 0.0 ? 1.0 : std::pow(q.mass, cfg.eta);
        for (int i = 0; i < cfg.m; ++i) v *= cube_avg(s, q.members, f[i], cfg.p0);
        coef[c] = v;
    });
    return cube_sum(S, coef, {}, f, {}, cfg.gamma, ex);
}

std::vector<CubeTerm> sparse_basic_terms(const SparseFamily& S, const Functions& f, const ExponentConfig& cfg) {
    const DyadicLattice& lat = *S.lattice;
    const DiscreteSpace& s = lat.space();
    check_functions(s, f, cfg.m, "sparse_basic");
    std::vector<CubeTerm> out;
    for (int id : S.cubes) {
        const Cube& q = lat.cube(id);
        double v = cfg.eta == 0.0 ? 1.0 : std::pow(q.mass, cfg.eta);
        for (int i = 0; i < cfg.m; ++i) v *= cube_avg(s, q.members, f[i], cfg.p0);
        out.push_back({id, cfg.gamma == 1.0 ? v : std::pow(v, cfg.gamma)});
    }
    return out;
}

namespace {

// Per-cube scalar factor for symbol operators; exps[i] is the power of |b_i(x) - b_{i,Q}|.
Vec symbol_coefs(const SparseFamily& S, const Functions& b, const Functions& f, const std::vector<Vec>& bq,
                 const Index& tpow, const std::vector<char>& osc_inside, const ExponentConfig& cfg, Exec ex) {
    const DyadicLattice& lat = *S.lattice;
    const DiscreteSpace& s = lat.space();
    Vec coef(S.cubes.size());
    for_cubes(S.cubes.size(), ex, [&](std::size_t c) {
        const Cube& q = lat.cube(S.cubes[c]);
        double v = cfg.eta == 0.0 ? 1.0 : std::pow(q.mass, cfg.eta / cfg.r);
        Vec g(s.size(), 0.0);
        for (int i = 0; i < cfg.m; ++i) {
            if (osc_inside[i]) {
                for (int x : q.members) g[x] = f[i][x] * ipow(b[i][x] - bq[c][i], tpow[i]);
                v *= cube_avg(s, q.members, g, cfg.r);
            } else {
                v *= cube_avg(s, q.members, f[i], cfg.r);
            }
        }
        coef[c] = v;
    });
    return coef;
}

}  // namespace

Vec sparse_first_order(const SparseFamily& S, const Functions& b, const Functions& f, const Index& tau,
                       const Index& tau_ell, const ExponentConfig& cfg, Exec ex) {
    const DiscreteSpace& s = S.lattice->space();
    check_functions(s, f, cfg.m, "sparse_first_order");
    check_functions(s, b, cfg.m, "sparse_first_order symbols");
    MultiIndexPair chk{Index(cfg.m, 0), Index(cfg.m, 0), tau, tau_ell};
    chk.validate(cfg.m);
    auto bq = cube_means(S, b);
    Index tpow(cfg.m, 0);
    std::vector<char> inside(cfg.m, 0);
    std::vector<std::pair<int, int>> pw;
    for (int i = 0; i < cfg.m; ++i) {
        if (in_set(tau, i)) {
            pw.push_back({i, 1});
        } else if (in_set(tau_ell, i)) {
            inside[i] = 1;
            tpow[i] = 1;
        }
    }
    Vec coef = symbol_coefs(S, b, f, bq, tpow, inside, cfg, ex);
    return cube_sum(S, coef, pw, b, bq, 1.0, ex);
}

Vec sparse_higher(const SparseFamily& S, const Functions& b, const Functions& f, const MultiIndexPair& pair,
                  const ExponentConfig& cfg, Exec ex) {
    const DiscreteSpace& s = S.lattice->space();
    check_functions(s, f, cfg.m, "sparse_higher");
    check_functions(s, b, cfg.m, "sparse_higher symbols");
    pair.validate(cfg.m);
    auto bq = cube_means(S, b);
    Index tpow(cfg.m, 0);
    std::vector<char> inside(cfg.m, 0);
    std::vector<std::pair<int, int>> pw;
    for (int i : pair.tau) {
        inside[i] = 1;
        tpow[i] = pair.t[i];
        if (pair.k[i] - pair.t[i] > 0) pw.push_back({i, pair.k[i] - pair.t[i]});
    }
    Vec coef = symbol_coefs(S, b, f, bq, tpow, inside, cfg, ex);
    return cube_sum(S, coef, pw, b, bq, 1.0, ex);
}

Vec sparse_endpoint(const SparseFamily& S, const Functions& f, const Index& tau, const ExponentConfig& cfg, Exec ex) {
    const DyadicLattice& lat = *S.lattice;
    const DiscreteSpace& s = lat.space();
    check_functions(s, f, cfg.m, "sparse_endpoint");
    const YoungFunction phi = YoungFunction::llogl(cfg.r);
    Vec coef(S.cubes.size());
    for_cubes(S.cubes.size(), ex, [&](std::size_t c) {
        const Cube& q = lat.cube(S.cubes[c]);
        double v = cfg.eta == 0.0 ? 1.0 : std::pow(q.mass, cfg.eta / cfg.r);
        for (int i = 0; i < cfg.m; ++i) {
            if (in_set(tau, i)) {
                v *= cube_avg(s, q.members, f[i], cfg.r);
            } else {
                Vec fr(s.size(), 0.0);
                for (int x : q.members) fr[x] = std::pow(std::abs(f[i][x]), cfg.r);
                double o = orlicz_norm(s, q.members, fr, phi);
                v *= cfg.r == 1.0 ? o : std::pow(o, 1.0 / cfg.r);
            }
        }
        coef[c] = v;
    });
    return cube_sum(S, coef, {}, f, {}, 1.0, ex);
}

Vec maximal_endpoint(const DyadicLattice& lat, const Functions& f, const Index& tau, const ExponentConfig& cfg) {
    const DiscreteSpace& s = lat.space();
    check_functions(s, f, cfg.m, "maximal_endpoint");
    const YoungFunction phi = YoungFunction::llogl(cfg.r);
    Vec out(s.size(), 0.0);
    for (const Cube& q : lat.cubes()) {
        double v = cfg.eta == 0.0 ? 1.0 : std::pow(q.mass, cfg.eta / cfg.r);
        for (int i = 0; i < cfg.m; ++i)
            v *= in_set(tau, i) ? cube_avg(s, q.members, f[i], 1.0) : orlicz_norm(s, q.members, f[i], phi);
        for (int x : q.members) out[x] = std::max(out[x], v);
    }
    return out;
}

Vec frac_maximal(const DiscreteSpace& s, const Functions& f, double eta) {
    const int n = s.size();
    const int m = static_cast<int>(f.size());
    if (m < 1) throw Error(ErrorKind::invalid_argument, "frac_maximal: need at least one function");
    check_functions(s, f, m, "frac_maximal");
    Vec out(n, 0.0);
    for (int z = 0; z < n; ++z) {
        const Index& ord = s.order(z);
        const Vec& sd = s.sorted_dist(z);
        Vec sums(m, 0.0);
        double mass = 0.0;
        int i = 0;
        while (i < n) {
            const double r = sd[i];
            while (i < n && sd[i] == r) {
                const int y = ord[i];
                for (int j = 0; j < m; ++j) sums[j] += std::abs(f[j][y]) * s.mass(y);
                mass += s.mass(y);
                ++i;
            }
            double v = eta == 0.0 ? 1.0 : std::pow(mass, eta);
            for (int j = 0; j < m; ++j) v *= sums[j] / mass;
            for (int a = 0; a < i; ++a) out[ord[a]] = std::max(out[ord[a]], v);
        }
    }
    return out;
}

FracKernel::FracKernel(const DiscreteSpace& s, int m, double eta) : s_(&s), n_(s.size()), m_(m), eta_(eta) {
    if (m < 1) throw Error(ErrorKind::invalid_argument, "kernel needs m >= 1");
    if (eta < 0.0 || eta >= m) throw Error(ErrorKind::invalid_argument, "kernel needs eta in [0, m)");
    tuples_ = 1;
    for (int i = 0; i < m; ++i) tuples_ *= static_cast<std::size_t>(n_);
    V_.resize(static_cast<std::size_t>(n_) * n_);
    for (int x = 0; x < n_; ++x)
        for (int y = 0; y < n_; ++y) V_[static_cast<std::size_t>(x) * n_ + y] = s.ball_mass(x, s.d(x, y));
    if (tuples_ * n_ <= (std::size_t(1) << 22)) {
        table_.resize(tuples_ * n_);
        std::vector<int> y(m, 0);
        for (int x = 0; x < n_; ++x) {
            std::fill(y.begin(), y.end(), 0);
            for (std::size_t code = 0; code < tuples_; ++code) {
                double sv = 0.0;
                for (int i = 0; i < m; ++i) sv += V(x, y[i]);
                table_[static_cast<std::size_t>(x) * tuples_ + code] = std::pow(sv, eta - m);
                for (int i = m - 1; i >= 0; --i) {
                    if (++y[i] < n_) break;
                    y[i] = 0;
                }
            }
        }
    }
}

double FracKernel::at(int x, std::size_t code, const int* y) const {
    if (!table_.empty()) return table_[static_cast<std::size_t>(x) * tuples_ + code];
    double sv = 0.0;
    for (int i = 0; i < m_; ++i) sv += V(x, y[i]);
    return std::pow(sv, eta_ - m_);
}

double frac_integral_at(const FracKernel& K, int x, const Functions& g, const std::vector<char>* incl,
                        const std::vector<char>* excl) {
    const DiscreteSpace& s = K.space();
    const int n = s.size();
    const int m = K.m();
    Index pts;
    pts.reserve(n);
    for (int y = 0; y < n; ++y)
        if (!incl || (*incl)[y]) pts.push_back(y);
    if (pts.empty()) return 0.0;
    const int L = static_cast<int>(pts.size());
    // gm[i][a] = g_i(pts[a]) mu(pts[a])
    std::vector<Vec> gm(m, Vec(L));
    for (int i = 0; i < m; ++i)
        for (int a = 0; a < L; ++a) gm[i][a] = g[i][pts[a]] * s.mass(pts[a]);
    thread_local Vec terms;
    terms.clear();
    std::vector<int> a(m, 0), y(m, 0);
    std::vector<std::size_t> pw(m, 1);
    for (int i = m - 2; i >= 0; --i) pw[i] = pw[i + 1] * n;
    for (;;) {
        bool skip = false;
        if (excl) {
            skip = true;
            for (int i = 0; i < m && skip; ++i) skip = (*excl)[pts[a[i]]] != 0;
        }
        if (!skip) {
            double prod = 1.0;
            std::size_t code = 0;
            for (int i = 0; i < m; ++i) {
                prod *= gm[i][a[i]];
                y[i] = pts[a[i]];
                code += pw[i] * y[i];
            }
            if (prod != 0.0) terms.push_back(K.at(x, code, y.data()) * prod);
        }
        int i = m - 1;
        for (; i >= 0; --i) {
            if (++a[i] < L) break;
            a[i] = 0;
        }
        if (i < 0) break;
    }
    return pairwise_sum(terms);
}

Vec frac_integral(const FracKernel& K, const Functions& f, Exec ex) {
    const DiscreteSpace& s = K.space();
    check_functions(s, f, K.m(), "frac_integral");
    const int n = s.size();
    Vec out(n);
    if (ex == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 1)
        for (int x = 0; x < n; ++x) out[x] = frac_integral_at(K, x, f, nullptr, nullptr);
    } else {
        for (int x = 0; x < n; ++x) out[x] = frac_integral_at(K, x, f, nullptr, nullptr);
    }
    return out;
}

Vec frac_integral(const DiscreteSpace& s, const Functions& f, double eta, Exec ex) {
    FracKernel K(s, static_cast<int>(f.size()), eta);
    return frac_integral(K, f, ex);
}

Vec commutator_general(const FracKernel& K, const Functions& b, const Functions& f, const MultiIndexPair& pair,
                       Exec ex) {
    const DiscreteSpace& s = K.space();
    const int m = K.m();
    check_functions(s, f, m, "commutator_general");
    check_functions(s, b, m, "commutator_general symbols");
    pair.validate(m);
    const int n = s.size();
    Index beta(m, 0);
    for (int i : pair.tau_ell) beta[i] = pair.k[i];
    auto one = [&](int x) {
        Functions g(m, Vec(n));
        for (int i = 0; i < m; ++i)
            for (int y = 0; y < n; ++y) g[i][y] = ipow(b[i][x] - b[i][y], beta[i]) * f[i][y];
        return frac_integral_at(K, x, g, nullptr, nullptr);
    };
    Vec out(n);
    if (ex == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 1)
        for (int x = 0; x < n; ++x) out[x] = one(x);
    } else {
        for (int x = 0; x < n; ++x) out[x] = one(x);
    }
    return out;
}

Vec commutator_general(const DiscreteSpace& s, const Functions& b, const Functions& f, const MultiIndexPair& pair,
                       double eta, Exec ex) {
    FracKernel K(s, static_cast<int>(f.size()), eta);
    return commutator_general(K, b, f, pair, ex);
}

Vec dyadic_weighted_maximal(const DyadicLattice& lat, const Vec& f, const Weight& sigma) {
    const DiscreteSpace& s = lat.space();
    Vec af(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) af[i] = std::abs(f[i]);
    Vec out(s.size(), 0.0);
    for (const Cube& q : lat.cubes()) {
        double v = avg_w(s, q.members, af, sigma);
        for (int x : q.members) out[x] = std::max(out[x], v);
    }
    return out;
}

Vec m_delta(const DiscreteSpace& s, const Vec& f, double delta) {
    if (!(delta > 0.0)) throw Error(ErrorKind::invalid_argument, "m_delta needs delta > 0");
    Vec h(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) h[i] = std::pow(std::abs(f[i]), delta);
    Vec out = frac_maximal(s, {h}, 0.0);
    for (double& v : out) v = std::pow(v, 1.0 / delta);
    return out;
}

Vec sharp_maximal_dyadic(const DyadicLattice& lat, const Vec& f, double delta) {
    if (!(delta > 0.0)) throw Error(ErrorKind::invalid_argument, "sharp maximal needs delta > 0");
    const DiscreteSpace& s = lat.space();
    Vec h = f;
    if (delta != 1.0)
        for (double& v : h) v = std::pow(std::abs(v), delta);
    const Weight one(s.size(), 1.0);
    Vec out(s.size(), 0.0);
    for (const Cube& q : lat.cubes()) {
        const double hq = avg_w(s, q.members, h, one);
        Vec osc(s.size(), 0.0);
        for (int x : q.members) osc[x] = h[x] - hq;
        double v = avg(s, q.members, osc, 1.0);
        for (int x : q.members) out[x] = std::max(out[x], v);
    }
    if (delta != 1.0)
        for (double& v : out) v = std::pow(v, 1.0 / delta);
    return out;
}

TruncationConstants truncation_constants(double a0, double c_adj) {
    TruncationConstants t;
    const double need = std::max(3.0 * a0, 2.0 * a0 * c_adj);
    t.jtilde0 = 0;
    while (std::ldexp(1.0, t.jtilde0) <= need) ++t.jtilde0;
    t.c_jtilde0 = std::ldexp(1.0, t.jtilde0 + 2) * a0;
    t.j0 = t.jtilde0 + 1;
    while (std::ldexp(1.0, t.j0) <= 4.0 * a0) ++t.j0;
    return t;
}

namespace {

Vec radius_breakpoints(const DiscreteSpace& s, int z, double C) {
    Vec rs{0.0};
    for (double r : s.radii(z)) {
        rs.push_back(r);
        rs.push_back(r / C);
    }
    std::sort(rs.begin(), rs.end());
    rs.erase(std::unique(rs.begin(), rs.end()), rs.end());
    return rs;
}

std::vector<char> mask_of(const DiscreteSpace& s, int z, double r) {
    std::vector<char> m(s.size(), 0);
    const int cnt = s.ball_count(z, r);
    for (int i = 0; i < cnt; ++i) m[s.order(z)[i]] = 1;
    return m;
}

// Shared driver: for every ball B = B(z,r) accepted by `keep`, the value
// max_{xi in B} |T over incl^m minus (C B)^m| is spread to the points of B.
template <class Keep>
Vec grand_driver(const FracKernel& K, const Functions& f, double C, const std::vector<char>* incl, Keep&& keep) {
    const DiscreteSpace& s = K.space();
    const int n = s.size();
    check_functions(s, f, K.m(), "grand maximal");
    std::map<std::vector<char>, Vec> memo;
    Vec out(n, 0.0);
    for (int z = 0; z < n; ++z) {
        for (double r : radius_breakpoints(s, z, C)) {
            const int cnt = s.ball_count(z, r);
            const Index& ord = s.order(z);
            if (!keep(z, r)) continue;
            std::vector<char> cb = mask_of(s, z, C * r);
            auto it = memo.find(cb);
            if (it == memo.end()) it = memo.emplace(cb, Vec(n, std::nan(""))).first;
            Vec& vals = it->second;
            double best = 0.0;
            for (int a = 0; a < cnt; ++a) {
                const int xi = ord[a];
                if (std::isnan(vals[xi])) vals[xi] = std::abs(frac_integral_at(K, xi, f, incl, &cb));
                best = std::max(best, vals[xi]);
            }
            for (int a = 0; a < cnt; ++a) out[ord[a]] = std::max(out[ord[a]], best);
        }
    }
    return out;
}

}  // namespace

Vec grand_maximal_truncated(const FracKernel& K, const Functions& f, double C) {
    return grand_driver(K, f, C, nullptr, [](int, double) { return true; });
}

Vec local_grand_maximal(const FracKernel& K, const Functions& f, double C, const Ball& b0) {
    const DiscreteSpace& s = K.space();
    std::vector<char> in_b0(s.size(), 0);
    for (int x : b0.members) in_b0[x] = 1;
    std::vector<char> cb0 = mask_of(s, b0.center, C * b0.radius);
    return grand_driver(K, f, C, &cb0, [&](int z, double r) {
        const int cnt = s.ball_count(z, r);
        for (int a = 0; a < cnt; ++a)
            if (!in_b0[s.order(z)[a]]) return false;
        return true;
    });
}

}  // namespace sl

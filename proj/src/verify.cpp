#include "sparselab/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <functional>
#include <map>
#include <sstream>

#include "verify_internal.hpp"

namespace sl {

namespace detail {

double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double normal(std::mt19937_64& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

Vec trial_masses(std::mt19937_64& rng, int n, int trial) {
    Vec m(n, 1.0);
    if (trial % 2 == 1)
        for (double& v : m) v = uniform(rng, 0.5, 1.5);
    return m;
}

double trial_spread(const CheckSpec& spec, int trial) {
    if (spec.weight_spread) return *spec.weight_spread;
    static const double a[] = {0.5, 1.0, 2.0};
    return a[trial % 3];
}

ExponentConfig random_config(std::mt19937_64& rng, int m, double pmin, double pmax, double eta_frac, double gamma) {
    Vec p(m);
    double s = 0.0;
    for (double& pi : p) {
        pi = uniform(rng, pmin, pmax);
        s += 1.0 / pi;
    }
    const double eta = uniform(rng, 0.0, eta_frac) * s;
    ExponentConfig c = ExponentConfig::make(p, 1.0 / (s - eta), gamma);
    return c;
}

double integral(const DiscreteSpace& s, const Vec& f, const Weight& w) {
    Vec t(s.size());
    for (int x = 0; x < s.size(); ++x) t[x] = f[x] * w[x] * s.mass(x);
    return pairwise_sum(t);
}

double integral_on(const DiscreteSpace& s, const Index& e, const Vec& f, const Weight& w) {
    Vec t(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) t[i] = f[e[i]] * w[e[i]] * s.mass(e[i]);
    return pairwise_sum(t);
}

Vec to_vec(const Index& idx) { return Vec(idx.begin(), idx.end()); }

Vec family_data(const SparseFamily& S) {
    Vec d = to_vec(S.cubes);
    for (const Index& w : S.witnesses) {
        d.push_back(-1.0);
        d.insert(d.end(), w.begin(), w.end());
    }
    return d;
}

SparseFamily random_chain(const DyadicLattice& lat, std::mt19937_64& rng) {
    SparseFamily S;
    S.lattice = &lat;
    int c = lat.generation(0)[0];
    for (;;) {
        const Cube& q = lat.cube(c);
        S.cubes.push_back(c);
        if (q.children.empty()) {
            S.witnesses.push_back(q.members);
            break;
        }
        const int next = q.children[std::uniform_int_distribution<int>(0, static_cast<int>(q.children.size()) - 1)(rng)];
        const Index& inner = lat.cube(next).members;
        Index w;
        std::set_difference(q.members.begin(), q.members.end(), inner.begin(), inner.end(), std::back_inserter(w));
        if (w.empty()) {  // a single-child cube: skip it
            S.cubes.pop_back();
        } else {
            S.witnesses.push_back(std::move(w));
        }
        c = next;
    }
    S.delta = declared_delta(lat, S.cubes, S.witnesses);
    return S;
}

}  // namespace detail

using namespace detail;

std::string to_string(CheckMode m) {
    switch (m) {
        case CheckMode::exact: return "exact";
        case CheckMode::explicit_constant: return "explicit-constant";
        case CheckMode::ratio_monitor: return "ratio-monitor";
    }
    return "exact";
}

CheckMode parse_check_mode(const std::string& s) {
    if (s == "exact") return CheckMode::exact;
    if (s == "explicit-constant" || s == "explicit_constant") return CheckMode::explicit_constant;
    if (s == "ratio-monitor" || s == "ratio_monitor") return CheckMode::ratio_monitor;
    throw Error(ErrorKind::config, "mode: unknown value '" + s + "' (exact, explicit-constant, ratio-monitor)");
}

const std::vector<CheckInfo>& check_registry() {
    using M = CheckMode;
    using D = DriftRule;
    static const std::vector<CheckInfo> reg = {
        {"holder_eq", M::exact, D::none, "mu(E) <= u(E)^{1/((m-eta)q)} prod sigma_i(E)^{1/((m-eta)p_i')}, equality for constant weights", 16, 500},
        {"dyadic_maximal", M::explicit_constant, D::none, "||M^sigma_D f||_{L^p(sigma)} <= p' ||f||_{L^p(sigma)}", 32, 500},
        {"thm_astar_chain", M::explicit_constant, D::none, "A* sparse bound, every step of the chain with explicit constants", 16, 200},
        {"dyadicsum_equiv", M::ratio_monitor, D::grids, "||sum alpha_Q chi_Q||_{L^s(sigma)} against the dyadic sum form", 16, 100, true},
        {"kolmogorov_sum", M::ratio_monitor, D::grids, "sum_{Q in S, Q in R} <u>^{s1}<v>^{s2} mu(Q) against the same at R", 16, 100},
        {"testing_lemma", M::explicit_constant, D::none, "sparse testing bound with constant 1, dual forms monitored", 16, 200},
        {"endpoint_weak", M::ratio_monitor, D::seeds, "weak-type endpoint bounds over a level grid, Young-function chain", 32, 200},
        {"m_vs_i", M::explicit_constant, D::none, "M_eta <= m^{m-eta} I_eta pointwise", 16, 100},
        {"bmo_lemmas", M::ratio_monitor, D::grids, "Orlicz and BMO lemmas, lower LlogL bound exact", 32, 50},
        {"caopro_norm_transfer", M::ratio_monitor, D::baseline, "first-order symbol operator norm against the plain operator norm", 16, 10},
        {"bloom_maximal", M::ratio_monitor, D::grids, "Bloom bound through the maximal weight, dual form", 16, 50},
        {"bloom_iterated", M::ratio_monitor, D::grids, "Bloom bound through iterated weights, dual form", 16, 50},
        {"sharp_maximal_commutator", M::ratio_monitor, D::grids, "sharp maximal function of the symbol operator, pointwise", 16, 50},
    };
    return reg;
}

const CheckInfo& find_check(const std::string& id) {
    for (const CheckInfo& c : check_registry())
        if (c.id == id) return c;
    std::ostringstream os;
    os << "check_id: unknown check '" << id << "'; valid ids:";
    for (const CheckInfo& c : check_registry()) os << ' ' << c.id;
    throw Error(ErrorKind::config, os.str());
}

Weight random_weight(std::mt19937_64& rng, int n, double spread) {
    Weight w(n);
    std::uniform_real_distribution<double> u(-spread, spread);
    for (double& v : w) v = spread > 0.0 ? std::exp(u(rng)) : 1.0;
    return w;
}

Vec random_function(std::mt19937_64& rng, int n) {
    Vec f(n);
    std::normal_distribution<double> g(0.0, 1.0);
    for (double& v : f) v = std::abs(g(rng));
    return f;
}

SparseFamily random_sparse_family(const DyadicLattice& lat, std::mt19937_64& rng, double density, double delta) {
    if (!(delta > 0.0 && delta <= 1.0)) throw Error(ErrorKind::invalid_argument, "sparse family: delta must lie in (0, 1]");
    const DiscreteSpace& s = lat.space();
    std::vector<char> claimed(s.size(), 0);
    std::vector<std::pair<int, Index>> picked;
    for (int k = lat.depth(); k >= 0; --k) {
        for (int id : lat.generation(k)) {
            if (uniform(rng, 0.0, 1.0) >= density) continue;
            const Cube& c = lat.cube(id);
            Index free;
            for (int x : c.members)
                if (!claimed[x]) free.push_back(x);
            if (s.mass_of(free) < delta * c.mass) continue;
            std::shuffle(free.begin(), free.end(), rng);
            Index w;
            double wm = 0.0;
            for (int x : free) {
                if (wm >= delta * c.mass) break;
                w.push_back(x);
                wm += s.mass(x);
                claimed[x] = 1;
            }
            std::sort(w.begin(), w.end());
            picked.push_back({id, std::move(w)});
        }
    }
    if (picked.empty()) {
        const int id = lat.leaf(std::uniform_int_distribution<int>(0, s.size() - 1)(rng));
        picked.push_back({id, lat.cube(id).members});
    }
    std::sort(picked.begin(), picked.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    SparseFamily S;
    S.lattice = &lat;
    for (auto& [id, w] : picked) {
        S.cubes.push_back(id);
        S.witnesses.push_back(std::move(w));
    }
    S.delta = declared_delta(lat, S.cubes, S.witnesses);
    return S;
}

double lp_norm(const DiscreteSpace& s, const Vec& f, const Weight& w, double p) {
    Vec t(s.size());
    for (int x = 0; x < s.size(); ++x) t[x] = std::pow(std::abs(f[x]), p) * w[x] * s.mass(x);
    return std::pow(pairwise_sum(t), 1.0 / p);
}

Vec sparse_average(const SparseFamily& S, const Vec& h) {
    const DyadicLattice& lat = *S.lattice;
    const DiscreteSpace& s = lat.space();
    std::vector<Vec> terms(s.size());
    for (int id : S.cubes) {
        const Cube& q = lat.cube(id);
        Vec num, den;
        for (int x : q.members) {
            num.push_back(h[x] * s.mass(x));
            den.push_back(s.mass(x));
        }
        const double a = pairwise_sum(num) / pairwise_sum(den);  // signed: A_S is linear
        for (int x : q.members) terms[x].push_back(a);
    }
    Vec out(s.size());
    for (int x = 0; x < s.size(); ++x) out[x] = pairwise_sum(terms[x]);
    return out;
}

Vec iterated_weighted_average(const SparseFamily& S, const Vec& h, const Weight& eta, int times) {
    Vec cur = h;
    for (int k = 0; k < times; ++k) {
        cur = sparse_average(S, cur);
        for (std::size_t x = 0; x < cur.size(); ++x) cur[x] *= eta[x];
    }
    return cur;
}

AstarChainTerms astar_chain_terms(const SparseFamily& S, const Functions& f, const std::vector<Weight>& omega,
                                  const ExponentConfig& cfg) {
    cfg.validate();
    const DyadicLattice& lat = *S.lattice;
    const DiscreteSpace& s = lat.space();
    const int n = s.size();
    const int m = cfg.m;
    if (static_cast<int>(f.size()) != m || static_cast<int>(omega.size()) != m)
        throw Error(ErrorKind::invalid_argument, "astar chain: need m functions and m weights");
    if (!(S.delta > 0.0)) throw Error(ErrorKind::invalid_argument, "astar chain: family needs a positive delta");

    Weight u(n, 1.0);
    std::vector<Weight> sigma(m);
    Functions fs(m, Vec(n));
    for (int i = 0; i < m; ++i) {
        sigma[i] = dual_weight(omega[i], cfg.p[i]);
        for (int x = 0; x < n; ++x) {
            u[x] *= std::pow(omega[i][x], cfg.q / cfg.p[i]);
            fs[i][x] = f[i][x] * sigma[i][x];
        }
    }

    AstarChainTerms T;
    ExponentConfig cg = cfg;
    cg.p0 = 1.0;
    const double q = cfg.q;
    const double theta = cg.theta();
    const double beta = cg.beta();
    T.theta = theta;
    T.beta = beta;
    T.delta = S.delta;

    T.lhs = std::pow(lp_norm(s, sparse_basic(S, fs, cg, Exec::serial), u, q), theta);
    ExponentConfig ct = cg;
    ct.gamma = theta;
    const Vec At = sparse_basic(S, fs, ct, Exec::serial);
    T.embed_rhs = std::pow(lp_norm(s, At, u, q), theta);

    // Extremal dual function of F = A_theta^theta in L^{q/theta}(u).
    const double sx = q / theta;
    const bool s_inf = !(sx > 1.0);
    const double sp = s_inf ? kInf : conj_exp(sx);
    Vec F(n), g(n, 1.0);
    for (int x = 0; x < n; ++x) F[x] = std::pow(At[x], theta);
    if (!s_inf) {
        const double nf = lp_norm(s, F, u, sx);
        for (int x = 0; x < n; ++x) g[x] = nf > 0.0 ? std::pow(F[x] / nf, sx - 1.0) : 0.0;
    }

    T.w_const = weight_constant(WeightKind::A_pq_star, lat, WeightInputs{u, omega}, cfg).value;
    const double a = (m - cfg.eta) * theta * (beta * q - 1.0);
    const double pref = std::pow(1.0 / S.delta, a) * std::pow(T.w_const, beta * theta);

    Vec dual, wit, hol, gsum;
    std::vector<Vec> fsum(m);
    double gmax = 0.0;
    for (std::size_t c = 0; c < S.cubes.size(); ++c) {
        const Cube& Q = lat.cube(S.cubes[c]);
        const Index& E = S.witnesses[c];
        const double gu = integral_on(s, Q.members, g, u);
        const double uQ = weighted_mass(s, Q.members, u);
        double cq = cfg.eta == 0.0 ? 1.0 : std::pow(Q.mass, cfg.eta);
        double prodf = 1.0;
        double sig_part = 1.0, hol_part = 1.0;
        const double mE = s.mass_of(E), uE = weighted_mass(s, E, u);
        for (int i = 0; i < m; ++i) {
            cq *= avg(s, Q.members, fs[i], 1.0);
            const double fa = avg_w(s, Q.members, f[i], sigma[i]);
            const double sE = weighted_mass(s, E, sigma[i]);
            prodf *= fa;
            sig_part *= std::pow(sE, theta * (1.0 - beta * q / conj_exp(cfg.p[i])));
            hol_part *= std::pow(fa * std::pow(sE, 1.0 / cfg.p[i]), theta);
            fsum[i].push_back(std::pow(fa, cfg.p[i]) * sE);
        }
        const double gavg = gu / uQ;
        const double term = gu * std::pow(cq, theta);
        const double w_form = pref * std::pow(mE, a) * std::pow(uE, 1.0 - beta * theta) * sig_part * gavg *
                              std::pow(prodf, theta);
        const double h_form = pref * gavg * (s_inf ? 1.0 : std::pow(uE, 1.0 / sp)) * hol_part;
        if (!le(term, w_form) || !le(w_form, h_form)) ++T.cube_step_failures;
        dual.push_back(term);
        wit.push_back(w_form);
        hol.push_back(h_form);
        if (s_inf)
            gmax = std::max(gmax, gavg);
        else
            gsum.push_back(std::pow(gavg, sp) * uE);
    }
    T.dual_pairing = pairwise_sum(dual);
    T.witness_sum = pairwise_sum(wit);
    T.holder_sum = pairwise_sum(hol);

    if (s_inf) {
        T.g_side = gmax;
        T.g_maximal = *std::max_element(g.begin(), g.end());
        T.g_max_bound = 1.0;
    } else {
        T.g_side = std::pow(pairwise_sum(gsum), 1.0 / sp);
        T.g_maximal = lp_norm(s, dyadic_weighted_maximal(lat, g, u), u, sp);
        T.g_max_bound = sx * lp_norm(s, g, u, sp);
    }
    double fprod = 1.0, cprod = 1.0, fnorm = 1.0;
    for (int i = 0; i < m; ++i) {
        const double pi = cfg.p[i], pc = conj_exp(pi);
        const double nrm = lp_norm(s, f[i], sigma[i], pi);
        T.f_side.push_back(std::pow(pairwise_sum(fsum[i]), 1.0 / pi));
        T.f_maximal.push_back(lp_norm(s, dyadic_weighted_maximal(lat, f[i], sigma[i]), sigma[i], pi));
        T.f_max_bound.push_back(pc * nrm);
        fprod *= std::pow(T.f_side.back(), theta);
        cprod *= std::pow(pc, theta);
        fnorm *= std::pow(nrm, theta);
    }
    T.holder_bound = pref * T.g_side * fprod;
    T.c_explicit = std::pow(1.0 / S.delta, a) * sx * cprod;
    T.rhs = T.c_explicit * std::pow(T.w_const, beta * theta) * fnorm;
    return T;
}

namespace {

Vec weights_data(const std::vector<Weight>& w) {
    Vec d;
    for (const Weight& v : w) d.insert(d.end(), v.begin(), v.end());
    return d;
}

Trial trial_holder_eq(const CheckSpec& sp, int n, std::uint64_t seed, int t) {
    auto rng = trial_rng(seed, t);
    Env env(n, trial_masses(rng, n, t));
    const DiscreteSpace& s = env.s;
    const ExponentConfig cfg = sp.config ? *sp.config : random_config(rng, 1 + t % 3, 1.05, 4.0, 0.95, 1.0);
    const int m = cfg.m;
    const double a = trial_spread(sp, t);
    const bool constant = t % 5 == 4;
    std::vector<Weight> om(m);
    for (int i = 0; i < m; ++i)
        om[i] = constant ? Weight(n, random_weight(rng, 1, a)[0]) : random_weight(rng, n, a);
    Weight u(n, 1.0);
    for (int i = 0; i < m; ++i)
        for (int x = 0; x < n; ++x) u[x] *= std::pow(om[i][x], cfg.q / cfg.p[i]);
    Index E;
    for (int x = 0; x < n; ++x)
        if (uniform(rng, 0.0, 1.0) < 0.5) E.push_back(x);
    if (E.empty()) E.push_back(std::uniform_int_distribution<int>(0, n - 1)(rng));

    const double k = cfg.m - cfg.eta;
    const double lhs = s.mass_of(E);
    double rhs = std::pow(weighted_mass(s, E, u), 1.0 / (k * cfg.q));
    for (int i = 0; i < m; ++i)
        rhs *= std::pow(weighted_mass(s, E, dual_weight(om[i], cfg.p[i])), 1.0 / (k * conj_exp(cfg.p[i])));
    Trial tr;
    tr.ratio = lhs / rhs;
    const bool equal_case = constant || a == 0.0;
    if (!le(lhs, rhs)) tr.errors.push_back("mu(E) exceeds the product bound");
    if (equal_case && std::abs(lhs - rhs) > kTol * rhs) tr.errors.push_back("equality fails for constant weights");
    if (!tr.errors.empty()) tr.data = {{"p", cfg.p}, {"q", {cfg.q}}, {"omega", weights_data(om)}, {"E", to_vec(E)}};
    return tr;
}

Trial trial_dyadic_maximal(const CheckSpec& sp, int n, std::uint64_t seed, int t) {
    auto rng = trial_rng(seed, t);
    Env env(n, trial_masses(rng, n, t));
    static const double ps[] = {1.5, 2.0, 4.0};
    const double p = sp.config ? sp.config->p[0] : ps[t % 3];
    const Weight sigma = random_weight(rng, n, trial_spread(sp, t));
    const Vec f = random_function(rng, n);
    const double lhs = lp_norm(env.s, dyadic_weighted_maximal(env.lat, f, sigma), sigma, p);
    const double rhs = conj_exp(p) * lp_norm(env.s, f, sigma, p);
    Trial tr;
    tr.ratio = lhs / rhs;
    tr.constant = conj_exp(p);
    if (!le(lhs, rhs)) {
        tr.errors.push_back("maximal bound with constant p' fails");
        tr.data = {{"p", {p}}, {"sigma", sigma}, {"f", f}, {"masses", env.s.masses()}};
    }
    return tr;
}

Trial trial_astar_chain(const CheckSpec& sp, int n, std::uint64_t seed, int t) {
    auto rng = trial_rng(seed, t);
    Env env(n, trial_masses(rng, n, t));
    ExponentConfig cfg;
    if (sp.config) {
        cfg = *sp.config;
    } else {
        static const double gam[] = {1.0, 2.0};
        cfg = random_config(rng, 1 + t % 2, 1.2, 4.0, 0.9, gam[(t / 2) % 2]);
    }
    cfg.p0 = 1.0;
    const double a = trial_spread(sp, t);
    std::vector<Weight> om(cfg.m);
    Functions f(cfg.m);
    for (int i = 0; i < cfg.m; ++i) {
        om[i] = random_weight(rng, n, a);
        f[i] = random_function(rng, n);
    }
    const SparseFamily S = random_sparse_family(env.lat, rng, 0.3, sp.sparse_delta);
    const AstarChainTerms T = astar_chain_terms(S, f, om, cfg);

    Trial tr;
    tr.ratio = T.lhs / T.rhs;
    tr.constant = T.c_explicit;
    auto need = [&](bool ok, const char* what) {
        if (!ok) tr.errors.push_back(what);
    };
    need(le(T.lhs, T.embed_rhs), "theta embedding");
    need(std::abs(T.dual_pairing - T.embed_rhs) <= 1e-9 * T.embed_rhs, "dual pairing does not reproduce the norm");
    need(le(T.dual_pairing, T.witness_sum), "witness step");
    need(T.cube_step_failures == 0, "per-cube witness or Hoelder step");
    need(le(T.witness_sum, T.holder_sum), "Hoelder step inside cubes");
    need(le(T.holder_sum, T.holder_bound), "Hoelder step over cubes");
    need(le(T.g_side, T.g_maximal) && le(T.g_maximal, T.g_max_bound), "maximal step for the dual function");
    for (int i = 0; i < cfg.m; ++i)
        need(le(T.f_side[i], T.f_maximal[i]) && le(T.f_maximal[i], T.f_max_bound[i]), "maximal step for f_i");
    need(le(T.lhs, T.rhs), "composed bound with the explicit constant");
    tr.max_metrics = {{"beta_theta", T.beta * T.theta}, {"w_const", T.w_const}};
    if (!tr.errors.empty())
        tr.data = {{"p", cfg.p},        {"q", {cfg.q}},       {"gamma", {cfg.gamma}}, {"omega", weights_data(om)},
                   {"f", weights_data(f)}, {"family", family_data(S)}, {"masses", env.s.masses()}};
    return tr;
}

Trial trial_dyadicsum(const CheckSpec& sp, int n, std::uint64_t seed, int t) {
    auto rng = trial_rng(seed, t);
    Env env(n, trial_masses(rng, n, t));
    const DiscreteSpace& s = env.s;
    const DyadicLattice& lat = env.lat;
    static const double ss[] = {1.5, 2.0, 3.0};
    const double se = ss[t % 3];
    const Weight sigma = random_weight(rng, n, trial_spread(sp, t));
    Vec alpha(lat.num_cubes(), 0.0);
    bool any = false;
    for (double& v : alpha)
        if (uniform(rng, 0.0, 1.0) < 0.5) {
            v = std::abs(normal(rng));
            any = any || v > 0.0;
        }
    if (!any) alpha[0] = 1.0;

    Vec phi(n, 0.0);
    for (const Cube& q : lat.cubes())
        for (int x : q.members) phi[x] += alpha[q.id];
    // I(Q) = int_Q phi_Q sigma, accumulated from the leaves up.
    Vec I(lat.num_cubes(), 0.0), sq(lat.num_cubes(), 0.0);
    for (int k = lat.depth(); k >= 0; --k)
        for (int id : lat.generation(k)) {
            const Cube& q = lat.cube(id);
            sq[id] = weighted_mass(s, q.members, sigma);
            I[id] = alpha[id] * sq[id];
            for (int ch : q.children) I[id] += I[ch];
        }
    Vec terms;
    for (const Cube& q : lat.cubes())
        if (alpha[q.id] > 0.0) terms.push_back(alpha[q.id] * std::pow(I[q.id] / sq[q.id], se - 1.0) * sq[q.id]);
    const double rhs = pairwise_sum(terms);
    const double lhs = std::pow(lp_norm(s, phi, sigma, se), se);
    Trial tr;
    tr.ratio = std::pow(lhs / rhs, 1.0 / se);
    tr.ratio_min = tr.ratio;
    if (!std::isfinite(tr.ratio) || !(tr.ratio > 0.0)) tr.errors.push_back("ratio not finite and positive");
    return tr;
}

Trial trial_kolmogorov(const CheckSpec& sp, int n, std::uint64_t seed, int t) {
    auto rng = trial_rng(seed, t);
    Env env(n, trial_masses(rng, n, t));
    const DiscreteSpace& s = env.s;
    const DyadicLattice& lat = env.lat;
    const double a = trial_spread(sp, t);
    const Weight u = random_weight(rng, n, a), v = random_weight(rng, n, a);
    const double s1 = uniform(rng, 0.0, 0.6);
    const double s2 = uniform(rng, 0.0, 0.9 - s1);
    const double se = s1 + s2;
    const bool chain = t % 2 == 1;
    const SparseFamily S = chain ? random_chain(lat, rng) : random_sparse_family(lat, rng, 0.3, sp.sparse_delta);
    int R = lat.generation(0)[0];
    if (!chain && t % 4 == 2) R = S.cubes[std::uniform_int_distribution<int>(0, static_cast<int>(S.cubes.size()) - 1)(rng)];

    auto term = [&](const Cube& q) {
        return std::pow(avg(s, q.members, u, 1.0), s1) * std::pow(avg(s, q.members, v, 1.0), s2) * q.mass;
    };
    Vec terms;
    for (int id : S.cubes)
        if (lat.contains(R, id)) terms.push_back(term(lat.cube(id)));
    const double lhs = pairwise_sum(terms);
    const double rhs = term(lat.cube(R));
    const double K = 1.0 / (S.delta * (1.0 - se));
    Trial tr;
    tr.ratio = lhs / rhs;
    tr.constant = K;
    if (!le(lhs, K * rhs)) tr.errors.push_back("sparse layer-cake bound 1/(delta(1-s)) fails");
    if (chain) {
        const double Kc = 1.0 / (1.0 - std::pow(1.0 - S.delta, 1.0 - se));
        const double Kl = 1.0 / (1.0 - std::pow(S.delta, 1.0 - se));
        if (!le(lhs, Kc * rhs)) tr.errors.push_back("geometric chain bound fails");
        tr.sum_metrics = {{"chain_trials", 1.0}, {"chain_literal_violations", le(lhs, Kl * rhs) ? 0.0 : 1.0}};
        tr.max_metrics = {{"chain_ratio_over_bound", lhs / (Kc * rhs)}};
    }
    if (!tr.errors.empty())
        tr.data = {{"s1_s2", {s1, s2}}, {"u", u}, {"v", v}, {"family", family_data(S)}, {"R", {double(R)}}};
    return tr;
}

Trial trial_testing(const CheckSpec& sp, int n, std::uint64_t seed, int t) {
    auto rng = trial_rng(seed, t);
    Env env(n, trial_masses(rng, n, t));
    const DiscreteSpace& s = env.s;
    const DyadicLattice& lat = env.lat;
    ExponentConfig cfg;
    if (sp.config) {
        cfg = *sp.config;
    } else {
        static const double gam[] = {0.5, 1.0};
        cfg = random_config(rng, 2, 1.2, 4.0, 0.9, gam[(t / 2) % 2]);
    }
    if (cfg.m != 2) throw Error(ErrorKind::config, "m: testing_lemma needs m = 2");
    const double a = trial_spread(sp, t);
    const Weight u = random_weight(rng, n, a);
    const Functions sig{random_weight(rng, n, a), random_weight(rng, n, a)};
    const SparseFamily S = t % 4 == 3 ? random_chain(lat, rng) : random_sparse_family(lat, rng, 0.3, sp.sparse_delta);
    const double q = cfg.q, g = cfg.gamma, eta = cfg.eta;

    double astar = 0.0;
    for (const Cube& c : lat.cubes()) {
        double v = avg(s, c.members, u, 1.0);
        for (int i = 0; i < 2; ++i) v *= std::pow(avg(s, c.members, sig[i], 1.0), q / conj_exp(cfg.p[i]));
        astar = std::max(astar, v);
    }
    ExponentConfig cb = cfg;
    cb.p0 = 1.0;
    const double lhs = lp_norm(s, sparse_basic(S, sig, cb, Exec::serial), u, q);
    Vec terms;
    for (int id : S.cubes) {
        const Cube& c = lat.cube(id);
        double v = std::pow(c.mass, 1.0 + eta * q);
        for (int i = 0; i < 2; ++i) v *= std::pow(avg(s, c.members, sig[i], 1.0), q / cfg.p[i]);
        terms.push_back(v);
    }
    const double rhs = std::pow(astar, 1.0 / q) * std::pow(pairwise_sum(terms), 1.0 / q);
    Trial tr;
    tr.ratio = lhs / rhs;
    tr.constant = 1.0;
    if (!le(lhs, rhs)) {
        tr.errors.push_back("testing bound with constant 1 fails");
        tr.data = {{"p", cfg.p}, {"q", {q}}, {"gamma", {g}}, {"u", u}, {"sigma", weights_data(sig)},
                   {"family", family_data(S)}, {"masses", s.masses()}};
    }
    if (q > g) {
        double worst = 0.0;
        for (int j = 0; j < 2; ++j) {
            const int o = 1 - j;
            const double P = conj_exp(cfg.p[j] / g);
            std::vector<Vec> pts(n);
            Vec rt;
            for (int id : S.cubes) {
                const Cube& c = lat.cube(id);
                const double su = avg(s, c.members, u, 1.0);
                const double so = avg(s, c.members, sig[o], 1.0), sj = avg(s, c.members, sig[j], 1.0);
                const double coef = std::pow(c.mass, eta * g) * std::pow(so, g) * std::pow(sj, g - 1.0) * su;
                for (int x : c.members) pts[x].push_back(coef);
                rt.push_back(std::pow(so, g * P / cfg.p[o]) * std::pow(su, P * (1.0 - g / q)) *
                             std::pow(c.mass, 1.0 + g * eta * P));
            }
            Vec h(n);
            for (int x = 0; x < n; ++x) h[x] = pairwise_sum(pts[x]);
            const double dl = lp_norm(s, h, sig[j], P);
            const double dr = std::pow(astar, g / q) * std::pow(pairwise_sum(rt), 1.0 / P);
            worst = std::max(worst, dl / dr);
        }
        tr.max_metrics = {{"dual_ratio", worst}};
    }
    tr.max_metrics.push_back({"ratio", tr.ratio});
    return tr;
}

Trial trial_m_vs_i(const CheckSpec& sp, int n, std::uint64_t seed, int t) {
    auto rng = trial_rng(seed, t);
    Env env(n, trial_masses(rng, n, t));
    const int m = sp.config ? sp.config->m : 1 + t % 2;
    const double eta = sp.config ? sp.config->eta : uniform(rng, 0.0, 0.9 * m);
    Functions f(m);
    for (auto& v : f) v = random_function(rng, n);
    const Vec M = frac_maximal(env.s, f, eta);
    const Vec I = frac_integral(env.s, f, eta, Exec::serial);
    const double c = std::pow(double(m), m - eta);
    Trial tr;
    tr.constant = c;
    for (int x = 0; x < n; ++x) {
        if (!le(M[x], c * I[x])) {
            tr.errors.push_back("M_eta exceeds m^{m-eta} I_eta at point " + std::to_string(x));
            break;
        }
        if (I[x] > 0.0) tr.ratio = std::max(tr.ratio, M[x] / (c * I[x]));
    }
    if (!tr.errors.empty()) tr.data = {{"eta", {eta}}, {"f", weights_data(f)}, {"masses", env.s.masses()}};
    return tr;
}

Trial trial_bmo(const CheckSpec& sp, int n, std::uint64_t seed, int t) {
    (void)sp;
    auto rng = trial_rng(seed, t);
    Env env(n, trial_masses(rng, n, t));
    const DiscreteSpace& s = env.s;
    const DyadicLattice& lat = env.lat;
    const double r = 1.0 + t % 2;
    Vec f(n), b(n), b2(n), g = random_function(rng, n);
    double walk = 0.0;
    for (int x = 0; x < n; ++x) {
        f[x] = std::exp(2.0 * normal(rng));
        walk += normal(rng);
        b[x] = t % 2 == 0 ? walk : normal(rng);
        b2[x] = normal(rng);
    }
    const double nb = bmo_norm(lat, b).value;
    const auto llogl1 = YoungFunction::llogl(1.0), llogl2 = YoungFunction::llogl(2.0);
    const auto expl1 = YoungFunction::expl(1.0), explr = YoungFunction::expl(1.0 / r);
    const Weight one(n, 1.0);
    double r1 = 0.0, r2 = 0.0, r3 = 0.0, r4 = 0.0;
    Trial tr;
    for (const Cube& q : lat.cubes()) {
        const Index& e = q.members;
        const double lo = avg(s, e, f, 1.0);
        const double on = orlicz_norm(s, e, f, llogl1);
        if (!le(lo, on)) tr.errors.push_back("average exceeds the LlogL norm on cube " + std::to_string(q.id));
        r1 = std::max(r1, on / avg(s, e, f, r + 1.0));
        const double bq = avg_w(s, e, b, one), bq2 = avg_w(s, e, b2, one);
        Vec osc(n, 0.0), oscr(n, 0.0), osc2(n, 0.0), prod(n, 0.0);
        for (int x : e) {
            osc[x] = std::abs(b[x] - bq);
            oscr[x] = std::pow(osc[x], r);
            osc2[x] = std::abs(b2[x] - bq2);
            prod[x] = osc[x] * osc2[x] * g[x];
        }
        if (nb > 0.0) {
            r2 = std::max(r2, avg(s, e, osc, r) / nb);
            r3 = std::max(r3, orlicz_norm(s, e, oscr, explr) / std::pow(nb, r));
        }
        const double den = orlicz_norm(s, e, osc, expl1) * orlicz_norm(s, e, osc2, expl1) * orlicz_norm(s, e, g, llogl2);
        if (den > 0.0) r4 = std::max(r4, avg(s, e, prod, 1.0) / den);
    }
    tr.ratio = std::max({r1, r2, r3, r4});
    tr.max_metrics = {{"llogl_upper", r1}, {"osc_lr", r2}, {"osc_expl", r3}, {"generalized_holder", r4}};
    if (!tr.errors.empty()) tr.data = {{"f", f}, {"masses", s.masses()}};
    return tr;
}

using TrialFn = Trial (*)(const CheckSpec&, int, std::uint64_t, int);

TrialFn dispatch(const std::string& id) {
    static const std::map<std::string, TrialFn> table = {
        {"holder_eq", trial_holder_eq},
        {"dyadic_maximal", trial_dyadic_maximal},
        {"thm_astar_chain", trial_astar_chain},
        {"dyadicsum_equiv", trial_dyadicsum},
        {"kolmogorov_sum", trial_kolmogorov},
        {"testing_lemma", trial_testing},
        {"endpoint_weak", trial_endpoint_weak},
        {"m_vs_i", trial_m_vs_i},
        {"bmo_lemmas", trial_bmo},
        {"caopro_norm_transfer", trial_caopro},
        {"bloom_maximal", trial_bloom_maximal},
        {"bloom_iterated", trial_bloom_iterated},
        {"sharp_maximal_commutator", trial_sharp_commutator},
    };
    return table.at(id);
}

bool power_of_two(int n) { return n >= 2 && (n & (n - 1)) == 0; }

std::vector<Trial> run_trials(TrialFn fn, const CheckSpec& spec, int n, std::uint64_t seed, int trials) {
    std::vector<Trial> out(trials);
    std::vector<std::exception_ptr> err(trials);
#pragma omp parallel for schedule(dynamic, 1)
    for (int t = 0; t < trials; ++t) {
        try {
            out[t] = fn(spec, n, seed, t);
        } catch (...) {
            err[t] = std::current_exception();
        }
    }
    for (auto& e : err)
        if (e) std::rethrow_exception(e);
    return out;
}

void add_metric(std::vector<std::pair<std::string, double>>& mets, const std::string& k, double v, bool sum) {
    for (auto& [name, val] : mets)
        if (name == k) {
            val = sum ? val + v : std::max(val, v);
            return;
        }
    mets.push_back({k, v});
}

double spread_ratio(double a, double b) {
    if (a == b) return 1.0;
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) return kInf;
    return std::max(a / b, b / a);
}

// Growth of `to` over `from`; a shrinking sup only loosens a one-sided bound.
double growth_ratio(double from, double to) {
    if (!(to > from)) return std::isfinite(to) ? 1.0 : kInf;
    if (!(from > 0.0) || !std::isfinite(to)) return kInf;
    return to / from;
}

}  // namespace

CheckReport run_check(const CheckSpec& spec) {
    const CheckInfo& info = find_check(spec.check_id);
    if (spec.mode && *spec.mode != info.mode)
        throw Error(ErrorKind::config,
                    "mode: check " + info.id + " runs in mode " + to_string(info.mode) + ", not " + to_string(*spec.mode));
    if (spec.trials < 0) throw Error(ErrorKind::config, "trials: must be nonnegative");
    if (spec.n != 0 && !power_of_two(spec.n)) throw Error(ErrorKind::config, "n: must be a power of two >= 2");
    for (int g : spec.grids)
        if (!power_of_two(g)) throw Error(ErrorKind::config, "grids: entries must be powers of two >= 2");
    if (!(spec.sparse_delta > 0.0 && spec.sparse_delta <= 1.0))
        throw Error(ErrorKind::config, "sparse_delta: must lie in (0, 1]");
    if (spec.weight_spread && !(*spec.weight_spread >= 0.0))
        throw Error(ErrorKind::config, "weight_spread: must be nonnegative");
    if (spec.config) spec.config->validate();
    if (spec.pair) spec.pair->validate(spec.config ? spec.config->m : static_cast<int>(spec.pair->k.size()));

    const auto start = std::chrono::steady_clock::now();
    const TrialFn fn = dispatch(info.id);
    const int trials = spec.trials > 0 ? spec.trials : info.default_trials;
    const int n = spec.n > 0 ? spec.n : info.default_n;

    struct Battery {
        int n;
        std::uint64_t seed;
        std::string label;
    };
    std::vector<Battery> bats;
    if (info.drift == DriftRule::grids) {
        const std::vector<int> gs = spec.grids.empty() ? std::vector<int>{16, 64} : spec.grids;
        for (int g : gs) bats.push_back({g, spec.seed, "@n" + std::to_string(g)});
    } else if (info.drift == DriftRule::seeds) {
        bats.push_back({n, spec.seed, "@seed1"});
        bats.push_back({n, splitmix64(spec.seed), "@seed2"});
    } else {
        bats.push_back({n, spec.seed, ""});
    }

    CheckReport rep;
    rep.check_id = info.id;
    rep.mode = info.mode;
    auto fail = [&](CheckFailure f) {
        ++rep.failure_count;
        if (static_cast<int>(rep.failures.size()) < std::max(1, spec.max_failures_kept)) rep.failures.push_back(std::move(f));
    };

    if (info.id == "endpoint_weak") {
        double worst = 0.0;
        for (const std::string& msg : young_chain_check(10000, &worst)) fail({-1, 0, spec.seed, msg, {}});
        rep.metrics.push_back({"young_chain_worst_ratio", worst});
    }

    for (const Battery& b : bats) {
        const std::vector<Trial> res = run_trials(fn, spec, b.n, b.seed, trials);
        GridSummary sum{b.n, b.seed, 0.0, kInf};
        const std::string sfx = bats.size() > 1 ? b.label : "";
        for (int t = 0; t < trials; ++t) {
            const Trial& tr = res[t];
            rep.trials += 1;
            sum.worst = std::max(sum.worst, tr.ratio);
            sum.best = std::min(sum.best, std::isnan(tr.ratio_min) ? tr.ratio : tr.ratio_min);
            std::vector<std::string> errs = tr.errors;
            if (info.mode == CheckMode::ratio_monitor && !std::isfinite(tr.ratio)) errs.push_back("monitored ratio is not finite");
            if (!errs.empty()) {
                std::string msg = errs[0];
                for (std::size_t k = 1; k < std::min<std::size_t>(errs.size(), 4); ++k) msg += "; " + errs[k];
                fail({t, b.n, b.seed, msg, tr.data});
            }
            if (!std::isnan(tr.constant))
                rep.explicit_constant = std::isnan(rep.explicit_constant) ? tr.constant : std::max(rep.explicit_constant, tr.constant);
            for (const auto& [k, v] : tr.max_metrics) add_metric(rep.metrics, k + sfx, v, false);
            for (const auto& [k, v] : tr.sum_metrics) add_metric(rep.metrics, k + sfx, v, true);
        }
        rep.worst_ratio = std::max(rep.worst_ratio, sum.worst);
        rep.summaries.push_back(sum);
    }

    if (info.drift == DriftRule::grids || info.drift == DriftRule::seeds) {
        double d = 1.0;
        for (std::size_t i = 0; i < rep.summaries.size(); ++i)
            for (std::size_t j = i + 1; j < rep.summaries.size(); ++j) {
                const GridSummary& lo = rep.summaries[i].n <= rep.summaries[j].n ? rep.summaries[i] : rep.summaries[j];
                const GridSummary& hi = &lo == &rep.summaries[i] ? rep.summaries[j] : rep.summaries[i];
                if (info.two_sided || info.drift == DriftRule::seeds) {
                    d = std::max(d, spread_ratio(lo.worst, hi.worst));
                    if (info.two_sided) d = std::max(d, spread_ratio(lo.best, hi.best));
                } else {
                    d = std::max(d, growth_ratio(lo.worst, hi.worst));
                }
            }
        rep.drift = d;
        if (!(d <= 2.0)) {
            std::ostringstream os;
            os << "drift " << d << " exceeds 2 across "
               << (info.drift == DriftRule::grids ? "grid refinement" : "seeds");
            fail({-1, 0, spec.seed, os.str(), {}});
        }
    }
    if (info.drift == DriftRule::baseline) {
        if (!std::isfinite(rep.worst_ratio)) fail({-1, n, spec.seed, "worst ratio is not finite", {}});
        if (!std::isnan(spec.baseline) && !(rep.worst_ratio <= spec.baseline)) {
            std::ostringstream os;
            os << "worst ratio " << rep.worst_ratio << " exceeds baseline " << spec.baseline;
            fail({-1, n, spec.seed, os.str(), {}});
        }
    }
    rep.pass = rep.failure_count == 0;
    rep.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

}  // namespace sl

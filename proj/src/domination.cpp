#include "sparselab/domination.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace sl {

DominationConfig DominationConfig::defaults(const DiscreteSpace& s, double c_adj) {
    DominationConfig c;
    TruncationConstants t = truncation_constants(s.a0(), c_adj);
    c.jtilde0 = t.jtilde0;
    c.c_jtilde0 = t.c_jtilde0;
    c.j0 = t.j0;
    return c;
}

void DominationConfig::validate() const {
    auto fail = [](const std::string& f, const std::string& w) { throw Error(ErrorKind::config, f + ": " + w); };
    if (!(c_jtilde0 >= 1.0)) fail("c_jtilde0", "dilation must be at least 1");
    if (!(alpha > 0.0)) fail("alpha", "must be positive");
    if (!(target_delta > 0.0 && target_delta <= 1.0)) fail("target_delta", "must lie in (0, 1]");
    if (!(r >= 1.0)) fail("r", "must be at least 1");
    if (j0 <= jtilde0) fail("j0", "must exceed jtilde0");
}

namespace {

double ipow(double x, int e) {
    double r = 1.0;
    for (int i = 0; i < e; ++i) r *= x;
    return r;
}

using Mask = std::vector<char>;

Mask mask_of(int n, const Index& pts) {
    Mask m(n, 0);
    for (int x : pts) m[x] = 1;
    return m;
}

Mask both(const Mask& a, const Mask& b) {
    Mask m(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) m[i] = a[i] && b[i];
    return m;
}

// All t with 0 <= t_i <= k_i on `on`, zero elsewhere, in odometer order.
std::vector<Index> t_range(const Index& k, const Index& on) {
    const int m = static_cast<int>(k.size());
    std::vector<Index> out;
    Index t(m, 0);
    for (;;) {
        out.push_back(t);
        int j = static_cast<int>(on.size()) - 1;
        for (; j >= 0; --j) {
            int i = on[j];
            if (++t[i] <= k[i]) break;
            t[i] = 0;
        }
        if (j < 0) break;
    }
    return out;
}

// T applied to ((b_i(x) - b_i(y))^{beta_i} f_i(y)) over incl^m, at x.
double commutator_at(const FracKernel& K, int x, const Functions& b, const Functions& f, const Index& beta,
                     const Mask* incl) {
    const int m = K.m();
    const int n = K.space().size();
    Functions g(m, Vec(n));
    for (int i = 0; i < m; ++i)
        for (int y = 0; y < n; ++y) g[i][y] = ipow(b[i][x] - b[i][y], beta[i]) * f[i][y];
    return frac_integral_at(K, x, g, incl, nullptr);
}

// Cubes of `lat` strictly inside q (as point sets) that are maximal for `pick`.
template <class Pick>
Index maximal_subcubes(const DyadicLattice& lat, int q, Pick&& pick) {
    Index out;
    std::deque<int> todo;
    const std::size_t size = lat.cube(q).members.size();
    for (int c : lat.cube(q).children) todo.push_back(c);
    while (!todo.empty()) {
        int c = todo.front();
        todo.pop_front();
        const Cube& cc = lat.cube(c);
        if (cc.members.size() < size && pick(c)) {
            out.push_back(c);
            continue;
        }
        for (int d : cc.children) todo.push_back(d);
    }
    std::sort(out.begin(), out.end());
    return out;
}

CoverageAudit audit_coverage(const DiscreteSpace& s, int center, double c_adj, const DominationConfig& cfg) {
    CoverageAudit a;
    a.bound = 2 * cfg.j0 + 1;
    const int n = s.size();
    const Vec& rad = s.radii(center);
    const double r0 = rad.empty() ? 1.0 : rad.front();
    Ball b0 = s.ball(center, r0);
    // annulus index of every point: smallest j with x in 2^{j+1} B0
    Index ann(n, -1);
    int j = 0;
    for (int covered = static_cast<int>(b0.members.size()); covered < n; ++j) {
        Ball outer = s.ball(center, std::ldexp(r0, j + 1));
        for (int x : outer.members)
            if (ann[x] < 0 && s.d(center, x) > std::ldexp(r0, j)) ann[x] = j;
        covered = static_cast<int>(outer.members.size());
        if (j > 4096) return a;
    }
    a.covered = true;
    a.annuli = j;
    a.dilated_contains_b0 = true;
    for (int u = 0; u < j; ++u) {
        const double rr = std::ldexp(r0, u - cfg.jtilde0);
        Mask hit(n, 0);
        int balls = 0;
        for (int x = 0; x < n; ++x) {
            if (ann[x] != u || hit[x]) continue;
            ++balls;
            for (int y : s.ball(x, rr).members) hit[y] = 1;
            std::set<int> met;
            for (int y : s.ball(x, c_adj * rr).members)
                if (ann[y] >= 0) met.insert(ann[y]);
            a.max_annuli_hit = std::max(a.max_annuli_hit, static_cast<int>(met.size()));
            Ball big = s.ball(x, cfg.c_jtilde0 * rr);
            if (!std::includes(big.members.begin(), big.members.end(), b0.members.begin(), b0.members.end()))
                a.dilated_contains_b0 = false;
        }
        a.max_balls = std::max(a.max_balls, balls);
    }
    return a;
}

struct Pending {
    int cube;
    int depth;
    Mask domain;
};

}  // namespace

Vec domination_rhs(const std::vector<SparseFamily>& families, const Functions& b, const Functions& f,
                   const MultiIndexPair& pair, double eta, double r) {
    const int m = static_cast<int>(f.size());
    ExponentConfig cfg;
    cfg.m = m;
    cfg.p = Vec(m, 2.0);
    cfg.eta = eta;
    cfg.r = r;
    const int n = f.empty() ? 0 : static_cast<int>(f[0].size());
    Vec out(n, 0.0);
    const int L = static_cast<int>(pair.tau_ell.size());
    for (const SparseFamily& fam : families) {
        if (fam.cubes.empty()) continue;
        for (int mask = 0; mask < (1 << L); ++mask) {
            Index tau;
            for (int j = 0; j < L; ++j)
                if (mask & (1 << j)) tau.push_back(pair.tau_ell[j]);
            for (const Index& t : t_range(pair.k, tau)) {
                double c = 1.0;
                for (int i : tau) c *= binomial(pair.k[i], t[i]);
                MultiIndexPair p{pair.k, t, tau, pair.tau_ell};
                Vec v = sparse_higher(fam, b, f, p, cfg, Exec::serial);
                for (int x = 0; x < n; ++x) out[x] += c * v[x];
            }
        }
    }
    return out;
}

DominationCertificate cz_construct(const DiscreteSpace& s, const AdjacentSystems& sys, const Functions& f,
                                   const Functions& b, const MultiIndexPair& pair, double eta,
                                   const DominationConfig& cfg) {
    cfg.validate();
    const int m = static_cast<int>(f.size());
    const int n = s.size();
    if (m < 1) throw Error(ErrorKind::invalid_argument, "cz_construct: need at least one function");
    if (static_cast<int>(b.size()) != m) throw Error(ErrorKind::invalid_argument, "cz_construct: need m symbols");
    for (int i = 0; i < m; ++i)
        if (static_cast<int>(f[i].size()) != n || static_cast<int>(b[i].size()) != n)
            throw Error(ErrorKind::invalid_argument, "cz_construct: need one value per point");
    pair.validate(m);
    if (sys.lattices.empty()) throw Error(ErrorKind::invalid_argument, "cz_construct: no dyadic systems");

    DominationCertificate cert;
    const DyadicLattice& lat = sys.lattices.front();
    cert.root_system = 0;
    cert.root_cube = lat.generation(0).front();
    cert.stopping.lattice = &lat;
    cert.families.resize(sys.lattices.size());
    for (std::size_t l = 0; l < sys.lattices.size(); ++l) cert.families[l].lattice = &sys.lattices[l];
    cert.lhs.assign(n, 0.0);
    cert.rhs.assign(n, 0.0);
    cert.residual.assign(n, 0.0);
    cert.coverage = audit_coverage(s, lat.cube(cert.root_cube).center, sys.c_adj, cfg);

    bool all_zero = true;
    for (const Vec& v : f)
        for (double x : v) all_zero = all_zero && x == 0.0;
    if (all_zero) return cert;

    FracKernel K(s, m, eta);
    const double C = cfg.c_jtilde0;
    const double cmu0 = lat.c_mu0();
    const double lam = 1.0 / (2.0 * cmu0);
    Index beta(m, 0);
    for (int i : pair.tau_ell) beta[i] = pair.k[i];
    const std::vector<Index> ts = t_range(pair.k, pair.tau_ell);

    std::map<std::pair<int, int>, Vec> hits;     // (system, R) -> count of stopping cubes per point
    std::map<std::pair<int, int>, Index> owners;  // (system, R) -> stages mapped to it
    std::deque<Pending> todo;
    {
        const Cube& q0 = lat.cube(cert.root_cube);
        if (static_cast<int>(s.ball(q0.center, C * q0.containment_radius).members.size()) != n)
            throw Error(ErrorKind::internal, "root cube ball does not cover the space");
        todo.push_back({cert.root_cube, 0, mask_of(n, s.ball(q0.center, C * q0.containment_radius).members)});
    }
    while (!todo.empty()) {
        Pending pend = std::move(todo.front());
        todo.pop_front();
        const Cube& q = lat.cube(pend.cube);
        StageRecord st;
        st.cube = pend.cube;
        st.depth = pend.depth;
        const Ball bq = s.ball(q.center, q.containment_radius);
        const Ball cbq = s.ball(q.center, C * q.containment_radius);
        const Mask dom = both(pend.domain, mask_of(n, cbq.members));
        const CoverResult cov = adjacent_cover(sys, cbq);
        st.r_system = cov.system;
        st.r_cube = cov.cube;
        const DyadicLattice& rl = sys.lattices[cov.system];
        const Cube& R = rl.cube(cov.cube);
        Vec bR(m);
        for (int i = 0; i < m; ++i) bR[i] = avg_w(s, R.members, b[i], Vec(n, 1.0));
        const double mu_cb = s.mass_of(cbq.members);
        st.ball_factor = std::pow(R.mass / mu_cb, m / cfg.r);

        // per t: restricted functions, average product, scale, pointwise product, local grand maximal
        const std::size_t T = ts.size();
        std::vector<Functions> g(T, Functions(m, Vec(n, 0.0)));
        Vec avgprod(T, 1.0), scale(T);
        std::vector<Vec> prod(T, Vec(n, 1.0)), mloc(T);
        bool any = false;
        for (std::size_t a = 0; a < T; ++a) {
            for (int i = 0; i < m; ++i) {
                for (int y = 0; y < n; ++y)
                    if (dom[y]) g[a][i][y] = ipow(b[i][y] - bR[i], ts[a][i]) * f[i][y];
                avgprod[a] *= avg(s, cbq.members, g[a][i], cfg.r);
                for (int x : q.members) prod[a][x] *= std::abs(g[a][i][x]);
            }
            scale[a] = std::pow(mu_cb, eta / cfg.r) * avgprod[a];
            any = any || scale[a] > 0.0;
            mloc[a] = scale[a] > 0.0 ? local_grand_maximal(K, g[a], C, bq) : Vec(n, 0.0);
        }

        // threshold escalation until mu(E) <= mu(Q) / (4 C_{mu,0})
        double alpha = cfg.alpha;
        Mask E(n, 0);
        double emass = 0.0;
        for (;;) {
            std::fill(E.begin(), E.end(), 0);
            for (int x : q.members)
                for (std::size_t a = 0; a < T && !E[x]; ++a)
                    if (prod[a][x] > alpha * avgprod[a] || mloc[a][x] > alpha * scale[a]) E[x] = 1;
            Index ep;
            for (int x : q.members)
                if (E[x]) ep.push_back(x);
            emass = s.mass_of(ep);
            if (emass <= q.mass / (4.0 * cmu0)) break;
            alpha *= 2.0;
            if (alpha > std::ldexp(cfg.alpha, 20)) {
                std::ostringstream os;
                os << "threshold escalation stuck at cube " << pend.cube << " (gen " << q.gen << ", index " << q.index
                   << ")";
                throw Error(ErrorKind::infeasible, os.str());
            }
        }
        st.alpha = alpha;
        st.e_mass = emass;
        cert.alpha = std::max(cert.alpha, alpha);

        st.stops = maximal_subcubes(lat, pend.cube, [&](int c) {
            Index in;
            for (int x : lat.cube(c).members)
                if (E[x]) in.push_back(x);
            return s.mass_of(in) > lam * lat.cube(c).mass;
        });

        // stage ratio: telescoped piece of each binomial term against its scale
        Index owner(n, -1);
        std::vector<Mask> pdom(st.stops.size());
        for (std::size_t j = 0; j < st.stops.size(); ++j) {
            const Cube& p = lat.cube(st.stops[j]);
            for (int x : p.members) owner[x] = static_cast<int>(j);
            pdom[j] = both(dom, mask_of(n, s.ball(p.center, C * p.containment_radius).members));
        }
        for (std::size_t a = 0; a < T; ++a) {
            if (scale[a] == 0.0) continue;
            for (int x : q.members) {
                double v = frac_integral_at(K, x, g[a], &dom, nullptr);
                if (owner[x] >= 0) v -= frac_integral_at(K, x, g[a], &pdom[owner[x]], nullptr);
                st.rho = std::max(st.rho, std::abs(v) / scale[a]);
            }
        }
        cert.rho = std::max(cert.rho, st.rho);

        if (any) {
            cert.ball_factor = std::max(cert.ball_factor, st.ball_factor);
            Vec& h = hits[{cov.system, cov.cube}];
            if (h.empty()) h.assign(n, 0.0);
            for (int x : q.members) h[x] += 1.0;
            owners[{cov.system, cov.cube}].push_back(static_cast<int>(cert.stages.size()));
        }

        const bool stop_here = cfg.max_depth >= 0 && pend.depth >= cfg.max_depth;
        for (std::size_t j = 0; j < st.stops.size(); ++j) {
            if (stop_here) {
                cert.truncated = true;
                for (int x : lat.cube(st.stops[j]).members)
                    cert.residual[x] += std::abs(commutator_at(K, x, b, f, beta, &pdom[j]));
            } else {
                todo.push_back({st.stops[j], pend.depth + 1, pdom[j]});
            }
        }
        cert.stages.push_back(std::move(st));
    }

    // stopping family with witnesses Q minus its stopping cubes
    for (const StageRecord& st : cert.stages) {
        Mask out(n, 0);
        for (int p : st.stops)
            for (int x : lat.cube(p).members) out[x] = 1;
        Index w;
        for (int x : lat.cube(st.cube).members)
            if (!out[x]) w.push_back(x);
        cert.stopping.cubes.push_back(st.cube);
        cert.stopping.witnesses.push_back(std::move(w));
    }
    cert.stopping.delta = declared_delta(lat, cert.stopping.cubes, cert.stopping.witnesses);

    // R_Q inherits the stopping witnesses of every Q mapped to it; these are pairwise disjoint
    for (const auto& [key, h] : hits) {
        for (double c : h) cert.multiplicity = std::max(cert.multiplicity, c);
        Index w;
        for (int st : owners[key]) {
            const Index& e = cert.stopping.witnesses[st];
            w.insert(w.end(), e.begin(), e.end());
        }
        std::sort(w.begin(), w.end());
        SparseFamily& fam = cert.families[key.first];
        fam.cubes.push_back(key.second);
        fam.witnesses.push_back(std::move(w));
    }
    for (std::size_t l = 0; l < sys.lattices.size(); ++l)
        if (!cert.families[l].cubes.empty())
            cert.families[l].delta =
                declared_delta(sys.lattices[l], cert.families[l].cubes, cert.families[l].witnesses);
    cert.constant = cert.rho * cert.ball_factor * cert.multiplicity;

    cert.lhs = commutator_general(K, b, f, pair);
    for (double& v : cert.lhs) v = std::abs(v);
    cert.rhs = domination_rhs(cert.families, b, f, pair, eta, cfg.r);
    for (int x = 0; x < n; ++x) {
        const double l = std::max(0.0, cert.lhs[x] - cert.residual[x]);
        if (cert.rhs[x] > 0.0)
            cert.max_ratio = std::max(cert.max_ratio, l / cert.rhs[x]);
        else if (l > 0.0)
            cert.max_ratio = std::numeric_limits<double>::infinity();
    }
    return cert;
}

DominationReport verify_domination(const DominationCertificate& cert, const Vec& lhs, const Vec& rhs) {
    if (lhs.size() != rhs.size()) throw Error(ErrorKind::invalid_argument, "verify_domination: size mismatch");
    DominationReport rep;
    const std::size_t n = lhs.size();
    rep.ratio.assign(n, 0.0);
    for (std::size_t x = 0; x < n; ++x) {
        const double res = x < cert.residual.size() ? cert.residual[x] : 0.0;
        const double l = std::max(0.0, std::abs(lhs[x]) - res);
        if (rhs[x] > 0.0) {
            rep.ratio[x] = l / rhs[x];
            rep.max_ratio = std::max(rep.max_ratio, rep.ratio[x]);
            if (l > cert.constant * rhs[x] * (1.0 + 1e-12)) {
                rep.pass = false;
                rep.failures.push_back(static_cast<int>(x));
            }
        } else if (l > 0.0) {
            rep.ratio[x] = std::numeric_limits<double>::infinity();
            rep.max_ratio = rep.ratio[x];
            rep.pass = false;
            rep.failures.push_back(static_cast<int>(x));
        }
    }
    return rep;
}

AugmentResult augment_sparse(const SparseFamily& family, const Vec& b) {
    const double gamma = family.delta;
    if (!(gamma > 0.0 && gamma < 1.0)) throw Error(ErrorKind::invalid_argument, "augment_sparse: need 0 < delta < 1");
    const DyadicLattice& lat = *family.lattice;
    const DiscreteSpace& s = lat.space();
    const int n = s.size();
    if (static_cast<int>(b.size()) != n) throw Error(ErrorKind::invalid_argument, "augment_sparse: need one value per point");
    const double K = 2.0 * (gamma + 1.0) / gamma;
    const Vec one(n, 1.0);
    auto osc = [&](const Index& e, double bq) {
        Vec h(n, 0.0);
        for (int x : e) h[x] = b[x] - bq;
        return avg(s, e, h, 1.0);
    };

    std::set<int> in(family.cubes.begin(), family.cubes.end());
    std::deque<int> todo(in.begin(), in.end());
    std::set<int> done;
    while (!todo.empty()) {
        int qid = todo.front();
        todo.pop_front();
        if (!done.insert(qid).second) continue;
        const Cube& q = lat.cube(qid);
        const double bq = avg_w(s, q.members, b, one);
        const double o = osc(q.members, bq);
        if (o == 0.0) continue;
        Index stops = maximal_subcubes(lat, qid, [&](int c) { return osc(lat.cube(c).members, bq) > K * o; });
        for (int p : stops) {
            // b is constant on p: no oscillation term, and the parent step already bounds |b - b_Q| there
            if (osc(lat.cube(p).members, avg_w(s, lat.cube(p).members, b, one)) == 0.0) continue;
            in.insert(p);
            if (!done.count(p)) todo.push_back(p);
        }
    }

    AugmentResult res;
    res.family = select_witnesses(lat, Index(in.begin(), in.end()), gamma / (2.0 * (gamma + 1.0)));
    const Index& cubes = res.family.cubes;
    Vec oscs(cubes.size()), means(cubes.size());
    res.vacuous = true;
    for (std::size_t i = 0; i < cubes.size(); ++i) {
        const Index& e = lat.cube(cubes[i]).members;
        means[i] = avg_w(s, e, b, one);
        oscs[i] = osc(e, means[i]);
        res.vacuous = res.vacuous && oscs[i] == 0.0;
    }
    res.cube_constant.assign(cubes.size(), 0.0);
    for (std::size_t i = 0; i < cubes.size(); ++i) {
        const Index& qe = lat.cube(cubes[i]).members;
        Vec den(n, 0.0);
        for (std::size_t j = 0; j < cubes.size(); ++j) {
            const Index& re = lat.cube(cubes[j]).members;
            if (!std::includes(qe.begin(), qe.end(), re.begin(), re.end())) continue;
            for (int x : re) den[x] += oscs[j];
        }
        for (int x : qe) {
            const double num = std::abs(b[x] - means[i]);
            if (num == 0.0) continue;
            const double c = den[x] > 0.0 ? num / den[x] : std::numeric_limits<double>::infinity();
            res.cube_constant[i] = std::max(res.cube_constant[i], c);
        }
        res.constant = std::max(res.constant, res.cube_constant[i]);
    }
    return res;
}

}  // namespace sl

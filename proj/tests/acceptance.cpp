// Acceptance run: one pass/fail line per criterion with its runtime limit.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "sparselab/domination.hpp"
#include "sparselab/verify.hpp"

using namespace sl;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;
    void fail(const std::string& why) {
        if (ok) detail = why;
        ok = false;
    }
};

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)}); }

std::string num(double v) {
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

// Criterion 1: every generation partitions X, children nest in parents, masses add up exactly.
Outcome lattice_axioms() {
    Outcome o;
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> w(1, 8);
    int lattices = 0;
    for (int n = 2; n <= 256; n *= 2)
        for (int variant = 0; variant < 2; ++variant) {
            Vec masses(n, 1.0);
            if (variant)
                for (double& m : masses) m = w(rng);  // integers: every partial sum is exact
            const auto s = DiscreteSpace::grid(n, masses);
            const auto lat = build_standard_lattice(s);
            ++lattices;
            double total = 0;
            for (double m : masses) total += m;
            for (int k = 0; k <= lat.depth(); ++k) {
                std::vector<int> hits(n, 0);
                double sum = 0;
                for (int id : lat.generation(k)) {
                    const Cube& q = lat.cube(id);
                    double mq = 0;
                    for (int x : q.members) {
                        ++hits[x];
                        mq += s.mass(x);
                    }
                    if (mq != q.mass) o.fail("cube mass differs from its members at n=" + std::to_string(n));
                    sum += q.mass;
                    if (k > 0) {
                        const Index& p = lat.cube(q.parent).members;
                        if (!std::includes(p.begin(), p.end(), q.members.begin(), q.members.end()))
                            o.fail("cube outside its parent at n=" + std::to_string(n));
                    }
                }
                for (int x = 0; x < n; ++x)
                    if (hits[x] != 1) o.fail("generation " + std::to_string(k) + " is not a partition at n=" + std::to_string(n));
                if (sum != total) o.fail("generation masses do not add up at n=" + std::to_string(n));
            }
            if (!lat.check().empty()) o.fail("library check: " + lat.check().front());
        }
    if (o.ok) o.detail = std::to_string(lattices) + " lattices, n = 2..256";
    return o;
}

// Disjoint witnesses inside their cubes with mu(E_Q) >= delta mu(Q), recomputed here.
bool sparse_by_hand(const SparseFamily& S) {
    const DiscreteSpace& s = S.lattice->space();
    std::vector<int> used(s.size(), 0);
    for (std::size_t i = 0; i < S.cubes.size(); ++i) {
        const Cube& q = S.lattice->cube(S.cubes[i]);
        double me = 0;
        for (int x : S.witnesses[i]) {
            if (!std::binary_search(q.members.begin(), q.members.end(), x) || used[x]++) return false;
            me += s.mass(x);
        }
        if (!(me >= S.delta * q.mass * (1 - 1e-12)) || !(S.delta > 0)) return false;
    }
    return true;
}

// Criterion 2: families from the stopping-time construction and from augmentation.
Outcome sparseness() {
    Outcome o;
    const int n = 32;
    int families = 0, runs = 0;
    for (int seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(1000 + seed);
        const auto s = DiscreteSpace::grid(n, seed % 2 ? oracle::random_positive(rng, n, 0.5) : Vec(n, 1.0));
        const auto sys = build_shifted_adjacent(s, 2 + seed % 2);
        auto cfg = DominationConfig::defaults(s, sys.c_adj);
        const double dil[] = {0.0, 1.5, 2.0, 3.0};
        if (dil[seed % 4] > 0) cfg.c_jtilde0 = dil[seed % 4];
        const int m = 1 + seed % 2;
        Functions f, b;
        for (int i = 0; i < m; ++i) {
            f.push_back(oracle::random_abs_normal(rng, n));
            b.push_back(oracle::random_signed(rng, n));
        }
        const MultiIndexPair pr = m == 1 ? MultiIndexPair{{1}, {0}, {}, {0}} : MultiIndexPair{{1, 0}, {0, 0}, {}, {0}};
        const auto cert = cz_construct(s, sys, f, b, pr, 0.5 * m, cfg);
        std::vector<const SparseFamily*> all{&cert.stopping};
        for (const auto& fam : cert.families) all.push_back(&fam);
        for (const SparseFamily* fam : all) {
            if (fam->cubes.empty()) continue;
            ++families;
            if (!verify_sparse(*fam).pass || !sparse_by_hand(*fam)) o.fail("construction family fails at seed " + std::to_string(seed));
        }

        const auto& lat = sys.lattices[0];
        auto S = random_sparse_family(lat, rng, 0.3, 0.5);
        const auto aug = augment_sparse(S, b[0]);
        ++families;
        if (!verify_sparse(aug.family).pass || !sparse_by_hand(aug.family)) o.fail("augmented family fails at seed " + std::to_string(seed));
        for (int id : S.cubes)
            if (!std::binary_search(aug.family.cubes.begin(), aug.family.cubes.end(), id)) o.fail("augmentation dropped an input cube");
        ++runs;
    }
    if (o.ok) o.detail = std::to_string(runs) + " seeds, " + std::to_string(families) + " families";
    return o;
}

// Criterion 3: the registry battery and an independent brute-force pass.
Outcome dyadic_maximal() {
    Outcome o;
    CheckSpec sp;
    sp.check_id = "dyadic_maximal";
    sp.n = 32;
    sp.trials = 500;
    sp.seed = 1;
    const auto rep = run_check(sp);
    if (!rep.pass) o.fail(std::to_string(rep.failure_count) + " registry failures");
    const int n = 32;
    const double ps[] = {1.5, 2.0, 4.0};
    double worst = 0;
    for (int t = 0; t < 500; ++t) {
        std::mt19937_64 rng(77 + t);
        const auto s = DiscreteSpace::grid(n, t % 2 ? oracle::random_positive(rng, n, 0.5) : Vec(n, 1.0));
        const double p = ps[t % 3];
        const Vec sigma = oracle::random_positive(rng, n, 1.0 + t % 3);
        const Vec f = oracle::random_abs_normal(rng, n);
        const Vec M = oracle::dyadic_weighted_maximal(s, f, sigma);
        double l = 0, r = 0;
        for (int x = 0; x < n; ++x) {
            l += std::pow(M[x], p) * sigma[x] * s.mass(x);
            r += std::pow(f[x], p) * sigma[x] * s.mass(x);
        }
        const double lhs = std::pow(l, 1 / p), rhs = p / (p - 1) * std::pow(r, 1 / p);
        worst = std::max(worst, lhs / rhs);
        if (lhs > rhs * (1 + 1e-10)) o.fail("brute-force instance " + std::to_string(t) + " exceeds p'");
    }
    if (o.ok) o.detail = "500 + 500 triples, worst ratio " + num(std::max(worst, rep.worst_ratio));
    return o;
}

// Criterion 4: Hoelder step, with equality for constant weights.
Outcome holder() {
    Outcome o;
    CheckSpec sp;
    sp.check_id = "holder_eq";
    sp.trials = 500;
    const auto rep = run_check(sp);
    if (!rep.pass) o.fail(std::to_string(rep.failure_count) + " failures on random weights");
    sp.weight_spread = 0.0;
    const auto eq = run_check(sp);
    if (!eq.pass) o.fail("constant weights: " + std::to_string(eq.failure_count) + " failures");
    if (!(std::abs(eq.summaries[0].worst - 1) <= 1e-10 && std::abs(eq.summaries[0].best - 1) <= 1e-10))
        o.fail("constant weights do not give equality");
    if (o.ok) o.detail = "500 random + 500 constant-weight instances, worst ratio " + num(rep.worst_ratio);
    return o;
}

// Three nested cubes on four points, every term computed by hand.
bool astar_gate(std::string* why) {
    const auto s = DiscreteSpace::grid_uniform(4);
    const auto lat = build_standard_lattice(s);
    int child = -1, leaf = -1;
    for (int id : lat.generation(1))
        if (lat.cube(id).members.front() == 0) child = id;
    for (int id : lat.generation(2))
        if (lat.cube(id).members.front() == 0) leaf = id;
    SparseFamily S{&lat, {lat.generation(0)[0], child, leaf}, {{2, 3}, {1}, {0}}, 0.5};
    const auto cfg = ExponentConfig::make({2.0, 2.0}, 2.0, 1.0);
    const std::vector<Weight> om{{1.0, 2.0, 0.5, 4.0}, {3.0, 1.0, 2.0, 0.25}};
    const Functions f{{1.0, 2.0, 3.0, 0.5}, {0.5, 1.0, 2.0, 1.0}};
    const auto T = astar_chain_terms(S, f, om, cfg);
    // p = q = 2, eta = 1/2: u = w1 w2, sigma_i = 1/w_i, theta = beta = 1
    const std::vector<Index> cubes{{0, 1, 2, 3}, {0, 1}, {0}};
    Vec A(4, 0.0);
    for (const Index& q : cubes) {
        double a1 = 0, a2 = 0;
        for (int x : q) {
            a1 += f[0][x] / om[0][x];
            a2 += f[1][x] / om[1][x];
        }
        const double len = q.size();
        for (int x : q) A[x] += std::sqrt(len) * (a1 / len) * (a2 / len);
    }
    double lhs = 0, star = 0, n1 = 0, n2 = 0;
    for (int x = 0; x < 4; ++x) {
        lhs += A[x] * A[x] * om[0][x] * om[1][x];
        n1 += f[0][x] * f[0][x] / om[0][x];
        n2 += f[1][x] * f[1][x] / om[1][x];
    }
    lhs = std::sqrt(lhs);
    for (const Index& q : oracle::dyadic_intervals(4)) {
        double u = 0, s1 = 0, s2 = 0;
        for (int x : q) {
            u += om[0][x] * om[1][x];
            s1 += 1 / om[0][x];
            s2 += 1 / om[1][x];
        }
        const double len = q.size();
        star = std::max(star, (u / len) * (s1 / len) * (s2 / len));
    }
    // (1/delta)^{(m - eta) theta (beta q - 1)} (q / theta) prod p_i'^theta = 2^{3/2} * 2 * 2 * 2
    const double c = 8 * std::pow(2.0, 1.5);
    const double rhs = c * star * std::sqrt(n1) * std::sqrt(n2);
    if (!close(T.c_explicit, c, 1e-12)) *why = "gate: explicit constant";
    else if (!close(T.lhs, lhs, 1e-12)) *why = "gate: left side";
    else if (!close(T.w_const, star, 1e-12)) *why = "gate: weight constant";
    else if (!close(T.rhs, rhs, 1e-12)) *why = "gate: right side";
    else if (!close(T.dual_pairing, lhs, 1e-9)) *why = "gate: dual pairing";
    else if (T.cube_step_failures != 0 || !(lhs <= rhs)) *why = "gate: chain step";
    else return true;
    return false;
}

// Criterion 5: composed A* bound over four exponent settings.
Outcome astar_chain() {
    Outcome o;
    std::string why;
    if (!astar_gate(&why)) {
        o.fail(why);
        return o;
    }
    struct Setting {
        const char* name;
        ExponentConfig cfg;
    };
    const Setting settings[] = {{"(1,0)", ExponentConfig::make({2.0}, 2.0)},
                                {"(2,0)", ExponentConfig::make({4.0, 4.0}, 2.0)},
                                {"(2,1/4)", ExponentConfig::make({2.0, 4.0}, 2.0)},
                                {"(2,1/2)", ExponentConfig::make({2.0, 2.0}, 2.0)}};
    double worst = 0;
    for (const auto& st : settings) {
        CheckSpec sp;
        sp.check_id = "thm_astar_chain";
        sp.config = st.cfg;
        sp.n = 16;
        sp.trials = 200;
        const auto rep = run_check(sp);
        worst = std::max(worst, rep.worst_ratio);
        if (!rep.pass) o.fail(std::string("(m,eta) = ") + st.name + ": " + std::to_string(rep.failure_count) + " failures");
    }
    if (o.ok) o.detail = "hand gate ok, 4 x 200 trials, worst ratio " + num(worst);
    return o;
}

// Criterion 6: certificates against a brute-force commutator.
Outcome domination() {
    Outcome o;
    const int n = 16;
    const std::vector<Index> ks1{{0}, {1}};
    const std::vector<Index> ks2{{0, 0}, {1, 1}, {2, 1}};
    int certs = 0;
    double worst = 0;
    for (int seed = 0; seed < 50; ++seed)
        for (int m = 1; m <= 2; ++m)
            for (const Index& k : m == 1 ? ks1 : ks2) {
                std::mt19937_64 rng(5000 + 97 * seed + 7 * m + k[0]);
                const auto s = DiscreteSpace::grid(n, seed % 2 ? oracle::random_positive(rng, n, 0.5) : Vec(n, 1.0));
                const auto sys = build_shifted_adjacent(s, 3);
                auto cfg = DominationConfig::defaults(s, sys.c_adj);
                const double dil[] = {0.0, 1.5, 2.0};
                if (dil[seed % 3] > 0) cfg.c_jtilde0 = dil[seed % 3];
                Functions f, b;
                for (int i = 0; i < m; ++i) {
                    f.push_back(oracle::random_abs_normal(rng, n));
                    b.push_back(oracle::random_signed(rng, n));
                }
                Index tau_ell;
                for (int i = 0; i < m; ++i)
                    if (k[i] > 0) tau_ell.push_back(i);
                const MultiIndexPair pr{k, Index(m, 0), {}, tau_ell};
                const double eta = 0.5 * m;
                const auto cert = cz_construct(s, sys, f, b, pr, eta, cfg);
                Vec lhs = oracle::commutator(s, b, f, k, eta);
                for (int x = 0; x < n; ++x) {
                    lhs[x] = std::abs(lhs[x]);
                    if (!close(lhs[x], cert.lhs[x], 1e-10)) o.fail("commutator differs from brute force");
                }
                const auto rep = verify_domination(cert, lhs, cert.rhs);
                ++certs;
                worst = std::max(worst, rep.max_ratio / cert.constant);
                if (!rep.pass) o.fail("seed " + std::to_string(seed) + ", m = " + std::to_string(m) + ": lhs exceeds C rhs");
            }
    if (o.ok) o.detail = std::to_string(certs) + " certificates, worst lhs/(C rhs) " + num(worst);
    return o;
}

// Criterion 7: exact structural identities.
Outcome identities() {
    Outcome o;
    double err = 0;
    auto track = [&](double a, double b, int line = __builtin_LINE()) {
        const double e = std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b)));
        err = std::max(err, e);
        if (e > 1e-12) o.fail("identity off by " + num(e) + " at line " + std::to_string(line));
    };
    for (int seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(9000 + seed);
        const int n = 16;
        const auto s = DiscreteSpace::grid(n, oracle::random_positive(rng, n, 0.5));
        const auto lat = build_standard_lattice(s);
        const auto S = random_sparse_family(lat, rng, 0.4, 0.5);
        const Functions f{oracle::random_abs_normal(rng, n), oracle::random_abs_normal(rng, n)};
        const Functions b{oracle::random_signed(rng, n), oracle::random_signed(rng, n)};
        auto cfg = ExponentConfig::make({2.0, 3.0}, 1.0);

        // higher with k = t = 1 -> first order with oscillation inside; empty sets -> basic
        const Vec hi = sparse_higher(S, b, f, {{1, 1}, {1, 1}, {0, 1}, {0, 1}}, cfg, Exec::serial);
        const Vec fo = sparse_first_order(S, b, f, {}, {0, 1}, cfg, Exec::serial);
        const Vec fo0 = sparse_first_order(S, b, f, {}, {}, cfg, Exec::serial);
        const Vec hi0 = sparse_higher(S, b, f, {{0, 0}, {0, 0}, {}, {}}, cfg, Exec::serial);
        const Vec basic = sparse_basic(S, f, cfg, Exec::serial);
        for (int x = 0; x < n; ++x) {
            track(hi[x], fo[x]);
            track(fo0[x], basic[x]);
            track(hi0[x], basic[x]);
        }

        // A* against A: [u, w]_{A*} = [u^{1/q}, w^{1/p}]_{A}^q
        const Vec u = oracle::random_positive(rng, n);
        const std::vector<Weight> w{oracle::random_positive(rng, n), oracle::random_positive(rng, n)};
        auto wc = ExponentConfig::make({1.5 + seed % 3, 2.5}, 1.0 + 0.2 * (seed % 4));
        const double star = weight_constant(WeightKind::A_pq_star, lat, {u, w}, wc).value;
        Vec uq(n);
        std::vector<Weight> wp(2, Vec(n));
        for (int x = 0; x < n; ++x) {
            uq[x] = std::pow(u[x], 1 / wc.q);
            for (int i = 0; i < 2; ++i) wp[i][x] = std::pow(w[i][x], 1 / wc.p[i]);
        }
        track(star, std::pow(weight_constant(WeightKind::A_pq, lat, {uq, wp}, wc).value, wc.q));

        // int A_S(g) h = int g A_S(h)
        const Vec g = oracle::random_signed(rng, n), h = oracle::random_signed(rng, n);
        const Vec Ag = sparse_average(S, g), Ah = sparse_average(S, h);
        double l = 0, r = 0;
        for (int x = 0; x < n; ++x) {
            l += Ag[x] * h[x] * s.mass(x);
            r += g[x] * Ah[x] * s.mass(x);
        }
        track(l, r);

        // constant symbols annihilate commutators
        const Functions bc{Vec(n, 1.5 + seed), Vec(n, -2.0)};
        for (double v : commutator_general(s, bc, f, {{1, 1}, {0, 0}, {}, {0, 1}}, 1.0, Exec::serial)) track(v, 0.0);
        for (double v : sparse_first_order(S, bc, f, {0, 1}, {0, 1}, cfg, Exec::serial)) track(v, 0.0);
    }
    if (o.ok) o.detail = "100 seeds, max relative error " + num(err);
    return o;
}

// Criterion 8: Young-function chain and the endpoint monitor.
Outcome endpoint() {
    Outcome o;
    auto phi = [](double t, double r) { return t * std::pow(1 + (t > 1 ? std::log(t) : 0.0), r); };
    double worst = 0;
    for (int r = 1; r <= 3; ++r)
        for (int i = 0; i < 10000; ++i) {
            const double t = std::pow(10.0, -6 + 12.0 * i / 9999);
            const double lhs = phi(phi(t, r), r), rhs = std::pow(r + 1.0, r) * phi(t, 2 * r);
            worst = std::max(worst, lhs / rhs);
            if (lhs > rhs * (1 + 1e-12)) o.fail("chain fails at r = " + std::to_string(r) + ", t = " + num(t));
        }
    CheckSpec sp;
    sp.check_id = "endpoint_weak";
    sp.n = 32;
    const auto rep = run_check(sp);
    if (!rep.pass) o.fail("endpoint monitor: " + (rep.failures.empty() ? std::string("failed") : rep.failures[0].message));
    if (!std::isfinite(rep.worst_ratio)) o.fail("endpoint ratio not finite");
    if (o.ok) o.detail = "3 x 10^4 grid points, chain ratio " + num(worst) + ", seed drift " + num(rep.drift);
    return o;
}

// Criterion 9: ratio monitors, reruns and refinement drift.
Outcome monitors() {
    Outcome o;
    std::ostringstream os;
    for (const char* id : {"dyadicsum_equiv", "kolmogorov_sum", "bloom_maximal", "bloom_iterated", "sharp_maximal_commutator"}) {
        CheckSpec sp;
        sp.check_id = id;
        sp.seed = 3;
        const auto a = run_check(sp);
        const auto b = run_check(sp);
        if (!a.pass) o.fail(std::string(id) + ": " + (a.failures.empty() ? std::string("failed") : a.failures[0].message));
        if (!std::isfinite(a.worst_ratio)) o.fail(std::string(id) + ": worst ratio not finite");
        if (a.drift > 2.0) o.fail(std::string(id) + ": drift " + num(a.drift));
        bool same = a.worst_ratio == b.worst_ratio && a.summaries.size() == b.summaries.size();
        for (std::size_t i = 0; same && i < a.summaries.size(); ++i)
            same = a.summaries[i].worst == b.summaries[i].worst && a.summaries[i].best == b.summaries[i].best;
        if (!same) o.fail(std::string(id) + ": rerun differs");
        os << id << " " << num(a.worst_ratio) << "/" << num(a.drift) << "  ";
    }
    if (o.ok) o.detail = "worst/drift: " + os.str();
    return o;
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double limit_s;
        std::function<Outcome()> run;
    };
    const Criterion all[] = {
        {1, "lattice axioms", 5, lattice_axioms},
        {2, "sparseness of emitted families", 60, sparseness},
        {3, "dyadic maximal bound", 10, dyadic_maximal},
        {4, "Hoelder witness step", 10, holder},
        {5, "A* proof chain", 120, astar_chain},
        {6, "pointwise domination", 300, domination},
        {7, "structural identities", 10, identities},
        {8, "endpoint Young chain", 30, endpoint},
        {9, "ratio monitors", 600, monitors},
    };
    int failed = 0;
    for (const auto& c : all) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.fail(std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs > c.limit_s) o.fail("took " + num(secs) + " s");
        if (!o.ok) ++failed;
        std::printf("criterion %d: %s  %-32s %7.2f s (limit %g s)  %s\n", c.id, o.ok ? "PASS" : "FAIL", c.name, secs,
                    c.limit_s, o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}

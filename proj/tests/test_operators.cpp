#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <set>

#include "oracles.hpp"
#include "sparselab/operators.hpp"

using namespace sl;

namespace {

SparseFamily family(const DyadicLattice& lat, Index ids) { return SparseFamily{&lat, std::move(ids), {}, 0.0}; }

SparseFamily all_cubes(const DyadicLattice& lat) {
    Index ids(lat.num_cubes());
    for (int i = 0; i < lat.num_cubes(); ++i) ids[i] = i;
    return family(lat, ids);
}

// Random subfamily; every cube kept with probability 1/2, at least one cube.
SparseFamily random_family(const DyadicLattice& lat, std::mt19937_64& rng) {
    Index ids;
    for (int i = 0; i < lat.num_cubes(); ++i)
        if (rng() & 1) ids.push_back(i);
    if (ids.empty()) ids.push_back(0);
    return family(lat, ids);
}

double mu(const DiscreteSpace& s, const Index& e) { return oracle::mass(s, e); }

// (avg_E |g|^r)^{1/r} by a plain loop
double ravg(const DiscreteSpace& s, const Index& e, const std::function<double(int)>& g, double r) {
    double a = 0;
    for (int x : e) a += std::pow(std::abs(g(x)), r) * s.mass(x);
    return std::pow(a / mu(s, e), 1.0 / r);
}

double mean(const DiscreteSpace& s, const Index& e, const Vec& b) {
    double a = 0;
    for (int x : e) a += b[x] * s.mass(x);
    return a / mu(s, e);
}

bool member(const Index& e, int x) { return std::find(e.begin(), e.end(), x) != e.end(); }

// Direct per-point re-summation of the basic sparse operator.
Vec basic_oracle(const SparseFamily& S, const Functions& f, double eta, double p0, double gamma) {
    const DiscreteSpace& s = S.lattice->space();
    Vec out(s.size());
    for (int x = 0; x < s.size(); ++x) {
        double acc = 0;
        for (int id : S.cubes) {
            const Index& e = S.lattice->cube(id).members;
            if (!member(e, x)) continue;
            double v = std::pow(mu(s, e), eta);
            for (const Vec& fi : f) v *= ravg(s, e, [&](int y) { return fi[y]; }, p0);
            acc += std::pow(v, gamma);
        }
        out[x] = std::pow(acc, 1.0 / gamma);
    }
    return out;
}

Vec first_order_oracle(const SparseFamily& S, const Functions& b, const Functions& f, const std::set<int>& tau,
                       const std::set<int>& tau_ell, double eta, double r) {
    const DiscreteSpace& s = S.lattice->space();
    const int m = static_cast<int>(f.size());
    Vec out(s.size(), 0.0);
    for (int x = 0; x < s.size(); ++x)
        for (int id : S.cubes) {
            const Index& e = S.lattice->cube(id).members;
            if (!member(e, x)) continue;
            double v = std::pow(mu(s, e), eta / r);
            for (int i = 0; i < m; ++i) {
                const double bq = mean(s, e, b[i]);
                if (tau.count(i))
                    v *= std::abs(b[i][x] - bq) * ravg(s, e, [&](int y) { return f[i][y]; }, r);
                else if (tau_ell.count(i))
                    v *= ravg(s, e, [&](int y) { return (b[i][y] - bq) * f[i][y]; }, r);
                else
                    v *= ravg(s, e, [&](int y) { return f[i][y]; }, r);
            }
            out[x] += v;
        }
    return out;
}

Vec higher_oracle(const SparseFamily& S, const Functions& b, const Functions& f, const Index& k, const Index& t,
                  const std::set<int>& tau, double eta, double r) {
    const DiscreteSpace& s = S.lattice->space();
    const int m = static_cast<int>(f.size());
    Vec out(s.size(), 0.0);
    for (int x = 0; x < s.size(); ++x)
        for (int id : S.cubes) {
            const Index& e = S.lattice->cube(id).members;
            if (!member(e, x)) continue;
            double v = std::pow(mu(s, e), eta / r);
            for (int i = 0; i < m; ++i) {
                const double bq = mean(s, e, b[i]);
                if (tau.count(i))
                    v *= std::pow(std::abs(b[i][x] - bq), k[i] - t[i]) *
                         ravg(s, e, [&](int y) { return f[i][y] * std::pow(b[i][y] - bq, t[i]); }, r);
                else
                    v *= ravg(s, e, [&](int y) { return f[i][y]; }, r);
            }
            out[x] += v;
        }
    return out;
}

double llogl_phi(double t, double r) { return t * std::pow(1.0 + (t > 1 ? std::log(t) : 0.0), r); }

// Every closed ball: centers times all realized distances.
std::vector<Index> all_balls(const DiscreteSpace& s) {
    std::vector<Index> out;
    for (int z = 0; z < s.size(); ++z)
        for (int y = 0; y < s.size(); ++y) out.push_back(oracle::ball(s, z, s.d(z, y)));
    return out;
}

Vec frac_max_oracle(const DiscreteSpace& s, const Functions& f, double eta) {
    Vec out(s.size(), 0.0);
    for (const Index& B : all_balls(s)) {
        double v = std::pow(mu(s, B), eta);
        for (const Vec& fi : f) v *= ravg(s, B, [&](int y) { return fi[y]; }, 1.0);
        for (int x : B) out[x] = std::max(out[x], v);
    }
    return out;
}

// Direct m-fold loop; `skip` drops tuples.
double frac_oracle_at(const DiscreteSpace& s, int x, const Functions& g, double eta,
                      const std::function<bool(const Index&)>& skip = nullptr) {
    const int n = s.size();
    const int m = static_cast<int>(g.size());
    Index y(m, 0);
    double acc = 0;
    for (;;) {
        if (!skip || !skip(y)) {
            double ker = 0, prod = 1;
            for (int i = 0; i < m; ++i) {
                ker += mu(s, oracle::ball(s, x, s.d(x, y[i])));
                prod *= g[i][y[i]] * s.mass(y[i]);
            }
            acc += std::pow(ker, eta - m) * prod;
        }
        int i = m - 1;
        for (; i >= 0; --i) {
            if (++y[i] < n) break;
            y[i] = 0;
        }
        if (i < 0) break;
    }
    return acc;
}

// Ball radii candidates: every distance, every distance over C, and midpoints between consecutive ones.
Vec radius_grid(const DiscreteSpace& s, double C) {
    std::set<double> c{0.0};
    for (int a = 0; a < s.size(); ++a)
        for (int b = 0; b < s.size(); ++b) {
            c.insert(s.d(a, b));
            c.insert(s.d(a, b) / C);
        }
    Vec v(c.begin(), c.end()), out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(v[i]);
        if (i + 1 < v.size()) out.push_back((v[i] + v[i + 1]) / 2);
    }
    return out;
}

Vec grand_oracle(const DiscreteSpace& s, const Functions& f, double eta, double C, const Ball* b0) {
    Vec out(s.size(), 0.0);
    Index cb0;
    if (b0) cb0 = oracle::ball(s, b0->center, C * b0->radius);
    for (int z = 0; z < s.size(); ++z)
        for (double r : radius_grid(s, C)) {
            Index B = oracle::ball(s, z, r);
            if (b0 && !std::includes(b0->members.begin(), b0->members.end(), B.begin(), B.end())) continue;
            Index CB = oracle::ball(s, z, C * r);
            auto skip = [&](const Index& y) {
                bool all_in = true;
                for (int yi : y) all_in = all_in && member(CB, yi);
                if (all_in) return true;
                if (b0)
                    for (int yi : y)
                        if (!member(cb0, yi)) return true;
                return false;
            };
            double best = 0;
            for (int xi : B) best = std::max(best, std::abs(frac_oracle_at(s, xi, f, eta, skip)));
            for (int x : B) out[x] = std::max(out[x], best);
        }
    return out;
}

void check_close(const Vec& a, const Vec& b, double rel = 1e-12) {
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(rel).scale(1.0));
}

ExponentConfig cfg_of(int m, double eta, double p0 = 1, double gamma = 1, double r = 1) {
    ExponentConfig c;
    c.m = m;
    c.p = Vec(m, 2.0);
    c.eta = eta;
    c.p0 = p0;
    c.gamma = gamma;
    c.r = r;
    return c;
}

}  // namespace

TEST_CASE("basic sparse operator") {
    auto s = DiscreteSpace::grid_uniform(4);
    auto lat = build_standard_lattice(s);
    SUBCASE("single unit cube") {
        int leaf = lat.leaf(2);
        auto S = family(lat, {leaf});
        for (double eta : {0.0, 0.3, 0.9}) {
            Vec out = sparse_basic(S, {Vec(4, 1.0)}, cfg_of(1, eta));
            for (int x = 0; x < 4; ++x) CHECK(out[x] == (x == 2 ? 1.0 : 0.0));
        }
    }
    SUBCASE("nested pair, m=2, gamma=2") {
        std::mt19937_64 rng(7);
        Functions f{oracle::random_positive(rng, 4), oracle::random_positive(rng, 4)};
        int top = lat.generation(0).front();
        auto S = family(lat, {top, lat.cube(top).children.front()});
        check_close(sparse_basic(S, f, cfg_of(2, 0.5, 1, 2)), basic_oracle(S, f, 0.5, 1, 2));
    }
    SUBCASE("plain sparse operator equals the unparametrized sum") {
        std::mt19937_64 rng(1);
        Vec f = oracle::random_positive(rng, 4);
        auto S = all_cubes(lat);
        check_close(sparse_basic(S, {f}, cfg_of(1, 0)), basic_oracle(S, {f}, 0, 1, 1), 1e-14);
    }
}

TEST_CASE("basic operator on random families and masses") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 1 << (1 + trial % 4);
        auto s = DiscreteSpace::grid(n, oracle::random_positive(rng, n));
        auto lat = build_standard_lattice(s);
        auto S = random_family(lat, rng);
        const int m = 1 + trial % 3;
        Functions f;
        for (int i = 0; i < m; ++i) f.push_back(oracle::random_signed(rng, n));
        const double eta = 0.25 * (trial % 4) * m / 4.0;
        const double p0 = 1.0 + (trial % 3) * 0.5;
        const double gamma = 0.5 + (trial % 5) * 0.4;
        check_close(sparse_basic(S, f, cfg_of(m, eta, p0, gamma), Exec::serial), basic_oracle(S, f, eta, p0, gamma));
    }
}

TEST_CASE("sparse kernels are identical in serial and parallel") {
    std::mt19937_64 rng(3);
    const int n = 32;
    auto s = DiscreteSpace::grid(n, oracle::random_positive(rng, n));
    auto lat = build_standard_lattice(s);
    auto S = random_family(lat, rng);
    Functions f{oracle::random_signed(rng, n), oracle::random_signed(rng, n)};
    Functions b{oracle::random_signed(rng, n), oracle::random_signed(rng, n)};
    auto cfg = cfg_of(2, 0.7, 1.5, 0.8, 1.5);
    CHECK(sparse_basic(S, f, cfg, Exec::serial) == sparse_basic(S, f, cfg, Exec::parallel));
    CHECK(sparse_first_order(S, b, f, {0}, {0, 1}, cfg, Exec::serial) ==
          sparse_first_order(S, b, f, {0}, {0, 1}, cfg, Exec::parallel));
    MultiIndexPair pr{{2, 1}, {1, 0}, {0, 1}, {0, 1}};
    CHECK(sparse_higher(S, b, f, pr, cfg, Exec::serial) == sparse_higher(S, b, f, pr, cfg, Exec::parallel));
    CHECK(sparse_endpoint(S, f, {1}, cfg, Exec::serial) == sparse_endpoint(S, f, {1}, cfg, Exec::parallel));
}

TEST_CASE("basic operator properties") {
    std::mt19937_64 rng(5);
    const int n = 16;
    auto s = DiscreteSpace::grid(n, oracle::random_positive(rng, n));
    auto lat = build_standard_lattice(s);
    auto S = random_family(lat, rng);
    SUBCASE("self-adjoint for eta=0, m=1") {
        Vec f = oracle::random_signed(rng, n), g = oracle::random_signed(rng, n);
        // the linear form uses signed averages; build it from the per-cube averages
        auto lin = [&](const Vec& h) {
            Vec out(n, 0.0);
            for (int id : S.cubes) {
                const Index& e = lat.cube(id).members;
                double a = mean(s, e, h);
                for (int x : e) out[x] += a;
            }
            return out;
        };
        Vec Af = lin(f), Ag = lin(g);
        double l = 0, r = 0, scale = 0;
        for (int x = 0; x < n; ++x) {
            l += Af[x] * g[x] * s.mass(x);
            r += f[x] * Ag[x] * s.mass(x);
            scale += std::abs(Af[x] * g[x] * s.mass(x));
        }
        CHECK(std::abs(l - r) <= 1e-12 * scale);
        // on nonnegative inputs the library operator is that linear form
        Vec fp = oracle::random_positive(rng, n);
        check_close(sparse_basic(S, {fp}, cfg_of(1, 0)), lin(fp), 1e-13);
    }
    SUBCASE("monotone and homogeneous") {
        Functions f{oracle::random_signed(rng, n), oracle::random_signed(rng, n)};
        auto cfg = cfg_of(2, 0.4, 1.5, 0.7);
        Vec base = sparse_basic(S, f, cfg);
        Functions g = f;
        for (double& v : g[1]) v = std::abs(v) * 1.3;
        Vec bigger = sparse_basic(S, g, cfg);
        for (int x = 0; x < n; ++x) CHECK(bigger[x] >= base[x]);
        Functions h = f;
        for (double& v : h[0]) v *= 2.5;
        Vec scaled = sparse_basic(S, h, cfg);
        for (int x = 0; x < n; ++x) CHECK(scaled[x] == doctest::Approx(2.5 * base[x]).epsilon(1e-14));
    }
}

TEST_CASE("first order symbol operator") {
    std::mt19937_64 rng(11);
    const int n = 8;
    auto s = DiscreteSpace::grid_uniform(n);
    auto lat = build_standard_lattice(s);
    auto S = all_cubes(lat);
    Functions f{oracle::random_signed(rng, n), oracle::random_signed(rng, n)};
    Functions b{oracle::random_signed(rng, n), oracle::random_signed(rng, n)};
    SUBCASE("constant symbols vanish") {
        Functions bc{Vec(n, 3.0), Vec(n, -1.0)};
        for (double v : sparse_first_order(S, bc, f, {0}, {0}, cfg_of(2, 0.5))) CHECK(v == 0.0);
    }
    SUBCASE("empty sets reduce to the basic operator when r=1") {
        check_close(sparse_first_order(S, b, f, {}, {}, cfg_of(2, 0.6)), sparse_basic(S, f, cfg_of(2, 0.6)), 1e-14);
    }
    SUBCASE("m=2, tau={1}, tau_ell={1,2}") {
        for (double r : {1.0, 2.0}) {
            auto cfg = cfg_of(2, 0.5, 1, 1, r);
            check_close(sparse_first_order(S, b, f, {0}, {0, 1}, cfg), first_order_oracle(S, b, f, {0}, {0, 1}, 0.5, r));
        }
    }
    SUBCASE("random nonuniform instances") {
        for (int trial = 0; trial < 10; ++trial) {
            const int nn = 1 << (2 + trial % 3);
            auto sp = DiscreteSpace::grid(nn, oracle::random_positive(rng, nn));
            auto lt = build_standard_lattice(sp);
            auto SS = random_family(lt, rng);
            Functions ff{oracle::random_signed(rng, nn), oracle::random_signed(rng, nn), oracle::random_signed(rng, nn)};
            Functions bb{oracle::random_signed(rng, nn), oracle::random_signed(rng, nn), oracle::random_signed(rng, nn)};
            auto cfg = cfg_of(3, 1.2, 1, 1, 1.0 + trial % 3);
            check_close(sparse_first_order(SS, bb, ff, {1}, {0, 1}, cfg),
                        first_order_oracle(SS, bb, ff, {1}, {0, 1}, 1.2, cfg.r));
        }
    }
    SUBCASE("bad index sets are rejected") {
        CHECK_THROWS_AS(sparse_first_order(S, b, f, {1}, {0}, cfg_of(2, 0)), Error);
        CHECK_THROWS_AS(sparse_first_order(S, b, f, {}, {1, 0}, cfg_of(2, 0)), Error);
        CHECK_THROWS_AS(sparse_first_order(S, b, f, {2}, {2}, cfg_of(2, 0)), Error);
    }
}

TEST_CASE("higher order symbol operator") {
    std::mt19937_64 rng(3);
    const int n = 8;
    auto s = DiscreteSpace::grid_uniform(n);
    auto lat = build_standard_lattice(s);
    auto S = all_cubes(lat);
    SUBCASE("m=1, k=2, t=1") {
        Functions f{oracle::random_signed(rng, n)}, b{oracle::random_signed(rng, n)};
        MultiIndexPair pr{{2}, {1}, {0}, {0}};
        for (double r : {1.0, 1.5})
            check_close(sparse_higher(S, b, f, pr, cfg_of(1, 0.3, 1, 1, r)), higher_oracle(S, b, f, {2}, {1}, {0}, 0.3, r));
    }
    Functions f{oracle::random_signed(rng, n), oracle::random_signed(rng, n)};
    Functions b{oracle::random_signed(rng, n), oracle::random_signed(rng, n)};
    SUBCASE("k=t=1 collapses to the first order operator with averaged oscillation") {
        MultiIndexPair pr{{1, 1}, {1, 1}, {0, 1}, {0, 1}};
        auto cfg = cfg_of(2, 0.5, 1, 1, 2);
        check_close(sparse_higher(S, b, f, pr, cfg), sparse_first_order(S, b, f, {}, {0, 1}, cfg), 1e-14);
        MultiIndexPair one{{1, 1}, {1, 1}, {0}, {0}};
        check_close(sparse_higher(S, b, f, one, cfg), sparse_first_order(S, b, f, {}, {0}, cfg), 1e-14);
    }
    SUBCASE("k=t=0 collapses to the basic operator") {
        MultiIndexPair pr{{0, 0}, {0, 0}, {0, 1}, {0, 1}};
        check_close(sparse_higher(S, b, f, pr, cfg_of(2, 0.5, 1, 1, 1)), sparse_basic(S, f, cfg_of(2, 0.5, 1)), 1e-14);
        check_close(sparse_higher(S, b, f, pr, cfg_of(2, 0.0, 1, 1, 2)), sparse_basic(S, f, cfg_of(2, 0.0, 2)), 1e-14);
    }
    SUBCASE("random multi-indices") {
        for (int trial = 0; trial < 10; ++trial) {
            MultiIndexPair pr{{1 + trial % 3, 2}, {trial % 2, 1 + trial % 2}, {}, {}};
            if (trial % 3 != 0) pr.tau.push_back(0);
            if (trial % 2 == 0) pr.tau.push_back(1);
            pr.tau_ell = pr.tau;
            std::set<int> tau(pr.tau.begin(), pr.tau.end());
            auto cfg = cfg_of(2, 0.8, 1, 1, 1.0 + 0.5 * (trial % 3));
            check_close(sparse_higher(S, b, f, pr, cfg), higher_oracle(S, b, f, pr.k, pr.t, tau, 0.8, cfg.r));
        }
    }
    SUBCASE("t above k is rejected") {
        MultiIndexPair bad{{1, 1}, {2, 0}, {0}, {0}};
        CHECK_THROWS_AS(sparse_higher(S, b, f, bad, cfg_of(2, 0)), Error);
    }
}

TEST_CASE("endpoint operators") {
    std::mt19937_64 rng(5);
    const int n = 8;
    auto s = DiscreteSpace::grid_uniform(n);
    auto lat = build_standard_lattice(s);
    auto S = all_cubes(lat);
    Functions f{oracle::random_signed(rng, n), oracle::random_signed(rng, n)};
    SUBCASE("full tau is the basic operator") {
        check_close(sparse_endpoint(S, f, {0, 1}, cfg_of(2, 0.5)), sparse_basic(S, f, cfg_of(2, 0.5)), 1e-14);
        check_close(sparse_endpoint(S, f, {0, 1}, cfg_of(2, 0.0, 1, 1, 2)), sparse_basic(S, f, cfg_of(2, 0.0, 2)), 1e-14);
    }
    SUBCASE("constant function has Orlicz factor c") {
        Functions c{Vec(n, 1.0), Vec(n, 0.7)};
        Vec out = sparse_endpoint(family(lat, {lat.leaf(3)}), c, {0}, cfg_of(2, 0));
        CHECK(out[3] == doctest::Approx(0.7).epsilon(1e-12));
    }
    SUBCASE("m=2, tau={1} against grid-search Orlicz") {
        for (double r : {1.0, 2.0}) {
            Vec want(n, 0.0), want_max(n, 0.0);
            for (int id : S.cubes) {
                const Index& e = lat.cube(id).members;
                double a = ravg(s, e, [&](int y) { return f[0][y]; }, r);
                Vec fr(n);
                for (int y = 0; y < n; ++y) fr[y] = std::pow(std::abs(f[1][y]), r);
                double o = oracle::luxemburg(s, e, fr, [&](double t) { return llogl_phi(t, r); });
                double ob = oracle::luxemburg(s, e, f[1], [&](double t) { return llogl_phi(t, r); });
                const double w = std::pow(mu(s, e), 0.5 / r);
                for (int x : e) {
                    want[x] += w * a * std::pow(o, 1.0 / r);
                    want_max[x] = std::max(want_max[x], w * ravg(s, e, [&](int y) { return f[0][y]; }, 1) * ob);
                }
            }
            auto cfg = cfg_of(2, 0.5, 1, 1, r);
            check_close(sparse_endpoint(S, f, {0}, cfg), want, 1e-9);
            check_close(maximal_endpoint(lat, f, {0}, cfg), want_max, 1e-9);
        }
    }
}

TEST_CASE("fractional maximal operator") {
    SUBCASE("constant one") {
        auto s = DiscreteSpace::grid(8, {1, 2, 3, 1, 2, 3, 1, 2});
        for (double v : frac_maximal(s, {Vec(8, 1.0)}, 0.0)) CHECK(v == doctest::Approx(1.0));
    }
    SUBCASE("point mass on uniform n=4") {
        auto s = DiscreteSpace::grid_uniform(4);
        Vec f{0, 1, 0, 0};
        check_close(frac_maximal(s, {f}, 0.0), frac_max_oracle(s, {f}, 0.0), 1e-15);
        // balls around 1 reach it with radius 0, so M f(1) = 1; at 3 the best ball is {1,2,3}
        CHECK(frac_maximal(s, {f}, 0.0)[1] == 1.0);
        CHECK(frac_maximal(s, {f}, 0.0)[3] == doctest::Approx(1.0 / 3.0));
    }
    SUBCASE("random instances against ball enumeration") {
        std::mt19937_64 rng(17);
        for (int trial = 0; trial < 15; ++trial) {
            const int n = 1 << (trial % 5);
            auto s = DiscreteSpace::grid(n, oracle::random_positive(rng, n));
            const int m = 1 + trial % 3;
            Functions f;
            for (int i = 0; i < m; ++i) f.push_back(oracle::random_signed(rng, n));
            const double eta = m * 0.2 * (trial % 5);
            check_close(frac_maximal(s, f, eta), frac_max_oracle(s, f, eta), 1e-12);
        }
    }
}

TEST_CASE("fractional integral") {
    SUBCASE("one point") {
        auto s = DiscreteSpace::grid_uniform(1);
        for (double eta : {0.0, 0.5, 0.9}) CHECK(frac_integral(s, {Vec{2.5}}, eta)[0] == doctest::Approx(2.5));
    }
    SUBCASE("zero input") {
        auto s = DiscreteSpace::grid_uniform(4);
        for (double v : frac_integral(s, {Vec(4, 0.0), Vec(4, 1.0)}, 0.5)) CHECK(v == 0.0);
    }
    SUBCASE("n=4, m=2, eta=1/2 double loop") {
        auto s = DiscreteSpace::grid_uniform(4);
        std::mt19937_64 rng(9);
        Functions f{oracle::random_signed(rng, 4), oracle::random_signed(rng, 4)};
        Vec got = frac_integral(s, f, 0.5);
        for (int x = 0; x < 4; ++x) CHECK(got[x] == doctest::Approx(frac_oracle_at(s, x, f, 0.5)).epsilon(1e-13));
    }
    SUBCASE("random masses, serial equals parallel") {
        std::mt19937_64 rng(19);
        for (int trial = 0; trial < 8; ++trial) {
            const int n = 1 << (1 + trial % 4);
            auto s = DiscreteSpace::grid(n, oracle::random_positive(rng, n));
            const int m = 1 + trial % 3;
            Functions f;
            for (int i = 0; i < m; ++i) f.push_back(oracle::random_signed(rng, n));
            const double eta = 0.3 * m;
            Vec a = frac_integral(s, f, eta, Exec::serial);
            CHECK(a == frac_integral(s, f, eta, Exec::parallel));
            for (int x = 0; x < n; ++x) CHECK(a[x] == doctest::Approx(frac_oracle_at(s, x, f, eta)).epsilon(1e-12));
        }
    }
    SUBCASE("untabulated kernel agrees") {
        std::mt19937_64 rng(23);
        const int n = 64;
        auto s = DiscreteSpace::grid(n, oracle::random_positive(rng, n));
        FracKernel K(s, 3, 1.0);
        CHECK_FALSE(K.tabulated());
        Functions f{oracle::random_signed(rng, n), oracle::random_signed(rng, n), oracle::random_signed(rng, n)};
        for (int x : {0, 17, 63})
            CHECK(frac_integral_at(K, x, f, nullptr, nullptr) == doctest::Approx(frac_oracle_at(s, x, f, 1.0)).epsilon(1e-12));
    }
}

TEST_CASE("fractional maximal is bounded by the fractional integral") {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 1 << (trial % 4);
        auto s = DiscreteSpace::grid(n, oracle::random_positive(rng, n, 2.0));
        const int m = 1 + trial % 3;
        Functions f;
        for (int i = 0; i < m; ++i) f.push_back(oracle::random_abs_normal(rng, n));
        const double eta = m * (trial % 4) / 4.0;
        Vec M = frac_maximal(s, f, eta), I = frac_integral(s, f, eta);
        const double c = std::pow(m, m - eta);
        for (int x = 0; x < n; ++x) CHECK(M[x] <= c * I[x] * (1 + 1e-12));
    }
}

TEST_CASE("generalized commutator") {
    std::mt19937_64 rng(2);
    const int n = 4;
    auto s = DiscreteSpace::grid_uniform(n);
    SUBCASE("k=0 is the fractional integral") {
        Functions f{oracle::random_signed(rng, n), oracle::random_signed(rng, n)};
        Functions b{oracle::random_signed(rng, n), oracle::random_signed(rng, n)};
        MultiIndexPair pr{{0, 0}, {0, 0}, {}, {0, 1}};
        CHECK(commutator_general(s, b, f, pr, 0.5) == frac_integral(s, f, 0.5));
    }
    SUBCASE("constant symbols give zero") {
        Functions f{oracle::random_signed(rng, n), oracle::random_signed(rng, n)};
        Functions b{Vec(n, 2.0), Vec(n, 5.0)};
        MultiIndexPair pr{{1, 0}, {0, 0}, {}, {0}};
        for (double v : commutator_general(s, b, f, pr, 0.5)) CHECK(v == 0.0);
    }
    SUBCASE("m=1, k=1: b I f - I(bf)") {
        Vec f = oracle::random_signed(rng, n), b = oracle::random_signed(rng, n);
        Vec bf(n);
        for (int y = 0; y < n; ++y) bf[y] = b[y] * f[y];
        MultiIndexPair pr{{1}, {0}, {}, {0}};
        Vec got = commutator_general(s, {b}, {f}, pr, 0.25);
        Vec If = frac_integral(s, {f}, 0.25), Ibf = frac_integral(s, {bf}, 0.25);
        for (int x = 0; x < n; ++x) CHECK(got[x] == doctest::Approx(b[x] * If[x] - Ibf[x]).epsilon(1e-12).scale(1));
    }
    SUBCASE("m=2 binomial expansion, k=(2,1)") {
        const int nn = 8;
        auto sp = DiscreteSpace::grid(nn, oracle::random_positive(rng, nn));
        Functions f{oracle::random_signed(rng, nn), oracle::random_signed(rng, nn)};
        Functions b{oracle::random_signed(rng, nn), oracle::random_signed(rng, nn)};
        MultiIndexPair pr{{2, 1}, {0, 0}, {}, {0, 1}};
        Vec got = commutator_general(sp, b, f, pr, 0.7);
        // (b(x)-b(y))^k = sum_j C(k,j) b(x)^{k-j} (-b(y))^j
        for (int x = 0; x < nn; ++x) {
            double want = 0;
            for (int j0 = 0; j0 <= 2; ++j0)
                for (int j1 = 0; j1 <= 1; ++j1) {
                    Functions g(2, Vec(nn));
                    for (int y = 0; y < nn; ++y) {
                        g[0][y] = std::pow(-b[0][y], j0) * f[0][y];
                        g[1][y] = std::pow(-b[1][y], j1) * f[1][y];
                    }
                    const double c0 = (j0 == 1 ? 2 : 1) * std::pow(b[0][x], 2 - j0);
                    const double c1 = std::pow(b[1][x], 1 - j1);
                    want += c0 * c1 * frac_oracle_at(sp, x, g, 0.7);
                }
            CHECK(got[x] == doctest::Approx(want).epsilon(1e-10).scale(1));
        }
    }
}

TEST_CASE("dyadic maximal operators") {
    SUBCASE("constants") {
        std::mt19937_64 rng(31);
        auto s = DiscreteSpace::grid(8, oracle::random_positive(rng, 8));
        auto lat = build_standard_lattice(s);
        Vec c(8, 1.7);
        for (double v : dyadic_weighted_maximal(lat, c, oracle::random_positive(rng, 8))) CHECK(v == doctest::Approx(1.7));
        for (double v : sharp_maximal_dyadic(lat, c, 1.0)) CHECK(v == doctest::Approx(0.0).scale(1));
        for (double v : sharp_maximal_dyadic(lat, c, 0.5)) CHECK(v == doctest::Approx(0.0).scale(1));
    }
    SUBCASE("weighted maximal L^p(sigma) bound with constant p'") {
        std::mt19937_64 rng(37);
        const int n = 32;
        auto s = DiscreteSpace::grid_uniform(n);
        auto lat = build_standard_lattice(s);
        std::uniform_real_distribution<double> up(1.1, 6.0);
        for (int trial = 0; trial < 500; ++trial) {
            Vec f = oracle::random_signed(rng, n), sg = oracle::random_positive(rng, n, 2.0);
            const double p = up(rng);
            Vec M = dyadic_weighted_maximal(lat, f, sg);
            double lhs = 0, rhs = 0;
            for (int x = 0; x < n; ++x) {
                lhs += std::pow(M[x], p) * sg[x];
                rhs += std::pow(std::abs(f[x]), p) * sg[x];
            }
            CHECK(std::pow(lhs, 1 / p) <= p / (p - 1) * std::pow(rhs, 1 / p));
        }
    }
    SUBCASE("sharp maximal scan on (0,0,1,1)") {
        auto s = DiscreteSpace::grid_uniform(4);
        auto lat = build_standard_lattice(s);
        Vec f{0, 0, 1, 1};
        Vec want(4, 0.0);
        for (const Cube& q : lat.cubes()) {
            const double fq = mean(s, q.members, f);
            const double osc = ravg(s, q.members, [&](int y) { return f[y] - fq; }, 1.0);
            for (int x : q.members) want[x] = std::max(want[x], osc);
        }
        check_close(sharp_maximal_dyadic(lat, f, 1.0), want, 1e-15);
        for (double v : sharp_maximal_dyadic(lat, f, 1.0)) CHECK(v == doctest::Approx(0.5));
    }
    SUBCASE("sharp maximal with delta < 1 and M_delta") {
        std::mt19937_64 rng(41);
        const int n = 16;
        auto s = DiscreteSpace::grid(n, oracle::random_positive(rng, n));
        auto lat = build_standard_lattice(s);
        Vec f = oracle::random_signed(rng, n);
        const double d = 0.4;
        Vec want(n, 0.0), wantm(n, 0.0);
        for (const Cube& q : lat.cubes()) {
            const double hq = ravg(s, q.members, [&](int y) { return f[y]; }, d);
            const double hm = std::pow(hq, d);
            const double osc = ravg(s, q.members, [&](int y) { return std::pow(std::abs(f[y]), d) - hm; }, 1.0);
            for (int x : q.members) want[x] = std::max(want[x], std::pow(osc, 1 / d));
        }
        for (const Index& B : all_balls(s)) {
            const double v = ravg(s, B, [&](int y) { return f[y]; }, d);
            for (int x : B) wantm[x] = std::max(wantm[x], v);
        }
        check_close(sharp_maximal_dyadic(lat, f, d), want, 1e-12);
        check_close(m_delta(s, f, d), wantm, 1e-12);
    }
}

TEST_CASE("truncation constants") {
    auto t = truncation_constants(1.0, 1.0);
    CHECK(t.jtilde0 == 2);
    CHECK(t.c_jtilde0 == 16.0);
    CHECK(t.j0 == 3);
    t = truncation_constants(1.0, 4.0);  // need 2^j > 8
    CHECK(t.jtilde0 == 4);
    CHECK(t.c_jtilde0 == 64.0);
    CHECK(t.j0 == 5);
    t = truncation_constants(2.0, 1.0);  // need 2^j > 6, and 2^j0 > 8
    CHECK(t.jtilde0 == 3);
    CHECK(t.c_jtilde0 == 64.0);
    CHECK(t.j0 == 4);
}

TEST_CASE("grand maximal truncated operator") {
    SUBCASE("zero input") {
        auto s = DiscreteSpace::grid_uniform(8);
        FracKernel K(s, 2, 0.5);
        for (double v : grand_maximal_truncated(K, {Vec(8, 0.0), Vec(8, 1.0)}, 16.0)) CHECK(v == 0.0);
    }
    SUBCASE("support swallowed by every dilated ball gives zero") {
        // two points at distance 1: every ball with r >= 1/16 dilates over both, and the
        // radius-zero balls see the point mass only through a truncation of the other point
        auto s = DiscreteSpace::grid_uniform(2);
        FracKernel K(s, 1, 0.25);
        Vec out = grand_maximal_truncated(K, {Vec{1.0, 0.0}}, 16.0);
        Vec want = grand_oracle(s, {Vec{1.0, 0.0}}, 0.25, 16.0, nullptr);
        check_close(out, want, 1e-14);
        // a ball containing all points truncates everything
        std::vector<char> all(2, 1);
        CHECK(frac_integral_at(K, 0, {Vec{1.0, 0.0}}, nullptr, &all) == 0.0);
    }
    SUBCASE("n=16, m=1, eta=1/4 double-sup enumeration") {
        auto s = DiscreteSpace::grid_uniform(16);
        std::mt19937_64 rng(13);
        Functions f{oracle::random_signed(rng, 16)};
        auto t = truncation_constants(s.a0(), 1.0);
        FracKernel K(s, 1, 0.25);
        for (double C : {t.c_jtilde0, 2.0, 1.5})
            check_close(grand_maximal_truncated(K, f, C), grand_oracle(s, f, 0.25, C, nullptr), 1e-12);
    }
    SUBCASE("m=2 with random masses, global and local") {
        std::mt19937_64 rng(43);
        const int n = 8;
        auto s = DiscreteSpace::grid(n, oracle::random_positive(rng, n));
        Functions f{oracle::random_signed(rng, n), oracle::random_signed(rng, n)};
        FracKernel K(s, 2, 0.6);
        check_close(grand_maximal_truncated(K, f, 2.0), grand_oracle(s, f, 0.6, 2.0, nullptr), 1e-12);
        Ball b0 = s.ball(3, 2.0);
        Vec loc = local_grand_maximal(K, f, 1.5, b0);
        check_close(loc, grand_oracle(s, f, 0.6, 1.5, &b0), 1e-12);
        for (int x = 0; x < n; ++x)
            if (!member(b0.members, x)) CHECK(loc[x] == 0.0);
    }
}

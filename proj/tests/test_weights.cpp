#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>

#include "oracles.hpp"
#include "sparselab/weights.hpp"

using namespace sl;

namespace {

double plain_avg(const DiscreteSpace& s, const Index& e, const Vec& f) {
    double a = 0, m = 0;
    for (int x : e) {
        a += std::abs(f[x]) * s.mass(x);
        m += s.mass(x);
    }
    return a / m;
}

bool cube_inside(const Cube& outer, const Cube& inner) {
    return std::includes(outer.members.begin(), outer.members.end(), inner.members.begin(), inner.members.end());
}

Vec brute_local_max(const DyadicLattice& lat, const Cube& q, const Vec& f) {
    const DiscreteSpace& s = lat.space();
    Vec out(s.size(), 0.0);
    for (int x : q.members) {
        double best = 0;
        for (const Cube& r : lat.cubes())
            if (cube_inside(q, r) && std::binary_search(r.members.begin(), r.members.end(), x))
                best = std::max(best, plain_avg(s, r.members, f));
        out[x] = best;
    }
    return out;
}

}  // namespace

TEST_CASE("averages") {
    auto s = DiscreteSpace::grid_uniform(2);
    Index e{0, 1};
    CHECK(avg(s, e, {1, 3}, 1.0) == 2.0);
    CHECK(avg(s, e, {1, 3}, 2.0) == doctest::Approx(std::sqrt(5.0)).epsilon(1e-15));
    CHECK(avg(s, e, {4, 4}, 3.7) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(avg_w(s, e, {1, 3}, {1, 3}) == 10.0 / 4.0);
}

TEST_CASE("orlicz norms") {
    auto s = DiscreteSpace::grid_uniform(4);
    Index e{0, 1, 2, 3};
    Vec f{1, 2, 4, 8};
    CHECK(orlicz_norm(s, e, f, YoungFunction::identity()) == doctest::Approx(plain_avg(s, e, f)).epsilon(1e-12));
    CHECK(orlicz_norm(s, e, Vec(4, 3.0), YoungFunction::llogl(2)) == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(orlicz_norm(s, e, Vec(4, 0.0), YoungFunction::llogl(1)) == 0.0);

    auto llogl1 = [](double t) { return t * (1 + (t > 1 ? std::log(t) : 0.0)); };
    double o = oracle::luxemburg(s, e, f, llogl1);
    CHECK(std::abs(orlicz_norm(s, e, f, YoungFunction::llogl(1)) - o) <= 1e-8 * o);

    std::mt19937_64 rng(8);
    auto sp = DiscreteSpace::grid(16, oracle::random_positive(rng, 16));
    Index all(16);
    std::iota(all.begin(), all.end(), 0);
    for (int t = 0; t < 20; ++t) {
        Vec g = oracle::random_abs_normal(rng, 16);
        for (auto phi : {YoungFunction::llogl(1), YoungFunction::llogl(2.5), YoungFunction::expl(1.0),
                         YoungFunction::expl(0.5), YoungFunction::phi(1.5, 2.0)}) {
            double v = orlicz_norm(sp, all, g, phi);
            double ref = oracle::luxemburg(sp, all, g, [&](double x) { return phi(x); });
            CHECK(std::abs(v - ref) <= 1e-9 * ref);
            Vec g3 = g;
            for (auto& x : g3) x *= 3.25;
            CHECK(std::abs(orlicz_norm(sp, all, g3, phi) - 3.25 * v) <= 1e-10 * 3.25 * v);
            Vec bigger = g;
            bigger[t % 16] += 1.0;
            CHECK(orlicz_norm(sp, all, bigger, phi) >= v * (1 - 1e-12));
        }
        CHECK(plain_avg(sp, all, g) <= orlicz_norm(sp, all, g, YoungFunction::llogl(1.7)) * (1 + 1e-12));
        Vec h = oracle::random_signed(rng, 16);
        double lhs = 0;
        for (int x = 0; x < 16; ++x) lhs += std::abs(g[x] * h[x]) * sp.mass(x);
        lhs /= sp.total_mass();
        double rhs = 2 * orlicz_norm(sp, all, g, YoungFunction::expl(1.0)) *
                     orlicz_norm(sp, all, h, YoungFunction::expl_conjugate());
        CHECK(lhs <= rhs * (1 + 1e-9));
    }
}

TEST_CASE("young functions") {
    for (auto phi : {YoungFunction::identity(), YoungFunction::llogl(1), YoungFunction::llogl(3),
                     YoungFunction::expl(1), YoungFunction::phi(2, 1.5)}) {
        CHECK(phi(0.0) == 0.0);
        double prev = 0;
        for (int i = 1; i < 400; ++i) {
            double t = i / 40.0;
            CHECK(phi(t) >= prev);
            prev = phi(t);
            double a = t - 0.01, b = t + 0.01;
            CHECK(phi(t) <= 0.5 * (phi(a) + phi(b)) + 1e-12);
        }
    }
    CHECK(YoungFunction::identity()(1.0) == 1.0);
    CHECK(YoungFunction::llogl(2)(1.0) == 1.0);
}

TEST_CASE("exponent config") {
    auto c = ExponentConfig::make({2, 3}, 1.5);
    CHECK(c.eta == doctest::Approx(1.0 / 2 + 1.0 / 3 - 1.0 / 1.5));
    CHECK_NOTHROW(c.validate());
    double lhs = 1.0 / c.q;
    for (double p : c.p) lhs += 1.0 / conj_exp(p);
    CHECK(std::abs(lhs - (c.m - c.eta)) <= 1e-12);
    auto bad = c;
    bad.eta += 0.1;
    CHECK_THROWS_AS(bad.validate(), Error);
    auto e = c;
    e.q0 = 1.0 / (e.m - e.eta);
    CHECK_NOTHROW(e.validate(true));
    CHECK_THROWS_AS(c.validate(true), Error);
    CHECK(c.theta() == 1.0);
    CHECK(c.beta() == doctest::Approx(std::max(1.0, 2.0 / 1.5)));
}

TEST_CASE("dual weights") {
    CHECK(dual_weight(Vec(3, 1.0), 2.5) == Vec(3, 1.0));
    CHECK(dual_weight({2.0, 4.0}, 2.0) == Vec{0.5, 0.25});
    CHECK(dual_weight({2.0}, 3.0)[0] == doctest::Approx(std::pow(2.0, -0.5)).epsilon(1e-15));
    std::mt19937_64 rng(4);
    Vec w = oracle::random_positive(rng, 10, 2.0);
    Vec back = dual_weight(dual_weight(w, 3.0), conj_exp(3.0));
    for (int i = 0; i < 10; ++i) CHECK(back[i] == doctest::Approx(w[i]).epsilon(1e-12));
}

TEST_CASE("weight constants") {
    auto s = DiscreteSpace::grid_uniform(8);
    auto lat = build_standard_lattice(s);
    auto cfg = ExponentConfig::make({2, 4}, 2.0);
    cfg.q0 = 1.0 / (cfg.m - cfg.eta);
    WeightInputs ones{Vec(8, 1.0), {Vec(8, 1.0), Vec(8, 1.0)}};
    for (auto k : {WeightKind::A_pq_star, WeightKind::A_pq, WeightKind::W_inf, WeightKind::H_inf,
                   WeightKind::W_inf_i, WeightKind::H_inf_i, WeightKind::A_1q0_star})
        CHECK(weight_constant(k, lat, ones, cfg).value == doctest::Approx(1.0).epsilon(1e-14));
    auto c1 = ExponentConfig::make({2}, 2.0);
    for (auto k : {WeightKind::A_p, WeightKind::A_inf_fujii})
        CHECK(weight_constant(k, lat, {{}, {Vec(8, 1.0)}}, c1).value == doctest::Approx(1.0).epsilon(1e-14));

    // A_2 of a step weight by direct scan.
    Vec w{1, 1, 1, 1, 2, 2, 2, 2};
    double best = 0;
    for (const Cube& q : lat.cubes()) {
        double a = 0, b = 0;
        for (int x : q.members) {
            a += w[x];
            b += 1 / w[x];
        }
        best = std::max(best, a * b / (q.members.size() * q.members.size()));
    }
    auto r = weight_constant(WeightKind::A_p, lat, {{}, {w}}, c1);
    CHECK(r.value == doctest::Approx(best).epsilon(1e-14));
    CHECK(r.value == doctest::Approx(9.0 / 8.0).epsilon(1e-14));
    CHECK(r.argmax == lat.generation(0)[0]);

    CHECK(weight_constant(WeightKind::W_inf_i, lat, ones, ExponentConfig::make({2, 4}, 0.75, 1.0)).value == 1.0);
    CHECK_THROWS_AS(parse_weight_kind("A_bogus"), Error);
    CHECK(parse_weight_kind("H_inf_i") == WeightKind::H_inf_i);
}

TEST_CASE("A* and A constants agree") {
    std::mt19937_64 rng(12);
    auto s = DiscreteSpace::grid(16, oracle::random_positive(rng, 16));
    auto lat = build_standard_lattice(s);
    for (int t = 0; t < 30; ++t) {
        auto cfg = ExponentConfig::make({1.5 + t % 3, 2.5}, 1.0 + 0.2 * (t % 4));
        Vec u = oracle::random_positive(rng, 16, 1.0);
        std::vector<Vec> w{oracle::random_positive(rng, 16, 1.0), oracle::random_positive(rng, 16, 1.0)};
        double star = weight_constant(WeightKind::A_pq_star, lat, {u, w}, cfg).value;
        Vec uq(16);
        std::vector<Vec> wp(2, Vec(16));
        for (int x = 0; x < 16; ++x) {
            uq[x] = std::pow(u[x], 1 / cfg.q);
            for (int i = 0; i < 2; ++i) wp[i][x] = std::pow(w[i][x], 1 / cfg.p[i]);
        }
        double a = weight_constant(WeightKind::A_pq, lat, {uq, wp}, cfg).value;
        CHECK(std::abs(star - std::pow(a, cfg.q)) <= 1e-10 * star);

        Vec u3 = u;
        for (auto& x : u3) x *= 3.0;
        double star3 = weight_constant(WeightKind::A_pq_star, lat, {u3, w}, cfg).value;
        CHECK(std::abs(star3 - 3.0 * star) <= 1e-12 * star3);
    }
}

TEST_CASE("maximal-type constants against brute force") {
    std::mt19937_64 rng(21);
    auto s = DiscreteSpace::grid(8, oracle::random_positive(rng, 8));
    auto lat = build_standard_lattice(s);
    for (int t = 0; t < 5; ++t) {
        Vec w = oracle::random_positive(rng, 8, 2.0);
        Vec v = oracle::random_positive(rng, 8, 2.0);
        Vec u = oracle::random_positive(rng, 8, 2.0);
        double fujii = 0, winf = 0, winfi = 0, hinf = 0;
        auto cfg = ExponentConfig::make({2, 3}, 3.0);
        cfg.gamma = 0.5;
        for (const Cube& q : lat.cubes()) {
            Vec mw = brute_local_max(lat, q, w), mv = brute_local_max(lat, q, v), mu_ = brute_local_max(lat, q, u);
            double a = 0, b = 0, c = 0, d = 0, e = 0, f = 0, lw = 0, lv = 0;
            const double pig = conj_exp(cfg.p[0] / cfg.gamma);
            const double au = pig / conj_exp(cfg.q / cfg.gamma), av = pig / (cfg.p[1] / cfg.gamma);
            for (int x : q.members) {
                a += mw[x] * s.mass(x);
                b += w[x] * s.mass(x);
                c += std::pow(mw[x], cfg.q / 2) * std::pow(mv[x], cfg.q / 3) * s.mass(x);
                d += std::pow(w[x], cfg.q / 2) * std::pow(v[x], cfg.q / 3) * s.mass(x);
                e += std::pow(mu_[x], au) * std::pow(mv[x], av) * s.mass(x);
                f += std::pow(u[x], au) * std::pow(v[x], av) * s.mass(x);
                lw += -std::log(w[x]) * s.mass(x);
                lv += -std::log(v[x]) * s.mass(x);
            }
            double mq = oracle::mass(s, q.members);
            fujii = std::max(fujii, a / b);
            winf = std::max(winf, c / d);
            winfi = std::max(winfi, e / f);
            hinf = std::max(hinf, std::pow(b / mq * std::exp(lw / mq), cfg.q / 2) *
                                      std::pow(plain_avg(s, q.members, v) * std::exp(lv / mq), cfg.q / 3));
        }
        CHECK(weight_constant(WeightKind::A_inf_fujii, lat, {{}, {w}}, cfg).value == doctest::Approx(fujii).epsilon(1e-12));
        CHECK(weight_constant(WeightKind::W_inf, lat, {{}, {w, v}}, cfg).value == doctest::Approx(winf).epsilon(1e-12));
        CHECK(weight_constant(WeightKind::W_inf_i, lat, {u, {w, v}}, cfg, 0).value == doctest::Approx(winfi).epsilon(1e-12));
        CHECK(weight_constant(WeightKind::H_inf, lat, {{}, {w, v}}, cfg).value == doctest::Approx(hinf).epsilon(1e-12));
        CHECK(weight_constant(WeightKind::A_inf_fujii, lat, {{}, {w}}, cfg).value >= 1.0);
    }
}

TEST_CASE("bmo norms") {
    CHECK(bmo_norm(build_standard_lattice(DiscreteSpace::grid_uniform(8)), Vec(8, 3.0)).value == 0.0);
    auto s1 = DiscreteSpace::grid_uniform(2);
    auto l1 = build_standard_lattice(s1);
    CHECK(bmo_norm(l1, {1, 0}).value == 0.5);

    auto s = DiscreteSpace::grid_uniform(16);
    auto lat = build_standard_lattice(s);
    Vec b(16);
    for (int x = 0; x < 16; ++x) b[x] = std::log(1.0 + x);
    std::mt19937_64 rng(6);
    Vec nu = oracle::random_positive(rng, 16);
    for (const Vec& weight : {Vec(16, 1.0), nu}) {
        double best = 0;
        for (const Cube& q : lat.cubes()) {
            double bq = 0, m = 0, osc = 0, nq = 0;
            for (int x : q.members) {
                bq += b[x];
                m += 1;
            }
            bq /= m;
            for (int x : q.members) {
                osc += std::abs(b[x] - bq);
                nq += weight[x];
            }
            best = std::max(best, osc / nq);
        }
        CHECK(weighted_bmo_norm(lat, b, weight).value == doctest::Approx(best).epsilon(1e-13));
    }
}

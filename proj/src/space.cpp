#include "sparselab/space.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace sl {

namespace {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

void check_masses(const Vec& m) {
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (!(m[i] > 0.0) || !std::isfinite(m[i])) {
            std::ostringstream os;
            os << "mass at point " << i << " must be positive and finite";
            throw Error(ErrorKind::invalid_argument, os.str());
        }
    }
}

}  // namespace

DiscreteSpace DiscreteSpace::grid(int n, Vec masses) {
    if (!is_pow2(n)) throw Error(ErrorKind::invalid_argument, "grid size must be a power of two");
    if (masses.size() != static_cast<std::size_t>(n))
        throw Error(ErrorKind::invalid_argument, "masses must have n entries");
    check_masses(masses);
    DiscreteSpace s;
    s.kind_ = Kind::grid;
    s.n_ = n;
    s.masses_ = std::move(masses);
    s.metric_.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) s.metric_[static_cast<std::size_t>(i) * n + j] = std::abs(i - j) / double(n);
    s.a0_ = 1.0;
    s.a0_computed_ = true;
    s.finish();
    return s;
}

DiscreteSpace DiscreteSpace::from_metric(Vec masses, Vec metric, double declared_a0) {
    const int n = static_cast<int>(masses.size());
    if (n == 0) throw Error(ErrorKind::invalid_argument, "space must have at least one point");
    if (metric.size() != static_cast<std::size_t>(n) * n)
        throw Error(ErrorKind::invalid_argument, "metric must be n by n");
    check_masses(masses);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double v = metric[static_cast<std::size_t>(i) * n + j];
            double w = metric[static_cast<std::size_t>(j) * n + i];
            if (!std::isfinite(v) || v < 0.0)
                throw Error(ErrorKind::invalid_argument, "metric entries must be finite and nonnegative");
            if (v != w) throw Error(ErrorKind::invalid_argument, "metric must be symmetric");
            if ((i == j) != (v == 0.0)) {
                std::ostringstream os;
                os << "d(" << i << "," << j << ") must vanish exactly on the diagonal";
                throw Error(ErrorKind::invalid_argument, os.str());
            }
        }
    }
    DiscreteSpace s;
    s.kind_ = Kind::explicit_metric;
    s.n_ = n;
    s.masses_ = std::move(masses);
    s.metric_ = std::move(metric);
    s.finish();
    if (n <= 512) {
        s.a0_ = quasi_triangle_constant(s);
        s.a0_computed_ = true;
        if (declared_a0 > 0.0 && declared_a0 < s.a0_)
            throw Error(ErrorKind::invalid_argument, "declared a0 is below the exact quasi-triangle constant");
    } else {
        if (!(declared_a0 >= 1.0))
            throw Error(ErrorKind::invalid_argument, "a0 must be declared (>= 1) for spaces above 512 points");
        std::mt19937_64 rng(0x5eed);
        std::uniform_int_distribution<int> pick(0, n - 1);
        for (int t = 0; t < 200000; ++t) {
            int x = pick(rng), y = pick(rng), z = pick(rng);
            if (s.d(x, y) > declared_a0 * (s.d(x, z) + s.d(z, y)))
                throw Error(ErrorKind::invalid_argument, "declared a0 violated by a sampled triple");
        }
        s.a0_ = declared_a0;
        s.a0_computed_ = false;
    }
    return s;
}

void DiscreteSpace::finish() {
    total_ = pairwise_sum(masses_);
    order_.assign(n_, {});
    sorted_dist_.assign(n_, {});
    prefix_mass_.assign(n_, {});
    radii_.assign(n_, {});
    diam_ = 0.0;
    min_dist_ = 0.0;
    bool first = true;
    for (int x = 0; x < n_; ++x) {
        Index& o = order_[x];
        o.resize(n_);
        std::iota(o.begin(), o.end(), 0);
        std::stable_sort(o.begin(), o.end(), [&](int a, int b) { return d(x, a) < d(x, b); });
        Vec& sd = sorted_dist_[x];
        Vec& pm = prefix_mass_[x];
        sd.resize(n_);
        pm.resize(n_ + 1);
        pm[0] = 0.0;
        for (int i = 0; i < n_; ++i) {
            sd[i] = d(x, o[i]);
            pm[i + 1] = pm[i] + masses_[o[i]];
        }
        for (int i = 1; i < n_; ++i) {
            if (radii_[x].empty() || radii_[x].back() != sd[i]) radii_[x].push_back(sd[i]);
            if (first || sd[i] < min_dist_) {
                min_dist_ = sd[i];
                first = false;
            }
        }
        if (n_ > 1) diam_ = std::max(diam_, sd.back());
    }
}

int DiscreteSpace::ball_count(int x, double r) const {
    const Vec& sd = sorted_dist_[x];
    return static_cast<int>(std::upper_bound(sd.begin(), sd.end(), r) - sd.begin());
}

double DiscreteSpace::ball_mass(int x, double r) const { return prefix_mass_[x][ball_count(x, r)]; }

Ball DiscreteSpace::ball(int x, double r) const {
    if (r < 0.0) throw Error(ErrorKind::invalid_argument, "ball radius must be nonnegative");
    Ball b;
    b.center = x;
    b.radius = r;
    int c = ball_count(x, r);
    b.members.assign(order_[x].begin(), order_[x].begin() + c);
    std::sort(b.members.begin(), b.members.end());
    return b;
}

double DiscreteSpace::mass_of(const Index& pts) const {
    Vec v(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) v[i] = masses_[pts[i]];
    return pairwise_sum(v);
}

double quasi_triangle_constant(const DiscreteSpace& s) {
    const int n = s.size();
    double a = 1.0;
    for (int x = 0; x < n; ++x)
        for (int y = x + 1; y < n; ++y)
            for (int z = 0; z < n; ++z) {
                if (z == x || z == y) continue;
                a = std::max(a, s.d(x, y) / (s.d(x, z) + s.d(z, y)));
            }
    return a;
}

double doubling_constant(const DiscreteSpace& s) {
    // Both ball masses are right-continuous step functions of r that jump only
    // at d(x,y) and d(x,y)/2, so the supremum is attained at one of these.
    double c = 1.0;
    for (int x = 0; x < s.size(); ++x) {
        Vec rs{0.0};
        for (double r : s.radii(x)) {
            rs.push_back(r);
            rs.push_back(r / 2);
        }
        for (double r : rs) c = std::max(c, s.ball_mass(x, 2 * r) / s.ball_mass(x, r));
    }
    return c;
}

}  // namespace sl

#pragma once

#include <string>
#include <vector>

#include "sparselab/common.hpp"

namespace sl {

struct Ball {
    int center = 0;
    double radius = 0.0;
    Index members;  // sorted ascending
};

// Finite quasi-metric measure space. Immutable after construction.
class DiscreteSpace {
public:
    enum class Kind { grid, explicit_metric };

    // Points k/n on [0,1) with d(x,y) = |x-y|; n must be a power of two.
    static DiscreteSpace grid(int n, Vec masses);
    static DiscreteSpace grid_uniform(int n) { return grid(n, Vec(static_cast<std::size_t>(n), 1.0)); }
    // Row-major n*n metric. a0 is computed exactly for n <= 512; above that
    // declared_a0 is required and is spot-checked on sampled triples.
    static DiscreteSpace from_metric(Vec masses, Vec metric, double declared_a0 = 0.0);

    Kind kind() const { return kind_; }
    int size() const { return n_; }
    double d(int x, int y) const { return metric_[static_cast<std::size_t>(x) * n_ + y]; }
    double mass(int x) const { return masses_[x]; }
    const Vec& masses() const { return masses_; }
    double total_mass() const { return total_; }
    double a0() const { return a0_; }
    bool a0_computed() const { return a0_computed_; }
    double diameter() const { return diam_; }
    double min_distance() const { return min_dist_; }

    // Points ordered by distance from x (ties by index) and their distances.
    const Index& order(int x) const { return order_[x]; }
    const Vec& sorted_dist(int x) const { return sorted_dist_[x]; }
    // Distinct positive distances from x, ascending.
    const Vec& radii(int x) const { return radii_[x]; }

    int ball_count(int x, double r) const;  // |B(x,r)|
    double ball_mass(int x, double r) const;
    Ball ball(int x, double r) const;
    double mass_of(const Index& pts) const;

private:
    void finish();

    Kind kind_ = Kind::grid;
    int n_ = 0;
    Vec masses_;
    Vec metric_;
    double a0_ = 1.0;
    bool a0_computed_ = true;
    double total_ = 0.0;
    double diam_ = 0.0;
    double min_dist_ = 0.0;
    std::vector<Index> order_;
    std::vector<Vec> sorted_dist_;
    std::vector<Vec> prefix_mass_;
    std::vector<Vec> radii_;
};

// Exact quasi-triangle constant by full triple scan.
double quasi_triangle_constant(const DiscreteSpace& s);

// sup over x and r > 0 of mu(B(x,2r)) / mu(B(x,r)).
double doubling_constant(const DiscreteSpace& s);

}  // namespace sl

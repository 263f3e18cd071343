#pragma once

#include <limits>
#include <string>
#include <vector>

#include "sparselab/common.hpp"
#include "sparselab/space.hpp"

namespace sl {

struct Cube {
    int id = 0;
    int gen = 0;
    int index = 0;          // position within its generation
    Index members;          // sorted ascending
    int center = 0;
    double containment_radius = 0.0;  // A1 delta^k, or realized radius
    double core_radius = 0.0;          // a1 delta^k, or realized radius
    int parent = -1;
    Index children;
    double mass = 0.0;
};

struct LatticeParams {
    double delta = 0.5;
    double a1 = std::numeric_limits<double>::quiet_NaN();  // NaN: per-cube realized radii
    double A1 = std::numeric_limits<double>::quiet_NaN();
};

// Nested partitions of a DiscreteSpace. Holds a pointer to the space, which
// must outlive the lattice.
class DyadicLattice {
public:
    DyadicLattice() = default;
    // gens[k] lists member sets of generation k; each set must be inside one
    // set of generation k-1. Centers and radii are filled in by the caller.
    DyadicLattice(const DiscreteSpace& space, const std::vector<std::vector<Index>>& gens);

    const DiscreteSpace& space() const { return *space_; }
    const std::vector<Cube>& cubes() const { return cubes_; }
    const Cube& cube(int id) const { return cubes_[id]; }
    Cube& cube_mut(int id) { return cubes_[id]; }
    int num_cubes() const { return static_cast<int>(cubes_.size()); }
    int depth() const { return static_cast<int>(gens_.size()) - 1; }
    const Index& generation(int k) const { return gens_[k]; }
    int locate(int gen, int x) const { return where_[gen][x]; }
    int leaf(int x) const { return where_.back()[x]; }
    bool contains(int outer, int inner) const;  // cube `outer` contains cube `inner`
    int lca(int a, int b) const;

    LatticeParams params;
    std::string label;

    double c_mu0() const;
    // Partition, nesting, mass telescoping and ball containment; empty when valid.
    std::vector<std::string> check() const;
    std::vector<std::string> containment_failures() const;

private:
    const DiscreteSpace* space_ = nullptr;
    std::vector<Cube> cubes_;
    std::vector<Index> gens_;
    std::vector<Index> where_;
};

DyadicLattice build_standard_lattice(const DiscreteSpace& space);

struct HkOptions {
    bool faithful = false;  // require delta <= 1/(12 a0^3)
};
DyadicLattice build_hk_lattice(const DiscreteSpace& space, double delta, HkOptions opt = {});

struct AdjacentSystems {
    std::vector<DyadicLattice> lattices;
    Index shift_values;    // point shift of each lattice
    Index skipped_shifts;  // requested shifts that duplicated an earlier value
    double c_adj = 1.0;
};

struct UncoveredBall {
    int center = 0;
    double radius = 0.0;
    double needed = 0.0;  // best dilation available for this ball
};

// Throws Error(infeasible) naming the first ball that needs more than
// max_c_adj when a finite bound is requested.
AdjacentSystems build_shifted_adjacent(const DiscreteSpace& space, int shifts,
                                       double max_c_adj = std::numeric_limits<double>::infinity());

// Best dilation of B(x,r) achievable with one cube of one lattice.
double cover_dilation(const std::vector<DyadicLattice>& lattices, int x, double r);
double covering_constant(const std::vector<DyadicLattice>& lattices);

struct CoverResult {
    int system = 0;
    int cube = 0;
};
CoverResult adjacent_cover(const AdjacentSystems& sys, const Ball& ball);

struct SparseFamily {
    const DyadicLattice* lattice = nullptr;
    Index cubes;
    std::vector<Index> witnesses;  // parallel to cubes
    double delta = 0.0;
};

struct SparseViolation {
    int cube = 0;
    std::string reason;
};

struct SparseReport {
    bool pass = true;
    double realized_delta = 1.0;  // min mu(E_Q)/mu(Q)
    std::vector<SparseViolation> violations;
};

SparseReport verify_sparse(const SparseFamily& family);

// Deepest cubes first; E_Q takes the lightest free points of Q until it holds delta mu(Q).
SparseFamily select_witnesses(const DyadicLattice& lattice, Index cubes, double delta);

// Largest delta such that every witness has mass >= delta * mu(Q); used to
// declare a delta for families whose witnesses are already fixed.
double declared_delta(const DyadicLattice& lattice, const Index& cubes, const std::vector<Index>& witnesses);

}  // namespace sl

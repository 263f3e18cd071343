#pragma once
// Shared pieces of the check implementations.

#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "sparselab/verify.hpp"

namespace sl::detail {

constexpr double kTol = 1e-10;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline bool le(double a, double b) { return a <= b + kTol * std::max(std::abs(a), std::abs(b)); }

using Data = std::vector<std::pair<std::string, Vec>>;

struct Trial {
    double ratio = 0.0;      // worst ratio of the trial
    double ratio_min = kNaN; // two-sided monitors only
    double constant = kNaN;  // explicit constant used
    std::vector<std::string> errors;
    Data data;
    std::vector<std::pair<std::string, double>> max_metrics;
    std::vector<std::pair<std::string, double>> sum_metrics;
};

// Grid space and its standard lattice; not movable because the lattice points into the space.
struct Env {
    DiscreteSpace s;
    DyadicLattice lat;
    Env(int n, Vec masses) : s(DiscreteSpace::grid(n, std::move(masses))), lat(build_standard_lattice(s)) {}
    Env(const Env&) = delete;
    Env& operator=(const Env&) = delete;
};

// Uniform masses on even trials, masses in [0.5, 1.5) on odd ones.
Vec trial_masses(std::mt19937_64& rng, int n, int trial);
double trial_spread(const CheckSpec& spec, int trial);
double uniform(std::mt19937_64& rng, double lo, double hi);
double normal(std::mt19937_64& rng);

// p_i in [pmin, pmax], eta = frac * sum 1/p_i with frac in [0, eta_frac), q = 1/(sum 1/p_i - eta).
ExponentConfig random_config(std::mt19937_64& rng, int m, double pmin, double pmax, double eta_frac, double gamma);

double integral(const DiscreteSpace& s, const Vec& f, const Weight& w);    // sum f w mu
double integral_on(const DiscreteSpace& s, const Index& e, const Vec& f, const Weight& w);
Vec family_data(const SparseFamily& S);  // cube ids then, per cube, -1 and the witness points
Vec to_vec(const Index& idx);

// Nested cubes from the root down a random path, witnesses Q_k minus Q_{k+1}.
SparseFamily random_chain(const DyadicLattice& lat, std::mt19937_64& rng);

// Checks living in verify_symbols.cpp.
Trial trial_endpoint_weak(const CheckSpec& spec, int n, std::uint64_t seed, int t);
Trial trial_caopro(const CheckSpec& spec, int n, std::uint64_t seed, int t);
Trial trial_bloom_maximal(const CheckSpec& spec, int n, std::uint64_t seed, int t);
Trial trial_bloom_iterated(const CheckSpec& spec, int n, std::uint64_t seed, int t);
Trial trial_sharp_commutator(const CheckSpec& spec, int n, std::uint64_t seed, int t);
// Young-function chain on a geometric t-grid; returns violation messages.
std::vector<std::string> young_chain_check(int points, double* worst_ratio);

}  // namespace sl::detail

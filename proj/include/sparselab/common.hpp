#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace sl {

using Vec = std::vector<double>;
using Index = std::vector<int>;

enum class ErrorKind { invalid_argument, config, infeasible, internal };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

// Serial is the reference path; parallel runs the same per-point arithmetic
// under OpenMP, so both produce identical bits.
enum class Exec { serial, parallel };

void set_threads(int n);
int max_threads();

// Pairwise summation over a fixed split so the result depends only on the input order.
double pairwise_sum(const double* x, std::size_t n);
inline double pairwise_sum(const Vec& x) { return pairwise_sum(x.data(), x.size()); }

std::uint64_t splitmix64(std::uint64_t x);
// Independent stream for trial `trial` of a run seeded with `seed`.
std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t trial);

double conj_exp(double p);  // p' = p/(p-1)
double binomial(int n, int k);

}  // namespace sl

#pragma once
// Experiment config parsing and report output for the command-line tool.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "sparselab/dyadic.hpp"
#include "sparselab/operators.hpp"
#include "sparselab/space.hpp"
#include "sparselab/weights.hpp"

namespace slcli {

using json = nlohmann::json;

inline constexpr const char* kSchema = "sparselab-report/1";

// Errors carry a JSON pointer to the offending config field and map to exit code 2.
[[noreturn]] void bad(const std::string& ptr, const std::string& msg);

// Member lookup; nullptr when absent. Throws when `obj` is not an object.
const json* member(const json& obj, const std::string& ptr, const char* key);

double number(const json& v, const std::string& ptr);  // number, "0.1" or "1/3"
int integer(const json& v, const std::string& ptr);
std::string text(const json& v, const std::string& ptr);
sl::Vec numbers(const json& v, const std::string& ptr);
sl::Index indices(const json& v, const std::string& ptr);

// {"kind": "grid", "n": 16, "masses": [...]} or {"kind": "explicit", "masses": [...], "metric": [[...]]}
sl::DiscreteSpace read_space(const json& v, const std::string& ptr);
json space_json(const sl::DiscreteSpace& s);

struct LatticeSpec {
    std::string kind = "standard";  // standard | hk
    double delta = 0.5;
    bool faithful = false;
    int shifts = 0;  // adjacent shifted systems; 0 for none
};
LatticeSpec read_lattice(const json& v, const std::string& ptr);
sl::DyadicLattice build_lattice(const sl::DiscreteSpace& s, const LatticeSpec& spec);

// p with either q or eta; gamma, p0, r, q0 optional.
sl::ExponentConfig read_exponents(const json& v, const std::string& ptr);
json exponents_json(const sl::ExponentConfig& c);

// Inline array or a preset: "const", "const:c", "step", "power:a", "random", "random:seed".
sl::Weight read_weight(const json& v, const std::string& ptr, int n, std::uint64_t seed);
// Inline array or "zero", "ones", "random", "random:seed"; random is |normal|, or normal when `sign`.
sl::Vec read_function(const json& v, const std::string& ptr, int n, std::uint64_t seed, bool sign);
sl::Functions read_functions(const json& v, const std::string& ptr, int n, std::uint64_t seed, bool sign);

sl::MultiIndexPair read_pair(const json& v, const std::string& ptr, int m);

json family_json(const sl::SparseFamily& f);

// Write to path.tmp, then rename over path.
void write_atomic(const std::string& path, const std::string& content);
// path with its extension replaced, e.g. out.json -> out.audit.csv
std::string sibling(const std::string& path, const std::string& ext);

}  // namespace slcli

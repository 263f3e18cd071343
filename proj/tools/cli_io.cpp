#include "cli_io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

#include "sparselab/common.hpp"
#include "sparselab/verify.hpp"

namespace slcli {

using sl::Error;
using sl::ErrorKind;

void bad(const std::string& ptr, const std::string& msg) {
    throw Error(ErrorKind::config, (ptr.empty() ? std::string("/") : ptr) + ": " + msg);
}

const json* member(const json& obj, const std::string& ptr, const char* key) {
    if (!obj.is_object()) bad(ptr, "expected an object");
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

namespace {

bool parse_double(const std::string& s, double* out) {
    if (s.empty()) return false;
    errno = 0;
    char* end = nullptr;
    *out = std::strtod(s.c_str(), &end);
    return errno == 0 && end == s.c_str() + s.size();
}

std::string join(const std::string& ptr, const std::string& key) { return ptr + "/" + key; }
std::string join(const std::string& ptr, std::size_t i) { return ptr + "/" + std::to_string(i); }

std::uint64_t preset_seed(const std::string& arg, const std::string& ptr, std::uint64_t fallback) {
    if (arg.empty()) return fallback;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(arg.c_str(), &end, 10);
    if (end != arg.c_str() + arg.size()) bad(ptr, "preset seed '" + arg + "' is not an integer");
    return v;
}

}  // namespace

double number(const json& v, const std::string& ptr) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        const auto slash = s.find('/');
        double a = 0, b = 0;
        if (slash == std::string::npos) {
            if (parse_double(s, &a)) return a;
        } else if (parse_double(s.substr(0, slash), &a) && parse_double(s.substr(slash + 1), &b) && b != 0.0) {
            return a / b;
        }
        bad(ptr, "cannot read '" + s + "' as a number");
    }
    bad(ptr, "expected a number");
}

int integer(const json& v, const std::string& ptr) {
    if (!v.is_number_integer()) bad(ptr, "expected an integer");
    return v.get<int>();
}

std::string text(const json& v, const std::string& ptr) {
    if (!v.is_string()) bad(ptr, "expected a string");
    return v.get<std::string>();
}

sl::Vec numbers(const json& v, const std::string& ptr) {
    if (!v.is_array()) bad(ptr, "expected an array of numbers");
    sl::Vec out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], join(ptr, i)));
    return out;
}

sl::Index indices(const json& v, const std::string& ptr) {
    if (!v.is_array()) bad(ptr, "expected an array of integers");
    sl::Index out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(integer(v[i], join(ptr, i)));
    return out;
}

sl::DiscreteSpace read_space(const json& v, const std::string& ptr) {
    const json* k = member(v, ptr, "kind");
    const std::string kind = k ? text(*k, join(ptr, "kind")) : "grid";
    const json* jm = member(v, ptr, "masses");
    if (kind == "grid") {
        const json* jn = member(v, ptr, "n");
        if (!jn && !jm) bad(join(ptr, "n"), "grid needs n or masses");
        sl::Vec masses = jm ? numbers(*jm, join(ptr, "masses")) : sl::Vec();
        const int n = jn ? integer(*jn, join(ptr, "n")) : static_cast<int>(masses.size());
        if (n < 1 || (n & (n - 1)) != 0) bad(join(ptr, "n"), "grid size must be a power of two");
        if (!jm) masses.assign(n, 1.0);
        if (static_cast<int>(masses.size()) != n) bad(join(ptr, "masses"), "expected n masses");
        try {
            return sl::DiscreteSpace::grid(n, masses);
        } catch (const Error& e) {
            bad(join(ptr, "masses"), e.what());
        }
    }
    if (kind == "explicit") {
        if (!jm) bad(join(ptr, "masses"), "explicit space needs masses");
        const sl::Vec masses = numbers(*jm, join(ptr, "masses"));
        const json* jd = member(v, ptr, "metric");
        if (!jd || !jd->is_array()) bad(join(ptr, "metric"), "explicit space needs an n by n metric");
        const std::size_t n = masses.size();
        if (jd->size() != n) bad(join(ptr, "metric"), "expected " + std::to_string(n) + " rows");
        sl::Vec flat;
        for (std::size_t i = 0; i < n; ++i) {
            sl::Vec row = numbers((*jd)[i], join(join(ptr, "metric"), i));
            if (row.size() != n) bad(join(join(ptr, "metric"), i), "expected " + std::to_string(n) + " entries");
            flat.insert(flat.end(), row.begin(), row.end());
        }
        double a0 = 0.0;
        if (const json* ja = member(v, ptr, "a0")) a0 = number(*ja, join(ptr, "a0"));
        try {
            return sl::DiscreteSpace::from_metric(masses, flat, a0);
        } catch (const Error& e) {
            bad(join(ptr, "metric"), e.what());
        }
    }
    bad(join(ptr, "kind"), "unknown space kind '" + kind + "' (valid: grid, explicit)");
}

json space_json(const sl::DiscreteSpace& s) {
    json j;
    const int n = s.size();
    j["n"] = n;
    j["masses"] = s.masses();
    if (s.kind() == sl::DiscreteSpace::Kind::grid) {
        j["kind"] = "grid";
    } else {
        j["kind"] = "explicit";
        json rows = json::array();
        for (int x = 0; x < n; ++x) {
            sl::Vec row(n);
            for (int y = 0; y < n; ++y) row[y] = s.d(x, y);
            rows.push_back(row);
        }
        j["metric"] = rows;
    }
    return j;
}

LatticeSpec read_lattice(const json& v, const std::string& ptr) {
    LatticeSpec l;
    if (const json* k = member(v, ptr, "kind")) l.kind = text(*k, join(ptr, "kind"));
    if (l.kind != "standard" && l.kind != "hk") bad(join(ptr, "kind"), "unknown lattice kind '" + l.kind + "' (valid: standard, hk)");
    if (const json* d = member(v, ptr, "delta")) l.delta = number(*d, join(ptr, "delta"));
    if (!(l.delta > 0.0 && l.delta < 1.0)) bad(join(ptr, "delta"), "must lie in (0, 1)");
    if (const json* f = member(v, ptr, "faithful")) {
        if (!f->is_boolean()) bad(join(ptr, "faithful"), "expected a boolean");
        l.faithful = f->get<bool>();
    }
    if (const json* s = member(v, ptr, "shifts")) l.shifts = integer(*s, join(ptr, "shifts"));
    if (l.shifts < 0) bad(join(ptr, "shifts"), "must be nonnegative");
    return l;
}

sl::DyadicLattice build_lattice(const sl::DiscreteSpace& s, const LatticeSpec& spec) {
    if (spec.kind == "hk") return sl::build_hk_lattice(s, spec.delta, sl::HkOptions{spec.faithful});
    return sl::build_standard_lattice(s);
}

sl::ExponentConfig read_exponents(const json& v, const std::string& ptr) {
    const json* jp = member(v, ptr, "p");
    if (!jp) bad(join(ptr, "p"), "missing");
    const sl::Vec p = numbers(*jp, join(ptr, "p"));
    if (p.empty()) bad(join(ptr, "p"), "need at least one exponent");
    const json* jq = member(v, ptr, "q");
    const json* je = member(v, ptr, "eta");
    double gamma = 1.0;
    if (const json* g = member(v, ptr, "gamma")) gamma = number(*g, join(ptr, "gamma"));
    double q;
    if (jq) {
        q = number(*jq, join(ptr, "q"));
    } else {
        double s = 0.0;
        for (double pi : p) s += 1.0 / pi;
        const double eta = je ? number(*je, join(ptr, "eta")) : 0.0;
        if (!(s - eta > 0.0)) bad(join(ptr, "eta"), "needs eta < sum 1/p_i");
        q = 1.0 / (s - eta);
    }
    sl::ExponentConfig c = sl::ExponentConfig::make(p, q, gamma);
    if (jq && je && std::abs(number(*je, join(ptr, "eta")) - c.eta) > 1e-12)
        bad(join(ptr, "eta"), "inconsistent with p and q (sum 1/p_i - 1/q = " + std::to_string(c.eta) + ")");
    if (const json* x = member(v, ptr, "p0")) c.p0 = number(*x, join(ptr, "p0"));
    if (const json* x = member(v, ptr, "r")) c.r = number(*x, join(ptr, "r"));
    if (const json* x = member(v, ptr, "q0")) c.q0 = number(*x, join(ptr, "q0"));
    try {
        c.validate();
    } catch (const Error& e) {
        bad(ptr, e.what());
    }
    return c;
}

json exponents_json(const sl::ExponentConfig& c) {
    json j{{"m", c.m}, {"p", c.p}, {"q", c.q}, {"eta", c.eta}, {"p0", c.p0}, {"gamma", c.gamma}, {"r", c.r}};
    if (std::isfinite(c.q0)) j["q0"] = c.q0;
    return j;
}

sl::Weight read_weight(const json& v, const std::string& ptr, int n, std::uint64_t seed) {
    if (v.is_array()) {
        sl::Weight w = numbers(v, ptr);
        if (static_cast<int>(w.size()) != n) bad(ptr, "expected " + std::to_string(n) + " values");
        for (std::size_t i = 0; i < w.size(); ++i)
            if (!(w[i] > 0.0) || !std::isfinite(w[i])) bad(join(ptr, i), "weights must be positive and finite");
        return w;
    }
    const std::string s = text(v, ptr);
    const auto colon = s.find(':');
    const std::string name = s.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : s.substr(colon + 1);
    sl::Weight w(n);
    if (name == "const") {
        double c = 1.0;
        if (!arg.empty() && !(parse_double(arg, &c) && c > 0.0)) bad(ptr, "const needs a positive value");
        w.assign(n, c);
    } else if (name == "step") {
        for (int x = 0; x < n; ++x) w[x] = 2 * x < n ? 1.0 : 2.0;
    } else if (name == "power") {
        double a = 0.0;
        if (!parse_double(arg, &a)) bad(ptr, "power needs an exponent, e.g. power:0.5");
        for (int x = 0; x < n; ++x) w[x] = std::pow((x + 0.5) / n, a);
    } else if (name == "random") {
        std::mt19937_64 rng(preset_seed(arg, ptr, seed));
        w = sl::random_weight(rng, n, 1.0);
    } else {
        bad(ptr, "unknown weight preset '" + s + "' (valid: const, const:c, step, power:a, random, random:seed)");
    }
    return w;
}

sl::Vec read_function(const json& v, const std::string& ptr, int n, std::uint64_t seed, bool sign) {
    if (v.is_array()) {
        sl::Vec f = numbers(v, ptr);
        if (static_cast<int>(f.size()) != n) bad(ptr, "expected " + std::to_string(n) + " values");
        return f;
    }
    const std::string s = text(v, ptr);
    const auto colon = s.find(':');
    const std::string name = s.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : s.substr(colon + 1);
    if (name == "zero") return sl::Vec(n, 0.0);
    if (name == "ones") return sl::Vec(n, 1.0);
    if (name == "random") {
        std::mt19937_64 rng(preset_seed(arg, ptr, seed));
        if (!sign) return sl::random_function(rng, n);
        std::normal_distribution<double> g;
        sl::Vec f(n);
        for (double& y : f) y = g(rng);
        return f;
    }
    bad(ptr, "unknown function preset '" + s + "' (valid: zero, ones, random, random:seed)");
}

sl::Functions read_functions(const json& v, const std::string& ptr, int n, std::uint64_t seed, bool sign) {
    if (!v.is_array() || v.empty()) bad(ptr, "expected a nonempty list of functions");
    sl::Functions out;
    for (std::size_t i = 0; i < v.size(); ++i)
        out.push_back(read_function(v[i], join(ptr, i), n, sl::splitmix64(seed + 0x9e37 * (i + 1) + (sign ? 7 : 0)), sign));
    return out;
}

sl::MultiIndexPair read_pair(const json& v, const std::string& ptr, int m) {
    sl::MultiIndexPair pr;
    auto get = [&](const char* key, sl::Index def) {
        const json* j = member(v, ptr, key);
        return j ? indices(*j, join(ptr, key)) : def;
    };
    pr.k = get("k", sl::Index(m, 0));
    pr.t = get("t", sl::Index(m, 0));
    pr.tau = get("tau", {});
    pr.tau_ell = get("tau_ell", {});
    try {
        pr.validate(m);
    } catch (const Error& e) {
        bad(ptr, e.what());
    }
    return pr;
}

json family_json(const sl::SparseFamily& f) {
    json cubes = json::array();
    for (std::size_t i = 0; i < f.cubes.size(); ++i)
        cubes.push_back({{"id", f.cubes[i]}, {"witness", f.witnesses[i]}});
    return {{"delta", f.delta}, {"cubes", cubes}};
}

void write_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw Error(ErrorKind::config, "cannot write " + tmp);
        os << content;
        if (!os) throw Error(ErrorKind::config, "cannot write " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorKind::config, "cannot move output into place at " + path);
    }
}

std::string sibling(const std::string& path, const std::string& ext) {
    std::filesystem::path p(path);
    p.replace_extension(ext);
    return p.string();
}

}  // namespace slcli

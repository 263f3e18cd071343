// sparselab: command-line front end.
//
// Precedence for shared settings: command-line flags, then config fields, then defaults.
// Exit codes: 0 success, 1 failed check or infeasible computation, 2 configuration error.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "cli_io.hpp"
#include "sparselab/common.hpp"
#include "sparselab/domination.hpp"
#include "sparselab/verify.hpp"

using namespace slcli;
using sl::Error;
using sl::ErrorKind;

namespace {

struct Globals {
    std::string config_path;
    std::uint64_t seed = 1;
    bool seed_set = false;
    int threads = 0;
    std::string out;
    bool audit = false;
    json cfg = json::object();
};

struct Result {
    json report;
    int code = 0;
    std::vector<std::pair<std::string, std::string>> tables;  // (extension, csv)
};

const json& need(const json& cfg, const char* key) {
    const json* j = member(cfg, "", key);
    if (!j) bad(std::string("/") + key, "missing");
    return *j;
}

json header(const std::string& command, const Globals& g) {
    return {{"schema", kSchema}, {"command", command}, {"seed", g.seed}};
}

sl::DiscreteSpace space_of(const Globals& g) { return read_space(need(g.cfg, "space"), "/space"); }

LatticeSpec lattice_spec(const Globals& g) {
    const json* j = member(g.cfg, "", "lattice");
    return j ? read_lattice(*j, "/lattice") : LatticeSpec{};
}

sl::ExponentConfig exponents_of(const Globals& g, int m_default) {
    if (const json* j = member(g.cfg, "", "exponents")) return read_exponents(*j, "/exponents");
    return sl::ExponentConfig::make(sl::Vec(m_default, 2.0), 2.0 / m_default);
}

sl::Functions functions_of(const Globals& g, const char* key, int n, int m, bool sign) {
    if (const json* j = member(g.cfg, "", key)) return read_functions(*j, std::string("/") + key, n, g.seed, sign);
    return read_functions(json(std::vector<std::string>(m, "random")), std::string("/") + key, n, g.seed, sign);
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

// "sparse": {"cubes": [...], "delta": d, "witnesses": [[...]]} or {"random": density, "delta": d}
sl::SparseFamily family_of(const Globals& g, const sl::DyadicLattice& lat) {
    const json& j = need(g.cfg, "sparse");
    const std::string ptr = "/sparse";
    double delta = 0.5;
    const json* jd = member(j, ptr, "delta");
    if (jd) delta = number(*jd, ptr + "/delta");
    if (!(delta > 0.0 && delta <= 1.0)) bad(ptr + "/delta", "must lie in (0, 1]");
    if (const json* jr = member(j, ptr, "random")) {
        const double density = number(*jr, ptr + "/random");
        if (!(density >= 0.0 && density <= 1.0)) bad(ptr + "/random", "density must lie in [0, 1]");
        std::mt19937_64 rng(sl::splitmix64(g.seed));
        return sl::random_sparse_family(lat, rng, density, delta);
    }
    const json* jc = member(j, ptr, "cubes");
    if (!jc) bad(ptr + "/cubes", "give cube ids or a random density");
    const sl::Index cubes = indices(*jc, ptr + "/cubes");
    for (std::size_t i = 0; i < cubes.size(); ++i)
        if (cubes[i] < 0 || cubes[i] >= lat.num_cubes())
            bad(ptr + "/cubes/" + std::to_string(i), "no cube with id " + std::to_string(cubes[i]));
    if (const json* jw = member(j, ptr, "witnesses")) {
        if (!jw->is_array() || jw->size() != cubes.size()) bad(ptr + "/witnesses", "expected one witness set per cube");
        sl::SparseFamily f{&lat, cubes, {}, 0.0};
        for (std::size_t i = 0; i < cubes.size(); ++i) f.witnesses.push_back(indices((*jw)[i], ptr + "/witnesses/" + std::to_string(i)));
        f.delta = jd ? delta : sl::declared_delta(lat, f.cubes, f.witnesses);
        return f;
    }
    return sl::select_witnesses(lat, cubes, delta);
}

json lattice_json(const sl::DyadicLattice& lat, const sl::SparseFamily* fam, std::ostringstream& csv, int system) {
    const sl::DiscreteSpace& s = lat.space();
    std::vector<const sl::Index*> wit(lat.num_cubes(), nullptr);
    if (fam)
        for (std::size_t i = 0; i < fam->cubes.size(); ++i) wit[fam->cubes[i]] = &fam->witnesses[i];
    json cubes = json::array();
    for (const sl::Cube& q : lat.cubes()) {
        json c{{"id", q.id},
               {"generation", q.gen},
               {"index", q.index},
               {"members", q.members},
               {"parent", q.parent},
               {"center", q.center},
               {"mass", q.mass},
               {"containment_radius", q.containment_radius},
               {"core_radius", q.core_radius}};
        if (wit[q.id]) c["witness"] = *wit[q.id];
        cubes.push_back(c);
        csv << system << ',' << q.id << ',' << q.gen << ',' << fmt(q.mass) << ','
            << (wit[q.id] ? fmt(s.mass_of(*wit[q.id])) : "") << '\n';
    }
    return {{"label", lat.label},
            {"depth", lat.depth()},
            {"num_cubes", lat.num_cubes()},
            {"c_mu0", lat.c_mu0()},
            {"check_failures", lat.check()},
            {"containment_failures", lat.containment_failures()},
            {"cubes", cubes}};
}

Result cmd_space(const Globals& g) {
    const sl::DiscreteSpace s = space_of(g);
    Result r;
    r.report = header("space", g);
    r.report["space"] = space_json(s);
    r.report["a0"] = s.a0();
    r.report["a0_exact"] = s.a0_computed();
    r.report["doubling_constant"] = sl::doubling_constant(s);
    r.report["diameter"] = s.diameter();
    r.report["total_mass"] = s.total_mass();
    return r;
}

Result cmd_lattice(const Globals& g) {
    const sl::DiscreteSpace s = space_of(g);
    const LatticeSpec spec = lattice_spec(g);
    Result r;
    r.report = header("lattice", g);
    r.report["space"] = space_json(s);
    std::ostringstream csv;
    csv << "system,id,k,mu_Q,mu_E\n";
    json systems = json::array();
    bool ok = true;
    auto add = [&](const sl::DyadicLattice& lat, int k) {
        std::optional<sl::SparseFamily> fam;
        if (k == 0 && member(g.cfg, "", "sparse")) fam = family_of(g, lat);
        json j = lattice_json(lat, fam ? &*fam : nullptr, csv, k);
        if (fam) {
            const sl::SparseReport rep = sl::verify_sparse(*fam);
            j["sparse"] = {{"pass", rep.pass}, {"declared_delta", fam->delta}, {"realized_delta", rep.realized_delta}};
            ok = ok && rep.pass;
        }
        ok = ok && j["check_failures"].empty() && j["containment_failures"].empty();
        systems.push_back(j);
    };
    if (spec.shifts > 0) {
        if (spec.kind != "standard") bad("/lattice/kind", "shifted systems are built from the standard lattice");
        const sl::AdjacentSystems sys = sl::build_shifted_adjacent(s, spec.shifts);
        for (std::size_t k = 0; k < sys.lattices.size(); ++k) add(sys.lattices[k], static_cast<int>(k));
        r.report["c_adj"] = sys.c_adj;
        r.report["shift_values"] = sys.shift_values;
        r.report["skipped_shifts"] = sys.skipped_shifts;
    } else {
        add(build_lattice(s, spec), 0);
    }
    r.report["systems"] = systems;
    r.report["pass"] = ok;
    r.code = ok ? 0 : 1;
    r.tables.push_back({".csv", csv.str()});
    return r;
}

Result cmd_constants(const Globals& g) {
    const sl::DiscreteSpace s = space_of(g);
    const sl::DyadicLattice lat = build_lattice(s, lattice_spec(g));
    const json* jw = member(g.cfg, "", "weights");
    const int n = s.size();
    std::vector<sl::Weight> w;
    std::optional<sl::Weight> u;
    if (jw) {
        if (const json* ws = member(*jw, "/weights", "w")) {
            if (!ws->is_array() || ws->empty()) bad("/weights/w", "expected a nonempty list of weights");
            for (std::size_t i = 0; i < ws->size(); ++i)
                w.push_back(read_weight((*ws)[i], "/weights/w/" + std::to_string(i), n, sl::splitmix64(g.seed + 31 * (i + 1))));
        }
        if (const json* ju = member(*jw, "/weights", "u")) u = read_weight(*ju, "/weights/u", n, sl::splitmix64(g.seed));
    }
    const sl::ExponentConfig cfg = exponents_of(g, w.empty() ? 1 : static_cast<int>(w.size()));
    if (w.empty()) w.assign(cfg.m, sl::Weight(n, 1.0));
    if (static_cast<int>(w.size()) != cfg.m) bad("/weights/w", "expected m = " + std::to_string(cfg.m) + " weights");

    std::vector<std::string> kinds;
    if (const json* jk = member(g.cfg, "", "kinds")) {
        if (!jk->is_array()) bad("/kinds", "expected a list of weight kinds");
        for (std::size_t i = 0; i < jk->size(); ++i) kinds.push_back(text((*jk)[i], "/kinds/" + std::to_string(i)));
    } else {
        kinds = {"A_p", "A_inf_fujii", "A_pq_star", "A_pq", "W_inf", "H_inf"};
    }

    Result r;
    r.report = header("constants", g);
    r.report["exponents"] = exponents_json(cfg);
    std::ostringstream csv;
    csv << "kind,index,value,argmax\n";
    json rows = json::array();
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        const std::string ptr = "/kinds/" + std::to_string(i);
        sl::WeightKind kind;
        try {
            kind = sl::parse_weight_kind(kinds[i]);
        } catch (const Error& e) {
            bad(ptr, e.what());
        }
        sl::WeightInputs in{sl::Weight(n, 1.0), w};
        if (u) {
            in.u = *u;
        } else if (kind == sl::WeightKind::A_pq_star || kind == sl::WeightKind::A_pq) {
            for (int k = 0; k < cfg.m; ++k)
                for (int x = 0; x < n; ++x)
                    in.u[x] *= kind == sl::WeightKind::A_pq ? w[k][x] : std::pow(w[k][x], cfg.q / cfg.p[k]);
        } else if (kind == sl::WeightKind::W_inf_i || kind == sl::WeightKind::H_inf_i) {
            bad("/weights/u", kinds[i] + " needs u");
        }
        const bool per_index = kind == sl::WeightKind::W_inf_i || kind == sl::WeightKind::H_inf_i;
        for (int idx = 0; idx < (per_index ? cfg.m : 1); ++idx) {
            sl::ConstantResult c;
            try {
                c = sl::weight_constant(kind, lat, in, cfg, idx);
            } catch (const Error& e) {
                if (e.kind() == ErrorKind::infeasible || e.kind() == ErrorKind::internal) throw;
                bad(ptr, e.what());
            }
            rows.push_back({{"kind", kinds[i]}, {"index", idx}, {"value", c.value}, {"argmax", c.argmax}});
            csv << kinds[i] << ',' << idx << ',' << fmt(c.value) << ',' << c.argmax << '\n';
        }
    }
    r.report["constants"] = rows;
    r.tables.push_back({".csv", csv.str()});
    return r;
}

// Contribution of each cube: the operator evaluated on the one-cube family.
std::string per_cube_csv(const sl::SparseFamily& S, const std::function<sl::Vec(const sl::SparseFamily&)>& op) {
    std::ostringstream csv;
    csv << "cube,k,point,contribution\n";
    const sl::DyadicLattice& lat = *S.lattice;
    for (std::size_t i = 0; i < S.cubes.size(); ++i) {
        sl::SparseFamily one{&lat, {S.cubes[i]}, {S.witnesses[i]}, S.delta};
        const sl::Vec v = op(one);
        for (int x : lat.cube(S.cubes[i]).members) csv << S.cubes[i] << ',' << lat.cube(S.cubes[i]).gen << ',' << x << ',' << fmt(v[x]) << '\n';
    }
    return csv.str();
}

Result cmd_sparse(const Globals& g) {
    const sl::DiscreteSpace s = space_of(g);
    const sl::DyadicLattice lat = build_lattice(s, lattice_spec(g));
    const sl::SparseFamily S = family_of(g, lat);
    const sl::ExponentConfig cfg = exponents_of(g, 1);
    const int n = s.size();
    const int m = cfg.m;
    std::string op = "basic";
    if (const json* j = member(g.cfg, "", "operator")) op = text(*j, "/operator");
    const sl::Functions f = functions_of(g, "functions", n, m, false);
    if (static_cast<int>(f.size()) != m) bad("/functions", "expected m = " + std::to_string(m) + " functions");

    std::function<sl::Vec(const sl::SparseFamily&)> eval;
    sl::Functions b;
    sl::MultiIndexPair pr;
    if (op != "basic") {
        if (const json* j = member(g.cfg, "", "pair")) pr = read_pair(*j, "/pair", m);
        else pr = read_pair(json::object(), "/pair", m);
    }
    if (op == "first_order" || op == "higher") {
        b = functions_of(g, "symbols", n, m, true);
        if (static_cast<int>(b.size()) != m) bad("/symbols", "expected m = " + std::to_string(m) + " symbols");
    }
    if (op == "basic") {
        eval = [&](const sl::SparseFamily& F) { return sl::sparse_basic(F, f, cfg); };
    } else if (op == "first_order") {
        eval = [&](const sl::SparseFamily& F) { return sl::sparse_first_order(F, b, f, pr.tau, pr.tau_ell, cfg); };
    } else if (op == "higher") {
        eval = [&](const sl::SparseFamily& F) { return sl::sparse_higher(F, b, f, pr, cfg); };
    } else if (op == "endpoint") {
        eval = [&](const sl::SparseFamily& F) { return sl::sparse_endpoint(F, f, pr.tau, cfg); };
    } else {
        bad("/operator", "unknown operator '" + op + "' (valid: basic, first_order, higher, endpoint)");
    }

    const sl::SparseReport rep = sl::verify_sparse(S);
    Result r;
    r.report = header("sparse", g);
    r.report["operator"] = op;
    r.report["exponents"] = exponents_json(cfg);
    r.report["family"] = family_json(S);
    r.report["sparse"] = {{"pass", rep.pass}, {"realized_delta", rep.realized_delta}};
    r.report["values"] = eval(S);
    r.report["pass"] = rep.pass;
    r.code = rep.pass ? 0 : 1;
    if (g.audit) r.tables.push_back({".cubes.csv", per_cube_csv(S, eval)});
    return r;
}

Result cmd_dominate(const Globals& g) {
    const sl::DiscreteSpace s = space_of(g);
    const int n = s.size();
    const json dj = member(g.cfg, "", "domination") ? need(g.cfg, "domination") : json::object();
    const std::string ptr = "/domination";
    double eta = 0.5;
    if (const json* j = member(dj, ptr, "eta")) eta = number(*j, ptr + "/eta");
    int m = 1;
    if (const json* j = member(g.cfg, "", "functions")) {
        if (!j->is_array()) bad("/functions", "expected a list of functions");
        m = static_cast<int>(j->size());
    }
    if (!(eta >= 0.0 && eta < m)) bad(ptr + "/eta", "must lie in [0, m)");
    const sl::Functions f = functions_of(g, "functions", n, m, false);
    const sl::Functions b = functions_of(g, "symbols", n, m, true);
    if (static_cast<int>(b.size()) != m) bad("/symbols", "expected one symbol per function");
    const sl::MultiIndexPair pr = member(g.cfg, "", "pair") ? read_pair(need(g.cfg, "pair"), "/pair", m)
                                                            : read_pair(json::object(), "/pair", m);
    LatticeSpec ls = lattice_spec(g);
    if (!member(g.cfg, "", "lattice") || !member(need(g.cfg, "lattice"), "/lattice", "shifts")) ls.shifts = 3;
    if (ls.shifts < 1) bad("/lattice/shifts", "domination needs at least one system");
    const sl::AdjacentSystems sys = sl::build_shifted_adjacent(s, ls.shifts);

    sl::DominationConfig cfg = sl::DominationConfig::defaults(s, sys.c_adj);
    if (const json* j = member(dj, ptr, "c_jtilde0")) cfg.c_jtilde0 = number(*j, ptr + "/c_jtilde0");
    if (const json* j = member(dj, ptr, "max_depth")) cfg.max_depth = integer(*j, ptr + "/max_depth");
    if (const json* j = member(dj, ptr, "alpha")) cfg.alpha = number(*j, ptr + "/alpha");
    if (const json* j = member(dj, ptr, "target_delta")) cfg.target_delta = number(*j, ptr + "/target_delta");
    if (const json* j = member(dj, ptr, "r")) cfg.r = number(*j, ptr + "/r");
    try {
        cfg.validate();
    } catch (const Error& e) {
        bad(ptr, e.what());
    }

    const sl::DominationCertificate cert = sl::cz_construct(s, sys, f, b, pr, eta, cfg);
    const sl::DominationReport rep = sl::verify_domination(cert, cert.lhs, cert.rhs);

    sl::Vec finite;
    for (double v : rep.ratio)
        if (std::isfinite(v)) finite.push_back(v);
    std::sort(finite.begin(), finite.end());
    json summary = {{"points", finite.size()}};
    if (!finite.empty()) {
        const std::size_t k = finite.size();
        summary["min"] = finite.front();
        summary["median"] = k % 2 ? finite[k / 2] : 0.5 * (finite[k / 2 - 1] + finite[k / 2]);
        summary["max"] = finite.back();
    }
    json stages = json::array();
    for (const sl::StageRecord& st : cert.stages)
        stages.push_back({{"cube", st.cube},
                          {"depth", st.depth},
                          {"alpha", st.alpha},
                          {"e_mass", st.e_mass},
                          {"stops", st.stops},
                          {"r_system", st.r_system},
                          {"r_cube", st.r_cube},
                          {"rho", st.rho},
                          {"ball_factor", st.ball_factor}});
    json families = json::array();
    for (const sl::SparseFamily& fam : cert.families) families.push_back(family_json(fam));

    Result r;
    r.report = header("dominate", g);
    r.report["certificate"] = {
        {"root_system", cert.root_system},
        {"root_cube", cert.root_cube},
        {"stopping", family_json(cert.stopping)},
        {"families", families},
        {"stages", stages},
        {"constants",
         {{"rho", cert.rho}, {"ball_factor", cert.ball_factor}, {"multiplicity", cert.multiplicity}, {"constant", cert.constant}}},
        {"alpha", cert.alpha},
        {"truncated", cert.truncated},
        {"coverage",
         {{"covered", cert.coverage.covered},
          {"annuli", cert.coverage.annuli},
          {"max_balls", cert.coverage.max_balls},
          {"max_annuli_hit", cert.coverage.max_annuli_hit},
          {"bound", cert.coverage.bound},
          {"dilated_contains_b0", cert.coverage.dilated_contains_b0}}},
        {"ratio_summary", summary},
        {"failures", rep.failures}};
    r.report["c_adj"] = sys.c_adj;
    r.report["pass"] = rep.pass;
    r.code = rep.pass ? 0 : 1;
    if (g.audit) {
        std::ostringstream csv;
        csv << "point,lhs,rhs,residual,ratio\n";
        for (int x = 0; x < n; ++x)
            csv << x << ',' << fmt(cert.lhs[x]) << ',' << fmt(cert.rhs[x]) << ','
                << fmt(cert.residual.empty() ? 0.0 : cert.residual[x]) << ',' << fmt(rep.ratio[x]) << '\n';
        r.tables.push_back({".audit.csv", csv.str()});
    }
    return r;
}

struct VerifyFlags {
    std::vector<std::string> ids;
    int trials = 0;
    int n = 0;
    std::string report;
    bool timing = false;
};

sl::CheckSpec check_spec(const json& j, const std::string& ptr, const Globals& g) {
    sl::CheckSpec sp;
    sp.seed = g.seed;
    if (j.is_string()) {
        sp.check_id = j.get<std::string>();
        return sp;
    }
    const json* id = member(j, ptr, "id");
    if (!id) bad(ptr + "/id", "missing");
    sp.check_id = text(*id, ptr + "/id");
    if (const json* x = member(j, ptr, "trials")) sp.trials = integer(*x, ptr + "/trials");
    if (const json* x = member(j, ptr, "n")) sp.n = integer(*x, ptr + "/n");
    if (const json* x = member(j, ptr, "grids")) sp.grids = indices(*x, ptr + "/grids");
    if (const json* x = member(j, ptr, "mode")) {
        try {
            sp.mode = sl::parse_check_mode(text(*x, ptr + "/mode"));
        } catch (const Error& e) {
            bad(ptr + "/mode", e.what());
        }
    }
    if (const json* x = member(j, ptr, "seed")) sp.seed = static_cast<std::uint64_t>(integer(*x, ptr + "/seed"));
    if (const json* x = member(j, ptr, "weight_spread")) sp.weight_spread = number(*x, ptr + "/weight_spread");
    if (const json* x = member(j, ptr, "sparse_delta")) sp.sparse_delta = number(*x, ptr + "/sparse_delta");
    if (const json* x = member(j, ptr, "baseline")) sp.baseline = number(*x, ptr + "/baseline");
    if (const json* x = member(j, ptr, "max_failures")) sp.max_failures_kept = integer(*x, ptr + "/max_failures");
    if (const json* x = member(j, ptr, "exponents")) sp.config = read_exponents(*x, ptr + "/exponents");
    if (const json* x = member(j, ptr, "pair")) {
        const int m = sp.config ? sp.config->m : static_cast<int>(member(*x, ptr + "/pair", "k") ? (*x)["k"].size() : 0);
        sp.pair = read_pair(*x, ptr + "/pair", m);
    }
    return sp;
}

json report_json(const sl::CheckReport& r, bool timing) {
    json failures = json::array();
    for (const sl::CheckFailure& f : r.failures) {
        json data = json::object();
        for (const auto& [k, v] : f.data) data[k] = v;
        failures.push_back({{"trial", f.trial}, {"n", f.n}, {"seed", f.seed}, {"message", f.message}, {"data", data}});
    }
    json summaries = json::array();
    for (const sl::GridSummary& s : r.summaries)
        summaries.push_back({{"n", s.n}, {"seed", s.seed}, {"worst", s.worst}, {"best", s.best}});
    json metrics = json::object();
    for (const auto& [k, v] : r.metrics) metrics[k] = v;
    json j{{"check_id", r.check_id},
           {"mode", sl::to_string(r.mode)},
           {"trials", r.trials},
           {"pass", r.pass},
           {"failure_count", r.failure_count},
           {"failures", failures},
           {"worst_ratio", r.worst_ratio},
           {"explicit_constant", std::isnan(r.explicit_constant) ? json(nullptr) : json(r.explicit_constant)},
           {"drift", r.drift},
           {"summaries", summaries},
           {"metrics", metrics}};
    if (timing) j["runtime_s"] = r.runtime_s;
    return j;
}

Result cmd_verify(const Globals& g, const VerifyFlags& vf) {
    std::vector<sl::CheckSpec> specs;
    if (!vf.ids.empty()) {
        for (const std::string& id : vf.ids) specs.push_back(check_spec(json(id), "", g));
    } else if (const json* jc = member(g.cfg, "", "checks")) {
        if (!jc->is_array()) bad("/checks", "expected a list of checks");
        for (std::size_t i = 0; i < jc->size(); ++i) specs.push_back(check_spec((*jc)[i], "/checks/" + std::to_string(i), g));
    }
    if (specs.empty()) bad("/checks", "empty check list");
    for (std::size_t i = 0; i < specs.size(); ++i) {
        try {
            sl::find_check(specs[i].check_id);
        } catch (const Error& e) {
            bad("/checks/" + std::to_string(i), e.what());
        }
        if (vf.trials > 0) specs[i].trials = vf.trials;
        if (vf.n > 0) specs[i].n = vf.n;
    }
    Result r;
    r.report = header("verify", g);
    json checks = json::array();
    bool ok = true;
    for (const sl::CheckSpec& sp : specs) {
        const sl::CheckReport rep = sl::run_check(sp);
        ok = ok && rep.pass;
        checks.push_back(report_json(rep, vf.timing));
    }
    r.report["checks"] = checks;
    r.report["pass"] = ok;
    r.code = ok ? 0 : 1;
    return r;
}

struct BenchFlags {
    std::vector<int> sizes;
    int repeats = 0;
};

template <class F>
double best_time(int repeats, F&& fn) {
    double best = 1e300;
    for (int i = 0; i < repeats; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
}

Result cmd_bench(const Globals& g, const BenchFlags& bf) {
    std::vector<int> sizes = bf.sizes;
    int repeats = bf.repeats;
    double density = 0.3;
    if (const json* jb = member(g.cfg, "", "bench")) {
        if (sizes.empty())
            if (const json* x = member(*jb, "/bench", "sizes")) sizes = indices(*x, "/bench/sizes");
        if (repeats == 0)
            if (const json* x = member(*jb, "/bench", "repeats")) repeats = integer(*x, "/bench/repeats");
        if (const json* x = member(*jb, "/bench", "density")) density = number(*x, "/bench/density");
    }
    if (sizes.empty()) sizes = {32, 64, 128, 256};
    if (repeats <= 0) repeats = 3;
    std::sort(sizes.begin(), sizes.end());
    for (int n : sizes)
        if (n < 2 || (n & (n - 1)) != 0) bad("/bench/sizes", "sizes must be powers of two >= 2");
    if (!(density > 0.0 && density <= 1.0)) bad("/bench/density", "must lie in (0, 1]");

    std::ostringstream csv;
    csv << "n,cubes,operator,exec,threads,seconds,max_abs_diff\n";
    json rows = json::array();
    const auto cfg = sl::ExponentConfig::make({2.0, 2.0}, 1.0);
    for (int n : sizes) {
        const auto s = sl::DiscreteSpace::grid_uniform(n);
        const auto lat = sl::build_standard_lattice(s);
        std::mt19937_64 rng(sl::splitmix64(g.seed + n));
        const auto S = sl::random_sparse_family(lat, rng, density, 0.5);
        const sl::Functions f{sl::random_function(rng, n), sl::random_function(rng, n)};
        const sl::FracKernel K(s, 1, 0.5);
        struct Op {
            const char* name;
            std::function<sl::Vec(sl::Exec)> run;
        };
        const Op ops[] = {{"sparse_basic", [&](sl::Exec ex) { return sl::sparse_basic(S, f, cfg, ex); }},
                          {"frac_integral", [&](sl::Exec ex) { return sl::frac_integral(K, {f[0]}, ex); }}};
        for (const Op& op : ops) {
            sl::Vec ref, par;
            const double ts = best_time(repeats, [&] { ref = op.run(sl::Exec::serial); });
            const double tp = best_time(repeats, [&] { par = op.run(sl::Exec::parallel); });
            double diff = 0.0;
            for (int x = 0; x < n; ++x) diff = std::max(diff, std::abs(ref[x] - par[x]));
            for (const auto& [exec, t, th] : {std::tuple{"serial", ts, 1}, std::tuple{"parallel", tp, sl::max_threads()}}) {
                rows.push_back({{"n", n}, {"cubes", S.cubes.size()}, {"operator", op.name}, {"exec", exec},
                                {"threads", th}, {"seconds", t}, {"max_abs_diff", diff}});
                csv << n << ',' << S.cubes.size() << ',' << op.name << ',' << exec << ',' << th << ',' << fmt(t) << ','
                    << fmt(diff) << '\n';
            }
        }
    }
    Result r;
    r.report = header("bench", g);
    r.report["rows"] = rows;
    r.report["repeats"] = repeats;
    r.tables.push_back({".csv", csv.str()});
    return r;
}

void emit(const Globals& g, const Result& r) {
    const std::string text = r.report.dump(2) + "\n";
    if (g.out.empty()) {
        std::cout << text;
        return;
    }
    // Tables first, so a present report implies complete companions.
    for (const auto& [ext, csv] : r.tables) write_atomic(sibling(g.out, ext), csv);
    write_atomic(g.out, text);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sparselab: sparse domination experiments on finite spaces of homogeneous type"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config_path, "JSON experiment config");
    auto* seed_opt = app.add_option("--seed", g.seed, "random seed (overrides the config)");
    app.add_option("--threads", g.threads, "OpenMP threads; 0 keeps the runtime default")->check(CLI::NonNegativeNumber);
    app.add_option("--out", g.out, "report path; companion tables are written next to it");
    app.add_flag("--audit", g.audit, "also write per-cube or per-point audit tables");

    auto* space = app.add_subcommand("space", "describe a space: quasi-metric and doubling constants");
    auto* lattice = app.add_subcommand("lattice", "build dyadic lattices and dump them");
    auto* constants = app.add_subcommand("constants", "weight constants with argmax cubes");
    auto* sparse = app.add_subcommand("sparse", "evaluate a sparse operator on a family");
    sparse->add_flag("--dump-per-cube", g.audit, "same as --audit");
    auto* dominate = app.add_subcommand("dominate", "stopping-time construction and its certificate");
    VerifyFlags vf;
    auto* verify = app.add_subcommand("verify", "run registered checks");
    verify->add_option("checks", vf.ids, "check ids; otherwise the config's check list");
    verify->add_option("--trials", vf.trials, "trials per battery");
    verify->add_option("--n", vf.n, "grid size");
    verify->add_option("--report", vf.report, "same as --out");
    verify->add_flag("--timing", vf.timing, "include runtimes (breaks bit-identical reports)");
    BenchFlags bf;
    auto* bench = app.add_subcommand("bench", "serial against parallel kernel timings");
    bench->add_option("--sizes", bf.sizes, "grid sizes");
    bench->add_option("--repeats", bf.repeats, "repetitions per timing");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (!g.config_path.empty()) {
            std::ifstream is(g.config_path);
            if (!is) throw Error(ErrorKind::config, "cannot read config " + g.config_path);
            try {
                g.cfg = json::parse(is);
            } catch (const json::parse_error& e) {
                throw Error(ErrorKind::config, "config is not valid JSON: " + std::string(e.what()));
            }
            if (!g.cfg.is_object()) bad("", "config must be a JSON object");
        }
        g.seed_set = seed_opt->count() > 0;
        if (!g.seed_set)
            if (const json* j = member(g.cfg, "", "seed")) g.seed = static_cast<std::uint64_t>(integer(*j, "/seed"));
        if (g.threads == 0)
            if (const json* j = member(g.cfg, "", "threads")) g.threads = integer(*j, "/threads");
        if (g.out.empty())
            if (const json* j = member(g.cfg, "", "out")) g.out = text(*j, "/out");
        if (!vf.report.empty()) g.out = vf.report;
        if (g.threads < 0) bad("/threads", "must be nonnegative");
        sl::set_threads(g.threads);

        Result r;
        if (space->parsed()) r = cmd_space(g);
        else if (lattice->parsed()) r = cmd_lattice(g);
        else if (constants->parsed()) r = cmd_constants(g);
        else if (sparse->parsed()) r = cmd_sparse(g);
        else if (dominate->parsed()) r = cmd_dominate(g);
        else if (verify->parsed()) r = cmd_verify(g, vf);
        else r = cmd_bench(g, bf);
        emit(g, r);
        return r.code;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.kind() == ErrorKind::config || e.kind() == ErrorKind::invalid_argument ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

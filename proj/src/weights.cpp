#include "sparselab/weights.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sl {

double avg(const DiscreteSpace& s, const Index& e, const Vec& f, double power) {
    if (!(power > 0.0)) throw Error(ErrorKind::invalid_argument, "average power must be positive");
    Vec num(e.size()), den(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
        double a = std::abs(f[e[i]]);
        num[i] = (power == 1.0 ? a : std::pow(a, power)) * s.mass(e[i]);
        den[i] = s.mass(e[i]);
    }
    double v = pairwise_sum(num) / pairwise_sum(den);
    return power == 1.0 ? v : std::pow(v, 1.0 / power);
}

double avg_w(const DiscreteSpace& s, const Index& e, const Vec& f, const Weight& sigma) {
    Vec num(e.size()), den(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
        num[i] = f[e[i]] * sigma[e[i]] * s.mass(e[i]);
        den[i] = sigma[e[i]] * s.mass(e[i]);
    }
    return pairwise_sum(num) / pairwise_sum(den);
}

double weighted_mass(const DiscreteSpace& s, const Index& e, const Weight& w) {
    Vec v(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) v[i] = w[e[i]] * s.mass(e[i]);
    return pairwise_sum(v);
}

double YoungFunction::operator()(double t) const {
    const double lp = t > 1.0 ? std::log(t) : 0.0;
    switch (kind) {
        case Kind::identity: return t;
        case Kind::llogl: return t * std::pow(1.0 + lp, r);
        case Kind::expl: return std::expm1(std::pow(t, s));
        case Kind::phi_r_ell: return std::pow(t, r) * (1.0 + std::pow(lp, r * ell));
        case Kind::expl_conjugate: return t >= 1.0 ? t * std::log(t) - t + 1.0 : 0.0;
    }
    return t;
}

std::string YoungFunction::name() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::identity: os << "identity"; break;
        case Kind::llogl: os << "LlogL_" << r; break;
        case Kind::expl: os << "expL_" << s; break;
        case Kind::phi_r_ell: os << "phi_" << r << "_" << ell; break;
        case Kind::expl_conjugate: os << "expL_conjugate"; break;
    }
    return os.str();
}

double orlicz_norm(const DiscreteSpace& s, const Index& e, const Vec& f, const YoungFunction& phi) {
    double fmax = 0.0;
    for (int x : e) fmax = std::max(fmax, std::abs(f[x]));
    if (fmax == 0.0) return 0.0;
    Vec mu(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) mu[i] = s.mass(e[i]);
    const double me = pairwise_sum(mu);
    Vec buf(e.size());
    auto level = [&](double lam) {
        for (std::size_t i = 0; i < e.size(); ++i) buf[i] = phi(std::abs(f[e[i]]) / lam) * mu[i];
        return pairwise_sum(buf) / me;
    };
    double hi = fmax;
    int guard = 0;
    while (!(level(hi) <= 1.0)) {
        hi *= 2.0;
        if (++guard > 2000) throw Error(ErrorKind::internal, "orlicz bracket failure (upper)");
    }
    double lo = hi;
    guard = 0;
    while (level(lo) <= 1.0) {
        lo *= 0.5;
        if (++guard > 2000) throw Error(ErrorKind::internal, "orlicz bracket failure (lower)");
    }
    while (hi - lo > 1e-13 * hi) {
        double mid = 0.5 * (lo + hi);
        if (level(mid) <= 1.0)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

ExponentConfig ExponentConfig::make(Vec p, double q, double gamma) {
    ExponentConfig c;
    c.m = static_cast<int>(p.size());
    c.p = std::move(p);
    c.q = q;
    c.gamma = gamma;
    double s = 0.0;
    for (double pi : c.p) s += 1.0 / pi;
    c.eta = s - 1.0 / q;
    return c;
}

void ExponentConfig::validate(bool endpoint) const {
    auto fail = [](const std::string& field, const std::string& why) {
        throw Error(ErrorKind::config, field + ": " + why);
    };
    if (m < 1) fail("m", "must be at least 1");
    if (static_cast<int>(p.size()) != m) fail("p", "must have m entries");
    for (double pi : p)
        if (!(pi > 1.0) || !std::isfinite(pi)) fail("p", "entries must lie in (1, inf)");
    if (!(q > 0.0) || !std::isfinite(q)) fail("q", "must lie in (0, inf)");
    double s = 0.0;
    for (double pi : p) s += 1.0 / pi;
    if (std::abs(eta - (s - 1.0 / q)) > 1e-12) fail("eta", "must equal sum 1/p_i - 1/q");
    if (eta < 0.0 || eta >= m) fail("eta", "must lie in [0, m)");
    if (!(p0 >= 1.0)) fail("p0", "must be >= 1");
    if (!(gamma > 0.0)) fail("gamma", "must be positive");
    if (!(r >= 1.0)) fail("r", "must be >= 1");
    if (endpoint && !(std::abs(q0 - 1.0 / (m - eta)) <= 1e-12)) fail("q0", "must equal 1/(m - eta)");
}

double ExponentConfig::theta() const { return std::min(q, gamma); }

double ExponentConfig::beta() const {
    double b = 1.0 / theta();
    for (double pi : p) b = std::max(b, conj_exp(pi) / q);
    return b;
}

namespace {

const char* kKindNames[] = {"A_p", "A_inf_fujii", "A_pq_star", "A_pq", "W_inf",
                            "H_inf", "W_inf_i", "H_inf_i", "A_1q0_star"};

}  // namespace

std::string to_string(WeightKind k) { return kKindNames[static_cast<int>(k)]; }

WeightKind parse_weight_kind(const std::string& s) {
    for (int i = 0; i < 9; ++i)
        if (s == kKindNames[i]) return static_cast<WeightKind>(i);
    std::string valid;
    for (const char* n : kKindNames) valid += std::string(valid.empty() ? "" : ", ") + n;
    throw Error(ErrorKind::config, "unknown weight kind '" + s + "' (valid: " + valid + ")");
}

Weight dual_weight(const Weight& w, double p) {
    if (!(p > 1.0)) throw Error(ErrorKind::invalid_argument, "dual weight needs p > 1");
    const double e = 1.0 - conj_exp(p);
    Weight out(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) out[i] = std::pow(w[i], e);
    return out;
}

Vec local_dyadic_maximal(const DyadicLattice& lat, int q, const Vec& f) {
    const DiscreteSpace& s = lat.space();
    Vec out(s.size(), 0.0);
    std::vector<std::pair<int, double>> stack{{q, -std::numeric_limits<double>::infinity()}};
    while (!stack.empty()) {
        auto [id, run] = stack.back();
        stack.pop_back();
        const Cube& c = lat.cube(id);
        double v = std::max(run, avg(s, c.members, f, 1.0));
        if (c.children.empty()) {
            for (int x : c.members) out[x] = v;
        } else {
            for (int ch : c.children) stack.push_back({ch, v});
        }
    }
    return out;
}

namespace {

double geo_mean_inv(const DiscreteSpace& s, const Index& e, const Weight& w) {
    Vec l(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) l[i] = -std::log(w[e[i]]) * s.mass(e[i]);
    return std::exp(pairwise_sum(l) / s.mass_of(e));
}

void need(bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorKind::config, what);
}

}  // namespace

ConstantResult weight_constant(WeightKind kind, const DyadicLattice& lat, const WeightInputs& in,
                               const ExponentConfig& cfg, int index) {
    const DiscreteSpace& s = lat.space();
    const int n = s.size();
    const int m = cfg.m;
    auto check_size = [&](const Weight& w, const char* name) {
        need(static_cast<int>(w.size()) == n, std::string(name) + " must have one value per point");
        for (double v : w) need(v > 0.0 && std::isfinite(v), std::string(name) + " must be positive and finite");
    };
    switch (kind) {
        case WeightKind::A_p:
        case WeightKind::A_inf_fujii:
            need(!in.w.empty(), "w[0] required");
            check_size(in.w[0], "w[0]");
            break;
        case WeightKind::A_pq_star:
        case WeightKind::A_pq:
        case WeightKind::W_inf_i:
        case WeightKind::H_inf_i:
            check_size(in.u, "u");
            [[fallthrough]];
        default:
            need(static_cast<int>(in.w.size()) == m, "need m weights");
            for (const auto& w : in.w) check_size(w, "w");
    }
    if ((kind == WeightKind::W_inf_i || kind == WeightKind::H_inf_i)) {
        need(index >= 0 && index < m, "index out of range");
        if (cfg.q <= cfg.gamma) return {1.0, -1};
        if (kind == WeightKind::W_inf_i) need(cfg.p[index] > cfg.gamma, "W_inf_i needs p_i > gamma");
    }
    if (kind == WeightKind::A_1q0_star) need(std::isfinite(cfg.q0) && cfg.q0 > 0.0, "A_1q0_star needs q0");

    // Pointwise powers that do not depend on the cube.
    std::vector<Weight> pre;
    if (kind == WeightKind::A_p) pre.push_back(dual_weight(in.w[0], cfg.p[0]));
    if (kind == WeightKind::A_pq_star)
        for (int i = 0; i < m; ++i) pre.push_back(dual_weight(in.w[i], cfg.p[i]));
    if (kind == WeightKind::A_pq) {
        for (int i = 0; i < m; ++i) {
            const double pp = conj_exp(cfg.p[i]);
            Weight t(n);
            for (int x = 0; x < n; ++x) t[x] = std::pow(in.w[i][x], -pp);
            pre.push_back(std::move(t));
        }
        Weight uq(n);
        for (int x = 0; x < n; ++x) uq[x] = std::pow(in.u[x], cfg.q);
        pre.push_back(std::move(uq));
    }

    ConstantResult best{-std::numeric_limits<double>::infinity(), -1};
    for (const Cube& c : lat.cubes()) {
        const Index& e = c.members;
        const double mq = c.mass;
        double v = 0.0;
        switch (kind) {
            case WeightKind::A_p: {
                const double p = cfg.p[0];
                v = avg(s, e, in.w[0], 1.0) * std::pow(avg(s, e, pre[0], 1.0), p - 1.0);
                break;
            }
            case WeightKind::A_inf_fujii: {
                Vec mx = local_dyadic_maximal(lat, c.id, in.w[0]);
                v = weighted_mass(s, e, mx) / weighted_mass(s, e, in.w[0]);
                break;
            }
            case WeightKind::A_pq_star: {
                v = avg(s, e, in.u, 1.0);
                for (int i = 0; i < m; ++i) v *= std::pow(avg(s, e, pre[i], 1.0), cfg.q / conj_exp(cfg.p[i]));
                break;
            }
            case WeightKind::A_pq: {
                v = std::pow(mq, cfg.eta - m) * std::pow(weighted_mass(s, e, pre[m]), 1.0 / cfg.q);
                for (int i = 0; i < m; ++i) v *= std::pow(weighted_mass(s, e, pre[i]), 1.0 / conj_exp(cfg.p[i]));
                break;
            }
            case WeightKind::W_inf: {
                Weight num(n, 1.0), den(n, 1.0);
                for (int i = 0; i < m; ++i) {
                    Vec mx = local_dyadic_maximal(lat, c.id, in.w[i]);
                    const double a = cfg.q / cfg.p[i];
                    for (int x : e) {
                        num[x] *= std::pow(mx[x], a);
                        den[x] *= std::pow(in.w[i][x], a);
                    }
                }
                v = weighted_mass(s, e, num) / weighted_mass(s, e, den);
                break;
            }
            case WeightKind::H_inf: {
                v = 1.0;
                for (int i = 0; i < m; ++i)
                    v *= std::pow(avg(s, e, in.w[i], 1.0) * geo_mean_inv(s, e, in.w[i]), cfg.q / cfg.p[i]);
                break;
            }
            case WeightKind::W_inf_i: {
                const double g = cfg.gamma;
                const double pig = conj_exp(cfg.p[index] / g);
                const double au = pig / conj_exp(cfg.q / g);
                Weight num(n, 1.0), den(n, 1.0);
                Vec mu_ = local_dyadic_maximal(lat, c.id, in.u);
                for (int x : e) {
                    num[x] = std::pow(mu_[x], au);
                    den[x] = std::pow(in.u[x], au);
                }
                for (int j = 0; j < m; ++j) {
                    if (j == index) continue;
                    const double a = pig / (cfg.p[j] / g);
                    Vec mx = local_dyadic_maximal(lat, c.id, in.w[j]);
                    for (int x : e) {
                        num[x] *= std::pow(mx[x], a);
                        den[x] *= std::pow(in.w[j][x], a);
                    }
                }
                v = weighted_mass(s, e, num) / weighted_mass(s, e, den);
                break;
            }
            case WeightKind::H_inf_i: {
                const double pi = conj_exp(cfg.p[index]);
                const double eu = pi * std::max(1.0 / cfg.gamma - 1.0 / cfg.q, 0.0);
                v = std::pow(avg(s, e, in.u, 1.0) * geo_mean_inv(s, e, in.u), eu);
                for (int j = 0; j < m; ++j) {
                    if (j == index) continue;
                    v *= std::pow(avg(s, e, in.w[j], 1.0) * geo_mean_inv(s, e, in.w[j]), pi / cfg.p[j]);
                }
                break;
            }
            case WeightKind::A_1q0_star: {
                Weight prod(n, 1.0);
                double inf_part = 1.0;
                for (int i = 0; i < m; ++i) {
                    double mn = std::numeric_limits<double>::infinity();
                    for (int x : e) {
                        prod[x] *= std::pow(in.w[i][x], cfg.q0);
                        mn = std::min(mn, in.w[i][x]);
                    }
                    inf_part *= std::pow(mn, -cfg.q0);
                }
                v = avg(s, e, prod, 1.0) * inf_part;
                break;
            }
        }
        if (v > best.value) best = {v, c.id};
    }
    return best;
}

ConstantResult bmo_norm(const DyadicLattice& lat, const Vec& b) {
    return weighted_bmo_norm(lat, b, Weight(lat.space().size(), 1.0));
}

ConstantResult weighted_bmo_norm(const DyadicLattice& lat, const Vec& b, const Weight& nu) {
    const DiscreteSpace& s = lat.space();
    ConstantResult best{0.0, -1};
    for (const Cube& c : lat.cubes()) {
        const double bq = avg_w(s, c.members, b, Weight(s.size(), 1.0));
        Vec osc(c.members.size());
        for (std::size_t i = 0; i < c.members.size(); ++i)
            osc[i] = std::abs(b[c.members[i]] - bq) * s.mass(c.members[i]);
        double v = pairwise_sum(osc) / weighted_mass(s, c.members, nu);
        if (v > best.value || best.argmax < 0) best = {v, c.id};
    }
    return best;
}

}  // namespace sl

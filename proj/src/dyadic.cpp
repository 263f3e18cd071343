#include "sparselab/dyadic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace sl {

DyadicLattice::DyadicLattice(const DiscreteSpace& space, const std::vector<std::vector<Index>>& gens) : space_(&space) {
    const int n = space.size();
    if (gens.empty()) throw Error(ErrorKind::internal, "lattice needs at least one generation");
    gens_.resize(gens.size());
    where_.assign(gens.size(), Index(n, -1));
    for (std::size_t k = 0; k < gens.size(); ++k) {
        std::vector<Index> sets = gens[k];
        for (auto& s : sets) {
            if (s.empty()) throw Error(ErrorKind::internal, "empty cube");
            std::sort(s.begin(), s.end());
        }
        std::sort(sets.begin(), sets.end(), [](const Index& a, const Index& b) { return a[0] < b[0]; });
        for (std::size_t a = 0; a < sets.size(); ++a) {
            Cube c;
            c.id = static_cast<int>(cubes_.size());
            c.gen = static_cast<int>(k);
            c.index = static_cast<int>(a);
            c.members = sets[a];
            c.center = c.members[c.members.size() / 2];
            c.mass = space.mass_of(c.members);
            for (int x : c.members) {
                if (x < 0 || x >= n) throw Error(ErrorKind::internal, "cube member out of range");
                if (where_[k][x] != -1) {
                    std::ostringstream os;
                    os << "generation " << k << " assigns point " << x << " twice";
                    throw Error(ErrorKind::internal, os.str());
                }
                where_[k][x] = c.id;
            }
            if (k > 0) {
                c.parent = where_[k - 1][c.members[0]];
                for (int x : c.members)
                    if (where_[k - 1][x] != c.parent) {
                        std::ostringstream os;
                        os << "generation " << k << " cube " << a << " straddles two parents";
                        throw Error(ErrorKind::internal, os.str());
                    }
                cubes_[c.parent].children.push_back(c.id);
            }
            gens_[k].push_back(c.id);
            cubes_.push_back(std::move(c));
        }
        for (int x = 0; x < n; ++x)
            if (where_[k][x] == -1) {
                std::ostringstream os;
                os << "generation " << k << " misses point " << x;
                throw Error(ErrorKind::internal, os.str());
            }
    }
}

bool DyadicLattice::contains(int outer, int inner) const {
    const int g = cubes_[outer].gen;
    while (inner >= 0 && cubes_[inner].gen > g) inner = cubes_[inner].parent;
    return inner == outer;
}

int DyadicLattice::lca(int a, int b) const {
    while (a != b) {
        if (a < 0 || b < 0) return -1;
        int ga = cubes_[a].gen, gb = cubes_[b].gen;
        if (ga >= gb) a = cubes_[a].parent;
        if (gb >= ga) b = cubes_[b].parent;
    }
    return a;
}

double DyadicLattice::c_mu0() const {
    double c = 1.0;
    for (const Cube& q : cubes_)
        if (q.parent >= 0) c = std::max(c, cubes_[q.parent].mass / q.mass);
    return c;
}

std::vector<std::string> DyadicLattice::containment_failures() const {
    std::vector<std::string> out;
    const DiscreteSpace& s = *space_;
    for (const Cube& q : cubes_) {
        for (int y : q.members)
            if (s.d(q.center, y) > q.containment_radius) {
                std::ostringstream os;
                os << "cube " << q.id << " (gen " << q.gen << ") member " << y << " outside containment ball";
                out.push_back(os.str());
                break;
            }
        const Index& ord = s.order(q.center);
        int cnt = s.ball_count(q.center, q.core_radius);
        for (int i = 0; i < cnt; ++i)
            if (where_[q.gen][ord[i]] != q.id) {
                std::ostringstream os;
                os << "cube " << q.id << " (gen " << q.gen << ") core ball point " << ord[i] << " lies outside";
                out.push_back(os.str());
                break;
            }
    }
    return out;
}

std::vector<std::string> DyadicLattice::check() const {
    std::vector<std::string> out;
    const DiscreteSpace& s = *space_;
    const int n = s.size();
    const double tol = 4e-16 * n * s.total_mass();
    for (std::size_t k = 0; k < gens_.size(); ++k) {
        Index seen(n, 0);
        Vec masses;
        for (int id : gens_[k]) {
            masses.push_back(cubes_[id].mass);
            for (int x : cubes_[id].members) ++seen[x];
        }
        for (int x = 0; x < n; ++x)
            if (seen[x] != 1) {
                std::ostringstream os;
                os << "generation " << k << " covers point " << x << " " << seen[x] << " times";
                out.push_back(os.str());
            }
        double tot = pairwise_sum(masses);
        if (std::abs(tot - s.total_mass()) > tol) {
            std::ostringstream os;
            os << "generation " << k << " mass " << tot << " != " << s.total_mass();
            out.push_back(os.str());
        }
    }
    for (const Cube& q : cubes_) {
        if (q.parent >= 0) {
            const Cube& p = cubes_[q.parent];
            if (!std::includes(p.members.begin(), p.members.end(), q.members.begin(), q.members.end())) {
                std::ostringstream os;
                os << "cube " << q.id << " not inside its parent";
                out.push_back(os.str());
            }
        }
        if (!q.children.empty()) {
            Vec cm;
            std::size_t cnt = 0;
            for (int c : q.children) {
                cm.push_back(cubes_[c].mass);
                cnt += cubes_[c].members.size();
            }
            if (cnt != q.members.size() || std::abs(pairwise_sum(cm) - q.mass) > tol) {
                std::ostringstream os;
                os << "cube " << q.id << " is not the disjoint union of its children";
                out.push_back(os.str());
            }
        } else if (static_cast<std::size_t>(q.gen) + 1 < gens_.size()) {
            std::ostringstream os;
            os << "cube " << q.id << " has no children above the last generation";
            out.push_back(os.str());
        }
        if (!(q.mass > 0.0)) out.push_back("cube " + std::to_string(q.id) + " has zero mass");
    }
    auto cf = containment_failures();
    out.insert(out.end(), cf.begin(), cf.end());
    return out;
}

namespace {

int log2_exact(int n) {
    int l = 0;
    while ((1 << l) < n) ++l;
    return l;
}

void set_realized_radii(DyadicLattice& lat) {
    const DiscreteSpace& s = lat.space();
    for (int id = 0; id < lat.num_cubes(); ++id) {
        Cube& q = lat.cube_mut(id);
        double outer = 0.0;
        for (int y : q.members) outer = std::max(outer, s.d(q.center, y));
        q.containment_radius = outer;
        double core = 0.0;
        for (double r : s.radii(q.center)) {
            int cnt = s.ball_count(q.center, r);
            bool inside = true;
            for (int i = 0; i < cnt && inside; ++i) inside = lat.locate(q.gen, s.order(q.center)[i]) == id;
            if (!inside) break;
            core = r;
        }
        q.core_radius = core;
    }
}

std::vector<std::vector<Index>> shifted_generations(int n, int shift) {
    const int L = log2_exact(n);
    std::vector<std::vector<Index>> gens(L + 1);
    for (int k = 0; k <= L; ++k) {
        const int b = n >> k;
        for (int j = 0; j < (1 << k); ++j) {
            Index block(b);
            for (int i = 0; i < b; ++i) block[i] = (shift + j * b + i) % n;
            std::sort(block.begin(), block.end());
            bool contiguous = block.back() - block.front() + 1 == b;
            if (contiguous) {
                gens[k].push_back(block);
            } else {
                Index lo, hi;
                for (int x : block) (x >= shift ? hi : lo).push_back(x);
                gens[k].push_back(lo);
                gens[k].push_back(hi);
            }
        }
    }
    return gens;
}

double ecc(const DiscreteSpace& s, int x, const Index& pts) {
    double e = 0.0;
    for (int y : pts) e = std::max(e, s.d(x, y));
    return e;
}

}  // namespace

DyadicLattice build_standard_lattice(const DiscreteSpace& space) {
    if (space.kind() != DiscreteSpace::Kind::grid)
        throw Error(ErrorKind::invalid_argument, "standard lattice needs a grid space; use build_hk_lattice");
    const int n = space.size();
    DyadicLattice lat(space, shifted_generations(n, 0));
    lat.label = "standard";
    lat.params.delta = 0.5;
    lat.params.a1 = 1.0 / 3.0;
    lat.params.A1 = 2.0;
    for (int id = 0; id < lat.num_cubes(); ++id) {
        Cube& q = lat.cube_mut(id);
        const double side = std::ldexp(1.0, -q.gen);
        q.center = q.members.front() + static_cast<int>(q.members.size()) / 2;
        q.containment_radius = lat.params.A1 * side;
        q.core_radius = lat.params.a1 * side;
    }
    return lat;
}

DyadicLattice build_hk_lattice(const DiscreteSpace& space, double delta, HkOptions opt) {
    const double a0 = space.a0();
    if (!(delta > 0.0 && delta < 1.0)) throw Error(ErrorKind::invalid_argument, "delta must lie in (0,1)");
    if (opt.faithful && delta > 1.0 / (12.0 * a0 * a0 * a0))
        throw Error(ErrorKind::invalid_argument, "faithful mode needs delta <= 1/(12 a0^3)");
    const int n = space.size();
    // Finest generation: delta^K <= min distance, so every point is a center.
    int K = 0;
    if (n > 1)
        while (std::pow(delta, K) > space.min_distance()) ++K;

    std::vector<Index> centers(K + 1);
    std::vector<char> chosen(n, 0);
    for (int k = 0; k <= K; ++k) {
        const double rad = std::pow(delta, k);
        Index& c = centers[k];
        if (k == 0) {
            c.push_back(0);
            chosen[0] = 1;
        } else {
            c = centers[k - 1];
        }
        for (int x = 0; x < n; ++x) {
            if (chosen[x]) continue;
            bool far = true;
            for (int y : c)
                if (space.d(x, y) < rad) {
                    far = false;
                    break;
                }
            if (far) {
                c.push_back(x);
                chosen[x] = 1;
            }
        }
        for (std::size_t i = 0; i < c.size(); ++i)
            for (std::size_t j = i + 1; j < c.size(); ++j)
                if (space.d(c[i], c[j]) < rad) {
                    std::ostringstream os;
                    os << "generation " << k << ": centers " << c[i] << " and " << c[j] << " violate separation";
                    throw Error(ErrorKind::internal, os.str());
                }
        for (int x = 0; x < n; ++x) {
            bool near = false;
            for (int y : c) near = near || space.d(x, y) < rad;
            if (!near) {
                std::ostringstream os;
                os << "generation " << k << ": net is not maximal at point " << x;
                throw Error(ErrorKind::internal, os.str());
            }
        }
    }

    // anc[k][x]: generation-k center that point x descends from.
    std::vector<Index> anc(K + 1, Index(n, -1));
    for (int x = 0; x < n; ++x) anc[K][x] = x;
    // A child cube goes to the parent center closest to the cube as a set,
    // then closest to the child center, then lowest index. On single points
    // this is plain nearest-center assignment.
    for (int k = K - 1; k >= 0; --k) {
        std::map<int, Index> groups;
        for (int x = 0; x < n; ++x) groups[anc[k + 1][x]].push_back(x);
        Index parent_of(n, -1);
        for (const auto& [c, pts] : groups) {
            std::tuple<double, double, int> best{0.0, 0.0, -1};
            for (int p : centers[k]) {
                double dq = std::numeric_limits<double>::infinity();
                for (int y : pts) dq = std::min(dq, space.d(p, y));
                std::tuple<double, double, int> key{dq, space.d(p, c), p};
                if (std::get<2>(best) < 0 || key < best) best = key;
            }
            parent_of[c] = std::get<2>(best);
        }
        for (int x = 0; x < n; ++x) anc[k][x] = parent_of[anc[k + 1][x]];
    }

    std::vector<std::vector<Index>> gens(K + 1);
    for (int k = 0; k <= K; ++k) {
        std::map<int, Index> groups;
        for (int x = 0; x < n; ++x) groups[anc[k][x]].push_back(x);
        for (auto& [c, pts] : groups) gens[k].push_back(pts);
    }
    DyadicLattice lat(space, gens);
    lat.label = "hk";
    lat.params.delta = delta;
    lat.params.a1 = 1.0 / (3.0 * a0 * a0);
    lat.params.A1 = 2.0 * a0;
    for (int id = 0; id < lat.num_cubes(); ++id) {
        Cube& q = lat.cube_mut(id);
        q.center = anc[q.gen][q.members[0]];
        const double side = std::pow(delta, q.gen);
        q.containment_radius = lat.params.A1 * side;
        q.core_radius = lat.params.a1 * side;
    }
    return lat;
}

double cover_dilation(const std::vector<DyadicLattice>& lattices, int x, double r) {
    const DiscreteSpace& s = lattices.front().space();
    Ball b = s.ball(x, r);
    double best = std::numeric_limits<double>::infinity();
    for (const DyadicLattice& lat : lattices) {
        int q = lat.leaf(b.members[0]);
        for (int y : b.members) q = lat.lca(q, lat.leaf(y));
        double e = ecc(s, x, lat.cube(q).members);
        double dil = r > 0.0 ? e / r : (e == 0.0 ? 1.0 : std::numeric_limits<double>::infinity());
        best = std::min(best, dil);
    }
    return best;
}

namespace {

// Walks every realized ball once per center, growing the smallest covering
// cube of each lattice incrementally. Calls on_ball(x, r, dilation).
template <class F>
void scan_balls(const std::vector<DyadicLattice>& lattices, F&& on_ball) {
    const DiscreteSpace& s = lattices.front().space();
    const int n = s.size();
    const std::size_t L = lattices.size();
    for (int x = 0; x < n; ++x) {
        const Index& ord = s.order(x);
        const Vec& sd = s.sorted_dist(x);
        std::vector<int> cover(L);
        for (std::size_t l = 0; l < L; ++l) cover[l] = lattices[l].leaf(x);
        int i = 0;
        while (i < n) {
            const double r = sd[i];
            while (i < n && sd[i] == r) {
                for (std::size_t l = 0; l < L; ++l) cover[l] = lattices[l].lca(cover[l], lattices[l].leaf(ord[i]));
                ++i;
            }
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t l = 0; l < L; ++l) {
                double e = ecc(s, x, lattices[l].cube(cover[l]).members);
                double dil = r > 0.0 ? e / r : (e == 0.0 ? 1.0 : std::numeric_limits<double>::infinity());
                best = std::min(best, dil);
            }
            if (!on_ball(x, r, best)) return;
        }
    }
}

}  // namespace

double covering_constant(const std::vector<DyadicLattice>& lattices) {
    double c = 1.0;
    scan_balls(lattices, [&](int, double, double dil) {
        c = std::max(c, dil);
        return true;
    });
    return c;
}

AdjacentSystems build_shifted_adjacent(const DiscreteSpace& space, int shifts, double max_c_adj) {
    if (space.kind() != DiscreteSpace::Kind::grid)
        throw Error(ErrorKind::invalid_argument, "shifted systems need a grid space");
    if (shifts < 2 && space.size() > 1) throw Error(ErrorKind::invalid_argument, "shifts must be at least 2");
    const int n = space.size();
    AdjacentSystems sys;
    std::set<int> used;
    for (int t = 0; t < std::max(shifts, 1); ++t) {
        int sh = static_cast<int>((static_cast<long long>(n) * t) / std::max(shifts, 1));
        if (!used.insert(sh).second) {
            sys.skipped_shifts.push_back(t);
            continue;
        }
        if (sh == 0) {
            sys.lattices.push_back(build_standard_lattice(space));
        } else {
            DyadicLattice lat(space, shifted_generations(n, sh));
            lat.label = "shift:" + std::to_string(sh);
            set_realized_radii(lat);
            sys.lattices.push_back(std::move(lat));
        }
        sys.shift_values.push_back(sh);
    }
    UncoveredBall bad;
    bool failed = false;
    double c = 1.0;
    scan_balls(sys.lattices, [&](int x, double r, double dil) {
        if (dil > max_c_adj) {
            bad = {x, r, dil};
            failed = true;
            return false;
        }
        c = std::max(c, dil);
        return true;
    });
    if (failed) {
        std::ostringstream os;
        os << "ball B(" << bad.center << ", " << bad.radius << ") needs dilation " << bad.needed << " > " << max_c_adj;
        throw Error(ErrorKind::infeasible, os.str());
    }
    sys.c_adj = c;
    return sys;
}

CoverResult adjacent_cover(const AdjacentSystems& sys, const Ball& ball) {
    const DiscreteSpace& s = sys.lattices.front().space();
    const double limit = sys.c_adj * ball.radius * (1.0 + 1e-12);
    bool found = false;
    std::tuple<double, int, int, int> best;
    CoverResult res;
    for (std::size_t l = 0; l < sys.lattices.size(); ++l) {
        const DyadicLattice& lat = sys.lattices[l];
        int q = lat.leaf(ball.center);
        for (int y : ball.members) q = lat.lca(q, lat.leaf(y));
        if (ecc(s, ball.center, lat.cube(q).members) > limit) continue;
        while (lat.cube(q).parent >= 0 && lat.cube(lat.cube(q).parent).members.size() == lat.cube(q).members.size())
            q = lat.cube(q).parent;
        const Cube& c = lat.cube(q);
        auto key = std::make_tuple(c.mass, static_cast<int>(l), c.gen, c.index);
        if (!found || key < best) {
            best = key;
            res = {static_cast<int>(l), q};
            found = true;
        }
    }
    if (!found) {
        std::ostringstream os;
        os << "no cube covers B(" << ball.center << ", " << ball.radius << ") within dilation " << sys.c_adj;
        throw Error(ErrorKind::internal, os.str());
    }
    return res;
}

SparseReport verify_sparse(const SparseFamily& f) {
    SparseReport rep;
    const DyadicLattice& lat = *f.lattice;
    const DiscreteSpace& s = lat.space();
    Index owner(s.size(), -1);
    std::set<int> clash;
    if (f.witnesses.size() != f.cubes.size()) {
        rep.pass = false;
        rep.violations.push_back({-1, "witness list does not match cube list"});
        return rep;
    }
    for (std::size_t i = 0; i < f.cubes.size(); ++i) {
        const Cube& q = lat.cube(f.cubes[i]);
        for (int x : f.witnesses[i]) {
            if (!std::binary_search(q.members.begin(), q.members.end(), x)) {
                rep.violations.push_back({q.id, "witness point " + std::to_string(x) + " outside cube"});
                break;
            }
        }
        for (int x : f.witnesses[i]) {
            if (owner[x] >= 0 && owner[x] != static_cast<int>(i)) {
                clash.insert(static_cast<int>(i));
                clash.insert(owner[x]);
            }
            owner[x] = static_cast<int>(i);
        }
        double me = s.mass_of(f.witnesses[i]);
        rep.realized_delta = std::min(rep.realized_delta, me / q.mass);
        if (!(me >= f.delta * q.mass)) {
            std::ostringstream os;
            os << "witness mass " << me << " < " << f.delta << " * " << q.mass;
            rep.violations.push_back({q.id, os.str()});
        }
    }
    for (int i : clash) rep.violations.push_back({f.cubes[i], "witness overlaps another witness"});
    if (f.cubes.empty()) rep.realized_delta = 1.0;
    rep.pass = rep.violations.empty();
    return rep;
}

SparseFamily select_witnesses(const DyadicLattice& lattice, Index cubes, double delta) {
    std::sort(cubes.begin(), cubes.end());
    cubes.erase(std::unique(cubes.begin(), cubes.end()), cubes.end());
    Index ord = cubes;
    std::sort(ord.begin(), ord.end(), [&](int a, int b) {
        const Cube& qa = lattice.cube(a);
        const Cube& qb = lattice.cube(b);
        return std::make_tuple(-qa.gen, qa.index) < std::make_tuple(-qb.gen, qb.index);
    });
    const DiscreteSpace& s = lattice.space();
    std::vector<char> taken(s.size(), 0);
    std::map<int, Index> wit;
    for (int id : ord) {
        const Cube& q = lattice.cube(id);
        Index e;
        for (int x : q.members)
            if (!taken[x]) e.push_back(x);
        std::stable_sort(e.begin(), e.end(), [&](int a, int b) { return s.mass(a) < s.mass(b); });
        double me = 0.0;
        std::size_t k = 0;
        while (k < e.size() && !(me >= delta * q.mass)) me += s.mass(e[k++]);
        e.resize(k);
        std::sort(e.begin(), e.end());
        if (!(me >= delta * q.mass)) {
            std::ostringstream os;
            os << "cube " << id << " (gen " << q.gen << ", index " << q.index << ") keeps only " << me / q.mass
               << " of its mass, below delta = " << delta;
            throw Error(ErrorKind::infeasible, os.str());
        }
        for (int x : e) taken[x] = 1;
        wit[id] = std::move(e);
    }
    SparseFamily f;
    f.lattice = &lattice;
    f.cubes = cubes;
    for (int id : cubes) f.witnesses.push_back(wit[id]);
    f.delta = delta;
    return f;
}

double declared_delta(const DyadicLattice& lattice, const Index& cubes, const std::vector<Index>& witnesses) {
    const DiscreteSpace& s = lattice.space();
    Vec me(cubes.size());
    double d = 1.0;
    for (std::size_t i = 0; i < cubes.size(); ++i) {
        me[i] = s.mass_of(witnesses[i]);
        d = std::min(d, me[i] / lattice.cube(cubes[i]).mass);
    }
    for (;;) {
        bool ok = true;
        for (std::size_t i = 0; i < cubes.size() && ok; ++i) ok = me[i] >= d * lattice.cube(cubes[i]).mass;
        if (ok) return d;
        d = std::nextafter(d, 0.0);
    }
}

}  // namespace sl

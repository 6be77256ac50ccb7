#include "sparsedom/sparse.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace sparsedom {

namespace {

Rational cube_integral(BoxIntegrator const& integ, Cube const& q)
{
    if (integ.mesh().level - q.scale() > 50) return integ.integral(q.to_box());
    return integ.integral(q);
}

Rational cube_average(BoxIntegrator const& integ, Cube const& q)
{
    return cube_integral(integ, q) * pow2(q.scale() * q.dim());
}

void require_nonnegative(StepFunction const& f, char const* what)
{
    if (!f.is_nonnegative()) throw std::invalid_argument(std::string(what) + ": input must be nonnegative");
}

// Maximal cubes below (or equal to) q with average above t, down to the mesh level.
void select_maximal(BoxIntegrator const& integ, Cube const& q, Rational const& t, std::vector<Cube>& out)
{
    int L = integ.mesh().level;
    std::vector<Cube> work{q};
    while (!work.empty()) {
        Cube c = std::move(work.back());
        work.pop_back();
        Rational total = cube_integral(integ, c);
        if (total == 0) continue;
        if (total * pow2(c.scale() * c.dim()) > t) {
            out.push_back(c);
            continue;
        }
        if (c.scale() < L)
            for (auto& ch : children(c)) work.push_back(std::move(ch));
    }
}

// Drops cubes contained in another cube of the list (same grid).
std::vector<Cube> keep_maximal(std::vector<Cube> cubes)
{
    std::sort(cubes.begin(), cubes.end());
    cubes.erase(std::unique(cubes.begin(), cubes.end()), cubes.end());
    std::set<Cube> all(cubes.begin(), cubes.end());
    std::set<int> scales;
    for (auto const& c : cubes) scales.insert(c.scale());
    std::vector<Cube> out;
    for (auto const& c : cubes) {
        bool inner = false;
        for (int s : scales) {
            if (s >= c.scale()) break;
            if (all.count(c.ancestor(s))) {
                inner = true;
                break;
            }
        }
        if (!inner) out.push_back(c);
    }
    return out;
}

std::vector<std::pair<int, Cube>> ordered(SparseFamily const& s)
{
    std::vector<std::pair<int, Cube>> out;
    for (auto const& [k, cubes] : s.levels)
        for (auto const& c : cubes) out.emplace_back(k, c);
    return out;
}

// Member of `level` containing c (same grid), if any.
Cube const* container(std::set<Cube> const& level, std::set<int> const& scales, Cube const& c)
{
    for (int s : scales) {
        if (s > c.scale()) break;
        auto it = level.find(c.ancestor(s));
        if (it != level.end()) return &*it;
    }
    return nullptr;
}

void add_on(StepFunction& out, Cube const& q, Rational const& v)
{
    if (v == 0) return;
    for_each_cell(out.mesh(), cell_range(out.mesh(), q), [&](std::size_t i) { out[i] += v; });
}

} // namespace

std::size_t SparseFamily::size() const
{
    std::size_t n = 0;
    for (auto const& [k, cubes] : levels) n += cubes.size();
    return n;
}

std::vector<std::pair<int, Cube>> SparseFamily::members() const { return ordered(*this); }

FamilyCheck check_sparse(SparseFamily const& s, Mesh const& mesh)
{
    FamilyCheck res;
    auto fail = [&](std::string msg) {
        if (res.ok) res.failure = std::move(msg);
        res.ok = false;
    };
    std::map<int, std::set<Cube>> sets;
    std::map<int, std::set<int>> scales;
    for (auto const& [k, cubes] : s.levels) {
        for (auto const& c : cubes) {
            if (c.grid() != s.grid) fail("cube outside the family grid at level " + std::to_string(k));
            if (!sets[k].insert(c).second) fail("repeated cube at level " + std::to_string(k));
            scales[k].insert(c.scale());
        }
    }
    for (auto const& [k, set] : sets) {
        for (auto const& c : set) {
            auto const* up = container(set, scales[k], c);
            if (up && !(*up == c)) fail("overlapping cubes at level " + std::to_string(k));
        }
    }
    if (!res.ok) return res;

    for (auto it = sets.begin(); it != sets.end(); ++it) {
        auto next = std::next(it);
        if (next == sets.end()) break;
        if (next->first != it->first + 1) {
            fail("gap between levels " + std::to_string(it->first) + " and " + std::to_string(next->first));
            break;
        }
        std::map<Cube, Rational> inside;
        for (auto const& c : next->second) {
            auto const* up = container(it->second, scales[it->first], c);
            if (!up) {
                fail("level " + std::to_string(next->first) + " not nested in level " + std::to_string(it->first));
                continue;
            }
            inside[*up] += c.measure();
        }
        for (auto const& [q, meas] : inside) {
            Rational ratio = meas / q.measure();
            if (ratio > res.worst_packing) res.worst_packing = ratio;
            if (2 * meas > q.measure()) fail("packing condition fails at level " + std::to_string(it->first));
        }
    }
    if (!res.ok) return res;

    std::vector<int> tally(mesh.size(), 0);
    std::vector<char> next_cover(mesh.size());
    for (auto it = sets.begin(); it != sets.end(); ++it) {
        std::fill(next_cover.begin(), next_cover.end(), 0);
        auto next = std::next(it);
        if (next != sets.end())
            for (auto const& c : next->second) for_each_cell(mesh, cell_range(mesh, c), [&](std::size_t i) { next_cover[i] = 1; });
        for (auto const& c : it->second)
            for_each_cell(mesh, cell_range(mesh, c), [&](std::size_t i) {
                if (!next_cover[i] && ++tally[i] > 1) fail("exclusive sets overlap");
            });
    }
    return res;
}

StepFunction exclusive_sum(SparseFamily const& s, Mesh const& mesh, std::vector<Rational> const& weights)
{
    auto mem = s.members();
    if (weights.size() != mem.size()) throw std::invalid_argument("exclusive_sum: one weight per member");
    StepFunction out(mesh);
    std::map<int, std::vector<char>> cover;
    for (auto const& [k, cubes] : s.levels) {
        auto& v = cover[k];
        v.assign(mesh.size(), 0);
        for (auto const& c : cubes) for_each_cell(mesh, cell_range(mesh, c), [&](std::size_t i) { v[i] = 1; });
    }
    for (std::size_t m = 0; m < mem.size(); ++m) {
        auto it = cover.find(mem[m].first + 1);
        for_each_cell(mesh, cell_range(mesh, mem[m].second), [&](std::size_t i) {
            if (it == cover.end() || !it->second[i]) out[i] += weights[m];
        });
    }
    return out;
}

SparseFamily cz_sparse(StepFunction const& f, GridId const& grid)
{
    Mesh const& mesh = f.mesh();
    if (grid.dim() != mesh.dim) throw std::invalid_argument("cz_sparse: grid/mesh dimension mismatch");
    SparseFamily fam(grid);
    if (f.is_zero()) return fam;
    int n = mesh.dim;
    BoxIntegrator integ(f, true);
    StepFunction mf = dyadic_maximal(f, grid);

    Rational min_pos = -1;
    for (auto const& v : mf.values())
        if (v > 0 && (min_pos < 0 || v < min_pos)) min_pos = v;
    auto threshold = [n](int k) { return pow2((n + 1) * k); };
    int k = 0;
    while (threshold(k) >= min_pos) --k;
    while (threshold(k + 1) < min_pos) ++k;

    // first level: climb from the top-scale cubes until the parent average drops
    int top = top_scale(mesh);
    std::set<Cube> tops;
    for (std::size_t i = 0; i < mf.size(); ++i) {
        if (mf[i] == 0) continue;
        auto idx = mesh.unravel(i);
        std::vector<Rational> x(n);
        for (int a = 0; a < n; ++a) x[a] = mesh.cell_center(idx[a]);
        tops.insert(locate(grid, top, x));
    }
    Rational t = threshold(k);
    std::vector<Cube> first;
    for (Cube c : tops) {
        for (int guard = 0; guard < 256 && cube_average(integ, c.parent()) > t; ++guard) c = c.parent();
        select_maximal(integ, c, t, first);
    }
    std::vector<Cube> current = keep_maximal(std::move(first));

    while (!current.empty()) {
        fam.levels[k] = current;
        ++k;
        t = threshold(k);
        std::vector<Cube> next;
        for (auto const& q : current) select_maximal(integ, q, t, next);
        std::sort(next.begin(), next.end());
        current = std::move(next);
    }
    return fam;
}

std::vector<Rational> member_averages(SparseFamily const& s, StepFunction const& f)
{
    BoxIntegrator integ(f, true);
    std::vector<Rational> out;
    for (auto const& [k, c] : s.members()) out.push_back(cube_average(integ, c));
    return out;
}

DecompositionResult median_decompose(StepFunction const& f, Cube const& q0)
{
    Mesh const& mesh = f.mesh();
    int n = mesh.dim;
    int L = mesh.level;
    if (q0.dim() != n) throw std::invalid_argument("median_decompose: cube/mesh dimension mismatch");
    if (q0.scale() > L) throw std::invalid_argument("median_decompose: q0 finer than mesh");
    bool clipped = false;
    cell_range(mesh, q0, &clipped);
    if (clipped) throw std::invalid_argument("median_decompose: q0 leaves the mesh domain");
    if (L - q0.scale() > 24 / n) throw std::invalid_argument("median_decompose: q0 too coarse for the mesh");

    DecompositionResult res;
    res.q0 = q0;
    res.lambda = pow2(-(n + 2));
    res.base_median = median(f, q0.to_box());
    res.family = SparseFamily(q0.grid());
    std::int64_t origin = 3 * mesh.lo * (std::int64_t{1} << L);
    std::map<Cube, Rational> coef;

    struct Active {
        int depth;
        Cube q;
    };
    std::vector<Active> work{{0, q0}};
    while (!work.empty()) {
        Active act = std::move(work.back());
        work.pop_back();
        Cube const& q = act.q;
        auto dist = value_distribution(f, q.to_box());
        Oscillation osc = oscillation(dist, res.lambda);
        Rational mq = median(dist);
        if (act.depth > 0) coef[q] = osc.omega;
        int s = L - q.scale();
        if (s == 0) continue;

        // exceptional set on the leaves (mesh-level cubes of the grid)
        std::int64_t side = std::int64_t{1} << s;
        std::size_t leaves = static_cast<std::size_t>(1) << (s * n);
        std::vector<std::vector<std::uint32_t>> count(static_cast<std::size_t>(s + 1));
        count[static_cast<std::size_t>(s)].assign(leaves, 0);
        Rational bound = 2 * osc.omega;
        for (std::size_t leaf = 0; leaf < leaves; ++leaf) {
            std::vector<std::int64_t> first(n);
            std::size_t rest = leaf;
            for (int a = n - 1; a >= 0; --a) {
                auto r = static_cast<std::int64_t>(rest % static_cast<std::size_t>(side));
                rest /= static_cast<std::size_t>(side);
                first[a] = q.lower3(a) * side + 3 * r - origin;
            }
            Rational const& v = f[mesh.ravel(first)];
            CellRange cells{first, first};
            for (auto& x : cells.last) x += 3;
            for_each_cell(mesh, cells, [&](std::size_t i) {
                if (f[i] != v) throw std::invalid_argument("median_decompose: f not constant on mesh-level grid cubes");
            });
            Rational dev = v - mq;
            if (dev < 0) dev = -dev;
            count[static_cast<std::size_t>(s)][leaf] = dev > bound ? 1 : 0;
        }
        for (int t = s - 1; t >= 0; --t) {
            std::int64_t w = std::int64_t{1} << t;
            auto& up = count[static_cast<std::size_t>(t)];
            auto const& down = count[static_cast<std::size_t>(t + 1)];
            up.assign(static_cast<std::size_t>(1) << (t * n), 0);
            for (std::size_t c = 0; c < down.size(); ++c) {
                std::size_t rest = c, parent = 0, mult = 1;
                for (int a = n - 1; a >= 0; --a) {
                    auto r = static_cast<std::int64_t>(rest % static_cast<std::size_t>(2 * w));
                    rest /= static_cast<std::size_t>(2 * w);
                    parent += static_cast<std::size_t>(r / 2) * mult;
                    mult *= static_cast<std::size_t>(w);
                }
                up[parent] += down[c];
            }
        }

        // maximal subcubes R with |E cap R| >= |R| / 2^{n+1}
        struct Node {
            int t;
            std::vector<std::int64_t> r;
        };
        std::vector<Node> stack;
        for (std::uint32_t bits = 0; bits < (1U << n); ++bits) {
            std::vector<std::int64_t> r(n);
            for (int a = 0; a < n; ++a) r[a] = (bits >> (n - 1 - a)) & 1U;
            stack.push_back({1, r});
        }
        while (!stack.empty()) {
            Node node = std::move(stack.back());
            stack.pop_back();
            std::int64_t w = std::int64_t{1} << node.t;
            std::size_t flat = 0;
            for (int a = 0; a < n; ++a) flat = flat * static_cast<std::size_t>(w) + static_cast<std::size_t>(node.r[a]);
            std::uint64_t cnt = count[static_cast<std::size_t>(node.t)][flat];
            // |E cap R| = cnt 2^{-Ln}, |R| = 2^{-(k+t)n}
            bool selected = (cnt << (n + 1)) >= (std::uint64_t{1} << ((s - node.t) * n));
            if (selected) {
                int k = q.scale() + node.t;
                std::vector<std::int64_t> j(n);
                for (int a = 0; a < n; ++a) {
                    std::int64_t lower3 = q.lower3(a) * w + 3 * node.r[a];
                    std::int64_t rem = lower3 - q0.grid().offset3(a, k);
                    if (rem % 3 != 0) throw std::logic_error("median_decompose: subcube off the grid");
                    j[a] = rem / 3;
                }
                Cube r(q0.grid(), k, std::move(j));
                res.family.levels[act.depth + 1].push_back(r);
                work.push_back({act.depth + 1, std::move(r)});
                continue;
            }
            if (node.t == s) continue;
            for (std::uint32_t bits = 0; bits < (1U << n); ++bits) {
                std::vector<std::int64_t> r(n);
                for (int a = 0; a < n; ++a) r[a] = 2 * node.r[a] + ((bits >> (n - 1 - a)) & 1U);
                stack.push_back({node.t + 1, std::move(r)});
            }
        }
    }
    for (auto& [k, cubes] : res.family.levels) std::sort(cubes.begin(), cubes.end());
    for (auto const& [k, c] : res.family.members()) res.coefficients.push_back(coef.at(c));
    return res;
}

StepFunction decomposition_majorant(StepFunction const& f, DecompositionResult const& d)
{
    StepFunction out = sharp_maximal(f, d.q0, d.lambda) * Rational(4);
    auto mem = d.family.members();
    for (std::size_t i = 0; i < mem.size(); ++i) add_on(out, mem[i].second, 2 * d.coefficients[i]);
    return out;
}

BoundCheck check_decomposition_bound(StepFunction const& f, DecompositionResult const& d)
{
    Mesh const& mesh = f.mesh();
    StepFunction rhs = decomposition_majorant(f, d);
    BoundCheck res;
    for_each_cell(mesh, cell_range(mesh, d.q0), [&](std::size_t i) {
        ++res.cells;
        Rational lhs = f[i] - d.base_median;
        if (lhs < 0) lhs = -lhs;
        double ratio = rhs[i] == 0 ? (lhs == 0 ? 1.0 : 1e300) : to_double(lhs / rhs[i]);
        if (lhs > rhs[i]) {
            ++res.violations;
            res.ok = false;
        }
        if (ratio > res.worst_ratio || res.cells == 1) {
            res.worst_ratio = ratio;
            res.worst_cell = i;
        }
    });
    return res;
}

StepFunction sparse_operator(SparseFamily const& s, StepFunction const& f)
{
    require_nonnegative(f, "sparse_operator");
    BoxIntegrator integ(f);
    StepFunction out(f.mesh());
    for (auto const& [k, c] : s.members()) add_on(out, c, cube_average(integ, c));
    return out;
}

StepFunction shifted_operator(SparseFamily const& s, int m, StepFunction const& f)
{
    require_nonnegative(f, "shifted_operator");
    if (m < 0) throw std::invalid_argument("shifted_operator: m must be nonnegative");
    BoxIntegrator integ(f);
    StepFunction out(f.mesh());
    for (auto const& [k, c] : s.members()) {
        Box d = dilate(c, m);
        add_on(out, c, integ.integral(d) / d.measure());
    }
    return out;
}

std::vector<ShiftedMember> ShiftedFamily::family(GridId const& alpha) const
{
    std::vector<ShiftedMember> out;
    for (auto const& mem : members)
        if (mem.cover.grid() == alpha) out.push_back(mem);
    return out;
}

ShiftedFamily split_families(SparseFamily const& s, int m)
{
    if (m < 0) throw std::invalid_argument("split_families: m must be nonnegative");
    ShiftedFamily sh;
    sh.base = s;
    sh.m = m;
    for (auto const& [k, c] : s.members()) {
        Box d = dilate(c, m);
        Cover cov = cover_cube(d);
        if (!cov.cube.to_box().contains(d) || cov.cube.side() > 6 * pow2(m) * c.side())
            throw std::logic_error("split_families: cover inequality violated");
        sh.members.push_back({k, c, cov.cube});
    }
    return sh;
}

StepFunction amalgam(ShiftedFamily const& sh, GridId const& alpha, StepFunction const& f)
{
    require_nonnegative(f, "amalgam");
    BoxIntegrator integ(f);
    StepFunction out(f.mesh());
    for (auto const& mem : sh.members)
        if (mem.cover.grid() == alpha) add_on(out, mem.cube, cube_average(integ, mem.cover));
    return out;
}

StepFunction amalgam_adjoint(ShiftedFamily const& sh, GridId const& alpha, StepFunction const& f)
{
    require_nonnegative(f, "amalgam_adjoint");
    BoxIntegrator integ(f);
    Mesh const& mesh = f.mesh();
    StepFunction out(mesh);
    // members sharing a cover are merged before touching cells
    std::map<Cube, Rational> by_cover;
    for (auto const& mem : sh.members) {
        if (mem.cover.grid() != alpha) continue;
        by_cover[mem.cover] += integ.integral(mem.cube);
    }
    for (auto const& [cover, mass] : by_cover) {
        bool clipped = false;
        CellRange r = cell_range(mesh, cover, &clipped);
        if (clipped) throw std::out_of_range("amalgam_adjoint: cover cube leaves the mesh domain");
        if (mass == 0) continue;
        Rational v = mass / cover.measure();
        for_each_cell(mesh, r, [&](std::size_t i) { out[i] += v; });
    }
    return out;
}

GoodBadSplit cz_good_bad_split(StepFunction const& f, Rational const& beta)
{
    require_nonnegative(f, "cz_good_bad_split");
    if (beta <= 0) throw std::invalid_argument("cz_good_bad_split: beta must be positive");
    Mesh const& mesh = f.mesh();
    int n = mesh.dim;
    StepFunction mf = hl_maximal(f);

    GoodBadSplit res;
    res.omega = CellSet(n, mesh.level, mesh.lo, mesh.hi);
    std::int64_t P = mesh.dyadic_per_axis();
    for (std::size_t d = 0; d < res.omega.size(); ++d) {
        std::vector<std::int64_t> idx(n);
        std::size_t rest = d;
        bool edge = false;
        for (int a = n - 1; a >= 0; --a) {
            idx[a] = static_cast<std::int64_t>(rest % static_cast<std::size_t>(P));
            rest /= static_cast<std::size_t>(P);
            edge = edge || idx[a] == 0 || idx[a] == P - 1;
            idx[a] *= 3;
        }
        if (mf[mesh.ravel(idx)] > beta) {
            if (edge) throw std::invalid_argument("cz_good_bad_split: level set reaches the domain boundary (beta too small)");
            res.omega.cells[d] = true;
        }
    }

    WhitneyResult w = whitney_decompose(res.omega);
    std::vector<Cube> parts = w.cubes;
    parts.insert(parts.end(), w.residue.begin(), w.residue.end());
    BoxIntegrator integ(f);
    res.good = f;
    for (auto const& q : parts) {
        Rational mean = cube_average(integ, q);
        StepFunction b(mesh);
        for_each_cell(mesh, cell_range(mesh, q), [&](std::size_t i) {
            b[i] = f[i] - mean;
            res.good[i] = mean;
        });
        Rational ratio = mean / beta;
        if (ratio > res.good_constant) res.good_constant = ratio;
        res.bad.push_back({q, mean, std::move(b)});
    }
    return res;
}

namespace {

std::vector<Cube> scale_subcollection(ShiftedFamily const& sh, Cube const& q)
{
    Box qb = q.to_box();
    std::vector<Cube> out;
    for (auto const& mem : sh.members)
        if (qb.contains(mem.cube.to_box()) && q.side() <= 18 * pow2(sh.m) * mem.cube.side()) out.push_back(mem.cube);
    return out;
}

} // namespace

int scale_family_count(ShiftedFamily const& sh, Cube const& q)
{
    std::set<int> scales;
    for (auto const& c : scale_subcollection(sh, q)) scales.insert(c.scale());
    return static_cast<int>(scales.size());
}

int scale_family_overlap(ShiftedFamily const& sh, Cube const& q, Mesh const& mesh)
{
    std::vector<int> tally(mesh.size(), 0);
    int worst = 0;
    for (auto const& c : scale_subcollection(sh, q))
        for_each_cell(mesh, cell_range(mesh, c), [&](std::size_t i) { worst = std::max(worst, ++tally[i]); });
    return worst;
}

Rational weak_type_sup(StepFunction const& g)
{
    std::map<Rational, Rational> mass; // |g| value -> measure
    Rational cm = g.mesh().cell_measure();
    for (auto const& v : g.values()) {
        Rational a = sparsedom::abs(v);
        if (a > 0) mass[a] += cm;
    }
    Rational best = 0, above = 0;
    for (auto it = mass.rbegin(); it != mass.rend(); ++it) {
        above += it->second;
        Rational cand = it->first * above;
        if (cand > best) best = cand;
    }
    return best;
}

} // namespace sparsedom

#include "sparsedom/stepfn.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

namespace sparsedom {

// ---------------------------------------------------------------- Mesh

Mesh::Mesh(int dim_, int level_, std::int64_t lo_, std::int64_t hi_) : dim(dim_), level(level_), lo(lo_), hi(hi_)
{
    if (dim < 1 || dim > 2) throw std::invalid_argument("mesh dimension must be 1 or 2");
    if (level < 1 || level > 20) throw std::invalid_argument("mesh level out of range");
    if (hi <= lo) throw std::invalid_argument("empty mesh domain");
}

std::size_t Mesh::size() const
{
    std::size_t n = 1;
    for (int i = 0; i < dim; ++i) n *= static_cast<std::size_t>(per_axis());
    return n;
}

std::size_t Mesh::dyadic_size() const
{
    std::size_t n = 1;
    for (int i = 0; i < dim; ++i) n *= static_cast<std::size_t>(dyadic_per_axis());
    return n;
}

Rational Mesh::cell_measure() const
{
    Rational s = cell_side(), m = 1;
    for (int i = 0; i < dim; ++i) m *= s;
    return m;
}

Box Mesh::domain() const
{
    return Box(std::vector<Rational>(dim, Rational(mpz_class(static_cast<long>(lo)))),
               std::vector<Rational>(dim, Rational(mpz_class(static_cast<long>(hi)))));
}

Box Mesh::core(int dim) { return Box(std::vector<Rational>(dim, Rational(0)), std::vector<Rational>(dim, Rational(1))); }

std::size_t Mesh::ravel(std::vector<std::int64_t> const& idx) const
{
    std::size_t flat = 0;
    for (int i = 0; i < dim; ++i) flat = flat * static_cast<std::size_t>(per_axis()) + static_cast<std::size_t>(idx[i]);
    return flat;
}

std::vector<std::int64_t> Mesh::unravel(std::size_t flat) const
{
    std::vector<std::int64_t> idx(dim);
    auto N = static_cast<std::size_t>(per_axis());
    for (int i = dim - 1; i >= 0; --i) {
        idx[i] = static_cast<std::int64_t>(flat % N);
        flat /= N;
    }
    return idx;
}

Rational Mesh::to_cells(Rational const& x) const
{
    return (x - Rational(mpz_class(static_cast<long>(lo)))) * 3 * pow2(level);
}

Rational Mesh::cell_lower(std::int64_t i) const
{
    return Rational(mpz_class(static_cast<long>(lo))) + Rational(mpz_class(static_cast<long>(i))) * cell_side();
}

Rational Mesh::cell_center(std::int64_t i) const { return cell_lower(i) + cell_side() / 2; }

std::size_t Mesh::dyadic_of(std::size_t flat) const
{
    auto idx = unravel(flat);
    std::size_t d = 0;
    for (int i = 0; i < dim; ++i) d = d * static_cast<std::size_t>(dyadic_per_axis()) + static_cast<std::size_t>(idx[i] / 3);
    return d;
}

int top_scale(Mesh const& mesh)
{
    std::int64_t target = 64 * (mesh.hi - mesh.lo);
    int k = 0;
    while ((std::int64_t{1} << (-k)) < target) --k;
    return k;
}

// ---------------------------------------------------------------- ranges

bool CellRange::empty() const
{
    for (std::size_t i = 0; i < first.size(); ++i)
        if (last[i] <= first[i]) return true;
    return first.empty();
}

std::size_t CellRange::count() const
{
    if (empty()) return 0;
    std::size_t c = 1;
    for (std::size_t i = 0; i < first.size(); ++i) c *= static_cast<std::size_t>(last[i] - first[i]);
    return c;
}

CellRange cell_range(Mesh const& mesh, Cube const& q, bool* clipped)
{
    if (q.dim() != mesh.dim) throw std::invalid_argument("cube/mesh dimension mismatch");
    if (q.scale() > mesh.level) throw std::invalid_argument("cube finer than mesh level");
    int s = mesh.level - q.scale();
    if (s > 50) throw std::out_of_range("cube too coarse for mesh indexing");
    CellRange r;
    r.first.resize(mesh.dim);
    r.last.resize(mesh.dim);
    bool clip = false;
    std::int64_t origin = 3 * mesh.lo * (std::int64_t{1} << mesh.level);
    std::int64_t N = mesh.per_axis();
    for (int i = 0; i < mesh.dim; ++i) {
        std::int64_t start = q.lower3(i) * (std::int64_t{1} << s) - origin;
        std::int64_t stop = start + 3 * (std::int64_t{1} << s);
        if (start < 0) { start = 0; clip = true; }
        if (stop > N) { stop = N; clip = true; }
        r.first[i] = start;
        r.last[i] = std::max(start, stop);
    }
    if (clipped) *clipped = clip;
    return r;
}

// ---------------------------------------------------------------- StepFunction

StepFunction::StepFunction(Mesh mesh) : mesh_(mesh), values_(mesh.size()) {}

StepFunction::StepFunction(Mesh mesh, std::vector<Rational> values) : mesh_(mesh), values_(std::move(values))
{
    if (values_.size() != mesh_.size()) throw std::invalid_argument("step function size does not match mesh");
}

StepFunction StepFunction::constant(Mesh const& mesh, Rational const& c)
{
    return StepFunction(mesh, std::vector<Rational>(mesh.size(), c));
}

StepFunction StepFunction::from_dyadic(Mesh const& mesh, std::vector<Rational> const& dyadic_values)
{
    if (dyadic_values.size() != mesh.dyadic_size()) throw std::invalid_argument("dyadic value count does not match mesh");
    StepFunction f(mesh);
    for (std::size_t i = 0; i < f.size(); ++i) f.values_[i] = dyadic_values[mesh.dyadic_of(i)];
    return f;
}

StepFunction StepFunction::indicator(Mesh const& mesh, Box const& b)
{
    StepFunction f(mesh);
    Rational cm = mesh.cell_measure();
    for (std::size_t i = 0; i < f.size(); ++i) {
        auto idx = mesh.unravel(i);
        std::vector<Rational> lo(mesh.dim), hi(mesh.dim);
        for (int a = 0; a < mesh.dim; ++a) {
            lo[a] = mesh.cell_lower(idx[a]);
            hi[a] = lo[a] + mesh.cell_side();
        }
        Box cell(std::move(lo), std::move(hi));
        if (!cell.intersects(b)) continue;
        f.values_[i] = cell.intersection(b).measure() / cm;
    }
    return f;
}

StepFunction StepFunction::abs() const
{
    StepFunction out = *this;
    for (auto& v : out.values_)
        if (v < 0) v = -v;
    return out;
}

bool StepFunction::is_zero() const
{
    return std::all_of(values_.begin(), values_.end(), [](Rational const& v) { return v == 0; });
}

bool StepFunction::is_nonnegative() const
{
    return std::all_of(values_.begin(), values_.end(), [](Rational const& v) { return v >= 0; });
}

bool StepFunction::is_grid_constant(GridId const& grid) const
{
    // compare every cell with the first in-domain cell of its level-L grid cube
    for (std::size_t i = 0; i < size(); ++i) {
        auto idx = mesh_.unravel(i);
        auto base = idx;
        for (int a = 0; a < mesh_.dim; ++a) {
            std::int64_t o = grid.offset3(a, mesh_.level);
            std::int64_t phase = ((idx[a] + 3 * mesh_.lo - o) % 3 + 3) % 3;
            base[a] = std::max<std::int64_t>(idx[a] - phase, 0);
        }
        if (values_[i] != values_[mesh_.ravel(base)]) return false;
    }
    return true;
}

StepFunction StepFunction::restricted(Cube const& q) const
{
    StepFunction out(mesh_);
    for_each_cell(mesh_, cell_range(mesh_, q), [&](std::size_t i) { out.values_[i] = values_[i]; });
    return out;
}

StepFunction& StepFunction::operator+=(StepFunction const& o)
{
    if (!(o.mesh_ == mesh_)) throw std::invalid_argument("mesh mismatch");
    for (std::size_t i = 0; i < size(); ++i) values_[i] += o.values_[i];
    return *this;
}

StepFunction& StepFunction::operator-=(StepFunction const& o)
{
    if (!(o.mesh_ == mesh_)) throw std::invalid_argument("mesh mismatch");
    for (std::size_t i = 0; i < size(); ++i) values_[i] -= o.values_[i];
    return *this;
}

StepFunction& StepFunction::operator*=(Rational const& c)
{
    for (auto& v : values_) v *= c;
    return *this;
}

Rational StepFunction::integral() const
{
    Rational s = 0;
    for (auto const& v : values_) s += v;
    return s * mesh_.cell_measure();
}

Rational StepFunction::l1_norm() const
{
    Rational s = 0;
    for (auto const& v : values_) s += sparsedom::abs(v);
    return s * mesh_.cell_measure();
}

Rational StepFunction::l2_norm_squared() const
{
    Rational s = 0;
    for (auto const& v : values_) s += v * v;
    return s * mesh_.cell_measure();
}

Rational StepFunction::inner(StepFunction const& g) const
{
    if (!(g.mesh_ == mesh_)) throw std::invalid_argument("mesh mismatch");
    Rational s = 0;
    for (std::size_t i = 0; i < size(); ++i) s += values_[i] * g.values_[i];
    return s * mesh_.cell_measure();
}

std::vector<double> StepFunction::to_doubles() const
{
    std::vector<double> out(size());
    for (std::size_t i = 0; i < size(); ++i) out[i] = values_[i].get_d();
    return out;
}

// ---------------------------------------------------------------- BoxIntegrator

BoxIntegrator::BoxIntegrator(StepFunction const& f, bool absolute) : mesh_(f.mesh())
{
    int n = mesh_.dim;
    std::int64_t N = mesh_.per_axis();
    stride_.assign(n, 1);
    for (int i = n - 2; i >= 0; --i) stride_[i] = stride_[i + 1] * (N + 1);
    std::size_t total = static_cast<std::size_t>(stride_[0] * (N + 1));
    table_.assign(total, Rational(0));
    auto val = [&](std::size_t i) -> Rational { return absolute ? sparsedom::abs(f[i]) : f[i]; };
    if (n == 1) {
        for (std::int64_t i = 0; i < N; ++i) table_[i + 1] = table_[i] + val(static_cast<std::size_t>(i));
    } else {
        for (std::int64_t i = 0; i < N; ++i) {
            Rational row = 0;
            for (std::int64_t j = 0; j < N; ++j) {
                row += val(static_cast<std::size_t>(i * N + j));
                table_[(i + 1) * stride_[0] + (j + 1)] = table_[i * stride_[0] + (j + 1)] + row;
            }
        }
    }
}

Rational BoxIntegrator::range_sum(CellRange const& r) const
{
    if (r.empty()) return 0;
    int n = mesh_.dim;
    if (n == 1) return table_[r.last[0]] - table_[r.first[0]];
    auto at = [&](std::int64_t a, std::int64_t b) -> Rational const& { return table_[a * stride_[0] + b]; };
    return at(r.last[0], r.last[1]) - at(r.first[0], r.last[1]) - at(r.last[0], r.first[1]) + at(r.first[0], r.first[1]);
}

namespace {

struct Segment {
    std::int64_t first;
    std::int64_t last;
    Rational weight; // fraction of each cell covered
};

std::vector<Segment> axis_segments(Mesh const& mesh, Rational const& a, Rational const& b)
{
    std::vector<Segment> segs;
    Rational ua = mesh.to_cells(a), ub = mesh.to_cells(b);
    Rational N(mpz_class(static_cast<long>(mesh.per_axis())));
    if (ua < 0) ua = 0;
    if (ub > N) ub = N;
    if (ub <= ua) return segs;
    std::int64_t i0 = floor_q(ua).get_si();
    std::int64_t i1 = ceil_q(ub).get_si() - 1;
    if (i0 == i1) {
        segs.push_back({i0, i0 + 1, ub - ua});
        return segs;
    }
    Rational first_w = Rational(mpz_class(static_cast<long>(i0 + 1))) - ua;
    Rational last_w = ub - Rational(mpz_class(static_cast<long>(i1)));
    segs.push_back({i0, i0 + 1, first_w});
    if (i1 > i0 + 1) segs.push_back({i0 + 1, i1, Rational(1)});
    segs.push_back({i1, i1 + 1, last_w});
    return segs;
}

} // namespace

Rational BoxIntegrator::integral(Box const& b) const
{
    int n = mesh_.dim;
    if (b.dim() != n) throw std::invalid_argument("box/mesh dimension mismatch");
    std::vector<std::vector<Segment>> segs(n);
    for (int i = 0; i < n; ++i) {
        segs[i] = axis_segments(mesh_, b.lo[i], b.hi[i]);
        if (segs[i].empty()) return 0;
    }
    Rational total = 0;
    CellRange r;
    r.first.resize(n);
    r.last.resize(n);
    if (n == 1) {
        for (auto const& s : segs[0]) {
            r.first[0] = s.first;
            r.last[0] = s.last;
            total += s.weight * range_sum(r);
        }
    } else {
        for (auto const& s0 : segs[0])
            for (auto const& s1 : segs[1]) {
                r.first = {s0.first, s1.first};
                r.last = {s0.last, s1.last};
                total += s0.weight * s1.weight * range_sum(r);
            }
    }
    return total * mesh_.cell_measure();
}

Rational BoxIntegrator::integral(Cube const& q) const
{
    if (q.scale() > mesh_.level) return integral(q.to_box());
    return range_sum(cell_range(mesh_, q)) * mesh_.cell_measure();
}

Rational average(BoxIntegrator const& f, Box const& b)
{
    Rational m = b.measure();
    if (m <= 0) throw std::invalid_argument("average over a zero-measure box");
    return f.integral(b) / m;
}

Rational average(BoxIntegrator const& f, Cube const& q) { return f.integral(q) / q.measure(); }

Rational average(StepFunction const& f, Box const& b) { return average(BoxIntegrator(f), b); }

// ---------------------------------------------------------------- distributions

std::vector<WeightedValue> value_distribution(StepFunction const& f, Box const& b)
{
    Mesh const& mesh = f.mesh();
    int n = mesh.dim;
    Rational bm = b.measure();
    if (bm <= 0) throw std::invalid_argument("distribution over a zero-measure box");
    std::vector<std::vector<Segment>> segs(n);
    std::vector<WeightedValue> raw;
    bool any = true;
    for (int i = 0; i < n; ++i) {
        segs[i] = axis_segments(mesh, b.lo[i], b.hi[i]);
        if (segs[i].empty()) any = false;
    }
    Rational cm = mesh.cell_measure();
    Rational inside = 0;
    if (any) {
        std::int64_t N = mesh.per_axis();
        auto emit = [&](std::int64_t i, std::int64_t j, Rational const& w) {
            std::size_t flat = n == 1 ? static_cast<std::size_t>(i) : static_cast<std::size_t>(i * N + j);
            Rational m = w * cm;
            inside += m;
            raw.push_back({f[flat], m});
        };
        if (n == 1) {
            for (auto const& s : segs[0])
                for (std::int64_t i = s.first; i < s.last; ++i) emit(i, 0, s.weight);
        } else {
            for (auto const& s0 : segs[0])
                for (auto const& s1 : segs[1])
                    for (std::int64_t i = s0.first; i < s0.last; ++i)
                        for (std::int64_t j = s1.first; j < s1.last; ++j) emit(i, j, s0.weight * s1.weight);
        }
    }
    if (inside < bm) raw.push_back({Rational(0), bm - inside});

    std::sort(raw.begin(), raw.end(), [](WeightedValue const& x, WeightedValue const& y) { return x.value < y.value; });
    std::vector<WeightedValue> merged;
    for (auto& w : raw) {
        if (!merged.empty() && merged.back().value == w.value)
            merged.back().measure += w.measure;
        else
            merged.push_back(std::move(w));
    }
    return merged;
}

DistributionProfile distribution_profile(StepFunction const& f, Box const& b)
{
    auto dist = value_distribution(f, b);
    DistributionProfile p;
    p.box_measure = b.measure();
    std::vector<WeightedValue> absd;
    for (auto& w : dist) {
        if (w.value == 0) {
            p.zero_measure += w.measure;
            continue;
        }
        absd.push_back({sparsedom::abs(w.value), w.measure});
    }
    std::sort(absd.begin(), absd.end(), [](WeightedValue const& x, WeightedValue const& y) { return x.value > y.value; });
    for (auto& w : absd) {
        if (!p.entries.empty() && p.entries.back().value == w.value)
            p.entries.back().measure += w.measure;
        else
            p.entries.push_back(std::move(w));
    }
    return p;
}

Rational rearrangement(DistributionProfile const& p, Rational const& t)
{
    if (t <= 0) throw std::invalid_argument("rearrangement: t must be positive");
    // d(s) = mass of |f| > s ; answer is the smallest s in {0} U values with d(s) <= t
    Rational above = 0; // mass strictly above the current candidate
    Rational answer = p.entries.empty() ? Rational(0) : p.entries.front().value;
    for (std::size_t i = 0; i < p.entries.size(); ++i) {
        // candidate s = entries[i].value has d(s) = mass of entries[0..i-1]
        if (above <= t)
            answer = p.entries[i].value;
        else
            return answer;
        above += p.entries[i].measure;
    }
    if (above <= t) return 0;
    return answer;
}

Rational rearrangement(StepFunction const& f, Box const& b, Rational const& t)
{
    return rearrangement(distribution_profile(f, b), t);
}

Rational median(std::vector<WeightedValue> const& sorted)
{
    if (sorted.empty()) throw std::invalid_argument("median of empty distribution");
    Rational total = 0;
    for (auto const& w : sorted) total += w.measure;
    Rational half = total / 2;
    // scan from the top: above = |{f > v}|, below = |{f < v}|
    Rational above = 0;
    Rational below = total;
    for (std::size_t i = sorted.size(); i-- > 0;) {
        below -= sorted[i].measure;
        if (above <= half && below <= half) return sorted[i].value;
        above += sorted[i].measure;
    }
    throw std::logic_error("median: no candidate satisfied the median conditions");
}

Rational median(StepFunction const& f, Box const& q) { return median(value_distribution(f, q)); }

Oscillation oscillation(std::vector<WeightedValue> const& sorted, Rational const& lambda)
{
    if (lambda <= 0 || lambda >= 1) throw std::invalid_argument("lambda must lie in (0,1)");
    if (sorted.empty()) throw std::invalid_argument("oscillation of empty distribution");
    Rational total = 0;
    for (auto const& w : sorted) total += w.measure;
    Rational need = (1 - lambda) * total;
    Oscillation best{Rational(-1), Rational(0)};
    Rational mass = 0;
    std::size_t j = 0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        while (j < sorted.size() && mass < need) {
            mass += sorted[j].measure;
            ++j;
        }
        if (mass < need) break;
        Rational width = sorted[j - 1].value - sorted[i].value;
        if (best.omega < 0 || width / 2 < best.omega) {
            best.omega = width / 2;
            best.c = (sorted[j - 1].value + sorted[i].value) / 2;
        }
        mass -= sorted[i].measure;
    }
    return best;
}

Rational local_mean_oscillation(StepFunction const& f, Box const& q, Rational const& lambda)
{
    return oscillation(value_distribution(f, q), lambda).omega;
}

// ---------------------------------------------------------------- maximal operators

namespace {

// Values of f on the cells of an aligned cube (with zero for clipped parts),
// each carrying the cell measure.
std::vector<WeightedValue> cube_distribution(StepFunction const& f, Cube const& q)
{
    return value_distribution(f, q.to_box());
}

void enumerate_scale(Mesh const& mesh, GridId const& grid, int k, std::vector<Cube>& out)
{
    out.clear();
    int n = mesh.dim;
    std::vector<std::int64_t> jlo(n), jhi(n);
    Box dom = mesh.domain();
    for (int i = 0; i < n; ++i) {
        std::vector<Rational> plo(n, dom.lo[0]), phi(n, dom.hi[0] - mesh.cell_side() / 2);
        jlo[i] = locate(grid, k, plo).index(i);
        jhi[i] = locate(grid, k, phi).index(i);
    }
    std::vector<std::int64_t> cur = jlo;
    while (true) {
        out.emplace_back(grid, k, cur);
        int ax = n - 1;
        while (ax >= 0) {
            if (++cur[ax] <= jhi[ax]) break;
            cur[ax] = jlo[ax];
            --ax;
        }
        if (ax < 0) return;
    }
}

} // namespace

StepFunction sharp_maximal(StepFunction const& f, Cube const& q0, Rational const& lambda)
{
    Mesh const& mesh = f.mesh();
    if (q0.scale() > mesh.level) throw std::invalid_argument("sharp_maximal: q0 finer than mesh");
    if (lambda <= 0 || lambda >= 1) throw std::invalid_argument("lambda must lie in (0,1)");
    StepFunction out(mesh);
    // top-down: pass the running maximum along the tree
    struct Item {
        Cube q;
        Rational running;
    };
    std::vector<Item> work{{q0, Rational(0)}};
    while (!work.empty()) {
        Item it = std::move(work.back());
        work.pop_back();
        Rational w = oscillation(cube_distribution(f, it.q), lambda).omega;
        Rational run = w > it.running ? w : it.running;
        if (it.q.scale() == mesh.level) {
            for_each_cell(mesh, cell_range(mesh, it.q), [&](std::size_t i) { out[i] = run; });
            continue;
        }
        for (auto& c : children(it.q)) work.push_back({c, run});
    }
    return out;
}

StepFunction dyadic_maximal(StepFunction const& f, GridId const& grid)
{
    Mesh const& mesh = f.mesh();
    BoxIntegrator integ(f, true);
    StepFunction out(mesh);
    std::vector<Cube> cubes;
    for (int k = top_scale(mesh); k <= mesh.level; ++k) {
        enumerate_scale(mesh, grid, k, cubes);
        Rational inv_measure = pow2(k * mesh.dim);
        for (auto const& q : cubes) {
            CellRange r = cell_range(mesh, q);
            if (r.empty()) continue;
            Rational avg = integ.range_sum(r) * mesh.cell_measure() * inv_measure;
            if (avg == 0) continue;
            for_each_cell(mesh, r, [&](std::size_t i) {
                if (avg > out[i]) out[i] = avg;
            });
        }
    }
    return out;
}

namespace {

// avg(a,b) = (P[b]-P[a]) / (b-a); compare x = (s1,l1) > (s2,l2) exactly.
template <class Int>
struct Ratio {
    Int sum;
    std::int64_t len;
};

template <class Int>
bool greater(Ratio<Int> const& x, Ratio<Int> const& y)
{
    return x.sum * static_cast<Int>(y.len) > y.sum * static_cast<Int>(x.len);
}

template <class Int>
std::vector<Ratio<Int>> hl_sweep_1d(std::vector<Int> const& prefix)
{
    auto K = static_cast<std::int64_t>(prefix.size()) - 1;
    std::vector<Ratio<Int>> best(static_cast<std::size_t>(K), Ratio<Int>{Int(0), 1});
    for (std::int64_t a = 0; a < K; ++a) {
        Ratio<Int> run{Int(0), 1};
        for (std::int64_t b = K; b > a; --b) {
            Ratio<Int> cand{prefix[b] - prefix[a], b - a};
            if (greater(cand, run)) run = cand;
            auto& slot = best[static_cast<std::size_t>(b - 1)];
            if (greater(run, slot)) slot = run;
        }
    }
    return best;
}

// out[x] = max of in[p] over positions p in [x - w + 1, x] (clipped), x < K.
template <class Int>
void sliding_max(std::vector<Ratio<Int>> const& in, std::int64_t w, std::int64_t K, std::vector<Ratio<Int>>& out)
{
    auto P = static_cast<std::int64_t>(in.size());
    out.assign(static_cast<std::size_t>(K), Ratio<Int>{Int(0), 1});
    std::deque<std::int64_t> dq;
    for (std::int64_t x = 0; x < K; ++x) {
        if (x < P) {
            while (!dq.empty() && !greater(in[static_cast<std::size_t>(dq.back())], in[static_cast<std::size_t>(x)])) dq.pop_back();
            dq.push_back(x);
        }
        while (!dq.empty() && dq.front() < x - w + 1) dq.pop_front();
        if (!dq.empty()) out[static_cast<std::size_t>(x)] = in[static_cast<std::size_t>(dq.front())];
    }
}

// Best (sum, area) square containing each lattice block of a K x K grid.
template <class Int>
std::vector<Ratio<Int>> hl_sweep_2d(std::vector<Int> const& cells, std::int64_t K, std::int64_t max_side)
{
    auto at = [K](std::int64_t a, std::int64_t b) { return static_cast<std::size_t>(a * (K + 1) + b); };
    std::vector<Int> prefix(static_cast<std::size_t>((K + 1) * (K + 1)), Int(0));
    for (std::int64_t a = 0; a < K; ++a)
        for (std::int64_t b = 0; b < K; ++b)
            prefix[at(a + 1, b + 1)] = cells[static_cast<std::size_t>(a * K + b)] + prefix[at(a, b + 1)] + prefix[at(a + 1, b)] - prefix[at(a, b)];

    std::vector<Ratio<Int>> best(static_cast<std::size_t>(K * K), Ratio<Int>{Int(0), 1});
    std::vector<Ratio<Int>> row, tmp, col, colmax;
    for (std::int64_t t = 1; t <= std::min(K, max_side); ++t) {
        std::int64_t P = K - t + 1;
        // rows: for each position a, max over b-positions covering block y
        std::vector<Ratio<Int>> stage(static_cast<std::size_t>(P * K));
        for (std::int64_t a = 0; a < P; ++a) {
            row.resize(static_cast<std::size_t>(P));
            for (std::int64_t b = 0; b < P; ++b)
                row[static_cast<std::size_t>(b)] = {prefix[at(a + t, b + t)] - prefix[at(a, b + t)] - prefix[at(a + t, b)] + prefix[at(a, b)], t * t};
            sliding_max(row, t, K, tmp);
            std::copy(tmp.begin(), tmp.end(), stage.begin() + a * K);
        }
        for (std::int64_t y = 0; y < K; ++y) {
            col.resize(static_cast<std::size_t>(P));
            for (std::int64_t a = 0; a < P; ++a) col[static_cast<std::size_t>(a)] = stage[static_cast<std::size_t>(a * K + y)];
            sliding_max(col, t, K, colmax);
            for (std::int64_t x = 0; x < K; ++x) {
                auto& slot = best[static_cast<std::size_t>(x * K + y)];
                if (greater(colmax[static_cast<std::size_t>(x)], slot)) slot = colmax[static_cast<std::size_t>(x)];
            }
        }
    }
    return best;
}

// Common denominator D and integer sums of |f| D over stride-s lattice blocks.
std::pair<mpz_class, std::vector<mpz_class>> lattice_sums(StepFunction const& f, std::int64_t s, std::int64_t K)
{
    Mesh const& mesh = f.mesh();
    mpz_class D = 1;
    for (auto const& v : f.values()) mpz_lcm(D.get_mpz_t(), D.get_mpz_t(), v.get_den_mpz_t());
    std::vector<mpz_class> seg(static_cast<std::size_t>(mesh.dim == 1 ? K : K * K));
    for (std::size_t i = 0; i < f.size(); ++i) {
        Rational v = sparsedom::abs(f[i]) * D;
        auto idx = mesh.unravel(i);
        std::size_t block = mesh.dim == 1 ? static_cast<std::size_t>(idx[0] / s) : static_cast<std::size_t>((idx[0] / s) * K + idx[1] / s);
        seg[block] += v.get_num();
    }
    return {D, seg};
}

} // namespace

StepFunction hl_maximal(StepFunction const& f, HlOptions const& opts)
{
    Mesh const& mesh = f.mesh();
    std::int64_t N = mesh.per_axis();
    std::int64_t s = opts.stride;
    if (s < 1 || N % s != 0) throw std::invalid_argument("hl_maximal: stride must divide the cells per axis");
    StepFunction out(mesh);

    if (mesh.dim == 1) {
        std::int64_t K = N / s;
        auto [D, seg] = lattice_sums(f, s, K);
        mpz_class total = 0;
        for (auto const& x : seg) total += x;

        std::vector<std::pair<mpz_class, std::int64_t>> best;
        if (mpz_sizeinbase(total.get_mpz_t(), 2) < 62) {
            std::vector<__int128> prefix(static_cast<std::size_t>(K + 1), 0);
            for (std::int64_t i = 0; i < K; ++i)
                prefix[static_cast<std::size_t>(i + 1)] = prefix[static_cast<std::size_t>(i)] + seg[static_cast<std::size_t>(i)].get_si();
            for (auto const& x : hl_sweep_1d(prefix)) best.emplace_back(mpz_class(static_cast<long>(x.sum)), x.len);
        } else {
            std::vector<mpz_class> prefix(static_cast<std::size_t>(K + 1), 0);
            for (std::int64_t i = 0; i < K; ++i)
                prefix[static_cast<std::size_t>(i + 1)] = prefix[static_cast<std::size_t>(i)] + seg[static_cast<std::size_t>(i)];
            for (auto const& x : hl_sweep_1d(prefix)) best.emplace_back(x.sum, x.len);
        }
        for (std::int64_t i = 0; i < N; ++i) {
            auto const& [sum, len] = best[static_cast<std::size_t>(i / s)];
            Rational v(sum, D * mpz_class(static_cast<long>(len * s)));
            v.canonicalize();
            out[static_cast<std::size_t>(i)] = v;
        }
        return out;
    }

    // n = 2: for each side, sliding-window max of the square sums
    std::int64_t K = N / s;
    std::int64_t max_side = opts.max_side > 0 ? std::max<std::int64_t>(1, opts.max_side / s) : K;
    auto [D, seg] = lattice_sums(f, s, K);
    mpz_class total = 0;
    for (auto const& x : seg) total += x;
    std::vector<std::pair<mpz_class, std::int64_t>> best;
    if (mpz_sizeinbase(total.get_mpz_t(), 2) < 62) {
        std::vector<__int128> cells(seg.size());
        for (std::size_t i = 0; i < seg.size(); ++i) cells[i] = seg[i].get_si();
        for (auto const& x : hl_sweep_2d(cells, K, max_side)) best.emplace_back(mpz_class(static_cast<long>(x.sum)), x.len);
    } else {
        for (auto const& x : hl_sweep_2d(seg, K, max_side)) best.emplace_back(x.sum, x.len);
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        auto idx = mesh.unravel(i);
        auto const& [sum, area] = best[static_cast<std::size_t>((idx[0] / s) * K + idx[1] / s)];
        if (sum == 0) continue;
        Rational v(sum, D * mpz_class(static_cast<long>(area * s * s)));
        v.canonicalize();
        out[i] = v;
    }
    return out;
}

} // namespace sparsedom

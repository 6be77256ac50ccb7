#include "sparsedom/geometry.hpp"

#include <algorithm>
#include <stdexcept>

namespace sparsedom {

GridId::GridId(int dim, std::uint32_t mask) : dim_(dim), mask_(mask)
{
    if (dim < 1 || dim > 16) throw std::invalid_argument("grid dimension out of range");
    if (mask >> dim) throw std::invalid_argument("grid mask has bits beyond dimension");
}

std::vector<GridId> GridId::all(int dim)
{
    std::vector<GridId> grids;
    for (std::uint32_t m = 0; m < (1U << dim); ++m) grids.emplace_back(dim, m);
    return grids;
}

Rational GridId::alpha(int axis) const
{
    return shifted(axis) ? Rational(1, 3) : Rational(0);
}

int GridId::offset3(int axis, int k) const
{
    if (!shifted(axis)) return 0;
    return (k % 2 == 0) ? 1 : -1;
}

Rational GridId::offset(int axis, int k) const { return make_rational(offset3(axis, k), 3); }

// ---------------------------------------------------------------- Box

Box::Box(std::vector<Rational> lo_, std::vector<Rational> hi_) : lo(std::move(lo_)), hi(std::move(hi_))
{
    if (lo.size() != hi.size() || lo.empty()) throw std::invalid_argument("box dimension mismatch");
}

Box Box::cube(std::vector<Rational> corner, Rational const& side)
{
    std::vector<Rational> hi = corner;
    for (auto& h : hi) h += side;
    return Box(std::move(corner), std::move(hi));
}

Rational Box::measure() const
{
    Rational m = 1;
    for (int i = 0; i < dim(); ++i) {
        Rational s = side(i);
        if (s <= 0) return 0;
        m *= s;
    }
    return m;
}

bool Box::is_cube() const
{
    for (int i = 1; i < dim(); ++i)
        if (side(i) != side(0)) return false;
    return true;
}

bool Box::contains(Box const& other) const
{
    for (int i = 0; i < dim(); ++i)
        if (other.lo[i] < lo[i] || other.hi[i] > hi[i]) return false;
    return true;
}

bool Box::intersects(Box const& other) const
{
    for (int i = 0; i < dim(); ++i)
        if (other.hi[i] <= lo[i] || hi[i] <= other.lo[i]) return false;
    return true;
}

Box Box::intersection(Box const& other) const
{
    Box out = *this;
    for (int i = 0; i < dim(); ++i) {
        if (other.lo[i] > out.lo[i]) out.lo[i] = other.lo[i];
        if (other.hi[i] < out.hi[i]) out.hi[i] = other.hi[i];
    }
    return out;
}

// ---------------------------------------------------------------- Cube

Cube::Cube(GridId grid, int k, std::vector<std::int64_t> j) : grid_(grid), k_(k), j_(std::move(j))
{
    if (static_cast<int>(j_.size()) != grid_.dim()) throw std::invalid_argument("cube index dimension mismatch");
}

Rational Cube::measure() const { return pow2(-k_ * dim()); }

std::int64_t Cube::lower3(int axis) const { return 3 * j_[axis] + grid_.offset3(axis, k_); }

Rational Cube::lower(int axis) const
{
    return pow2(-k_) * make_rational(lower3(axis), 3);
}

Rational Cube::upper(int axis) const { return lower(axis) + side(); }

Box Cube::to_box() const
{
    std::vector<Rational> lo, hi;
    for (int i = 0; i < dim(); ++i) {
        lo.push_back(lower(i));
        hi.push_back(upper(i));
    }
    return Box(std::move(lo), std::move(hi));
}

std::int64_t floor_shift(std::int64_t a, int s)
{
    if (s == 0) return a;
    if (s >= 63) return a < 0 ? -1 : 0;
    return a >> s; // arithmetic shift floors for negatives
}

Cube Cube::parent() const { return ancestor(k_ - 1); }

Cube Cube::ancestor(int k) const
{
    if (k > k_) throw std::invalid_argument("ancestor scale finer than cube");
    int s = k_ - k;
    if (s > 60) throw std::out_of_range("ancestor scale gap too large");
    std::vector<std::int64_t> idx(j_.size());
    for (int i = 0; i < dim(); ++i) {
        // lower point p (units 2^{-k_}/3) lies in [3J + o, 3J + o + 3) * 2^s
        std::int64_t p = lower3(i);
        std::int64_t num = p - static_cast<std::int64_t>(grid_.offset3(i, k)) * (std::int64_t{1} << s);
        std::int64_t den = 3 * (std::int64_t{1} << s);
        std::int64_t q = num / den;
        if ((num % den != 0) && ((num < 0) != (den < 0))) --q;
        idx[i] = q;
    }
    return Cube(grid_, k, std::move(idx));
}

bool Cube::contains(Cube const& other) const
{
    if (other.grid_ != grid_) return to_box().contains(other.to_box());
    if (other.k_ < k_) return false;
    return other.ancestor(k_) == *this;
}

bool Cube::intersects(Cube const& other) const
{
    if (other.grid_ != grid_) return to_box().intersects(other.to_box());
    return other.k_ >= k_ ? contains(other) : other.contains(*this);
}

mpz_class floor_q(Rational const& q)
{
    mpz_class r;
    mpz_fdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
    return r;
}

mpz_class ceil_q(Rational const& q)
{
    mpz_class r;
    mpz_cdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
    return r;
}

std::vector<Cube> children(Cube const& q)
{
    int n = q.dim();
    std::vector<Cube> out;
    out.reserve(std::size_t{1} << n);
    for (std::uint32_t c = 0; c < (1U << n); ++c) {
        std::vector<std::int64_t> idx(n);
        for (int i = 0; i < n; ++i) {
            std::int64_t bit = (c >> (n - 1 - i)) & 1U;
            // 3J + o_{k+1} = 2(3j + o_k) + 3 bit, with o_{k+1} = -o_k
            idx[i] = 2 * q.index(i) + q.grid().offset3(i, q.scale()) + bit;
        }
        out.emplace_back(q.grid(), q.scale() + 1, std::move(idx));
    }
    return out;
}

Cube locate(GridId const& grid, int k, std::vector<Rational> const& point)
{
    std::vector<std::int64_t> idx(grid.dim());
    for (int i = 0; i < grid.dim(); ++i) {
        Rational t = point[i] * pow2(k) - grid.offset(i, k);
        idx[i] = floor_q(t).get_si();
    }
    return Cube(grid, k, std::move(idx));
}

Cover cover_cube(Box const& q)
{
    if (q.measure() <= 0) throw std::invalid_argument("cover_cube: empty box");
    if (!q.is_cube()) throw std::invalid_argument("cover_cube: box is not a cube");
    Rational ell = q.side(0);
    Rational three_ell = 3 * ell;

    // k0 with 2^{-k0-1} <= 3l < 2^{-k0}
    int k0 = 0;
    while (pow2(-k0) <= three_ell) --k0;
    while (pow2(-k0 - 1) > three_ell) ++k0;

    int n = q.dim();
    std::uint32_t mask = 0;
    std::vector<std::int64_t> idx(n);
    Rational scale = pow2(k0); // 1 / 2^{-k0}
    for (int i = 0; i < n; ++i) {
        Rational a = q.lo[i] * scale;
        Rational b = q.hi[i] * scale;
        // does [a, b) contain an integer?
        bool hits_lattice = ceil_q(a) < b;
        if (!hits_lattice) {
            idx[i] = floor_q(a).get_si();
        } else {
            mask |= 1U << i;
            Rational shift(k0 % 2 == 0 ? 1 : -1, 3);
            idx[i] = floor_q(a - shift).get_si();
        }
    }
    Cube cube(GridId(n, mask), k0, std::move(idx));
    if (!cube.to_box().contains(q)) throw std::logic_error("cover_cube: covering failed");
    return Cover{cube.grid(), cube};
}

Box dilate(Cube const& q, int m)
{
    if (m < 0) throw std::invalid_argument("dilate: negative exponent");
    Box b = q.to_box();
    Rational grow = (pow2(m) - 1) * q.side() / 2;
    for (int i = 0; i < q.dim(); ++i) {
        b.lo[i] -= grow;
        b.hi[i] += grow;
    }
    return b;
}

Box scale_box(Box const& b, std::int64_t factor)
{
    Box out = b;
    for (int i = 0; i < b.dim(); ++i) {
        Rational grow = Rational(mpz_class(static_cast<long>(factor - 1))) * b.side(i) / 2;
        out.lo[i] -= grow;
        out.hi[i] += grow;
    }
    return out;
}

// ---------------------------------------------------------------- CellSet / Whitney

CellSet::CellSet(int dim_, int level_, std::int64_t lo_, std::int64_t hi_)
    : dim(dim_), level(level_), lo(lo_), hi(hi_)
{
    if (hi <= lo) throw std::invalid_argument("empty cell set domain");
    std::size_t n = 1;
    for (int i = 0; i < dim; ++i) n *= static_cast<std::size_t>(per_axis());
    cells.assign(n, false);
}

std::size_t CellSet::count() const
{
    std::size_t c = 0;
    for (bool b : cells) c += b;
    return c;
}

Cube CellSet::cell_cube(std::size_t idx) const
{
    std::vector<std::int64_t> j(dim);
    auto N = static_cast<std::size_t>(per_axis());
    for (int i = dim - 1; i >= 0; --i) {
        j[i] = static_cast<std::int64_t>(idx % N) + (lo << level);
        idx /= N;
    }
    return Cube(GridId::standard(dim), level, std::move(j));
}

namespace {

// Cell index ranges [first, last) per axis of an aligned box, clipped flag.
bool aligned_range(CellSet const& s, Box const& b, std::vector<std::int64_t>& first, std::vector<std::int64_t>& last,
                   bool& clipped)
{
    first.assign(s.dim, 0);
    last.assign(s.dim, 0);
    clipped = false;
    Rational scale = pow2(s.level);
    for (int i = 0; i < s.dim; ++i) {
        Rational a = (b.lo[i] - s.lo) * scale;
        Rational c = (b.hi[i] - s.lo) * scale;
        if (a.get_den() != 1 || c.get_den() != 1) throw std::invalid_argument("box not aligned to cell lattice");
        std::int64_t ai = a.get_num().get_si(), ci = c.get_num().get_si();
        if (ai < 0) { ai = 0; clipped = true; }
        if (ci > s.per_axis()) { ci = s.per_axis(); clipped = true; }
        if (ci <= ai) return false;
        first[i] = ai;
        last[i] = ci;
    }
    return true;
}

template <class F>
void for_each_cell(int dim, std::int64_t N, std::vector<std::int64_t> const& first,
                   std::vector<std::int64_t> const& last, F&& f)
{
    std::vector<std::int64_t> cur = first;
    while (true) {
        std::size_t idx = 0;
        for (int i = 0; i < dim; ++i) idx = idx * static_cast<std::size_t>(N) + static_cast<std::size_t>(cur[i]);
        if (!f(idx)) return;
        int ax = dim - 1;
        while (ax >= 0) {
            if (++cur[ax] < last[ax]) break;
            cur[ax] = first[ax];
            --ax;
        }
        if (ax < 0) return;
    }
}

} // namespace

bool CellSet::covers(Box const& b) const
{
    std::vector<std::int64_t> first, last;
    bool clipped = false;
    if (!aligned_range(*this, b, first, last, clipped)) return false;
    if (clipped) return false;
    bool all = true;
    for_each_cell(dim, per_axis(), first, last, [&](std::size_t idx) {
        if (!cells[idx]) all = false;
        return all;
    });
    return all;
}

bool CellSet::meets(Box const& b) const
{
    std::vector<std::int64_t> first, last;
    bool clipped = false;
    if (!aligned_range(*this, b, first, last, clipped)) return false;
    bool any = false;
    for_each_cell(dim, per_axis(), first, last, [&](std::size_t idx) {
        if (cells[idx]) any = true;
        return !any;
    });
    return any;
}

Rational CellSet::measure() const
{
    return Rational(mpz_class(static_cast<unsigned long>(count()))) * pow2(-level * dim);
}

WhitneyResult whitney_decompose(CellSet const& omega)
{
    if (omega.count() == omega.size()) throw std::invalid_argument("whitney_decompose: omega is the whole domain");
    WhitneyResult out;
    if (omega.count() == 0) return out;

    int n = omega.dim;
    // top scale: largest standard cubes that can fit inside the domain
    int k_top = 0;
    while ((std::int64_t{1} << (-k_top + 1)) <= (omega.hi - omega.lo)) --k_top;

    GridId g = GridId::standard(n);
    std::vector<Cube> stack;
    {
        // all standard cubes at k_top meeting the domain
        std::int64_t jlo = floor_shift(omega.lo, -k_top);
        std::int64_t jhi = floor_shift(omega.hi - 1, -k_top);
        std::vector<std::int64_t> cur(n, jlo);
        while (true) {
            stack.emplace_back(g, k_top, cur);
            int ax = n - 1;
            while (ax >= 0) {
                if (++cur[ax] <= jhi) break;
                cur[ax] = jlo;
                --ax;
            }
            if (ax < 0) break;
        }
    }
    Box domain(std::vector<Rational>(n, Rational(mpz_class(static_cast<long>(omega.lo)))),
               std::vector<Rational>(n, Rational(mpz_class(static_cast<long>(omega.hi)))));

    while (!stack.empty()) {
        Cube q = stack.back();
        stack.pop_back();
        Box b = q.to_box();
        if (!domain.intersects(b)) continue;
        if (!omega.meets(b.intersection(domain))) continue;
        if (domain.contains(b) && omega.covers(b) && omega.covers(scale_box(b, 3))) {
            out.cubes.push_back(q);
            continue;
        }
        if (q.scale() >= omega.level) {
            if (domain.contains(b) && omega.covers(b)) out.residue.push_back(q);
            continue;
        }
        for (auto& c : children(q)) stack.push_back(c);
    }
    std::sort(out.cubes.begin(), out.cubes.end());
    std::sort(out.residue.begin(), out.residue.end());
    return out;
}

} // namespace sparsedom

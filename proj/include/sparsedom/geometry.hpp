#pragma once

// Exact cube geometry over the 2^n shifted dyadic grids
//   D_alpha = { 2^{-k}([0,1)^n + j + (-1)^k alpha) },  alpha in {0, 1/3}^n.
// The sign alternation makes each shifted grid nested across scales.

#include "sparsedom/rational.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace sparsedom {

/// Which of the 2^n grids a cube belongs to. Bit i set means the i-th
/// shift component is 1/3.
class GridId {
public:
    GridId() = default;
    GridId(int dim, std::uint32_t mask);

    static GridId standard(int dim) { return GridId(dim, 0); }
    /// All 2^dim grids, standard grid first.
    static std::vector<GridId> all(int dim);

    int dim() const { return dim_; }
    std::uint32_t mask() const { return mask_; }
    bool shifted(int axis) const { return (mask_ >> axis) & 1U; }
    bool is_standard() const { return mask_ == 0; }
    /// The nominal shift component: 0 or 1/3.
    Rational alpha(int axis) const;
    /// Shift actually used at scale k: (-1)^k alpha.
    Rational offset(int axis, int k) const;
    /// 3 * offset(axis, k), an integer in {-1, 0, 1}.
    int offset3(int axis, int k) const;

    friend bool operator==(GridId const&, GridId const&) = default;
    friend auto operator<=>(GridId const&, GridId const&) = default;

private:
    int dim_ = 1;
    std::uint32_t mask_ = 0;
};

/// Half-open axis-aligned box with rational endpoints.
struct Box {
    std::vector<Rational> lo;
    std::vector<Rational> hi;

    Box() = default;
    Box(std::vector<Rational> lo_, std::vector<Rational> hi_);
    static Box cube(std::vector<Rational> corner, Rational const& side);

    int dim() const { return static_cast<int>(lo.size()); }
    Rational side(int axis) const { return hi[axis] - lo[axis]; }
    Rational measure() const;
    bool is_cube() const;
    bool contains(Box const& other) const;
    bool intersects(Box const& other) const;
    Box intersection(Box const& other) const; // may be degenerate

    friend bool operator==(Box const&, Box const&) = default;
};

/// Grid cube 2^{-k}([0,1)^n + j + (-1)^k alpha).
class Cube {
public:
    Cube() = default;
    Cube(GridId grid, int k, std::vector<std::int64_t> j);

    int dim() const { return grid_.dim(); }
    GridId const& grid() const { return grid_; }
    int scale() const { return k_; }
    std::vector<std::int64_t> const& index() const { return j_; }
    std::int64_t index(int axis) const { return j_[axis]; }

    Rational side() const { return pow2(-k_); }
    Rational measure() const;
    Rational lower(int axis) const;
    Rational upper(int axis) const;
    Box to_box() const;

    Cube parent() const;
    /// Ancestor at scale k (k <= scale()).
    Cube ancestor(int k) const;

    /// Lower corner in units of 2^{-k}/3: 3j + 3 offset. Exact integer.
    std::int64_t lower3(int axis) const;

    /// Same-grid containment via index arithmetic; other grids fall back to
    /// exact box containment.
    bool contains(Cube const& other) const;
    bool intersects(Cube const& other) const;

    friend bool operator==(Cube const&, Cube const&) = default;
    friend auto operator<=>(Cube const&, Cube const&) = default;

private:
    GridId grid_;
    int k_ = 0;
    std::vector<std::int64_t> j_;
};

/// floor(a / 2^s) for s >= 0.
std::int64_t floor_shift(std::int64_t a, int s);

/// floor / ceil of a rational.
mpz_class floor_q(Rational const& q);
mpz_class ceil_q(Rational const& q);

/// The 2^n children; they partition q.
std::vector<Cube> children(Cube const& q);

/// The cube of `grid` at scale k containing the point (which must be exact).
Cube locate(GridId const& grid, int k, std::vector<Rational> const& point);

struct Cover {
    GridId grid;
    Cube cube;
};

/// Covering by one of the 2^n grids: returns Q_alpha with q subset Q_alpha and
/// side(Q_alpha) <= 6 side(q). Per axis: pick k0 with
/// 2^{-k0-1} <= 3l < 2^{-k0}; if the axis interval contains no point of
/// 2^{-k0}Z use shift 0, otherwise shift 1/3.
/// Throws std::invalid_argument for empty or non-cubic boxes.
Cover cover_cube(Box const& q);

/// Concentric box with side 2^m side(q).
Box dilate(Cube const& q, int m);

/// Concentric box scaled by an integer factor (3Q for Whitney).
Box scale_box(Box const& b, std::int64_t factor);

/// Set of level-L standard dyadic cells over the integer box [lo,hi)^dim.
struct CellSet {
    int dim = 1;
    int level = 0;
    std::int64_t lo = 0;
    std::int64_t hi = 1;
    std::vector<bool> cells; // row-major, axis 0 slowest

    CellSet() = default;
    CellSet(int dim_, int level_, std::int64_t lo_, std::int64_t hi_);

    std::int64_t per_axis() const { return (hi - lo) << level; }
    std::size_t size() const { return cells.size(); }
    std::size_t count() const;
    /// Level-L standard cube of a linear cell index.
    Cube cell_cube(std::size_t idx) const;
    /// Whether every level-L cell inside `b` belongs to the set (b must be
    /// aligned to the level-L lattice); false if b leaves the domain.
    bool covers(Box const& b) const;
    bool meets(Box const& b) const;
    Rational measure() const;
};

struct WhitneyResult {
    std::vector<Cube> cubes;   // 3Q subset Omega, maximal
    std::vector<Cube> residue; // level-L cells of Omega where 3Q leaves Omega
};

/// Maximal standard dyadic cubes Q (levels 0..L) with Q subset Omega and
/// 3Q subset Omega. At finite resolution the cells next to the complement can
/// never satisfy 3Q subset Omega; they are returned as `residue`, so
/// cubes + residue partition Omega exactly.
/// Throws std::invalid_argument when Omega is the whole domain.
WhitneyResult whitney_decompose(CellSet const& omega);

} // namespace sparsedom

#pragma once

// Exact piecewise-constant functions on a uniform mesh, their distribution
// functionals (rearrangement, median, local mean oscillation) and the dyadic,
// shifted-dyadic and Hardy-Littlewood maximal operators.

#include "sparsedom/geometry.hpp"
#include "sparsedom/rational.hpp"

#include <cstdint>
#include <vector>

namespace sparsedom {

/// Uniform mesh over the integer box [lo, hi)^dim. Cells have side
/// 2^{-level}/3 so that every cube of every shifted grid at scale <= level is
/// a union of cells. A "dyadic cell" is a standard level-L cube (3^dim cells).
struct Mesh {
    int dim = 1;
    int level = 1;
    std::int64_t lo = -1;
    std::int64_t hi = 2;

    Mesh() = default;
    Mesh(int dim_, int level_, std::int64_t lo_ = -1, std::int64_t hi_ = 2);

    /// Cells per axis.
    std::int64_t per_axis() const { return ((hi - lo) * 3) << level; }
    /// Dyadic cells per axis.
    std::int64_t dyadic_per_axis() const { return (hi - lo) << level; }
    std::size_t size() const;
    std::size_t dyadic_size() const;

    Rational cell_side() const { return pow2(-level) / 3; }
    Rational cell_measure() const;
    Box domain() const;
    /// The unit cube [0,1)^dim carrying experiment inputs.
    static Box core(int dim);

    std::size_t ravel(std::vector<std::int64_t> const& idx) const;
    std::vector<std::int64_t> unravel(std::size_t flat) const;
    /// Cell coordinate of a point: (x - lo) * 3 * 2^level.
    Rational to_cells(Rational const& x) const;
    Rational cell_lower(std::int64_t i) const;
    Rational cell_center(std::int64_t i) const;
    /// Dyadic cell containing a cell (per-axis index / 3).
    std::size_t dyadic_of(std::size_t flat) const;

    friend bool operator==(Mesh const&, Mesh const&) = default;
};

/// Coarsest scale examined by the maximal operators: cubes of side at least
/// 64 times the domain side. Larger cubes only lower the averages.
int top_scale(Mesh const& mesh);

/// Per-axis half-open cell-index ranges.
struct CellRange {
    std::vector<std::int64_t> first;
    std::vector<std::int64_t> last;
    bool empty() const;
    std::size_t count() const;
};

/// Cell range of a cube at scale <= mesh level, clipped to the domain.
/// `clipped` reports whether part of the cube lies outside the domain.
CellRange cell_range(Mesh const& mesh, Cube const& q, bool* clipped = nullptr);

template <class F>
void for_each_cell(Mesh const& mesh, CellRange const& r, F&& f)
{
    if (r.empty()) return;
    int n = mesh.dim;
    std::vector<std::int64_t> cur = r.first;
    while (true) {
        f(mesh.ravel(cur));
        int ax = n - 1;
        while (ax >= 0) {
            if (++cur[ax] < r.last[ax]) break;
            cur[ax] = r.first[ax];
            --ax;
        }
        if (ax < 0) return;
    }
}

class StepFunction {
public:
    StepFunction() = default;
    explicit StepFunction(Mesh mesh);
    StepFunction(Mesh mesh, std::vector<Rational> values);

    static StepFunction constant(Mesh const& mesh, Rational const& c);
    /// Builds a function constant on dyadic cells from one value per dyadic cell.
    static StepFunction from_dyadic(Mesh const& mesh, std::vector<Rational> const& dyadic_values);
    /// Indicator of a box (cells whose overlap is partial get the overlap fraction).
    static StepFunction indicator(Mesh const& mesh, Box const& b);

    Mesh const& mesh() const { return mesh_; }
    std::vector<Rational> const& values() const { return values_; }
    std::vector<Rational>& values() { return values_; }
    Rational const& operator[](std::size_t i) const { return values_[i]; }
    Rational& operator[](std::size_t i) { return values_[i]; }
    std::size_t size() const { return values_.size(); }

    StepFunction abs() const;
    bool is_zero() const;
    bool is_nonnegative() const;
    /// Constant on every level-L cube of `grid` (cells outside the domain ignored).
    bool is_grid_constant(GridId const& grid) const;
    /// Restriction to an aligned cube (zero elsewhere).
    StepFunction restricted(Cube const& q) const;

    StepFunction& operator+=(StepFunction const& o);
    StepFunction& operator-=(StepFunction const& o);
    StepFunction& operator*=(Rational const& c);
    friend StepFunction operator+(StepFunction a, StepFunction const& b) { return a += b; }
    friend StepFunction operator-(StepFunction a, StepFunction const& b) { return a -= b; }
    friend StepFunction operator*(StepFunction a, Rational const& c) { return a *= c; }

    /// Exact integral of f (or |f|) and of f*g against Lebesgue measure.
    Rational integral() const;
    Rational l1_norm() const;
    Rational l2_norm_squared() const;
    Rational inner(StepFunction const& g) const;

    std::vector<double> to_doubles() const;

private:
    Mesh mesh_;
    std::vector<Rational> values_;
};

/// Summed-area table for repeated box integrals of one function.
class BoxIntegrator {
public:
    explicit BoxIntegrator(StepFunction const& f, bool absolute = false);

    Mesh const& mesh() const { return mesh_; }
    /// Exact integral over an arbitrary rational box; zero outside the domain.
    Rational integral(Box const& b) const;
    /// Exact integral over a cube with scale <= mesh level.
    Rational integral(Cube const& q) const;
    /// Sum of cell values over an index range (not multiplied by cell measure).
    Rational range_sum(CellRange const& r) const;

private:
    Mesh mesh_;
    std::vector<std::int64_t> stride_;
    std::vector<Rational> table_;
};

/// (1/|b|) int_b f, zero-extended outside the domain. Throws on |b| = 0.
Rational average(StepFunction const& f, Box const& b);
Rational average(BoxIntegrator const& f, Box const& b);
Rational average(BoxIntegrator const& f, Cube const& q);

/// Value/measure pairs of f on a box (sorted by value, equal values merged).
/// The part of the box outside the domain contributes the value 0.
struct WeightedValue {
    Rational value;
    Rational measure;
};
std::vector<WeightedValue> value_distribution(StepFunction const& f, Box const& b);

/// Sorted (|value|, measure) profile of f on a box; values strictly decreasing.
struct DistributionProfile {
    std::vector<WeightedValue> entries; // |f| > 0 only
    Rational zero_measure;              // measure of {f = 0} in the box
    Rational box_measure;
};
DistributionProfile distribution_profile(StepFunction const& f, Box const& b);

/// (f chi_b)^*(t) = inf{ s >= 0 : |{x in b : |f(x)| > s}| <= t }. Throws for t <= 0.
Rational rearrangement(StepFunction const& f, Box const& b, Rational const& t);
Rational rearrangement(DistributionProfile const& p, Rational const& t);

/// Largest median of f over q.
Rational median(StepFunction const& f, Box const& q);
Rational median(std::vector<WeightedValue> const& sorted);

struct Oscillation {
    Rational omega; // inf_c ((f - c) chi_q)^*(lambda |q|)
    Rational c;     // an optimal constant (window midpoint)
};
/// Shortest value window holding at least (1-lambda)|q| of the mass.
Oscillation oscillation(std::vector<WeightedValue> const& sorted, Rational const& lambda);
Rational local_mean_oscillation(StepFunction const& f, Box const& q, Rational const& lambda);

/// M^{#,d}_{lambda;q0} f: max of omega_lambda over cubes of D(q0) containing x,
/// down to the mesh level. Zero outside q0.
StepFunction sharp_maximal(StepFunction const& f, Cube const& q0, Rational const& lambda);

/// M^{grid} f: max of averages of |f| over cubes of the grid containing x,
/// from top_scale(mesh) down to the mesh level.
StepFunction dyadic_maximal(StepFunction const& f, GridId const& grid);

struct HlOptions {
    /// Corner lattice spacing in cells; the default is the dyadic lattice.
    std::int64_t stride = 3;
    /// Largest side in cells for n >= 2 (0: no cap).
    std::int64_t max_side = 0;
};

/// Computable Hardy-Littlewood surrogate: max of averages of |f| over all
/// lattice-aligned cubes inside the domain that contain x. A lower bound for
/// the true M f.
StepFunction hl_maximal(StepFunction const& f, HlOptions const& opts = {});

} // namespace sparsedom

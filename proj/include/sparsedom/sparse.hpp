#pragma once

// Sparse families, the Calderon-Zygmund and median-oscillation constructions,
// and the positive dyadic operators built on them.

#include "sparsedom/geometry.hpp"
#include "sparsedom/stepfn.hpp"

#include <map>
#include <string>
#include <vector>

namespace sparsedom {

/// Cubes Q_j^k of one grid indexed by level k. Omega_k is the union of level k,
/// E_j^k = Q_j^k minus Omega_{k+1}.
struct SparseFamily {
    GridId grid;
    std::map<int, std::vector<Cube>> levels;

    SparseFamily() = default;
    explicit SparseFamily(GridId g) : grid(g) {}

    std::size_t size() const;
    bool empty() const { return size() == 0; }
    /// (level, cube) pairs in level order.
    std::vector<std::pair<int, Cube>> members() const;
};

struct FamilyCheck {
    bool ok = true;
    std::string failure;
    /// max over members of |Omega_{k+1} cap Q| / |Q|.
    Rational worst_packing = 0;
};

/// Checks disjointness within levels, nesting of the Omega_k, the packing
/// condition |Omega_{k+1} cap Q| <= |Q|/2 (exact cube measures), and
/// pairwise disjointness of the E_j^k by a cell tally on the mesh.
FamilyCheck check_sparse(SparseFamily const& s, Mesh const& mesh);

/// Indicator-weighted sum of the E_j^k with the given per-member weights
/// (same order as members()).
StepFunction exclusive_sum(SparseFamily const& s, Mesh const& mesh, std::vector<Rational> const& weights);

/// Calderon-Zygmund family of |f| in a grid: level k holds the maximal grid
/// cubes with average above 2^{(n+1)k}. Levels run from the largest threshold
/// below min{M f > 0} (cubes above the top scale are found by climbing) up to
/// the last nonempty one. Cubes are no finer than the mesh level.
SparseFamily cz_sparse(StepFunction const& f, GridId const& grid);

/// Averages of |f| over the members of a family, in members() order.
std::vector<Rational> member_averages(SparseFamily const& s, StepFunction const& f);

struct DecompositionResult {
    Cube q0;
    Rational lambda;
    Rational base_median;
    SparseFamily family;
    std::vector<Rational> coefficients; // omega_lambda(f; Q), members() order
};

/// Median-oscillation decomposition of f on q0 with lambda = 2^{-(n+2)}.
/// f must be constant on the mesh-level cubes of q0's grid inside q0.
DecompositionResult median_decompose(StepFunction const& f, Cube const& q0);

struct BoundCheck {
    bool ok = true;
    std::size_t cells = 0;
    std::size_t violations = 0;
    std::size_t worst_cell = 0;
    double worst_ratio = 0; // lhs / rhs (1 when both vanish)
};

/// |f - m_f(q0)| <= 4 M^# f + 2 sum omega chi_Q on every cell of q0.
BoundCheck check_decomposition_bound(StepFunction const& f, DecompositionResult const& d);

/// Right-hand side 4 M^#_{lambda;q0} f + 2 sum omega chi_Q of the bound.
StepFunction decomposition_majorant(StepFunction const& f, DecompositionResult const& d);

/// A_S f = sum average(f, Q) chi_Q. Rejects negative input.
StepFunction sparse_operator(SparseFamily const& s, StepFunction const& f);

/// T_{S,m} f = sum average(f, 2^m Q) chi_Q, f zero-extended outside the mesh.
StepFunction shifted_operator(SparseFamily const& s, int m, StepFunction const& f);

struct ShiftedMember {
    int level;
    Cube cube;  // Q_j^k
    Cube cover; // Q_{j,alpha}^k, a cube of grid alpha containing 2^m Q
};

struct ShiftedFamily {
    SparseFamily base;
    int m = 0;
    std::vector<ShiftedMember> members;

    /// Members whose cover lies in the given grid.
    std::vector<ShiftedMember> family(GridId const& alpha) const;
};

/// Assigns each member the cover cube of its m-th dilate.
ShiftedFamily split_families(SparseFamily const& s, int m);

/// A_{m,alpha} f = sum over F_alpha of average(f, cover) chi_Q.
StepFunction amalgam(ShiftedFamily const& sh, GridId const& alpha, StepFunction const& f);

/// A*_{m,alpha} f = sum over F_alpha of (int_Q f / |cover|) chi_cover.
/// Throws std::out_of_range if a cover cube of F_alpha leaves the mesh domain.
StepFunction amalgam_adjoint(ShiftedFamily const& sh, GridId const& alpha, StepFunction const& f);

struct BadPart {
    Cube cube;
    Rational mean;
    StepFunction b; // (f - mean) chi_cube
};

struct GoodBadSplit {
    CellSet omega;
    StepFunction good;
    std::vector<BadPart> bad;
    /// max of good / beta over Omega.
    Rational good_constant = 0;
};

/// Calderon-Zygmund split of f >= 0 at height beta over the Whitney cubes of
/// Omega = {hl_maximal f > beta}. Throws if Omega reaches the domain boundary.
GoodBadSplit cz_good_bad_split(StepFunction const& f, Rational const& beta);

/// Number of distinct scales among base cubes Q inside q with
/// side(q) <= 18 2^m side(Q).
int scale_family_count(ShiftedFamily const& sh, Cube const& q);

/// Largest pointwise overlap of those cubes (cell tally).
int scale_family_overlap(ShiftedFamily const& sh, Cube const& q, Mesh const& mesh);

/// sup_beta beta |{|g| > beta}|, exact over the level values of g.
Rational weak_type_sup(StepFunction const& g);

} // namespace sparsedom

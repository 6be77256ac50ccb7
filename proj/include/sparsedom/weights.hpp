#pragma once

// A2 weights, weighted norms, operator-norm estimation on L^2(w) and the
// power-weight scan.

#include "sparsedom/sparse.hpp"
#include "sparsedom/stepfn.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace sparsedom {

class Weight {
public:
    /// Throws unless every cell value is positive.
    explicit Weight(StepFunction w);

    StepFunction const& w() const { return w_; }
    StepFunction const& inverse() const { return inv_; }
    Mesh const& mesh() const { return w_.mesh(); }
    /// Value on each dyadic cell (w must be constant there).
    std::vector<double> dyadic_values() const;

private:
    StepFunction w_;
    StepFunction inv_;
};

/// Rounds v > 0 to (m/8) 2^e with m in 8..15 (nearest, ties up).
Rational quantize_weight(double v);

/// |x - x0|^a sampled at dyadic-cell centres and quantised; |a| < 1.
Weight power_weight(Mesh const& mesh, double a, Rational const& x0);

struct A2Options {
    /// Corner lattice spacing in fine cells for the free cubes.
    std::int64_t stride = 1;
    /// Include the cubes of all 2^n grids inside the domain.
    bool grid_cubes = true;
};

struct A2Report {
    Rational constant = 1;
    Box witness;
    std::string search;
    std::uint64_t cubes_searched = 0;
};

/// Exact max of average(w) average(1/w) over the search family inside the mesh domain.
A2Report a2_constant(Weight const& w, A2Options const& opts = {});

/// (sum f^2 w |cell|)^{1/2}: exact sum, one square root.
double weighted_norm(StepFunction const& f, Weight const& w);

/// Real linear operator on functions constant on n units of equal measure.
class LinearOperator {
public:
    virtual ~LinearOperator() = default;
    virtual std::size_t size() const = 0;
    virtual void apply(std::vector<double> const& x, std::vector<double>& y) const = 0;
    /// Adjoint for the unweighted pairing.
    virtual void apply_adjoint(std::vector<double> const& x, std::vector<double>& y) const = 0;
    virtual std::string name() const = 0;
};

class IdentityOperator : public LinearOperator {
public:
    explicit IdentityOperator(std::size_t n) : n_(n) {}
    std::size_t size() const override { return n_; }
    void apply(std::vector<double> const& x, std::vector<double>& y) const override { y = x; }
    void apply_adjoint(std::vector<double> const& x, std::vector<double>& y) const override { y = x; }
    std::string name() const override { return "identity"; }

private:
    std::size_t n_;
};

/// Row-major dense matrix.
class DenseOperator : public LinearOperator {
public:
    DenseOperator(std::size_t n, std::vector<double> entries);
    std::size_t size() const override { return n_; }
    void apply(std::vector<double> const& x, std::vector<double>& y) const override;
    void apply_adjoint(std::vector<double> const& x, std::vector<double>& y) const override;
    std::string name() const override { return "dense"; }
    double at(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }

private:
    std::size_t n_;
    std::vector<double> a_;
};

/// f -> sum_Q average(f, Q) chi_Q over half-open unit ranges (self-adjoint).
class SparseAveragingOperator : public LinearOperator {
public:
    SparseAveragingOperator(std::size_t n, std::vector<std::pair<std::size_t, std::size_t>> ranges);
    /// Standard-grid family on a one-dimensional mesh; units are dyadic cells.
    static SparseAveragingOperator from_family(SparseFamily const& s, Mesh const& mesh);
    std::size_t size() const override { return n_; }
    void apply(std::vector<double> const& x, std::vector<double>& y) const override;
    void apply_adjoint(std::vector<double> const& x, std::vector<double>& y) const override { apply(x, y); }
    std::string name() const override { return "sparse"; }
    std::vector<std::pair<std::size_t, std::size_t>> const& ranges() const { return ranges_; }

private:
    std::size_t n_;
    std::vector<std::pair<std::size_t, std::size_t>> ranges_;
};

/// Full-truncation Hilbert transform between unit cells:
/// H[i][j] = int_{cell j} dy / (x_i - y) = log((d + 1/2)/(d - 1/2)), d = i - j.
class HilbertMatrix : public LinearOperator {
public:
    explicit HilbertMatrix(std::size_t n);
    std::size_t size() const override { return n_; }
    void apply(std::vector<double> const& x, std::vector<double>& y) const override;
    void apply_adjoint(std::vector<double> const& x, std::vector<double>& y) const override;
    std::string name() const override { return "hilbert"; }
    double at(std::size_t i, std::size_t j) const;

private:
    std::size_t n_;
    std::vector<double> diag_; // diag_[n-1+d] = entry at i - j = d
};

/// Two-sided chain [x0 - 2^{-k}, x0) and [x0, x0 + 2^{-k}), k = 1..L, as a
/// standard-grid sparse family (x0 a level-1 dyadic point inside [0,1)).
SparseFamily chain_family(int level, Rational const& x0);

struct NormEstimate {
    double value = 0;
    bool converged = false;
    int iterations = 0;
    /// max relative mismatch of <Bv, u> and <v, B^T u> over the iterates
    double duality_gap = 0;
};

/// Power iteration on B^T B with B = W^{1/2} T W^{-1/2}; the estimate is the
/// largest ||Bv|| / ||v|| seen (a lower bound for ||T||_{L^2(w)}).
NormEstimate operator_norm_weighted(LinearOperator const& op, Weight const& w, int iters, std::uint64_t seed, double tol = 1e-10);

struct ScanRow {
    double a = 0;
    Rational a2;
    double a2_value = 0;
    NormEstimate norm;
    double ratio = 0; // norm / A2
};

struct ScanTable {
    std::string kind;
    int level = 0;
    std::vector<ScanRow> rows;
    double slope = 0; // least squares of norm against A2
    double intercept = 0;

    std::string to_csv() const;
};

struct ScanOptions {
    std::string kind = "sparse"; // sparse | hilbert
    int level = 12;
    std::vector<double> exponents{0, 0.3, 0.6, 0.8, 0.9, 0.95};
    int iters = 200;
    std::uint64_t seed = 1;
    A2Options a2;
};

/// Power weights |x - 1/2|^a on [0,1). Throws for |a| >= 1 or an unknown kind.
ScanTable a2_scan(ScanOptions const& opts);

} // namespace sparsedom

#pragma once

// The truncated Hilbert transform on one-dimensional step functions, its
// maximal truncation, the local oscillation estimate and the pointwise
// domination chain.

#include "sparsedom/sparse.hpp"
#include "sparsedom/stepfn.hpp"

#include <functional>
#include <string>

namespace sparsedom {

/// Kernel with size bound |K(x,y)| <= size_constant / |x-y|^n and smoothness
/// |K(x,y)-K(x',y)| + |K(y,x)-K(y,x')| <= smooth_constant |x-x'|^delta / |x-y|^{n+delta}
/// whenever |x-x'| < |x-y|/2.
struct Kernel {
    std::string name;
    int dim = 1;
    double size_constant = 1;
    double delta = 1;
    double smooth_constant = 1;
    std::function<double(double, double)> eval;

    /// K(x,y) = 1/(x-y): size constant 1, delta 1, smoothness constant 4.
    static Kernel hilbert();
};

struct KernelCheck {
    bool ok = true;
    std::size_t samples = 0;
    double worst_size = 0;   // max |K| |x-y|^n
    double worst_smooth = 0; // max smoothness quotient
};

/// Samples both kernel conditions on a fixed lattice of configurations.
KernelCheck validate_kernel(Kernel const& k);

/// int_{eps < |x-y| < nu} f(y) / (x-y) dy, each cell piece integrated in closed form.
/// Throws if eps >= nu, eps <= 0, or x lies on a cell boundary.
double hilbert_apply(StepFunction const& f, Rational const& x, double eps, double nu);

/// T_natural f at the centres of the dyadic cells, replicated over each cell.
/// f must be constant on dyadic cells (n = 1 only).
StepFunction maximal_truncated(StepFunction const& f);

/// T_natural f at one point by brute force over all pairs of cell-boundary
/// distances (test oracle).
double maximal_truncated_at(StepFunction const& f, Rational const& x);

/// sum_{m>=0} 2^{-m delta} average(|f|, 2^m q), exact; the tail after the
/// dilates swallow the support is summed as a geometric series.
Rational dilate_series(BoxIntegrator const& abs_f, Box const& support, Box const& q, int delta = 1);

/// Bounding box of the cells where f is nonzero (empty optional-like: measure 0).
Box support_box(StepFunction const& f);

struct OscillationReport {
    Rational lhs; // omega_lambda(T_natural f; q)
    Rational rhs; // dilate series of f at q
    double ratio = 0;
    bool defect = false; // rhs = 0 < lhs
};

OscillationReport oscillation_estimate_report(StepFunction const& f, Box const& q, Rational const& lambda);
/// Same, reusing a precomputed T_natural f.
OscillationReport oscillation_estimate_report(StepFunction const& f, StepFunction const& tf, Box const& q, Rational const& lambda);

struct DominationReport {
    bool decomposition_ok = true;  // median-oscillation bound for T_natural f, exact
    BoundCheck decomposition;     // cell statistics of that bound
    Rational median;         // m_{T_natural f}(Q0)
    std::size_t family_size = 0;
    /// smallest c with |T f - m| <= c (M f + sum_m 2^{-m} T_{S,m} f) on Q0
    double c = 0;
    /// max over family cubes of omega(T f; Q) / dilate series at Q
    double coefficient_constant = 0;
    std::size_t cells_checked = 0;
};

/// Runs the domination chain for f >= 0 supported in [0,1) with Q0 = [0,1).
DominationReport dominate(StepFunction const& f);

} // namespace sparsedom

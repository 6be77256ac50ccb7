#include "sparsedom/czo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sparsedom {

Kernel Kernel::hilbert()
{
    Kernel k;
    k.name = "hilbert";
    k.dim = 1;
    k.size_constant = 1;
    k.delta = 1;
    // each difference is |x-x'| / (|x-y| |x'-y|) and |x'-y| > |x-y|/2
    k.smooth_constant = 4;
    k.eval = [](double x, double y) { return 1.0 / (x - y); };
    return k;
}

KernelCheck validate_kernel(Kernel const& k)
{
    if (k.dim != 1) throw std::invalid_argument("validate_kernel: only one-dimensional kernels are sampled");
    KernelCheck res;
    constexpr double slack = 1e-12;
    for (int a = -24; a <= 24; ++a) {
        for (int b = -24; b <= 24; ++b) {
            if (a == b) continue;
            double x = a / 8.0, y = b / 8.0 + 1.0 / 64;
            double r = std::abs(x - y);
            double size = std::abs(k.eval(x, y)) * r;
            res.worst_size = std::max(res.worst_size, size);
            if (size > k.size_constant * (1 + slack)) res.ok = false;
            ++res.samples;
            for (double t : {0.01, 0.1, 0.25, 0.4, 0.49, 0.499}) {
                for (double sign : {-1.0, 1.0}) {
                    double xp = x + sign * t * r;
                    double h = std::abs(x - xp);
                    double diff = std::abs(k.eval(x, y) - k.eval(xp, y)) + std::abs(k.eval(y, x) - k.eval(y, xp));
                    double q = diff * std::pow(r, 1 + k.delta) / std::pow(h, k.delta);
                    res.worst_smooth = std::max(res.worst_smooth, q);
                    if (q > k.smooth_constant * (1 + slack)) res.ok = false;
                    ++res.samples;
                }
            }
        }
    }
    return res;
}

double hilbert_apply(StepFunction const& f, Rational const& x, double eps, double nu)
{
    Mesh const& mesh = f.mesh();
    if (mesh.dim != 1) throw std::invalid_argument("hilbert_apply: one-dimensional input only");
    if (!(eps > 0) || !(eps < nu)) throw std::invalid_argument("hilbert_apply: need 0 < eps < nu");
    Rational u_exact = mesh.to_cells(x);
    if (u_exact.get_den() == 1) throw std::invalid_argument("hilbert_apply: x lies on a cell boundary");
    // work in cell units; the kernel is scale invariant
    double u = to_double(u_exact);
    double h = to_double(mesh.cell_side());
    double e = eps / h, v = nu / h;
    double sum = 0, comp = 0;
    auto piece = [&](double lo, double hi) {
        lo = std::max(lo, e);
        hi = std::min(hi, v);
        return lo < hi ? std::log1p((hi - lo) / lo) : 0.0;
    };
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (f[i] == 0) continue;
        double val = to_double(f[i]);
        double a = static_cast<double>(i) - u, b = a + 1; // cell minus x
        double term;
        if (b <= 0)
            term = piece(-b, -a);
        else if (a >= 0)
            term = -piece(a, b);
        else
            term = piece(0, -a) - piece(0, b);
        // compensated summation
        double y = val * term - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    return sum;
}

StepFunction maximal_truncated(StepFunction const& f)
{
    Mesh const& mesh = f.mesh();
    if (mesh.dim != 1) throw std::invalid_argument("maximal_truncated: one-dimensional input only");
    if (!f.is_grid_constant(GridId::standard(1)))
        throw std::invalid_argument("maximal_truncated: f must be constant on dyadic cells");
    auto K = static_cast<std::int64_t>(mesh.dyadic_per_axis());
    std::vector<double> dv(static_cast<std::size_t>(K));
    std::int64_t s_lo = K, s_hi = -1;
    for (std::int64_t c = 0; c < K; ++c) {
        dv[static_cast<std::size_t>(c)] = to_double(f[static_cast<std::size_t>(3 * c)]);
        if (dv[static_cast<std::size_t>(c)] != 0) {
            s_lo = std::min(s_lo, c);
            s_hi = std::max(s_hi, c);
        }
    }
    StepFunction out(mesh);
    if (s_hi < 0) return out;
    // rings between radii (i + 1/2) h and (i + 3/2) h around a cell centre
    std::vector<double> ring(static_cast<std::size_t>(K));
    for (std::int64_t i = 0; i < K; ++i) ring[static_cast<std::size_t>(i)] = std::log1p(2.0 / static_cast<double>(2 * i + 1));
    for (std::int64_t c = 0; c < K; ++c) {
        double g = 0, hi = 0, lo = 0;
        for (std::int64_t i = 0;; ++i) {
            std::int64_t l = c - i - 1, r = c + i + 1;
            if (l < s_lo && r > s_hi) break;
            double fl = l >= 0 ? dv[static_cast<std::size_t>(l)] : 0.0;
            double fr = r < K ? dv[static_cast<std::size_t>(r)] : 0.0;
            g += (fl - fr) * ring[static_cast<std::size_t>(i)];
            hi = std::max(hi, g);
            lo = std::min(lo, g);
        }
        Rational val = from_double(hi - lo);
        for (std::int64_t k = 0; k < 3; ++k) out[static_cast<std::size_t>(3 * c + k)] = val;
    }
    return out;
}

double maximal_truncated_at(StepFunction const& f, Rational const& x)
{
    Mesh const& mesh = f.mesh();
    std::vector<double> radii;
    for (std::int64_t i = 0; i <= mesh.per_axis(); ++i) {
        double d = to_double(sparsedom::abs(mesh.cell_lower(i) - x));
        if (d > 0) radii.push_back(d);
    }
    std::sort(radii.begin(), radii.end());
    radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
    double best = 0;
    for (std::size_t a = 0; a < radii.size(); ++a)
        for (std::size_t b = a + 1; b < radii.size(); ++b) best = std::max(best, std::abs(hilbert_apply(f, x, radii[a], radii[b])));
    return best;
}

Box support_box(StepFunction const& f)
{
    Mesh const& mesh = f.mesh();
    int n = mesh.dim;
    std::vector<std::int64_t> lo(n, mesh.per_axis()), hi(n, -1);
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (f[i] == 0) continue;
        auto idx = mesh.unravel(i);
        for (int a = 0; a < n; ++a) {
            lo[a] = std::min(lo[a], idx[a]);
            hi[a] = std::max(hi[a], idx[a]);
        }
    }
    std::vector<Rational> blo(n), bhi(n);
    for (int a = 0; a < n; ++a) {
        if (hi[a] < 0) {
            blo[a] = bhi[a] = 0;
            continue;
        }
        blo[a] = mesh.cell_lower(lo[a]);
        bhi[a] = mesh.cell_lower(hi[a] + 1);
    }
    return Box(blo, bhi);
}

Rational dilate_series(BoxIntegrator const& abs_f, Box const& support, Box const& q, int delta)
{
    if (support.measure() == 0) return 0;
    int n = q.dim();
    Rational sum = 0;
    for (int m = 0; m <= 60; ++m) {
        Box d = scale_box(q, std::int64_t{1} << m);
        Rational avg = abs_f.integral(d) / d.measure();
        sum += avg * pow2(-m * delta);
        if (d.contains(support)) {
            // later dilates hold the same mass: averages drop by 2^{-n} per step
            Rational r = pow2(-(delta + n));
            return sum + avg * pow2(-m * delta) * r / (1 - r);
        }
    }
    throw std::out_of_range("dilate_series: support too far from the cube");
}

OscillationReport oscillation_estimate_report(StepFunction const& f, StepFunction const& tf, Box const& q, Rational const& lambda)
{
    OscillationReport rep;
    rep.lhs = local_mean_oscillation(tf, q, lambda);
    rep.rhs = dilate_series(BoxIntegrator(f, true), support_box(f), q);
    if (rep.rhs == 0) {
        rep.defect = rep.lhs > 0;
        rep.ratio = rep.defect ? std::numeric_limits<double>::infinity() : 0.0;
    } else {
        rep.ratio = to_double(rep.lhs / rep.rhs);
    }
    return rep;
}

OscillationReport oscillation_estimate_report(StepFunction const& f, Box const& q, Rational const& lambda)
{
    if (!f.is_nonnegative()) throw std::invalid_argument("oscillation_estimate_report: f must be nonnegative");
    return oscillation_estimate_report(f, maximal_truncated(f), q, lambda);
}

DominationReport dominate(StepFunction const& f)
{
    Mesh const& mesh = f.mesh();
    if (mesh.dim != 1) throw std::invalid_argument("dominate: one-dimensional input only");
    if (!f.is_nonnegative()) throw std::invalid_argument("dominate: f must be nonnegative");
    Box support = support_box(f);
    if (support.measure() > 0 && !Mesh::core(1).contains(support))
        throw std::invalid_argument("dominate: f must be supported in [0,1)");

    DominationReport rep;
    Cube q0(GridId::standard(1), 0, {0});
    StepFunction tf = maximal_truncated(f);
    DecompositionResult d = median_decompose(tf, q0);
    rep.decomposition = check_decomposition_bound(tf, d);
    rep.decomposition_ok = rep.decomposition.ok;
    rep.median = d.base_median;
    rep.family_size = d.family.size();

    BoxIntegrator integ(f, true);
    StepFunction majorant = hl_maximal(f);
    auto mem = d.family.members();
    for (std::size_t i = 0; i < mem.size(); ++i) {
        Cube const& q = mem[i].second;
        Rational series = dilate_series(integ, support, q.to_box());
        for_each_cell(mesh, cell_range(mesh, q), [&](std::size_t c) { majorant[c] += series; });
        double ratio = series == 0 ? (d.coefficients[i] == 0 ? 0.0 : std::numeric_limits<double>::infinity())
                                   : to_double(d.coefficients[i] / series);
        rep.coefficient_constant = std::max(rep.coefficient_constant, ratio);
    }
    for_each_cell(mesh, cell_range(mesh, q0), [&](std::size_t c) {
        ++rep.cells_checked;
        Rational lhs = sparsedom::abs(tf[c] - d.base_median);
        if (lhs == 0) return;
        double ratio = majorant[c] == 0 ? std::numeric_limits<double>::infinity() : to_double(lhs / majorant[c]);
        rep.c = std::max(rep.c, ratio);
    });
    return rep;
}

} // namespace sparsedom

#include "sparsedom/weights.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace sparsedom {

Weight::Weight(StepFunction w) : w_(std::move(w)), inv_(w_.mesh())
{
    for (std::size_t i = 0; i < w_.size(); ++i) {
        if (w_[i] <= 0) throw std::invalid_argument("Weight: values must be positive");
        inv_[i] = 1 / w_[i];
    }
}

std::vector<double> Weight::dyadic_values() const
{
    Mesh const& mesh = w_.mesh();
    if (!w_.is_grid_constant(GridId::standard(mesh.dim)))
        throw std::invalid_argument("Weight::dyadic_values: weight is not constant on dyadic cells");
    int n = mesh.dim;
    std::int64_t K = mesh.dyadic_per_axis();
    std::vector<double> out(mesh.dyadic_size());
    std::vector<std::int64_t> idx(n);
    for (std::size_t d = 0; d < out.size(); ++d) {
        std::size_t rest = d;
        for (int a = n - 1; a >= 0; --a) {
            idx[a] = 3 * static_cast<std::int64_t>(rest % static_cast<std::size_t>(K));
            rest /= static_cast<std::size_t>(K);
        }
        out[d] = to_double(w_[mesh.ravel(idx)]);
    }
    return out;
}

Rational quantize_weight(double v)
{
    if (!(v > 0) || !std::isfinite(v)) throw std::invalid_argument("quantize_weight: need a finite positive value");
    int e = 0;
    double f = std::frexp(v, &e); // v = f 2^e, f in [1/2, 1)
    --e;
    auto m = static_cast<std::int64_t>(std::round(16 * f));
    if (m == 16) {
        m = 8;
        ++e;
    }
    return make_rational(m, 8) * pow2(e);
}

Weight power_weight(Mesh const& mesh, double a, Rational const& x0)
{
    if (!(a > -1 && a < 1)) throw std::invalid_argument("power_weight: exponent must lie in (-1, 1)");
    int n = mesh.dim;
    std::int64_t K = mesh.dyadic_per_axis();
    std::vector<Rational> vals(mesh.dyadic_size());
    Rational side = pow2(-mesh.level);
    std::vector<std::int64_t> idx(n);
    for (std::size_t d = 0; d < vals.size(); ++d) {
        std::size_t rest = d;
        for (int ax = n - 1; ax >= 0; --ax) {
            idx[ax] = static_cast<std::int64_t>(rest % static_cast<std::size_t>(K));
            rest /= static_cast<std::size_t>(K);
        }
        Rational r2 = 0;
        for (int ax = 0; ax < n; ++ax) {
            Rational c = mesh.lo + (make_rational(idx[ax], 1) + make_rational(1, 2)) * side - x0;
            r2 += c * c;
        }
        if (r2 == 0) throw std::invalid_argument("power_weight: x0 is a dyadic-cell centre");
        vals[d] = quantize_weight(std::pow(std::sqrt(to_double(r2)), a));
    }
    return Weight(StepFunction::from_dyadic(mesh, vals));
}

namespace {

// Summed-area table in double with one padding slot per axis.
class DoubleTable {
public:
    explicit DoubleTable(StepFunction const& f) : mesh_(f.mesh())
    {
        int n = mesh_.dim;
        std::int64_t K = mesh_.per_axis();
        stride_.assign(n, 1);
        for (int a = n - 2; a >= 0; --a) stride_[a] = stride_[a + 1] * (K + 1);
        std::size_t total = 1;
        for (int a = 0; a < n; ++a) total *= static_cast<std::size_t>(K + 1);
        t_.assign(total, 0.0);
        std::vector<std::int64_t> idx(n);
        for (std::size_t i = 0; i < f.size(); ++i) {
            idx = mesh_.unravel(i);
            std::size_t p = 0;
            for (int a = 0; a < n; ++a) p += static_cast<std::size_t>((idx[a] + 1) * stride_[a]);
            t_[p] = to_double(f[i]);
        }
        for (int a = 0; a < n; ++a) {
            for (std::size_t p = 0; p < total; ++p) {
                std::int64_t coord = static_cast<std::int64_t>(p / static_cast<std::size_t>(stride_[a])) % (K + 1);
                if (coord > 0) t_[p] += t_[p - static_cast<std::size_t>(stride_[a])];
            }
        }
    }

    double sum(std::vector<std::int64_t> const& first, std::int64_t side) const
    {
        int n = mesh_.dim;
        double s = 0;
        for (std::uint32_t corner = 0; corner < (1U << n); ++corner) {
            std::size_t p = 0;
            int flips = 0;
            for (int a = 0; a < n; ++a) {
                bool hi = (corner >> a) & 1U;
                p += static_cast<std::size_t>((first[a] + (hi ? side : 0)) * stride_[a]);
                if (!hi) ++flips;
            }
            s += (flips % 2 ? -1.0 : 1.0) * t_[p];
        }
        return s;
    }

private:
    Mesh mesh_;
    std::vector<std::int64_t> stride_;
    std::vector<double> t_;
};

Box range_box(Mesh const& mesh, std::vector<std::int64_t> const& first, std::int64_t side)
{
    std::vector<Rational> lo(first.size()), hi(first.size());
    for (std::size_t a = 0; a < first.size(); ++a) {
        lo[a] = mesh.cell_lower(first[a]);
        hi[a] = mesh.cell_lower(first[a] + side);
    }
    return Box(lo, hi);
}

// Running exact maximum with a double prefilter. Exact comparisons happen only
// inside a relative band around the current best.
class A2Search {
public:
    A2Search(Weight const& w)
        : mesh_(w.mesh()), dw_(w.w()), dv_(w.inverse()), ew_(w.w()), ev_(w.inverse())
    {
    }

    void offer(std::vector<std::int64_t> const& first, std::int64_t side)
    {
        ++searched_;
        double cnt = std::pow(static_cast<double>(side), mesh_.dim);
        double d = dw_.sum(first, side) * dv_.sum(first, side) / (cnt * cnt);
        constexpr double band = 1e-9;
        if (have_ && d < best_d_ * (1 - band)) return;
        Rational exact = exact_value(first, side);
        if (!have_ || exact > best_) {
            best_ = exact;
            best_d_ = to_double(exact);
            first_ = first;
            side_ = side;
            have_ = true;
        }
    }

    A2Report report(std::string search) const
    {
        A2Report r;
        r.constant = best_;
        r.witness = range_box(mesh_, first_, side_);
        r.search = std::move(search);
        r.cubes_searched = searched_;
        return r;
    }

private:
    Rational exact_value(std::vector<std::int64_t> const& first, std::int64_t side) const
    {
        CellRange r;
        r.first = first;
        r.last = first;
        for (auto& v : r.last) v += side;
        Rational cnt = 1;
        for (int a = 0; a < mesh_.dim; ++a) cnt *= side;
        return ew_.range_sum(r) * ev_.range_sum(r) / (cnt * cnt);
    }

    Mesh mesh_;
    DoubleTable dw_, dv_;
    BoxIntegrator ew_, ev_;
    bool have_ = false;
    Rational best_ = 0;
    double best_d_ = 0;
    std::vector<std::int64_t> first_;
    std::int64_t side_ = 0;
    std::uint64_t searched_ = 0;
};

} // namespace

A2Report a2_constant(Weight const& w, A2Options const& opts)
{
    Mesh const& mesh = w.mesh();
    int n = mesh.dim;
    std::int64_t K = mesh.per_axis();
    if (opts.stride <= 0) throw std::invalid_argument("a2_constant: stride must be positive");

    std::ostringstream desc;
    desc << "domain [" << mesh.lo << "," << mesh.hi << ")^" << n;

    auto const& vals = w.w().values();
    if (std::all_of(vals.begin(), vals.end(), [&](Rational const& v) { return v == vals.front(); })) {
        // equality case of Cauchy-Schwarz on every cube
        A2Report r;
        r.constant = 1;
        r.witness = mesh.domain();
        r.search = desc.str() + "; constant weight";
        r.cubes_searched = 1;
        return r;
    }

    A2Search search(w);
    std::int64_t s = opts.stride;
    std::vector<std::int64_t> first(n);
    for (std::int64_t side = s; side <= K; side += s) {
        std::int64_t positions = (K - side) / s + 1;
        std::fill(first.begin(), first.end(), 0);
        while (true) {
            search.offer(first, side);
            int ax = n - 1;
            while (ax >= 0) {
                first[ax] += s;
                if (first[ax] / s < positions) break;
                first[ax] = 0;
                --ax;
            }
            if (ax < 0) break;
        }
    }
    desc << "; lattice cubes, corner stride " << s << " cells";

    if (opts.grid_cubes) {
        int k_min = 0;
        while ((std::int64_t{1} << std::max(0, -k_min)) < mesh.hi - mesh.lo) --k_min;
        for (GridId const& g : GridId::all(n)) {
            for (int k = k_min; k <= mesh.level; ++k) {
                // index window per axis covering the domain
                std::vector<std::int64_t> jlo(n), jhi(n);
                for (int a = 0; a < n; ++a) {
                    Rational scale = pow2(k);
                    jlo[a] = floor_q((Rational(mesh.lo) - 1) * scale).get_si() - 1;
                    jhi[a] = ceil_q(Rational(mesh.hi) * scale).get_si() + 1;
                }
                std::vector<std::int64_t> j = jlo;
                while (true) {
                    Cube q(g, k, j);
                    bool clipped = false;
                    CellRange r = cell_range(mesh, q, &clipped);
                    if (!clipped && !r.empty()) search.offer(r.first, r.last[0] - r.first[0]);
                    int ax = n - 1;
                    while (ax >= 0) {
                        if (++j[ax] <= jhi[ax]) break;
                        j[ax] = jlo[ax];
                        --ax;
                    }
                    if (ax < 0) break;
                }
            }
        }
        desc << "; cubes of all " << (1 << n) << " grids";
    }
    return search.report(desc.str());
}

double weighted_norm(StepFunction const& f, Weight const& w)
{
    if (!(f.mesh() == w.mesh())) throw std::invalid_argument("weighted_norm: mesh mismatch");
    Rational s = 0;
    for (std::size_t i = 0; i < f.size(); ++i) s += f[i] * f[i] * w.w()[i];
    return std::sqrt(to_double(s * f.mesh().cell_measure()));
}

DenseOperator::DenseOperator(std::size_t n, std::vector<double> entries) : n_(n), a_(std::move(entries))
{
    if (a_.size() != n_ * n_) throw std::invalid_argument("DenseOperator: need n*n entries");
}

void DenseOperator::apply(std::vector<double> const& x, std::vector<double>& y) const
{
    y.assign(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
        double s = 0;
        for (std::size_t j = 0; j < n_; ++j) s += a_[i * n_ + j] * x[j];
        y[i] = s;
    }
}

void DenseOperator::apply_adjoint(std::vector<double> const& x, std::vector<double>& y) const
{
    y.assign(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = 0; j < n_; ++j) y[j] += a_[i * n_ + j] * x[i];
}

SparseAveragingOperator::SparseAveragingOperator(std::size_t n, std::vector<std::pair<std::size_t, std::size_t>> ranges)
    : n_(n), ranges_(std::move(ranges))
{
    for (auto const& [a, b] : ranges_)
        if (!(a < b && b <= n_)) throw std::invalid_argument("SparseAveragingOperator: bad range");
}

SparseAveragingOperator SparseAveragingOperator::from_family(SparseFamily const& s, Mesh const& mesh)
{
    if (mesh.dim != 1) throw std::invalid_argument("SparseAveragingOperator: one-dimensional mesh only");
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    for (auto const& [k, q] : s.members()) {
        if (!q.grid().is_standard() || q.scale() > mesh.level)
            throw std::invalid_argument("SparseAveragingOperator: need standard cubes at scale <= mesh level");
        bool clipped = false;
        CellRange r = cell_range(mesh, q, &clipped);
        if (clipped || r.empty()) throw std::out_of_range("SparseAveragingOperator: cube leaves the mesh");
        ranges.emplace_back(static_cast<std::size_t>(r.first[0] / 3), static_cast<std::size_t>(r.last[0] / 3));
    }
    return SparseAveragingOperator(mesh.dyadic_size(), std::move(ranges));
}

void SparseAveragingOperator::apply(std::vector<double> const& x, std::vector<double>& y) const
{
    std::vector<double> prefix(n_ + 1, 0.0), diff(n_ + 1, 0.0);
    for (std::size_t i = 0; i < n_; ++i) prefix[i + 1] = prefix[i] + x[i];
    for (auto const& [a, b] : ranges_) {
        double avg = (prefix[b] - prefix[a]) / static_cast<double>(b - a);
        diff[a] += avg;
        diff[b] -= avg;
    }
    y.assign(n_, 0.0);
    double run = 0;
    for (std::size_t i = 0; i < n_; ++i) {
        run += diff[i];
        y[i] = run;
    }
}

HilbertMatrix::HilbertMatrix(std::size_t n) : n_(n), diag_(2 * n - 1, 0.0)
{
    for (std::size_t m = 1; m < n; ++m) {
        double v = std::log1p(1.0 / (static_cast<double>(m) - 0.5));
        diag_[n - 1 + m] = v;
        diag_[n - 1 - m] = -v;
    }
}

double HilbertMatrix::at(std::size_t i, std::size_t j) const { return diag_[n_ - 1 + i - j]; }

void HilbertMatrix::apply(std::vector<double> const& x, std::vector<double>& y) const
{
    y.assign(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
        double const* row = diag_.data() + (n_ - 1 + i); // row[-j]
        double s = 0;
        for (std::size_t j = 0; j < n_; ++j) s += *(row - j) * x[j];
        y[i] = s;
    }
}

void HilbertMatrix::apply_adjoint(std::vector<double> const& x, std::vector<double>& y) const
{
    // antisymmetric
    apply(x, y);
    for (auto& v : y) v = -v;
}

SparseFamily chain_family(int level, Rational const& x0)
{
    if (level < 1) throw std::invalid_argument("chain_family: level must be positive");
    if (!(x0 > 0 && x0 < 1) || Rational(x0 * 2).get_den() != 1)
        throw std::invalid_argument("chain_family: x0 must be a level-1 dyadic point inside (0,1)");
    SparseFamily s(GridId::standard(1));
    for (int k = 1; k <= level; ++k) {
        std::int64_t c = Rational(x0 * pow2(k)).get_num().get_si();
        s.levels[k] = {Cube(s.grid, k, {c - 1}), Cube(s.grid, k, {c})};
    }
    return s;
}

NormEstimate operator_norm_weighted(LinearOperator const& op, Weight const& w, int iters, std::uint64_t seed, double tol)
{
    std::vector<double> wv = w.dyadic_values();
    std::size_t n = op.size();
    if (wv.size() != n) throw std::invalid_argument("operator_norm_weighted: operator size differs from the dyadic cell count");
    if (iters <= 0) throw std::invalid_argument("operator_norm_weighted: iters must be positive");
    std::vector<double> sw(n);
    for (std::size_t i = 0; i < n; ++i) sw[i] = std::sqrt(wv[i]);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.5, 1.5);
    std::vector<double> v(n), t(n), u(n), z(n);
    for (auto& x : v) x = dist(rng);
    auto norm = [](std::vector<double> const& x) { return std::sqrt(std::inner_product(x.begin(), x.end(), x.begin(), 0.0)); };
    double nv = norm(v);
    for (auto& x : v) x /= nv;

    NormEstimate est;
    double prev = -1;
    for (int it = 1; it <= iters; ++it) {
        est.iterations = it;
        for (std::size_t i = 0; i < n; ++i) t[i] = v[i] / sw[i];
        op.apply(t, u);
        for (std::size_t i = 0; i < n; ++i) u[i] *= sw[i];
        double cur = norm(u);
        for (std::size_t i = 0; i < n; ++i) t[i] = u[i] * sw[i];
        op.apply_adjoint(t, z);
        for (std::size_t i = 0; i < n; ++i) z[i] /= sw[i];
        double lhs = cur * cur;
        double rhs = std::inner_product(v.begin(), v.end(), z.begin(), 0.0);
        double scale = std::max({std::abs(lhs), std::abs(rhs), std::numeric_limits<double>::min()});
        est.duality_gap = std::max(est.duality_gap, std::abs(lhs - rhs) / scale);
        est.value = std::max(est.value, cur);
        double nz = norm(z);
        if (nz == 0 || std::abs(cur - prev) <= tol * cur) {
            est.converged = true;
            break;
        }
        prev = cur;
        for (std::size_t i = 0; i < n; ++i) v[i] = z[i] / nz;
    }
    return est;
}

std::string ScanTable::to_csv() const
{
    std::ostringstream out;
    out << "a,A2,opnorm,ratio\n";
    for (auto const& r : rows)
        out << format_double(r.a) << ',' << format_double(r.a2_value) << ',' << format_double(r.norm.value) << ','
            << format_double(r.ratio) << '\n';
    return out.str();
}

ScanTable a2_scan(ScanOptions const& opts)
{
    for (double a : opts.exponents)
        if (!(a > -1 && a < 1)) throw std::invalid_argument("a2_scan: exponents must lie in (-1, 1)");
    Mesh mesh(1, opts.level, 0, 1);
    Rational x0 = make_rational(1, 2);
    std::unique_ptr<LinearOperator> op;
    if (opts.kind == "sparse")
        op = std::make_unique<SparseAveragingOperator>(SparseAveragingOperator::from_family(chain_family(opts.level, x0), mesh));
    else if (opts.kind == "hilbert")
        op = std::make_unique<HilbertMatrix>(mesh.dyadic_size());
    else
        throw std::invalid_argument("a2_scan: unknown operator kind '" + opts.kind + "'");

    ScanTable table;
    table.kind = opts.kind;
    table.level = opts.level;
    for (double a : opts.exponents) {
        ScanRow row;
        row.a = a;
        Weight w = power_weight(mesh, a, x0);
        row.a2 = a2_constant(w, opts.a2).constant;
        row.a2_value = to_double(row.a2);
        row.norm = operator_norm_weighted(*op, w, opts.iters, opts.seed);
        row.ratio = row.norm.value / row.a2_value;
        table.rows.push_back(std::move(row));
    }
    // least squares of norm against A2
    double n = static_cast<double>(table.rows.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto const& r : table.rows) {
        sx += r.a2_value;
        sy += r.norm.value;
        sxx += r.a2_value * r.a2_value;
        sxy += r.a2_value * r.norm.value;
    }
    double var = n * sxx - sx * sx;
    if (n > 0 && var > 0) {
        table.slope = (n * sxy - sx * sy) / var;
        table.intercept = (sy - table.slope * sx) / n;
    }
    return table;
}

} // namespace sparsedom

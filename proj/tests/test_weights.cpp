#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "sparsedom/czo.hpp"
#include "sparsedom/weights.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>

using namespace sparsedom;

namespace {

Rational q(long n, long d = 1) { return make_rational(n, d); }

Weight random_weight(Mesh const& mesh, std::mt19937_64& rng)
{
    std::uniform_int_distribution<int> num(1, 9), den(1, 4);
    std::vector<Rational> dv(mesh.dyadic_size());
    for (auto& v : dv) v = q(num(rng), den(rng));
    return Weight(StepFunction::from_dyadic(mesh, dv));
}

// Exact max over every cube with corners on the cell lattice (the grid cubes
// are among them).
Rational brute_a2(Weight const& w)
{
    Mesh const& mesh = w.mesh();
    int n = mesh.dim;
    std::int64_t K = mesh.per_axis();
    Rational best = 0;
    std::vector<std::int64_t> first(n);
    for (std::int64_t side = 1; side <= K; ++side) {
        std::int64_t pos = K - side + 1;
        std::int64_t total = 1;
        for (int a = 0; a < n; ++a) total *= pos;
        for (std::int64_t t = 0; t < total; ++t) {
            std::int64_t rest = t;
            for (int a = n - 1; a >= 0; --a) {
                first[a] = rest % pos;
                rest /= pos;
            }
            CellRange r;
            r.first = first;
            r.last = first;
            for (auto& v : r.last) v += side;
            Rational sw = 0, sv = 0;
            for_each_cell(mesh, r, [&](std::size_t c) {
                sw += w.w()[c];
                sv += w.inverse()[c];
            });
            Rational cnt = 1;
            for (int a = 0; a < n; ++a) cnt *= side;
            Rational v = sw * sv / (cnt * cnt);
            if (v > best) best = v;
        }
    }
    return best;
}

double svd_norm(LinearOperator const& op, std::vector<double> const& w)
{
    std::size_t n = op.size();
    Eigen::MatrixXd b(n, n);
    std::vector<double> e(n), col;
    for (std::size_t j = 0; j < n; ++j) {
        std::fill(e.begin(), e.end(), 0.0);
        e[j] = 1;
        op.apply(e, col);
        for (std::size_t i = 0; i < n; ++i) b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::sqrt(w[i]) * col[i] / std::sqrt(w[j]);
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(b);
    return svd.singularValues()(0);
}

} // namespace

TEST_CASE("quantised weights")
{
    CHECK(quantize_weight(1.0) == 1);
    CHECK(quantize_weight(3.0) == 3);
    CHECK(quantize_weight(0.3) == q(5, 16));
    CHECK(quantize_weight(1.99) == 2);
    CHECK_THROWS(quantize_weight(0.0));
    CHECK_THROWS(quantize_weight(-1.0));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ex(-30, 30);
    for (int t = 0; t < 2000; ++t) {
        double v = std::exp2(ex(rng));
        Rational r = quantize_weight(v);
        CHECK(std::abs(to_double(r) / v - 1) <= 1.0 / 16 + 1e-15);
        // mantissa m/8 with m in 8..15
        mpz_class num = r.get_num(), den = r.get_den();
        while (num % 2 == 0 && num > 15) num /= 2;
        CHECK(num <= 15);
    }
}

TEST_CASE("weight construction")
{
    Mesh mesh(1, 2, 0, 1);
    CHECK_THROWS(Weight(StepFunction::constant(mesh, 0)));
    StepFunction f = StepFunction::constant(mesh, 2);
    f[3] = -1;
    CHECK_THROWS(Weight(f));
    Weight w(StepFunction::constant(mesh, q(3, 2)));
    CHECK(w.inverse()[0] == q(2, 3));
    CHECK_THROWS(power_weight(mesh, 1.0, q(1, 2)));
    CHECK_THROWS(power_weight(mesh, -1.0, q(1, 2)));
    Weight p = power_weight(mesh, 0.5, q(1, 2));
    // |x - 1/2|^{1/2} at 1/8 is 0.612..., rounded to 5/8
    CHECK(p.w()[0] == q(5, 8));
    CHECK(p.dyadic_values().size() == 4);
}

TEST_CASE("A2 constant against brute force")
{
    std::mt19937_64 rng(11);
    for (int t = 0; t < 6; ++t) {
        Mesh mesh(1, 3, 0, 1);
        Weight w = random_weight(mesh, rng);
        A2Report r = a2_constant(w);
        CHECK(r.constant == brute_a2(w));
        CHECK(average(w.w(), r.witness) * average(w.inverse(), r.witness) == r.constant);
        CHECK(r.constant >= 1);
    }
    for (int t = 0; t < 3; ++t) {
        Mesh mesh(2, 1, 0, 1);
        Weight w = random_weight(mesh, rng);
        A2Report r = a2_constant(w);
        CHECK(r.constant == brute_a2(w));
        CHECK(r.witness.is_cube());
    }
}

TEST_CASE("A2 invariances")
{
    std::mt19937_64 rng(5);
    Mesh mesh(1, 4, 0, 1);
    Weight w = random_weight(mesh, rng);
    Rational a = a2_constant(w).constant;
    CHECK(a2_constant(Weight(w.w() * q(7, 3))).constant == a);
    CHECK(a2_constant(Weight(w.inverse())).constant == a);
    CHECK(a2_constant(Weight(StepFunction::constant(mesh, 5))).constant == 1);
    CHECK(a2_constant(power_weight(mesh, 0.0, q(1, 2))).constant == 1);
    // a coarser corner lattice searches a subfamily
    A2Options coarse;
    coarse.stride = 3;
    coarse.grid_cubes = false;
    CHECK(a2_constant(w, coarse).constant <= a);
    // power weights grow more singular as |a| grows
    Rational prev = 1;
    for (double e : {0.2, 0.5, 0.8}) {
        Rational cur = a2_constant(power_weight(mesh, e, q(1, 2))).constant;
        CHECK(cur > prev);
        prev = cur;
    }
}

TEST_CASE("weighted norm")
{
    Mesh mesh(1, 3, 0, 1);
    Weight one(StepFunction::constant(mesh, 1));
    CHECK(weighted_norm(StepFunction::constant(mesh, 1), one) == doctest::Approx(1.0).epsilon(1e-15));
    std::mt19937_64 rng(2);
    Weight w = random_weight(mesh, rng);
    StepFunction f = StepFunction::indicator(mesh, Box({q(1, 4)}, {q(1, 2)}));
    Rational expect = 0;
    for (std::size_t i = 0; i < f.size(); ++i) expect += f[i] * w.w()[i] * mesh.cell_measure();
    CHECK(weighted_norm(f, w) == doctest::Approx(std::sqrt(to_double(expect))).epsilon(1e-14));
}

TEST_CASE("operator norms: identity and one-cube projection")
{
    Mesh mesh(1, 5, 0, 1);
    std::mt19937_64 rng(9);
    Weight one(StepFunction::constant(mesh, 1));
    Weight w = random_weight(mesh, rng);
    IdentityOperator id(mesh.dyadic_size());
    NormEstimate e = operator_norm_weighted(id, w, 50, 1);
    CHECK(e.value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(e.converged);

    SparseAveragingOperator proj(mesh.dyadic_size(), {{4, 20}});
    CHECK(operator_norm_weighted(proj, one, 50, 1).value == doctest::Approx(1.0).epsilon(1e-12));
    // rank one: the norm on L^2(w) is (average(w) average(1/w))^{1/2}
    Box b({mesh.cell_lower(12)}, {mesh.cell_lower(60)});
    double expect = std::sqrt(to_double(average(w.w(), b) * average(w.inverse(), b)));
    NormEstimate pe = operator_norm_weighted(proj, w, 50, 1);
    CHECK(pe.value == doctest::Approx(expect).epsilon(1e-10));
    CHECK(pe.duality_gap < 1e-10);
}

TEST_CASE("operator norms against the SVD")
{
    Mesh mesh(1, 3, 0, 1); // 8 dyadic cells
    std::mt19937_64 rng(21);
    std::normal_distribution<double> g;
    for (int t = 0; t < 10; ++t) {
        Weight w = random_weight(mesh, rng);
        std::vector<double> wv = w.dyadic_values();
        std::vector<double> entries(64);
        for (auto& x : entries) x = g(rng);
        DenseOperator dense(8, entries);
        HilbertMatrix hil(8);
        SparseAveragingOperator chain = SparseAveragingOperator::from_family(chain_family(3, q(1, 2)), mesh);
        for (LinearOperator const* op : {static_cast<LinearOperator const*>(&dense), static_cast<LinearOperator const*>(&hil),
                                         static_cast<LinearOperator const*>(&chain)}) {
            double s = svd_norm(*op, wv);
            NormEstimate e = operator_norm_weighted(*op, w, 5000, 7, 1e-14);
            CHECK(e.value <= s * (1 + 1e-12));
            CHECK(e.value == doctest::Approx(s).epsilon(1e-6));
            CHECK(e.duality_gap < 1e-10);
        }
    }
}

TEST_CASE("weight scaling leaves operator norms unchanged")
{
    Mesh mesh(1, 6, 0, 1);
    std::mt19937_64 rng(4);
    Weight w = random_weight(mesh, rng);
    Weight w2(w.w() * q(1000));
    SparseAveragingOperator chain = SparseAveragingOperator::from_family(chain_family(6, q(1, 2)), mesh);
    double a = operator_norm_weighted(chain, w, 300, 3).value;
    double b = operator_norm_weighted(chain, w2, 300, 3).value;
    CHECK(std::abs(a - b) <= 1e-9 * a);
    HilbertMatrix hil(mesh.dyadic_size());
    a = operator_norm_weighted(hil, w, 300, 3).value;
    b = operator_norm_weighted(hil, w2, 300, 3).value;
    CHECK(std::abs(a - b) <= 1e-9 * a);
}

TEST_CASE("Hilbert matrix entries")
{
    Mesh mesh(1, 3, 0, 1);
    HilbertMatrix h(8);
    for (std::size_t i = 0; i < 8; ++i) {
        for (std::size_t j = 0; j < 8; ++j) {
            std::vector<Rational> dv(8, Rational(0));
            dv[j] = 1;
            StepFunction f = StepFunction::from_dyadic(mesh, dv);
            Rational x = (make_rational(static_cast<long>(i), 1) + q(1, 2)) * q(1, 8);
            double direct = hilbert_apply(f, x, 1e-14, 100);
            CHECK(h.at(i, j) == doctest::Approx(direct).epsilon(1e-9));
            CHECK(h.at(i, j) == -h.at(j, i));
        }
    }
}

TEST_CASE("chain family")
{
    SparseFamily s = chain_family(6, q(1, 2));
    CHECK(s.size() == 12);
    CHECK(check_sparse(s, Mesh(1, 6, 0, 1)).ok);
    CHECK(s.levels.at(1)[0].to_box() == Box({q(0)}, {q(1, 2)}));
    CHECK(s.levels.at(6)[1].to_box() == Box({q(1, 2)}, {q(1, 2) + q(1, 64)}));
    CHECK_THROWS(chain_family(4, q(1, 4)));
    CHECK_THROWS(chain_family(0, q(1, 2)));
}

TEST_CASE("A2 scan")
{
    ScanOptions o;
    o.level = 6;
    o.iters = 300;
    o.exponents = {0, 0.5, 0.9};
    ScanTable t = a2_scan(o);
    REQUIRE(t.rows.size() == 3);
    CHECK(t.rows[0].a2 == 1);
    CHECK(t.rows[1].a2 > 1);
    CHECK(t.rows[2].a2 > t.rows[1].a2);
    for (auto const& r : t.rows) CHECK(r.ratio == doctest::Approx(r.norm.value / r.a2_value));
    CHECK(t.to_csv().rfind("a,A2,opnorm,ratio\n", 0) == 0);
    CHECK(std::isfinite(t.slope));

    o.kind = "hilbert";
    ScanTable h = a2_scan(o);
    CHECK(h.rows.size() == 3);
    // the unweighted discrete Hilbert norm stays below pi
    CHECK(h.rows[0].norm.value < M_PI);
    CHECK(h.rows[0].norm.value > 2.5);

    o.exponents = {1.0};
    CHECK_THROWS(a2_scan(o));
    o.exponents = {-1.0};
    CHECK_THROWS(a2_scan(o));
    o.exponents = {0.5};
    o.kind = "riesz";
    CHECK_THROWS(a2_scan(o));
}

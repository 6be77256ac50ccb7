#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "sparsedom/geometry.hpp"

#include <algorithm>
#include <random>
#include <set>

using namespace sparsedom;

namespace {

Rational q(long n, long d = 1) { return make_rational(n, d); }

Box interval(Rational a, Rational b) { return Box({a}, {b}); }

} // namespace

TEST_CASE("children bisect the standard unit interval")
{
    Cube unit(GridId::standard(1), 0, {0});
    auto kids = children(unit);
    REQUIRE(kids.size() == 2);
    CHECK(kids[0].to_box() == interval(0, q(1, 2)));
    CHECK(kids[1].to_box() == interval(q(1, 2), 1));
}

TEST_CASE("children of a shifted cube use the alternating offset")
{
    Cube c(GridId(1, 1), 0, {0});
    CHECK(c.to_box() == interval(q(1, 3), q(4, 3)));
    auto kids = children(c);
    REQUIRE(kids.size() == 2);
    CHECK(kids[0].to_box() == interval(q(1, 3), q(5, 6)));
    CHECK(kids[1].to_box() == interval(q(5, 6), q(4, 3)));
    for (auto const& k : kids) CHECK(k.parent() == c);
}

TEST_CASE("children in two dimensions are four quarter squares")
{
    Cube unit(GridId::standard(2), 0, {0, 0});
    auto kids = children(unit);
    REQUIRE(kids.size() == 4);
    Rational total = 0;
    for (auto const& k : kids) {
        CHECK(k.measure() == q(1, 4));
        CHECK(unit.contains(k));
        total += k.measure();
    }
    CHECK(total == 1);
    for (std::size_t i = 0; i < kids.size(); ++i)
        for (std::size_t j = i + 1; j < kids.size(); ++j) CHECK_FALSE(kids[i].to_box().intersects(kids[j].to_box()));
}

TEST_CASE("children partition the parent on random cubes of every grid")
{
    std::mt19937_64 rng(7);
    for (int dim : {1, 2}) {
        for (auto const& g : GridId::all(dim)) {
            for (int t = 0; t < 200; ++t) {
                int k = static_cast<int>(rng() % 13) - 4;
                std::vector<std::int64_t> j(dim);
                for (auto& x : j) x = static_cast<std::int64_t>(rng() % 41) - 20;
                Cube c(g, k, j);
                auto kids = children(c);
                Rational total = 0;
                for (auto const& kid : kids) {
                    CHECK(kid.scale() == k + 1);
                    CHECK(kid.grid() == g);
                    CHECK(kid.parent() == c);
                    CHECK(c.to_box().contains(kid.to_box()));
                    total += kid.measure();
                }
                CHECK(total == c.measure());
            }
        }
    }
}

TEST_CASE("cover_cube hand-executed examples")
{
    SUBCASE("[2/5, 3/5) lands in [0,1) of the standard grid")
    {
        auto cov = cover_cube(interval(q(2, 5), q(3, 5)));
        CHECK(cov.grid.is_standard());
        CHECK(cov.cube.to_box() == interval(0, 1));
    }
    SUBCASE("[0,1) needs the shifted grid: [-8/3, 4/3)")
    {
        auto cov = cover_cube(interval(0, 1));
        CHECK(cov.grid == GridId(1, 1));
        CHECK(cov.cube.scale() == -2);
        CHECK(cov.cube.index(0) == -1);
        CHECK(cov.cube.to_box() == interval(q(-8, 3), q(4, 3)));
    }
    SUBCASE("[1/3, 2/3) attains the factor 6 exactly")
    {
        auto cov = cover_cube(interval(q(1, 3), q(2, 3)));
        CHECK(cov.grid.is_standard());
        CHECK(cov.cube.to_box() == interval(0, 2));
        CHECK(cov.cube.side() == 6 * q(1, 3));
    }
}

TEST_CASE("cover_cube rejects empty and non-cubic boxes")
{
    CHECK_THROWS_AS(cover_cube(interval(1, 1)), std::invalid_argument);
    CHECK_THROWS_AS(cover_cube(Box({0, 0}, {1, q(1, 2)})), std::invalid_argument);
}

TEST_CASE("cover_cube contains and is at most six times larger")
{
    std::mt19937_64 rng(11);
    for (int dim : {1, 2}) {
        for (int t = 0; t < 20000; ++t) {
            // side 2^{-12} .. 1 with rational jitter, corner with denominators 3^a 2^b
            long den = 1L << (rng() % 13);
            long num = 1 + static_cast<long>(rng() % static_cast<unsigned long>(den));
            Rational side = make_rational(num, den);
            if (rng() % 3 == 0) side *= q(2, 3);
            std::vector<Rational> corner(dim);
            for (auto& c : corner) c = make_rational(static_cast<long>(rng() % 20001) - 10000, 3L * 4096);
            Box b = Box::cube(corner, side);
            auto cov = cover_cube(b);
            CHECK(cov.cube.to_box().contains(b));
            CHECK(cov.cube.side() <= 6 * side);
        }
    }
}

TEST_CASE("dilate examples")
{
    Cube half(GridId::standard(1), 1, {1});
    CHECK(dilate(half, 0) == half.to_box());
    CHECK(dilate(half, 1) == interval(q(1, 4), q(5, 4)));
    Cube sq(GridId::standard(2), 1, {0, 0});
    CHECK(dilate(sq, 2) == Box({q(-3, 4), q(-3, 4)}, {q(5, 4), q(5, 4)}));
}

TEST_CASE("same-grid cubes are nested or disjoint")
{
    std::mt19937_64 rng(3);
    for (auto const& g : GridId::all(2)) {
        for (int t = 0; t < 2000; ++t) {
            auto rand_cube = [&] {
                int k = static_cast<int>(rng() % 6);
                std::vector<std::int64_t> j{static_cast<std::int64_t>(rng() % (1U << k)) - 1,
                                            static_cast<std::int64_t>(rng() % (1U << k)) - 1};
                return Cube(g, k, j);
            };
            Cube a = rand_cube(), b = rand_cube();
            Box ab = a.to_box(), bb = b.to_box();
            bool meet = ab.intersects(bb);
            CHECK(meet == a.intersects(b));
            if (!meet) continue;
            Box inter = ab.intersection(bb);
            CHECK((inter == ab || inter == bb));
            if (a.scale() <= b.scale()) CHECK(a.contains(b));
        }
    }
}

TEST_CASE("ancestor agrees with locating the lower corner")
{
    std::mt19937_64 rng(5);
    for (auto const& g : GridId::all(1)) {
        for (int t = 0; t < 500; ++t) {
            int k = static_cast<int>(rng() % 10);
            Cube c(g, k, {static_cast<std::int64_t>(rng() % 2001) - 1000});
            int up = static_cast<int>(rng() % 12);
            Cube a = c.ancestor(k - up);
            CHECK(a == locate(g, k - up, {c.lower(0)}));
            CHECK(a.contains(c));
        }
    }
}

namespace {

// All maximal standard cubes (levels 0..L, inside domain) with Q and 3Q in omega.
std::set<Cube> whitney_oracle(CellSet const& omega)
{
    Box domain({Rational(omega.lo)}, {Rational(omega.hi)});
    std::vector<Cube> good;
    for (int k = 0; k <= omega.level; ++k) {
        for (std::int64_t j = omega.lo << k; j < (omega.hi << k); ++j) {
            Cube c(GridId::standard(1), k, {j});
            Box b = c.to_box();
            if (omega.covers(b) && omega.covers(scale_box(b, 3))) good.push_back(c);
        }
    }
    std::set<Cube> maximal;
    for (auto const& c : good) {
        bool dominated = std::any_of(good.begin(), good.end(), [&](Cube const& o) { return o.scale() < c.scale() && o.contains(c); });
        if (!dominated) maximal.insert(c);
    }
    return maximal;
}

CellSet band(int level, Rational a, Rational b)
{
    CellSet s(1, level, -1, 2);
    for (std::size_t i = 0; i < s.size(); ++i) {
        Cube c = s.cell_cube(i);
        s.cells[i] = c.lower(0) >= a && c.upper(0) <= b;
    }
    return s;
}

} // namespace

TEST_CASE("whitney decomposition of an interior band")
{
    CellSet omega = band(5, q(1, 4), q(3, 4));
    auto w = whitney_decompose(omega);
    Cube centre_half = locate(GridId::standard(1), 3, {q(3, 8)});
    CHECK(std::find(w.cubes.begin(), w.cubes.end(), centre_half) != w.cubes.end());

    std::set<Cube> got(w.cubes.begin(), w.cubes.end());
    CHECK(got == whitney_oracle(omega));

    Rational total = 0;
    std::vector<Cube> all = w.cubes;
    all.insert(all.end(), w.residue.begin(), w.residue.end());
    for (auto const& c : all) total += c.measure();
    CHECK(total == omega.measure());
    for (std::size_t i = 0; i < all.size(); ++i)
        for (std::size_t j = i + 1; j < all.size(); ++j) CHECK_FALSE(all[i].intersects(all[j]));
    for (auto const& c : w.cubes) CHECK(omega.covers(scale_box(c.to_box(), 3)));
    for (auto const& c : w.residue) {
        CHECK(c.scale() == omega.level);
        CHECK_FALSE(omega.covers(scale_box(c.to_box(), 3)));
    }
}

TEST_CASE("whitney decomposition of random unions matches the brute-force oracle")
{
    std::mt19937_64 rng(17);
    for (int t = 0; t < 30; ++t) {
        CellSet omega(1, 4, -1, 2);
        for (int r = 0; r < 3; ++r) {
            std::size_t a = 2 + rng() % (omega.size() - 6);
            std::size_t len = 1 + rng() % 12;
            for (std::size_t i = a; i < std::min(omega.size() - 2, a + len); ++i) omega.cells[i] = true;
        }
        auto w = whitney_decompose(omega);
        std::set<Cube> got(w.cubes.begin(), w.cubes.end());
        CHECK(got == whitney_oracle(omega));
        Rational total = 0;
        for (auto const& c : w.cubes) total += c.measure();
        for (auto const& c : w.residue) total += c.measure();
        CHECK(total == omega.measure());
    }
}

TEST_CASE("whitney edge cases")
{
    CellSet empty(1, 3, -1, 2);
    CHECK(whitney_decompose(empty).cubes.empty());
    CellSet full(1, 3, -1, 2);
    std::fill(full.cells.begin(), full.cells.end(), true);
    CHECK_THROWS_AS(whitney_decompose(full), std::invalid_argument);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "sparsedom/harness.hpp"

#include <filesystem>
#include <fstream>
#include <set>

using namespace sparsedom;

TEST_CASE("generated functions are deterministic and supported in the core")
{
    Mesh mesh(1, 6);
    for (std::string spec : {"indicator-sums", "random-cells", "spike", "power-profile", "mixed"}) {
        for (std::uint64_t s = 1; s <= 5; ++s) {
            StepFunction f = generate_function(s, spec, mesh);
            CHECK(f.values() == generate_function(s, spec, mesh).values());
            for (std::size_t i = 0; i < f.size(); ++i)
                if (f.values()[i] != 0) {
                    Rational x = mesh.cell_lower(static_cast<std::int64_t>(i));
                    CHECK(x >= 0);
                    CHECK(x < 1);
                }
        }
    }
}

TEST_CASE("spike is one dyadic cell and indicator sums take small integer values")
{
    Mesh mesh(1, 5);
    for (std::uint64_t s = 1; s <= 10; ++s) {
        StepFunction spike = generate_function(s, "spike", mesh);
        std::size_t nonzero = 0;
        for (auto const& v : spike.values()) nonzero += v != 0;
        CHECK(nonzero == 3);
        StepFunction sums = generate_function(s, "indicator-sums", mesh);
        for (auto const& v : sums.values()) {
            CHECK(v.get_den() == 1);
            CHECK(v >= 0);
            CHECK(v <= 3);
        }
    }
}

TEST_CASE("unknown generator and unknown criterion are configuration errors")
{
    Mesh mesh(1, 3);
    CHECK_THROWS_AS(generate_function(1, "nope", mesh), ConfigError);
    CHECK_THROWS_AS(run_criterion("nope", ExperimentConfig{}), ConfigError);
    CHECK_THROWS_AS(run_criterion("12", ExperimentConfig{}), ConfigError);
}

TEST_CASE("config caps, keys and lists")
{
    ExperimentConfig cfg;
    cfg.level = 14;
    CHECK_NOTHROW(cfg.validate());
    cfg.level = 15;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.dim = 2;
    cfg.level = 7;
    CHECK_NOTHROW(cfg.validate());
    cfg.level = 8;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.dim = 3;
    cfg.level = 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK_THROWS_AS(cfg.set("colour", "red"), ConfigError);
    cfg.set("lambda", "1/4");
    CHECK(cfg.lambda == make_rational(1, 4));
    CHECK(parse_int_list("0..3") == std::vector<int>{0, 1, 2, 3});
    CHECK(parse_int_list("2,5") == std::vector<int>{2, 5});

    std::string path = (std::filesystem::temp_directory_path() / "sparsedom_test_config.txt").string();
    {
        std::ofstream f(path);
        f << "# comment\n\nseed = 9\nm=1..2\n";
    }
    ExperimentConfig c2;
    load_config_file(c2, path);
    CHECK(c2.seed == 9);
    CHECK(c2.m_list == std::vector<int>{1, 2});
}

TEST_CASE("uniform_int stays in range and hits every value")
{
    std::mt19937_64 rng(3);
    std::set<std::int64_t> seen;
    for (int i = 0; i < 2000; ++i) {
        auto v = uniform_int(rng, -3, 4);
        CHECK(v >= -3);
        CHECK(v <= 4);
        seen.insert(v);
    }
    CHECK(seen.size() == 8);
}

TEST_CASE("random sparse families are sparse")
{
    for (int dim : {1, 2}) {
        Mesh mesh(dim, dim == 1 ? 8 : 4);
        for (std::uint64_t s = 1; s <= 10; ++s) {
            std::mt19937_64 rng(s);
            SparseFamily fam = random_sparse_family(rng, dim, 0, mesh.level);
            CHECK(check_sparse(fam, mesh).ok);
        }
    }
}

TEST_CASE("trial runner returns results in trial order for any worker count")
{
    auto body = [](std::size_t t) { return static_cast<int>(t * t); };
    auto one = run_trials<int>(37, 1, body);
    auto many = run_trials<int>(37, 5, body);
    CHECK(one == many);
    CHECK(one[6] == 36);
    CHECK_THROWS(run_trials<int>(4, 2, [](std::size_t t) -> int {
        if (t == 3) throw std::runtime_error("x");
        return 0;
    }));
}

#include "sparsedom/harness.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace sparsedom {

namespace {

std::string trim(std::string s)
{
    auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
    while (!s.empty() && ws(static_cast<unsigned char>(s.back()))) s.pop_back();
    std::size_t i = 0;
    while (i < s.size() && ws(static_cast<unsigned char>(s[i]))) ++i;
    return s.substr(i);
}

template <class T>
T parse_number(std::string const& key, std::string const& text)
{
    std::istringstream in(text);
    T v{};
    in >> v;
    if (in.fail() || !in.eof()) throw ConfigError("bad value for " + key + ": '" + text + "'");
    return v;
}

} // namespace

std::vector<int> parse_int_list(std::string const& text)
{
    std::vector<int> out;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        auto dots = item.find("..");
        if (dots != std::string::npos) {
            int a = parse_number<int>("m", item.substr(0, dots)), b = parse_number<int>("m", item.substr(dots + 2));
            for (int v = a; v <= b; ++v) out.push_back(v);
        } else {
            out.push_back(parse_number<int>("m", item));
        }
    }
    return out;
}

std::vector<double> parse_double_list(std::string const& text)
{
    std::vector<double> out;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ','))
        if (!trim(item).empty()) out.push_back(parse_number<double>("list", trim(item)));
    return out;
}

void ExperimentConfig::validate() const
{
    if (dim != 1 && dim != 2) throw ConfigError("dim must be 1 or 2");
    if (level < 0) throw ConfigError("level must be nonnegative");
    if (dim == 1 && level > 14) throw ConfigError("level above the cap 14 for dim 1");
    if (dim == 2 && level > 7) throw ConfigError("level above the cap 7 for dim 2");
    if (!(lambda >= 0 && lambda < 1)) throw ConfigError("lambda must lie in (0,1)");
    if (trials < 0) throw ConfigError("trials must be nonnegative");
    for (int m : m_list)
        if (m < 0) throw ConfigError("m values must be nonnegative");
    if (format != "json" && format != "csv") throw ConfigError("format must be json or csv");
}

void ExperimentConfig::set(std::string const& key_in, std::string const& value_in)
{
    std::string key = trim(key_in), value = trim(value_in);
    if (key == "dim")
        dim = parse_number<int>(key, value);
    else if (key == "level")
        level = parse_number<int>(key, value);
    else if (key == "seed")
        seed = parse_number<std::uint64_t>(key, value);
    else if (key == "trials")
        trials = parse_number<int>(key, value);
    else if (key == "m")
        m_list = parse_int_list(value);
    else if (key == "lambda") {
        try {
            lambda = parse_rational(value);
        } catch (std::exception const&) {
            throw ConfigError("bad value for lambda: '" + value + "'");
        }
    } else if (key == "op")
        op_kind = value;
    else if (key == "function")
        function_spec = value;
    else if (key == "format")
        format = value;
    else if (key == "out")
        out = value;
    else if (key == "threads")
        threads = parse_number<unsigned>(key, value);
    else
        throw ConfigError("unknown config key '" + key + "'");
}

Json ExperimentConfig::to_json() const
{
    return Json{{"dim", dim},
                {"level", level},
                {"seed", seed},
                {"trials", trials},
                {"m", m_list},
                {"lambda", sparsedom::to_json(effective_lambda())},
                {"op", op_kind},
                {"function", function_spec}};
}

void load_config_file(ExperimentConfig& cfg, std::string const& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        if (trim(line).empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
        cfg.set(line.substr(0, eq), line.substr(eq + 1));
    }
}

std::int64_t uniform_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi)
{
    auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(rng());
    // rejection keeps the draw exactly uniform
    std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t r;
    do r = rng();
    while (r >= limit);
    return lo + static_cast<std::int64_t>(r % span);
}

namespace {

// Dyadic indices of the core [0,1)^n, per axis.
std::pair<std::int64_t, std::int64_t> core_range(Mesh const& mesh)
{
    std::int64_t a = -mesh.lo << mesh.level;
    return {a, a + (std::int64_t{1} << mesh.level)};
}

std::size_t dyadic_flat(Mesh const& mesh, std::vector<std::int64_t> const& idx)
{
    std::size_t flat = 0;
    for (std::int64_t v : idx) flat = flat * static_cast<std::size_t>(mesh.dyadic_per_axis()) + static_cast<std::size_t>(v);
    return flat;
}

template <class F>
void for_each_core_cell(Mesh const& mesh, F&& f)
{
    auto [a, b] = core_range(mesh);
    int n = mesh.dim;
    std::vector<std::int64_t> idx(n, a);
    while (true) {
        f(idx);
        int ax = n - 1;
        while (ax >= 0) {
            if (++idx[ax] < b) break;
            idx[ax] = a;
            --ax;
        }
        if (ax < 0) return;
    }
}

} // namespace

StepFunction generate_function(std::uint64_t seed, std::string const& spec_in, Mesh const& mesh)
{
    static const std::vector<std::string> kinds{"indicator-sums", "random-cells", "spike", "power-profile"};
    std::mt19937_64 rng(seed);
    std::string spec = spec_in;
    if (spec == "mixed") spec = kinds[static_cast<std::size_t>(uniform_int(rng, 0, 3))];
    int n = mesh.dim;
    std::int64_t side = std::int64_t{1} << mesh.level;
    auto [c0, c1] = core_range(mesh);
    std::vector<Rational> dv(mesh.dyadic_size(), Rational(0));

    if (spec == "indicator-sums") {
        for (int s = 0; s < 3; ++s) {
            std::vector<std::int64_t> lo(n), hi(n);
            for (int a = 0; a < n; ++a) {
                std::int64_t x = uniform_int(rng, 0, side - 1), y = uniform_int(rng, 0, side - 1);
                lo[a] = c0 + std::min(x, y);
                hi[a] = c0 + std::max(x, y) + 1;
            }
            for_each_core_cell(mesh, [&](std::vector<std::int64_t> const& idx) {
                for (int a = 0; a < n; ++a)
                    if (idx[a] < lo[a] || idx[a] >= hi[a]) return;
                dv[dyadic_flat(mesh, idx)] += 1;
            });
        }
    } else if (spec == "random-cells") {
        for_each_core_cell(mesh, [&](std::vector<std::int64_t> const& idx) {
            if (uniform_int(rng, 0, 1) == 0) return;
            dv[dyadic_flat(mesh, idx)] = make_rational(uniform_int(rng, 0, 8), uniform_int(rng, 1, 2));
        });
    } else if (spec == "spike") {
        std::vector<std::int64_t> idx(n);
        for (int a = 0; a < n; ++a) idx[a] = uniform_int(rng, c0, c1 - 1);
        dv[dyadic_flat(mesh, idx)] = 1;
    } else if (spec == "power-profile") {
        // |x - x0|^{-1/2} with x0 on the dyadic lattice, so no centre hits it
        std::vector<Rational> x0(n);
        for (int a = 0; a < n; ++a) x0[a] = make_rational(uniform_int(rng, 0, side), side);
        Rational h = pow2(-mesh.level);
        for_each_core_cell(mesh, [&](std::vector<std::int64_t> const& idx) {
            Rational r2 = 0;
            for (int a = 0; a < n; ++a) {
                Rational c = mesh.lo + (make_rational(idx[a], 1) + make_rational(1, 2)) * h - x0[a];
                r2 += c * c;
            }
            dv[dyadic_flat(mesh, idx)] = quantize_weight(std::pow(to_double(r2), -0.25));
        });
    } else {
        throw ConfigError("unknown function spec '" + spec_in + "'");
    }
    return StepFunction::from_dyadic(mesh, dv);
}

namespace {

void add_descendants(Cube const& q, int depth, std::vector<Cube>& out)
{
    if (depth == 0) {
        out.push_back(q);
        return;
    }
    for (auto const& c : children(q)) add_descendants(c, depth - 1, out);
}

} // namespace

SparseFamily random_sparse_family(std::mt19937_64& rng, int dim, int min_level, int max_level)
{
    if (min_level < 0 || min_level > max_level) throw ConfigError("random_sparse_family: bad level range");
    SparseFamily s(GridId::standard(dim));
    std::vector<Cube> top;
    add_descendants(Cube(s.grid, 0, std::vector<std::int64_t>(dim, 0)), min_level, top);
    std::vector<Cube> level;
    for (auto const& c : top)
        if (uniform_int(rng, 0, 1)) level.push_back(c);
    if (level.empty()) level.push_back(top[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(top.size()) - 1))]);
    int key = 0;
    while (!level.empty()) {
        s.levels[key++] = level;
        std::vector<Cube> next;
        for (auto const& q : level) {
            int room = max_level - q.scale();
            if (room <= 0) continue;
            int depth = static_cast<int>(uniform_int(rng, 1, std::min(room, 2)));
            std::vector<Cube> desc;
            add_descendants(q, depth, desc);
            // at most half of the descendants keeps the packing ratio <= 1/2
            std::size_t cap = desc.size() / 2, taken = 0;
            for (std::size_t i = desc.size(); i-- > 1;) std::swap(desc[i], desc[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(i)))]);
            for (auto const& c : desc) {
                if (taken == cap) break;
                if (uniform_int(rng, 0, 2) == 0) continue;
                next.push_back(c);
                ++taken;
            }
        }
        std::sort(next.begin(), next.end());
        level = std::move(next);
    }
    return s;
}

Json Verdict::to_json() const
{
    std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return Json{{"id", id},
                {"number", number},
                {"title", title},
                {"pass", pass},
                {"summary", summary},
                {"config", config},
                {"witness", witness},
                {"measured", measured},
                {"timestamp", Json{{"utc", buf}, {"seconds", seconds}}}};
}

std::vector<CriterionInfo> const& criteria()
{
    static const std::vector<CriterionInfo> list{
        {1, "cover-6x", "covering by one of the 2^n grids with side <= 6 l"},
        {2, "sparse-invariants", "Calderon-Zygmund families are sparse and dominate the grid maximal function"},
        {3, "maximal-sandwich", "M f <= 6^n sum M^grid f and M f <= 2 12^n sum of sparse operators"},
        {4, "median-decomposition", "median oscillation decomposition bound with constants 4 and 2"},
        {5, "adjoint-l2", "L2 bound 8 for the amalgam operators and adjoints"},
        {6, "adjoint-weak-type", "weak (1,1) ratio of the adjoint grows at most linearly in m"},
        {7, "adjoint-oscillation", "oscillation of the adjoint grows at most linearly in m"},
        {8, "hilbert-exact", "closed-form truncated Hilbert transform"},
        {9, "oscillation-stability", "oscillation estimate ratio stable under mesh refinement"},
        {10, "dominate", "pointwise domination chain for the maximal truncated Hilbert transform"},
        {11, "a2-scan", "operator norms track the A2 constant over power weights"},
    };
    return list;
}

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int pick(int configured, int pinned) { return configured > 0 ? configured : pinned; }

Cube unit_cube(int n) { return Cube(GridId::standard(n), 0, std::vector<std::int64_t>(n, 0)); }

std::string fmt(double x) { return format_double(x); }

// ---------------------------------------------------------------- 1

Rational random_rational(std::mt19937_64& rng)
{
    return make_rational(uniform_int(rng, -1000000, 1000000), uniform_int(rng, 1, 1000000));
}

Verdict cover_criterion(ExperimentConfig const& cfg)
{
    Verdict v;
    int t1 = pick(cfg.trials, 100000), t2 = std::max(1, t1 / 10);
    struct R {
        bool ok = true;
        double ratio = 0;
    };
    auto run = [&](int n, int count) {
        return run_trials<R>(static_cast<std::size_t>(count), cfg.threads, [&, n](std::size_t t) {
            std::mt19937_64 rng(trial_seed(cfg.seed, t + (n == 2 ? 0x100000000ULL : 0)));
            std::vector<Rational> corner(n);
            for (auto& c : corner) c = random_rational(rng);
            Rational side = make_rational(uniform_int(rng, 1, 1000000), uniform_int(rng, 1, 1000000)) * pow2(static_cast<int>(uniform_int(rng, -20, 20)));
            Box q = Box::cube(corner, side);
            Cover c = cover_cube(q);
            R r;
            r.ok = c.cube.to_box().contains(q) && c.cube.side() <= 6 * side && c.cube.grid() == c.grid;
            r.ratio = to_double(c.cube.side() / side);
            return r;
        });
    };
    v.config = cfg.to_json();
    v.config["trials"] = Json{{"dim1", t1}, {"dim2", t2}};
    v.pass = true;
    Json per = Json::object();
    for (int n : {1, 2}) {
        auto res = run(n, n == 1 ? t1 : t2);
        std::size_t fails = 0, worst = 0;
        for (std::size_t t = 0; t < res.size(); ++t) {
            if (!res[t].ok) {
                if (fails == 0) v.witness = Json{{"dim", n}, {"trial", t}, {"trial_seed", trial_seed(cfg.seed, t + (n == 2 ? 0x100000000ULL : 0))}};
                ++fails;
            }
            if (res[t].ratio > res[worst].ratio) worst = t;
        }
        per[std::to_string(n)] = Json{{"instances", res.size()}, {"failures", fails}, {"max_side_ratio", res.empty() ? 0.0 : res[worst].ratio}};
        v.pass = v.pass && fails == 0;
    }
    v.measured = per;
    v.summary = "failures " + std::to_string(per["1"]["failures"].get<std::size_t>() + per["2"]["failures"].get<std::size_t>()) + ", max side ratio " +
                fmt(std::max(per["1"]["max_side_ratio"].get<double>(), per["2"]["max_side_ratio"].get<double>()));
    return v;
}

// ---------------------------------------------------------------- 2, 3, 4

struct CellCheck {
    bool ok = true;
    std::string failure;
    double worst = 0; // max lhs / rhs
};

// lhs <= c rhs on every cell; tracks max lhs / rhs.
void compare_cells(StepFunction const& lhs, StepFunction const& rhs, Rational const& c, CellCheck& out, std::string const& what)
{
    for (std::size_t i = 0; i < lhs.size(); ++i) {
        if (lhs[i] > c * rhs[i]) {
            if (out.ok) out.failure = what + " fails at cell " + std::to_string(i);
            out.ok = false;
        }
        if (lhs[i] > 0) out.worst = std::max(out.worst, rhs[i] == 0 ? std::numeric_limits<double>::infinity() : to_double(lhs[i] / rhs[i]));
    }
}

Json function_witness(ExperimentConfig const& cfg, std::size_t t, std::string const& spec, Mesh const& mesh)
{
    return Json{{"trial", t}, {"trial_seed", trial_seed(cfg.seed, t)}, {"function", spec}, {"mesh", to_json(mesh)}};
}

template <class Body>
Verdict function_suite(ExperimentConfig const& cfg, int pinned_trials, int pinned_level, Body body, std::string const& label)
{
    Verdict v;
    ExperimentConfig c = cfg;
    c.trials = pick(cfg.trials, pinned_trials);
    c.level = pick(cfg.level, pinned_level);
    c.validate();
    Mesh mesh(c.dim, c.level);
    auto res = run_trials<CellCheck>(static_cast<std::size_t>(c.trials), c.threads, [&](std::size_t t) {
        return body(generate_function(trial_seed(c.seed, t), c.function_spec, mesh), mesh);
    });
    std::size_t fails = 0, worst = 0;
    for (std::size_t t = 0; t < res.size(); ++t) {
        if (!res[t].ok && fails++ == 0) {
            v.witness = function_witness(c, t, c.function_spec, mesh);
            v.witness["failure"] = res[t].failure;
        }
        if (res[t].worst > res[worst].worst) worst = t;
    }
    if (fails == 0 && !res.empty()) v.witness = function_witness(c, worst, c.function_spec, mesh);
    v.config = c.to_json();
    v.pass = fails == 0;
    double w = res.empty() ? 0.0 : res[worst].worst;
    v.measured = Json{{"instances", res.size()}, {"failures", fails}, {"worst_ratio", w}};
    v.summary = std::to_string(res.size()) + " functions, failures " + std::to_string(fails) + ", worst " + label + " " + fmt(w);
    return v;
}

Verdict sparse_criterion(ExperimentConfig const& cfg)
{
    auto body = [](StepFunction const& f, Mesh const& mesh) {
        CellCheck out;
        Rational c = pow2(mesh.dim + 1);
        StepFunction af = f.abs();
        for (auto const& g : GridId::all(mesh.dim)) {
            SparseFamily s = cz_sparse(f, g);
            FamilyCheck fc = check_sparse(s, mesh);
            if (!fc.ok && out.ok) {
                out.ok = false;
                out.failure = fc.failure;
            }
            compare_cells(dyadic_maximal(f, g), sparse_operator(s, af), c, out, "M^grid f <= 2^{n+1} A f");
        }
        return out;
    };
    Verdict v = function_suite(cfg, 100, 10, body, "M^grid f / A f");
    v.measured["bound_constant"] = "2^{n+1}";
    return v;
}

Verdict sandwich_criterion(ExperimentConfig const& cfg)
{
    struct Both {
        double maximal = 0, sparse = 0;
    };
    auto body = [](StepFunction const& f, Mesh const& mesh) {
        CellCheck out;
        int n = mesh.dim;
        StepFunction mf = hl_maximal(f), sum_m(mesh), sum_a(mesh);
        StepFunction af = f.abs();
        for (auto const& g : GridId::all(n)) {
            sum_m += dyadic_maximal(f, g);
            sum_a += sparse_operator(cz_sparse(f, g), af);
        }
        Rational six = 1, twelve = 2;
        for (int a = 0; a < n; ++a) {
            six *= 6;
            twelve *= 12;
        }
        CellCheck second;
        compare_cells(mf, sum_m, six, out, "M f <= 6^n sum M^grid f");
        compare_cells(mf, sum_a, twelve, second, "M f <= 2 12^n sum A f");
        if (!second.ok && out.ok) {
            out.ok = false;
            out.failure = second.failure;
        }
        // report the sparse-operator ratio scaled to the maximal one
        out.worst = std::max(out.worst / to_double(six), second.worst / to_double(twelve));
        return out;
    };
    return function_suite(cfg, 100, 10, body, "lhs / (constant rhs)");
}

Verdict decomposition_criterion(ExperimentConfig const& cfg)
{
    auto body = [](StepFunction const& f, Mesh const& mesh) {
        CellCheck out;
        DecompositionResult d = median_decompose(f, unit_cube(mesh.dim));
        FamilyCheck fc = check_sparse(d.family, mesh);
        BoundCheck b = check_decomposition_bound(f, d);
        out.ok = fc.ok && b.ok;
        if (!fc.ok) out.failure = fc.failure;
        if (!b.ok) out.failure = std::to_string(b.violations) + " cells violate the bound";
        out.worst = b.worst_ratio;
        return out;
    };
    return function_suite(cfg, 200, 10, body, "lhs / rhs");
}

// ---------------------------------------------------------------- 5, 6, 7

struct Instance {
    SparseFamily family;
    StepFunction f;
};

Instance adjoint_instance(std::uint64_t seed, std::string const& spec, Mesh const& mesh, int min_level)
{
    std::mt19937_64 rng(seed);
    Instance in;
    in.family = random_sparse_family(rng, mesh.dim, min_level, mesh.level);
    in.f = generate_function(rng(), spec, mesh);
    if (in.f.is_zero()) in.f = generate_function(rng(), "spike", mesh);
    return in;
}

Verdict l2_criterion(ExperimentConfig const& cfg)
{
    Verdict v;
    ExperimentConfig c = cfg;
    c.dim = 1;
    c.trials = pick(cfg.trials, 100);
    c.level = pick(cfg.level, 8);
    if (c.m_list.empty()) c.m_list = {0, 1, 2, 3, 4, 5, 6};
    c.validate();
    // covers of cubes at scale >= m - 1 fit inside [-16, 17)
    Mesh mesh(1, c.level, -16, 17);
    struct R {
        bool ok = true;
        double worst = 0;
        std::string failure;
    };
    std::size_t T = static_cast<std::size_t>(c.trials);
    auto res = run_trials<R>(T * c.m_list.size(), c.threads, [&](std::size_t t) {
        int m = c.m_list[t / T];
        Instance in = adjoint_instance(trial_seed(c.seed, t), c.function_spec, mesh, std::max(0, m - 1));
        R r;
        if (!check_sparse(in.family, mesh).ok) {
            r.ok = false;
            r.failure = "generated family is not sparse";
        }
        ShiftedFamily sh = split_families(in.family, m);
        Rational f2 = in.f.l2_norm_squared();
        for (auto const& alpha : GridId::all(1)) {
            for (bool adj : {false, true}) {
                StepFunction g = adj ? amalgam_adjoint(sh, alpha, in.f) : amalgam(sh, alpha, in.f);
                Rational g2 = g.l2_norm_squared();
                if (g2 > 64 * f2) {
                    r.ok = false;
                    r.failure = std::string(adj ? "adjoint" : "operator") + " exceeds 8 ||f||";
                }
                if (f2 > 0) r.worst = std::max(r.worst, std::sqrt(to_double(g2 / f2)));
            }
        }
        return r;
    });
    std::size_t fails = 0, worst = 0;
    Json per_m = Json::object();
    for (std::size_t t = 0; t < res.size(); ++t) {
        int m = c.m_list[t / T];
        auto key = std::to_string(m);
        if (!per_m.contains(key)) per_m[key] = 0.0;
        per_m[key] = std::max(per_m[key].get<double>(), res[t].worst);
        if (!res[t].ok && fails++ == 0)
            v.witness = Json{{"trial", t}, {"m", m}, {"trial_seed", trial_seed(c.seed, t)}, {"failure", res[t].failure}};
        if (res[t].worst > res[worst].worst) worst = t;
    }
    if (fails == 0 && !res.empty()) {
        Instance in = adjoint_instance(trial_seed(c.seed, worst), c.function_spec, mesh, std::max(0, c.m_list[worst / T] - 1));
        v.witness = Json{{"trial", worst}, {"m", c.m_list[worst / T]}, {"trial_seed", trial_seed(c.seed, worst)}, {"family", to_json(in.family)}};
    }
    v.config = c.to_json();
    v.pass = fails == 0;
    double w = res.empty() ? 0.0 : res[worst].worst;
    v.measured = Json{{"instances", res.size()}, {"failures", fails}, {"max_norm_ratio", w}, {"max_norm_ratio_by_m", per_m}, {"bound", 8}};
    v.summary = std::to_string(res.size()) + " pairs, failures " + std::to_string(fails) + ", max ||op f|| / ||f|| " + fmt(w) + " (bound 8)";
    return v;
}

// Doubling checks r(2m) / r(m) <= 3 over the pairs present in the list.
bool doubling_ok(std::map<int, double> const& r, Json& ratios)
{
    bool ok = true;
    ratios = Json::object();
    for (auto const& [m, val] : r) {
        auto it = r.find(2 * m);
        if (m == 0 || it == r.end()) continue;
        double q = val > 0 ? it->second / val : (it->second > 0 ? std::numeric_limits<double>::infinity() : 0.0);
        ratios[std::to_string(2 * m) + "/" + std::to_string(m)] = q;
        ok = ok && q <= 3;
    }
    return ok;
}

Verdict weak_type_criterion(ExperimentConfig const& cfg)
{
    Verdict v;
    ExperimentConfig c = cfg;
    c.dim = 1;
    c.trials = pick(cfg.trials, 50);
    c.level = pick(cfg.level, 8);
    if (c.m_list.empty()) c.m_list = {1, 2, 4, 8};
    c.validate();
    int mmax = *std::max_element(c.m_list.begin(), c.m_list.end());
    // covers of cubes at scale >= mmax - 3 fit inside [-64, 65)
    int min_level = std::max(0, mmax - 3);
    if (min_level > c.level) throw ConfigError("adjoint-weak-type: m too large for the mesh level");
    Mesh mesh(1, c.level, -64, 65);
    auto res = run_trials<std::vector<double>>(static_cast<std::size_t>(c.trials), c.threads, [&](std::size_t t) {
        Instance in = adjoint_instance(trial_seed(c.seed, t), c.function_spec, mesh, min_level);
        Rational l1 = in.f.l1_norm();
        std::vector<double> r;
        for (int m : c.m_list) {
            ShiftedFamily sh = split_families(in.family, m);
            double best = 0;
            for (auto const& alpha : GridId::all(1)) best = std::max(best, to_double(weak_type_sup(amalgam_adjoint(sh, alpha, in.f)) / l1));
            r.push_back(best);
        }
        return r;
    });
    std::map<int, double> r;
    std::map<int, std::size_t> arg;
    for (std::size_t i = 0; i < c.m_list.size(); ++i) {
        int m = c.m_list[i];
        for (std::size_t t = 0; t < res.size(); ++t)
            if (!r.count(m) || res[t][i] > r[m]) {
                r[m] = res[t][i];
                arg[m] = t;
            }
    }
    Json ratios, rm = Json::object(), cm = Json::object();
    v.pass = doubling_ok(r, ratios);
    for (auto const& [m, val] : r) {
        rm[std::to_string(m)] = val;
        cm[std::to_string(m)] = val / m;
    }
    v.config = c.to_json();
    v.measured = Json{{"r", rm}, {"r_over_m", cm}, {"doubling", ratios}};
    Json wit = Json::object();
    for (auto const& [m, t] : arg) wit[std::to_string(m)] = Json{{"trial", t}, {"trial_seed", trial_seed(c.seed, t)}};
    v.witness = Json{{"argmax_by_m", wit}};
    double worst = 0;
    for (auto const& [k, q] : ratios.items()) worst = std::max(worst, q.get<double>());
    v.summary = "max doubling ratio " + fmt(worst) + " (bound 3)";
    return v;
}

Verdict oscillation_criterion(ExperimentConfig const& cfg)
{
    Verdict v;
    ExperimentConfig c = cfg;
    c.dim = 1;
    c.trials = pick(cfg.trials, 50);
    c.level = pick(cfg.level, 8);
    if (c.m_list.empty()) c.m_list = {1, 2, 4, 8};
    c.validate();
    int mmax = *std::max_element(c.m_list.begin(), c.m_list.end());
    int min_level = std::max(0, mmax - 3);
    if (min_level > c.level) throw ConfigError("adjoint-oscillation: m too large for the mesh level");
    Mesh mesh(1, c.level, -64, 65);
    Rational lambda = pow2(-3);
    Box core = Mesh::core(1);
    struct R {
        std::vector<double> ratio;
        bool display_ok = true;
        std::size_t displays = 0;
    };
    auto res = run_trials<R>(static_cast<std::size_t>(c.trials), c.threads, [&](std::size_t t) {
        Instance in = adjoint_instance(trial_seed(c.seed, t), c.function_spec, mesh, min_level);
        std::mt19937_64 rng(trial_seed(c.seed, t) + 1);
        BoxIntegrator integ(in.f);
        R r;
        for (int m : c.m_list) {
            ShiftedFamily sh = split_families(in.family, m);
            double best = 0;
            for (auto const& alpha : GridId::all(1)) {
                StepFunction a = amalgam_adjoint(sh, alpha, in.f);
                std::vector<Cube> cubes;
                for (int k = 0; k <= c.level; ++k) {
                    std::int64_t span = std::int64_t{1} << k;
                    for (std::int64_t j = -span - 1; j <= span + 1; ++j) {
                        Cube q(alpha, k, {j});
                        if (!q.to_box().intersects(core) || integ.integral(q) == 0) continue;
                        cubes.push_back(q);
                    }
                }
                std::size_t worst_q = 0;
                double worst = -1;
                for (std::size_t i = 0; i < cubes.size(); ++i) {
                    Rational fq = integ.integral(cubes[i]) / cubes[i].measure();
                    double ratio = to_double(local_mean_oscillation(a, cubes[i].to_box(), lambda) / (m * fq));
                    if (ratio > worst) {
                        worst = ratio;
                        worst_q = i;
                    }
                }
                best = std::max(best, worst);
                // |A* f - c| chi_Q <= A*(f chi_Q) at the worst cube and one random cube
                for (std::size_t i : {worst_q, static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(cubes.size()) - 1))}) {
                    if (cubes.empty()) break;
                    Cube const& q = cubes[i];
                    Rational cst = 0;
                    for (auto const& mem : sh.members)
                        if (mem.cover.grid() == alpha && mem.cover.contains(q)) cst += integ.integral(mem.cube) / mem.cover.measure();
                    StepFunction local = amalgam_adjoint(sh, alpha, in.f.restricted(q));
                    for_each_cell(mesh, cell_range(mesh, q), [&](std::size_t cell) {
                        if (sparsedom::abs(a[cell] - cst) > local[cell]) r.display_ok = false;
                    });
                    ++r.displays;
                }
            }
            r.ratio.push_back(best);
        }
        return r;
    });
    std::map<int, double> rm;
    bool display_ok = true;
    std::size_t displays = 0;
    for (auto const& r : res) {
        display_ok = display_ok && r.display_ok;
        displays += r.displays;
        for (std::size_t i = 0; i < c.m_list.size(); ++i) rm[c.m_list[i]] = std::max(rm[c.m_list[i]], r.ratio[i]);
    }
    Json ratios, jr = Json::object();
    bool growth = doubling_ok(rm, ratios);
    for (auto const& [m, val] : rm) jr[std::to_string(m)] = val;
    v.pass = growth && display_ok;
    v.config = c.to_json();
    v.measured = Json{{"ratio", jr}, {"doubling", ratios}, {"displays_checked", displays}, {"display_ok", display_ok}};
    v.witness = Json{{"trials", c.trials}, {"seed", c.seed}};
    double worst = 0;
    for (auto const& [k, q] : ratios.items()) worst = std::max(worst, q.get<double>());
    v.summary = "max doubling ratio " + fmt(worst) + " (bound 3), " + std::to_string(displays) + " exact displays " + (display_ok ? "hold" : "FAIL");
    return v;
}

// ---------------------------------------------------------------- 8

double quadrature(StepFunction const& f, double x, double eps, double nu)
{
    Mesh const& m = f.mesh();
    double total = 0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (f[i] == 0) continue;
        double p = to_double(m.cell_lower(static_cast<std::int64_t>(i)));
        double r = to_double(m.cell_lower(static_cast<std::int64_t>(i) + 1));
        auto integrate = [&](double a, double b) {
            if (a >= b) return 0.0;
            return boost::math::quadrature::gauss_kronrod<double, 31>::integrate([x](double y) { return 1.0 / (x - y); }, a, b, 15, 1e-13);
        };
        total += to_double(f[i]) * (integrate(std::max(p, x + eps), std::min(r, x + nu)) + integrate(std::max(p, x - nu), std::min(r, x - eps)));
    }
    return total;
}

StepFunction signed_cells(Mesh const& mesh, std::mt19937_64& rng)
{
    std::vector<Rational> dv(mesh.dyadic_size(), Rational(0));
    auto [a, b] = core_range(mesh);
    for (std::int64_t i = a; i < b; ++i) dv[static_cast<std::size_t>(i)] = make_rational(uniform_int(rng, -6, 6), uniform_int(rng, 1, 3));
    return StepFunction::from_dyadic(mesh, dv);
}

Verdict hilbert_criterion(ExperimentConfig const& cfg)
{
    Verdict v;
    ExperimentConfig c = cfg;
    c.dim = 1;
    c.trials = pick(cfg.trials, 100);
    c.level = pick(cfg.level, 4);
    c.validate();
    Mesh mesh(1, c.level);
    struct R {
        double quad = 0, additivity = 0, sublinear = 0;
    };
    auto res = run_trials<R>(static_cast<std::size_t>(c.trials), c.threads, [&](std::size_t t) {
        std::mt19937_64 rng(trial_seed(c.seed, t));
        R r;
        StepFunction f = signed_cells(mesh, rng), g = signed_cells(mesh, rng);
        Rational x = mesh.cell_center(uniform_int(rng, 0, mesh.per_axis() - 1));
        double h = to_double(mesh.cell_side());
        double eps = h * std::exp2(static_cast<double>(uniform_int(rng, -6, 3))) * (1 + uniform_int(rng, 0, 99) / 100.0);
        double nu = eps + h * static_cast<double>(uniform_int(rng, 1, 8 * mesh.per_axis())) / 4;
        double mu = eps + (nu - eps) * (1 + uniform_int(rng, 0, 97)) / 100.0;
        double direct = hilbert_apply(f, x, eps, nu);
        r.quad = std::abs(direct - quadrature(f, to_double(x), eps, nu));
        r.additivity = std::abs(direct - hilbert_apply(f, x, eps, mu) - hilbert_apply(f, x, mu, nu));
        StepFunction tf = maximal_truncated(f), tg = maximal_truncated(g), tfg = maximal_truncated(f + g);
        for (std::size_t i = 0; i < tf.size(); ++i) r.sublinear = std::max(r.sublinear, to_double(tfg[i]) - to_double(tf[i]) - to_double(tg[i]));
        return r;
    });
    R worst;
    std::size_t arg = 0;
    for (std::size_t t = 0; t < res.size(); ++t) {
        if (res[t].quad > worst.quad) arg = t;
        worst.quad = std::max(worst.quad, res[t].quad);
        worst.additivity = std::max(worst.additivity, res[t].additivity);
        worst.sublinear = std::max(worst.sublinear, res[t].sublinear);
    }
    v.pass = worst.quad <= 1e-8 && worst.additivity <= 1e-10 && worst.sublinear <= 1e-10;
    v.config = c.to_json();
    v.measured = Json{{"instances", res.size()},
                      {"max_quadrature_gap", worst.quad},
                      {"max_additivity_gap", worst.additivity},
                      {"max_sublinearity_excess", worst.sublinear}};
    v.witness = Json{{"trial", arg}, {"trial_seed", trial_seed(c.seed, arg)}, {"mesh", to_json(mesh)}};
    v.summary = "quadrature gap " + fmt(worst.quad) + " (tol 1e-8), additivity " + fmt(worst.additivity) + ", sublinearity excess " +
                fmt(worst.sublinear) + " (tol 1e-10)";
    return v;
}

// ---------------------------------------------------------------- 9

StepFunction refine(StepFunction const& f, int levels)
{
    Mesh const& m = f.mesh();
    Mesh fine(m.dim, m.level + levels, m.lo, m.hi);
    if (m.dim != 1) throw ConfigError("refine: one-dimensional input only");
    std::vector<Rational> dv(fine.dyadic_size());
    for (std::size_t d = 0; d < dv.size(); ++d) dv[d] = f[3 * (d >> levels)];
    return StepFunction::from_dyadic(fine, dv);
}

Verdict stability_criterion(ExperimentConfig const& cfg)
{
    Verdict v;
    ExperimentConfig c = cfg;
    c.dim = 1;
    c.trials = pick(cfg.trials, 100);
    c.level = pick(cfg.level, 6);
    c.validate();
    ExperimentConfig fine_cfg = c;
    fine_cfg.level = c.level + 2;
    fine_cfg.validate();
    Mesh mesh(1, c.level);
    Rational lambda = c.effective_lambda();
    struct R {
        double coarse = 0, fine = 0;
        bool defect = false;
        Cube q;
    };
    auto res = run_trials<R>(static_cast<std::size_t>(c.trials), c.threads, [&](std::size_t t) {
        std::mt19937_64 rng(trial_seed(c.seed, t));
        StepFunction f = generate_function(rng(), c.function_spec, mesh);
        int k = static_cast<int>(uniform_int(rng, 0, 3));
        std::int64_t span = std::int64_t{1} << k;
        R r;
        r.q = Cube(GridId::standard(1), k, {uniform_int(rng, -span, 2 * span - 1)});
        OscillationReport a = oscillation_estimate_report(f, r.q.to_box(), lambda);
        OscillationReport b = oscillation_estimate_report(refine(f, 2), r.q.to_box(), lambda);
        r.coarse = a.ratio;
        r.fine = b.ratio;
        r.defect = a.defect || b.defect;
        return r;
    });
    double rc = 0, rf = 0;
    std::size_t ac = 0, af = 0, defects = 0;
    for (std::size_t t = 0; t < res.size(); ++t) {
        if (res[t].defect) ++defects;
        if (res[t].coarse > rc) {
            rc = res[t].coarse;
            ac = t;
        }
        if (res[t].fine > rf) {
            rf = res[t].fine;
            af = t;
        }
    }
    double change = rc > 0 ? std::abs(rf / rc - 1) : (rf > 0 ? std::numeric_limits<double>::infinity() : 0.0);
    v.pass = defects == 0 && std::isfinite(rc) && std::isfinite(rf) && change <= 0.25;
    v.config = c.to_json();
    v.measured = Json{{"max_ratio_L", rc}, {"max_ratio_L_plus_2", rf}, {"relative_change", change}, {"defects", defects}};
    v.witness = Json{{"argmax_L", Json{{"trial", ac}, {"trial_seed", trial_seed(c.seed, ac)}, {"cube", to_json(res.empty() ? Cube() : res[ac].q)}}},
                     {"argmax_L_plus_2", Json{{"trial", af}, {"trial_seed", trial_seed(c.seed, af)}}}};
    v.summary = "max ratio " + fmt(rc) + " at L=" + std::to_string(c.level) + ", " + fmt(rf) + " at L=" + std::to_string(c.level + 2) +
                ", change " + fmt(100 * change) + "% (bound 25%)";
    return v;
}

// ---------------------------------------------------------------- 10

Verdict dominate_criterion(ExperimentConfig const& cfg)
{
    Verdict v;
    ExperimentConfig c = cfg;
    c.dim = 1;
    c.trials = pick(cfg.trials, 50);
    c.level = pick(cfg.level, 9);
    c.validate();
    Mesh mesh(1, c.level);
    auto res = run_trials<DominationReport>(static_cast<std::size_t>(c.trials), c.threads, [&](std::size_t t) {
        std::mt19937_64 rng(trial_seed(c.seed, t));
        StepFunction f = generate_function(rng(), c.function_spec, mesh);
        if (f.is_zero()) f = generate_function(rng(), "spike", mesh);
        return dominate(f);
    });
    double cmin = std::numeric_limits<double>::infinity(), cmax = 0;
    std::size_t amin = 0, amax = 0, bad = 0;
    for (std::size_t t = 0; t < res.size(); ++t) {
        if (!res[t].decomposition_ok && bad++ == 0)
            v.witness = Json{{"trial", t}, {"trial_seed", trial_seed(c.seed, t)}, {"report", to_json(res[t])}};
        if (res[t].c < cmin) {
            cmin = res[t].c;
            amin = t;
        }
        if (res[t].c > cmax) {
            cmax = res[t].c;
            amax = t;
        }
    }
    double spread = cmin > 0 ? cmax / cmin : std::numeric_limits<double>::infinity();
    v.pass = bad == 0 && spread < 2;
    if (bad == 0)
        v.witness = Json{{"argmin", Json{{"trial", amin}, {"trial_seed", trial_seed(c.seed, amin)}}},
                         {"argmax", Json{{"trial", amax}, {"trial_seed", trial_seed(c.seed, amax)}}}};
    v.config = c.to_json();
    Json cs = Json::array();
    for (auto const& r : res) cs.push_back(r.c);
    v.measured = Json{{"instances", res.size()}, {"decomposition_failures", bad}, {"c_min", cmin}, {"c_max", cmax}, {"spread", spread}, {"c", cs}};
    v.summary = "decomposition failures " + std::to_string(bad) + ", c in [" + fmt(cmin) + ", " + fmt(cmax) + "], spread " + fmt(spread) +
                " (bound 2)";
    return v;
}

// ---------------------------------------------------------------- 11

Verdict scan_criterion(ExperimentConfig const& cfg)
{
    Verdict v;
    ExperimentConfig c = cfg;
    c.dim = 1;
    c.level = pick(cfg.level, 12);
    c.validate();
    ScanOptions o;
    o.level = c.level;
    o.seed = c.seed;
    std::vector<ScanTable> tables = run_trials<ScanTable>(2, c.threads, [&](std::size_t t) {
        ScanOptions oo = o;
        oo.kind = t == 0 ? "sparse" : "hilbert";
        return a2_scan(oo);
    });
    double amin = std::numeric_limits<double>::infinity(), amax = 0;
    for (auto const& r : tables[0].rows) {
        amin = std::min(amin, r.a2_value);
        amax = std::max(amax, r.a2_value);
    }
    double span = amax / amin;
    bool ok = span >= 20;
    Json per = Json::object();
    std::string spreads;
    for (auto const& t : tables) {
        double rmin = std::numeric_limits<double>::infinity(), rmax = 0, r0 = -1;
        for (auto const& r : t.rows) {
            rmin = std::min(rmin, r.ratio);
            rmax = std::max(rmax, r.ratio);
            if (r.a == 0) r0 = r.ratio;
        }
        bool sane = r0 >= 0.1 && r0 <= 10;
        ok = ok && rmax / rmin <= 10 && sane;
        per[t.kind] = Json{{"ratio_spread", rmax / rmin}, {"unweighted_ratio", r0}, {"table", to_json(t)}};
        spreads += ", " + t.kind + " ratio spread " + fmt(rmax / rmin) + " (a=0: " + fmt(r0) + ")";
    }
    v.pass = ok;
    v.config = c.to_json();
    v.config["exponents"] = o.exponents;
    v.measured = Json{{"a2_span", span}, {"operators", per}};
    v.witness = Json{{"weights", "|x - 1/2|^a on [0,1), quantised"}, {"level", c.level}, {"seed", c.seed}};
    v.summary = "A2 span " + fmt(span) + " (need >= 20)" + spreads + " (bound 10)";
    return v;
}

double budget(int number)
{
    switch (number) {
    case 1: return 10;
    case 2: return 60;
    case 4: return 300;
    case 10: return 600;
    case 11: return 900;
    default: return 0;
    }
}

} // namespace

Verdict run_criterion(std::string const& id, ExperimentConfig const& cfg)
{
    cfg.validate();
    auto const& list = criteria();
    auto it = std::find_if(list.begin(), list.end(), [&](CriterionInfo const& c) { return c.id == id || std::to_string(c.number) == id; });
    if (it == list.end()) throw ConfigError("unknown criterion '" + id + "'");
    auto t0 = Clock::now();
    Verdict v;
    switch (it->number) {
    case 1: v = cover_criterion(cfg); break;
    case 2: v = sparse_criterion(cfg); break;
    case 3: v = sandwich_criterion(cfg); break;
    case 4: v = decomposition_criterion(cfg); break;
    case 5: v = l2_criterion(cfg); break;
    case 6: v = weak_type_criterion(cfg); break;
    case 7: v = oscillation_criterion(cfg); break;
    case 8: v = hilbert_criterion(cfg); break;
    case 9: v = stability_criterion(cfg); break;
    case 10: v = dominate_criterion(cfg); break;
    default: v = scan_criterion(cfg); break;
    }
    v.id = it->id;
    v.number = it->number;
    v.title = it->title;
    v.seconds = since(t0);
    double limit = budget(it->number);
    if (limit > 0) {
        v.measured["runtime_budget_seconds"] = limit;
        if (v.seconds >= limit) {
            v.pass = false;
            v.summary += "; runtime over budget";
        }
    }
    return v;
}

} // namespace sparsedom

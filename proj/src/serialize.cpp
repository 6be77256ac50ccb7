#include "sparsedom/serialize.hpp"

#include <stdexcept>

namespace sparsedom {

Json to_json(Rational const& q) { return q.get_num().get_str() + "/" + q.get_den().get_str(); }

Rational rational_from_json(Json const& j)
{
    if (j.is_string()) return parse_rational(j.get<std::string>());
    if (j.is_number_integer()) return make_rational(j.get<std::int64_t>(), 1);
    throw std::invalid_argument("rational_from_json: expected a \"num/den\" string");
}

Json to_json(GridId const& g)
{
    Json alpha = Json::array();
    for (int a = 0; a < g.dim(); ++a) alpha.push_back(to_json(g.alpha(a)));
    return alpha;
}

namespace {

GridId grid_from_json(Json const& j)
{
    int n = static_cast<int>(j.size());
    std::uint32_t mask = 0;
    for (int a = 0; a < n; ++a)
        if (rational_from_json(j[static_cast<std::size_t>(a)]) != 0) mask |= 1U << a;
    return GridId(n, mask);
}

} // namespace

Json to_json(Cube const& c) { return Json{{"grid", to_json(c.grid())}, {"k", c.scale()}, {"j", c.index()}}; }

Cube cube_from_json(Json const& j)
{
    return Cube(grid_from_json(j.at("grid")), j.at("k").get<int>(), j.at("j").get<std::vector<std::int64_t>>());
}

Json to_json(Box const& b)
{
    Json lo = Json::array(), hi = Json::array();
    for (int a = 0; a < b.dim(); ++a) {
        lo.push_back(to_json(b.lo[a]));
        hi.push_back(to_json(b.hi[a]));
    }
    return Json{{"lo", lo}, {"hi", hi}};
}

Json to_json(Mesh const& m) { return Json{{"dim", m.dim}, {"level", m.level}, {"lo", m.lo}, {"hi", m.hi}}; }

Json to_json(StepFunction const& f)
{
    Json vals = Json::array();
    for (auto const& v : f.values()) vals.push_back(to_json(v));
    return Json{{"mesh", to_json(f.mesh())}, {"values", vals}};
}

StepFunction step_function_from_json(Json const& j)
{
    Json const& m = j.at("mesh");
    Mesh mesh(m.at("dim").get<int>(), m.at("level").get<int>(), m.at("lo").get<std::int64_t>(), m.at("hi").get<std::int64_t>());
    std::vector<Rational> vals;
    for (auto const& v : j.at("values")) vals.push_back(rational_from_json(v));
    return StepFunction(mesh, std::move(vals));
}

Json to_json(SparseFamily const& s)
{
    Json levels = Json::object();
    for (auto const& [k, cubes] : s.levels) {
        Json arr = Json::array();
        for (auto const& c : cubes) arr.push_back(to_json(c));
        levels[std::to_string(k)] = arr;
    }
    return Json{{"grid", to_json(s.grid)}, {"levels", levels}};
}

SparseFamily family_from_json(Json const& j)
{
    SparseFamily s(grid_from_json(j.at("grid")));
    for (auto const& [key, arr] : j.at("levels").items()) {
        auto& level = s.levels[std::stoi(key)];
        for (auto const& c : arr) level.push_back(cube_from_json(c));
    }
    return s;
}

Json to_json(FamilyCheck const& c)
{
    return Json{{"ok", c.ok}, {"failure", c.failure}, {"worst_packing", to_json(c.worst_packing)}};
}

Json to_json(DecompositionResult const& d)
{
    Json coeffs = Json::array();
    for (auto const& c : d.coefficients) coeffs.push_back(to_json(c));
    Json out = to_json(d.family);
    out["q0"] = to_json(d.q0);
    out["lambda"] = to_json(d.lambda);
    out["median"] = to_json(d.base_median);
    out["coefficients"] = coeffs;
    return out;
}

Json to_json(BoundCheck const& b)
{
    return Json{{"ok", b.ok},
                {"cells_checked", b.cells},
                {"violations", b.violations},
                {"worst_cell", b.worst_cell},
                {"worst_ratio", b.worst_ratio}};
}

Json to_json(OscillationReport const& r)
{
    return Json{{"lhs", to_json(r.lhs)}, {"rhs", to_json(r.rhs)}, {"ratio", r.ratio}, {"defect", r.defect}};
}

Json to_json(DominationReport const& r)
{
    return Json{{"decomposition_ok", r.decomposition_ok},
                {"decomposition", to_json(r.decomposition)},
                {"median", to_json(r.median)},
                {"family_size", r.family_size},
                {"c", r.c},
                {"coefficient_constant", r.coefficient_constant},
                {"cells_checked", r.cells_checked},
                {"violations", r.decomposition.violations}};
}

Json to_json(A2Report const& r)
{
    return Json{{"constant", to_json(r.constant)},
                {"value", to_double(r.constant)},
                {"witness", to_json(r.witness)},
                {"search", r.search},
                {"cubes_searched", r.cubes_searched}};
}

Json to_json(NormEstimate const& e)
{
    return Json{{"value", e.value}, {"converged", e.converged}, {"iterations", e.iterations}, {"duality_gap", e.duality_gap}};
}

Json to_json(ScanTable const& t)
{
    Json rows = Json::array();
    for (auto const& r : t.rows)
        rows.push_back(Json{{"a", r.a}, {"A2", to_json(r.a2)}, {"A2_value", r.a2_value}, {"opnorm", to_json(r.norm)}, {"ratio", r.ratio}});
    return Json{{"kind", t.kind}, {"level", t.level}, {"rows", rows}, {"slope", t.slope}, {"intercept", t.intercept}};
}

} // namespace sparsedom

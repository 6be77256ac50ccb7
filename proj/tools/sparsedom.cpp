// Command-line front end. Exit codes: 0 pass, 1 check or criterion failure,
// 2 usage or configuration error.

#include "sparsedom/harness.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>

using namespace sparsedom;

namespace {

struct Flags {
    ExperimentConfig cfg;
    std::string m_text;
    std::string lambda_text;
    std::string config_path;
};

void add_common(CLI::App* sub, Flags& fl)
{
    sub->add_option("--dim", fl.cfg.dim, "dimension (1 or 2)");
    sub->add_option("--level", fl.cfg.level, "mesh level L");
    sub->add_option("--seed", fl.cfg.seed, "base seed");
    sub->add_option("--trials", fl.cfg.trials, "number of trials");
    sub->add_option("--m", fl.m_text, "m values, e.g. 0,1,2 or 0..6");
    sub->add_option("--lambda", fl.lambda_text, "lambda as num/den");
    sub->add_option("--format", fl.cfg.format, "json or csv");
    sub->add_option("--out", fl.cfg.out, "output path (default stdout)");
    sub->add_option("--config", fl.config_path, "key=value file overriding flags");
    sub->add_option("--function", fl.cfg.function_spec, "indicator-sums, random-cells, spike, power-profile or mixed");
    sub->add_option("--threads", fl.cfg.threads, "worker threads (0: hardware)");
}

ExperimentConfig finish(Flags const& fl)
{
    ExperimentConfig cfg = fl.cfg;
    if (!fl.m_text.empty()) cfg.set("m", fl.m_text);
    if (!fl.lambda_text.empty()) cfg.set("lambda", fl.lambda_text);
    if (!fl.config_path.empty()) load_config_file(cfg, fl.config_path);
    cfg.validate();
    return cfg;
}

void emit(ExperimentConfig const& cfg, std::string const& text)
{
    if (cfg.out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(cfg.out);
    if (!f) throw ConfigError("cannot write " + cfg.out);
    f << text;
}

void emit(ExperimentConfig const& cfg, Json const& j)
{
    if (cfg.format != "json") throw ConfigError("this subcommand only writes json");
    emit(cfg, j.dump(2) + "\n");
}

int with_level(ExperimentConfig& cfg, int pinned)
{
    if (cfg.level == 0) cfg.level = pinned;
    cfg.validate();
    return cfg.level;
}

Cube parse_cube(std::string const& text, int dim)
{
    // k:j0,j1,...
    auto colon = text.find(':');
    if (colon == std::string::npos) throw ConfigError("cube must be k:j0[,j1]");
    int k = std::stoi(text.substr(0, colon));
    std::vector<int> j = parse_int_list(text.substr(colon + 1));
    if (static_cast<int>(j.size()) != dim) throw ConfigError("cube index has the wrong dimension");
    return Cube(GridId::standard(dim), k, std::vector<std::int64_t>(j.begin(), j.end()));
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"sparse domination experiments"};
    app.require_subcommand(1);
    Flags fl;

    auto* cover = app.add_subcommand("cover-test", "random covering test");
    auto* decompose = app.add_subcommand("decompose", "median oscillation decomposition of a generated function on [0,1)^n");
    auto* cz = app.add_subcommand("cz-sparse", "Calderon-Zygmund sparse family of a generated function");
    auto* dom = app.add_subcommand("dominate", "domination chain for the maximal truncated Hilbert transform");
    auto* osc = app.add_subcommand("osc-estimate", "oscillation estimate on one cube");
    auto* scan = app.add_subcommand("a2-scan", "operator norms against A2 constants of power weights");
    auto* acc = app.add_subcommand("acceptance", "run acceptance criteria");
    for (auto* s : {cover, decompose, cz, dom, osc, scan, acc}) add_common(s, fl);

    unsigned grid_mask = 0;
    cz->add_option("--grid", grid_mask, "grid shift mask (bit a shifts axis a)");
    std::string cube_text = "0:0";
    osc->add_option("--cube", cube_text, "standard cube k:j0[,j1]");
    std::string exponents;
    scan->add_option("--op", fl.cfg.op_kind, "sparse or hilbert");
    scan->add_option("--exponents", exponents, "comma-separated exponents in (-1,1)");
    int iters = 200;
    scan->add_option("--iters", iters, "power iterations");
    std::vector<std::string> ids;
    bool all = false;
    acc->add_option("--id", ids, "criterion id or number (repeatable)");
    acc->add_flag("--all", all, "run every criterion");

    try {
        app.parse(argc, argv);
    } catch (CLI::ParseError const& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        ExperimentConfig cfg = finish(fl);

        if (cover->parsed()) {
            Verdict v = run_criterion("cover-6x", cfg);
            emit(cfg, v.to_json());
            return v.pass ? 0 : 1;
        }
        if (decompose->parsed()) {
            Mesh mesh(cfg.dim, with_level(cfg, 8));
            StepFunction f = generate_function(cfg.seed, cfg.function_spec, mesh);
            DecompositionResult d = median_decompose(f, Cube(GridId::standard(cfg.dim), 0, std::vector<std::int64_t>(cfg.dim, 0)));
            BoundCheck b = check_decomposition_bound(f, d);
            Json out = to_json(d);
            out["bound"] = to_json(b);
            out["sparse"] = to_json(check_sparse(d.family, mesh));
            emit(cfg, out);
            return b.ok ? 0 : 1;
        }
        if (cz->parsed()) {
            Mesh mesh(cfg.dim, with_level(cfg, 8));
            if (grid_mask >= (1U << cfg.dim)) throw ConfigError("grid mask out of range");
            StepFunction f = generate_function(cfg.seed, cfg.function_spec, mesh);
            SparseFamily s = cz_sparse(f, GridId(cfg.dim, grid_mask));
            FamilyCheck c = check_sparse(s, mesh);
            Json out = to_json(s);
            out["check"] = to_json(c);
            emit(cfg, out);
            return c.ok ? 0 : 1;
        }
        if (dom->parsed()) {
            if (cfg.dim != 1) throw ConfigError("dominate runs in dimension 1 only");
            Mesh mesh(1, with_level(cfg, 9));
            StepFunction f = generate_function(cfg.seed, cfg.function_spec, mesh);
            DominationReport r = dominate(f);
            emit(cfg, to_json(r));
            return r.decomposition_ok ? 0 : 1;
        }
        if (osc->parsed()) {
            if (cfg.dim != 1) throw ConfigError("osc-estimate runs in dimension 1 only");
            Mesh mesh(1, with_level(cfg, 6));
            StepFunction f = generate_function(cfg.seed, cfg.function_spec, mesh);
            Cube q = parse_cube(cube_text, 1);
            OscillationReport r = oscillation_estimate_report(f, q.to_box(), cfg.effective_lambda());
            Json out = to_json(r);
            out["cube"] = to_json(q);
            out["lambda"] = to_json(cfg.effective_lambda());
            emit(cfg, out);
            return r.defect ? 1 : 0;
        }
        if (scan->parsed()) {
            ScanOptions o;
            o.kind = cfg.op_kind;
            o.level = with_level(cfg, 12);
            o.seed = cfg.seed;
            o.iters = iters;
            if (!exponents.empty()) o.exponents = parse_double_list(exponents);
            ScanTable t;
            try {
                t = a2_scan(o);
            } catch (std::invalid_argument const& e) {
                throw ConfigError(e.what());
            }
            if (cfg.format == "csv")
                emit(cfg, t.to_csv());
            else
                emit(cfg, to_json(t));
            return 0;
        }
        if (acc->parsed()) {
            if (all || ids.empty()) {
                ids.clear();
                for (auto const& c : criteria()) ids.push_back(c.id);
            }
            Json reports = Json::array();
            std::string csv = "id,pass,summary\n";
            bool ok = true;
            for (auto const& id : ids) {
                Verdict v = run_criterion(id, cfg);
                std::cerr << (v.pass ? "PASS " : "FAIL ") << v.number << " " << v.id << ": " << v.summary << "\n";
                ok = ok && v.pass;
                reports.push_back(v.to_json());
                csv += v.id + "," + (v.pass ? "true" : "false") + ",\"" + v.summary + "\"\n";
            }
            if (cfg.format == "csv")
                emit(cfg, csv);
            else
                emit(cfg, reports);
            return ok ? 0 : 1;
        }
    } catch (ConfigError const& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (std::invalid_argument const& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

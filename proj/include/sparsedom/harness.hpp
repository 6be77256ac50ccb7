#pragma once

// Experiment configuration, seeded instance generators, the parallel trial
// runner and the acceptance criteria.

#include "sparsedom/serialize.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace sparsedom {

/// Bad flag, config entry or cap violation (CLI exit code 2).
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Zero or empty fields mean "use the criterion's pinned value".
struct ExperimentConfig {
    int dim = 1;
    int level = 0;
    std::uint64_t seed = 1;
    int trials = 0;
    std::vector<int> m_list;
    Rational lambda = 0;
    std::string op_kind = "sparse";
    std::string function_spec = "mixed";
    std::string format = "json";
    std::string out;
    unsigned threads = 0;

    Rational effective_lambda() const { return lambda == 0 ? pow2(-(dim + 2)) : lambda; }
    /// Throws ConfigError on dim outside {1,2}, L above the caps
    /// (14 for n=1, 7 for n=2) or lambda outside (0,1).
    void validate() const;
    /// Applies one key=value entry (same names as the CLI flags, without dashes).
    void set(std::string const& key, std::string const& value);
    Json to_json() const;
};

/// Reads key=value lines ('#' comments, blank lines ignored) into cfg.
void load_config_file(ExperimentConfig& cfg, std::string const& path);

std::vector<int> parse_int_list(std::string const& text);
std::vector<double> parse_double_list(std::string const& text);

/// Per-trial seed: seed xor trial index.
inline std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) { return seed ^ trial; }

/// Uniform integer in [lo, hi] from raw engine output (portable across
/// standard libraries, unlike std::uniform_int_distribution).
std::int64_t uniform_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi);

/// Functions supported in [0,1)^n and constant on dyadic cells, with small
/// rational values. spec: indicator-sums | random-cells | spike | power-profile,
/// or "mixed" (one of the four, chosen by the seed).
StepFunction generate_function(std::uint64_t seed, std::string const& spec, Mesh const& mesh);

/// Random standard-grid sparse family inside [0,1)^n with every cube at a
/// scale in [min_level, max_level].
SparseFamily random_sparse_family(std::mt19937_64& rng, int dim, int min_level, int max_level);

/// Runs body(trial) for trial = 0..count-1 on worker threads; results are
/// returned in trial order whatever the worker count.
template <class R>
std::vector<R> run_trials(std::size_t count, unsigned threads, std::function<R(std::size_t)> const& body)
{
    std::vector<R> out(count);
    unsigned workers = threads ? threads : std::max(1U, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(count, 1)));
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t t = w; t < count; t += workers) out[t] = body(t);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

struct Verdict {
    std::string id;
    int number = 0;
    std::string title;
    bool pass = false;
    std::string summary;
    Json config;   // effective configuration (replayable with the seed)
    Json witness;  // worst or failing instance
    Json measured; // constants and ratios
    double seconds = 0;

    /// Report object; runtime and wall clock sit under "timestamp".
    Json to_json() const;
};

struct CriterionInfo {
    int number;
    std::string id;
    std::string title;
};

std::vector<CriterionInfo> const& criteria();

/// Runs one acceptance criterion. Throws ConfigError for an unknown id or a
/// configuration outside the caps.
Verdict run_criterion(std::string const& id, ExperimentConfig const& cfg);

} // namespace sparsedom

#pragma once

// Configuration-driven experiment runner behind the command-line tool.
//
// A config is an INI file. Every key is optional except [target] function.
//
//   [experiment]
//   method = annr            ; annr | defer | nannr
//   budget = 1000            ; N, queries per run (initial design not counted)
//   repetitions = 1          ; run k uses seed + k
//   seed = 0
//   output = out             ; directory, relative to the working directory
//   checkpoints =            ; comma list of N values for MAE-vs-N curves
//
//   [target]
//   function = gaussian      ; a builtin name, or "external"
//   <key> = <value>          ; builtin parameters (dim, lo, hi, sigma2, ...)
//   command = ...            ; external only: evaluator argv, space separated
//   name = external          ; external only: label in summaries
//   dim, lo, hi              ; external only: box [lo, hi]^dim
//   timeout = 60             ; external only: seconds per request
//
//   [test]
//   mode = grid              ; grid (m = 2 only) | uniform
//   size = 10000
//   seed = 12345
//
//   [annr]
//   lambda = auto            ; or a number >= 0
//   epsilon = 1e-6
//   walk_steps = 100
//   alpha0 = off             ; or an angle in (0, 90) degrees
//   n_init = 10
//   include_corners = true
//   threads = 1
//
// [defer] and [nannr] take no keys.
//
// Outputs (each written via temp file + rename):
//   trace_rep<k>.csv   one per repetition, partial when the run failed
//   test_set.csv       x0,...,x{m-1},f
//   runs.csv           rep,seed,status,queries,mae,stop_reason
//   summary.csv        method,target,dim,reps,failed,queries,mae_mean,mae_std,test_set_hash
//   timing.csv         rep,total_ms,ms_per_query
//   checkpoints.csv    N,mae_mean,mae_std (only with checkpoints)
//
// summary.csv and runs.csv depend on the config alone; wall-clock figures
// only ever go to timing.csv.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "annr/baselines.hpp"
#include "annr/decimal.hpp"
#include "annr/engine.hpp"
#include "annr/errors.hpp"
#include "annr/external.hpp"
#include "annr/testbed.hpp"
#include "annr/trace_io.hpp"

namespace annr {

enum class Method { annr, defer, nannr };

inline std::string to_string(Method m) {
    switch (m) {
        case Method::annr: return "annr";
        case Method::defer: return "defer";
        case Method::nannr: return "nannr";
    }
    return "?";
}

inline Method parse_method(const std::string& s) {
    if (s == "annr") return Method::annr;
    if (s == "defer") return Method::defer;
    if (s == "nannr") return Method::nannr;
    throw ConfigError("method must be annr, defer or nannr, got '" + s + "'");
}

struct TargetSpec {
    std::string function;
    Params params;  // builtin parameters
    std::vector<std::string> command;
    std::string name = "external";
    std::size_t dim = 0;
    double lo = 0.0;
    double hi = 1.0;
    double timeout_s = 60.0;

    bool external() const { return function == "external"; }
};

struct ExperimentConfig {
    Method method = Method::annr;
    std::size_t budget = 1000;
    std::size_t repetitions = 1;
    std::uint64_t seed = 0;
    std::filesystem::path output = "out";
    std::vector<std::size_t> checkpoints;

    TargetSpec target;

    TestSetMode test_mode = TestSetMode::grid;
    std::size_t test_size = 10000;
    std::uint64_t test_seed = 12345;

    std::optional<double> lambda;
    double epsilon = 1e-6;
    std::size_t walk_steps = 100;
    std::optional<Degrees> alpha0;
    std::size_t n_init = 10;
    bool include_corners = true;
    unsigned threads = 1;
};

namespace detail {

inline double parse_real(const std::string& key, const std::string& v) {
    const auto d = parse_double(v);
    if (!d || !std::isfinite(*d)) throw ConfigError(key + ": expected a number, got '" + v + "'");
    return *d;
}

inline std::uint64_t parse_count(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto* end = v.data() + v.size();
    const auto res = std::from_chars(v.data(), end, out);
    if (v.empty() || res.ec != std::errc() || res.ptr != end) {
        throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
    }
    return out;
}

inline bool parse_flag(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "off" || v == "no") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

inline std::vector<std::string> split_words(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string word;
    std::istringstream is(s);
    while (std::getline(is, word, sep)) {
        const auto a = word.find_first_not_of(" \t");
        if (a == std::string::npos) continue;
        const auto b = word.find_last_not_of(" \t");
        out.push_back(word.substr(a, b - a + 1));
    }
    return out;
}

}  // namespace detail

/// Applies "section.key=value" overrides to a parsed INI tree.
inline void apply_overrides(boost::property_tree::ptree& tree, const std::vector<std::string>& overrides) {
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) throw ConfigError("override '" + o + "' is not key=value");
        const std::string path = o.substr(0, eq);
        const auto dot = path.find('.');
        if (dot == std::string::npos || dot == 0 || dot + 1 == path.size() ||
            path.find('.', dot + 1) != std::string::npos) {
            throw ConfigError("override key '" + path + "' is not section.key");
        }
        tree.put(path, o.substr(eq + 1));
    }
}

inline ExperimentConfig parse_experiment_config(const boost::property_tree::ptree& tree) {
    static const std::map<std::string, std::set<std::string>> known = {
        {"experiment", {"method", "budget", "repetitions", "seed", "output", "checkpoints"}},
        {"target", {}},
        {"test", {"mode", "size", "seed"}},
        {"annr", {"lambda", "epsilon", "walk_steps", "alpha0", "n_init", "include_corners", "threads"}},
        {"defer", {}},
        {"nannr", {}},
    };
    ExperimentConfig c;
    bool have_function = false;

    for (const auto& [section, body] : tree) {
        const auto it = known.find(section);
        if (it == known.end()) throw ConfigError("unknown section [" + section + "]");
        if (body.empty() && !body.data().empty()) throw ConfigError("key '" + section + "' outside any section");
        for (const auto& [key, node] : body) {
            const std::string name = section + "." + key;
            const std::string v = node.data();
            if (section != "target" && !it->second.contains(key)) throw ConfigError("unknown key " + name);

            if (name == "experiment.method") {
                c.method = parse_method(v);
            } else if (name == "experiment.budget") {
                c.budget = detail::parse_count(name, v);
            } else if (name == "experiment.repetitions") {
                c.repetitions = detail::parse_count(name, v);
            } else if (name == "experiment.seed") {
                c.seed = detail::parse_count(name, v);
            } else if (name == "experiment.output") {
                if (v.empty()) throw ConfigError("experiment.output is empty");
                c.output = v;
            } else if (name == "experiment.checkpoints") {
                c.checkpoints.clear();
                for (const auto& w : detail::split_words(v, ',')) c.checkpoints.push_back(detail::parse_count(name, w));
            } else if (section == "target") {
                if (key == "function") {
                    c.target.function = v;
                    have_function = true;
                } else if (key == "command") {
                    c.target.command = detail::split_words(v, ' ');
                } else if (key == "name") {
                    c.target.name = v;
                } else if (key == "timeout") {
                    c.target.timeout_s = detail::parse_real(name, v);
                } else {
                    c.target.params[key] = detail::parse_real(name, v);
                }
            } else if (name == "test.mode") {
                c.test_mode = parse_test_set_mode(v);
            } else if (name == "test.size") {
                c.test_size = detail::parse_count(name, v);
            } else if (name == "test.seed") {
                c.test_seed = detail::parse_count(name, v);
            } else if (name == "annr.lambda") {
                if (v == "auto") {
                    c.lambda.reset();
                } else {
                    c.lambda = detail::parse_real(name, v);
                }
            } else if (name == "annr.epsilon") {
                c.epsilon = detail::parse_real(name, v);
            } else if (name == "annr.walk_steps") {
                c.walk_steps = detail::parse_count(name, v);
            } else if (name == "annr.alpha0") {
                if (v == "off") {
                    c.alpha0.reset();
                } else {
                    c.alpha0 = Degrees{detail::parse_real(name, v)};
                }
            } else if (name == "annr.n_init") {
                c.n_init = detail::parse_count(name, v);
            } else if (name == "annr.include_corners") {
                c.include_corners = detail::parse_flag(name, v);
            } else if (name == "annr.threads") {
                c.threads = static_cast<unsigned>(detail::parse_count(name, v));
            }
        }
    }

    if (!have_function) throw ConfigError("[target] function is required");
    if (c.target.external()) {
        auto& t = c.target;
        auto take = [&t](const std::string& k, double fallback) {
            const auto it = t.params.find(k);
            if (it == t.params.end()) return fallback;
            const double v = it->second;
            t.params.erase(it);
            return v;
        };
        const double dim = take("dim", 0.0);
        t.lo = take("lo", 0.0);
        t.hi = take("hi", 1.0);
        if (!t.params.empty()) throw ConfigError("unknown key target." + t.params.begin()->first + " for an external target");
        if (!(dim >= 1.0) || dim != std::floor(dim)) throw ConfigError("external target needs an integer dim >= 1");
        t.dim = static_cast<std::size_t>(dim);
        if (!(t.lo < t.hi)) throw ConfigError("external target needs lo < hi");
        if (t.command.empty()) throw ConfigError("external target needs a command");
        if (!(t.timeout_s > 0.0)) throw ConfigError("target.timeout must be positive");
    } else if (!c.target.command.empty()) {
        throw ConfigError("target.command only applies to function = external");
    }

    if (c.budget < 1) throw ConfigError("experiment.budget must be at least 1");
    if (c.repetitions < 1) throw ConfigError("experiment.repetitions must be at least 1");
    if (c.test_size < 1) throw ConfigError("test.size must be at least 1");
    for (auto n : c.checkpoints) {
        if (n < 1 || n > c.budget) throw ConfigError("checkpoints must lie in [1, budget]");
    }
    std::sort(c.checkpoints.begin(), c.checkpoints.end());
    c.checkpoints.erase(std::unique(c.checkpoints.begin(), c.checkpoints.end()), c.checkpoints.end());
    return c;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path,
                                               const std::vector<std::string>& overrides = {}) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::read_ini(path.string(), tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(e.what());
    }
    apply_overrides(tree, overrides);
    return parse_experiment_config(tree);
}

/// The target function of a config. External targets open one evaluator
/// process per call; the returned function owns it.
inline TargetFunction make_target(const TargetSpec& spec) {
    if (!spec.external()) return builtin(spec.function, spec.params);
    TargetFunction fn;
    fn.name = spec.name;
    fn.box = BoundingBox::cube(spec.dim, spec.lo, spec.hi);
    const auto timeout = std::chrono::milliseconds(static_cast<long long>(spec.timeout_s * 1000.0));
    fn.evaluate = external_objective(std::make_shared<ExternalEvaluator>(spec.command, spec.dim, timeout));
    return fn;
}

struct RunRecord {
    std::size_t rep = 0;
    std::uint64_t seed = 0;
    bool failed = false;
    std::size_t queries = 0;
    double mae = 0.0;
    std::string stop_reason;
    double total_ms = 0.0;
    std::vector<std::optional<double>> checkpoint_mae;  // aligned with config checkpoints
    RunTrace trace;
};

struct ExperimentResult {
    std::string method;
    std::string target;
    std::size_t dim = 0;
    std::uint64_t test_set_hash = 0;
    std::vector<RunRecord> runs;
    std::vector<std::size_t> checkpoints;

    std::size_t failed() const {
        return static_cast<std::size_t>(std::count_if(runs.begin(), runs.end(), [](const auto& r) { return r.failed; }));
    }
    /// Mean and sample standard deviation of MAE over the successful runs.
    std::pair<double, double> mae_stats() const {
        std::vector<double> v;
        for (const auto& r : runs) {
            if (!r.failed) v.push_back(r.mae);
        }
        return mean_std(v);
    }
    std::size_t queries() const {
        std::size_t q = 0;
        for (const auto& r : runs) q += r.queries;
        return q;
    }
    double ms_per_query() const {
        double ms = 0.0;
        for (const auto& r : runs) ms += r.total_ms;
        const auto q = queries();
        return q ? ms / static_cast<double>(q) : 0.0;
    }

    static std::pair<double, double> mean_std(const std::vector<double>& v) {
        if (v.empty()) return {std::nan(""), std::nan("")};
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        if (v.size() < 2) return {mean, 0.0};
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
    }
};

namespace detail {

inline std::string hex64(std::uint64_t h) {
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

inline std::string csv_cell(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '\n') {
            out += ' ';
            continue;
        }
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + '"';
}

inline std::string format_stat(double v) { return std::isnan(v) ? std::string() : format_double(v); }

/// One repetition. Errors are caught; the record then carries the partial
/// trace and the message.
inline RunRecord run_once(const ExperimentConfig& cfg, std::size_t rep, const TestSet& test) {
    RunRecord rec;
    rec.rep = rep;
    rec.seed = cfg.seed + rep;
    rec.checkpoint_mae.assign(cfg.checkpoints.size(), std::nullopt);
    const auto t0 = std::chrono::steady_clock::now();
    auto finish_clock = [&] {
        rec.total_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    };

    try {
        const TargetFunction fn = make_target(cfg.target);
        switch (cfg.method) {
            case Method::annr: {
                EngineConfig ec;
                ec.box = fn.box;
                ec.lambda = cfg.lambda;
                ec.epsilon = cfg.epsilon;
                ec.budget = cfg.budget;
                ec.walk_steps = cfg.walk_steps;
                ec.alpha0 = cfg.alpha0;
                ec.n_init = cfg.n_init;
                ec.include_corners = cfg.include_corners;
                ec.seed = rec.seed;
                ec.domain = fn.domain;
                ec.threads = cfg.threads;
                Engine engine(ec, fn.evaluate);
                std::size_t next = 0;
                auto snapshot = [&](std::size_t upto) {
                    while (next < cfg.checkpoints.size() && cfg.checkpoints[next] <= upto) {
                        rec.checkpoint_mae[next++] = mae([&](const Point& x) { return engine.predict(x); }, test);
                    }
                };
                try {
                    engine.initialize();
                    while (engine.trace().rows.size() < cfg.budget) {
                        const TraceRow& row = engine.step();
                        snapshot(row.t);
                        if (row.score < cfg.epsilon) break;
                    }
                } catch (const std::exception& e) {
                    rec.trace = engine.trace();
                    throw;
                }
                rec.trace = engine.trace();
                rec.trace.stop_reason = rec.trace.rows.size() < cfg.budget ? "threshold" : "budget";
                snapshot(cfg.budget);
                rec.mae = mae([&](const Point& x) { return engine.predict(x); }, test);
                break;
            }
            case Method::defer: {
                DeferPartition partition(fn.box, fn.evaluate);
                std::size_t next = 0;
                RunTrace seen;
                auto hook = [&](const DeferPartition& p, const RunTrace& tr) {
                    seen = tr;
                    // Snapshot while the next trisection (two more rows) would pass the checkpoint.
                    while (next < cfg.checkpoints.size() && cfg.checkpoints[next] < tr.rows.size() + 2) {
                        rec.checkpoint_mae[next++] = mae([&](const Point& x) { return p.predict(x); }, test);
                    }
                };
                try {
                    rec.trace = defer_run(partition, cfg.budget, hook);
                } catch (const std::exception&) {
                    rec.trace = seen;
                    throw;
                }
                auto predict = [&](const Point& x) { return partition.predict(x); };
                while (next < cfg.checkpoints.size()) rec.checkpoint_mae[next++] = mae(predict, test);
                rec.mae = mae(predict, test);
                break;
            }
            case Method::nannr: {
                NannrConfig nc;
                nc.box = fn.box;
                nc.budget = cfg.budget;
                nc.seed = rec.seed;
                nc.domain = fn.domain;
                NannrResult res = nannr_run(nc, fn.evaluate);
                rec.trace = std::move(res.trace);
                if (!res.error.empty()) throw EvaluationError(res.error);
                for (std::size_t k = 0; k < cfg.checkpoints.size(); ++k) {
                    // Queries are i.i.d., so the first N of them are the N-query run.
                    Dataset prefix(fn.dim());
                    for (std::size_t i = 0; i < cfg.checkpoints[k]; ++i) {
                        prefix.insert(res.data.index().point(i), res.data.value(i));
                    }
                    rec.checkpoint_mae[k] = mae([&](const Point& x) { return nnr_predict(prefix, x); }, test);
                }
                rec.mae = mae([&](const Point& x) { return nnr_predict(res.data, x); }, test);
                break;
            }
        }
    } catch (const std::exception& e) {
        rec.failed = true;
        rec.trace.stop_reason = e.what();
        if (const auto* ee = dynamic_cast<const EvaluationError*>(&e); ee && !ee->raw().empty()) {
            rec.trace.stop_reason += " (raw reply: " + ee->raw() + ")";
        }
    }
    finish_clock();
    rec.queries = rec.trace.rows.size();
    rec.stop_reason = rec.trace.stop_reason;
    return rec;
}

}  // namespace detail

/// Builds the config's test set (evaluating an external target through its
/// own evaluator process).
inline TestSet make_experiment_test_set(const ExperimentConfig& cfg) {
    return make_test_set(make_target(cfg.target), cfg.test_size, cfg.test_mode, cfg.test_seed);
}

inline std::string summary_csv(const ExperimentResult& r) {
    const auto [mean, sd] = r.mae_stats();
    std::ostringstream os;
    os << "method,target,dim,reps,failed,queries,mae_mean,mae_std,test_set_hash\n";
    os << r.method << ',' << detail::csv_cell(r.target) << ',' << r.dim << ',' << r.runs.size() << ',' << r.failed()
       << ',' << r.queries() << ',' << detail::format_stat(mean) << ',' << detail::format_stat(sd) << ','
       << detail::hex64(r.test_set_hash) << '\n';
    return os.str();
}

inline std::string runs_csv(const ExperimentResult& r) {
    std::ostringstream os;
    os << "rep,seed,status,queries,mae,stop_reason\n";
    for (const auto& run : r.runs) {
        os << run.rep << ',' << run.seed << ',' << (run.failed ? "failed" : "ok") << ',' << run.queries << ','
           << (run.failed ? std::string() : format_double(run.mae)) << ',' << detail::csv_cell(run.stop_reason)
           << '\n';
    }
    return os.str();
}

inline std::string timing_csv(const ExperimentResult& r) {
    std::ostringstream os;
    os << "rep,total_ms,ms_per_query\n";
    for (const auto& run : r.runs) {
        os << run.rep << ',' << format_double(run.total_ms) << ','
           << format_double(run.queries ? run.total_ms / static_cast<double>(run.queries) : 0.0) << '\n';
    }
    return os.str();
}

inline std::string checkpoints_csv(const ExperimentResult& r) {
    std::ostringstream os;
    os << "N,mae_mean,mae_std\n";
    for (std::size_t k = 0; k < r.checkpoints.size(); ++k) {
        std::vector<double> v;
        for (const auto& run : r.runs) {
            if (!run.failed && run.checkpoint_mae[k]) v.push_back(*run.checkpoint_mae[k]);
        }
        const auto [mean, sd] = ExperimentResult::mean_std(v);
        os << r.checkpoints[k] << ',' << detail::format_stat(mean) << ',' << detail::format_stat(sd) << '\n';
    }
    return os.str();
}

/// Runs every repetition and writes the output directory. A failed run is
/// recorded as failed and the remaining runs go ahead.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    const TestSet test = make_experiment_test_set(cfg);
    ExperimentResult result;
    result.method = to_string(cfg.method);
    result.dim = test.points.empty() ? 0 : static_cast<std::size_t>(test.points.front().size());
    result.test_set_hash = test.hash();
    result.checkpoints = cfg.checkpoints;
    result.target = cfg.target.external() ? cfg.target.name : builtin(cfg.target.function, cfg.target.params).label();

    write_file_atomic(cfg.output / "test_set.csv", test_set_csv(test));
    for (std::size_t rep = 0; rep < cfg.repetitions; ++rep) {
        RunRecord rec = detail::run_once(cfg, rep, test);
        write_file_atomic(cfg.output / ("trace_rep" + std::to_string(rep) + ".csv"), trace_csv(rec.trace, result.dim));
        rec.trace.rows.clear();
        rec.trace.rows.shrink_to_fit();
        result.runs.push_back(std::move(rec));
    }
    write_file_atomic(cfg.output / "runs.csv", runs_csv(result));
    write_file_atomic(cfg.output / "summary.csv", summary_csv(result));
    write_file_atomic(cfg.output / "timing.csv", timing_csv(result));
    if (!cfg.checkpoints.empty()) write_file_atomic(cfg.output / "checkpoints.csv", checkpoints_csv(result));
    return result;
}

/// Method x target grid over several experiments. All must share the target
/// function name; experiments on the same target label must share the test
/// set.
struct Comparison {
    std::vector<std::string> methods;
    std::vector<std::string> targets;
    std::map<std::pair<std::string, std::string>, const ExperimentResult*> cells;
};

inline Comparison build_comparison(const std::vector<ExperimentResult>& results,
                                   const std::vector<std::string>& function_names) {
    if (results.empty()) throw ConfigError("nothing to compare");
    Comparison c;
    std::map<std::string, std::uint64_t> hashes;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        if (function_names[i] != function_names.front()) {
            throw ConfigError("mismatched targets: " + function_names.front() + " vs " + function_names[i]);
        }
        const auto [it, fresh] = hashes.emplace(r.target, r.test_set_hash);
        if (!fresh && it->second != r.test_set_hash) {
            throw ConfigError("test sets differ for target " + r.target + " (hash " + detail::hex64(it->second) +
                              " vs " + detail::hex64(r.test_set_hash) + ")");
        }
        if (std::find(c.methods.begin(), c.methods.end(), r.method) == c.methods.end()) c.methods.push_back(r.method);
        if (std::find(c.targets.begin(), c.targets.end(), r.target) == c.targets.end()) c.targets.push_back(r.target);
        if (!c.cells.emplace(std::make_pair(r.method, r.target), &r).second) {
            throw ConfigError("method " + r.method + " appears twice for target " + r.target);
        }
    }
    return c;
}

inline std::string comparison_csv(const Comparison& c) {
    std::ostringstream os;
    os << "method,target,reps,failed,mae_mean,mae_std,ms_per_query,test_set_hash\n";
    for (const auto& m : c.methods) {
        for (const auto& t : c.targets) {
            const auto it = c.cells.find({m, t});
            if (it == c.cells.end()) continue;
            const auto& r = *it->second;
            const auto [mean, sd] = r.mae_stats();
            os << m << ',' << detail::csv_cell(t) << ',' << r.runs.size() << ',' << r.failed() << ','
               << detail::format_stat(mean) << ',' << detail::format_stat(sd) << ',' << format_double(r.ms_per_query())
               << ',' << detail::hex64(r.test_set_hash) << '\n';
        }
    }
    return os.str();
}

/// Aligned text: one row per method, one "mae +- std (ms/query)" column per target.
inline std::string comparison_text(const Comparison& c) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"method"});
    for (const auto& t : c.targets) rows.front().push_back(t);
    for (const auto& m : c.methods) {
        std::vector<std::string> row{m};
        for (const auto& t : c.targets) {
            const auto it = c.cells.find({m, t});
            if (it == c.cells.end()) {
                row.emplace_back("-");
                continue;
            }
            const auto [mean, sd] = it->second->mae_stats();
            std::ostringstream cell;
            cell << std::setprecision(4) << mean << " +- " << sd << " (" << std::setprecision(3)
                 << it->second->ms_per_query() << " ms)";
            row.push_back(cell.str());
        }
        rows.push_back(std::move(row));
    }
    std::vector<std::size_t> width(rows.front().size(), 0);
    for (const auto& row : rows) {
        for (std::size_t k = 0; k < row.size(); ++k) width[k] = std::max(width[k], row[k].size());
    }
    std::ostringstream os;
    for (const auto& row : rows) {
        for (std::size_t k = 0; k < row.size(); ++k) {
            os << std::left << std::setw(static_cast<int>(width[k])) << row[k] << (k + 1 < row.size() ? "  " : "\n");
        }
    }
    return os.str();
}

enum class ExportKind { scatter, curve, hist };

inline ExportKind parse_export_kind(const std::string& s) {
    if (s == "scatter") return ExportKind::scatter;
    if (s == "curve") return ExportKind::curve;
    if (s == "hist") return ExportKind::hist;
    throw ConfigError("export kind must be scatter, curve or hist, got '" + s + "'");
}

/// Plot data from a harness file:
///   scatter  trace -> x0,x1,t (first two coordinates)
///   curve    checkpoints.csv -> N,mae_mean,mae_std
///   hist     trace -> bin,lo,hi,count,frequency over query norms
inline std::string export_plot_data(const std::string& input, ExportKind kind, std::size_t bins = 20,
                                    std::optional<double> upper = std::nullopt) {
    if (kind == ExportKind::curve) {
        std::istringstream is(input);
        std::string line;
        if (!std::getline(is, line) || line != "N,mae_mean,mae_std") throw IoError("not a checkpoints file");
        std::ostringstream os;
        os << "N,mae_mean,mae_std\n";
        std::size_t rows = 0;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            if (split_csv_line(line).size() != 3) throw IoError("bad checkpoints row: " + line);
            os << line << '\n';
            ++rows;
        }
        if (rows == 0) throw IoError("no checkpoints to export");
        return os.str();
    }

    const RunTrace trace = parse_trace_csv(input);
    if (trace.rows.empty()) throw IoError("trace has no rows");
    std::ostringstream os;
    if (kind == ExportKind::scatter) {
        if (trace.rows.front().point.size() < 2) throw IoError("scatter export needs at least two coordinates");
        os << "x0,x1,t\n";
        for (const auto& r : trace.rows) {
            os << format_double(r.point[0]) << ',' << format_double(r.point[1]) << ',' << r.t << '\n';
        }
        return os.str();
    }
    std::vector<Point> pts;
    pts.reserve(trace.rows.size());
    for (const auto& r : trace.rows) pts.push_back(r.point);
    const Histogram h = norm_histogram(pts, bins, upper);
    os << "bin,lo,hi,count,frequency\n";
    const double width = (h.hi - h.lo) / static_cast<double>(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        os << b << ',' << format_double(h.lo + width * static_cast<double>(b)) << ','
           << format_double(h.lo + width * static_cast<double>(b + 1)) << ',' << h.counts[b] << ','
           << format_double(h.frequencies[b]) << '\n';
    }
    return os.str();
}

}  // namespace annr

// Command-line front end for the experiment harness.
//
// Exit codes: 0 ok, 1 configuration error, 2 run failure, 3 oracle check failed.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "annr/exact_delaunay.hpp"
#include "annr/experiment.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRunFailure = 2;
constexpr int kCheckFailed = 3;

constexpr const char* kConfigHelp = R"(Config file (INI, defaults shown):
  [experiment]  method = annr (annr|defer|nannr), budget = 1000, repetitions = 1,
                seed = 0 (run k uses seed+k), output = out, checkpoints = (none)
  [target]      function = <builtin|external>, plus builtin parameters:
                  gaussian  dim=2 sigma2=0.1 lo=-1 hi=1
                  spiral    a=0.08 w=0.06 theta_max=6pi lo=-1 hi=1
                  ellipse   angle=0 (degrees) lo=-1 hi=1
                  ball      dim=6 radius=1 lo=-2 hi=2
                  lens      radius=5 lo=-0.35 hi=1.35
                  sphere_sq dim=2 lo=-1 hi=1
                external: command, name = external, dim, lo = 0, hi = 1, timeout = 60
  [test]        mode = grid (grid|uniform), size = 10000, seed = 12345
  [annr]        lambda = auto, epsilon = 1e-6, walk_steps = 100, alpha0 = off,
                n_init = 10, include_corners = true, threads = 1
  [defer], [nannr] take no keys.)";

int report(const std::exception& e, int code) {
    std::cerr << "error: " << e.what() << '\n';
    return code;
}

int cmd_run(const std::string& config, const std::vector<std::string>& overrides) {
    annr::ExperimentConfig cfg;
    try {
        cfg = annr::load_experiment_config(config, overrides);
    } catch (const annr::ConfigError& e) {
        return report(e, kConfigError);
    }
    try {
        const auto result = annr::run_experiment(cfg);
        std::cout << annr::summary_csv(result);
        for (const auto& r : result.runs) {
            if (r.failed) std::cerr << "run " << r.rep << " failed: " << r.stop_reason << '\n';
        }
        return result.failed() ? kRunFailure : kOk;
    } catch (const annr::ConfigError& e) {
        return report(e, kConfigError);
    } catch (const std::exception& e) {
        return report(e, kRunFailure);
    }
}

int cmd_compare(const std::vector<std::string>& configs, const std::vector<std::string>& overrides,
                const std::string& output) {
    std::vector<annr::ExperimentConfig> cfgs;
    std::vector<std::string> names;
    try {
        for (const auto& path : configs) {
            cfgs.push_back(annr::load_experiment_config(path, overrides));
            names.push_back(cfgs.back().target.external() ? cfgs.back().target.name : cfgs.back().target.function);
            if (names.back() != names.front()) {
                throw annr::ConfigError("mismatched targets: " + names.front() + " vs " + names.back());
            }
        }
    } catch (const annr::ConfigError& e) {
        return report(e, kConfigError);
    }
    try {
        std::vector<annr::ExperimentResult> results;
        for (const auto& cfg : cfgs) results.push_back(annr::run_experiment(cfg));
        const auto table = annr::build_comparison(results, names);
        annr::write_file_atomic(output, annr::comparison_csv(table));
        std::cout << annr::comparison_text(table);
        for (const auto& r : results) {
            if (r.failed()) return kRunFailure;
        }
        return kOk;
    } catch (const annr::ConfigError& e) {
        return report(e, kConfigError);
    } catch (const std::exception& e) {
        return report(e, kRunFailure);
    }
}

int cmd_export(const std::string& input, const std::string& kind, const std::string& output, std::size_t bins,
               double upper) {
    try {
        const auto k = annr::parse_export_kind(kind);
        if (bins < 1) throw annr::ConfigError("--bins must be at least 1");
        const std::string data = annr::export_plot_data(annr::read_file(input), k, bins,
                                                        upper > 0.0 ? std::optional<double>(upper) : std::nullopt);
        if (output.empty()) {
            std::cout << data;
        } else {
            annr::write_file_atomic(output, data);
        }
        return kOk;
    } catch (const annr::ConfigError& e) {
        return report(e, kConfigError);
    } catch (const std::exception& e) {
        return report(e, kRunFailure);
    }
}

int cmd_oracle_check(std::size_t dim, std::size_t n, std::size_t seeds, std::size_t steps, double min_recall) {
    if (dim < 1 || dim > 4 || n < dim + 1 || seeds < 1 || steps < 1) {
        std::cerr << "error: need 1 <= dim <= 4, n > dim, seeds >= 1, steps >= 1\n";
        return kConfigError;
    }
    try {
        double recall = 0.0;
        std::size_t unsound = 0;
        std::cout << "seed,exact,validated,recovered,unsound,recall\n";
        for (std::size_t s = 0; s < seeds; ++s) {
            const auto r = annr::walk_recall(dim, n, s, steps);
            std::cout << s << ',' << r.exact << ',' << r.validated << ',' << r.recovered << ',' << r.unsound << ','
                      << r.recall() << '\n';
            recall += r.recall();
            unsound += r.unsound;
        }
        recall /= static_cast<double>(seeds);
        const bool ok = unsound == 0 && recall >= min_recall;
        std::cout << (ok ? "PASS" : "FAIL") << " mean recall " << recall << " (min " << min_recall << "), unsound "
                  << unsound << '\n';
        return ok ? kOk : kCheckFailed;
    } catch (const std::exception& e) {
        return report(e, kRunFailure);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Active nearest-neighbour regression experiments"};
    app.require_subcommand(1);

    std::string config;
    std::vector<std::string> overrides;
    auto* run = app.add_subcommand("run", "run one experiment config");
    run->add_option("--config", config, "INI config file")->required()->check(CLI::ExistingFile);
    run->add_option("--override", overrides, "section.key=value, repeatable");
    run->footer(kConfigHelp);

    std::vector<std::string> configs;
    std::string cmp_output = "comparison.csv";
    auto* compare = app.add_subcommand("compare", "run several configs and tabulate method x target");
    compare->add_option("--configs", configs, "INI config files")->required()->check(CLI::ExistingFile);
    compare->add_option("--override", overrides, "applied to every config");
    compare->add_option("--output", cmp_output, "comparison CSV path")->capture_default_str();
    compare->footer(kConfigHelp);

    std::string input, kind, exp_output;
    std::size_t bins = 20;
    double upper = 0.0;
    auto* exp = app.add_subcommand("export", "turn harness output into plot data");
    exp->add_option("--input", input, "trace CSV (scatter, hist) or checkpoints.csv (curve)")->required();
    exp->add_option("--kind", kind, "scatter | curve | hist")->required();
    exp->add_option("--output", exp_output, "output path (default: stdout)");
    exp->add_option("--bins", bins, "histogram bins")->capture_default_str();
    exp->add_option("--upper", upper, "histogram upper edge (default: largest norm)");

    std::size_t dim = 2, n = 30, seeds = 10, steps = 2000;
    double min_recall = 0.95;
    auto* oracle = app.add_subcommand("oracle-check", "walk recall against brute-force Delaunay");
    oracle->add_option("--dim", dim, "dimension")->capture_default_str();
    oracle->add_option("--n", n, "points per seed")->capture_default_str();
    oracle->add_option("--seeds", seeds, "number of seeds")->capture_default_str();
    oracle->add_option("--steps", steps, "skeleton walk steps")->capture_default_str();
    oracle->add_option("--min-recall", min_recall, "required mean recall")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    if (*run) return cmd_run(config, overrides);
    if (*compare) return cmd_compare(configs, overrides, cmp_output);
    if (*exp) return cmd_export(input, kind, exp_output, bins, upper);
    return cmd_oracle_check(dim, n, seeds, steps, min_recall);
}

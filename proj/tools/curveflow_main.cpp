// curveflow: expanding support-function curvature flows on S^1 and S^2.
//
//   curveflow run [--config file] [--alpha -1 --beta 1 --f sigma:1 ...]
//   curveflow verify --matrix file [--out root] [--jobs N]
//   curveflow inspect --dir runs/run [--rows N]
//
// Flags mirror the config keys with kebab-case names; flags win over the
// config file. Output root defaults to $CURVEFLOW_OUT_ROOT, then ./runs.

#include <CLI11.hpp>
#include <deque>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "curveflow/config.hpp"
#include "curveflow/errors.hpp"
#include "curveflow/experiment.hpp"

namespace {

struct FlagSet {
    std::vector<std::pair<std::string, CLI::Option*>> options;
    std::deque<std::string> storage;  // stable addresses for CLI11 bindings

    void add(CLI::App* app, const std::string& key) {
        std::string flag = "--" + key;
        for (auto& ch : flag) {
            if (ch == '_') ch = '-';
        }
        storage.emplace_back();
        options.emplace_back(key, app->add_option(flag, storage.back()));
    }

    std::vector<curveflow::KeyValue> collect() const {
        std::vector<curveflow::KeyValue> kv;
        for (std::size_t i = 0; i < options.size(); ++i) {
            if (options[i].second->count() > 0) {
                kv.emplace_back(options[i].first, storage[i]);
            }
        }
        return kv;
    }
};

const char* kConfigKeys[] = {
    "name",       "n",           "grid_n",         "grid_ntheta",
    "grid_nphi",  "f",           "alpha",          "beta",
    "mode",       "init",        "seed",           "rescale_straddle",
    "t_end",      "snapshot_every", "field_every", "cfl",
    "fixed_dt",   "eps_d",       "fit_burn_in",    "pinching_factor",
    "filter",     "filter_kappa", "filter_m_floor", "out",
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"expanding support-function curvature flow simulator"};
    app.require_subcommand(1);

    auto* cmd_run = app.add_subcommand("run", "run a single experiment");
    std::string config_file;
    cmd_run->add_option("--config", config_file, "key=value config file");
    std::string out_root_run;
    cmd_run->add_option("--out-root", out_root_run,
                        "output root (default $CURVEFLOW_OUT_ROOT or ./runs)");
    FlagSet flags;
    for (const char* key : kConfigKeys) flags.add(cmd_run, key);

    auto* cmd_verify = app.add_subcommand("verify", "run a matrix of experiments");
    std::string matrix_file, out_root;
    int jobs = 1;
    cmd_verify->add_option("--matrix", matrix_file, "matrix file")->required();
    cmd_verify->add_option("--out", out_root, "output root");
    cmd_verify->add_option("--jobs", jobs, "parallel runs")
        ->check(CLI::Range(1, 64));

    auto* cmd_inspect =
        app.add_subcommand("inspect", "print diagnostics of a finished run");
    std::string run_dir;
    int rows = 8;
    cmd_inspect->add_option("--dir", run_dir, "run directory")->required();
    cmd_inspect->add_option("--rows", rows, "diagnostics rows to print");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cmd_run->parsed()) {
            const auto cfg =
                curveflow::resolve_config(config_file, flags.collect());
            const auto outcome = curveflow::run_experiment(cfg, out_root_run);
            std::cout << "wrote " << outcome.out_dir.string() << "\n";
            if (!outcome.summary.completed) {
                std::cout << "aborted: " << outcome.summary.abort_reason
                          << " at t=" << outcome.summary.abort_time << "\n";
            } else {
                for (const auto& [name, v] : outcome.summary.invariants) {
                    std::cout << "  " << name << ": " << v.status << "\n";
                }
            }
            return outcome.exit_code;
        }
        if (cmd_verify->parsed()) {
            return curveflow::verify_suite(matrix_file, out_root, jobs,
                                           std::cout);
        }
        if (cmd_inspect->parsed()) {
            return curveflow::inspect_run(run_dir, rows, std::cout);
        }
    } catch (const curveflow::FlowError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "curveflow/config.hpp"
#include "curveflow/flow.hpp"

namespace curveflow {

/// Output root: $CURVEFLOW_OUT_ROOT when set, "runs" otherwise.
std::string default_out_root();

struct ExperimentOutcome {
    int exit_code = 0;  // 0 ok, 2 claimed-invariant failure, 3 numerical abort
    std::filesystem::path out_dir;
    RunSummary summary;
};

/// Runs one experiment and writes config.txt, diagnostics.csv, summary.json
/// and field/mesh snapshots into the output directory.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg,
                                 const std::string& out_root = "");

/// Runs every line of a matrix file (key=value tokens per line, '#' comments),
/// continues past failures, writes <root>/report.json and prints one row per
/// run. Returns 0 / 2 / 3 like run_experiment, aggregated.
int verify_suite(const std::string& matrix_path, const std::string& out_root,
                 int jobs, std::ostream& log);

/// Prints the stored summary and the last diagnostics rows of a finished run.
int inspect_run(const std::string& dir, int tail_rows, std::ostream& out);

}  // namespace curveflow

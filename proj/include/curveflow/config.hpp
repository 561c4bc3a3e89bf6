#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "curveflow/flow.hpp"
#include "curveflow/support_field.hpp"

namespace curveflow {

/// Flat key=value experiment description. Defaults here are the materialized
/// defaults echoed into every output directory.
struct ExperimentConfig {
    std::string name = "run";
    int n = 2;
    int grid_n = 256;       // circle nodes (n=1)
    int grid_ntheta = 64;   // lat-long rows (n=2)
    int grid_nphi = 128;    // lat-long columns (n=2)
    std::string f = "sigma:1";
    double alpha = -1.0;
    double beta = 1.0;
    std::string mode = "normalized";  // or "unnormalized"
    std::string init;  // empty = dimension-appropriate perturbed sphere
    std::uint64_t seed = 12345;
    bool rescale_straddle = false;
    double t_end = 3.0;
    double snapshot_every = 0.05;
    double field_every = 0.0;  // mesh/field snapshot cadence; 0 = first + last
    double cfl = 0.25;
    double fixed_dt = 0.0;  // 0 = adaptive
    double eps_d = 0.0;     // 0 = auto
    double fit_burn_in = 0.3;
    double pinching_factor = 2.0;
    bool filter = false;
    double filter_kappa = 1.0;
    int filter_m_floor = 2;
    std::string out;  // output directory; empty = <out_root>/<name>

    /// Structural checks; throws RangeError / ParseError.
    void validate() const;

    /// The init descriptor with the empty default materialized.
    std::string resolved_init() const;

    CurvatureSpec curvature_spec() const;
    InitialData initial_data() const;
    FlowParams flow_params() const;
    std::shared_ptr<const SphereGrid> make_grid() const;
    RunOptions run_options() const;

    /// key=value text of the fully resolved config, gamma and q included as
    /// comments. Reparsing it reproduces this config.
    std::string echo() const;
};

using KeyValue = std::pair<std::string, std::string>;

/// Applies one key=value pair; throws ParseError on unknown keys and
/// RangeError on bad values.
void apply_override(ExperimentConfig& cfg, const std::string& key,
                    const std::string& value);

/// Parses a key=value file ('#' comments, blank lines allowed).
ExperimentConfig parse_config_file(const std::string& path);

/// File (optional) then flag overrides; flags win.
ExperimentConfig resolve_config(const std::string& file_path,
                                const std::vector<KeyValue>& overrides);

/// "k1=v1 k2=v2 ..." on one line, e.g. one row of a verify matrix.
std::vector<KeyValue> parse_kv_line(const std::string& line);

}  // namespace curveflow

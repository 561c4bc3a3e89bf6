#include "curveflow/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "curveflow/errors.hpp"
#include "curveflow/io.hpp"

namespace curveflow {

namespace {

double to_double(const std::string& s, const std::string& key) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw RangeError("key '" + key + "': cannot parse number '" + s + "'");
    }
    if (pos != s.size()) {
        throw RangeError("key '" + key + "': trailing characters in '" + s + "'");
    }
    return v;
}

long to_long(const std::string& s, const std::string& key) {
    const double v = to_double(s, key);
    const long l = static_cast<long>(v);
    if (v != static_cast<double>(l)) {
        throw RangeError("key '" + key + "': expected an integer, got '" + s + "'");
    }
    return l;
}

bool to_bool(const std::string& s, const std::string& key) {
    if (s == "on" || s == "true" || s == "1") return true;
    if (s == "off" || s == "false" || s == "0") return false;
    throw RangeError("key '" + key + "': expected on/off, got '" + s + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char ch : s) {
        if (ch == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    parts.push_back(cur);
    return parts;
}

}  // namespace

// ---------------------------------------------------------------------------

void apply_override(ExperimentConfig& cfg, const std::string& key,
                    const std::string& value) {
    if (key == "name") {
        cfg.name = value;
    } else if (key == "n") {
        const long v = to_long(value, key);
        if (v != 1 && v != 2) throw RangeError("n must be 1 or 2");
        cfg.n = static_cast<int>(v);
    } else if (key == "grid_n") {
        cfg.grid_n = static_cast<int>(to_long(value, key));
    } else if (key == "grid_ntheta") {
        cfg.grid_ntheta = static_cast<int>(to_long(value, key));
    } else if (key == "grid_nphi") {
        cfg.grid_nphi = static_cast<int>(to_long(value, key));
    } else if (key == "f") {
        cfg.f = value;
    } else if (key == "alpha") {
        cfg.alpha = to_double(value, key);
    } else if (key == "beta") {
        cfg.beta = to_double(value, key);
    } else if (key == "mode") {
        if (value != "normalized" && value != "unnormalized") {
            throw RangeError("mode must be normalized or unnormalized");
        }
        cfg.mode = value;
    } else if (key == "init") {
        cfg.init = value;
    } else if (key == "seed") {
        cfg.seed = static_cast<std::uint64_t>(to_long(value, key));
    } else if (key == "rescale_straddle") {
        cfg.rescale_straddle = to_bool(value, key);
    } else if (key == "t_end") {
        cfg.t_end = to_double(value, key);
    } else if (key == "snapshot_every") {
        cfg.snapshot_every = to_double(value, key);
    } else if (key == "field_every") {
        cfg.field_every = to_double(value, key);
    } else if (key == "cfl") {
        cfg.cfl = to_double(value, key);
    } else if (key == "fixed_dt") {
        cfg.fixed_dt = to_double(value, key);
    } else if (key == "eps_d") {
        cfg.eps_d = to_double(value, key);
    } else if (key == "fit_burn_in") {
        cfg.fit_burn_in = to_double(value, key);
    } else if (key == "pinching_factor") {
        cfg.pinching_factor = to_double(value, key);
    } else if (key == "filter") {
        cfg.filter = to_bool(value, key);
    } else if (key == "filter_kappa") {
        cfg.filter_kappa = to_double(value, key);
    } else if (key == "filter_m_floor") {
        cfg.filter_m_floor = static_cast<int>(to_long(value, key));
    } else if (key == "out") {
        cfg.out = value;
    } else {
        throw ParseError("unknown config key '" + key + "'");
    }
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file '" + path + "'");
    ExperimentConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        // trim
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError(path + ":" + std::to_string(line_no) +
                             ": expected key=value");
        }
        try {
            apply_override(cfg, line.substr(0, eq), line.substr(eq + 1));
        } catch (const FlowError& err) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " +
                             err.what());
        }
    }
    return cfg;
}

ExperimentConfig resolve_config(const std::string& file_path,
                                const std::vector<KeyValue>& overrides) {
    ExperimentConfig cfg =
        file_path.empty() ? ExperimentConfig{} : parse_config_file(file_path);
    for (const auto& [k, v] : overrides) apply_override(cfg, k, v);
    cfg.validate();
    return cfg;
}

std::vector<KeyValue> parse_kv_line(const std::string& line) {
    std::vector<KeyValue> kv;
    std::istringstream in(line);
    std::string token;
    while (in >> token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos) {
            throw ParseError("expected key=value, got '" + token + "'");
        }
        kv.emplace_back(token.substr(0, eq), token.substr(eq + 1));
    }
    return kv;
}

// ---------------------------------------------------------------------------

void ExperimentConfig::validate() const {
    curvature_spec();  // parses and validates the f string
    initial_data();
    if (!(t_end > 0.0)) throw RangeError("t_end must be > 0");
    if (!(snapshot_every > 0.0 && snapshot_every <= t_end)) {
        throw RangeError("snapshot_every must lie in (0, t_end]");
    }
    if (field_every < 0.0) throw RangeError("field_every must be >= 0");
    if (!(cfl > 0.0 && cfl <= 1.0)) throw RangeError("cfl must lie in (0, 1]");
    if (fixed_dt < 0.0) throw RangeError("fixed_dt must be >= 0");
    if (eps_d < 0.0) throw RangeError("eps_d must be >= 0");
    if (!(fit_burn_in >= 0.0 && fit_burn_in < 1.0)) {
        throw RangeError("fit_burn_in must lie in [0, 1)");
    }
    if (!(pinching_factor >= 1.0)) {
        throw RangeError("pinching_factor must be >= 1");
    }
    if (!(filter_kappa > 0.0)) throw RangeError("filter_kappa must be > 0");
    if (filter_m_floor < 1) throw RangeError("filter_m_floor must be >= 1");
    if (n == 1) {
        if (grid_n < 16) throw RangeError("grid_n must be >= 16");
    } else {
        if (grid_ntheta < 16 || grid_nphi < 32 || grid_nphi % 2 != 0) {
            throw RangeError("grid needs ntheta >= 16, nphi >= 32 and even");
        }
    }
}

CurvatureSpec ExperimentConfig::curvature_spec() const {
    return parse_curvature_spec(f, n);
}

std::string ExperimentConfig::resolved_init() const {
    if (!init.empty()) return init;
    return n == 1 ? "pert:1:2,0.05;3,0.02" : "pert:1:2,0,0.05;2,2,0.04";
}

InitialData ExperimentConfig::initial_data() const {
    InitialData data;
    data.seed = seed;
    const auto parts = split(resolved_init(), ':');
    if (parts.empty()) throw ParseError("empty init descriptor");

    if (parts[0] == "sphere") {
        if (parts.size() != 2) throw ParseError("init: expected sphere:R");
        data.kind = InitialData::Kind::sphere;
        data.radius = to_double(parts[1], "init radius");
        if (!(data.radius > 0.0)) throw RangeError("init: radius must be > 0");
        return data;
    }
    if (parts[0] == "ellipsoid") {
        if (parts.size() != 2) throw ParseError("init: expected ellipsoid:a,b[,c]");
        data.kind = InitialData::Kind::ellipsoid;
        for (const auto& axis : split(parts[1], ',')) {
            data.semi_axes.push_back(to_double(axis, "init semi-axis"));
        }
        if (static_cast<int>(data.semi_axes.size()) != n + 1) {
            throw RangeError("init: ellipsoid needs " + std::to_string(n + 1) +
                             " semi-axes for n=" + std::to_string(n));
        }
        return data;
    }
    if (parts[0] == "pert") {
        // n=2: pert:R:l,m,amp[;l,m,amp...]   n=1: pert:R:k,amp[;k,amp...]
        if (parts.size() != 3) throw ParseError("init: expected pert:R:modes");
        data.kind = InitialData::Kind::perturbed_sphere;
        data.radius = to_double(parts[1], "init radius");
        for (const auto& mode_text : split(parts[2], ';')) {
            const auto nums = split(mode_text, ',');
            InitialData::Mode mode;
            if (n == 1) {
                if (nums.size() != 2) {
                    throw ParseError("init: circle mode needs k,amplitude");
                }
                mode.degree = static_cast<int>(to_long(nums[0], "mode k"));
                mode.amplitude = to_double(nums[1], "mode amplitude");
            } else {
                if (nums.size() != 3) {
                    throw ParseError("init: sphere mode needs l,m,amplitude");
                }
                mode.degree = static_cast<int>(to_long(nums[0], "mode l"));
                mode.order = static_cast<int>(to_long(nums[1], "mode m"));
                mode.amplitude = to_double(nums[2], "mode amplitude");
            }
            data.modes.push_back(mode);
        }
        return data;
    }
    throw ParseError("init: unknown kind '" + parts[0] +
                     "' (sphere, ellipsoid or pert)");
}

FlowParams ExperimentConfig::flow_params() const {
    return FlowParams::make(curvature_spec(), alpha, beta,
                            mode == "normalized" ? FlowMode::normalized
                                                 : FlowMode::unnormalized);
}

std::shared_ptr<const SphereGrid> ExperimentConfig::make_grid() const {
    return n == 1 ? SphereGrid::circle(grid_n)
                  : SphereGrid::lat_long(grid_ntheta, grid_nphi);
}

RunOptions ExperimentConfig::run_options() const {
    RunOptions opt;
    opt.t_end = t_end;
    opt.snapshot_every = snapshot_every;
    opt.cfl = cfl;
    opt.fixed_dt = fixed_dt;
    opt.eps_d = eps_d;
    opt.fit_burn_in = fit_burn_in;
    opt.pinching_factor = pinching_factor;
    opt.filter.enabled = filter;
    opt.filter.kappa = filter_kappa;
    opt.filter.m_floor = filter_m_floor;
    opt.store_fields = true;
    return opt;
}

std::string ExperimentConfig::echo() const {
    const auto p = flow_params();
    std::string out;
    out += "# gamma=" + format_double(p.gamma) + "\n";
    out += "# q=" + format_double(p.q) + "\n";
    out += "# in_theorem_range=" + std::string(p.in_theorem_range() ? "1" : "0") +
           "\n";
    out += "name=" + name + "\n";
    out += "n=" + std::to_string(n) + "\n";
    if (n == 1) {
        out += "grid_n=" + std::to_string(grid_n) + "\n";
    } else {
        out += "grid_ntheta=" + std::to_string(grid_ntheta) + "\n";
        out += "grid_nphi=" + std::to_string(grid_nphi) + "\n";
    }
    out += "f=" + f + "\n";
    out += "alpha=" + format_double(alpha) + "\n";
    out += "beta=" + format_double(beta) + "\n";
    out += "mode=" + mode + "\n";
    out += "init=" + resolved_init() + "\n";
    out += "seed=" + std::to_string(seed) + "\n";
    out += "rescale_straddle=" + std::string(rescale_straddle ? "on" : "off") +
           "\n";
    out += "t_end=" + format_double(t_end) + "\n";
    out += "snapshot_every=" + format_double(snapshot_every) + "\n";
    out += "field_every=" + format_double(field_every) + "\n";
    out += "cfl=" + format_double(cfl) + "\n";
    out += "fixed_dt=" + format_double(fixed_dt) + "\n";
    out += "eps_d=" + format_double(eps_d) + "\n";
    out += "fit_burn_in=" + format_double(fit_burn_in) + "\n";
    out += "pinching_factor=" + format_double(pinching_factor) + "\n";
    out += "filter=" + std::string(filter ? "on" : "off") + "\n";
    out += "filter_kappa=" + format_double(filter_kappa) + "\n";
    out += "filter_m_floor=" + std::to_string(filter_m_floor) + "\n";
    out += "out=" + this->out + "\n";
    return out;
}

}  // namespace curveflow

#include "curveflow/experiment.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

#include <json.hpp>

#include "curveflow/errors.hpp"
#include "curveflow/io.hpp"

namespace curveflow {

using ordered_json = nlohmann::ordered_json;

std::string default_out_root() {
    if (const char* env = std::getenv("CURVEFLOW_OUT_ROOT")) {
        if (*env) return env;
    }
    return "runs";
}

namespace {

ordered_json summary_to_json(const ExperimentConfig& cfg, const FlowParams& p,
                             const RunResult& res, int exit_code,
                             double rescale_used) {
    const auto& sum = res.summary;
    ordered_json j;
    j["name"] = cfg.name;
    j["params"] = {{"n", cfg.n},
                   {"f", cfg.f},
                   {"alpha", cfg.alpha},
                   {"beta", cfg.beta},
                   {"gamma", p.gamma},
                   {"q", p.q},
                   {"mode", cfg.mode},
                   {"in_theorem_range", p.in_theorem_range()}};
    if (cfg.n == 1) {
        j["grid"] = {{"n", 1}, {"nodes", cfg.grid_n}};
    } else {
        j["grid"] = {{"n", 2}, {"ntheta", cfg.grid_ntheta}, {"nphi", cfg.grid_nphi}};
    }
    j["init"] = cfg.resolved_init();
    j["seed"] = cfg.seed;
    j["rescale_applied"] = rescale_used;
    j["filter"] = {{"enabled", cfg.filter},
                   {"kappa", cfg.filter_kappa},
                   {"m_floor", cfg.filter_m_floor}};
    j["eps_d"] = sum.eps_d;
    j["completed"] = sum.completed;
    if (!sum.completed) {
        j["abort_reason"] = sum.abort_reason;
        j["abort_time"] = sum.abort_time;
    }
    j["claims_checked"] = sum.claims_checked;

    ordered_json inv;
    for (const auto& [name, v] : sum.invariants) {
        inv[name] = {{"status", v.status},
                     {"worst_margin", v.worst_margin},
                     {"time_of_worst", v.time_of_worst},
                     {"note", v.note}};
    }
    j["invariants"] = inv;

    auto fit_json = [](const RateFit& f) {
        return ordered_json{{"rate", f.rate}, {"r2", f.r2}, {"valid", f.valid}};
    };
    j["rates"] = {{"dist_to_unit", fit_json(sum.rate_dist_to_unit)},
                  {"osc", fit_json(sum.rate_osc)},
                  {"grad_ratio", fit_json(sum.rate_grad_ratio)}};
    j["final"] = {{"time", sum.final_time},
                  {"u_min", sum.final_u_min},
                  {"u_max", sum.final_u_max},
                  {"lambda_ratio", sum.final_lambda_ratio}};
    j["exit_code"] = exit_code;
    return j;
}

void write_field_snapshot(const std::filesystem::path& dir,
                          const SupportField& u, int index) {
    std::ostringstream tag;
    tag << "snapshot_" << std::setw(4) << std::setfill('0') << index;
    write_file_atomic(dir / (tag.str() + ".csv"), field_csv(u));
    if (u.grid->dim() == 2) {
        write_file_atomic(dir / (tag.str() + ".obj"), obj_mesh(u));
    } else {
        write_file_atomic(dir / (tag.str() + "_curve.csv"), polyline_csv(u));
    }
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& cfg,
                                 const std::string& out_root) {
    cfg.validate();
    const auto params = cfg.flow_params();
    const auto grid = cfg.make_grid();

    auto u0 = make_initial(cfg.initial_data(), grid);
    double rescale_used = 1.0;
    if (cfg.rescale_straddle) {
        auto [scaled, s] = rescale_to_straddle(u0);
        u0 = std::move(scaled);
        rescale_used = s;
    }

    ExperimentOutcome outcome;
    outcome.out_dir = cfg.out.empty()
                          ? std::filesystem::path(
                                out_root.empty() ? default_out_root() : out_root) /
                                cfg.name
                          : std::filesystem::path(cfg.out);
    std::filesystem::create_directories(outcome.out_dir);

    const auto res = run(u0, params, cfg.run_options());
    outcome.summary = res.summary;

    if (!res.summary.completed) {
        outcome.exit_code = 3;
    } else if (res.summary.any_claimed_failure()) {
        outcome.exit_code = 2;
    } else {
        outcome.exit_code = 0;
    }

    write_file_atomic(outcome.out_dir / "config.txt", cfg.echo());
    write_file_atomic(outcome.out_dir / "diagnostics.csv",
                      diagnostics_csv(res.diagnostics));
    write_file_atomic(
        outcome.out_dir / "summary.json",
        summary_to_json(cfg, params, res, outcome.exit_code, rescale_used)
                .dump(2) +
            "\n");

    // field/mesh snapshots: first and last always, plus the field_every cadence
    if (!res.fields.empty()) {
        double next_due = 0.0;
        int written = 0;
        for (std::size_t i = 0; i < res.fields.size(); ++i) {
            const bool first = i == 0;
            const bool last = i + 1 == res.fields.size();
            const bool due = cfg.field_every > 0.0 &&
                             res.fields[i].time >= next_due - 1e-12;
            if (first || last || due) {
                write_field_snapshot(outcome.out_dir, res.fields[i], written++);
                if (due) next_due += cfg.field_every;
            }
        }
    }
    return outcome;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

namespace {

struct MatrixRow {
    ExperimentConfig cfg;
    int exit_code = -1;
    std::string error;
    RunSummary summary;
};

std::string verdict_counts(const RunSummary& sum) {
    int pass = 0, fail = 0, skip = 0, nc = 0;
    for (const auto& [k, v] : sum.invariants) {
        if (v.status == "pass") ++pass;
        if (v.status == "fail") ++fail;
        if (v.status == "skipped") ++skip;
        if (v.status == "not_claimed") ++nc;
    }
    std::ostringstream os;
    os << pass << "p/" << fail << "f/" << skip << "s/" << nc << "n";
    return os.str();
}

}  // namespace

int verify_suite(const std::string& matrix_path, const std::string& out_root,
                 int jobs, std::ostream& log) {
    std::ifstream in(matrix_path);
    if (!in) throw ParseError("cannot open matrix file '" + matrix_path + "'");

    std::vector<MatrixRow> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        MatrixRow row;
        std::string base_file;
        auto kv = parse_kv_line(line);
        for (auto it = kv.begin(); it != kv.end();) {
            if (it->first == "config") {
                base_file = it->second;
                it = kv.erase(it);
            } else {
                ++it;
            }
        }
        try {
            row.cfg = resolve_config(base_file, kv);
        } catch (const FlowError& e) {
            throw ParseError(matrix_path + ":" + std::to_string(line_no) + ": " +
                             e.what());
        }
        if (row.cfg.name == "run") {
            std::ostringstream name;
            name << "run" << std::setw(3) << std::setfill('0') << rows.size() + 1;
            row.cfg.name = name.str();
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw InsufficientData("matrix file '" + matrix_path + "' has no runs");
    }

    const std::string root = out_root.empty() ? default_out_root() : out_root;
    std::mutex mtx;
    std::size_t next = 0;
    auto worker = [&]() {
        for (;;) {
            std::size_t i;
            {
                std::lock_guard lock(mtx);
                if (next >= rows.size()) return;
                i = next++;
            }
            try {
                const auto outcome = run_experiment(rows[i].cfg, root);
                rows[i].exit_code = outcome.exit_code;
                rows[i].summary = outcome.summary;
            } catch (const FlowError& e) {
                rows[i].exit_code = 1;
                rows[i].error = e.what();
            }
        }
    };
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    // report
    log << std::left << std::setw(10) << "name" << std::setw(22) << "f"
        << std::setw(8) << "alpha" << std::setw(8) << "beta" << std::setw(14)
        << "mode" << std::setw(6) << "exit" << std::setw(16) << "verdicts"
        << std::setw(14) << "rate(dist)" << "note" << '\n';
    ordered_json jrows = ordered_json::array();
    int worst = 0;
    for (const auto& row : rows) {
        std::string note = row.error;
        if (row.exit_code == 3) note = "abort: " + row.summary.abort_reason;
        log << std::left << std::setw(10) << row.cfg.name << std::setw(22)
            << row.cfg.f << std::setw(8) << row.cfg.alpha << std::setw(8)
            << row.cfg.beta << std::setw(14) << row.cfg.mode << std::setw(6)
            << row.exit_code << std::setw(16) << verdict_counts(row.summary)
            << std::setw(14)
            << (row.summary.rate_dist_to_unit.valid
                    ? row.summary.rate_dist_to_unit.rate
                    : 0.0)
            << note << '\n';
        ordered_json jr;
        jr["name"] = row.cfg.name;
        jr["f"] = row.cfg.f;
        jr["alpha"] = row.cfg.alpha;
        jr["beta"] = row.cfg.beta;
        jr["mode"] = row.cfg.mode;
        jr["exit_code"] = row.exit_code;
        jr["verdicts"] = verdict_counts(row.summary);
        jr["completed"] = row.summary.completed;
        if (!row.error.empty()) jr["error"] = row.error;
        jrows.push_back(jr);
        worst = std::max(worst, row.exit_code);
    }
    std::filesystem::create_directories(root);
    ordered_json report;
    report["matrix"] = matrix_path;
    report["runs"] = jrows;
    write_file_atomic(std::filesystem::path(root) / "report.json",
                      report.dump(2) + "\n");
    return worst;
}

// ---------------------------------------------------------------------------
// inspect
// ---------------------------------------------------------------------------

int inspect_run(const std::string& dir, int tail_rows, std::ostream& out) {
    const std::filesystem::path d(dir);
    std::ifstream sum(d / "summary.json");
    if (!sum) throw ParseError("no summary.json in '" + dir + "'");
    ordered_json j;
    sum >> j;

    out << "run: " << j.value("name", std::string("?")) << "\n";
    out << "params: " << j["params"].dump() << "\n";
    out << "completed: " << j["completed"].dump();
    if (j.contains("abort_reason")) {
        out << "  abort: " << j["abort_reason"].dump() << " at t=" <<
            j["abort_time"].dump();
    }
    out << "\ninvariants:\n";
    for (const auto& [name, v] : j["invariants"].items()) {
        out << "  " << std::left << std::setw(18) << name
            << v["status"].get<std::string>()
            << "  worst_margin=" << v["worst_margin"].dump();
        const auto note = v["note"].get<std::string>();
        if (!note.empty()) out << "  (" << note << ")";
        out << "\n";
    }
    out << "rates: " << j["rates"].dump() << "\n";
    out << "final: " << j["final"].dump() << "\n";

    std::ifstream csv(d / "diagnostics.csv");
    if (!csv) throw ParseError("no diagnostics.csv in '" + dir + "'");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(csv, line)) lines.push_back(line);
    out << "\ndiagnostics (" << lines.size() - 1 << " snapshots):\n";
    if (!lines.empty()) out << lines.front() << "\n";
    const int start =
        std::max(1, static_cast<int>(lines.size()) - tail_rows);
    for (std::size_t i = start; i < lines.size(); ++i) out << lines[i] << "\n";
    return 0;
}

}  // namespace curveflow

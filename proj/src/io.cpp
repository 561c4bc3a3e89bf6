#include "curveflow/io.hpp"

#include <charconv>
#include <fstream>
#include <system_error>

#include "curveflow/errors.hpp"

namespace curveflow {

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_file_atomic(const std::filesystem::path& path,
                       const std::string& content) {
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw FlowError("cannot open for writing: " + tmp);
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) {
            throw FlowError("write failed: " + tmp);
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw FlowError("rename failed: " + tmp + " -> " + path.string() + ": " +
                        ec.message());
    }
}

std::string diagnostics_csv(const std::vector<DiagnosticsRecord>& recs) {
    std::string out =
        "t,u_min,u_max,osc,dist_to_unit,Q_min,Q_max,grad_ratio,lambda_min,"
        "lambda_max,barrier_lo,barrier_hi,dt\n";
    for (const auto& r : recs) {
        out += format_double(r.time);
        out += ',';
        out += format_double(r.u_min);
        out += ',';
        out += format_double(r.u_max);
        out += ',';
        out += format_double(r.osc);
        out += ',';
        out += format_double(r.dist_to_unit);
        out += ',';
        out += format_double(r.q_min);
        out += ',';
        out += format_double(r.q_max);
        out += ',';
        out += format_double(r.grad_ratio);
        out += ',';
        out += format_double(r.lambda_min);
        out += ',';
        out += format_double(r.lambda_max);
        out += ',';
        if (r.barrier_defined) {
            out += format_double(r.barrier_lo);
            out += ',';
            out += format_double(r.barrier_hi);
        } else {
            out += ',';
        }
        out += ',';
        out += format_double(r.step_dt);
        out += '\n';
    }
    return out;
}

std::string field_csv(const SupportField& u) {
    std::string out = "node_index,theta,phi,u\n";
    for (int i = 0; i < u.grid->node_count(); ++i) {
        out += std::to_string(i);
        out += ',';
        out += format_double(u.grid->node_theta(i));
        out += ',';
        out += format_double(u.grid->node_phi(i));
        out += ',';
        out += format_double(u.values[i]);
        out += '\n';
    }
    return out;
}

std::string obj_mesh(const SupportField& u) {
    if (u.grid->dim() != 2) {
        throw FlowError("obj_mesh needs an S^2 field");
    }
    const auto pts = embed(u);
    std::string out;
    out.reserve(pts.size() * 40);
    for (const auto& p : pts) {
        out += "v ";
        out += format_double(p[0]);
        out += ' ';
        out += format_double(p[1]);
        out += ' ';
        out += format_double(p[2]);
        out += '\n';
    }
    const int nt = u.grid->n_theta();
    const int np = u.grid->n_phi();
    auto vid = [&](int j, int k) { return j * np + (k % np) + 1; };  // 1-based
    for (int j = 0; j + 1 < nt; ++j) {
        for (int k = 0; k < np; ++k) {
            const int a = vid(j, k), b = vid(j + 1, k);
            const int c = vid(j + 1, k + 1), d = vid(j, k + 1);
            out += "f " + std::to_string(a) + ' ' + std::to_string(b) + ' ' +
                   std::to_string(c) + '\n';
            out += "f " + std::to_string(a) + ' ' + std::to_string(c) + ' ' +
                   std::to_string(d) + '\n';
        }
    }
    return out;
}

std::string polyline_csv(const SupportField& u) {
    if (u.grid->dim() != 1) {
        throw FlowError("polyline_csv needs an S^1 field");
    }
    const auto pts = embed(u);
    std::string out = "x,y\n";
    for (const auto& p : pts) {
        out += format_double(p[0]);
        out += ',';
        out += format_double(p[1]);
        out += '\n';
    }
    out += format_double(pts[0][0]);
    out += ',';
    out += format_double(pts[0][1]);
    out += '\n';
    return out;
}

}  // namespace curveflow

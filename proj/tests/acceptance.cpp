// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failures. Long-running criteria use the default desk-scale grids
// (64x128 on S^2, N=256 on S^1).

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "curveflow/curvature.hpp"
#include "curveflow/errors.hpp"
#include "curveflow/flow.hpp"
#include "curveflow/numeric.hpp"
#include "curveflow/sphere_grid.hpp"
#include "curveflow/support_field.hpp"

using namespace curveflow;

namespace {

constexpr double kPi = std::numbers::pi;

int g_failures = 0;

void report(const std::string& name, bool pass, const std::string& detail,
            double seconds) {
    std::printf("[%s] %-3s %s  (%.1fs)\n", pass ? "PASS" : "FAIL", name.c_str(),
                detail.c_str(), seconds);
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

struct Stopwatch {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                             t0)
            .count();
    }
};

PolarFilterConfig polar_filter() {
    PolarFilterConfig f;
    f.enabled = true;
    f.kappa = 1.0;
    f.m_floor = 2;
    return f;
}

SupportField a2_initial(std::shared_ptr<const SphereGrid> grid) {
    InitialData init;
    init.kind = InitialData::Kind::ellipsoid;
    init.semi_axes = {1.2, 1.0, 0.85};
    auto u0 = make_initial(init, grid);
    return rescale_to_straddle(u0).first;
}

std::string fmt(const char* pattern, ...) {
    char buf[512];
    va_list args;
    va_start(args, pattern);
    std::vsnprintf(buf, sizeof(buf), pattern, args);
    va_end(args);
    return buf;
}

// ---------------------------------------------------------------------------
// A1: the solver reproduces the exact round-sphere trajectory u = 1 + e^{-2t}
// (which is also the upper barrier with b = 2).
// ---------------------------------------------------------------------------

void a1() {
    Stopwatch sw;
    const auto grid = SphereGrid::lat_long(64, 128);
    const auto u0 = SupportField::constant(grid, 2.0);
    const auto p = FlowParams::make(CurvatureSpec::sigma(1, 2), -1.0, 1.0);

    RunOptions opt;
    opt.t_end = 3.0;
    opt.snapshot_every = 0.1;
    opt.fixed_dt = 2e-3;  // constant fields are spatially exact; pure RK4 test
    const auto res = run(u0, p, opt);

    double err = 1e300;
    bool ok = res.summary.completed && p.gamma == 2.0;
    if (ok) {
        err = 0.0;
        for (const auto& rec : res.diagnostics) {
            const double want = 1.0 + std::exp(-2.0 * rec.time);
            err = std::max(err, std::abs(rec.u_min - want));
            err = std::max(err, std::abs(rec.u_max - want));
            // the exact solution coincides with the explicit barrier b = 2
            err = std::max(err,
                           std::abs(barrier_value(2.0, -1.0, 2.0, rec.time) - want));
        }
        ok = err <= 1e-6;
    }
    report("A1", ok, fmt("round-sphere trajectory max err %.3e (tol 1e-6)", err),
           sw.seconds());
}

// ---------------------------------------------------------------------------
// A2 + A3: one ellipsoid run to t = 6. A2 checks the barrier sandwich at
// every snapshot; A3 the fitted decay rate and the final pinching ratio.
// ---------------------------------------------------------------------------

void a2_a3() {
    Stopwatch sw;
    const auto grid = SphereGrid::lat_long(64, 128);
    const auto u0 = a2_initial(grid);
    const auto p = FlowParams::make(CurvatureSpec::sigma(1, 2), -1.0, 1.0);

    RunOptions opt;
    opt.t_end = 6.0;
    opt.snapshot_every = 0.05;
    opt.cfl = 0.4;
    opt.filter = polar_filter();
    opt.eps_d = 1e-4;
    const auto res = run(u0, p, opt);

    bool ok2 = res.summary.completed;
    double worst = 1e300;
    for (const auto& rec : res.diagnostics) {
        if (!rec.barrier_defined) {
            ok2 = false;
            break;
        }
        const double slack = std::min(rec.u_min - (rec.barrier_lo - 1e-4),
                                      (rec.barrier_hi + 1e-4) - rec.u_max);
        worst = std::min(worst, slack);
    }
    ok2 = ok2 && worst >= 0.0;
    report("A2", ok2,
           fmt("barrier sandwich worst slack %.3e (must be >= 0 at tol 1e-4)",
               worst),
           sw.seconds());

    Stopwatch sw3;
    const auto fit = res.summary.rate_dist_to_unit;
    const double ratio = res.summary.final_lambda_ratio;
    const bool ok3 = res.summary.completed && fit.valid &&
                     std::abs(fit.rate - 2.0) <= 0.4 && fit.r2 >= 0.98 &&
                     ratio <= 1.001;
    report("A3", ok3,
           fmt("dist rate %.4f (want 2.0 +- 20%%), r2 %.4f (>= 0.98), final "
               "lambda ratio %.6f (<= 1.001)",
               fit.rate, fit.r2, ratio),
           sw3.seconds());
}

// ---------------------------------------------------------------------------
// A4: monitor matrix across six theorem-range exponent pairs and three
// curvature functions; the extremum, Q and gradient monitors must all pass.
// ---------------------------------------------------------------------------

void a4() {
    Stopwatch sw;
    const auto grid = SphereGrid::lat_long(64, 128);
    const std::vector<std::pair<double, double>> exponents = {
        {-1.0, 1.0}, {0.0, 1.0}, {-0.5, 0.5}, {0.0, 0.5}, {-1.0, 2.0}, {-2.0, 1.0}};
    const std::vector<std::string> specs = {"sigma:1", "sigma:2", "pmean:2"};

    InitialData init;
    init.kind = InitialData::Kind::perturbed_sphere;
    init.radius = 1.0;
    init.modes = {{2, 0, 0.03}, {2, 2, 0.025}, {1, 1, 0.02}};
    init.seed = 4242;
    const auto u0 = make_initial(init, grid);

    int runs = 0, bad = 0;
    double worst = 1e300;
    std::string worst_case;
    for (const auto& spec_text : specs) {
        const auto spec = parse_curvature_spec(spec_text, 2);
        for (const auto& [alpha, beta] : exponents) {
            const auto p = FlowParams::make(spec, alpha, beta);
            RunOptions opt;
            opt.t_end = 0.8;
            opt.snapshot_every = 0.05;
            opt.cfl = 0.4;
            opt.filter = polar_filter();
            opt.eps_d = 1e-4;
            const auto res = run(u0, p, opt);
            ++runs;
            bool pass = res.summary.completed && res.summary.claims_checked;
            for (const char* name :
                 {"extremum_bounds", "q_bounds", "grad_monotone"}) {
                const auto& v = res.summary.invariants.at(name);
                pass = pass && v.status == "pass";
                if (v.worst_margin < worst) {
                    worst = v.worst_margin;
                    worst_case = spec_text + " a=" + std::to_string(alpha) +
                                 " b=" + std::to_string(beta) + " " + name;
                }
            }
            if (!pass) ++bad;
        }
    }
    report("A4", bad == 0,
           fmt("%d/%d runs clean; tightest slack %.3e [%s]", runs - bad, runs,
               worst, worst_case.c_str()),
           sw.seconds());
}

// ---------------------------------------------------------------------------
// A5: alpha = 1 - beta. The oscillation and gradient decay exponentially but
// the mean radius converges to a constant that need not be 1.
// ---------------------------------------------------------------------------

void a5() {
    Stopwatch sw;
    const auto grid = SphereGrid::lat_long(64, 128);
    InitialData init;
    init.kind = InitialData::Kind::perturbed_sphere;
    init.radius = 1.5;
    init.modes = {{1, 0, 0.04}, {2, 2, 0.03}, {2, 0, 0.02}};
    init.seed = 777;
    const auto u0 = make_initial(init, grid);
    const auto p = FlowParams::make(CurvatureSpec::sigma(1, 2), 0.0, 1.0);

    RunOptions opt;
    opt.t_end = 4.0;
    opt.snapshot_every = 0.05;
    opt.cfl = 0.4;
    opt.filter = polar_filter();
    opt.store_fields = true;
    const auto res = run(u0, p, opt);

    bool ok = res.summary.completed;
    const auto osc = res.summary.rate_osc;
    const auto grad = res.summary.rate_grad_ratio;
    ok = ok && osc.valid && osc.rate > 0.0 && osc.r2 >= 0.95;
    ok = ok && grad.valid && grad.rate > 0.0 && grad.r2 >= 0.95;

    const double lo0 = u0.min_value(), hi0 = u0.max_value();
    double mean_lo = 1e300, mean_hi = -1e300;
    for (const auto& f : res.fields) {
        const double m = f.mean_value();
        mean_lo = std::min(mean_lo, m);
        mean_hi = std::max(mean_hi, m);
    }
    ok = ok && mean_lo >= lo0 && mean_hi <= hi0;

    report("A5", ok,
           fmt("osc rate %.3f r2 %.4f, grad rate %.3f r2 %.4f, mean in "
               "[%.4f,%.4f] vs u0 range [%.4f,%.4f]",
               osc.rate, osc.r2, grad.rate, grad.r2, mean_lo, mean_hi, lo0, hi0),
           sw.seconds());
}

// ---------------------------------------------------------------------------
// A6: integrating the unnormalized flow and rescaling by phi(t) at matched
// tau reproduces the normalized flow.
// ---------------------------------------------------------------------------

void a6() {
    Stopwatch sw;
    const auto grid = SphereGrid::lat_long(64, 128);
    const auto u0 = a2_initial(grid);
    const auto pn = FlowParams::make(CurvatureSpec::sigma(1, 2), -1.0, 1.0,
                                     FlowMode::normalized);
    const auto pu = FlowParams::make(CurvatureSpec::sigma(1, 2), -1.0, 1.0,
                                     FlowMode::unnormalized);

    std::vector<double> times;
    for (double t = 0.25; t <= 2.0 + 1e-12; t += 0.25) times.push_back(t);

    RunOptions opt_u;
    opt_u.snapshot_times = times;
    opt_u.t_end = times.back();
    opt_u.cfl = 0.4;
    opt_u.filter = polar_filter();
    opt_u.store_fields = true;
    const auto res_u = run(u0, pu, opt_u);

    RunOptions opt_n = opt_u;
    opt_n.snapshot_times.clear();
    for (double t : times) opt_n.snapshot_times.push_back(tau_of_t(pn, t));
    opt_n.t_end = opt_n.snapshot_times.back();
    const auto res_n = run(u0, pn, opt_n);

    bool ok = res_u.summary.completed && res_n.summary.completed &&
              res_u.fields.size() == res_n.fields.size();
    double err = ok ? 0.0 : 1e300;
    if (ok) {
        for (std::size_t s = 1; s < res_u.fields.size(); ++s) {
            const double phi = phi_of_t(pn, res_u.fields[s].time);
            for (int i = 0; i < grid->node_count(); ++i) {
                err = std::max(err, std::abs(res_u.fields[s].values[i] / phi -
                                             res_n.fields[s].values[i]));
            }
        }
        ok = err <= 1e-4;
    }
    report("A6", ok,
           fmt("normalization consistency max-norm %.3e (tol 1e-4)", err),
           sw.seconds());
}

// ---------------------------------------------------------------------------
// A7: curvature core against its independent oracles.
// ---------------------------------------------------------------------------

double sigma_enumeration(int m, const std::vector<double>& lam) {
    const int n = static_cast<int>(lam.size());
    double sum = 0.0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        if (__builtin_popcount(mask) != m) continue;
        double prod = 1.0;
        for (int i = 0; i < n; ++i) {
            if (mask & (1u << i)) prod *= lam[i];
        }
        sum += prod;
    }
    return std::pow(sum, 1.0 / m);
}

void a7() {
    Stopwatch sw;
    bool ok = true;
    std::string detail;

    // recurrence vs subset enumeration, 1000 draws per dimension
    SplitMix64 rng(2024);
    double worst_rel = 0.0;
    for (int n = 2; n <= 5 && ok; ++n) {
        for (int draw = 0; draw < 1000; ++draw) {
            std::vector<double> lam(n);
            for (auto& v : lam) v = rng.uniform(0.1, 10.0);
            for (int m = 1; m <= n; ++m) {
                const auto spec = CurvatureSpec::sigma(m, n);
                const double got = eval_f(spec, lam);
                const double want = sigma_enumeration(m, lam);
                worst_rel = std::max(worst_rel, std::abs(got - want) / want);

                // Euler relation and finite-difference gradient
                const auto g = grad_f(spec, lam);
                double dot = 0.0;
                for (int i = 0; i < n; ++i) dot += lam[i] * g[i];
                if (std::abs(dot - got) > 1e-9 * got) ok = false;
                if (draw % 100 == 0) {
                    auto lam_fd = lam;
                    for (int i = 0; i < n; ++i) {
                        const double h = 1e-6;
                        lam_fd[i] = lam[i] + h;
                        const double fp = eval_f(spec, lam_fd);
                        lam_fd[i] = lam[i] - h;
                        const double fm = eval_f(spec, lam_fd);
                        lam_fd[i] = lam[i];
                        const double fd = (fp - fm) / (2.0 * h);
                        if (std::abs(g[i] - fd) > 1e-5 * std::abs(fd)) ok = false;
                    }
                }
            }
        }
    }
    ok = ok && worst_rel <= 1e-12;
    detail = fmt("recurrence vs enumeration worst rel %.2e; ", worst_rel);

    // inverse-concavity sampler: zero violations for sigma_m and power means
    long violations = 0;
    for (int n : {2, 3}) {
        for (int m = 1; m <= n; ++m) {
            violations +=
                check_inverse_concavity(CurvatureSpec::sigma(m, n), 10000, 7)
                    .violations;
        }
        for (double k : {1.0, 2.0}) {
            violations +=
                check_inverse_concavity(CurvatureSpec::power_mean(k, n), 10000, 7)
                    .violations;
        }
    }
    ok = ok && violations == 0;
    detail += fmt("concavity violations %ld (want 0)", violations);
    report("A7", ok, detail, sw.seconds());
}

// ---------------------------------------------------------------------------
// A8: second-order (or better) convergence of the discrete operators,
// measured as >= 3.5x error shrink per grid halving over three levels.
// ---------------------------------------------------------------------------

struct V3 {
    double x, y, z;
};
double dot3(V3 a, V3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
V3 sdir(double t, double p) {
    return {std::sin(t) * std::cos(p), std::sin(t) * std::sin(p), std::cos(t)};
}
V3 etheta(double t, double p) {
    return {std::cos(t) * std::cos(p), std::cos(t) * std::sin(p), -std::sin(t)};
}
V3 ephi(double, double p) { return {-std::sin(p), std::cos(p), 0.0}; }

void a8() {
    Stopwatch sw;
    bool ok = true;
    double min_ratio = 1e300;

    auto push_ratio = [&](double prev, double cur) {
        if (prev > 0.0) {
            min_ratio = std::min(min_ratio, prev / cur);
            if (prev / cur < 3.5) ok = false;
        }
    };

    // n=2: gradient and Hessian of exp(d.x) against the closed forms
    {
        const V3 d{0.2, 0.3, 0.4};
        double prev_g = 0.0, prev_h = 0.0;
        for (int nt : {16, 32, 64}) {
            const auto grid = SphereGrid::lat_long(nt, 2 * nt);
            SupportField u;
            u.grid = grid;
            u.values.resize(grid->node_count());
            for (int i = 0; i < grid->node_count(); ++i) {
                u.values[i] =
                    std::exp(dot3(d, sdir(grid->node_theta(i), grid->node_phi(i))));
            }
            const auto g = covariant_gradient(u);
            const auto b = radii_matrix(u);
            double eg = 0.0, eh = 0.0;
            for (int i = 0; i < grid->node_count(); ++i) {
                const double t = grid->node_theta(i), p = grid->node_phi(i);
                const double uu = u.values[i];
                const double dt_ = dot3(d, etheta(t, p));
                const double dp_ = dot3(d, ephi(t, p));
                const double dx = dot3(d, sdir(t, p));
                eg = std::max(eg, std::abs(g.comp_theta[i] - uu * dt_));
                eg = std::max(eg, std::abs(g.comp_phi[i] - uu * dp_));
                eh = std::max(eh, std::abs(b.b11[i] - uu * (dt_ * dt_ + 1.0 - dx)));
                eh = std::max(eh, std::abs(b.b12[i] - uu * dt_ * dp_));
                eh = std::max(eh, std::abs(b.b22[i] - uu * (dp_ * dp_ + 1.0 - dx)));
            }
            push_ratio(prev_g, eg);
            push_ratio(prev_h, eh);
            prev_g = eg;
            prev_h = eh;
        }
    }

    // n=1: gradient and curvature radius of exp(sin theta)
    {
        double prev_g = 0.0, prev_h = 0.0;
        for (int N : {64, 128, 256}) {
            const auto grid = SphereGrid::circle(N);
            SupportField u;
            u.grid = grid;
            u.values.resize(N);
            for (int i = 0; i < N; ++i) {
                u.values[i] = std::exp(std::sin(grid->theta_row(i)));
            }
            const auto g = covariant_gradient(u);
            const auto b = radii_matrix(u);
            double eg = 0.0, eh = 0.0;
            for (int i = 0; i < N; ++i) {
                const double t = grid->theta_row(i);
                const double uu = u.values[i];
                const double du = std::cos(t) * uu;
                const double ddu = (std::cos(t) * std::cos(t) - std::sin(t)) * uu;
                eg = std::max(eg, std::abs(g.comp_theta[i] - du));
                eh = std::max(eh, std::abs(b.b11[i] - (ddu + uu)));
            }
            push_ratio(prev_g, eg);
            push_ratio(prev_h, eh);
            prev_g = eg;
            prev_h = eh;
        }
    }

    // embed residuals: ellipse (n=1) and axisymmetric ellipsoid (n=2)
    {
        double prev = 0.0;
        for (int N : {64, 128, 256}) {
            const auto grid = SphereGrid::circle(N);
            InitialData init;
            init.kind = InitialData::Kind::ellipsoid;
            init.semi_axes = {2.0, 1.0};
            const auto u = make_initial(init, grid);
            double res = 0.0;
            for (const auto& pt : embed(u)) {
                res = std::max(res,
                               std::abs(pt[0] * pt[0] / 4.0 + pt[1] * pt[1] - 1.0));
            }
            push_ratio(prev, res);
            prev = res;
        }
        prev = 0.0;
        for (int nt : {16, 32, 64}) {
            const auto grid = SphereGrid::lat_long(nt, 2 * nt);
            InitialData init;
            init.kind = InitialData::Kind::ellipsoid;
            init.semi_axes = {1.2, 1.2, 0.9};
            const auto u = make_initial(init, grid);
            double res = 0.0;
            for (const auto& pt : embed(u)) {
                res = std::max(res, std::abs(pt[0] * pt[0] / 1.44 +
                                             pt[1] * pt[1] / 1.44 +
                                             pt[2] * pt[2] / 0.81 - 1.0));
            }
            push_ratio(prev, res);
            prev = res;
        }
    }

    report("A8", ok,
           fmt("all error ratios per halving >= 3.5 (worst %.2f)", min_ratio),
           sw.seconds());
}

// ---------------------------------------------------------------------------
// A9: n=1 cross-check; the curve flow at N=256 against an N=1024 reference.
// ---------------------------------------------------------------------------

void a9() {
    Stopwatch sw;
    InitialData init;
    init.kind = InitialData::Kind::perturbed_sphere;
    init.radius = 1.0;
    init.modes = {{2, 0, 0.02}, {3, 0, 0.01}};
    init.seed = 31;
    const auto p = FlowParams::make(CurvatureSpec::sigma(1, 1), -1.0, 1.0);

    std::vector<double> times;
    for (double t = 0.25; t <= 2.0 + 1e-12; t += 0.25) times.push_back(t);

    RunOptions opt;
    opt.snapshot_times = times;
    opt.t_end = times.back();
    opt.store_fields = true;

    const auto coarse = run(make_initial(init, SphereGrid::circle(256)), p, opt);
    const auto fine = run(make_initial(init, SphereGrid::circle(1024)), p, opt);

    bool ok = coarse.summary.completed && fine.summary.completed &&
              coarse.fields.size() == fine.fields.size();
    double err = ok ? 0.0 : 1e300;
    if (ok) {
        for (std::size_t s = 0; s < coarse.fields.size(); ++s) {
            for (int i = 0; i < 256; ++i) {
                err = std::max(err, std::abs(coarse.fields[s].values[i] -
                                             fine.fields[s].values[4 * i]));
            }
        }
        ok = err <= 1e-5;
    }
    report("A9", ok, fmt("N=256 vs N=1024 max |du| %.3e (tol 1e-5)", err),
           sw.seconds());
}

}  // namespace

int main() {
    std::printf("acceptance suite: S^2 grid 64x128, S^1 grid N=256\n");
    a1();
    a2_a3();
    a4();
    a5();
    a6();
    a7();
    a8();
    a9();
    std::printf("%d criterion failure(s)\n", g_failures);
    return g_failures;
}

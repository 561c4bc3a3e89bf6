#include "curveflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "curveflow/errors.hpp"
#include "curveflow/numeric.hpp"

namespace curveflow {

namespace {
constexpr double kConvexityEps = 1e-12;
}

// ---------------------------------------------------------------------------
// FlowParams
// ---------------------------------------------------------------------------

FlowParams FlowParams::make(CurvatureSpec spec, double alpha, double beta,
                            FlowMode mode) {
    FlowParams p;
    p.alpha = alpha;
    p.beta = beta;
    p.gamma = gamma_constant(spec, beta);
    p.q = alpha + beta - 1.0;
    p.mode = mode;
    p.spec = std::move(spec);
    return p;
}

bool FlowParams::in_theorem_range() const {
    return alpha <= 0.0 && beta > 0.0 && beta <= 1.0 - alpha;
}

void FlowParams::validate() const {
    spec.validate();
    if (std::abs(q - (alpha + beta - 1.0)) > 1e-15) {
        throw InvalidSpec("stored q does not match alpha + beta - 1");
    }
    if (std::abs(gamma - gamma_constant(spec, beta)) >
        1e-12 * std::max(1.0, gamma)) {
        throw InvalidSpec("stored gamma does not match f(1,...,1)^beta");
    }
}

// ---------------------------------------------------------------------------
// Barriers and rescaling
// ---------------------------------------------------------------------------

double barrier_value(double x0, double q, double gamma, double t) {
    if (!(q < 0.0)) throw BarrierUndefined("barriers need q < 0");
    if (!(x0 > 0.0)) throw BarrierUndefined("barrier start must be positive");
    const double bracket = 1.0 - (1.0 - powr(x0, -q)) * std::exp(q * gamma * t);
    return powr(bracket, -1.0 / q);
}

BarrierPair barrier_pair(const SupportField& u0, const FlowParams& p) {
    if (!(p.q < 0.0)) {
        throw BarrierUndefined("barriers are defined only for q < 0");
    }
    BarrierPair bp;
    bp.a = u0.min_value();
    bp.b = u0.max_value();
    bp.q = p.q;
    bp.gamma = p.gamma;
    if (!(bp.a <= 1.0 + 1e-12 && bp.b >= 1.0 - 1e-12)) {
        throw BarrierUndefined(
            "initial range must straddle 1 (rescale_to_straddle first)");
    }
    return bp;
}

std::pair<SupportField, double> rescale_to_straddle(const SupportField& u0) {
    const double lo = u0.min_value();
    const double hi = u0.max_value();
    if (!(lo > 0.0)) {
        throw NonPositiveSupport("cannot rescale a non-positive field", u0.time);
    }
    double scale = 1.0;
    if (!(lo <= 1.0 && 1.0 <= hi)) scale = 2.0 / (lo + hi);
    SupportField out = u0;
    if (scale != 1.0) {
        for (auto& v : out.values) v *= scale;
    }
    return {std::move(out), scale};
}

// ---------------------------------------------------------------------------
// Rescaling maps between the flows
// ---------------------------------------------------------------------------

double phi_of_t(const FlowParams& p, double t) {
    if (p.q == 0.0) return std::exp(p.gamma * t);
    const double s = -p.q;  // 1 - alpha - beta
    const double bracket = 1.0 + s * p.gamma * t;
    if (!(bracket > 0.0)) {
        throw DomainError("t outside the domain of phi(t)");
    }
    return powr(bracket, 1.0 / s);
}

double tau_of_t(const FlowParams& p, double t) {
    if (p.q == 0.0) return t;
    const double s = -p.q;
    const double bracket = 1.0 + s * p.gamma * t;
    if (!(bracket > 0.0)) {
        throw DomainError("t outside the domain of tau(t)");
    }
    return std::log(bracket) / (s * p.gamma);
}

double t_of_tau(const FlowParams& p, double tau) {
    if (p.q == 0.0) return tau;
    const double s = -p.q;
    return std::expm1(s * p.gamma * tau) / (s * p.gamma);
}

// ---------------------------------------------------------------------------
// Decay fit
// ---------------------------------------------------------------------------

FitResult fit_decay_rate(std::span<const double> t, std::span<const double> v,
                         double burn_in) {
    if (t.size() != v.size()) {
        throw InsufficientData("time and value series differ in length");
    }
    if (t.empty()) throw InsufficientData("empty series");
    const double t_start = t.front() + burn_in * (t.back() - t.front());

    double n = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_start) continue;
        if (!(v[i] > 0.0)) {
            throw NonPositiveValues("series value <= 0 in the fit window");
        }
        const double y = std::log(v[i]);
        n += 1.0;
        sx += t[i];
        sy += y;
        sxx += t[i] * t[i];
        sxy += t[i] * y;
        syy += y * y;
    }
    if (n < 8.0) throw InsufficientData("need at least 8 samples after burn-in");

    const double ss_tt = sxx - sx * sx / n;
    const double ss_ty = sxy - sx * sy / n;
    const double ss_yy = syy - sy * sy / n;
    if (ss_tt <= 0.0) throw InsufficientData("degenerate time axis");

    FitResult fit;
    const double slope = ss_ty / ss_tt;
    fit.rate = -slope;
    const double ss_res = ss_yy - slope * ss_ty;
    // a flat series has only cancellation noise left in ss_yy; count it as
    // fully explained
    if (ss_yy <= 1e-12 * std::max(1.0, syy)) {
        fit.r2 = 1.0;
    } else {
        fit.r2 = std::max(0.0, 1.0 - ss_res / ss_yy);
    }
    return fit;
}

// ---------------------------------------------------------------------------
// Engine: fused per-step evaluation with reusable buffers
// ---------------------------------------------------------------------------

namespace {

struct Engine {
    const SphereGrid& grid;
    const FlowParams& params;
    CurvatureKernel kernel;
    bool normalized;
    int n;

    DiffWorkspace dws;
    RadiiField radii;
    GradientField grad;
    LowpassWorkspace lws;
    std::vector<double> k1, k2, k3, k4, stage;

    Engine(const SphereGrid& g, const FlowParams& p)
        : grid(g),
          params(p),
          kernel(CurvatureKernel::compile(p.spec)),
          normalized(p.mode == FlowMode::normalized),
          n(g.node_count()) {
        k1.resize(n);
        k2.resize(n);
        k3.resize(n);
        k4.resize(n);
        stage.resize(n);
    }

    // rhs of the flow at `u`; optionally the diffusion bound
    // D_max = max beta u^alpha F^{beta-1} sum df/dlambda.
    void eval_rhs(std::span<const double> u, double time, std::span<double> out,
                  double* d_max) {
        for (int i = 0; i < n; ++i) {
            if (!std::isfinite(u[i])) {
                throw NumericalBlowup("support function is not finite", time);
            }
            if (!(u[i] > 0.0)) {
                throw NonPositiveSupport("support function reached zero", time);
            }
        }
        radii_matrix_into(grid, u, time, dws, radii);

        const double alpha = params.alpha;
        const double beta = params.beta;
        const double gamma = params.gamma;
        const bool one_dim = grid.dim() == 1;
        double dmax = 0.0;
        for (int i = 0; i < n; ++i) {
            const double lo = radii.lam_lo[i];
            if (!(lo > kConvexityEps)) {
                throw ConvexityLost("smallest curvature radius reached zero", time);
            }
            const double hi = radii.lam_hi[i];
            const double F = one_dim ? kernel.value(lo) : kernel.value(lo, hi);
            const double ua = powr(u[i], alpha);
            const double speed = ua * powr(F, beta);
            out[i] = normalized ? speed - gamma * u[i] : speed;
            if (d_max) {
                const double gsum =
                    one_dim ? kernel.grad_sum(lo) : kernel.grad_sum(lo, hi);
                const double d = beta * ua * powr(F, beta - 1.0) * gsum;
                dmax = std::max(dmax, d);
            }
        }
        if (d_max) *d_max = dmax;
    }

    // classical RK4 with k1 precomputed (so the caller can size dt from it)
    void advance(std::vector<double>& u, double time, double dt) {
        const double half = 0.5 * dt;
        for (int i = 0; i < n; ++i) stage[i] = u[i] + half * k1[i];
        eval_rhs(stage, time + half, k2, nullptr);
        for (int i = 0; i < n; ++i) stage[i] = u[i] + half * k2[i];
        eval_rhs(stage, time + half, k3, nullptr);
        for (int i = 0; i < n; ++i) stage[i] = u[i] + dt * k3[i];
        eval_rhs(stage, time + dt, k4, nullptr);
        const double w = dt / 6.0;
        for (int i = 0; i < n; ++i) {
            u[i] += w * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
        }
    }

    DiagnosticsRecord diagnostics(const SupportField& u, double dt_used) {
        DiagnosticsRecord rec;
        rec.time = u.time;
        rec.step_dt = dt_used;
        radii_matrix_into(grid, u.values, u.time, dws, radii);
        covariant_gradient_into(grid, u.values, dws, grad);

        const bool one_dim = grid.dim() == 1;
        double u_min = std::numeric_limits<double>::infinity(), u_max = -u_min;
        double q_min = u_min, q_max = -u_min;
        double l_min = u_min, l_max = -u_min;
        double gr = 0.0, dist = 0.0;
        for (int i = 0; i < n; ++i) {
            const double uu = u.values[i];
            u_min = std::min(u_min, uu);
            u_max = std::max(u_max, uu);
            dist = std::max(dist, std::abs(uu - 1.0));
            const double lo = radii.lam_lo[i], hi = radii.lam_hi[i];
            l_min = std::min(l_min, lo);
            l_max = std::max(l_max, hi);
            const double F = one_dim ? kernel.value(lo) : kernel.value(lo, hi);
            const double Q = powr(uu, params.alpha - 1.0) * powr(F, params.beta);
            q_min = std::min(q_min, Q);
            q_max = std::max(q_max, Q);
            const double gmag =
                one_dim ? std::abs(grad.comp_theta[i])
                        : std::hypot(grad.comp_theta[i], grad.comp_phi[i]);
            gr = std::max(gr, gmag / uu);
        }
        rec.u_min = u_min;
        rec.u_max = u_max;
        rec.q_min = q_min;
        rec.q_max = q_max;
        rec.lambda_min = l_min;
        rec.lambda_max = l_max;
        rec.grad_ratio = gr;
        rec.osc = u_max - u_min;
        rec.dist_to_unit = dist;
        return rec;
    }
};

}  // namespace

// ---------------------------------------------------------------------------
// Public operators
// ---------------------------------------------------------------------------

std::vector<double> rhs(const SupportField& u, const FlowParams& p) {
    Engine eng(*u.grid, p);
    std::vector<double> out(u.values.size());
    eng.eval_rhs(u.values, u.time, out, nullptr);
    return out;
}

double stable_dt(const SupportField& u, const FlowParams& p, double cfl) {
    if (!(cfl > 0.0 && cfl <= 1.0)) throw RangeError("cfl must lie in (0, 1]");
    Engine eng(*u.grid, p);
    std::vector<double> scratch(u.values.size());
    double d_max = 0.0;
    eng.eval_rhs(u.values, u.time, scratch, &d_max);
    const double h = u.grid->min_spacing();
    return cfl * h * h / d_max;
}

SupportField step(const SupportField& u, const FlowParams& p, double dt) {
    if (!(dt > 0.0)) throw RangeError("dt must be positive");
    Engine eng(*u.grid, p);
    SupportField out = u;
    eng.eval_rhs(out.values, out.time, eng.k1, nullptr);
    eng.advance(out.values, out.time, dt);
    out.time = u.time + dt;
    // validate the result: finite, positive, uniformly convex
    eng.eval_rhs(out.values, out.time, eng.stage, nullptr);
    return out;
}

// ---------------------------------------------------------------------------
// run()
// ---------------------------------------------------------------------------

namespace {

std::vector<double> build_wall(const RunOptions& opt) {
    if (!opt.snapshot_times.empty()) {
        std::vector<double> wall = opt.snapshot_times;
        std::sort(wall.begin(), wall.end());
        if (wall.front() > 0.0) wall.insert(wall.begin(), 0.0);
        return wall;
    }
    if (!(opt.t_end > 0.0)) throw RangeError("t_end must be positive");
    if (!(opt.snapshot_every > 0.0 && opt.snapshot_every <= opt.t_end)) {
        throw RangeError("snapshot_every must lie in (0, t_end]");
    }
    std::vector<double> wall;
    wall.push_back(0.0);
    for (double t = opt.snapshot_every; t < opt.t_end - 1e-12;
         t += opt.snapshot_every) {
        wall.push_back(t);
    }
    wall.push_back(opt.t_end);
    return wall;
}

struct SeriesView {
    std::vector<double> t, u_min, u_max, q_min, q_max, grad, l_ratio, osc, dist;
    explicit SeriesView(const std::vector<DiagnosticsRecord>& recs) {
        for (const auto& r : recs) {
            t.push_back(r.time);
            u_min.push_back(r.u_min);
            u_max.push_back(r.u_max);
            q_min.push_back(r.q_min);
            q_max.push_back(r.q_max);
            grad.push_back(r.grad_ratio);
            l_ratio.push_back(r.lambda_max / r.lambda_min);
            osc.push_back(r.osc);
            dist.push_back(r.dist_to_unit);
        }
    }
};

RateFit try_fit(std::span<const double> t, std::span<const double> v,
                double burn_in) {
    RateFit out;
    try {
        const auto fit = fit_decay_rate(t, v, burn_in);
        out.rate = fit.rate;
        out.r2 = fit.r2;
        out.valid = true;
    } catch (const FlowError&) {
        out.valid = false;
    }
    return out;
}

void check_invariants(RunSummary& sum, const SeriesView& s,
                      const FlowParams& p, const RunOptions& opt,
                      const BarrierPair* barrier,
                      const std::vector<DiagnosticsRecord>& recs) {
    const bool claimed = p.in_theorem_range();
    const bool normalized = p.mode == FlowMode::normalized;
    sum.claims_checked = claimed;
    const double eps = sum.eps_d;
    const std::size_t m = s.t.size();

    auto set = [&](const std::string& name, bool applicable, double worst,
                   double t_worst, const std::string& note) {
        InvariantVerdict v;
        v.worst_margin = worst;
        v.time_of_worst = t_worst;
        v.note = note;
        if (!applicable) {
            v.status = "skipped";
        } else if (!claimed) {
            v.status = "not_claimed";
        } else {
            v.status = worst >= 0.0 ? "pass" : "fail";
        }
        sum.invariants[name] = v;
    };

    // Extremum bounds: min u(t) >= min(1, min u(0)) - eps and the mirror
    // statement for the maximum. Normalized flow only.
    {
        const double floor = std::min(1.0, s.u_min.front());
        const double ceil = std::max(1.0, s.u_max.front());
        double worst = std::numeric_limits<double>::infinity();
        double t_worst = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double slack = std::min(s.u_min[i] - floor + eps,
                                          ceil - s.u_max[i] + eps);
            if (slack < worst) {
                worst = slack;
                t_worst = s.t[i];
            }
        }
        set("extremum_bounds", normalized, worst, t_worst,
            normalized ? "" : "skipped: unnormalized run");
    }

    // Q-envelope: max(Q_max, gamma) nonincreasing, min(Q_min, gamma)
    // nondecreasing, within eps per unit time.
    {
        double worst = std::numeric_limits<double>::infinity();
        double t_worst = 0.0;
        for (std::size_t i = 0; i + 1 < m; ++i) {
            const double dt = s.t[i + 1] - s.t[i];
            const double hi0 = std::max(s.q_max[i], p.gamma);
            const double hi1 = std::max(s.q_max[i + 1], p.gamma);
            const double lo0 = std::min(s.q_min[i], p.gamma);
            const double lo1 = std::min(s.q_min[i + 1], p.gamma);
            const double slack =
                std::min(hi0 - hi1 + eps * dt, lo1 - lo0 + eps * dt);
            if (slack < worst) {
                worst = slack;
                t_worst = s.t[i + 1];
            }
        }
        set("q_bounds", normalized && m >= 2, worst, t_worst,
            normalized ? "" : "skipped: unnormalized run");
    }

    // Gradient ratio max |grad u| / u nonincreasing within eps.
    {
        double worst = std::numeric_limits<double>::infinity();
        double t_worst = 0.0;
        for (std::size_t i = 0; i + 1 < m; ++i) {
            const double slack = s.grad[i] - s.grad[i + 1] + eps;
            if (slack < worst) {
                worst = slack;
                t_worst = s.t[i + 1];
            }
        }
        set("grad_monotone", m >= 2, worst, t_worst, "");
    }

    // Exponential gradient decay: positive fitted rate with decent fit.
    {
        const double g_peak =
            *std::max_element(s.grad.begin(), s.grad.end());
        if (g_peak < 1e-12) {
            set("grad_decay", false, 0.0, 0.0, "skipped: gradient is flat zero");
        } else if (!normalized) {
            set("grad_decay", false, 0.0, 0.0, "skipped: unnormalized run");
        } else {
            const auto fit = try_fit(s.t, s.grad, opt.fit_burn_in);
            if (!fit.valid) {
                set("grad_decay", false, 0.0, s.t.back(),
                    "skipped: too few samples after burn-in for a fit");
            } else {
                const double worst = std::min(fit.rate, fit.r2 - 0.95);
                set("grad_decay", true, worst, s.t.back(),
                    "rate=" + std::to_string(fit.rate) +
                        " r2=" + std::to_string(fit.r2));
            }
        }
    }

    // Barrier sandwich u1 - eps <= min u <= max u <= u2 + eps.
    if (barrier) {
        double worst = std::numeric_limits<double>::infinity();
        double t_worst = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double lo = barrier->lower(s.t[i]);
            const double hi = barrier->upper(s.t[i]);
            const double slack =
                std::min(s.u_min[i] - lo + eps, hi - s.u_max[i] + eps);
            if (slack < worst) {
                worst = slack;
                t_worst = s.t[i];
            }
        }
        set("barrier_sandwich", true, worst, t_worst, "");
    } else {
        std::string why = "skipped: ";
        if (!normalized) {
            why += "unnormalized run";
        } else if (p.q >= 0.0) {
            why += "q >= 0";
        } else {
            why += "initial range does not straddle 1";
        }
        set("barrier_sandwich", false, 0.0, 0.0, why);
    }

    // Pinching: lambda_max/lambda_min stays within a factor of its initial
    // value (gate opt.pinching_factor).
    {
        const double bound = opt.pinching_factor * s.l_ratio.front() + eps;
        double worst = std::numeric_limits<double>::infinity();
        double t_worst = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double slack = bound - s.l_ratio[i];
            if (slack < worst) {
                worst = slack;
                t_worst = s.t[i];
            }
        }
        set("pinching", normalized, worst, t_worst,
            normalized ? "final_ratio=" + std::to_string(s.l_ratio.back())
                       : "skipped: unnormalized run");
    }

    // fitted rates for the convergence quantities
    sum.rate_dist_to_unit = try_fit(s.t, s.dist, opt.fit_burn_in);
    sum.rate_osc = try_fit(s.t, s.osc, opt.fit_burn_in);
    sum.rate_grad_ratio = try_fit(s.t, s.grad, opt.fit_burn_in);

    const auto& last = recs.back();
    sum.final_time = last.time;
    sum.final_u_min = last.u_min;
    sum.final_u_max = last.u_max;
    sum.final_lambda_ratio = last.lambda_max / last.lambda_min;
}

}  // namespace

bool RunSummary::any_claimed_failure() const {
    for (const auto& [name, v] : invariants) {
        if (v.status == "fail") return true;
    }
    return false;
}

RunResult run(const SupportField& u0, const FlowParams& p,
              const RunOptions& opt) {
    p.validate();
    if (opt.fixed_dt < 0.0) throw RangeError("fixed_dt must be >= 0");
    if (!(opt.cfl > 0.0 && opt.cfl <= 1.0)) {
        throw RangeError("cfl must lie in (0, 1]");
    }

    const std::vector<double> wall = build_wall(opt);
    Engine eng(*u0.grid, p);
    RunResult res;

    // barrier bookkeeping (normalized, q < 0, straddling initial range)
    BarrierPair barrier;
    bool barrier_ok = false;
    if (p.mode == FlowMode::normalized && p.q < 0.0) {
        try {
            barrier = barrier_pair(u0, p);
            barrier_ok = true;
        } catch (const BarrierUndefined&) {
            barrier_ok = false;
        }
    }

    SupportField u = u0;
    const double h_eff = u0.grid->effective_min_spacing(opt.filter);
    double dt_base = opt.fixed_dt;

    auto record = [&](double dt_used) {
        auto rec = eng.diagnostics(u, dt_used);
        if (barrier_ok) {
            rec.barrier_defined = true;
            rec.barrier_lo = barrier.lower(u.time);
            rec.barrier_hi = barrier.upper(u.time);
        }
        res.diagnostics.push_back(rec);
        if (opt.store_fields) res.fields.push_back(u);
    };

    std::size_t next_wall = 0;
    if (wall[0] == 0.0) {
        record(0.0);
        ++next_wall;
    }

    try {
        while (next_wall < wall.size()) {
            const double target = wall[next_wall];
            while (u.time < target) {
                double d_max = 0.0;
                eng.eval_rhs(u.values, u.time, eng.k1,
                             opt.fixed_dt > 0.0 ? nullptr : &d_max);
                if (opt.fixed_dt <= 0.0) {
                    dt_base = opt.cfl * h_eff * h_eff / d_max;
                }
                double dt = dt_base;
                bool lands = false;
                if (u.time + dt >= target - 1e-13) {
                    dt = target - u.time;
                    lands = true;
                }
                eng.advance(u.values, u.time, dt);
                u.time = lands ? target : u.time + dt;
                apply_longitudinal_lowpass(u, opt.filter, eng.lws);
            }
            record(dt_base);
            ++next_wall;
        }
        res.summary.completed = true;
    } catch (const ConvexityLost& e) {
        res.summary.abort_reason = "convexity_lost";
        res.summary.abort_time = e.when;
    } catch (const NonPositiveSupport& e) {
        res.summary.abort_reason = "non_positive_support";
        res.summary.abort_time = e.when;
    } catch (const NumericalBlowup& e) {
        res.summary.abort_reason = "numerical_blowup";
        res.summary.abort_time = e.when;
    }

    if (res.diagnostics.empty()) {
        // died before the first snapshot; report at least the initial state
        res.summary.eps_d = opt.eps_d > 0.0 ? opt.eps_d : 1e-4;
        return res;
    }

    double u_max_seen = 0.0;
    for (const auto& r : res.diagnostics) {
        u_max_seen = std::max(u_max_seen, r.u_max);
    }
    res.summary.eps_d =
        opt.eps_d > 0.0 ? opt.eps_d : 1e-4 * std::max(1.0, u_max_seen);

    const SeriesView series(res.diagnostics);
    check_invariants(res.summary, series, p, opt,
                     barrier_ok ? &barrier : nullptr, res.diagnostics);
    return res;
}

}  // namespace curveflow

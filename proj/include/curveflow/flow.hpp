#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "curveflow/curvature.hpp"
#include "curveflow/support_field.hpp"

namespace curveflow {

enum class FlowMode { normalized, unnormalized };

/// Exponents and constants of the flow du/dt = u^alpha F^beta - gamma*u
/// (normalized mode; the unnormalized flow drops the -gamma*u term).
struct FlowParams {
    double alpha = -1.0;
    double beta = 1.0;
    double gamma = 2.0;  // f(1,...,1)^beta
    double q = -1.0;     // alpha + beta - 1
    FlowMode mode = FlowMode::normalized;
    CurvatureSpec spec;

    static FlowParams make(CurvatureSpec spec, double alpha, double beta,
                           FlowMode mode = FlowMode::normalized);

    /// alpha <= 0 < beta <= 1 - alpha. Runs outside the range are allowed but
    /// their monitor verdicts are marked not_claimed.
    bool in_theorem_range() const;

    /// Consistency of the stored derived quantities (q, gamma) to 1e-15.
    void validate() const;
};

/// Snapshot of every monitored quantity at one flow time.
struct DiagnosticsRecord {
    double time = 0.0;
    double u_min = 0.0, u_max = 0.0;
    double q_min = 0.0, q_max = 0.0;  // Q = u^{alpha-1} F^beta
    double grad_ratio = 0.0;          // max |grad u| / u
    double lambda_min = 0.0, lambda_max = 0.0;
    double osc = 0.0;                 // u_max - u_min
    double dist_to_unit = 0.0;        // max |u - 1|
    bool barrier_defined = false;
    double barrier_lo = 0.0, barrier_hi = 0.0;
    double step_dt = 0.0;
};

// ---------------------------------------------------------------------------
// Explicit radial solutions that sandwich any solution when q < 0.
// ---------------------------------------------------------------------------

/// [1 - (1 - x0^{-q}) e^{q gamma t}]^{-1/q}; requires q < 0, x0 > 0, t >= 0.
double barrier_value(double x0, double q, double gamma, double t);

struct BarrierPair {
    double a = 1.0, b = 1.0;  // initial min / max of u
    double q = -1.0;
    double gamma = 1.0;
    double lower(double t) const { return barrier_value(a, q, gamma, t); }
    double upper(double t) const { return barrier_value(b, q, gamma, t); }
};

/// Throws BarrierUndefined if q >= 0 or min u0 <= 1 <= max u0 fails.
BarrierPair barrier_pair(const SupportField& u0, const FlowParams& p);

/// Scales u0 so that min <= 1 <= max; returns the scale used (1 when the
/// range already straddles 1).
std::pair<SupportField, double> rescale_to_straddle(const SupportField& u0);

// ---------------------------------------------------------------------------
// Flow operators
// ---------------------------------------------------------------------------

/// speed - gamma*u (normalized) or speed alone (unnormalized).
std::vector<double> rhs(const SupportField& u, const FlowParams& p);

/// cfl * h_min^2 / D_max with h_min the smallest grid spacing and
/// D_max = max over nodes of beta u^alpha F^{beta-1} sum_i df/dlambda_i.
double stable_dt(const SupportField& u, const FlowParams& p, double cfl);

/// One classical RK4 step; validates the resulting field.
SupportField step(const SupportField& u, const FlowParams& p, double dt);

// ---------------------------------------------------------------------------
// Rescaling between the normalized and unnormalized flows
// ---------------------------------------------------------------------------

/// Scale factor phi(t): e^{gamma t} when alpha = 1 - beta, else
/// (1 + (1-alpha-beta) gamma t)^{1/(1-alpha-beta)}.
double phi_of_t(const FlowParams& p, double t);

/// Reparametrized time tau(t); inverse provided by t_of_tau.
double tau_of_t(const FlowParams& p, double t);
double t_of_tau(const FlowParams& p, double tau);

// ---------------------------------------------------------------------------
// Decay-rate fitting
// ---------------------------------------------------------------------------

struct FitResult {
    double rate = 0.0;  // -slope of log(value) vs t
    double r2 = 0.0;
};

/// Least squares on log(v) vs t after discarding the first `burn_in` fraction
/// of the time span. Throws InsufficientData (< 8 samples in the window) or
/// NonPositiveValues.
FitResult fit_decay_rate(std::span<const double> t, std::span<const double> v,
                         double burn_in = 0.3);

// ---------------------------------------------------------------------------
// run(): integrate, record diagnostics, check the monitored estimates
// ---------------------------------------------------------------------------

struct InvariantVerdict {
    std::string status;          // pass | fail | skipped | not_claimed
    double worst_margin = 0.0;   // smallest slack incl. tolerance; < 0 = violated
    double time_of_worst = 0.0;
    std::string note;
};

struct RateFit {
    double rate = 0.0;
    double r2 = 0.0;
    bool valid = false;
};

struct RunSummary {
    bool completed = false;
    std::string abort_reason;  // convexity_lost | non_positive_support | numerical_blowup
    double abort_time = 0.0;
    bool claims_checked = false;  // false when outside the theorem range
    double eps_d = 0.0;           // resolved tolerance actually used
    std::map<std::string, InvariantVerdict> invariants;
    RateFit rate_dist_to_unit, rate_osc, rate_grad_ratio;
    double final_time = 0.0;
    double final_u_min = 0.0, final_u_max = 0.0;
    double final_lambda_ratio = 1.0;

    bool any_claimed_failure() const;
};

struct RunOptions {
    double t_end = 1.0;
    double snapshot_every = 0.05;
    std::vector<double> snapshot_times;  // optional explicit wall; overrides cadence
    double cfl = 0.25;
    double fixed_dt = 0.0;  // > 0 disables the adaptive bound
    double eps_d = 0.0;     // 0 = auto: 1e-4 * max(1, observed u_max)
    double fit_burn_in = 0.3;
    double pinching_factor = 2.0;  // allowed growth of lambda_max/lambda_min
    PolarFilterConfig filter;
    bool store_fields = false;
};

struct RunResult {
    std::vector<DiagnosticsRecord> diagnostics;
    std::vector<SupportField> fields;  // populated when store_fields
    RunSummary summary;
};

RunResult run(const SupportField& u0, const FlowParams& p, const RunOptions& opt);

}  // namespace curveflow

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "curveflow/numeric.hpp"

namespace curveflow {

enum class CurvatureFamily { sigma_m, power_mean, product };

/// A symmetric, 1-homogeneous, positive curvature function f of the n
/// principal curvature radii, built from three families:
///   sigma_m     f = (elementary symmetric polynomial e_m)^(1/m)
///   power_mean  f = (sum lambda_i^k)^(1/k), k > 0
///   product     f = prod f_i^{w_i}, w_i >= 0, sum w_i = 1
struct CurvatureSpec {
    CurvatureFamily family = CurvatureFamily::sigma_m;
    int n = 2;       // number of radii
    int m = 1;       // sigma_m order
    double k = 1.0;  // power mean exponent

    // product children (parallel arrays)
    std::vector<CurvatureSpec> factors;
    std::vector<double> weights;

    static CurvatureSpec sigma(int m, int n);
    static CurvatureSpec power_mean(double k, int n);
    static CurvatureSpec product(std::vector<CurvatureSpec> factors,
                                 std::vector<double> weights, int n);

    /// Throws InvalidSpec if the structural invariants fail.
    void validate() const;

    /// Round-trips through parse_curvature_spec.
    std::string to_string() const;
};

/// f(lambda). Throws NonPositiveRadii unless every lambda_i > 0.
double eval_f(const CurvatureSpec& spec, std::span<const double> lambda);

/// (df/dlambda_1, ..., df/dlambda_n); every component strictly positive.
void grad_f(const CurvatureSpec& spec, std::span<const double> lambda,
            std::span<double> out);
std::vector<double> grad_f(const CurvatureSpec& spec,
                           std::span<const double> lambda);

/// Evaluates f and its gradient in one pass; returns f.
double eval_f_and_grad(const CurvatureSpec& spec, std::span<const double> lambda,
                       std::span<double> grad_out);

/// Dual function f_*(lambda) = 1 / f(1/lambda_1, ..., 1/lambda_n).
double eval_f_star(const CurvatureSpec& spec, std::span<const double> lambda);

/// gamma = f(1,...,1)^beta, the constant that makes the unit sphere a steady
/// state of the normalized flow.
double gamma_constant(const CurvatureSpec& spec, double beta);

// ---------------------------------------------------------------------------
// Sampled checks of the structural hypotheses on f_* (concavity, vanishing on
// the boundary of the positive cone). Evidence, not proof.
// ---------------------------------------------------------------------------

struct ConcavityReport {
    long samples = 0;
    long violations = 0;
    // min over samples of f_*(mid) - (f_*(a)+f_*(b))/2; negative below -tol
    // counts as a violation.
    double worst_margin = 0.0;
    double tol = 1e-10;
    // f_* along (eps, 1, ..., 1) for a decreasing eps sequence.
    std::vector<double> boundary_eps;
    std::vector<double> boundary_values;
    bool boundary_vanishes = false;
};

/// Draws `samples` pairs in the box [0.05, 20]^n and tests midpoint concavity
/// of f_*; also probes f_* along lambda_1 -> 0+.
ConcavityReport check_inverse_concavity(const CurvatureSpec& spec, long samples,
                                        std::uint64_t seed);

// ---------------------------------------------------------------------------
// Spec strings: "sigma:M" | "pmean:K" | "product:(SPEC*W,SPEC*W,...)"
// ---------------------------------------------------------------------------

CurvatureSpec parse_curvature_spec(const std::string& text, int n);

// ---------------------------------------------------------------------------
// Flattened evaluator for per-node hot loops (n = 1 or 2). Falls back to the
// generic recursive path for nested products.
// ---------------------------------------------------------------------------

double kernel_generic_value(const CurvatureSpec& spec, double l1, double l2);
double kernel_generic_grad_sum(const CurvatureSpec& spec, double l1, double l2);

struct CurvatureKernel {
    enum class Tag { scale1d, sigma1, sigma2, pmean2, pmean_k, generic };
    Tag tag = Tag::sigma1;
    double k = 2.0;       // pmean exponent
    double c = 1.0;       // n=1 slope f(1)
    const CurvatureSpec* spec = nullptr;

    static CurvatureKernel compile(const CurvatureSpec& spec);

    // n=2: value of F at radii (l1, l2), both > 0.
    double value(double l1, double l2) const {
        switch (tag) {
            case Tag::sigma1:
                return l1 + l2;
            case Tag::sigma2:
                return std::sqrt(l1 * l2);
            case Tag::pmean2:
                return std::sqrt(l1 * l1 + l2 * l2);
            case Tag::pmean_k: {
                const double s = powr(l1, k) + powr(l2, k);
                return powr(s, 1.0 / k);
            }
            default:
                return kernel_generic_value(*spec, l1, l2);
        }
    }

    // n=2: sum of the partial derivatives dF/dl1 + dF/dl2.
    double grad_sum(double l1, double l2) const {
        switch (tag) {
            case Tag::sigma1:
                return 2.0;
            case Tag::sigma2:
                return 0.5 * (l1 + l2) / std::sqrt(l1 * l2);
            case Tag::pmean2:
                return (l1 + l2) / std::sqrt(l1 * l1 + l2 * l2);
            case Tag::pmean_k: {
                const double p1 = powr(l1, k);
                const double p2 = powr(l2, k);
                const double s = p1 + p2;
                return powr(s, 1.0 / k) * (p1 / l1 + p2 / l2) / s;
            }
            default:
                return kernel_generic_grad_sum(*spec, l1, l2);
        }
    }

    // n=1 versions.
    double value(double l) const { return c * l; }
    double grad_sum(double) const { return c; }
};

}  // namespace curveflow

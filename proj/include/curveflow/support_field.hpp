#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "curveflow/curvature.hpp"
#include "curveflow/sphere_grid.hpp"

namespace curveflow {

/// The support function u sampled on a SphereGrid; the state of the flow.
/// Invariants (enforced by the convexity certificate, not the constructor):
/// all values strictly positive and the radii matrix b = Hess(u) + u*I
/// positive definite at every node.
struct SupportField {
    std::shared_ptr<const SphereGrid> grid;
    std::vector<double> values;
    double time = 0.0;

    static SupportField constant(std::shared_ptr<const SphereGrid> grid,
                                 double value);
    double min_value() const;
    double max_value() const;
    /// Quadrature mean over the sphere.
    double mean_value() const;
};

/// Frame components of the covariant gradient: (d_theta u, (1/sin)d_phi u)
/// for n=2, just du/dtheta for n=1.
struct GradientField {
    int dim = 2;
    std::vector<double> comp_theta;
    std::vector<double> comp_phi;  // empty for n=1
};

/// Per-node curvature-radii matrix b = Hess(u) + u*I in the orthonormal
/// frame, with its eigenvalues. For n=1 only b11 (== lam) is stored.
struct RadiiField {
    int dim = 2;
    std::vector<double> b11, b12, b22;
    std::vector<double> lam_lo, lam_hi;

    double min_eigenvalue() const;
    double max_eigenvalue() const;
};

/// Scratch buffers for the stencil passes; reusable across calls to avoid
/// per-step allocation in the flow engine.
struct DiffWorkspace {
    std::vector<double> ext;   // field with two ghost rows beyond each pole
    std::vector<double> dphi;  // 4th-order d_phi of ext, for the cross term
};

GradientField covariant_gradient(const SupportField& u);
void covariant_gradient_into(const SphereGrid& grid, std::span<const double> u,
                             DiffWorkspace& ws, GradientField& out);

/// b11 = d_tt u + u; b12 = (d_tp u - cot*d_p u)/sin; b22 = d_pp u/sin^2 +
/// cot*d_t u + u. Eigenvalues by the closed-form symmetric 2x2 formula.
/// Throws NumericalBlowup if any entry is non-finite.
RadiiField radii_matrix(const SupportField& u);
void radii_matrix_into(const SphereGrid& grid, std::span<const double> u,
                       double time, DiffWorkspace& ws, RadiiField& out);

/// u^alpha * F^beta per node with F = f(eigenvalues of b). Throws
/// ConvexityLost if any eigenvalue <= 1e-12, NonPositiveSupport if u <= 0.
std::vector<double> speed_field(const SupportField& u, const CurvatureSpec& spec,
                                double alpha, double beta);

/// Inverse-Gauss-map reconstruction X = u*x + grad u lifted to the tangent
/// space. n=1 points carry z = 0.
std::vector<std::array<double, 3>> embed(const SupportField& u);

// ---------------------------------------------------------------------------
// Initial data
// ---------------------------------------------------------------------------

struct InitialData {
    enum class Kind { sphere, ellipsoid, perturbed_sphere };

    struct Mode {
        int degree = 2;      // spherical-harmonic degree (n=2) / Fourier mode (n=1)
        int order = 0;       // azimuthal order, ignored for n=1
        double amplitude = 0.0;
    };

    Kind kind = Kind::sphere;
    double radius = 1.0;
    std::vector<double> semi_axes;  // n+1 entries for ellipsoid
    std::vector<Mode> modes;        // perturbed_sphere
    std::uint64_t seed = 12345;     // phases of the perturbation modes
};

/// Builds the support field and verifies the convexity certificate; throws
/// NotConvex if the requested shape is not uniformly convex on this grid.
SupportField make_initial(const InitialData& init,
                          std::shared_ptr<const SphereGrid> grid);

/// lambda_min > 1e-10 * max(1, u_max) and u > 0 everywhere; throws NotConvex.
void check_convexity_certificate(const SupportField& u);

// ---------------------------------------------------------------------------
// Longitudinal low-pass (see PolarFilterConfig). No-op for n=1 grids and
// untruncated rows.
// ---------------------------------------------------------------------------

struct LowpassWorkspace {
    int n_phi = 0;
    std::vector<double> cos_tab, sin_tab;  // cos/sin(2*pi*i/Nphi)
    std::vector<double> coef_a, coef_b;
    std::vector<double> row;
};

void apply_longitudinal_lowpass(SupportField& u, const PolarFilterConfig& filter,
                                LowpassWorkspace& ws);
void apply_longitudinal_lowpass(SupportField& u, const PolarFilterConfig& filter);

}  // namespace curveflow

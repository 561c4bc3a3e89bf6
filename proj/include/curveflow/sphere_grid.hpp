#pragma once

#include <memory>
#include <span>
#include <vector>

namespace curveflow {

/// Longitudinal Fourier low-pass for lat-long grids. Off by default. When
/// enabled, row j keeps azimuthal modes m <= max(m_floor, kappa*sin(theta_j)*Nphi/2),
/// which caps the azimuthal stiffness near the poles; runs record it in their
/// output metadata.
struct PolarFilterConfig {
    bool enabled = false;
    double kappa = 1.0;
    int m_floor = 2;
};

/// Discretization of S^1 (N equally spaced angles) or S^2 (Ntheta x Nphi
/// lat-long grid with offset colatitudes, so no node sits on a pole).
class SphereGrid {
public:
    /// n=1 grid, theta_i = 2*pi*i/N. Requires N >= 16.
    static std::shared_ptr<const SphereGrid> circle(int n_nodes);

    /// n=2 grid, theta_j = (j+1/2)*pi/Ntheta, phi_k = 2*pi*k/Nphi.
    /// Requires Ntheta >= 16, Nphi >= 32 and Nphi even.
    static std::shared_ptr<const SphereGrid> lat_long(int n_theta, int n_phi);

    int dim() const { return dim_; }
    int node_count() const { return static_cast<int>(weights_.size()); }
    int n_theta() const { return n_theta_; }
    int n_phi() const { return n_phi_; }
    double d_theta() const { return d_theta_; }
    double d_phi() const { return d_phi_; }

    int index(int j, int k) const { return j * n_phi_ + k; }

    // per-row colatitude data (n=2); for n=1 theta_row(i) is the angle of node i
    double theta_row(int j) const { return theta_[j]; }
    double sin_theta(int j) const { return sin_theta_[j]; }
    double cos_theta(int j) const { return cos_theta_[j]; }
    double inv_sin(int j) const { return inv_sin_[j]; }
    double cot(int j) const { return cot_[j]; }
    double phi_col(int k) const { return phi_[k]; }

    double node_theta(int idx) const;
    double node_phi(int idx) const;

    std::span<const double> quad_weights() const { return weights_; }
    double measure() const;  // 2*pi or 4*pi

    /// Smallest grid spacing: 2*pi/N for n=1, min(dtheta, sin(theta)*dphi)
    /// over rows for n=2.
    double min_spacing() const;

    /// Spacing consistent with the azimuthal modes that survive `filter`;
    /// equals min_spacing() when the filter is off. Row j with mode cap m_c
    /// behaves like spacing 2*sin(theta_j)*dphi / sqrt(2-2cos(m_c*dphi)).
    double effective_min_spacing(const PolarFilterConfig& filter) const;

    /// Azimuthal mode cap of row j under `filter` (Nphi/2 = untruncated).
    int mode_cap(int j, const PolarFilterConfig& filter) const;

    /// True when the low-pass actually truncates row j: the cap bites and the
    /// row's raw spacing is below the filtered time-step bound.
    bool row_filtered(int j, const PolarFilterConfig& filter) const;

private:
    SphereGrid() = default;

    int dim_ = 2;
    int n_theta_ = 0;
    int n_phi_ = 1;
    double d_theta_ = 0.0;
    double d_phi_ = 0.0;
    std::vector<double> theta_, sin_theta_, cos_theta_, inv_sin_, cot_;
    std::vector<double> phi_;
    std::vector<double> weights_;
};

}  // namespace curveflow

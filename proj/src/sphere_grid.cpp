#include "curveflow/sphere_grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "curveflow/errors.hpp"

namespace curveflow {

namespace {
constexpr double kPi = std::numbers::pi;
}

std::shared_ptr<const SphereGrid> SphereGrid::circle(int n_nodes) {
    if (n_nodes < 16) {
        throw InvalidSpec("circle grid needs N >= 16");
    }
    auto g = std::shared_ptr<SphereGrid>(new SphereGrid());
    g->dim_ = 1;
    g->n_theta_ = n_nodes;
    g->n_phi_ = 1;
    g->d_theta_ = 2.0 * kPi / n_nodes;
    g->d_phi_ = 0.0;
    g->theta_.resize(n_nodes);
    for (int i = 0; i < n_nodes; ++i) g->theta_[i] = g->d_theta_ * i;
    g->weights_.assign(n_nodes, g->d_theta_);
    return g;
}

std::shared_ptr<const SphereGrid> SphereGrid::lat_long(int n_theta, int n_phi) {
    if (n_theta < 16 || n_phi < 32) {
        throw InvalidSpec("lat-long grid needs Ntheta >= 16 and Nphi >= 32");
    }
    if (n_phi % 2 != 0) {
        throw InvalidSpec("Nphi must be even (pole ghosts shift by half a turn)");
    }
    auto g = std::shared_ptr<SphereGrid>(new SphereGrid());
    g->dim_ = 2;
    g->n_theta_ = n_theta;
    g->n_phi_ = n_phi;
    g->d_theta_ = kPi / n_theta;
    g->d_phi_ = 2.0 * kPi / n_phi;

    g->theta_.resize(n_theta);
    g->sin_theta_.resize(n_theta);
    g->cos_theta_.resize(n_theta);
    g->inv_sin_.resize(n_theta);
    g->cot_.resize(n_theta);
    for (int j = 0; j < n_theta; ++j) {
        const double th = (j + 0.5) * g->d_theta_;
        g->theta_[j] = th;
        g->sin_theta_[j] = std::sin(th);
        g->cos_theta_[j] = std::cos(th);
        g->inv_sin_[j] = 1.0 / g->sin_theta_[j];
        g->cot_[j] = g->cos_theta_[j] / g->sin_theta_[j];
    }
    g->phi_.resize(n_phi);
    for (int k = 0; k < n_phi; ++k) g->phi_[k] = g->d_phi_ * k;

    // Exact cell areas: the theta cells tile [0, pi], so the weights sum to
    // 4*pi up to rounding.
    g->weights_.resize(static_cast<std::size_t>(n_theta) * n_phi);
    for (int j = 0; j < n_theta; ++j) {
        const double band =
            std::cos(j * g->d_theta_) - std::cos((j + 1) * g->d_theta_);
        for (int k = 0; k < n_phi; ++k) {
            g->weights_[g->index(j, k)] = band * g->d_phi_;
        }
    }
    return g;
}

double SphereGrid::node_theta(int idx) const {
    return dim_ == 1 ? theta_[idx] : theta_[idx / n_phi_];
}

double SphereGrid::node_phi(int idx) const {
    return dim_ == 1 ? 0.0 : phi_[idx % n_phi_];
}

double SphereGrid::measure() const { return dim_ == 1 ? 2.0 * kPi : 4.0 * kPi; }

double SphereGrid::min_spacing() const {
    if (dim_ == 1) return d_theta_;
    // sin(theta) is smallest at the rows nearest the poles
    const double s = std::min(sin_theta_.front(), sin_theta_.back());
    return std::min(d_theta_, s * d_phi_);
}

int SphereGrid::mode_cap(int j, const PolarFilterConfig& filter) const {
    const int nyquist = n_phi_ / 2;
    if (dim_ == 1 || !filter.enabled) return nyquist;
    const int prop =
        static_cast<int>(std::floor(filter.kappa * sin_theta_[j] * nyquist));
    return std::clamp(std::max(filter.m_floor, prop), 1, nyquist);
}

bool SphereGrid::row_filtered(int j, const PolarFilterConfig& filter) const {
    if (dim_ == 1 || !filter.enabled) return false;
    if (mode_cap(j, filter) >= n_phi_ / 2) return false;
    return sin_theta_[j] * d_phi_ < effective_min_spacing(filter);
}

double SphereGrid::effective_min_spacing(const PolarFilterConfig& filter) const {
    if (dim_ == 1 || !filter.enabled) return min_spacing();
    double h = d_theta_;
    for (int j = 0; j < n_theta_; ++j) {
        const int mc = mode_cap(j, filter);
        // largest surviving second-difference symbol on this row
        const double sym = 2.0 - 2.0 * std::cos(std::min(kPi, mc * d_phi_));
        const double h_row = 2.0 * sin_theta_[j] * d_phi_ / std::sqrt(sym);
        h = std::min(h, h_row);
    }
    return h;
}

}  // namespace curveflow

#include "curveflow/support_field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "curveflow/errors.hpp"
#include "curveflow/numeric.hpp"

namespace curveflow {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kConvexityEps = 1e-12;  // speed_field eigenvalue floor

inline int wrap(int k, int n) { return (k % n + n) % n; }

// ---------------------------------------------------------------------------
// Extended array: two ghost rows beyond each pole. The continuation across a
// pole is u(-theta, phi) = u(theta, phi + pi), so ghost rows are half-turn
// rotated copies of the first interior rows.
// ---------------------------------------------------------------------------

void build_extended(const SphereGrid& g, std::span<const double> u,
                    std::vector<double>& ext) {
    const int nt = g.n_theta();
    const int np = g.n_phi();
    const int half = np / 2;
    ext.resize(static_cast<std::size_t>(nt + 4) * np);

    auto copy_shifted = [&](int ext_row, int phys_row) {
        double* dst = ext.data() + static_cast<std::size_t>(ext_row) * np;
        const double* src = u.data() + static_cast<std::size_t>(phys_row) * np;
        for (int k = 0; k < np; ++k) dst[k] = src[(k + half) % np];
    };

    for (int j = 0; j < nt; ++j) {
        std::copy_n(u.data() + static_cast<std::size_t>(j) * np, np,
                    ext.data() + static_cast<std::size_t>(j + 2) * np);
    }
    copy_shifted(1, 0);           // row -1
    copy_shifted(0, 1);           // row -2
    copy_shifted(nt + 2, nt - 1);  // row Ntheta
    copy_shifted(nt + 3, nt - 2);  // row Ntheta+1
}

// 4th-order first derivative along a periodic row, written into dst. The
// interior runs wrap-free; only the four edge columns take the modulo path.
void dphi_row(const double* row, double* dst, int np, double inv_12h) {
    for (int k = 2; k < np - 2; ++k) {
        dst[k] = (8.0 * (row[k + 1] - row[k - 1]) - (row[k + 2] - row[k - 2])) *
                 inv_12h;
    }
    for (int k : {0, 1, np - 2, np - 1}) {
        const int km1 = wrap(k - 1, np), kp1 = wrap(k + 1, np);
        const int km2 = wrap(k - 2, np), kp2 = wrap(k + 2, np);
        dst[k] = (8.0 * (row[kp1] - row[km1]) - (row[kp2] - row[km2])) * inv_12h;
    }
}

// Stencil helpers. Differences are taken against the center value first so a
// constant field yields exactly zero.
inline double d1(double m2, double m1, double p1, double p2, double inv_12h) {
    return (8.0 * (p1 - m1) - (p2 - m2)) * inv_12h;
}

inline double d2(double m2, double m1, double c, double p1, double p2,
                 double inv_12h2) {
    return (16.0 * ((m1 - c) + (p1 - c)) - ((m2 - c) + (p2 - c))) * inv_12h2;
}

}  // namespace

// ---------------------------------------------------------------------------
// SupportField
// ---------------------------------------------------------------------------

SupportField SupportField::constant(std::shared_ptr<const SphereGrid> grid,
                                    double value) {
    SupportField f;
    f.values.assign(grid->node_count(), value);
    f.grid = std::move(grid);
    return f;
}

double SupportField::min_value() const {
    return *std::min_element(values.begin(), values.end());
}

double SupportField::max_value() const {
    return *std::max_element(values.begin(), values.end());
}

double SupportField::mean_value() const {
    const auto w = grid->quad_weights();
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) acc += w[i] * values[i];
    return acc / grid->measure();
}

double RadiiField::min_eigenvalue() const {
    return *std::min_element(lam_lo.begin(), lam_lo.end());
}

double RadiiField::max_eigenvalue() const {
    return *std::max_element(lam_hi.begin(), lam_hi.end());
}

// ---------------------------------------------------------------------------
// Gradient
// ---------------------------------------------------------------------------

void covariant_gradient_into(const SphereGrid& g, std::span<const double> u,
                             DiffWorkspace& ws, GradientField& out) {
    out.dim = g.dim();
    const int n = g.node_count();
    out.comp_theta.resize(n);

    if (g.dim() == 1) {
        out.comp_phi.clear();
        const double inv_2h = 1.0 / (2.0 * g.d_theta());
        const int N = n;
        for (int i = 0; i < N; ++i) {
            out.comp_theta[i] =
                (u[wrap(i + 1, N)] - u[wrap(i - 1, N)]) * inv_2h;
        }
        return;
    }

    out.comp_phi.resize(n);
    build_extended(g, u, ws.ext);
    const int nt = g.n_theta();
    const int np = g.n_phi();
    const double inv_12dt = 1.0 / (12.0 * g.d_theta());
    const double inv_12dp = 1.0 / (12.0 * g.d_phi());

    for (int j = 0; j < nt; ++j) {
        const double* rm2 = ws.ext.data() + static_cast<std::size_t>(j) * np;
        const double* rm1 = rm2 + np;
        const double* rc = rm1 + np;
        const double* rp1 = rc + np;
        const double* rp2 = rp1 + np;
        const double inv_sin = g.inv_sin(j);
        double* gt = out.comp_theta.data() + static_cast<std::size_t>(j) * np;
        double* gp = out.comp_phi.data() + static_cast<std::size_t>(j) * np;
        auto node = [&](int k, int km2, int km1, int kp1, int kp2) {
            gt[k] = d1(rm2[k], rm1[k], rp1[k], rp2[k], inv_12dt);
            gp[k] = d1(rc[km2], rc[km1], rc[kp1], rc[kp2], inv_12dp) * inv_sin;
        };
        for (int k = 2; k < np - 2; ++k) node(k, k - 2, k - 1, k + 1, k + 2);
        for (int k : {0, 1, np - 2, np - 1}) {
            node(k, wrap(k - 2, np), wrap(k - 1, np), wrap(k + 1, np),
                 wrap(k + 2, np));
        }
    }
}

GradientField covariant_gradient(const SupportField& u) {
    DiffWorkspace ws;
    GradientField out;
    covariant_gradient_into(*u.grid, u.values, ws, out);
    return out;
}

// ---------------------------------------------------------------------------
// Radii matrix
// ---------------------------------------------------------------------------

void radii_matrix_into(const SphereGrid& g, std::span<const double> u,
                       double time, DiffWorkspace& ws, RadiiField& out) {
    out.dim = g.dim();
    const int n = g.node_count();
    out.b11.resize(n);
    out.lam_lo.resize(n);
    out.lam_hi.resize(n);

    if (g.dim() == 1) {
        out.b12.clear();
        out.b22.clear();
        const int N = n;
        const double inv_h2 = 1.0 / (g.d_theta() * g.d_theta());
        bool finite = true;
        for (int i = 0; i < N; ++i) {
            const double c = u[i];
            const double upp =
                ((u[wrap(i + 1, N)] - c) + (u[wrap(i - 1, N)] - c)) * inv_h2;
            const double b = upp + c;
            out.b11[i] = b;
            out.lam_lo[i] = b;
            out.lam_hi[i] = b;
            finite = finite && std::isfinite(b);
        }
        if (!finite) {
            throw NumericalBlowup("non-finite radii matrix entry", time);
        }
        return;
    }

    out.b12.resize(n);
    out.b22.resize(n);
    build_extended(g, u, ws.ext);

    const int nt = g.n_theta();
    const int np = g.n_phi();
    const double dt = g.d_theta();
    const double dp = g.d_phi();
    const double inv_12dt = 1.0 / (12.0 * dt);
    const double inv_12dt2 = 1.0 / (12.0 * dt * dt);
    const double inv_12dp = 1.0 / (12.0 * dp);
    const double inv_12dp2 = 1.0 / (12.0 * dp * dp);

    // d_phi on every extended row (ghosts included) so the cross derivative
    // can take a theta-stencil of it across the poles.
    ws.dphi.resize(ws.ext.size());
    for (int e = 0; e < nt + 4; ++e) {
        dphi_row(ws.ext.data() + static_cast<std::size_t>(e) * np,
                 ws.dphi.data() + static_cast<std::size_t>(e) * np, np, inv_12dp);
    }

    bool finite = true;
    for (int j = 0; j < nt; ++j) {
        const std::size_t base = static_cast<std::size_t>(j) * np;
        const double* rm2 = ws.ext.data() + base;
        const double* rm1 = rm2 + np;
        const double* rc = rm1 + np;
        const double* rp1 = rc + np;
        const double* rp2 = rp1 + np;
        const double* qm2 = ws.dphi.data() + base;
        const double* qm1 = qm2 + np;
        const double* qc = qm1 + np;
        const double* qp1 = qc + np;
        const double* qp2 = qp1 + np;

        const double inv_sin = g.inv_sin(j);
        const double cot = g.cot(j);
        const double inv_sin2 = inv_sin * inv_sin;

        double* b11 = out.b11.data() + base;
        double* b12 = out.b12.data() + base;
        double* b22 = out.b22.data() + base;
        double* lo = out.lam_lo.data() + base;
        double* hi = out.lam_hi.data() + base;

        auto node = [&](int k, int km2, int km1, int kp1, int kp2) {
            const double c = rc[k];
            const double utt = d2(rm2[k], rm1[k], c, rp1[k], rp2[k], inv_12dt2);
            const double ut = d1(rm2[k], rm1[k], rp1[k], rp2[k], inv_12dt);
            const double upp =
                d2(rc[km2], rc[km1], c, rc[kp1], rc[kp2], inv_12dp2);
            const double up = qc[k];
            const double utp = d1(qm2[k], qm1[k], qp1[k], qp2[k], inv_12dt);

            const double a11 = utt + c;
            const double a12 = (utp - cot * up) * inv_sin;
            const double a22 = upp * inv_sin2 + cot * ut + c;

            b11[k] = a11;
            b12[k] = a12;
            b22[k] = a22;

            const double mean = 0.5 * (a11 + a22);
            const double diff = 0.5 * (a11 - a22);
            const double disc = std::sqrt(diff * diff + a12 * a12);
            lo[k] = mean - disc;
            hi[k] = mean + disc;
            finite = finite && std::isfinite(a11) && std::isfinite(a12) &&
                     std::isfinite(a22);
        };
        for (int k = 2; k < np - 2; ++k) node(k, k - 2, k - 1, k + 1, k + 2);
        for (int k : {0, 1, np - 2, np - 1}) {
            node(k, wrap(k - 2, np), wrap(k - 1, np), wrap(k + 1, np),
                 wrap(k + 2, np));
        }
    }
    if (!finite) {
        throw NumericalBlowup("non-finite radii matrix entry", time);
    }
}

RadiiField radii_matrix(const SupportField& u) {
    DiffWorkspace ws;
    RadiiField out;
    radii_matrix_into(*u.grid, u.values, u.time, ws, out);
    return out;
}

// ---------------------------------------------------------------------------
// Speed field
// ---------------------------------------------------------------------------

std::vector<double> speed_field(const SupportField& u, const CurvatureSpec& spec,
                                double alpha, double beta) {
    const auto kernel = CurvatureKernel::compile(spec);
    const int n = u.grid->node_count();
    for (int i = 0; i < n; ++i) {
        if (!(u.values[i] > 0.0)) {
            throw NonPositiveSupport("support function reached zero", u.time);
        }
    }
    const auto radii = radii_matrix(u);
    std::vector<double> speed(n);
    for (int i = 0; i < n; ++i) {
        if (!(radii.lam_lo[i] > kConvexityEps)) {
            throw ConvexityLost("smallest curvature radius reached zero", u.time);
        }
        const double F = (u.grid->dim() == 1)
                             ? kernel.value(radii.lam_lo[i])
                             : kernel.value(radii.lam_lo[i], radii.lam_hi[i]);
        speed[i] = powr(u.values[i], alpha) * powr(F, beta);
    }
    return speed;
}

// ---------------------------------------------------------------------------
// Embedding
// ---------------------------------------------------------------------------

std::vector<std::array<double, 3>> embed(const SupportField& u) {
    const auto grad = covariant_gradient(u);
    const auto& g = *u.grid;
    const int n = g.node_count();
    std::vector<std::array<double, 3>> pts(n);

    if (g.dim() == 1) {
        for (int i = 0; i < n; ++i) {
            const double th = g.theta_row(i);
            const double ct = std::cos(th), st = std::sin(th);
            const double uu = u.values[i], du = grad.comp_theta[i];
            pts[i] = {uu * ct - du * st, uu * st + du * ct, 0.0};
        }
        return pts;
    }

    for (int j = 0; j < g.n_theta(); ++j) {
        const double st = g.sin_theta(j), ct = g.cos_theta(j);
        for (int k = 0; k < g.n_phi(); ++k) {
            const int i = g.index(j, k);
            const double cp = std::cos(g.phi_col(k)), sp = std::sin(g.phi_col(k));
            const double uu = u.values[i];
            const double gt = grad.comp_theta[i], gp = grad.comp_phi[i];
            // x, e_theta, e_phi in ambient coordinates
            pts[i] = {uu * st * cp + gt * ct * cp - gp * sp,
                      uu * st * sp + gt * ct * sp + gp * cp,
                      uu * ct - gt * st};
        }
    }
    return pts;
}

// ---------------------------------------------------------------------------
// Initial data
// ---------------------------------------------------------------------------

namespace {

// associated Legendre P_l^m without the Condon-Shortley factor
double legendre_plm(int l, int m, double x) {
    double pmm = 1.0;
    if (m > 0) {
        const double s = std::sqrt(std::max(0.0, 1.0 - x * x));
        double fact = 1.0;
        for (int i = 0; i < m; ++i) {
            pmm *= fact * s;
            fact += 2.0;
        }
    }
    if (l == m) return pmm;
    double pmm1 = x * (2.0 * m + 1.0) * pmm;
    if (l == m + 1) return pmm1;
    double pll = 0.0;
    for (int ll = m + 2; ll <= l; ++ll) {
        pll = (x * (2.0 * ll - 1.0) * pmm1 - (ll + m - 1.0) * pmm) / (ll - m);
        pmm = pmm1;
        pmm1 = pll;
    }
    return pll;
}

double legendre_plm_max(int l, int m) {
    double best = 0.0;
    const int samples = 4096;
    for (int i = 0; i <= samples; ++i) {
        const double x = -1.0 + 2.0 * i / samples;
        best = std::max(best, std::abs(legendre_plm(l, m, x)));
    }
    return best;
}

}  // namespace

SupportField make_initial(const InitialData& init,
                          std::shared_ptr<const SphereGrid> grid) {
    const int n = grid->node_count();
    const int dim = grid->dim();
    SupportField f;
    f.grid = grid;
    f.values.resize(n);

    switch (init.kind) {
        case InitialData::Kind::sphere: {
            if (!(init.radius > 0.0)) throw RangeError("sphere radius must be > 0");
            std::fill(f.values.begin(), f.values.end(), init.radius);
            break;
        }
        case InitialData::Kind::ellipsoid: {
            if (static_cast<int>(init.semi_axes.size()) != dim + 1) {
                throw RangeError("ellipsoid needs " + std::to_string(dim + 1) +
                                 " semi-axes");
            }
            for (double a : init.semi_axes) {
                if (!(a > 0.0)) throw RangeError("semi-axes must be > 0");
            }
            // support of an axis-aligned ellipsoid: u(x) = sqrt(sum a_i^2 x_i^2)
            for (int i = 0; i < n; ++i) {
                const double th = grid->node_theta(i);
                double x1, x2, x3 = 0.0;
                if (dim == 1) {
                    x1 = std::cos(th);
                    x2 = std::sin(th);
                } else {
                    const double ph = grid->node_phi(i);
                    x1 = std::sin(th) * std::cos(ph);
                    x2 = std::sin(th) * std::sin(ph);
                    x3 = std::cos(th);
                }
                const double a = init.semi_axes[0] * x1;
                const double b = init.semi_axes[1] * x2;
                const double c = (dim == 2) ? init.semi_axes[2] * x3 : 0.0;
                f.values[i] = std::sqrt(a * a + b * b + c * c);
            }
            break;
        }
        case InitialData::Kind::perturbed_sphere: {
            if (!(init.radius > 0.0)) throw RangeError("sphere radius must be > 0");
            if (init.modes.empty()) {
                throw RangeError("perturbed sphere needs at least one mode");
            }
            SplitMix64 rng(init.seed);
            std::fill(f.values.begin(), f.values.end(), 1.0);
            for (const auto& mode : init.modes) {
                const double phase = rng.uniform(0.0, 2.0 * kPi);
                if (dim == 1) {
                    if (mode.degree < 1) throw RangeError("Fourier mode must be >= 1");
                    for (int i = 0; i < n; ++i) {
                        f.values[i] += mode.amplitude *
                                       std::cos(mode.degree * grid->theta_row(i) +
                                                phase);
                    }
                } else {
                    const int l = mode.degree, m = mode.order;
                    if (l < 1 || m < 0 || m > l) {
                        throw RangeError("spherical mode needs l >= 1, 0 <= m <= l");
                    }
                    const double norm = 1.0 / legendre_plm_max(l, m);
                    for (int j = 0; j < grid->n_theta(); ++j) {
                        const double plm =
                            norm * legendre_plm(l, m, grid->cos_theta(j));
                        for (int k = 0; k < grid->n_phi(); ++k) {
                            const double az =
                                (m == 0) ? 1.0
                                         : std::cos(m * grid->phi_col(k) + phase);
                            f.values[grid->index(j, k)] +=
                                mode.amplitude * plm * az;
                        }
                    }
                }
            }
            for (auto& v : f.values) v *= init.radius;
            break;
        }
    }

    check_convexity_certificate(f);
    return f;
}

void check_convexity_certificate(const SupportField& u) {
    const double u_max = u.max_value();
    if (!(u.min_value() > 0.0)) {
        throw NotConvex("support function must be strictly positive");
    }
    const auto radii = radii_matrix(u);
    const double floor = 1e-10 * std::max(1.0, u_max);
    const double lam_min = radii.min_eigenvalue();
    if (!(lam_min > floor)) {
        throw NotConvex("convexity certificate failed: lambda_min = " +
                        std::to_string(lam_min));
    }
}

// ---------------------------------------------------------------------------
// Longitudinal low-pass
// ---------------------------------------------------------------------------

void apply_longitudinal_lowpass(SupportField& u, const PolarFilterConfig& filter,
                                LowpassWorkspace& ws) {
    const auto& g = *u.grid;
    if (!filter.enabled || g.dim() == 1) return;

    const int np = g.n_phi();
    const int nyquist = np / 2;
    // rows whose raw azimuthal spacing already meets the filtered time-step
    // bound have nothing to gain from truncation; leave them alone
    const double h_eff = g.effective_min_spacing(filter);
    if (ws.n_phi != np) {
        ws.n_phi = np;
        ws.cos_tab.resize(np);
        ws.sin_tab.resize(np);
        for (int i = 0; i < np; ++i) {
            ws.cos_tab[i] = std::cos(2.0 * kPi * i / np);
            ws.sin_tab[i] = std::sin(2.0 * kPi * i / np);
        }
        ws.coef_a.resize(nyquist + 1);
        ws.coef_b.resize(nyquist + 1);
        ws.row.resize(np);
    }

    for (int j = 0; j < g.n_theta(); ++j) {
        const int mc = g.mode_cap(j, filter);
        if (mc >= nyquist || g.sin_theta(j) * g.d_phi() >= h_eff) continue;

        double* row = u.values.data() + static_cast<std::size_t>(j) * np;
        double mean = 0.0;
        for (int k = 0; k < np; ++k) mean += row[k];
        mean /= np;

        // analyze modes 1..mc; table index (m*k) mod np is exact
        for (int m = 1; m <= mc; ++m) {
            double a = 0.0, b = 0.0;
            int idx = 0;
            for (int k = 0; k < np; ++k) {
                a += row[k] * ws.cos_tab[idx];
                b += row[k] * ws.sin_tab[idx];
                idx += m;
                if (idx >= np) idx -= np;
            }
            ws.coef_a[m] = 2.0 * a / np;
            ws.coef_b[m] = 2.0 * b / np;
        }

        std::fill(ws.row.begin(), ws.row.end(), mean);
        for (int m = 1; m <= mc; ++m) {
            const double am = ws.coef_a[m], bm = ws.coef_b[m];
            int idx = 0;
            for (int k = 0; k < np; ++k) {
                ws.row[k] += am * ws.cos_tab[idx] + bm * ws.sin_tab[idx];
                idx += m;
                if (idx >= np) idx -= np;
            }
        }
        std::copy(ws.row.begin(), ws.row.end(), row);
    }
}

void apply_longitudinal_lowpass(SupportField& u, const PolarFilterConfig& filter) {
    LowpassWorkspace ws;
    apply_longitudinal_lowpass(u, filter, ws);
}

}  // namespace curveflow

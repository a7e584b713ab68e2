#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <vector>

#include "errors.hpp"
#include "model.hpp"
#include "spectral.hpp"
#include "units.hpp"
#include "wire_solution.hpp"

// Mould compound temperature, assembled from four series components:
//
//   T_m(x, y, z, t) = T0 + chip_part(x, y, z)          steady, chip plane data
//                        + die_part(x, y, z)           steady, die plane data
//                        + transient_part(x, y, z, t)  relaxation of the IC
//                        + source_part(x, y, z, t)     wire line source
//
// Geometry: x in [-W/2, W/2] (Robin side walls), y in [0, L] (chip face
// Dirichlet at y = 0, insulated at y = L), z in [-H/2, H/2] (die plane
// Dirichlet at z = -H/2, Robin top). Internally u = z + H/2.
//
// Eigenfunctions: cos(lx x) with lx tan roots, sin(lz u) with lz cot roots,
// sin(ly y) with ly = (2m+1)pi/(2L). The steady parts use per-mode decay
// shapes that satisfy the remaining homogeneous conditions exactly:
//
//   chip: cosh(l (L - y))/cosh(l L),  l^2 = lx^2 + lz^2   (Neumann at y = L)
//   die:  [k l cosh(l (H-u)) + h sinh(l (H-u))]
//        /[k l cosh(l H)     + h sinh(l H)],  l^2 = lx^2 + ly^2 (Robin at u = H)
//
// both evaluated in overflow-free exponential form and normalised so the
// driven trace is exact. The transient tensor cancels the steady parts at
// t = 0 (ambient start) through the closed-form projections
//
//   int_0^L cosh(l(L-y))/cosh(lL) sin(ly y) dy = ly/(l^2 + ly^2)
//   int_0^H Zbar(u) sin(lz u) du               = lz/(l^2 + lz^2).
//
// The heat kernel is the impulse response to a unit point deposition at
// (0, y_src, 0): mode products over the Sturm-Liouville norms times the
// exponential decay, divided by rho_m c_m. The wire line source
// q(y', tau) = eps sigma chi C_w theta_w(y', tau) is convolved against it
// per mode in closed form, using the wire series' exponential structure.

namespace bondheat {

// int_0^t exp(-a (t - s)) exp(-b s) ds, stable near a = b and free of
// overflow for large a t or b t.
inline double exp_convolution(double a, double b, double t) {
    const double d = a - b;
    const double z = d * t;
    if (std::abs(z) < 1e-8) {
        return t * std::exp(-a * t) * (1.0 + 0.5 * z + z * z / 6.0);
    }
    if (z > 0.0) {
        return -std::exp(-b * t) * std::expm1(-z) / d;
    }
    return std::exp(-a * t) * std::expm1(z) / d;
}

// Same integrand with precomputed ea = exp(-a t), eb = exp(-b t); avoids
// re-exponentiating inside mode loops.
inline double exp_pair_convolution(double a, double b, double t, double ea, double eb) {
    const double d = a - b;
    if (std::abs(d) * t < 1e-4) {
        const double z = d * t;
        return t * ea * (1.0 + 0.5 * z + z * z / 6.0);
    }
    return (eb - ea) / d;
}

// int_0^tp int_0^t exp(-a (t - s)) exp(-b s) ds dt for a > 0, b >= 0.
inline double exp_convolution_time_integral(double a, double b, double tp) {
    auto em = [](double x) { return -std::expm1(-x); };
    if (b == 0.0) {
        return (tp - em(a * tp) / a) / a;
    }
    const double d = a - b;
    if (std::abs(d) <= 1e-6 * std::max(a, b)) {
        const double am = 0.5 * (a + b);
        return (em(am * tp) - am * tp * std::exp(-am * tp)) / (am * am);
    }
    return (em(b * tp) / b - em(a * tp) / a) / d;
}

namespace detail {

// cosh(l (L - y))/cosh(l L) without overflow; exact 1 at y = 0, zero slope
// at y = L.
inline double pinned_decay(double l, double L, double y) {
    return std::exp(-l * y) * (1.0 + std::exp(-2.0 * l * (L - y))) /
           (1.0 + std::exp(-2.0 * l * L));
}

// [k l cosh(l (H - u)) + h sinh(l (H - u))]/[k l cosh(l H) + h sinh(l H)],
// the die-plane decay shape with exact Robin top. Pole-free for all modes,
// unlike the textbook growing/decaying pair whose coefficient ratio blows
// up when k l = h.
inline double robin_decay(double l, double H, double u, double kappa, double h) {
    const double a = l * (H - u);
    const double b = l * H;
    const double num = kappa * l * (1.0 + std::exp(-2.0 * a)) + h * (1.0 - std::exp(-2.0 * a));
    const double den = kappa * l * (1.0 + std::exp(-2.0 * b)) + h * (1.0 - std::exp(-2.0 * b));
    return std::exp(a - b) * num / den;
}

}  // namespace detail

enum class CompoundInitial {
    ambient,  // uniform zero rise at t = 0 (default)
    steady,   // start on the steady parts (transient tensor all zero)
};

struct CompoundSolveOptions {
    spectral::TruncationCounts counts{};  // transient tensor and kernel truncation
    int steady_nx = 128;                  // steady parts: shared x modes
    int steady_ny = 192;                  // die part y modes
    int steady_nz = 192;                  // chip part z modes
    CompoundInitial initial = CompoundInitial::ambient;
    // The source convolution in the interface balance sees the line-source
    // kernel at the wire surface, where the transverse sums resolve a log
    // singularity a radius away. Field-evaluation counts leave a cold bias
    // there, so the balance gets its own, higher truncation; 128 x 96
    // transverse modes put the integral within 0.01% of a 144 x 108 run.
    spectral::TruncationCounts interface_counts{128, 45, 96, 60};
    // multiplier on the wire-surface offset where the interface limit is
    // taken; exposed because the offset choice is a modelling decision
    double interface_offset_scale = 1.0;

    void validate() const {
        counts.validate();
        interface_counts.validate();
        if (steady_nx < counts.nx || steady_ny < counts.ny || steady_nz < counts.nz) {
            throw ValidationError("steady truncation counts must dominate the transient counts");
        }
        if (steady_nx < interface_counts.nx || steady_ny < interface_counts.ny ||
            steady_nz < interface_counts.nz) {
            throw ValidationError("steady truncation counts must dominate the interface counts");
        }
        if (!(interface_offset_scale > 0.0)) {
            throw ValidationError("interface_offset_scale must be positive");
        }
    }
};

struct CompoundSolution {
    WireSpec wire;
    CompoundSpec mold;
    CompoundSolveOptions opts;

    double chip_rise = 0.0;   // K
    double die_rise = 0.0;    // K
    double t_ambient = 0.0;   // K
    double h_conv = 0.0;      // W/(m^2 K)
    double alpha = 0.0;       // kappa_m/(rho_m c_m), m^2/s
    double rho_c = 0.0;       // rho_m c_m

    spectral::SpectralBasis basis;  // sized by the steady counts (nk = wire modes)

    // unit-rise projection coefficients per direction
    std::vector<double> cx;  // steady_nx
    std::vector<double> cy;  // steady_ny
    std::vector<double> cz;  // steady_nz

    // transient cancellation tensor over the window counts, [n][m][p]
    std::vector<double> ct;

    double length() const { return wire.length; }

    int ct_index(int n, int m, int p) const {
        return (n * opts.counts.ny + m) * opts.counts.nz + p;
    }

    // ---- steady components (temperature rises, K) --------------------------

    double chip_part(double x, double y, double z) const {
        if (chip_rise == 0.0) return 0.0;
        const double u = z + 0.5 * mold.height;
        const double L = length();
        double acc = 0.0;
        for (int n = 0; n < opts.steady_nx; ++n) {
            const double xf = cx[n] * std::cos(basis.lambda_x[n] * x);
            for (int p = 0; p < opts.steady_nz; ++p) {
                const double lam = std::sqrt(basis.combined.y_np_sq(n, p));
                const double yf = detail::pinned_decay(lam, L, y);
                if (yf < 1e-18) break;  // lam grows with p, deeper modes vanish
                acc += xf * cz[p] * std::sin(basis.lambda_z[p] * u) * yf;
            }
        }
        return chip_rise * acc;
    }

    double die_part(double x, double y, double z) const {
        if (die_rise == 0.0) return 0.0;
        const double u = z + 0.5 * mold.height;
        const double H = mold.height;
        double acc = 0.0;
        for (int n = 0; n < opts.steady_nx; ++n) {
            const double xf = cx[n] * std::cos(basis.lambda_x[n] * x);
            for (int m = 0; m < opts.steady_ny; ++m) {
                const double lam = std::sqrt(basis.combined.z_nm_sq(n, m));
                const double zf = detail::robin_decay(lam, H, u, mold.kappa, h_conv);
                if (zf < 1e-18) break;
                acc += xf * cy[m] * std::sin(basis.lambda_y_m[m] * y) * zf;
            }
        }
        return die_rise * acc;
    }

    double transient_part(double x, double y, double z, double t) const {
        const double u = z + 0.5 * mold.height;
        const int tnx = opts.counts.nx, tny = opts.counts.ny, tnz = opts.counts.nz;
        double acc = 0.0;
        for (int n = 0; n < tnx; ++n) {
            const double exn = std::exp(-alpha * basis.lambda_x[n] * basis.lambda_x[n] * t);
            if (exn < 1e-18) break;
            const double xf = std::cos(basis.lambda_x[n] * x) * exn;
            for (int m = 0; m < tny; ++m) {
                const double eym = std::exp(-alpha * basis.lambda_y_m[m] * basis.lambda_y_m[m] * t);
                if (exn * eym < 1e-18) break;
                const double yf = std::sin(basis.lambda_y_m[m] * y) * eym;
                for (int p = 0; p < tnz; ++p) {
                    const double ezp =
                        std::exp(-alpha * basis.lambda_z[p] * basis.lambda_z[p] * t);
                    if (exn * eym * ezp < 1e-18) break;
                    acc += ct[ct_index(n, m, p)] * xf * yf * std::sin(basis.lambda_z[p] * u) * ezp;
                }
            }
        }
        return acc;
    }

    // ---- heat kernel -------------------------------------------------------

    // Impulse response at (x, y, z) to a unit energy deposition at
    // (0, y_src, 0) a time t earlier. K per joule; factorises into three
    // one-dimensional mode sums.
    double kernel(double x, double y, double z, double t, double y_src) const {
        const double u = z + 0.5 * mold.height;
        const double um = 0.5 * mold.height;  // source height
        double sx = 0.0, sy = 0.0, su = 0.0;
        for (int n = 0; n < opts.counts.nx; ++n) {
            const double l = basis.lambda_x[n];
            const double e = std::exp(-alpha * l * l * t);
            if (e < 1e-18) break;
            sx += std::cos(l * x) / (2.0 * basis.norm_x_half[n]) * e;
        }
        for (int m = 0; m < opts.counts.ny; ++m) {
            const double l = basis.lambda_y_m[m];
            const double e = std::exp(-alpha * l * l * t);
            if (e < 1e-18) break;
            sy += std::sin(l * y) * std::sin(l * y_src) / basis.norm_y() * e;
        }
        for (int p = 0; p < opts.counts.nz; ++p) {
            const double l = basis.lambda_z[p];
            const double e = std::exp(-alpha * l * l * t);
            if (e < 1e-18) break;
            su += std::sin(l * u) * std::sin(l * um) / basis.norm_z[p] * e;
        }
        return sx * sy * su / rho_c;
    }

    // ---- wire source convolution -------------------------------------------

    // int_0^t int_0^L G(x,y,z,t-tau,y') eps sigma chi C_w theta_w(y',tau)
    // dy' dtau, per-mode closed form. Linear in chi for a fixed wire series.
    double source_part(double x, double y, double z, double t, const WireSolution& ws,
                       const CouplingState& state) const {
        if (state.chi == 0.0 || t <= 0.0) return 0.0;
        const double u = z + 0.5 * mold.height;
        const double um = 0.5 * mold.height;
        const double pref =
            wire.emissivity * PhysicalConstants::sigma * state.chi * wire.perimeter();
        const int tnx = opts.counts.nx, tny = opts.counts.ny, tnz = opts.counts.nz;
        const int nk = static_cast<int>(ws.ct.size());

        // per-direction decay factors at this t
        std::vector<double> exn(tnx), eym(tny), ezp(tnz);
        for (int n = 0; n < tnx; ++n)
            exn[n] = std::exp(-alpha * basis.lambda_x[n] * basis.lambda_x[n] * t);
        for (int m = 0; m < tny; ++m)
            eym[m] = std::exp(-alpha * basis.lambda_y_m[m] * basis.lambda_y_m[m] * t);
        for (int p = 0; p < tnz; ++p)
            ezp[p] = std::exp(-alpha * basis.lambda_z[p] * basis.lambda_z[p] * t);

        // wire-side projections onto the compound y-modes
        std::vector<double> eb(nk), steady_proj(tny), mode_proj(static_cast<size_t>(tny) * nk);
        for (int k = 0; k < nk; ++k) eb[k] = std::exp(-ws.beta[k] * t);
        for (int m = 0; m < tny; ++m) {
            const double ly = basis.lambda_y_m[m];
            steady_proj[m] = ws.steady_quarter_sin_integral(ly, m);
            for (int k = 0; k < nk; ++k) {
                mode_proj[static_cast<size_t>(m) * nk + k] =
                    ws.transient_quarter_sin_integral(k, ly, m);
            }
        }

        double acc = 0.0;
        for (int n = 0; n < tnx; ++n) {
            const double ax = alpha * basis.lambda_x[n] * basis.lambda_x[n];
            const double xf = std::cos(basis.lambda_x[n] * x) / (2.0 * basis.norm_x_half[n]);
            for (int m = 0; m < tny; ++m) {
                const double axy = ax + alpha * basis.lambda_y_m[m] * basis.lambda_y_m[m];
                const double yf = std::sin(basis.lambda_y_m[m] * y) / basis.norm_y();
                const double exy = exn[n] * eym[m];
                for (int p = 0; p < tnz; ++p) {
                    const double lz = basis.lambda_z[p];
                    const double a = axy + alpha * lz * lz;
                    const double ea = exy * ezp[p];
                    const double zf = std::sin(lz * u) * std::sin(lz * um) / basis.norm_z[p];
                    double term = steady_proj[m] * exp_pair_convolution(a, 0.0, t, ea, 1.0);
                    const double* proj = &mode_proj[static_cast<size_t>(m) * nk];
                    for (int k = 0; k < nk; ++k) {
                        term += ws.ct[k] * proj[k] * exp_pair_convolution(a, ws.beta[k], t, ea, eb[k]);
                    }
                    acc += xf * yf * zf * term;
                }
            }
        }
        return pref * acc / rho_c;
    }

    // ---- assembly ------------------------------------------------------------

    // Absolute temperature, K. Domain-checked.
    double temperature(double x, double y, double z, double t, const WireSolution& ws,
                       const CouplingState& state) const {
        const double W = mold.width, H = mold.height, L = length();
        const double sx = 1.0 + 1e-12;
        if (std::abs(x) > 0.5 * W * sx || std::abs(z) > 0.5 * H * sx || y < -L * 1e-12 ||
            y > L * sx || t < 0.0) {
            throw OutOfDomain("compound evaluation point outside the block or t < 0");
        }
        return t_ambient + chip_part(x, y, z) + die_part(x, y, z) + transient_part(x, y, z, t) +
               source_part(x, y, z, t, ws, state);
    }

    // ---- interface line integrals used by the coupling ----------------------
    //
    // The interface limit is taken at the wire surface, offset from the axis
    // by (x, z) = (r_w/sqrt2, r_w/sqrt2): the line-source kernel diverges
    // logarithmically on the axis itself as the truncation grows.

    double interface_x() const {
        return opts.interface_offset_scale * wire.diameter / (2.0 * std::sqrt(2.0));
    }

    // int_0^tp int_0^L of the boundary-driven rises along the wire line.
    double boundary_interface_integral(double tp) const {
        const double L = length();
        const double uo = interface_x() + 0.5 * mold.height;
        const double xo = interface_x();
        double acc = 0.0;
        for (int n = 0; n < opts.steady_nx; ++n) {
            const double cxo = std::cos(basis.lambda_x[n] * xo);
            for (int p = 0; p < opts.steady_nz; ++p) {
                const double lam = std::sqrt(basis.combined.y_np_sq(n, p));
                acc += chip_rise * cx[n] * cz[p] * cxo * std::sin(basis.lambda_z[p] * uo) *
                       std::tanh(lam * L) / lam;
            }
        }
        for (int n = 0; n < opts.steady_nx; ++n) {
            const double cxo = std::cos(basis.lambda_x[n] * xo);
            for (int m = 0; m < opts.steady_ny; ++m) {
                const double lam = std::sqrt(basis.combined.z_nm_sq(n, m));
                acc += die_rise * cx[n] * cy[m] * cxo *
                       detail::robin_decay(lam, mold.height, uo, mold.kappa, h_conv) /
                       basis.lambda_y_m[m];
            }
        }
        acc *= tp;
        const int tnx = opts.counts.nx, tny = opts.counts.ny, tnz = opts.counts.nz;
        for (int n = 0; n < tnx; ++n) {
            const double ax = alpha * basis.lambda_x[n] * basis.lambda_x[n];
            const double cxo = std::cos(basis.lambda_x[n] * xo);
            for (int m = 0; m < tny; ++m) {
                const double axy = ax + alpha * basis.lambda_y_m[m] * basis.lambda_y_m[m];
                const double yi = 1.0 / basis.lambda_y_m[m];
                for (int p = 0; p < tnz; ++p) {
                    const double a = axy + alpha * basis.lambda_z[p] * basis.lambda_z[p];
                    acc += ct[ct_index(n, m, p)] * cxo * std::sin(basis.lambda_z[p] * uo) * yi *
                           (-std::expm1(-a * tp)) / a;
                }
            }
        }
        return acc;
    }

    // Same double integral for the wire-source convolution. The quadruple sum
    // runs at the interface counts; the time integrals are hoisted through
    // J(a, b) = (E(b) - E(a))/(a - b), E(x) = -expm1(-x tp)/x, E(0) = tp, so
    // the innermost wire-mode loop touches no exponentials.
    double source_interface_integral(double tp, const WireSolution& ws,
                                     const CouplingState& state) const {
        if (state.chi == 0.0) return 0.0;
        const double um = 0.5 * mold.height;
        const double uo = interface_x() + um;
        const double xo = interface_x();
        const double pref =
            wire.emissivity * PhysicalConstants::sigma * state.chi * wire.perimeter();
        const int inx = opts.interface_counts.nx, iny = opts.interface_counts.ny,
                  inz = opts.interface_counts.nz;
        const int nk = std::min(opts.interface_counts.nk, static_cast<int>(ws.ct.size()));

        std::vector<double> steady_proj(iny), mode_proj(static_cast<size_t>(iny) * nk);
        for (int m = 0; m < iny; ++m) {
            const double ly = basis.lambda_y_m[m];
            steady_proj[m] = ws.steady_quarter_sin_integral(ly, m);
            for (int k = 0; k < nk; ++k) {
                mode_proj[static_cast<size_t>(m) * nk + k] =
                    ws.transient_quarter_sin_integral(k, ly, m);
            }
        }
        std::vector<double> eb(nk), ckt(nk);
        for (int k = 0; k < nk; ++k) {
            eb[k] = -std::expm1(-ws.beta[k] * tp) / ws.beta[k];
            ckt[k] = ws.ct[k];
        }

        double acc = 0.0;
        for (int n = 0; n < inx; ++n) {
            const double ax = alpha * basis.lambda_x[n] * basis.lambda_x[n];
            const double xf = std::cos(basis.lambda_x[n] * xo) / (2.0 * basis.norm_x_half[n]);
            for (int m = 0; m < iny; ++m) {
                const double axy = ax + alpha * basis.lambda_y_m[m] * basis.lambda_y_m[m];
                const double yf = 1.0 / (basis.lambda_y_m[m] * basis.norm_y());
                const double* proj = &mode_proj[static_cast<size_t>(m) * nk];
                for (int p = 0; p < inz; ++p) {
                    const double lz = basis.lambda_z[p];
                    const double a = axy + alpha * lz * lz;
                    const double zf = std::sin(lz * uo) * std::sin(lz * um) / basis.norm_z[p];
                    const double ea = -std::expm1(-a * tp) / a;
                    double term = steady_proj[m] * (tp - ea) / a;
                    for (int k = 0; k < nk; ++k) {
                        const double d = a - ws.beta[k];
                        term += std::abs(d) > 1e-6 * a
                                    ? ckt[k] * proj[k] * (eb[k] - ea) / d
                                    : ckt[k] * proj[k] *
                                          exp_convolution_time_integral(a, ws.beta[k], tp);
                    }
                    acc += xf * yf * zf * term;
                }
            }
        }
        return pref * acc / rho_c;
    }
};

inline CompoundSolution solve_compound(const WireSpec& wire, const CompoundSpec& mold,
                                       const BoundarySet& bc,
                                       const CompoundSolveOptions& opts = {}) {
    wire.validate();
    mold.validate();
    bc.validate();
    opts.validate();

    CompoundSolution s;
    s.wire = wire;
    s.mold = mold;
    s.opts = opts;
    s.chip_rise = bc.chip_rise();
    s.die_rise = bc.die_rise();
    s.t_ambient = bc.t_ambient;
    s.h_conv = bc.h_conv;
    s.alpha = mold.diffusivity();
    s.rho_c = mold.volumetric_heat();

    spectral::TruncationCounts full;
    full.nx = opts.steady_nx;
    full.ny = opts.steady_ny;
    full.nz = opts.steady_nz;
    full.nk = opts.counts.nk;
    s.basis = spectral::build_basis(wire, mold, bc, full);

    const double W = mold.width, H = mold.height, L = wire.length;
    s.cx.resize(opts.steady_nx);
    for (int n = 0; n < opts.steady_nx; ++n) {
        const double l = s.basis.lambda_x[n];
        s.cx[n] = std::sin(l * W / 2.0) / (l * s.basis.norm_x_half[n]);
    }
    s.cy.resize(opts.steady_ny);
    for (int m = 0; m < opts.steady_ny; ++m) {
        s.cy[m] = 2.0 / (L * s.basis.lambda_y_m[m]);
    }
    s.cz.resize(opts.steady_nz);
    for (int p = 0; p < opts.steady_nz; ++p) {
        const double l = s.basis.lambda_z[p];
        s.cz[p] = (1.0 - std::cos(l * H)) / (l * s.basis.norm_z[p]);
    }

    const int tnx = opts.counts.nx, tny = opts.counts.ny, tnz = opts.counts.nz;
    s.ct.assign(static_cast<size_t>(tnx) * tny * tnz, 0.0);
    if (opts.initial == CompoundInitial::ambient) {
        for (int n = 0; n < tnx; ++n) {
            for (int m = 0; m < tny; ++m) {
                const double ly = s.basis.lambda_y_m[m];
                const double z_nm_sq = s.basis.combined.z_nm_sq(n, m);
                for (int p = 0; p < tnz; ++p) {
                    const double lz = s.basis.lambda_z[p];
                    const double y_np_sq = s.basis.combined.y_np_sq(n, p);
                    const double py = ly / (y_np_sq + ly * ly);
                    const double pz = lz / (z_nm_sq + lz * lz);
                    s.ct[s.ct_index(n, m, p)] =
                        -(s.chip_rise * s.cx[n] * s.cz[p] * py / s.basis.norm_y() +
                          s.die_rise * s.cx[n] * s.cy[m] * pz / s.basis.norm_z[p]);
                }
            }
        }
    }
    return s;
}

// Volume integral of the heat kernel over the block at time t, by the
// closed-form mode integrals. Counts default high enough to resolve the
// near-delta at small t; the three sums factorise so this stays cheap.
inline double kernel_volume_integral(const CompoundSpec& mold, double h_conv, double wire_length,
                                     double y_src, double t, int nx = 1500, int ny = 1600,
                                     int nz = 1000) {
    mold.validate();
    if (h_conv <= 0.0) throw ValidationError("h_conv must be positive");
    if (y_src < 0.0 || y_src > wire_length) throw ValidationError("y_src outside the wire");
    const double W = mold.width, H = mold.height, L = wire_length;
    const double ratio = h_conv / mold.kappa;
    const double alpha = mold.diffusivity();

    const auto lx = spectral::robin_tan_roots(W, ratio, nx);
    const auto lz = spectral::robin_cot_roots(H, ratio, nz);

    double sx = 0.0;
    for (int n = 0; n < nx; ++n) {
        const double l = lx[n];
        const double e = std::exp(-alpha * l * l * t);
        if (e < 1e-18) break;
        const double norm = W / 4.0 + std::sin(l * W) / (4.0 * l);
        sx += (2.0 * std::sin(l * W / 2.0) / l) / (2.0 * norm) * e;
    }
    double sy = 0.0;
    for (int m = 0; m < ny; ++m) {
        const double l = (2.0 * m + 1.0) * M_PI / (2.0 * L);
        const double e = std::exp(-alpha * l * l * t);
        if (e < 1e-18) break;
        sy += (1.0 / l) * std::sin(l * y_src) / (L / 2.0) * e;
    }
    double su = 0.0;
    for (int p = 0; p < nz; ++p) {
        const double l = lz[p];
        const double e = std::exp(-alpha * l * l * t);
        if (e < 1e-18) break;
        const double norm = H / 2.0 - std::sin(2.0 * l * H) / (4.0 * l);
        su += ((1.0 - std::cos(l * H)) / l) * std::sin(l * H / 2.0) / norm * e;
    }
    return sx * sy * su / mold.volumetric_heat();
}

// Grid dump for external plotting: header x,y,z,t,T then one row per point.
inline void write_compound_grid_csv(std::ostream& os, const CompoundSolution& sol,
                                    const WireSolution& ws, const CouplingState& state,
                                    int nx, int ny, int nz, double t) {
    if (nx < 1 || ny < 1 || nz < 1) throw ValidationError("grid counts must be at least 1");
    if (t < 0.0) throw ValidationError("t must be nonnegative");
    const double W = sol.mold.width, H = sol.mold.height, L = sol.length();
    auto coord = [](double lo, double hi, int i, int count) {
        if (count == 1) return 0.5 * (lo + hi);
        return lo + (hi - lo) * i / (count - 1.0);
    };
    os << "x,y,z,t,T\n";
    for (int i = 0; i < nx; ++i) {
        const double x = coord(-W / 2.0, W / 2.0, i, nx);
        for (int j = 0; j < ny; ++j) {
            const double y = coord(0.0, L, j, ny);
            for (int k = 0; k < nz; ++k) {
                const double z = coord(-H / 2.0, H / 2.0, k, nz);
                os << units::format_double(x) << ',' << units::format_double(y) << ','
                   << units::format_double(z) << ',' << units::format_double(t) << ','
                   << units::format_double(sol.temperature(x, y, z, t, ws, state)) << '\n';
            }
        }
    }
}

}  // namespace bondheat

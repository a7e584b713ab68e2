#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "bondheat/errors.hpp"
#include "bondheat/model.hpp"
#include "bondheat/wire_solution.hpp"

// Finite-difference reference solvers. These are deliberately independent of
// the series machinery: Crank-Nicolson in time, second-order central stencils
// in space, Newton inner iteration for the T^4 term. They exist to validate
// the analytic solution, so they trust the caller and skip the production
// validation (degenerate inputs like eps = 0 are legitimate here).

namespace bondheat::fd {

struct WireGrid {
    int nodes = 201;  // spatial nodes including both ends
    int steps = 200;  // time steps over the pulse

    void validate() const {
        if (nodes < 3) throw ValidationError("WireGrid: need at least 3 nodes");
        if (steps < 200) throw ValidationError("WireGrid: dt must satisfy dt <= t_p/200");
    }
};

struct WireHistory {
    std::vector<double> y;  // node coordinates, m
    std::vector<double> t;  // time levels including t = 0, s
    std::vector<std::vector<double>> rise;  // rise[level][node], K

    double peak() const {
        double m = 0.0;
        for (const auto& row : rise)
            for (double v : row) m = std::max(m, std::abs(v));
        return m;
    }

    // columns: t, y, T
    void write_csv(std::ostream& out) const {
        out << "t,y,T\n";
        for (std::size_t i = 0; i < t.size(); ++i)
            for (std::size_t j = 0; j < y.size(); ++j)
                out << t[i] << ',' << y[j] << ',' << rise[i][j] << '\n';
    }
};

namespace detail {

// In-place Thomas solve of a tridiagonal system (sub, diag, super, rhs).
// diag and rhs are clobbered; the solution lands in rhs.
inline void thomas_solve(const std::vector<double>& sub, std::vector<double>& diag,
                         const std::vector<double>& sup, std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    for (std::size_t i = 1; i < n; ++i) {
        double w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
}

inline std::vector<double> initial_rise(const WireSpec& wire, const BoundarySet& bc,
                                        InitialProfile initial, const std::vector<double>& y,
                                        bool kirchhoff) {
    std::vector<double> u(y.size(), 0.0);
    if (initial == InitialProfile::steady)
        throw ValidationError("fd: steady initial profile is not supported by the oracle");
    if (initial == InitialProfile::linear) {
        const double L = wire.length;
        for (std::size_t i = 0; i < y.size(); ++i) {
            double rise = bc.chip_rise() + (bc.lead_rise() - bc.chip_rise()) * (y[i] / L);
            u[i] = kirchhoff ? kirchhoff_forward(wire, rise) : rise;
        }
    }
    return u;
}

}  // namespace detail

// Crank-Nicolson solve of the linearised, Kirchhoff-transformed equation
//   rho c dtheta/dt = kappa0 theta'' - F theta + (G + H/2)
// with fixed transformed ends. This is exactly the equation the series
// solution claims to solve, so the gap to it is pure truncation error.
inline WireHistory solve_wire_linearised(const WireSpec& wire, const BoundarySet& bc,
                                         const Drive& drive, const CouplingState& state,
                                         const WireGrid& grid,
                                         InitialProfile initial = InitialProfile::linear) {
    grid.validate();
    const int n = grid.nodes;
    const int nt = grid.steps;
    const double L = wire.length;
    const double dx = L / (n - 1);
    const double dt = drive.duration / nt;
    const double rc = wire.volumetric_heat();
    const WireOdeCoefficients ode = ode_coefficients(wire, drive, state);
    const double src = (ode.G + ode.H / 2.0) / rc;
    const double r = wire.kappa0 / rc / (dx * dx);  // diffusion number, 1/s
    const double f = ode.F / rc;

    WireHistory h;
    h.y.resize(n);
    for (int i = 0; i < n; ++i) h.y[i] = i * dx;
    h.t.resize(nt + 1);
    for (int i = 0; i <= nt; ++i) h.t[i] = dt * i;

    std::vector<double> u = detail::initial_rise(wire, bc, initial, h.y, true);
    const double th_ch = kirchhoff_forward(wire, bc.chip_rise());
    const double th_ld = kirchhoff_forward(wire, bc.lead_rise());
    u.front() = th_ch;
    u.back() = th_ld;
    h.rise.push_back(u);

    // interior system, constant in time
    const int m = n - 2;
    const double a = -0.5 * dt * r;                       // off-diagonal
    const double b = 1.0 + dt * r + 0.5 * dt * f;         // diagonal
    std::vector<double> sub(m, a), sup(m, a);
    std::vector<double> diag(m), rhs(m);

    for (int step = 0; step < nt; ++step) {
        for (int i = 0; i < m; ++i) {
            double lap = u[i] - 2.0 * u[i + 1] + u[i + 2];
            rhs[i] = u[i + 1] + 0.5 * dt * (r * lap - f * u[i + 1]) + dt * src;
            diag[i] = b;
        }
        rhs.front() -= a * th_ch;
        rhs.back() -= a * th_ld;
        detail::thomas_solve(sub, diag, sup, rhs);
        for (int i = 0; i < m; ++i) u[i + 1] = rhs[i];
        h.rise.push_back(u);
    }
    return h;
}

// Crank-Nicolson solve of the full nonlinear wire equation
//   rho c dT/dt = (kappa(T) T')' + I^2 rho_e(T)/A^2 - eps sigma (C/A)((T+T0)^4 - T0^4)
// in the physical rise T (no Kirchhoff transform, no linearisation), with a
// Newton inner solve per step. Conductivity is evaluated at face means so the
// flux form stays conservative.
inline WireHistory solve_wire_nonlinear(const WireSpec& wire, const BoundarySet& bc,
                                        const Drive& drive, const WireGrid& grid,
                                        InitialProfile initial = InitialProfile::linear) {
    grid.validate();
    const int n = grid.nodes;
    const int nt = grid.steps;
    const double L = wire.length;
    const double dx = L / (n - 1);
    const double dt = drive.duration / nt;
    const double rc = wire.volumetric_heat();
    const double area = wire.cross_section();
    const double ca = wire.perimeter() / area;
    const double t0 = bc.t_ambient;
    const double i2a2 = drive.current * drive.current * wire.rho_e0 / (area * area);
    const double rad_c = wire.emissivity * PhysicalConstants::sigma * ca;

    WireHistory h;
    h.y.resize(n);
    for (int i = 0; i < n; ++i) h.y[i] = i * dx;
    h.t.resize(nt + 1);
    for (int i = 0; i <= nt; ++i) h.t[i] = dt * i;

    std::vector<double> u = detail::initial_rise(wire, bc, initial, h.y, false);
    u.front() = bc.chip_rise();
    u.back() = bc.lead_rise();
    h.rise.push_back(u);

    auto source = [&](double v) {
        double abs4 = std::pow(v + t0, 4) - std::pow(t0, 4);
        return i2a2 * (1.0 + wire.alpha_rho * v) - rad_c * abs4;
    };
    auto source_d = [&](double v) {
        return i2a2 * wire.alpha_rho - rad_c * 4.0 * std::pow(v + t0, 3);
    };
    auto face_kappa = [&](double vl, double vr) {
        return wire_conductivity(wire, 0.5 * (vl + vr));
    };
    // R_i = (f_{i+1/2} - f_{i-1/2})/dx + S_i with f = kappa(face) * du/dx
    auto rate = [&](const std::vector<double>& v, int i) {
        double fr = face_kappa(v[i], v[i + 1]) * (v[i + 1] - v[i]) / dx;
        double fl = face_kappa(v[i - 1], v[i]) * (v[i] - v[i - 1]) / dx;
        return (fr - fl) / dx + source(v[i]);
    };

    const int m = n - 2;
    std::vector<double> sub(m), diag(m), sup(m), rhs(m), rn(m);
    std::vector<double> v;

    for (int step = 0; step < nt; ++step) {
        for (int i = 0; i < m; ++i) rn[i] = rate(u, i + 1);
        v = u;  // Newton start: previous level
        double resid = 0.0;
        bool done = false;
        for (int it = 0; it < 20; ++it) {
            resid = 0.0;
            for (int i = 0; i < m; ++i) {
                double phi = v[i + 1] - u[i + 1] - 0.5 * dt / rc * (rate(v, i + 1) + rn[i]);
                rhs[i] = -phi;
                resid = std::max(resid, std::abs(phi));
            }
            if (resid < 1e-10) {
                done = true;
                break;
            }
            const double kp = wire.kappa0 * wire.alpha_kappa;  // d kappa / dT
            for (int i = 0; i < m; ++i) {
                int j = i + 1;
                double kr = face_kappa(v[j], v[j + 1]);
                double kl = face_kappa(v[j - 1], v[j]);
                double gr = (v[j + 1] - v[j]) / dx;
                double gl = (v[j] - v[j - 1]) / dx;
                // dR_j/dv_{j-1}, dv_j, dv_{j+1}
                double dm = (kl / dx - 0.5 * kp * gl) / dx;
                double dp = (kr / dx + 0.5 * kp * gr) / dx;
                double dc = (0.5 * kp * gr - kr / dx) / dx - (0.5 * kp * gl + kl / dx) / dx +
                            source_d(v[j]);
                double s = 0.5 * dt / rc;
                sub[i] = -s * dm;
                sup[i] = -s * dp;
                diag[i] = 1.0 - s * dc;
            }
            detail::thomas_solve(sub, diag, sup, rhs);
            for (int i = 0; i < m; ++i) v[i + 1] += rhs[i];
            if (!std::isfinite(v[m])) break;
        }
        if (!done)
            throw NewtonDivergence("solve_wire_nonlinear: step " + std::to_string(step) +
                                   " residual " + std::to_string(resid));
        u = v;
        h.rise.push_back(u);
    }
    return h;
}

// Difference metrics between a series evaluator and a stored FD history.
// Relative figures are normalised by the peak rise of the history.
struct ErrorReport {
    struct Row {
        double t = 0.0;
        double max_abs = 0.0;  // K
        double l2 = 0.0;       // K, discrete L2 over the wire
    };
    double max_abs = 0.0;
    double max_rel = 0.0;
    double l2_rel = 0.0;  // worst per-time L2, relative
    std::vector<Row> rows;

    void write_csv(std::ostream& out) const {
        out << "t,max_abs,l2\n";
        for (const auto& r : rows) out << r.t << ',' << r.max_abs << ',' << r.l2 << '\n';
    }
};

inline ErrorReport compare(const std::function<double(double, double)>& series,
                           const WireHistory& h, std::size_t time_stride = 1) {
    if (time_stride < 1) throw ValidationError("compare: time_stride must be >= 1");
    ErrorReport rep;
    const double denom = std::max(h.peak(), 1e-300);
    double worst_l2 = 0.0;
    for (std::size_t i = 0; i < h.t.size(); i += time_stride) {
        ErrorReport::Row row;
        row.t = h.t[i];
        double acc = 0.0;
        for (std::size_t j = 0; j < h.y.size(); ++j) {
            double d = series(h.y[j], h.t[i]) - h.rise[i][j];
            row.max_abs = std::max(row.max_abs, std::abs(d));
            acc += d * d;
        }
        row.l2 = std::sqrt(acc / static_cast<double>(h.y.size()));
        worst_l2 = std::max(worst_l2, row.l2);
        rep.max_abs = std::max(rep.max_abs, row.max_abs);
        rep.rows.push_back(row);
    }
    rep.max_rel = rep.max_abs / denom;
    rep.l2_rel = worst_l2 / denom;
    return rep;
}

// Physical energy audit of a nonlinear history, recomputed from the stored
// fields with independent (one-sided second order) boundary fluxes:
//   dE/dt = Joule - radiation - boundary outflow.
// Residuals are fractions of the per-step Joule input.
struct EnergyAudit {
    double worst = 0.0;
    std::vector<double> per_step;
};

inline EnergyAudit energy_audit(const WireSpec& wire, const BoundarySet& bc, const Drive& drive,
                                const WireHistory& h) {
    const double area = wire.cross_section();
    const double perim = wire.perimeter();
    const double rc = wire.volumetric_heat();
    const double t0 = bc.t_ambient;
    const double dx = h.y[1] - h.y[0];
    const std::size_t n = h.y.size();

    auto trapz = [&](const std::function<double(double)>& f, const std::vector<double>& u) {
        double acc = 0.5 * (f(u.front()) + f(u.back()));
        for (std::size_t i = 1; i + 1 < n; ++i) acc += f(u[i]);
        return acc * dx;
    };
    auto energy = [&](const std::vector<double>& u) {
        return rc * area * trapz([](double v) { return v; }, u);
    };
    auto power = [&](const std::vector<double>& u) {
        double joule = area * trapz(
            [&](double v) {
                return drive.current * drive.current * wire.rho_e0 * (1.0 + wire.alpha_rho * v) /
                       (area * area);
            },
            u);
        double rad = perim * trapz(
            [&](double v) {
                return wire.emissivity * PhysicalConstants::sigma *
                       (std::pow(v + t0, 4) - std::pow(t0, 4));
            },
            u);
        double g0 = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * dx);
        double gl = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * dx);
        double outflow = wire_conductivity(wire, u[0]) * area * g0 -
                         wire_conductivity(wire, u[n - 1]) * area * gl;
        return joule - rad - outflow;
    };

    EnergyAudit audit;
    for (std::size_t i = 0; i + 1 < h.t.size(); ++i) {
        double dt = h.t[i + 1] - h.t[i];
        double de = energy(h.rise[i + 1]) - energy(h.rise[i]);
        double p = 0.5 * (power(h.rise[i]) + power(h.rise[i + 1]));
        double joule = area * trapz(
            [&](double v) {
                return drive.current * drive.current * wire.rho_e0 * (1.0 + wire.alpha_rho * v) /
                       (area * area);
            },
            h.rise[i]);
        double frac = std::abs(de - dt * p) / std::max(std::abs(dt * joule), 1e-300);
        audit.per_step.push_back(frac);
        audit.worst = std::max(audit.worst, frac);
    }
    return audit;
}

// ---- coarse explicit 3-D oracle for the compound kernel ----

struct CompoundGrid {
    int nx = 33;
    int ny = 33;
    int nz = 25;
    double cfl = 0.4;  // fraction of the explicit stability limit

    void validate() const {
        if (nx < 5 || ny < 5 || nz < 5) throw ValidationError("CompoundGrid: need >= 5 nodes per axis");
        if (nx > 40 || ny > 40 || nz > 40)
            throw ValidationError("CompoundGrid: oracle is capped at 40 nodes per axis");
        if (!(cfl > 0.0) || cfl >= 1.0) throw ValidationError("CompoundGrid: cfl in (0,1)");
    }
};

struct Field3 {
    int nx = 0, ny = 0, nz = 0;
    double dx = 0.0, dy = 0.0, dz = 0.0;
    std::vector<double> v;  // [ (i*ny + j)*nz + k ]

    double& at(int i, int j, int k) { return v[(static_cast<std::size_t>(i) * ny + j) * nz + k]; }
    double at(int i, int j, int k) const {
        return v[(static_cast<std::size_t>(i) * ny + j) * nz + k];
    }

    // trapezoid volume integral (half weights on boundary planes)
    double integral() const {
        double acc = 0.0;
        for (int i = 0; i < nx; ++i) {
            double wi = (i == 0 || i == nx - 1) ? 0.5 : 1.0;
            for (int j = 0; j < ny; ++j) {
                double wj = (j == 0 || j == ny - 1) ? 0.5 : 1.0;
                for (int k = 0; k < nz; ++k) {
                    double wk = (k == 0 || k == nz - 1) ? 0.5 : 1.0;
                    acc += wi * wj * wk * at(i, j, k);
                }
            }
        }
        return acc * dx * dy * dz;
    }
};

// Explicit FTCS evolution of a unit point release at (x = 0, y = y_src,
// u = H/2) under the kernel's boundary set: Dirichlet y faces and die floor,
// Robin side walls and top. Domain is x in [-W/2, W/2], y in [0, L],
// u in [0, H]. Returns the field at t_end, normalised per unit energy over
// rho c, i.e. the same object as the analytic kernel.
inline Field3 solve_kernel_fd(const CompoundSpec& mold, double h_conv, double wire_length,
                              double y_src, const CompoundGrid& grid, double t_end) {
    grid.validate();
    if (!(t_end > 0.0)) throw ValidationError("solve_kernel_fd: t_end must be positive");
    const double W = mold.width, L = wire_length, H = mold.height;
    const double alpha = mold.diffusivity();
    const double hk = h_conv / mold.kappa;

    Field3 f;
    f.nx = grid.nx;
    f.ny = grid.ny;
    f.nz = grid.nz;
    f.dx = W / (grid.nx - 1);
    f.dy = L / (grid.ny - 1);
    f.dz = H / (grid.nz - 1);
    f.v.assign(static_cast<std::size_t>(grid.nx) * grid.ny * grid.nz, 0.0);

    // discrete delta: 1/cell-volume at the nearest node
    int is = static_cast<int>(std::lround((0.0 + W / 2.0) / f.dx));
    int js = static_cast<int>(std::lround(y_src / f.dy));
    int ks = static_cast<int>(std::lround((H / 2.0) / f.dz));
    f.at(is, js, ks) = 1.0 / (f.dx * f.dy * f.dz);

    double limit = 0.5 / (alpha * (1.0 / (f.dx * f.dx) + 1.0 / (f.dy * f.dy) +
                                   1.0 / (f.dz * f.dz)));
    int steps = static_cast<int>(std::ceil(t_end / (grid.cfl * limit)));
    double dt = t_end / steps;

    Field3 g = f;
    const double rx = alpha * dt / (f.dx * f.dx);
    const double ry = alpha * dt / (f.dy * f.dy);
    const double rz = alpha * dt / (f.dz * f.dz);

    for (int s = 0; s < steps; ++s) {
        for (int i = 0; i < f.nx; ++i) {
            for (int j = 1; j < f.ny - 1; ++j) {  // Dirichlet y faces stay zero
                for (int k = 1; k < f.nz; ++k) {  // Dirichlet die floor stays zero
                    double c = f.at(i, j, k);
                    // Robin ghosts on the x walls and the top
                    double xm = (i == 0) ? f.at(1, j, k) - 2.0 * f.dx * hk * c : f.at(i - 1, j, k);
                    double xp = (i == f.nx - 1) ? f.at(f.nx - 2, j, k) - 2.0 * f.dx * hk * c
                                                : f.at(i + 1, j, k);
                    double zm = f.at(i, j, k - 1);
                    double zp = (k == f.nz - 1) ? f.at(i, j, f.nz - 2) - 2.0 * f.dz * hk * c
                                                : f.at(i, j, k + 1);
                    g.at(i, j, k) = c + rx * (xm - 2.0 * c + xp) + ry * (f.at(i, j - 1, k) -
                                    2.0 * c + f.at(i, j + 1, k)) + rz * (zm - 2.0 * c + zp);
                }
            }
        }
        std::swap(f.v, g.v);
    }
    return f;
}

}  // namespace bondheat::fd

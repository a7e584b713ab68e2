#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "bondheat/errors.hpp"
#include "bondheat/model.hpp"
#include "bondheat/quadrature.hpp"

// Linearised, Kirchhoff-transformed wire temperature series.
//
// The transformed rise theta(y, t) solves
//   rho_w c_w dtheta/dt = kappa0 theta'' - F theta + G + H/2
// with Dirichlet ends theta(0) = theta_ch, theta(L) = theta_ld, where
//   G = I0^2 rho_e0 / A^2                       (Joule source)
//   F = eps sigma chi C/A                        (linearised radiation)
//   H = 2 I0^2 rho_e0 a_rho T_we / A^2 + eps sigma chi (C/A) a_kappa T_we^2
// and the series solution is
//   theta = sum_k C_t[k] exp(-beta_k t) sin(k pi y/L)
//         + C_s1 cosh(mu y) + C_s2 sinh(mu y) + (H/2 + G)/F,
//   beta_k = (kappa0 (k pi/L)^2 + F)/(rho_w c_w),  mu = sqrt(F/kappa0).
// For F <= 0 the steady part degenerates to the radiationless quadratic
// kappa0 theta'' = -(G + H/2) with the same endpoints.

namespace bondheat {

// Auxiliary pair determined by the coupling fixed point: effective wire
// temperature rise and effective transfer coefficient.
struct CouplingState {
    double t_we = 0.0;  // K (rise)
    double chi = 0.0;   // K^3

    void validate() const {
        if (t_we < 0.0) throw ValidationError("CouplingState: t_we must be >= 0");
        if (chi < 0.0) throw ValidationError("CouplingState: chi must be >= 0");
    }
};

struct WireOdeCoefficients {
    double G = 0.0;  // W/m^3
    double F = 0.0;  // W/(m^3*K)
    double H = 0.0;  // W/m^3
};

inline WireOdeCoefficients ode_coefficients(const WireSpec& wire, const Drive& drive,
                                            const CouplingState& state) {
    const double area = wire.cross_section();
    const double perim = wire.perimeter();
    const double i2 = drive.current * drive.current;
    WireOdeCoefficients c;
    c.G = i2 * wire.rho_e0 / (area * area);
    c.F = wire.emissivity * PhysicalConstants::sigma * state.chi * perim / area;
    c.H = 2.0 * i2 * wire.rho_e0 * wire.alpha_rho * state.t_we / (area * area) +
          wire.emissivity * PhysicalConstants::sigma * state.chi * (perim / area) *
              wire.alpha_kappa * state.t_we * state.t_we;
    return c;
}

// The feasibility bound on T_we implied by H > 0: T_we must stay below
// 2 I0^2 rho_e0 a_rho / (eps sigma chi A C |a_kappa|). Vacuous (infinite)
// when I0 = 0, alpha_kappa = 0, or chi = 0.
inline double effective_temperature_bound(const WireSpec& wire, const Drive& drive, double chi) {
    if (drive.current <= 0.0 || wire.alpha_kappa == 0.0 || chi <= 0.0)
        return std::numeric_limits<double>::infinity();
    return 2.0 * drive.current * drive.current * wire.rho_e0 * wire.alpha_rho /
           (wire.emissivity * PhysicalConstants::sigma * chi * wire.cross_section() *
            wire.perimeter() * std::abs(wire.alpha_kappa));
}

enum class InitialProfile {
    linear,   // linear rise between the endpoint rises (default)
    ambient,  // uniform zero rise
    steady,   // start at the steady part (all C_t = 0)
};

struct WireSolveOptions {
    int modes = 60;              // N_k
    int quadrature_points = 128; // projection rule
    InitialProfile initial = InitialProfile::linear;
};

struct WireSolution {
    // copies needed for standalone evaluation
    double length = 0.0;
    double kappa0 = 0.0;
    double rho_c = 0.0;  // rho_w * c_w
    double alpha_kappa = 0.0;
    double t_ambient = 0.0;
    double theta_ch = 0.0;
    double theta_ld = 0.0;
    WireOdeCoefficients ode;

    // steady part
    bool quadratic = false;
    double mu = 0.0;    // sqrt(F/kappa0), 1/m
    double Ks = 0.0;    // (H/2 + G)/F
    double c_s1 = 0.0;  // cosh coefficient
    double c_s2 = 0.0;  // sinh coefficient
    double qa = 0.0, qb = 0.0, qc = 0.0;  // quadratic fallback qa + qb y + qc y^2

    // transient part
    std::vector<double> nu;    // k pi/L
    std::vector<double> beta;  // decay rates, 1/s
    std::vector<double> ct;

    double steady_theta(double y) const {
        if (quadratic) return qa + qb * y + qc * y * y;
        return c_s1 * std::cosh(mu * y) + c_s2 * std::sinh(mu * y) + Ks;
    }

    double theta(double y, double t) const {
        double v = steady_theta(y);
        for (std::size_t k = 0; k < nu.size(); ++k) {
            double decay = std::exp(-beta[k] * t);
            if (decay < 1e-300) continue;
            v += ct[k] * decay * std::sin(nu[k] * y);
        }
        return v;
    }

    // Physical temperature, K.
    double temperature(double y, double t) const {
        if (y < -1e-12 * length || y > length * (1.0 + 1e-12) || t < 0.0)
            throw OutOfRange("WireSolution::temperature: (y, t) outside [0, L] x [0, inf)");
        return t_ambient + kirchhoff_inverse(alpha_kappa, theta(y, t));
    }

    // ---- closed-form integrals reused by coupling and the compound kernel

    // integral of the steady part over y in [0, L]
    double steady_y_integral() const {
        if (quadratic)
            return qa * length + qb * length * length / 2.0 + qc * std::pow(length, 3) / 3.0;
        return c_s1 * std::sinh(mu * length) / mu + c_s2 * (std::cosh(mu * length) - 1.0) / mu +
               Ks * length;
    }

    // integral of sin(k pi y/L) over [0, L]
    double transient_mode_y_integral(int k) const {
        int kk = k + 1;  // stored 0-based, modes are 1-based
        return (1.0 - ((kk % 2 == 0) ? 1.0 : -1.0)) / nu[k];
    }

    // (1/(L t_p)) * time-and-length integral of theta
    double mean_theta(double t_p) const {
        double acc = t_p * steady_y_integral();
        for (std::size_t k = 0; k < nu.size(); ++k) {
            double sy = (1.0 - std::cos(nu[k] * length)) / nu[k];
            acc += ct[k] * sy * (1.0 - std::exp(-beta[k] * t_p)) / beta[k];
        }
        return acc / (length * t_p);
    }

    // integral of the steady part against sin(lam y) where lam = (2m+1)pi/(2L)
    // (quarter-wave mode, so cos(lam L) = 0 and sin(lam L) = (-1)^m)
    double steady_quarter_sin_integral(double lam, int m) const {
        const double sgn = (m % 2 == 0) ? 1.0 : -1.0;
        if (quadratic) {
            double i0 = 1.0 / lam;                                  // int sin
            double i1 = sgn / (lam * lam);                          // int y sin
            double i2 = 2.0 * length * sgn / (lam * lam) - 2.0 / std::pow(lam, 3);
            return qa * i0 + qb * i1 + qc * i2;
        }
        const double d = lam * lam + mu * mu;
        const double jc = (lam + sgn * mu * std::sinh(mu * length)) / d;
        const double js = sgn * mu * std::cosh(mu * length) / d;
        return c_s1 * jc + c_s2 * js + Ks / lam;
    }

    // integral of sin(nu_k y) sin(lam y) over [0, L], lam = (2m+1)pi/(2L)
    double transient_quarter_sin_integral(int k, double lam, int m) const {
        int kk = k + 1;
        double sgn = ((kk + m) % 2 == 0) ? 1.0 : -1.0;
        return sgn * nu[k] / (lam * lam - nu[k] * nu[k]);
    }
};

inline WireSolution solve_wire(const WireSpec& wire, const BoundarySet& bc, const Drive& drive,
                               const CouplingState& state, const WireSolveOptions& opt = {}) {
    wire.validate();
    bc.validate();
    drive.validate();
    state.validate();
    if (opt.modes < 1) throw ValidationError("solve_wire: modes must be >= 1");

    WireSolution s;
    s.length = wire.length;
    s.kappa0 = wire.kappa0;
    s.rho_c = wire.volumetric_heat();
    s.alpha_kappa = wire.alpha_kappa;
    s.t_ambient = bc.t_ambient;
    s.theta_ch = kirchhoff_forward(wire, bc.chip_rise());
    s.theta_ld = kirchhoff_forward(wire, bc.lead_rise());
    s.ode = ode_coefficients(wire, drive, state);

    const double L = wire.length;
    if (s.ode.F > 0.0) {
        s.quadratic = false;
        s.mu = std::sqrt(s.ode.F / wire.kappa0);
        s.Ks = (s.ode.H / 2.0 + s.ode.G) / s.ode.F;
        s.c_s1 = s.theta_ch - s.Ks;
        s.c_s2 = (s.theta_ld - s.Ks - s.c_s1 * std::cosh(s.mu * L)) / std::sinh(s.mu * L);
    } else {
        // radiationless fallback: kappa0 theta'' = -(G + H/2)
        s.quadratic = true;
        s.qa = s.theta_ch;
        s.qc = -(s.ode.G + s.ode.H / 2.0) / (2.0 * wire.kappa0);
        s.qb = (s.theta_ld - s.theta_ch) / L - s.qc * L;
    }

    s.nu.resize(opt.modes);
    s.beta.resize(opt.modes);
    s.ct.assign(opt.modes, 0.0);
    for (int k = 1; k <= opt.modes; ++k) {
        double nu = k * M_PI / L;
        s.nu[k - 1] = nu;
        s.beta[k - 1] = (wire.kappa0 * nu * nu + std::max(s.ode.F, 0.0)) / s.rho_c;
    }

    if (opt.initial != InitialProfile::steady) {
        const double rise_ch = bc.chip_rise();
        const double rise_ld = bc.lead_rise();
        auto theta_init = [&](double y) {
            if (opt.initial == InitialProfile::ambient) return 0.0;
            double rise = rise_ch + (rise_ld - rise_ch) * (y / L);
            return kirchhoff_forward(wire, rise);
        };
        for (int k = 0; k < opt.modes; ++k) {
            double nu = s.nu[k];
            double integral = quadrature::integrate(
                [&](double y) { return (theta_init(y) - s.steady_theta(y)) * std::sin(nu * y); },
                0.0, L, opt.quadrature_points);
            s.ct[k] = 2.0 / L * integral;
        }
    }
    return s;
}

inline double wire_temperature(const WireSolution& sol, double y, double t) {
    return sol.temperature(y, t);
}

inline double midpoint_temperature(const WireSolution& sol, double t) {
    return sol.temperature(sol.length / 2.0, t);
}

// Smallest t in (0, t_max] with midpoint temperature = t_fuse, assuming the
// midpoint heats monotonically. nullopt when t_max never reaches t_fuse.
inline std::optional<double> time_to_fuse(const WireSolution& sol, double t_fuse, double t_max,
                                          double tol = 1e-6) {
    if (midpoint_temperature(sol, t_max) < t_fuse) return std::nullopt;
    if (midpoint_temperature(sol, 0.0) >= t_fuse) return 0.0;
    double lo = 0.0, hi = t_max;
    for (int it = 0; it < 200 && (hi - lo) > tol; ++it) {
        double mid = 0.5 * (lo + hi);
        if (midpoint_temperature(sol, mid) >= t_fuse)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace bondheat

#pragma once

#include <cmath>
#include <string>

#include "bondheat/errors.hpp"

// Core domain types and the pointwise material model:
//   kappa_w(dT)  = kappa0*(1 + alpha_kappa*dT)        thermal conductivity
//   rho_e(dT)    = rho_e0*(1 + alpha_rho*dT)          electric resistivity
//   theta(dT)    = dT + (alpha_kappa/2)*dT^2          Kirchhoff transform
// All quantities SI. Temperatures named T_* are absolute kelvin; dT/theta
// arguments are rises above ambient.

namespace bondheat {

struct PhysicalConstants {
    // Stefan-Boltzmann constant, W m^-2 K^-4
    static constexpr double sigma = 5.670374419e-8;
    static constexpr double celsius_offset = 273.15;
    static constexpr double mil = 25.4e-6;  // m
};

struct WireSpec {
    double length = 0.0;         // L_w, m
    double diameter = 0.0;       // D_w, m
    double kappa0 = 0.0;         // W/(m*K) at ambient
    double alpha_kappa = 0.0;    // 1/K, <= 0
    double rho_e0 = 0.0;         // Ohm*m at ambient
    double alpha_rho = 0.0;      // 1/K, >= 0
    double mass_density = 0.0;   // kg/m^3
    double specific_heat = 0.0;  // J/(kg*K)
    double emissivity = 0.0;     // dimensionless, (0, 1]

    // Melting point, K. Shipped per material, overridable in config.
    double fusing_temperature = 0.0;

    double cross_section() const { return M_PI * diameter * diameter / 4.0; }  // A_w, m^2
    double perimeter() const { return M_PI * diameter; }                       // C_w, m
    double volumetric_heat() const { return mass_density * specific_heat; }    // J/(m^3*K)

    void validate() const {
        if (!(length > 0.0)) throw ValidationError("WireSpec: length must be > 0");
        if (!(diameter > 0.0)) throw ValidationError("WireSpec: diameter must be > 0");
        if (!(kappa0 > 0.0)) throw ValidationError("WireSpec: kappa0 must be > 0");
        if (!(rho_e0 > 0.0)) throw ValidationError("WireSpec: rho_e0 must be > 0");
        if (!(mass_density > 0.0)) throw ValidationError("WireSpec: mass_density must be > 0");
        if (!(specific_heat > 0.0)) throw ValidationError("WireSpec: specific_heat must be > 0");
        if (!(emissivity > 0.0 && emissivity <= 1.0))
            throw ValidationError("WireSpec: emissivity must be in (0, 1]");
        if (alpha_rho < 0.0) throw ValidationError("WireSpec: alpha_rho must be >= 0");
        if (alpha_kappa > 0.0) throw ValidationError("WireSpec: alpha_kappa must be <= 0");
    }
};

struct CompoundSpec {
    double width = 0.0;          // W_m, m (x spans [-W/2, W/2])
    double height = 0.0;         // H_m, m (z spans [-H/2, H/2])
    double kappa = 0.0;          // W/(m*K)
    double specific_heat = 0.0;  // J/(kg*K)
    double mass_density = 0.0;   // kg/m^3

    double volumetric_heat() const { return mass_density * specific_heat; }
    double diffusivity() const { return kappa / volumetric_heat(); }  // m^2/s

    void validate() const {
        if (!(width > 0.0 && height > 0.0 && kappa > 0.0 && specific_heat > 0.0 &&
              mass_density > 0.0))
            throw ValidationError("CompoundSpec: all fields must be > 0");
    }
};

struct BoundarySet {
    double t_chip = 0.0;     // T_ch, K (chip plane y = 0)
    double t_lead = 0.0;     // T_ld, K (lead end y = L_w of the wire)
    double t_die = 0.0;      // T_d, K (die-attach plane z = -H/2)
    double t_ambient = 0.0;  // T_0, K
    double h_conv = 0.0;     // h_c, W/(m^2*K), top and side walls

    double chip_rise() const { return t_chip - t_ambient; }
    double lead_rise() const { return t_lead - t_ambient; }
    double die_rise() const { return t_die - t_ambient; }

    void validate() const {
        if (!(t_chip > 0.0 && t_lead > 0.0 && t_die > 0.0 && t_ambient > 0.0))
            throw ValidationError("BoundarySet: temperatures must be > 0 K");
        if (!(h_conv > 0.0)) throw ValidationError("BoundarySet: h_conv must be > 0");
    }
};

struct Drive {
    double current = 0.0;   // I_0, A
    double duration = 0.0;  // t_p, s

    void validate() const {
        if (current < 0.0) throw ValidationError("Drive: current must be >= 0");
        if (!(duration > 0.0)) throw ValidationError("Drive: duration must be > 0");
    }
};

// ---------------------------------------------------------------------------
// Material laws
// ---------------------------------------------------------------------------

inline double wire_conductivity(const WireSpec& wire, double dT) {
    double k = wire.kappa0 * (1.0 + wire.alpha_kappa * dT);
    if (k <= 0.0)
        throw NonPhysicalResult("wire_conductivity: kappa_w <= 0 at dT = " + std::to_string(dT) +
                                " K (beyond linear-law validity)");
    return k;
}

inline double wire_resistivity(const WireSpec& wire, double dT) {
    return wire.rho_e0 * (1.0 + wire.alpha_rho * dT);
}

// theta = dT + (alpha_kappa/2) dT^2. Strictly increasing on [0, -1/alpha_kappa).
inline double kirchhoff_forward(double alpha_kappa, double dT) {
    return dT + 0.5 * alpha_kappa * dT * dT;
}

inline double kirchhoff_forward(const WireSpec& wire, double dT) {
    return kirchhoff_forward(wire.alpha_kappa, dT);
}

// Inverse branch continuous with the identity at alpha_kappa = 0:
// dT = (-1 + sqrt(1 + 2 a theta))/a, evaluated in the cancellation-free form
// 2 theta / (1 + sqrt(1 + 2 a theta)).
inline double kirchhoff_inverse(double alpha_kappa, double theta) {
    if (std::abs(alpha_kappa) < 1e-12) return theta;
    double disc = 1.0 + 2.0 * alpha_kappa * theta;
    if (disc < 0.0)
        throw OutOfRange("kirchhoff_inverse: discriminant " + std::to_string(disc) +
                         " < 0 (theta beyond parabola vertex)");
    return 2.0 * theta / (1.0 + std::sqrt(disc));
}

inline double kirchhoff_inverse(const WireSpec& wire, double theta) {
    return kirchhoff_inverse(wire.alpha_kappa, theta);
}

// ---------------------------------------------------------------------------
// Material presets. Cu/Au electric and thermal characteristics follow the
// standard nominal tables for bondwire alloys; Al from handbook values.
// Melting points: Au 1064 C, Cu 1085 C, Al 660 C.
// ---------------------------------------------------------------------------

inline WireSpec material_preset(const std::string& name) {
    WireSpec w;
    if (name == "Cu") {
        w.rho_e0 = 1.678e-8;
        w.alpha_rho = 3.862e-3;
        w.mass_density = 8960.0;
        w.kappa0 = 398.0;
        w.alpha_kappa = -4.675e-4;
        w.specific_heat = 353.0;
        w.emissivity = 3.750e-2;
        w.fusing_temperature = 1085.0 + PhysicalConstants::celsius_offset;
    } else if (name == "Au") {
        w.rho_e0 = 2.214e-8;
        w.alpha_rho = 3.400e-3;
        w.mass_density = 19300.0;
        w.kappa0 = 315.0;
        w.alpha_kappa = -2.744e-4;
        w.specific_heat = 129.0;
        w.emissivity = 2.475e-1;
        w.fusing_temperature = 1064.0 + PhysicalConstants::celsius_offset;
    } else if (name == "Al") {
        w.rho_e0 = 2.650e-8;
        w.alpha_rho = 3.900e-3;
        w.mass_density = 2700.0;
        w.kappa0 = 237.0;
        w.alpha_kappa = -2.000e-4;
        w.specific_heat = 897.0;
        w.emissivity = 5.000e-2;
        w.fusing_temperature = 660.0 + PhysicalConstants::celsius_offset;
    } else {
        throw ValidationError("material_preset: unknown material '" + name +
                              "' (known: Au, Cu, Al)");
    }
    return w;
}

inline bool known_material(const std::string& name) {
    return name == "Au" || name == "Cu" || name == "Al";
}

}  // namespace bondheat

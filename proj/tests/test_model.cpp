#include <catch2/catch_amalgamated.hpp>

#include "bondheat/model.hpp"
#include "bondheat/units.hpp"
#include "bondheat/wire_solution.hpp"

#include <cmath>
#include <limits>

using namespace bondheat;
using Catch::Approx;

TEST_CASE("units: parse dimensioned quantities") {
    using units::Dimension;
    using units::parse_quantity;

    CHECK(parse_quantity("2.0 mil", Dimension::length, "d") == Approx(5.08e-5).epsilon(1e-12));
    CHECK(parse_quantity("2.5 mm", Dimension::length, "l") == Approx(2.5e-3).epsilon(1e-12));
    CHECK(parse_quantity("80 C", Dimension::temperature, "t") == Approx(353.15).epsilon(1e-12));
    CHECK(parse_quantity("313.15 K", Dimension::temperature, "t") == Approx(313.15));
    CHECK(parse_quantity("500 ms", Dimension::time, "t") == Approx(0.5));
    CHECK(parse_quantity("3.7 A", Dimension::current, "i") == Approx(3.7));
    CHECK(parse_quantity("25 W/(m^2*K)", Dimension::heat_transfer, "h") == Approx(25.0));
    CHECK(parse_quantity("0.870 W/(m*K)", Dimension::conductivity, "k") == Approx(0.87));
    CHECK(parse_quantity("1.678e-8 Ohm*m", Dimension::resistivity, "r") == Approx(1.678e-8));
    CHECK(parse_quantity("8960 kg/m^3", Dimension::mass_density, "rho") == Approx(8960.0));
    CHECK(parse_quantity("398 J/(kg*K)", Dimension::specific_heat, "c") == Approx(398.0));
    CHECK(parse_quantity("-4.675e-4 1/K", Dimension::inverse_kelvin, "a") == Approx(-4.675e-4));
    CHECK(parse_quantity("-4.675e-4 K^-1", Dimension::inverse_kelvin, "a") == Approx(-4.675e-4));
    CHECK(parse_quantity("0.25", Dimension::dimensionless, "eps") == Approx(0.25));
}

TEST_CASE("units: strict unit handling") {
    using units::Dimension;
    using units::parse_quantity;

    // dimensioned values must carry a unit
    CHECK_THROWS_AS(parse_quantity("2.5", Dimension::length, "l"), UnitError);
    // dimensionless values must not
    CHECK_THROWS_AS(parse_quantity("0.25 m", Dimension::dimensionless, "eps"), UnitError);
    // unit from the wrong dimension
    CHECK_THROWS_AS(parse_quantity("80 m", Dimension::temperature, "t"), UnitError);
    // malformed number
    CHECK_THROWS_AS(parse_quantity("abc mm", Dimension::length, "l"), UnitError);
    CHECK_THROWS_AS(parse_quantity("", Dimension::length, "l"), UnitError);
    // trailing garbage after the number
    CHECK_THROWS_AS(parse_quantity("1.0x mm", Dimension::length, "l"), UnitError);
}

TEST_CASE("units: format round trip") {
    using units::Dimension;

    // shortest-round-trip formatting must re-parse to the identical double
    for (double v : {5.08e-5, 2.5e-3, 353.15, 0.5, 3.7, 1.678e-8, -4.675e-4, 1.0 / 3.0,
                     6.02214076e23, 1e-300}) {
        std::string s = units::format_double(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
    CHECK(units::format_quantity(5.08e-5, Dimension::length) == "5.08e-05 m");
    CHECK(units::format_quantity(353.15, Dimension::temperature) == "353.15 K");
    CHECK(units::format_quantity(0.25, Dimension::dimensionless) == "0.25");
}

TEST_CASE("model: geometry of a 2 mil wire") {
    WireSpec w = material_preset("Au");
    w.diameter = 2.0 * PhysicalConstants::mil;
    w.length = 2.5e-3;

    CHECK(w.cross_section() == Approx(2.026830e-9).epsilon(1e-6));
    CHECK(w.perimeter() == Approx(1.595929e-4).epsilon(1e-6));
    CHECK(w.volumetric_heat() == Approx(19300.0 * 129.0).epsilon(1e-12));
}

TEST_CASE("model: material presets") {
    WireSpec cu = material_preset("Cu");
    CHECK(cu.kappa0 == Approx(398.0));
    CHECK(cu.rho_e0 == Approx(1.678e-8));
    CHECK(cu.fusing_temperature == Approx(1085.0 + 273.15));

    WireSpec au = material_preset("Au");
    CHECK(au.kappa0 == Approx(315.0));
    CHECK(au.fusing_temperature == Approx(1064.0 + 273.15));

    WireSpec al = material_preset("Al");
    CHECK(al.fusing_temperature == Approx(660.0 + 273.15));

    CHECK(known_material("Cu"));
    CHECK(known_material("Au"));
    CHECK(known_material("Al"));
    CHECK_FALSE(known_material("Ag"));
    CHECK_THROWS_AS(material_preset("Ag"), ValidationError);
}

TEST_CASE("model: temperature-dependent transport") {
    WireSpec cu = material_preset("Cu");
    // kappa(100 K rise) = 398*(1 - 4.675e-4*100)
    CHECK(wire_conductivity(cu, 100.0) == Approx(379.3935).epsilon(1e-10));
    // rho_e(100 K rise) = 1.678e-8*(1 + 3.862e-3*100)
    CHECK(wire_resistivity(cu, 100.0) == Approx(2.3260436e-8).epsilon(1e-9));

    WireSpec au = material_preset("Au");
    CHECK(wire_conductivity(au, 1000.0) == Approx(228.564).epsilon(1e-10));
    CHECK(wire_resistivity(au, 500.0) == Approx(5.9778e-8).epsilon(1e-9));

    // conductivity must stay positive
    CHECK_THROWS_AS(wire_conductivity(cu, 3000.0), NonPhysicalResult);
}

TEST_CASE("model: Kirchhoff transform pair") {
    const double a = -2.744e-4;  // Au alpha_kappa

    // forward value: 200 + a/2 * 200^2 = 200 - 5.488
    CHECK(kirchhoff_forward(a, 200.0) == Approx(194.512).epsilon(1e-12));
    CHECK(kirchhoff_inverse(a, 194.512) == Approx(200.0).epsilon(1e-10));

    // round trip across the admissible range
    for (double dT : {1e-8, 1e-3, 1.0, 10.0, 100.0, 500.0, 1000.0, 2000.0}) {
        double theta = kirchhoff_forward(a, dT);
        CHECK(kirchhoff_inverse(a, theta) == Approx(dT).epsilon(1e-10));
    }

    // negative rises round trip as well
    CHECK(kirchhoff_inverse(a, kirchhoff_forward(a, -40.0)) == Approx(-40.0).epsilon(1e-10));

    // identity for vanishing alpha
    CHECK(kirchhoff_forward(0.0, 123.456) == 123.456);
    CHECK(kirchhoff_inverse(0.0, 123.456) == 123.456);
    CHECK(kirchhoff_inverse(1e-13, 5.0) == 5.0);

    // vertex of the parabola: theta_max = -1/(2a) maps back to dT = -1/a
    double theta_max = -0.5 / a;
    CHECK(kirchhoff_inverse(a, theta_max) * a == Approx(-1.0).epsilon(1e-7));

    // beyond the vertex there is no real preimage
    CHECK_THROWS_AS(kirchhoff_inverse(a, 2000.0), OutOfRange);
}

TEST_CASE("model: spec validation") {
    WireSpec w = material_preset("Au");
    w.diameter = 5.08e-5;
    w.length = 2.5e-3;
    CHECK_NOTHROW(w.validate());

    WireSpec bad = w;
    bad.alpha_rho = -1e-3;
    CHECK_THROWS_AS(bad.validate(), ValidationError);

    bad = w;
    bad.alpha_kappa = 1e-3;
    CHECK_THROWS_AS(bad.validate(), ValidationError);

    bad = w;
    bad.emissivity = 0.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad.emissivity = 1.2;
    CHECK_THROWS_AS(bad.validate(), ValidationError);

    bad = w;
    bad.diameter = 0.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);

    Drive d;
    d.current = -1.0;
    d.duration = 0.5;
    CHECK_THROWS_AS(d.validate(), ValidationError);
    d.current = 3.7;
    d.duration = 0.0;
    CHECK_THROWS_AS(d.validate(), ValidationError);
    d.duration = 0.5;
    CHECK_NOTHROW(d.validate());

    CompoundSpec m;
    m.width = 4.45e-3;
    m.height = 1.48e-3;
    m.kappa = 0.87;
    m.specific_heat = 882.0;
    m.mass_density = 1860.0;
    CHECK_NOTHROW(m.validate());
    m.kappa = 0.0;
    CHECK_THROWS_AS(m.validate(), ValidationError);
}

TEST_CASE("model: boundary rises") {
    BoundarySet bc;
    bc.t_chip = 353.15;
    bc.t_lead = 313.15;
    bc.t_die = 308.15;
    bc.t_ambient = 293.15;
    bc.h_conv = 25.0;
    CHECK_NOTHROW(bc.validate());
    CHECK(bc.chip_rise() == Approx(60.0));
    CHECK(bc.lead_rise() == Approx(20.0));
    CHECK(bc.die_rise() == Approx(15.0));
}

TEST_CASE("wire ode: coefficient assembly") {
    WireSpec au = material_preset("Au");
    au.diameter = 2.0 * PhysicalConstants::mil;
    au.length = 2.5e-3;
    Drive d{3.7, 0.5};

    // G = I^2 rho_e0 / A^2
    CouplingState cold{0.0, 0.0};
    WireOdeCoefficients c0 = ode_coefficients(au, d, cold);
    CHECK(c0.G == Approx(7.378128e10).epsilon(1e-4));
    CHECK(c0.F == 0.0);
    CHECK(c0.H == 0.0);

    // with chi = 1e8 and T_we = 100 the linearised terms switch on
    CouplingState s{100.0, 1e8};
    WireOdeCoefficients c = ode_coefficients(au, d, s);
    CHECK(c.G == Approx(7.378128e10).epsilon(1e-4));
    CHECK(c.F == Approx(1.105055e5).epsilon(1e-4));
    CHECK(c.H == Approx(5.0170967e10).epsilon(1e-4));

    // H splits into Joule and radiation parts; the radiation part is negative
    double h_joule = 2.0 * c.G * au.alpha_rho * s.t_we;
    double h_rad = c.F * au.alpha_kappa * s.t_we * s.t_we;
    CHECK(c.H == Approx(h_joule + h_rad).epsilon(1e-12));
    CHECK(h_rad < 0.0);
}

TEST_CASE("wire ode: effective temperature bound") {
    WireSpec au = material_preset("Au");
    au.diameter = 2.0 * PhysicalConstants::mil;
    au.length = 2.5e-3;
    Drive d{3.7, 0.5};

    // vacuous cases
    CHECK(std::isinf(effective_temperature_bound(au, Drive{0.0, 0.5}, 1e8)));
    CHECK(std::isinf(effective_temperature_bound(au, d, 0.0)));
    WireSpec lin = au;
    lin.alpha_kappa = 0.0;
    CHECK(std::isinf(effective_temperature_bound(lin, d, 1e8)));

    // finite case: 2 I^2 rho_e0 a_rho / (eps sigma chi A C |a_kappa|)
    double b = effective_temperature_bound(au, d, 1e8);
    CHECK(b == Approx(1.65452e7).epsilon(1e-4));
}

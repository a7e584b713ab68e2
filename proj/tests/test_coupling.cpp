#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <string>

#include <bondheat/coupling.hpp>

using namespace bondheat;

namespace {

WireSpec au_wire() {
    WireSpec w = material_preset("Au");
    w.length = 2.5e-3;
    w.diameter = 2.0 * PhysicalConstants::mil;
    return w;
}

CompoundSpec epoxy_mold() {
    CompoundSpec m;
    m.width = 4.45e-3;
    m.height = 1.48e-3;
    m.kappa = 0.87;
    m.specific_heat = 882.0;
    m.mass_density = 1860.0;
    return m;
}

BoundarySet bench_bc() {
    BoundarySet bc;
    bc.t_chip = 353.15;
    bc.t_lead = 313.15;
    bc.t_die = 308.15;
    bc.t_ambient = 293.15;
    bc.h_conv = 25.0;
    return bc;
}

}  // namespace

TEST_CASE("coupling: chi factorisation identity") {
    const double t0 = 293.15;
    CHECK(ambient_chi(t0, 0.0) == Catch::Approx(4.0 * t0 * t0 * t0).epsilon(1e-15));
    for (double rise : {1.0, 50.0, 300.0, 900.0}) {
        const double t = t0 + rise;
        const double quartic = (t * t * t * t - t0 * t0 * t0 * t0) / (t - t0);
        CHECK(ambient_chi(t0, rise) == Catch::Approx(quartic).epsilon(1e-12));
    }
}

TEST_CASE("coupling: radiationless starting average") {
    auto bc = bench_bc();

    // no drive, no end rises: the zero solution averages to zero
    auto w = au_wire();
    BoundarySet flat = bc;
    flat.t_chip = flat.t_lead = flat.t_die = flat.t_ambient;
    CHECK(initial_effective_temperature(w, flat, Drive{0.0, 0.5}) == 0.0);

    // no drive, straight conduction between 60 K and 20 K end rises: with a
    // temperature-independent conductivity the profile is linear and the
    // average is the midpoint of the endpoints
    WireSpec lin = au_wire();
    lin.alpha_kappa = 0.0;
    CHECK(initial_effective_temperature(lin, bc, Drive{0.0, 0.5}) ==
          Catch::Approx(40.0).margin(1e-9));
    // the Kirchhoff curvature of the real wire only nudges it
    CHECK(initial_effective_temperature(w, bc, Drive{0.0, 0.5}) ==
          Catch::Approx(40.0).margin(0.5));

    // benchmark fixture
    CHECK(initial_effective_temperature(w, bc, Drive{3.7, 0.5}) ==
          Catch::Approx(164.213372).margin(2e-3));
}

TEST_CASE("coupling: chi root of the interface condition") {
    auto w = au_wire();
    auto m = epoxy_mold();
    auto bc = bench_bc();
    const Drive d{3.7, 0.5};

    double chi = chi_from_interface(w, m, bc, d, 164.213372);
    CHECK(chi == Catch::Approx(7.660131e11).epsilon(1e-3));

    REQUIRE_THROWS_AS(chi_from_interface(w, m, bc, d, -1.0), ValidationError);
}

TEST_CASE("coupling: fixed point on the benchmark fixture") {
    auto w = au_wire();
    auto m = epoxy_mold();
    auto bc = bench_bc();
    const Drive d{3.7, 0.5};

    auto r = fixed_point(w, m, bc, d);
    REQUIRE(r.converged);
    CHECK(r.iterations >= 3);
    CHECK(r.iterations <= 10);
    CHECK(r.state.t_we == Catch::Approx(77.966123).margin(0.01));
    CHECK(r.state.chi == Catch::Approx(7.532172e11).epsilon(1e-4));

    REQUIRE(r.t_we_history.size() == static_cast<size_t>(r.iterations));
    REQUIRE(r.chi_history.size() == static_cast<size_t>(r.iterations));
    REQUIRE(r.residual_history.size() == static_cast<size_t>(r.iterations));
    CHECK(r.residual_history.back() < 1e-4);
    for (size_t i = 1; i < r.residual_history.size(); ++i) {
        CHECK(r.residual_history[i] < r.residual_history[i - 1]);
    }
    // the H > 0 feasibility bound holds strictly at every accepted iterate
    for (size_t i = 0; i < r.t_we_history.size(); ++i) {
        CHECK(r.t_we_history[i] < effective_temperature_bound(w, d, r.chi_history[i]));
    }

    std::ostringstream trace;
    write_coupling_trace_csv(trace, r);
    std::istringstream in(trace.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "iteration,T_we,chi_w,residual");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == r.iterations);
}

TEST_CASE("coupling: restart from the converged pair is idempotent") {
    auto w = au_wire();
    auto m = epoxy_mold();
    auto bc = bench_bc();
    const Drive d{3.7, 0.5};

    auto r = fixed_point(w, m, bc, d);
    REQUIRE(r.converged);
    CouplingOptions warm;
    warm.start = r.state;
    auto r2 = fixed_point(w, m, bc, d, warm);
    CHECK(r2.converged);
    CHECK(r2.iterations == 1);
    CHECK(std::abs(r2.state.t_we - r.state.t_we) < 5e-3);
    CHECK(std::abs(r2.state.chi - r.state.chi) < 1e-6 * r.state.chi);
}

TEST_CASE("coupling: quiescent configuration settles immediately") {
    auto w = au_wire();
    auto m = epoxy_mold();
    BoundarySet flat;
    flat.t_chip = flat.t_lead = flat.t_die = flat.t_ambient = 293.15;
    flat.h_conv = 25.0;

    auto r = fixed_point(w, m, flat, Drive{0.0, 0.5});
    CHECK(r.converged);
    CHECK(r.iterations == 1);
    CHECK(r.state.t_we == 0.0);
    // the interface condition is identically satisfied; the seed chi stands
    CHECK(r.state.chi == Catch::Approx(ambient_chi(293.15, 0.0)).epsilon(1e-15));
    CHECK(r.residual_history.back() == 0.0);
}

TEST_CASE("coupling: interface offset sensitivity is bounded") {
    auto w = au_wire();
    auto m = epoxy_mold();
    auto bc = bench_bc();
    const Drive d{3.7, 0.5};

    auto base = fixed_point(w, m, bc, d);
    CouplingOptions wide;
    wide.compound.interface_offset_scale = 2.0;
    auto shifted = fixed_point(w, m, bc, d, wide);
    REQUIRE(base.converged);
    REQUIRE(shifted.converged);
    const double shift = std::abs(shifted.state.chi - base.state.chi) / base.state.chi;
    CHECK(shift > 5e-3);
    CHECK(shift < 0.5);

    CompoundSolveOptions bad;
    bad.interface_offset_scale = 0.0;
    REQUIRE_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("coupling: option validation and iteration cap") {
    auto w = au_wire();
    auto m = epoxy_mold();
    auto bc = bench_bc();
    const Drive d{3.7, 0.5};

    CouplingOptions bad;
    bad.tolerance = 0.0;
    REQUIRE_THROWS_AS(fixed_point(w, m, bc, d, bad), ValidationError);
    bad = CouplingOptions{};
    bad.max_iterations = 0;
    REQUIRE_THROWS_AS(fixed_point(w, m, bc, d, bad), ValidationError);

    CouplingOptions capped;
    capped.max_iterations = 2;
    auto r = fixed_point(w, m, bc, d, capped);
    CHECK_FALSE(r.converged);
    CHECK(r.iterations == 2);
    CHECK(std::isfinite(r.state.t_we));
    CHECK(r.state.chi > 0.0);
}

TEST_CASE("coupling: ambient self-anchored radiation state") {
    auto w = au_wire();
    auto bc = bench_bc();

    auto st = ambient_radiation_state(w, bc, Drive{3.7, 0.5});
    CHECK(st.t_we == Catch::Approx(291.801224).margin(0.05));
    CHECK(st.chi == Catch::Approx(3.759194e8).epsilon(1e-4));
    // chi is anchored at the state's own temperature by construction
    CHECK(st.chi == Catch::Approx(ambient_chi(bc.t_ambient, st.t_we)).epsilon(1e-12));

    BoundarySet flat = bc;
    flat.t_chip = flat.t_lead = flat.t_die = flat.t_ambient;
    auto quiet = ambient_radiation_state(w, flat, Drive{0.0, 0.5});
    CHECK(quiet.t_we == 0.0);
    CHECK(quiet.chi == Catch::Approx(ambient_chi(flat.t_ambient, 0.0)).epsilon(1e-15));
}

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <string>

#include <bondheat/capacity.hpp>

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

// Sweep options with the near-field balance truncated low: the property
// cases below care about curve structure, not converged crossings.
CouplingOptions sweep_opts() {
    CouplingOptions o;
    o.max_iterations = 60;  // the fixed point slows down near the runaway knee
    o.compound.interface_counts = {32, 45, 24, 60};
    return o;
}

}  // namespace

TEST_CASE("capacity: uniform grid helper") {
    auto g = uniform_grid(0.0, 2.0, 5);
    REQUIRE(g.size() == 5);
    CHECK(g.front() == 0.0);
    CHECK(g.back() == 2.0);
    CHECK(g[2] == Catch::Approx(1.0).margin(1e-15));

    auto one = uniform_grid(3.0, 9.0, 1);
    REQUIRE(one.size() == 1);
    CHECK(one[0] == 3.0);

    REQUIRE_THROWS_AS(uniform_grid(0.0, 1.0, 0), ValidationError);
    REQUIRE_THROWS_AS(uniform_grid(2.0, 1.0, 4), ValidationError);
}

TEST_CASE("capacity: input validation") {
    auto w = au_wire();
    auto m = epoxy_mold();
    auto bc = bench_bc();

    REQUIRE_THROWS_AS(capacity_curve(w, m, bc, 0.05, {}), ValidationError);
    REQUIRE_THROWS_AS(capacity_curve(w, m, bc, 0.0, {1.0}), ValidationError);
    REQUIRE_THROWS_AS(capacity_curve(w, m, bc, 0.05, {1.0, -0.5}), ValidationError);
}

TEST_CASE("capacity: crossing interpolation on a synthetic curve") {
    CapacityCurve c;
    c.t_hold = 0.05;
    c.points = {{1.0, 300.0, {}, 1}, {2.0, 400.0, {}, 1}, {3.0, 600.0, {}, 1}};

    // interior bracket, inverse-linear between the bracketing pair
    auto x = c.crossing_current(500.0);
    REQUIRE(x.has_value());
    CHECK(*x == Catch::Approx(2.5).margin(1e-12));

    // exact grid hit returns the grid point
    x = c.crossing_current(400.0);
    REQUIRE(x.has_value());
    CHECK(*x == Catch::Approx(2.0).margin(1e-12));

    // already molten at the first point
    x = c.crossing_current(250.0);
    REQUIRE(x.has_value());
    CHECK(*x == 1.0);

    // never reached
    CHECK_FALSE(c.crossing_current(700.0).has_value());
}

TEST_CASE("capacity: quiescent point matches a direct coupled run") {
    auto w = au_wire();
    auto m = epoxy_mold();
    auto bc = bench_bc();
    auto opts = sweep_opts();

    auto curve = capacity_curve(w, m, bc, 0.05, {0.0}, opts);
    REQUIRE(curve.points.size() == 1);

    // boundary-driven only: the midpoint sits between ambient and the hotter
    // end pads, nowhere near any Joule rise
    const double t0 = bc.t_ambient;
    CHECK(curve.points[0].t_mid > t0);
    CHECK(curve.points[0].t_mid < bc.t_chip);

    CouplingOptions direct = opts;
    direct.enforce_bound = false;
    auto ref = fixed_point(w, m, bc, Drive{0.0, 0.05}, direct);
    REQUIRE(ref.converged);
    auto ws = solve_wire(w, bc, Drive{0.0, 0.05}, ref.state, direct.wire);
    CHECK(curve.points[0].t_mid ==
          Catch::Approx(midpoint_temperature(ws, 0.05)).margin(1e-12));
    CHECK(curve.points[0].state.chi == Catch::Approx(ref.state.chi).epsilon(1e-12));
}

TEST_CASE("capacity: midpoint temperature is strictly increasing in current") {
    auto w = au_wire();
    auto m = epoxy_mold();
    auto bc = bench_bc();

    auto curve = capacity_curve(w, m, bc, 0.05, uniform_grid(0.0, 6.0, 7), sweep_opts());
    REQUIRE(curve.points.size() == 7);
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        CHECK(curve.points[i].t_mid > curve.points[i - 1].t_mid);
        CHECK(curve.points[i].iterations >= 1);
        CHECK(curve.points[i].state.chi > 0.0);
    }
}

TEST_CASE("capacity: stop_above ends the sweep once the threshold is bracketed") {
    auto w = au_wire();
    auto m = epoxy_mold();
    auto bc = bench_bc();

    auto curve = capacity_curve(w, m, bc, 0.05, uniform_grid(8.0, 20.0, 25), sweep_opts(),
                                w.fusing_temperature);
    REQUIRE(curve.points.size() < 25);
    CHECK(curve.points.back().t_mid >= w.fusing_temperature);
    for (std::size_t i = 0; i + 1 < curve.points.size(); ++i) {
        CHECK(curve.points[i].t_mid < w.fusing_temperature);
    }
    auto x = curve.crossing_current(w.fusing_temperature);
    REQUIRE(x.has_value());
    CHECK(*x <= curve.points.back().current);
    CHECK(*x >= curve.points.front().current);
}

TEST_CASE("capacity: CSV export shape") {
    CapacityCurve c;
    c.t_hold = 0.05;
    c.points = {{1.0, 310.0, {5.0, 1e9}, 3}, {2.0, 330.0, {9.0, 2e9}, 2}};
    std::ostringstream os;
    c.write_csv(os);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "I0,T_mid,T_we,chi_w,iterations");
    int rows = 0;
    while (std::getline(in, line)) {
        CHECK(line.find(',') != std::string::npos);
        ++rows;
    }
    CHECK(rows == 2);
}

// Regression baseline, not a handbook value: melting crossing of the swept,
// per-point-coupled curve for the benchmark Au wire at a 50 ms hold, full
// default truncation. Recorded after the first verified run.
TEST_CASE("capacity: benchmark Au melting crossing baseline") {
    auto w = au_wire();
    auto m = epoxy_mold();
    auto bc = bench_bc();
    CouplingOptions opts;
    opts.max_iterations = 60;

    auto curve = capacity_curve(w, m, bc, 0.05, uniform_grid(8.0, 11.0, 7), opts,
                                w.fusing_temperature);
    auto x = curve.crossing_current(w.fusing_temperature);
    REQUIRE(x.has_value());
    CHECK(*x == Catch::Approx(9.4105676).epsilon(5e-4));
}

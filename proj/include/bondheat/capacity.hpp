#pragma once
// Current-capacity curves: sweep the drive current, run the full wire/mold
// coupling at each point, and record the midpoint temperature after a hold
// time. The melting crossing is recovered from the swept curve by inverse
// interpolation on the bracketing pair.
//
// Points are solved in grid order and each fixed point is warm-started from
// the previous current's converged state; adjacent currents land close in
// (T_we, chi_w) so this usually cuts the sweep cost to 1-2 iterations per
// point after the first.

#include <algorithm>
#include <optional>
#include <ostream>
#include <vector>

#include "bondheat/coupling.hpp"
#include "bondheat/model.hpp"
#include "bondheat/units.hpp"
#include "bondheat/wire_solution.hpp"

namespace bondheat {

struct CapacityPoint {
    double current = 0.0;    // I_0, A
    double t_mid = 0.0;      // midpoint temperature at t_hold, K
    CouplingState state{};   // converged exchange state behind the point
    int iterations = 0;
};

struct CapacityCurve {
    double t_hold = 0.0;
    std::vector<CapacityPoint> points;

    // Smallest crossing of t_melt (K): inverse linear interpolation between
    // the first bracketing pair of sweep points. nullopt when the curve never
    // reaches t_melt; the exact grid value when a point lands on it.
    std::optional<double> crossing_current(double t_melt) const {
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (points[i].t_mid >= t_melt) {
                if (i == 0) return points[0].current;
                const CapacityPoint& a = points[i - 1];
                const CapacityPoint& b = points[i];
                double f = (t_melt - a.t_mid) / (b.t_mid - a.t_mid);
                return a.current + f * (b.current - a.current);
            }
        }
        return std::nullopt;
    }

    void write_csv(std::ostream& os) const {
        os << "I0,T_mid,T_we,chi_w,iterations\n";
        for (const CapacityPoint& p : points) {
            os << units::format_double(p.current) << ',' << units::format_double(p.t_mid) << ','
               << units::format_double(p.state.t_we) << ',' << units::format_double(p.state.chi)
               << ',' << p.iterations << '\n';
        }
    }
};

// Sweep the grid in order. The H > 0 bound is tracked but not enforced: it
// scales with I0^2 and vanishes at zero drive, where the exchange it guards
// is sub-kelvin, and a curve torn between model branches at the feasibility
// edge would not be monotone. stop_above ends the sweep after the first
// point at or beyond that temperature (the series leaves its validity range
// not far past melt; the crossing pair is already bracketed by then).
inline CapacityCurve capacity_curve(const WireSpec& wire, const CompoundSpec& mold,
                                    const BoundarySet& bc, double t_hold,
                                    const std::vector<double>& currents,
                                    const CouplingOptions& opts = {},
                                    std::optional<double> stop_above = {}) {
    if (currents.empty()) throw ValidationError("capacity_curve: empty current grid");
    if (!(t_hold > 0.0)) throw ValidationError("capacity_curve: t_hold must be positive");
    for (double i0 : currents)
        if (i0 < 0.0) throw ValidationError("capacity_curve: negative current in grid");

    CapacityCurve curve;
    curve.t_hold = t_hold;
    curve.points.reserve(currents.size());

    CouplingOptions popts = opts;
    popts.enforce_bound = false;
    for (double i0 : currents) {
        const Drive drive{i0, t_hold};
        CouplingResult res = fixed_point(wire, mold, bc, drive, popts);
        if (!res.converged)
            throw ConvergenceFailure("capacity_curve: coupling stalled at I0 = " +
                                     units::format_double(i0) + " A");
        WireSolution ws = solve_wire(wire, bc, drive, res.state, popts.wire);
        curve.points.push_back({i0, midpoint_temperature(ws, t_hold), res.state, res.iterations});
        popts.start = res.state;  // warm start the next grid point
        if (stop_above && curve.points.back().t_mid >= *stop_above) break;
    }
    return curve;
}

// Uniform grid helper for the CLI sweep.
inline std::vector<double> uniform_grid(double lo, double hi, int steps) {
    if (steps < 1) throw ValidationError("uniform_grid: steps must be >= 1");
    if (!(hi >= lo)) throw ValidationError("uniform_grid: imax must be >= imin");
    std::vector<double> g(static_cast<std::size_t>(steps));
    if (steps == 1) {
        g[0] = lo;
        return g;
    }
    for (int i = 0; i < steps; ++i)
        g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (steps - 1);
    return g;
}

}  // namespace bondheat

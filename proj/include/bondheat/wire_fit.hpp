#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "bondheat/config.hpp"
#include "bondheat/coupling.hpp"
#include "bondheat/dataset.hpp"
#include "bondheat/errors.hpp"
#include "bondheat/optimizer.hpp"

// Binding of the bondwire model to the subset-identification optimiser.
//
// The fit vector is
//   p = [D_w, L_w, rho_e0, alpha_rho, rho_w, kappa0, alpha_kappa, c_e_w,
//        epsilon_w, T_ch, T_ld],
// scaled by the configured nominal values so every component starts at 1.
// Compound dimensions and the convective coefficient are configuration, not
// fit parameters: they come from the package, not from the wire.
//
// The model prediction B(p, I, t_p) is the mid-point temperature after the
// full coupling fixed point. Each event keeps the coupling state of its last
// successful evaluation as a warm start; the optimiser probes parameters in
// small steps, so one or two alternation passes usually suffice. An event
// whose solve fails is reported as NaN and masked by the optimiser.

namespace bondheat {

inline constexpr int kFitDim = 11;

inline const std::array<const char*, kFitDim>& fit_parameter_names() {
    static const std::array<const char*, kFitDim> names = {
        "D_w",    "L_w",        "rho_e0", "alpha_rho", "rho_w", "kappa0",
        "alpha_kappa", "c_e_w", "epsilon_w", "T_ch",   "T_ld"};
    return names;
}

inline Eigen::VectorXd fit_nominals(const RunConfig& cfg) {
    Eigen::VectorXd n(kFitDim);
    n << cfg.wire.diameter, cfg.wire.length, cfg.wire.rho_e0, cfg.wire.alpha_rho,
        cfg.wire.mass_density, cfg.wire.kappa0, cfg.wire.alpha_kappa, cfg.wire.specific_heat,
        cfg.wire.emissivity, cfg.boundary.t_chip, cfg.boundary.t_lead;
    return n;
}

// Scaled box bounds. Geometry moves up to 30% around nominal; the boundary
// temperatures only upward, up to 50%, to absorb chip/lead self-heating
// during long fusing events; the material laws stay in their physical
// ranges (positive magnitudes, alpha_rho >= 0, alpha_kappa <= 0,
// 0 < emissivity <= 1).
inline void fit_bounds(const RunConfig& cfg, Eigen::VectorXd& lower, Eigen::VectorXd& upper) {
    const double inf = std::numeric_limits<double>::infinity();
    const double floor = 1e-6;  // scaled; keeps positive quantities positive
    lower.resize(kFitDim);
    upper.resize(kFitDim);
    lower << 0.7, 0.7, floor, 0.0, floor, floor, 0.0, floor, floor, 1.0, 1.0;
    upper << 1.3, 1.3, inf, inf, inf, inf, inf, inf, 1.0 / cfg.wire.emissivity, 1.5, 1.5;
    if (cfg.wire.alpha_kappa == 0.0) {
        // degenerate nominal: the scale is 1, so the physical sign constraint
        // alpha_kappa <= 0 lands on the scaled component directly
        lower[6] = -inf;
        upper[6] = 0.0;
    }
}

// Physical wire/boundary at a scaled parameter vector.
inline void apply_fit_parameters(const RunConfig& cfg, const Eigen::VectorXd& p, WireSpec& wire,
                                 BoundarySet& bc) {
    if (p.size() != kFitDim)
        throw ValidationError("apply_fit_parameters: expected " + std::to_string(kFitDim) +
                              " parameters, got " + std::to_string(p.size()));
    const Eigen::VectorXd nom = fit_nominals(cfg);
    auto scale = [&](int i) { return nom[i] != 0.0 ? nom[i] * p[i] : p[i]; };
    wire = cfg.wire;
    wire.diameter = scale(0);
    wire.length = scale(1);
    wire.rho_e0 = scale(2);
    wire.alpha_rho = scale(3);
    wire.mass_density = scale(4);
    wire.kappa0 = scale(5);
    wire.alpha_kappa = scale(6);
    wire.specific_heat = scale(7);
    wire.emissivity = scale(8);
    bc = cfg.boundary;
    bc.t_chip = scale(9);
    bc.t_lead = scale(10);
}

struct WireFitProblem {
    RunConfig config;
    std::vector<FilteredPair> events;  // (I_0, t_p) pairs

    // coupling state of the last successful solve, per event
    mutable std::vector<std::optional<CouplingState>> warm;
    mutable int failures = 0;  // running count across all evaluations

    explicit WireFitProblem(RunConfig cfg, std::vector<FilteredPair> ev)
        : config(std::move(cfg)), events(std::move(ev)), warm(events.size()) {
        config.validate();
        for (const auto& e : events)
            if (!(e.current > 0.0) || !(e.duration > 0.0))
                throw ValidationError("WireFitProblem: events need positive current and time");
    }

    // Mid-point temperature for one event; state_out receives the converged
    // coupling pair when given.
    double predict_event(const WireSpec& wire, const BoundarySet& bc,
                         const FilteredPair& ev, std::optional<CouplingState> start,
                         CouplingState* state_out) const {
        CouplingOptions copts = config.coupling_options();
        copts.start = start;
        const Drive drive{ev.current, ev.duration};
        auto res = fixed_point(wire, config.compound, bc, drive, copts);
        if (!res.converged)
            throw ConvergenceFailure("wire_fit: coupling stalled at I0 = " +
                                     units::format_double(ev.current));
        auto ws = solve_wire(wire, bc, drive, res.state, copts.wire);
        if (state_out) *state_out = res.state;
        return midpoint_temperature(ws, ev.duration);
    }

    Eigen::VectorXd operator()(const Eigen::VectorXd& p) const {
        WireSpec wire;
        BoundarySet bc;
        apply_fit_parameters(config, p, wire, bc);
        Eigen::VectorXd out(static_cast<Eigen::Index>(events.size()));
        for (std::size_t i = 0; i < events.size(); ++i) {
            try {
                wire.validate();
                bc.validate();
                CouplingState st;
                out[static_cast<Eigen::Index>(i)] =
                    predict_event(wire, bc, events[i], warm[i], &st);
                warm[i] = st;
            } catch (const Error&) {
                // a failed warm start gets one cold retry before masking
                try {
                    CouplingState st;
                    out[static_cast<Eigen::Index>(i)] =
                        predict_event(wire, bc, events[i], std::nullopt, &st);
                    warm[i] = st;
                } catch (const Error&) {
                    out[static_cast<Eigen::Index>(i)] =
                        std::numeric_limits<double>::quiet_NaN();
                    ++failures;
                }
            }
        }
        return out;
    }
};

// Assemble the generic optimisation problem. The WireFitProblem is shared so
// its warm-start cache survives across evaluations.
inline opt::Problem make_fit_problem(std::shared_ptr<WireFitProblem> fit) {
    opt::Problem prob;
    prob.targets = Eigen::VectorXd::Constant(
        static_cast<Eigen::Index>(fit->events.size()), fit->config.wire.fusing_temperature);
    fit_bounds(fit->config, prob.lower, prob.upper);
    prob.names.assign(fit_parameter_names().begin(), fit_parameter_names().end());
    prob.predict = [fit](const Eigen::VectorXd& p) { return (*fit)(p); };
    return prob;
}

// ---------------------------------------------------------------------------
// Synthetic fusing data
// ---------------------------------------------------------------------------

// Coupled time to fuse: the duration at which the mid-point reaches the
// melting temperature, by bisection on the full coupled model. The mid-point
// temperature is increasing in the hold time, so the bracket is robust.
inline double coupled_time_to_fuse(const RunConfig& cfg, const WireSpec& wire,
                                   const BoundarySet& bc, double current, double t_lo = 1e-5,
                                   double t_hi = 30.0) {
    CouplingOptions copts = cfg.coupling_options();
    const double target = cfg.wire.fusing_temperature;
    std::optional<CouplingState> warm;
    auto midpoint_at = [&](double t) {
        // past the Kirchhoff vertex or the kappa > 0 range the wire is far
        // beyond melting; for bracketing purposes that reads as +inf
        try {
            copts.start = warm;
            auto res = fixed_point(wire, cfg.compound, bc, Drive{current, t}, copts);
            warm = res.state;
            auto ws = solve_wire(wire, bc, Drive{current, t}, res.state, copts.wire);
            return midpoint_temperature(ws, t);
        } catch (const OutOfRange&) {
            return std::numeric_limits<double>::infinity();
        } catch (const NonPhysicalResult&) {
            return std::numeric_limits<double>::infinity();
        }
    };
    if (midpoint_at(t_hi) < target)
        throw NoRoot("coupled_time_to_fuse: " + units::format_double(current) +
                     " A does not fuse within " + units::format_double(t_hi) + " s");
    if (midpoint_at(t_lo) >= target)
        throw NoRoot("coupled_time_to_fuse: " + units::format_double(current) +
                     " A fuses before " + units::format_double(t_lo) + " s");
    double lo = t_lo, hi = t_hi;
    while ((hi - lo) > 1e-12 * hi) {
        const double mid = 0.5 * (lo + hi);
        (midpoint_at(mid) >= target ? hi : lo) = mid;
    }
    return hi;
}

// Fusing events generated from the model itself at a known parameter vector,
// with multiplicative gaussian noise on the fuse times. The standard oracle
// for a subset-selection fit: the recovered well-conditioned parameters must
// land back on p_true.
inline FilteredSeries synthetic_fusing_series(const RunConfig& cfg,
                                              const Eigen::VectorXd& p_true,
                                              const std::vector<double>& currents,
                                              double noise = 0.01, unsigned seed = 1077) {
    WireSpec wire;
    BoundarySet bc;
    apply_fit_parameters(cfg, p_true, wire, bc);
    wire.validate();
    bc.validate();
    std::mt19937 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    FilteredSeries series;
    series.bin_rule = "synthetic";
    series.statistic = "model time-to-fuse with " + units::format_double(noise * 100.0) +
                       "% multiplicative noise";
    for (double i0 : currents) {
        const double t = coupled_time_to_fuse(cfg, wire, bc, i0);
        const double t_noisy = noise > 0.0 ? t * (1.0 + noise * gauss(rng)) : t;
        series.pairs.push_back({i0, t_noisy});
    }
    for (std::size_t i = 1; i < series.pairs.size(); ++i)
        if (series.pairs[i].duration > series.pairs[i - 1].duration)
            series.monotonicity_violations.push_back(i);
    return series;
}

// ---------------------------------------------------------------------------
// Fit report
// ---------------------------------------------------------------------------

// Transient/steady split of the model error. An event is transient when its
// duration does not exceed the slowest wire time constant
//   tau = rho_w c_e_w / (kappa0 (pi/L)^2 + F),
// evaluated per event at its converged coupling state; the error statistic is
// |B - T_f| / T_f averaged within each class.
struct ErrorSplit {
    int transient_events = 0;
    int steady_events = 0;
    double transient_initial_percent = 0.0;
    double transient_final_percent = 0.0;
    double steady_initial_percent = 0.0;
    double steady_final_percent = 0.0;
};

namespace detail {

inline double wire_time_constant(const WireSpec& wire, const CouplingState& state) {
    const double lambda1 = M_PI / wire.length;
    const double f = wire.emissivity * PhysicalConstants::sigma * state.chi *
                     wire.perimeter() / wire.cross_section();
    return wire.volumetric_heat() / (wire.kappa0 * lambda1 * lambda1 + f);
}

}  // namespace detail

// Full fit report in the shape of the published summary tables: a variation
// table (percent change of every parameter against its nominal) and the
// transient/steady error split, plus the per-iteration trace.
inline nlohmann::ordered_json fit_report_json(const WireFitProblem& fit,
                                              const opt::OptimizeResult& result,
                                              const Eigen::VectorXd& p0) {
    using nlohmann::ordered_json;

    // initial predictions first so the warm cache ends at the fitted state
    const Eigen::VectorXd b0 = fit(p0);
    const Eigen::VectorXd bf = fit(result.p);
    WireSpec wire_f;
    BoundarySet bc_f;
    apply_fit_parameters(fit.config, result.p, wire_f, bc_f);

    ErrorSplit split;
    const double t_fuse = fit.config.wire.fusing_temperature;
    for (std::size_t i = 0; i < fit.events.size(); ++i) {
        const auto idx = static_cast<Eigen::Index>(i);
        if (std::isnan(bf[idx]) || !fit.warm[i]) continue;
        const double tau = detail::wire_time_constant(wire_f, *fit.warm[i]);
        const bool transient = fit.events[i].duration <= tau;
        const double e_init = std::isnan(b0[idx]) ? 0.0 : std::abs(b0[idx] - t_fuse) / t_fuse;
        const double e_fin = std::abs(bf[idx] - t_fuse) / t_fuse;
        if (transient) {
            ++split.transient_events;
            split.transient_initial_percent += e_init;
            split.transient_final_percent += e_fin;
        } else {
            ++split.steady_events;
            split.steady_initial_percent += e_init;
            split.steady_final_percent += e_fin;
        }
    }
    if (split.transient_events > 0) {
        split.transient_initial_percent *= 100.0 / split.transient_events;
        split.transient_final_percent *= 100.0 / split.transient_events;
    }
    if (split.steady_events > 0) {
        split.steady_initial_percent *= 100.0 / split.steady_events;
        split.steady_final_percent *= 100.0 / split.steady_events;
    }

    ordered_json j;
    j["events"] = fit.events.size();
    j["converged"] = result.converged;
    j["stop_reason"] = result.stop_reason;
    j["residual_initial"] =
        opt::residual_value(b0, Eigen::VectorXd::Constant(b0.size(), t_fuse)).value;
    j["residual_final"] = result.residual;
    j["masked_events"] = result.masked_events;

    ordered_json iters = ordered_json::array();
    const auto& names = fit_parameter_names();
    for (const auto& it : result.iterations) {
        ordered_json ji;
        ji["iteration"] = it.iteration;
        ji["residual"] = it.residual;
        ji["step_norm"] = it.step_norm;
        ji["halvings"] = it.halvings;
        ji["accepted"] = it.accepted;
        ji["hessian_min_eigenvalue"] = it.hessian_min_eigenvalue;
        ji["singular_values"] = it.singular_values;
        ordered_json sel = ordered_json::array();
        for (int k : it.selected) sel.push_back(names[static_cast<std::size_t>(k)]);
        ji["selected"] = sel;
        iters.push_back(ji);
    }
    j["iterations"] = iters;

    const Eigen::VectorXd nom = fit_nominals(fit.config);
    ordered_json table = ordered_json::array();
    for (int i = 0; i < kFitDim; ++i) {
        ordered_json row;
        row["parameter"] = names[static_cast<std::size_t>(i)];
        row["nominal"] = nom[i];
        row["fitted"] = nom[i] != 0.0 ? nom[i] * result.p[i] : result.p[i];
        if (nom[i] != 0.0)
            row["variation_percent"] = (result.p[i] - 1.0) * 100.0;
        else
            row["variation_percent"] = nullptr;  // undefined against a zero nominal
        table.push_back(row);
    }
    j["variation_table"] = table;

    ordered_json js;
    js["rule"] =
        "transient if t_p <= rho_w*c_e_w/(kappa0*(pi/L_w)^2 + F) at the fitted parameters";
    js["normalisation"] = "|B - T_fuse| / T_fuse, averaged per class";
    js["transient"] = {{"events", split.transient_events},
                       {"initial_error_percent", split.transient_initial_percent},
                       {"final_error_percent", split.transient_final_percent}};
    js["steady"] = {{"events", split.steady_events},
                    {"initial_error_percent", split.steady_initial_percent},
                    {"final_error_percent", split.steady_final_percent}};
    j["error_split"] = js;
    j["warnings"] = result.warnings;
    return j;
}

}  // namespace bondheat

// bondheat command line: simulate / capacity / couple / optimize / verify.
//
// One config file (JSON, unit-annotated) describes the wire, the compound
// block, the boundary temperatures, and the solver knobs; each subcommand
// adds its drive or data arguments. Primary artifacts go to stdout so they
// can be redirected; `couple` additionally writes its iteration trace CSV to
// a file. Outputs are deterministic except for one generated-at header,
// which --no-timestamp suppresses.
//
// Exit codes: 0 ok, 2 validation/parse problem, 3 convergence failure,
// 4 tolerance breach in verify.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <bondheat/capacity.hpp>
#include <bondheat/config.hpp>
#include <bondheat/coupling.hpp>
#include <bondheat/dataset.hpp>
#include <bondheat/fd_oracle.hpp>
#include <bondheat/model.hpp>
#include <bondheat/units.hpp>
#include <bondheat/wire_fit.hpp>
#include <bondheat/wire_solution.hpp>

namespace {

using namespace bondheat;
using nlohmann::ordered_json;

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void csv_header(std::ostream& out, bool no_timestamp) {
    if (!no_timestamp) out << "# generated " << utc_timestamp() << "\n";
}

ordered_json with_timestamp(ordered_json body, bool no_timestamp) {
    if (no_timestamp) return body;
    ordered_json out;
    out["generated_at"] = utc_timestamp();
    for (auto it = body.begin(); it != body.end(); ++it) out[it.key()] = *it;
    return out;
}

ordered_json coupling_json(const CouplingResult& res) {
    ordered_json j;
    j["converged"] = res.converged;
    j["iterations"] = res.iterations;
    j["t_we"] = res.state.t_we;
    j["chi_w"] = res.state.chi;
    j["min_margin"] = std::isfinite(res.min_margin) ? ordered_json(res.min_margin)
                                                    : ordered_json("inf");
    j["t_we_history"] = res.t_we_history;
    j["chi_history"] = res.chi_history;
    j["residual_history"] = res.residual_history;
    return j;
}

int run_simulate(const std::string& config_path, double current, double duration,
                 const std::string& probe, bool grid, bool no_timestamp) {
    RunConfig cfg = load_config(config_path);
    const Drive drive{current, duration};
    drive.validate();
    auto copts = cfg.coupling_options();
    auto res = fixed_point(cfg.wire, cfg.compound, cfg.boundary, drive, copts);
    if (!res.converged)
        throw ConvergenceFailure("simulate: coupling did not converge in " +
                                 std::to_string(res.iterations) + " iterations");
    auto ws = solve_wire(cfg.wire, cfg.boundary, drive, res.state, copts.wire);

    if (!probe.empty()) {
        double y = 0.0, t = 0.0;
        if (std::sscanf(probe.c_str(), "%lf,%lf", &y, &t) != 2)
            throw ValidationError("simulate: --probe expects 'y,t', got '" + probe + "'");
        csv_header(std::cout, no_timestamp);
        std::cout << "y_m,t_s,T_K\n";
        std::cout << units::format_double(y) << ',' << units::format_double(t) << ','
                  << units::format_double(ws.temperature(y, t)) << "\n";
        return 0;
    }
    if (grid) {
        csv_header(std::cout, no_timestamp);
        std::cout << "y_m,t_s,T_K\n";
        const int ny = 101, nt = 10;
        for (int k = 1; k <= nt; ++k) {
            const double t = duration * k / nt;
            for (int i = 0; i < ny; ++i) {
                const double y = cfg.wire.length * i / (ny - 1);
                std::cout << units::format_double(y) << ',' << units::format_double(t) << ','
                          << units::format_double(ws.temperature(y, t)) << "\n";
            }
        }
        return 0;
    }
    ordered_json j;
    j["current"] = current;
    j["duration"] = duration;
    j["t_mid"] = midpoint_temperature(ws, duration);
    j["coupling"] = coupling_json(res);
    std::cout << with_timestamp(std::move(j), no_timestamp).dump(2) << "\n";
    return 0;
}

int run_capacity(const std::string& config_path, double hold, double imin, double imax,
                 int steps, bool no_timestamp) {
    RunConfig cfg = load_config(config_path);
    if (steps < 1) throw ValidationError("capacity: --steps must be >= 1");
    if (!(imin >= 0.0) || !(imax >= imin))
        throw ValidationError("capacity: need 0 <= imin <= imax");
    auto curve = capacity_curve(cfg.wire, cfg.compound, cfg.boundary, hold,
                                uniform_grid(imin, imax, steps), cfg.coupling_options());
    csv_header(std::cout, no_timestamp);
    curve.write_csv(std::cout);
    auto crossing = curve.crossing_current(cfg.wire.fusing_temperature);
    std::cout << "# melting_crossing_A,"
              << (crossing ? units::format_double(*crossing) : "none") << "\n";
    return 0;
}

int run_couple(const std::string& config_path, double current, double duration,
               const std::string& trace_path, bool no_timestamp) {
    RunConfig cfg = load_config(config_path);
    const Drive drive{current, duration};
    drive.validate();
    auto res = fixed_point(cfg.wire, cfg.compound, cfg.boundary, drive, cfg.coupling_options());

    std::ofstream trace(trace_path);
    if (!trace) throw ValidationError("couple: cannot write trace file '" + trace_path + "'");
    csv_header(trace, no_timestamp);
    write_coupling_trace_csv(trace, res);

    std::cout << with_timestamp(coupling_json(res), no_timestamp).dump(2) << "\n";
    return res.converged ? 0 : 3;
}

int run_optimize(const std::string& config_path, const std::string& events_path, int bins,
                 const std::string& hessian, double svd_threshold, bool no_timestamp) {
    RunConfig cfg = load_config(config_path);
    auto events = load_events(events_path);

    if (!cfg.material.empty()) {
        std::vector<FuseEvent> kept;
        for (auto& e : events)
            if (e.material == cfg.material) kept.push_back(std::move(e));
        if (kept.size() != events.size())
            std::cerr << "optimize: dropped " << (events.size() - kept.size())
                      << " event(s) not matching material '" << cfg.material << "'\n";
        events = std::move(kept);
    }
    if (events.empty()) throw ValidationError("optimize: no usable events");

    FilteredSeries series =
        bins > 0 ? histogram_filter(events, bins) : histogram_filter(events);
    if (!series.monotone_nonincreasing())
        std::cerr << "optimize: filtered series is not nonincreasing in current at "
                  << series.monotonicity_violations.size() << " pair(s)\n";

    if (!hessian.empty()) {
        if (hessian == "gn")
            cfg.optimizer.hessian = "gauss-newton";
        else if (hessian == "full")
            cfg.optimizer.hessian = "full";
        else
            throw ValidationError("optimize: --hessian must be 'gn' or 'full'");
    }
    if (svd_threshold > 0.0) cfg.optimizer.svd_threshold = svd_threshold;
    cfg.optimizer.validate();

    opt::OptimizeOptions oo;
    oo.hessian = cfg.optimizer.hessian == "full" ? opt::HessianMode::full
                                                 : opt::HessianMode::gauss_newton;
    oo.svd_threshold = cfg.optimizer.svd_threshold;
    oo.max_iterations = cfg.optimizer.max_iterations;
    oo.step_tolerance = cfg.optimizer.step_tolerance;
    oo.residual_tolerance = cfg.optimizer.residual_tolerance;
    oo.fd_relative_step = cfg.optimizer.fd_relative_step;

    auto fit = std::make_shared<WireFitProblem>(cfg, series.pairs);
    opt::Problem prob = make_fit_problem(fit);
    const Eigen::VectorXd p0 = Eigen::VectorXd::Ones(kFitDim);

    bool failed = false;
    opt::OptimizeResult result;
    try {
        result = opt::optimize(prob, p0, oo);
    } catch (const opt::NotConverged& e) {
        result = e.best;
        failed = true;
        std::cerr << "optimize: " << e.what() << "\n";
    }

    ordered_json report = fit_report_json(*fit, result, p0);
    ordered_json hist;
    hist["rule"] = series.bin_rule;
    hist["bins_requested"] = series.bins_requested;
    hist["pairs"] = series.pairs.size();
    hist["statistic"] = series.statistic;
    hist["monotone_nonincreasing"] = series.monotone_nonincreasing();
    report["histogram"] = hist;
    std::cout << with_timestamp(std::move(report), no_timestamp).dump(2) << "\n";
    return failed ? 3 : 0;
}

struct VerifyLine {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double tolerance = 0.0;
};

int run_verify(const std::string& config_path, const std::string& suite, double current,
               double duration, bool no_timestamp) {
    if (suite != "wire" && suite != "compound" && suite != "all")
        throw ValidationError("verify: --suite must be wire, compound, or all");
    RunConfig cfg = load_config(config_path);
    csv_header(std::cout, no_timestamp);
    std::vector<VerifyLine> lines;

    if (suite == "wire" || suite == "all") {
        // Kirchhoff round trip across the physical rise range
        double worst = 0.0;
        const double top = cfg.wire.alpha_kappa < 0.0
                               ? 0.95 / std::abs(cfg.wire.alpha_kappa)
                               : 2000.0;
        for (int i = 0; i <= 400; ++i) {
            const double dt = top * i / 400.0;
            const double back =
                kirchhoff_inverse(cfg.wire, kirchhoff_forward(cfg.wire, dt));
            worst = std::max(worst, std::abs(back - dt) / std::max(1.0, dt));
        }
        lines.push_back({"kirchhoff round trip", worst < 1e-10, worst, 1e-10});

        // series vs linearised finite differences at the coupled state
        const Drive drive{current, duration};
        drive.validate();
        auto copts = cfg.coupling_options();
        auto res = fixed_point(cfg.wire, cfg.compound, cfg.boundary, drive, copts);
        auto ws = solve_wire(cfg.wire, cfg.boundary, drive, res.state, copts.wire);
        auto h = fd::solve_wire_linearised(cfg.wire, cfg.boundary, drive, res.state,
                                           {201, 2000});
        auto rep = fd::compare([&](double y, double t) { return ws.theta(y, t); }, h, 10);
        lines.push_back({"wire series vs linearised FD", rep.max_rel < 5e-3, rep.max_rel, 5e-3});
    }

    if (suite == "compound" || suite == "all") {
        auto cs = solve_compound(cfg.wire, cfg.compound, cfg.boundary, cfg.compound_solver);
        const double W = cfg.compound.width, H = cfg.compound.height, L = cfg.wire.length;
        const int gn = 21;
        double rms_chip = 0.0, rms_die = 0.0;
        for (int i = 0; i < gn; ++i) {
            const double x = -W / 2.0 + (0.1 + 0.8 * i / (gn - 1.0)) * W;
            for (int j = 0; j < gn; ++j) {
                const double z = -H / 2.0 + (0.1 + 0.8 * j / (gn - 1.0)) * H;
                const double y = (0.1 + 0.8 * j / (gn - 1.0)) * L;
                const double ec = cs.chip_part(x, 0.0, z) / cfg.boundary.chip_rise() - 1.0;
                const double ed = cs.die_part(x, y, -H / 2.0) / cfg.boundary.die_rise() - 1.0;
                rms_chip += ec * ec;
                rms_die += ed * ed;
            }
        }
        rms_chip = std::sqrt(rms_chip / (gn * gn));
        rms_die = std::sqrt(rms_die / (gn * gn));
        lines.push_back({"chip plane reproduction", rms_chip < 5e-3, rms_chip, 5e-3});
        lines.push_back({"die plane reproduction", rms_die < 5e-3, rms_die, 5e-3});

        // kernel volume integral against the impulse normalisation 1/(rho c)
        const double t = 1e-5;
        const double vol = kernel_volume_integral(cfg.compound, cfg.boundary.h_conv, L,
                                                  L / 2.0, t);
        const double expected = 1.0 / cfg.compound.volumetric_heat();
        const double err = std::abs(vol / expected - 1.0);
        lines.push_back({"kernel volume integral", err < 2e-2, err, 2e-2});
    }

    bool all_pass = true;
    for (const auto& l : lines) {
        all_pass = all_pass && l.pass;
        std::cout << (l.pass ? "PASS" : "FAIL") << "  " << l.name << "  (value "
                  << units::format_double(l.value) << ", tolerance "
                  << units::format_double(l.tolerance) << ")\n";
    }
    std::cout << (all_pass ? "verify: all checks passed\n" : "verify: tolerance breach\n");
    return all_pass ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bondheat: extended analytic bondwire heating model"};
    app.require_subcommand(1);
    bool no_timestamp = false;
    app.add_flag("--no-timestamp", no_timestamp, "suppress generated-at headers");

    std::string config_path;
    double current = 0.0, duration = 0.0, hold = 0.0, imin = 0.0, imax = 0.0;
    int steps = 0, bins = 0;
    std::string probe, trace_path = "couple_trace.csv", events_path;
    std::string hessian, suite = "all";
    double svd_threshold = 0.0;
    bool grid = false;

    auto* sim = app.add_subcommand("simulate", "coupled wire temperature for one drive");
    sim->add_option("--config", config_path, "config JSON")->required();
    sim->add_option("--current", current, "drive amplitude, A")->required();
    sim->add_option("--duration", duration, "pulse length, s")->required();
    auto* popt = sim->add_option("--probe", probe, "evaluate at 'y,t' (CSV row)");
    auto* gopt = sim->add_flag("--grid", grid, "full y/t grid CSV");
    popt->excludes(gopt);

    auto* cap = app.add_subcommand("capacity", "capacity curve over a current grid");
    cap->add_option("--config", config_path, "config JSON")->required();
    cap->add_option("--hold", hold, "hold time, s")->required();
    cap->add_option("--imin", imin, "grid start, A")->required();
    cap->add_option("--imax", imax, "grid end, A")->required();
    cap->add_option("--steps", steps, "grid point count")->required();

    auto* coup = app.add_subcommand("couple", "fixed point of (T_we, chi_w)");
    coup->add_option("--config", config_path, "config JSON")->required();
    coup->add_option("--current", current, "drive amplitude, A")->required();
    coup->add_option("--duration", duration, "pulse length, s")->required();
    coup->add_option("--trace", trace_path, "iteration trace CSV path");

    auto* opt_cmd = app.add_subcommand("optimize", "fit wire parameters to fusing events");
    opt_cmd->add_option("--config", config_path, "config JSON")->required();
    opt_cmd->add_option("--events", events_path, "fusing events CSV")->required();
    opt_cmd->add_option("--bins", bins, "histogram bin count (default Freedman-Diaconis)");
    opt_cmd->add_option("--hessian", hessian, "gn|full");
    opt_cmd->add_option("--svd-threshold", svd_threshold, "relative truncation threshold");

    auto* ver = app.add_subcommand("verify", "oracle comparisons, nonzero exit on breach");
    ver->add_option("--config", config_path, "config JSON")->required();
    ver->add_option("--suite", suite, "wire|compound|all");
    ver->add_option("--current", current, "wire-suite drive amplitude, A")->default_val(3.7);
    ver->add_option("--duration", duration, "wire-suite pulse length, s")->default_val(0.5);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (sim->parsed()) return run_simulate(config_path, current, duration, probe, grid,
                                               no_timestamp);
        if (cap->parsed()) return run_capacity(config_path, hold, imin, imax, steps,
                                               no_timestamp);
        if (coup->parsed()) return run_couple(config_path, current, duration, trace_path,
                                              no_timestamp);
        if (opt_cmd->parsed()) return run_optimize(config_path, events_path, bins, hessian,
                                                   svd_threshold, no_timestamp);
        if (ver->parsed()) return run_verify(config_path, suite, current, duration,
                                             no_timestamp);
    } catch (const ValidationError& e) {  // includes ParseError and UnitError
        std::cerr << "bondheat: " << e.what() << "\n";
        return 2;
    } catch (const ConvergenceFailure& e) {
        std::cerr << "bondheat: " << e.what() << "\n";
        return 3;
    } catch (const OutOfRange& e) {
        std::cerr << "bondheat: " << e.what() << "\n";
        return 2;
    } catch (const OutOfDomain& e) {
        std::cerr << "bondheat: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "bondheat: " << e.what() << "\n";
        return 3;
    }
    return 2;
}

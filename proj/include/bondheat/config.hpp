#pragma once

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include <json.hpp>

#include "bondheat/coupling.hpp"
#include "bondheat/errors.hpp"
#include "bondheat/model.hpp"
#include "bondheat/units.hpp"

// Run configuration: one JSON document holding the wire, compound, and
// boundary blocks plus solver truncation, coupling, and optimiser knobs.
//
// Every dimensioned value is a string "NUMBER UNIT" ("2.0 mil", "80 C") and
// is normalised to SI exactly once, at parse time. A bare number where a
// unit is required is rejected: mixed units are the main user-error vector
// for this model, so the annotation is not optional. Dimensionless values
// (emissivity, tolerances, counts) are plain JSON numbers.
//
// The wire block may name a material preset; explicit keys then override
// preset fields, which is also how the melting point can be overridden.
// serialize_config emits the fully resolved configuration in canonical SI
// form with a fixed key order, so serialise -> parse -> serialise is
// byte-identical.

namespace bondheat {

struct OptimizerConfig {
    int max_iterations = 50;
    std::string hessian = "gauss-newton";  // or "full"
    double svd_threshold = 1e-6;           // relative to the top singular value
    double step_tolerance = 1e-5;          // relative step size stop
    double residual_tolerance = 1e-8;      // residual change stop
    double fd_relative_step = 1e-4;        // jacobian central-difference step

    void validate() const {
        if (max_iterations < 1)
            throw ValidationError("OptimizerConfig: max_iterations must be >= 1");
        if (hessian != "gauss-newton" && hessian != "full")
            throw ValidationError("OptimizerConfig: hessian must be 'gauss-newton' or 'full'");
        if (!(svd_threshold > 0.0 && svd_threshold < 1.0))
            throw ValidationError("OptimizerConfig: svd_threshold must be in (0, 1)");
        if (!(step_tolerance > 0.0) || !(residual_tolerance > 0.0))
            throw ValidationError("OptimizerConfig: tolerances must be > 0");
        if (!(fd_relative_step > 0.0))
            throw ValidationError("OptimizerConfig: fd_relative_step must be > 0");
    }
};

struct RunConfig {
    std::string material;  // preset name, empty when the wire is fully explicit
    WireSpec wire;
    CompoundSpec compound;
    BoundarySet boundary;
    WireSolveOptions wire_solver{};
    CompoundSolveOptions compound_solver{};
    double coupling_tolerance = 1e-4;
    int coupling_max_iterations = 20;
    bool coupling_enforce_bound = true;
    OptimizerConfig optimizer{};

    CouplingOptions coupling_options() const {
        CouplingOptions o;
        o.tolerance = coupling_tolerance;
        o.max_iterations = coupling_max_iterations;
        o.enforce_bound = coupling_enforce_bound;
        o.wire = wire_solver;
        o.compound = compound_solver;
        return o;
    }

    void validate() const {
        wire.validate();
        if (!(wire.fusing_temperature > 0.0))
            throw ValidationError("RunConfig: wire.fusing_temperature must be > 0 K");
        compound.validate();
        boundary.validate();
        compound_solver.validate();
        if (!(coupling_tolerance > 0.0))
            throw ValidationError("RunConfig: coupling tolerance must be > 0");
        if (coupling_max_iterations < 1)
            throw ValidationError("RunConfig: coupling max_iterations must be >= 1");
        if (wire_solver.modes < 1 || wire_solver.quadrature_points < 2)
            throw ValidationError("RunConfig: wire solver counts out of range");
        optimizer.validate();
    }
};

namespace detail {

using ordered_json = nlohmann::ordered_json;

inline void check_keys(const ordered_json& obj, std::initializer_list<const char*> allowed,
                       const std::string& block) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed)
            if (it.key() == k) ok = true;
        if (!ok)
            throw ParseError("config: unknown key '" + it.key() + "' in '" + block + "'");
    }
}

inline const ordered_json& require_block(const ordered_json& j, const char* name) {
    auto it = j.find(name);
    if (it == j.end() || !it->is_object())
        throw ParseError(std::string("config: missing object '") + name + "'");
    return *it;
}

inline bool assign_quantity(const ordered_json& obj, const char* key, units::Dimension dim,
                            const std::string& block, double& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return false;
    const std::string field = block + "." + key;
    if (dim == units::Dimension::dimensionless && it->is_number()) {
        out = it->get<double>();
        return true;
    }
    if (!it->is_string())
        throw UnitError("config: '" + field + "' must be a string with a unit");
    out = units::parse_quantity(it->get<std::string>(), dim, field);
    return true;
}

inline void require_quantity(const ordered_json& obj, const char* key, units::Dimension dim,
                             const std::string& block, double& out) {
    if (!assign_quantity(obj, key, dim, block, out))
        throw ParseError("config: missing key '" + block + "." + key + "'");
}

inline void assign_int(const ordered_json& obj, const char* key, const std::string& block,
                       int& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    if (!it->is_number_integer())
        throw ParseError("config: '" + block + "." + key + "' must be an integer");
    out = it->get<int>();
}

inline void assign_double(const ordered_json& obj, const char* key, const std::string& block,
                          double& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    if (!it->is_number())
        throw ParseError("config: '" + block + "." + key + "' must be a number");
    out = it->get<double>();
}

inline void assign_bool(const ordered_json& obj, const char* key, const std::string& block,
                        bool& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    if (!it->is_boolean())
        throw ParseError("config: '" + block + "." + key + "' must be a boolean");
    out = it->get<bool>();
}

inline void assign_string(const ordered_json& obj, const char* key, const std::string& block,
                          std::string& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    if (!it->is_string())
        throw ParseError("config: '" + block + "." + key + "' must be a string");
    out = it->get<std::string>();
}

inline void parse_counts(const ordered_json& obj, const char* key, const std::string& block,
                         spectral::TruncationCounts& out) {
    auto it = obj.find(key);
    if (it == obj.end()) return;
    if (!it->is_object())
        throw ParseError("config: '" + block + "." + key + "' must be an object");
    const std::string sub = block + "." + key;
    check_keys(*it, {"nx", "ny", "nz", "nk"}, sub);
    assign_int(*it, "nx", sub, out.nx);
    assign_int(*it, "ny", sub, out.ny);
    assign_int(*it, "nz", sub, out.nz);
    assign_int(*it, "nk", sub, out.nk);
}

inline ordered_json counts_json(const spectral::TruncationCounts& c) {
    ordered_json j;
    j["nx"] = c.nx;
    j["ny"] = c.ny;
    j["nz"] = c.nz;
    j["nk"] = c.nk;
    return j;
}

}  // namespace detail

inline RunConfig parse_config(const std::string& text) {
    using detail::ordered_json;
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("config: top level must be an object");
    detail::check_keys(j, {"wire", "compound", "boundary", "solver", "coupling", "optimizer"},
                       "config");

    RunConfig cfg;

    const auto& jw = detail::require_block(j, "wire");
    detail::check_keys(jw,
                       {"material", "diameter", "length", "kappa0", "alpha_kappa", "rho_e0",
                        "alpha_rho", "mass_density", "specific_heat", "emissivity",
                        "fusing_temperature"},
                       "wire");
    detail::assign_string(jw, "material", "wire", cfg.material);
    if (!cfg.material.empty()) cfg.wire = material_preset(cfg.material);
    using units::Dimension;
    detail::require_quantity(jw, "diameter", Dimension::length, "wire", cfg.wire.diameter);
    detail::require_quantity(jw, "length", Dimension::length, "wire", cfg.wire.length);
    auto need = [&](const char* key, Dimension dim, double& out) {
        // preset fields stay unless overridden; explicit wires must give all
        if (!detail::assign_quantity(jw, key, dim, "wire", out) && cfg.material.empty())
            throw ParseError(std::string("config: missing key 'wire.") + key +
                             "' (no material preset named)");
    };
    need("kappa0", Dimension::conductivity, cfg.wire.kappa0);
    need("alpha_kappa", Dimension::inverse_kelvin, cfg.wire.alpha_kappa);
    need("rho_e0", Dimension::resistivity, cfg.wire.rho_e0);
    need("alpha_rho", Dimension::inverse_kelvin, cfg.wire.alpha_rho);
    need("mass_density", Dimension::mass_density, cfg.wire.mass_density);
    need("specific_heat", Dimension::specific_heat, cfg.wire.specific_heat);
    need("emissivity", Dimension::dimensionless, cfg.wire.emissivity);
    need("fusing_temperature", Dimension::temperature, cfg.wire.fusing_temperature);

    const auto& jc = detail::require_block(j, "compound");
    detail::check_keys(jc, {"width", "height", "kappa", "mass_density", "specific_heat"},
                       "compound");
    detail::require_quantity(jc, "width", Dimension::length, "compound", cfg.compound.width);
    detail::require_quantity(jc, "height", Dimension::length, "compound", cfg.compound.height);
    detail::require_quantity(jc, "kappa", Dimension::conductivity, "compound",
                             cfg.compound.kappa);
    detail::require_quantity(jc, "mass_density", Dimension::mass_density, "compound",
                             cfg.compound.mass_density);
    detail::require_quantity(jc, "specific_heat", Dimension::specific_heat, "compound",
                             cfg.compound.specific_heat);

    const auto& jb = detail::require_block(j, "boundary");
    detail::check_keys(jb, {"t_chip", "t_lead", "t_die", "t_ambient", "h_conv"}, "boundary");
    detail::require_quantity(jb, "t_chip", Dimension::temperature, "boundary",
                             cfg.boundary.t_chip);
    detail::require_quantity(jb, "t_lead", Dimension::temperature, "boundary",
                             cfg.boundary.t_lead);
    detail::require_quantity(jb, "t_die", Dimension::temperature, "boundary", cfg.boundary.t_die);
    detail::require_quantity(jb, "t_ambient", Dimension::temperature, "boundary",
                             cfg.boundary.t_ambient);
    detail::require_quantity(jb, "h_conv", Dimension::heat_transfer, "boundary",
                             cfg.boundary.h_conv);

    if (auto it = j.find("solver"); it != j.end()) {
        const auto& js = *it;
        detail::check_keys(js,
                           {"wire_modes", "wire_quadrature_points", "transient_counts",
                            "interface_counts", "steady_nx", "steady_ny", "steady_nz",
                            "interface_offset_scale"},
                           "solver");
        detail::assign_int(js, "wire_modes", "solver", cfg.wire_solver.modes);
        detail::assign_int(js, "wire_quadrature_points", "solver",
                           cfg.wire_solver.quadrature_points);
        detail::parse_counts(js, "transient_counts", "solver", cfg.compound_solver.counts);
        detail::parse_counts(js, "interface_counts", "solver",
                             cfg.compound_solver.interface_counts);
        detail::assign_int(js, "steady_nx", "solver", cfg.compound_solver.steady_nx);
        detail::assign_int(js, "steady_ny", "solver", cfg.compound_solver.steady_ny);
        detail::assign_int(js, "steady_nz", "solver", cfg.compound_solver.steady_nz);
        detail::assign_double(js, "interface_offset_scale", "solver",
                              cfg.compound_solver.interface_offset_scale);
    }

    if (auto it = j.find("coupling"); it != j.end()) {
        detail::check_keys(*it, {"tolerance", "max_iterations", "enforce_bound"}, "coupling");
        detail::assign_double(*it, "tolerance", "coupling", cfg.coupling_tolerance);
        detail::assign_int(*it, "max_iterations", "coupling", cfg.coupling_max_iterations);
        detail::assign_bool(*it, "enforce_bound", "coupling", cfg.coupling_enforce_bound);
    }

    if (auto it = j.find("optimizer"); it != j.end()) {
        detail::check_keys(*it,
                           {"max_iterations", "hessian", "svd_threshold", "step_tolerance",
                            "residual_tolerance", "fd_relative_step"},
                           "optimizer");
        detail::assign_int(*it, "max_iterations", "optimizer", cfg.optimizer.max_iterations);
        detail::assign_string(*it, "hessian", "optimizer", cfg.optimizer.hessian);
        detail::assign_double(*it, "svd_threshold", "optimizer", cfg.optimizer.svd_threshold);
        detail::assign_double(*it, "step_tolerance", "optimizer", cfg.optimizer.step_tolerance);
        detail::assign_double(*it, "residual_tolerance", "optimizer",
                              cfg.optimizer.residual_tolerance);
        detail::assign_double(*it, "fd_relative_step", "optimizer",
                              cfg.optimizer.fd_relative_step);
    }

    cfg.validate();
    return cfg;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("load_config: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

inline std::string serialize_config(const RunConfig& cfg) {
    using detail::ordered_json;
    using units::Dimension;
    auto q = [](double v, Dimension d) { return units::format_quantity(v, d); };

    ordered_json j;
    ordered_json jw;
    if (!cfg.material.empty()) jw["material"] = cfg.material;
    jw["diameter"] = q(cfg.wire.diameter, Dimension::length);
    jw["length"] = q(cfg.wire.length, Dimension::length);
    jw["kappa0"] = q(cfg.wire.kappa0, Dimension::conductivity);
    jw["alpha_kappa"] = q(cfg.wire.alpha_kappa, Dimension::inverse_kelvin);
    jw["rho_e0"] = q(cfg.wire.rho_e0, Dimension::resistivity);
    jw["alpha_rho"] = q(cfg.wire.alpha_rho, Dimension::inverse_kelvin);
    jw["mass_density"] = q(cfg.wire.mass_density, Dimension::mass_density);
    jw["specific_heat"] = q(cfg.wire.specific_heat, Dimension::specific_heat);
    jw["emissivity"] = cfg.wire.emissivity;
    jw["fusing_temperature"] = q(cfg.wire.fusing_temperature, Dimension::temperature);
    j["wire"] = jw;

    ordered_json jc;
    jc["width"] = q(cfg.compound.width, Dimension::length);
    jc["height"] = q(cfg.compound.height, Dimension::length);
    jc["kappa"] = q(cfg.compound.kappa, Dimension::conductivity);
    jc["mass_density"] = q(cfg.compound.mass_density, Dimension::mass_density);
    jc["specific_heat"] = q(cfg.compound.specific_heat, Dimension::specific_heat);
    j["compound"] = jc;

    ordered_json jb;
    jb["t_chip"] = q(cfg.boundary.t_chip, Dimension::temperature);
    jb["t_lead"] = q(cfg.boundary.t_lead, Dimension::temperature);
    jb["t_die"] = q(cfg.boundary.t_die, Dimension::temperature);
    jb["t_ambient"] = q(cfg.boundary.t_ambient, Dimension::temperature);
    jb["h_conv"] = q(cfg.boundary.h_conv, Dimension::heat_transfer);
    j["boundary"] = jb;

    ordered_json js;
    js["wire_modes"] = cfg.wire_solver.modes;
    js["wire_quadrature_points"] = cfg.wire_solver.quadrature_points;
    js["transient_counts"] = detail::counts_json(cfg.compound_solver.counts);
    js["interface_counts"] = detail::counts_json(cfg.compound_solver.interface_counts);
    js["steady_nx"] = cfg.compound_solver.steady_nx;
    js["steady_ny"] = cfg.compound_solver.steady_ny;
    js["steady_nz"] = cfg.compound_solver.steady_nz;
    js["interface_offset_scale"] = cfg.compound_solver.interface_offset_scale;
    j["solver"] = js;

    ordered_json jcp;
    jcp["tolerance"] = cfg.coupling_tolerance;
    jcp["max_iterations"] = cfg.coupling_max_iterations;
    jcp["enforce_bound"] = cfg.coupling_enforce_bound;
    j["coupling"] = jcp;

    ordered_json jo;
    jo["max_iterations"] = cfg.optimizer.max_iterations;
    jo["hessian"] = cfg.optimizer.hessian;
    jo["svd_threshold"] = cfg.optimizer.svd_threshold;
    jo["step_tolerance"] = cfg.optimizer.step_tolerance;
    jo["residual_tolerance"] = cfg.optimizer.residual_tolerance;
    jo["fd_relative_step"] = cfg.optimizer.fd_relative_step;
    j["optimizer"] = jo;

    return j.dump(2) + "\n";
}

}  // namespace bondheat

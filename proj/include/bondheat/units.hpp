#pragma once

#include <charconv>
#include <cstdlib>
#include <string>
#include <string_view>
#include <vector>

#include "bondheat/errors.hpp"

// Unit-suffixed quantity parsing and canonical SI formatting.
//
// Config files carry every dimensioned value as a string "NUMBER UNIT"
// (e.g. "2.0 mil", "80 C"). All internal computation is SI; conversion
// happens exactly once, here. 1 mil = 25.4e-6 m, fixed.

namespace bondheat::units {

enum class Dimension {
    length,            // m
    temperature,       // K (absolute; "C" adds 273.15)
    inverse_kelvin,    // 1/K
    time,              // s
    current,           // A
    heat_transfer,     // W/(m^2*K)
    conductivity,      // W/(m*K)
    resistivity,       // Ohm*m
    mass_density,      // kg/m^3
    specific_heat,     // J/(kg*K)
    dimensionless,     // no unit token
};

struct UnitEntry {
    const char* symbol;
    double factor;  // SI = value*factor (+offset for temperature)
    double offset;
};

inline const std::vector<UnitEntry>& unit_table(Dimension dim) {
    static const std::vector<UnitEntry> length = {
        {"m", 1.0, 0.0},     {"cm", 1e-2, 0.0},    {"mm", 1e-3, 0.0},
        {"um", 1e-6, 0.0},   {"mil", 25.4e-6, 0.0}, {"in", 0.0254, 0.0},
    };
    static const std::vector<UnitEntry> temperature = {
        {"K", 1.0, 0.0},
        {"C", 1.0, 273.15},
    };
    static const std::vector<UnitEntry> inverse_kelvin = {
        {"1/K", 1.0, 0.0},
        {"K^-1", 1.0, 0.0},
    };
    static const std::vector<UnitEntry> time = {
        {"s", 1.0, 0.0},
        {"ms", 1e-3, 0.0},
        {"us", 1e-6, 0.0},
        {"min", 60.0, 0.0},
    };
    static const std::vector<UnitEntry> current = {
        {"A", 1.0, 0.0},
        {"mA", 1e-3, 0.0},
    };
    static const std::vector<UnitEntry> heat_transfer = {
        {"W/(m^2*K)", 1.0, 0.0},
    };
    static const std::vector<UnitEntry> conductivity = {
        {"W/(m*K)", 1.0, 0.0},
    };
    static const std::vector<UnitEntry> resistivity = {
        {"Ohm*m", 1.0, 0.0},
        {"ohm*m", 1.0, 0.0},
    };
    static const std::vector<UnitEntry> mass_density = {
        {"kg/m^3", 1.0, 0.0},
    };
    static const std::vector<UnitEntry> specific_heat = {
        {"J/(kg*K)", 1.0, 0.0},
    };
    static const std::vector<UnitEntry> none = {};
    switch (dim) {
        case Dimension::length: return length;
        case Dimension::temperature: return temperature;
        case Dimension::inverse_kelvin: return inverse_kelvin;
        case Dimension::time: return time;
        case Dimension::current: return current;
        case Dimension::heat_transfer: return heat_transfer;
        case Dimension::conductivity: return conductivity;
        case Dimension::resistivity: return resistivity;
        case Dimension::mass_density: return mass_density;
        case Dimension::specific_heat: return specific_heat;
        case Dimension::dimensionless: return none;
    }
    return none;
}

// Canonical (SI) unit symbol used when serialising.
inline const char* canonical_symbol(Dimension dim) {
    switch (dim) {
        case Dimension::length: return "m";
        case Dimension::temperature: return "K";
        case Dimension::inverse_kelvin: return "1/K";
        case Dimension::time: return "s";
        case Dimension::current: return "A";
        case Dimension::heat_transfer: return "W/(m^2*K)";
        case Dimension::conductivity: return "W/(m*K)";
        case Dimension::resistivity: return "Ohm*m";
        case Dimension::mass_density: return "kg/m^3";
        case Dimension::specific_heat: return "J/(kg*K)";
        case Dimension::dimensionless: return "";
    }
    return "";
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

// Parse "NUMBER UNIT" into SI. The unit token is mandatory for dimensioned
// quantities and forbidden for dimensionless ones.
inline double parse_quantity(std::string_view text, Dimension dim, const std::string& field) {
    std::string_view s = trim(text);
    if (s.empty()) throw UnitError("parse_quantity: empty value for '" + field + "'");

    std::size_t split = s.find_first_of(" \t");
    std::string_view num_part = (split == std::string_view::npos) ? s : s.substr(0, split);
    std::string_view unit_part =
        (split == std::string_view::npos) ? std::string_view{} : trim(s.substr(split + 1));

    std::string num_str(num_part);
    char* end = nullptr;
    double value = std::strtod(num_str.c_str(), &end);
    if (end == num_str.c_str() || *end != '\0')
        throw UnitError("parse_quantity: bad number '" + num_str + "' for '" + field + "'");

    if (dim == Dimension::dimensionless) {
        if (!unit_part.empty())
            throw UnitError("parse_quantity: '" + field + "' is dimensionless, got unit '" +
                            std::string(unit_part) + "'");
        return value;
    }
    if (unit_part.empty())
        throw UnitError("parse_quantity: missing unit on '" + field + "' (got '" +
                        std::string(s) + "')");
    for (const UnitEntry& u : unit_table(dim)) {
        if (unit_part == u.symbol) return value * u.factor + u.offset;
    }
    throw UnitError("parse_quantity: unknown unit '" + std::string(unit_part) + "' for '" +
                    field + "'");
}

// Shortest decimal representation that round-trips through parsing.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// Canonical serialisation: SI value plus canonical symbol, e.g. "5.08e-05 m".
inline std::string format_quantity(double si_value, Dimension dim) {
    if (dim == Dimension::dimensionless) return format_double(si_value);
    return format_double(si_value) + " " + canonical_symbol(dim);
}

}  // namespace bondheat::units

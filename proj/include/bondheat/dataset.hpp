#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "bondheat/errors.hpp"
#include "bondheat/model.hpp"
#include "bondheat/units.hpp"

// Fusing-event ingestion and histogram filtering.
//
// Raw event files are CSV, one fusing event per row:
//   wire_id,material,position,I0_amps,t_fuse_seconds
// A header line repeating those column names is accepted and skipped, as are
// blank lines and lines starting with '#'. Every diagnostic names the file
// and 1-based line number. Duplicate rows are kept: repeated events carry
// statistical weight in the histogram stage.
//
// The histogram filter reduces a cloud of events to a short sequence of
// (mean I_0, median t_p) pairs, binned along the current axis. The median is
// deliberate: fusing delays are heavy-tailed and a mean would chase the
// stragglers. Bin-count and statistic choices are recorded in the returned
// metadata so downstream reports can state them.

namespace bondheat {

struct FuseEvent {
    std::string wire_id;
    std::string material;
    int position = 0;
    double current = 0.0;   // I_0, A
    double duration = 0.0;  // t_p, s
};

namespace detail {

inline std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(cur);
    for (auto& f : fields) f = std::string(units::trim(f));
    return fields;
}

inline double parse_positive(const std::string& text, const char* column, const std::string& where) {
    char* end = nullptr;
    double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0')
        throw ParseError("load_events: " + where + ": bad number '" + text + "' in column " +
                         column);
    if (!(v > 0.0))
        throw ParseError("load_events: " + where + ": " + column + " must be > 0, got " + text);
    return v;
}

inline int parse_position(const std::string& text, const std::string& where) {
    char* end = nullptr;
    long v = std::strtol(text.c_str(), &end, 10);
    if (end == text.c_str() || *end != '\0')
        throw ParseError("load_events: " + where + ": bad integer '" + text +
                         "' in column position");
    return static_cast<int>(v);
}

}  // namespace detail

inline std::vector<FuseEvent> load_events(std::istream& in, const std::string& name) {
    std::vector<FuseEvent> events;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string_view body = units::trim(line);
        if (body.empty() || body.front() == '#') continue;

        auto fields = detail::split_csv_row(std::string(body));
        if (fields.size() == 5 && fields[0] == "wire_id") continue;  // header row

        const std::string where = name + ":" + std::to_string(lineno);
        if (fields.size() != 5)
            throw ParseError("load_events: " + where + ": expected 5 fields "
                             "(wire_id,material,position,I0_amps,t_fuse_seconds), got " +
                             std::to_string(fields.size()));

        FuseEvent ev;
        ev.wire_id = fields[0];
        ev.material = fields[1];
        if (ev.wire_id.empty())
            throw ParseError("load_events: " + where + ": empty wire_id");
        if (!known_material(ev.material))
            throw ParseError("load_events: " + where + ": unknown material '" + ev.material +
                             "' (known: Au, Cu, Al)");
        ev.position = detail::parse_position(fields[2], where);
        ev.current = detail::parse_positive(fields[3], "I0_amps", where);
        ev.duration = detail::parse_positive(fields[4], "t_fuse_seconds", where);
        events.push_back(std::move(ev));
    }
    return events;
}

inline std::vector<FuseEvent> load_events(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("load_events: cannot open '" + path + "'");
    return load_events(in, path);
}

// ---------------------------------------------------------------------------
// Histogram filtering
// ---------------------------------------------------------------------------

struct FilteredPair {
    double current = 0.0;   // mean I_0 of the bin, A
    double duration = 0.0;  // median t_p of the bin, s
};

struct FilteredSeries {
    std::vector<FilteredPair> pairs;  // ordered by current, one per occupied bin

    // provenance, so reports can state how the pairs were made
    int bins_requested = 0;
    std::string bin_rule;  // "freedman-diaconis" or "fixed"
    std::string statistic = "mean I0, median t_p";

    // pair indices whose median duration increased over the previous pair;
    // a fusing characteristic should be nonincreasing in current, so entries
    // here are worth a warning but not a rejection
    std::vector<std::size_t> monotonicity_violations;

    bool monotone_nonincreasing() const { return monotonicity_violations.empty(); }
};

namespace detail {

inline double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

// Freedman-Diaconis bin count on the current axis: width 2*IQR/n^(1/3). Falls
// back to Sturges when the IQR degenerates (tight clusters, tiny samples).
// Always at least 2 and never more than the event count.
inline int freedman_diaconis_bins(const std::vector<FuseEvent>& events) {
    const std::size_t n = events.size();
    if (n < 2) return 2;
    std::vector<double> c;
    c.reserve(n);
    for (const auto& e : events) c.push_back(e.current);
    std::sort(c.begin(), c.end());
    const double span = c.back() - c.front();
    const double q1 = c[(n - 1) / 4], q3 = c[(3 * (n - 1)) / 4];
    const double width = 2.0 * (q3 - q1) / std::cbrt(static_cast<double>(n));
    int count;
    if (span <= 0.0 || width <= 0.0) {
        count = static_cast<int>(std::ceil(std::log2(static_cast<double>(n)))) + 1;  // Sturges
    } else {
        count = static_cast<int>(std::ceil(span / width));
    }
    return std::clamp(count, 2, static_cast<int>(n));
}

inline FilteredSeries histogram_filter(const std::vector<FuseEvent>& events, int bins,
                                       const std::string& bin_rule = "fixed") {
    if (bins < 2) throw ValidationError("histogram_filter: bins must be >= 2");
    if (events.empty()) throw ValidationError("histogram_filter: no events");

    double lo = events.front().current, hi = lo;
    for (const auto& e : events) {
        lo = std::min(lo, e.current);
        hi = std::max(hi, e.current);
    }

    FilteredSeries series;
    series.bins_requested = bins;
    series.bin_rule = bin_rule;

    // per-bin accumulators; a zero-width current range collapses to one bin
    std::vector<std::vector<double>> bin_t(static_cast<std::size_t>(bins));
    std::vector<double> bin_i_sum(static_cast<std::size_t>(bins), 0.0);
    std::vector<int> bin_n(static_cast<std::size_t>(bins), 0);
    const double width = (hi - lo) / bins;
    for (const auto& e : events) {
        int b = width > 0.0 ? static_cast<int>((e.current - lo) / width) : 0;
        b = std::clamp(b, 0, bins - 1);
        bin_t[static_cast<std::size_t>(b)].push_back(e.duration);
        bin_i_sum[static_cast<std::size_t>(b)] += e.current;
        ++bin_n[static_cast<std::size_t>(b)];
    }

    for (int b = 0; b < bins; ++b) {
        const auto ub = static_cast<std::size_t>(b);
        if (bin_n[ub] == 0) continue;  // empty bins dropped
        series.pairs.push_back(
            {bin_i_sum[ub] / bin_n[ub], detail::median_of(bin_t[ub])});
    }
    for (std::size_t i = 1; i < series.pairs.size(); ++i) {
        if (series.pairs[i].duration > series.pairs[i - 1].duration)
            series.monotonicity_violations.push_back(i);
    }
    return series;
}

inline FilteredSeries histogram_filter(const std::vector<FuseEvent>& events) {
    return histogram_filter(events, freedman_diaconis_bins(events), "freedman-diaconis");
}

}  // namespace bondheat

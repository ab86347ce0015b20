#pragma once

// Output back end: CSV traces (written so that reading them back is exact),
// the JSON run report, and a small self-contained SVG line chart. All
// formatting is deterministic — emitting the same data twice gives
// byte-identical files.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ipdt/errors.hpp"
#include "ipdt/metrics.hpp"
#include "ipdt/scenario.hpp"
#include "ipdt/sim.hpp"

namespace ipdt {

inline constexpr const char* kTraceCsvHeader = "t,r,d_in,u_ff,u_fb,u_applied,y";

/// Shortest decimal string that parses back to exactly the same double.
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline void ensure_parent_dir(const std::filesystem::path& file) {
    const std::filesystem::path dir = file.parent_path();
    if (!dir.empty()) std::filesystem::create_directories(dir);
}

// ---------------------------------------------------------------------------
// CSV trace.

inline std::string trace_to_csv(const SimTrace& trace) {
    std::string out = kTraceCsvHeader;
    out += '\n';
    for (std::size_t i = 0; i < trace.size(); ++i) {
        out += format_double(trace.t[i]);
        out += ',';
        out += format_double(trace.r[i]);
        out += ',';
        out += format_double(trace.d_in[i]);
        out += ',';
        out += format_double(trace.u_ff[i]);
        out += ',';
        out += format_double(trace.u_fb[i]);
        out += ',';
        out += format_double(trace.u_applied[i]);
        out += ',';
        out += format_double(trace.y[i]);
        out += '\n';
    }
    return out;
}

inline void write_trace_csv(const std::string& path, const SimTrace& trace) {
    ensure_parent_dir(path);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write file '" + path + "'");
    out << trace_to_csv(trace);
}

inline SimTrace parse_trace_csv(std::istream& in, const std::string& origin) {
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("empty CSV", origin);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kTraceCsvHeader)
        throw ValidationError(std::string("CSV header must be '") + kTraceCsvHeader + "'", origin);

    SimTrace trace;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        double cols[7];
        const char* p = line.c_str();
        const char* end = p + line.size();
        for (int c = 0; c < 7; ++c) {
            if (c > 0) {
                if (p >= end || *p != ',')
                    throw ValidationError("expected 7 comma-separated values at line " +
                                              std::to_string(line_no),
                                          origin);
                ++p;
            }
            char* after = nullptr;
            cols[c] = std::strtod(p, &after);
            if (after == p)
                throw ValidationError("bad number at line " + std::to_string(line_no), origin);
            p = after;
        }
        if (p != end)
            throw ValidationError("trailing characters at line " + std::to_string(line_no),
                                  origin);

        trace.t.push_back(cols[0]);
        trace.r.push_back(cols[1]);
        trace.d_in.push_back(cols[2]);
        trace.u_ff.push_back(cols[3]);
        trace.u_fb.push_back(cols[4]);
        trace.u_applied.push_back(cols[5]);
        trace.y.push_back(cols[6]);
    }
    if (trace.size() < 2) throw ValidationError("CSV holds fewer than two samples", origin);
    return trace;
}

inline SimTrace read_trace_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open file '" + path + "'");
    return parse_trace_csv(in, path);
}

// ---------------------------------------------------------------------------
// JSON report.

namespace detail {
inline ordered_json json_number(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}
}  // namespace detail

/// Report entry for one run; every run repeats the scenario name so each
/// object is self-contained.
inline ordered_json run_report(const std::string& scenario, const RunResult& run) {
    ordered_json j;
    j["scenario"] = scenario;
    j["label"] = run.label;
    j["sweep_point"] = run.sweep_point;

    if (run.tuning) {
        j["gains"] = {{"kc", detail::json_number(run.tuning->gains.kc)},
                      {"ti", detail::json_number(run.tuning->gains.ti)}};
        j["tuning"] = {{"wn", detail::json_number(run.tuning->wn)},
                       {"zeta", detail::json_number(run.tuning->zeta)},
                       {"ts_estimate", detail::json_number(run.tuning->ts_estimate)},
                       {"phase_margin_deg", detail::json_number(run.tuning->phase_margin_deg)},
                       {"crossover_freq", detail::json_number(run.tuning->crossover_freq)}};
    } else if (run.pid_gains) {
        j["gains"] = {{"kc", detail::json_number(run.pid_gains->kc)},
                      {"ti", detail::json_number(run.pid_gains->ti)},
                      {"td", detail::json_number(run.pid_gains->td)}};
    } else {
        j["gains"] = nullptr;
    }

    if (run.metrics) {
        j["metrics"] = {{"rise_time", detail::json_number(run.metrics->rise_time)},
                        {"settling_time", detail::json_number(run.metrics->settling_time)},
                        {"overshoot_pct", detail::json_number(run.metrics->overshoot_pct)},
                        {"iae", detail::json_number(run.metrics->iae)}};
    } else {
        j["metrics"] = nullptr;
    }
    if (!run.metrics_error.empty()) j["metrics_error"] = run.metrics_error;

    const bool diverged =
        run.metrics ? run.metrics->diverged : run.trace.fault_time.has_value();
    j["flags"] = {{"settled", run.metrics ? run.metrics->settled : false},
                  {"diverged", diverged},
                  {"saturated", run.saturated},
                  {"low_phase_margin", run.tuning ? run.tuning->low_phase_margin : false}};

    j["files"] = {{"csv", run.label + ".csv"}, {"svg", run.label + ".svg"}};
    return j;
}

inline ordered_json scenario_report(const ScenarioOutcome& outcome) {
    ordered_json j;
    j["scenario"] = outcome.name;
    j["runs"] = ordered_json::array();
    for (const RunResult& run : outcome.runs) j["runs"].push_back(run_report(outcome.name, run));
    return j;
}

inline void write_json_file(const std::string& path, const ordered_json& j) {
    ensure_parent_dir(path);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write file '" + path + "'");
    out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// SVG chart.

struct SvgSeries {
    std::string label;
    const std::vector<double>* x = nullptr;
    const std::vector<double>* y = nullptr;
    std::string color;
};

namespace detail {

inline void svg_appendf(std::string& out, const char* fmt, ...)
    __attribute__((format(printf, 2, 3)));

inline void svg_appendf(std::string& out, const char* fmt, ...) {
    char buf[512];
    va_list args;
    va_start(args, fmt);
    const int n = std::vsnprintf(buf, sizeof(buf), fmt, args);
    va_end(args);
    if (n > 0) out.append(buf, static_cast<std::size_t>(std::min<int>(n, sizeof(buf) - 1)));
}

/// Tick spacing covering range/target_ticks, rounded to 1/2/5 decades.
inline double nice_tick(double range, int target_ticks) {
    const double raw = range / target_ticks;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double norm = raw / mag;
    const double step = norm < 1.5 ? 1.0 : norm < 3.0 ? 2.0 : norm < 7.0 ? 5.0 : 10.0;
    return step * mag;
}

inline std::string svg_num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

/// One axis-gridded panel with polyline series and a legend, appended at the
/// given offset inside the parent SVG.
inline void svg_panel(std::string& out, double off_x, double off_y, double width, double height,
                      const std::string& title, const std::string& y_label,
                      const std::vector<SvgSeries>& series) {
    const double ml = 62.0, mr = 16.0, mt = 28.0, mb = 34.0;
    const double px = off_x + ml, py = off_y + mt;
    const double pw = width - ml - mr, ph = height - mt - mb;

    double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
    bool first = true;
    for (const SvgSeries& s : series) {
        for (std::size_t i = 0; i < s.x->size(); ++i) {
            const double xv = (*s.x)[i], yv = (*s.y)[i];
            if (!std::isfinite(xv) || !std::isfinite(yv)) continue;
            if (first) {
                x_min = x_max = xv;
                y_min = y_max = yv;
                first = false;
            } else {
                x_min = std::min(x_min, xv);
                x_max = std::max(x_max, xv);
                y_min = std::min(y_min, yv);
                y_max = std::max(y_max, yv);
            }
        }
    }
    if (x_max - x_min < 1e-12) x_max = x_min + 1.0;
    if (y_max - y_min < 1e-12) {
        y_max += 0.5;
        y_min -= 0.5;
    } else {
        const double pad = 0.05 * (y_max - y_min);
        y_max += pad;
        y_min -= pad;
    }

    const auto map_x = [&](double v) { return px + (v - x_min) / (x_max - x_min) * pw; };
    const auto map_y = [&](double v) { return py + ph - (v - y_min) / (y_max - y_min) * ph; };

    svg_appendf(out, "<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" "
                     "fill=\"white\" stroke=\"#444\" stroke-width=\"1\"/>\n",
                px, py, pw, ph);
    svg_appendf(out, "<text x=\"%.1f\" y=\"%.1f\" font-size=\"13\" text-anchor=\"middle\" "
                     "font-family=\"sans-serif\">%s</text>\n",
                px + pw / 2.0, off_y + 18.0, title.c_str());

    const double xt = nice_tick(x_max - x_min, 6);
    for (double v = std::ceil(x_min / xt) * xt; v <= x_max + 1e-9 * xt; v += xt) {
        const double gx = map_x(v);
        svg_appendf(out, "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                         "stroke=\"#ddd\" stroke-width=\"1\"/>\n",
                    gx, py, gx, py + ph);
        svg_appendf(out, "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" text-anchor=\"middle\" "
                         "font-family=\"sans-serif\">%s</text>\n",
                    gx, py + ph + 16.0, svg_num(v).c_str());
    }
    const double yt = nice_tick(y_max - y_min, 5);
    for (double v = std::ceil(y_min / yt) * yt; v <= y_max + 1e-9 * yt; v += yt) {
        const double gy = map_y(v);
        svg_appendf(out, "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                         "stroke=\"#ddd\" stroke-width=\"1\"/>\n",
                    px, gy, px + pw, gy);
        svg_appendf(out, "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" text-anchor=\"end\" "
                         "font-family=\"sans-serif\">%s</text>\n",
                    px - 6.0, gy + 4.0, svg_num(v).c_str());
    }
    svg_appendf(out, "<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" text-anchor=\"middle\" "
                     "font-family=\"sans-serif\" transform=\"rotate(-90 %.1f %.1f)\">%s</text>\n",
                off_x + 14.0, py + ph / 2.0, off_x + 14.0, py + ph / 2.0, y_label.c_str());

    for (const SvgSeries& s : series) {
        std::string pts;
        for (std::size_t i = 0; i < s.x->size(); ++i) {
            if (!std::isfinite((*s.y)[i])) continue;
            svg_appendf(pts, "%.2f,%.2f ", map_x((*s.x)[i]), map_y((*s.y)[i]));
        }
        svg_appendf(out, "<polyline points=\"%s\" fill=\"none\" stroke=\"%s\" "
                         "stroke-width=\"1.5\"/>\n",
                    pts.c_str(), s.color.c_str());
    }

    double lx = px + pw - 10.0;
    for (std::size_t i = series.size(); i-- > 0;) {
        const SvgSeries& s = series[i];
        lx -= 18.0 + 7.0 * static_cast<double>(s.label.size());
        svg_appendf(out, "<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" "
                         "stroke=\"%s\" stroke-width=\"2\"/>\n",
                    lx, py + 12.0, lx + 14.0, py + 12.0, s.color.c_str());
        svg_appendf(out, "<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" "
                         "font-family=\"sans-serif\">%s</text>\n",
                    lx + 18.0, py + 16.0, s.label.c_str());
    }
}

}  // namespace detail

/// Two-panel run chart: output vs setpoint on top, applied control below.
inline std::string run_svg(const SimTrace& trace, const std::string& title) {
    const double width = 900.0, panel_h = 330.0;
    std::string out;
    detail::svg_appendf(out, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" "
                             "height=\"%.0f\" viewBox=\"0 0 %.0f %.0f\">\n",
                        width, 2.0 * panel_h, width, 2.0 * panel_h);
    out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    std::vector<SvgSeries> top{{"r", &trace.t, &trace.r, "#d62728"},
                               {"y", &trace.t, &trace.y, "#1f77b4"}};
    detail::svg_panel(out, 0.0, 0.0, width, panel_h, title, "output", top);

    std::vector<SvgSeries> bottom{{"u_applied", &trace.t, &trace.u_applied, "#2ca02c"}};
    detail::svg_panel(out, 0.0, panel_h, width, panel_h, "applied control", "u", bottom);

    out += "</svg>\n";
    return out;
}

inline void write_run_svg(const std::string& path, const SimTrace& trace,
                          const std::string& title) {
    ensure_parent_dir(path);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write file '" + path + "'");
    out << run_svg(trace, title);
}

}  // namespace ipdt

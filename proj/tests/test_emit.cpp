#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <sstream>
#include <string>

#include "ipdt/emit.hpp"
#include "ipdt/scenario.hpp"

namespace ipdt {
namespace {

SimTrace small_trace() {
    SimTrace tr;
    for (int k = 0; k <= 40; ++k) {
        const double t = k * 0.1;
        tr.t.push_back(t);
        tr.r.push_back(t >= 1.0 ? 1.0 : 0.0);
        tr.d_in.push_back(0.0);
        tr.u_ff.push_back(std::sin(0.37 * k) * 1e-3);
        tr.u_fb.push_back(std::cos(1.13 * k) / 7.0);
        tr.u_applied.push_back(std::sin(0.37 * k) * 1e-3 - std::cos(1.13 * k) / 7.0);
        tr.y.push_back(1.0 / (k + 1.0));
    }
    return tr;
}

TEST(FormatDouble, ShortestRoundTrip) {
    for (const double v : {0.1, 1.0 / 3.0, -2.5e-17, 6.02214076e23, 0.0, -0.055,
                           118.57707509881423, std::numeric_limits<double>::denorm_min()}) {
        const std::string s = format_double(v);
        EXPECT_EQ(std::strtod(s.c_str(), nullptr), v) << s;
    }
    EXPECT_EQ(format_double(0.1), "0.1");
    EXPECT_EQ(format_double(2.0), "2");
}

TEST(TraceCsv, WriteReadRoundTripIsExact) {
    const SimTrace tr = small_trace();
    const std::string csv = trace_to_csv(tr);
    EXPECT_EQ(csv, trace_to_csv(tr));  // deterministic

    std::istringstream in(csv);
    const SimTrace back = parse_trace_csv(in, "mem");
    EXPECT_TRUE(back == tr);
    EXPECT_EQ(trace_to_csv(back), csv);  // byte-identical second generation
}

TEST(TraceCsv, FileRoundTrip) {
    const std::string path =
        (std::filesystem::path(::testing::TempDir()) / "roundtrip.csv").string();
    const SimTrace tr = small_trace();
    write_trace_csv(path, tr);
    EXPECT_TRUE(read_trace_csv(path) == tr);
}

TEST(TraceCsv, RejectsMalformedInput) {
    {
        std::istringstream in("time,y\n0,1\n");
        EXPECT_THROW(parse_trace_csv(in, "mem"), ValidationError);
    }
    {
        std::istringstream in(std::string(kTraceCsvHeader) + "\n0,0,0,0,0,0,zebra\n1,0,0,0,0,0,1\n");
        EXPECT_THROW(parse_trace_csv(in, "mem"), ValidationError);
    }
    {
        std::istringstream in(std::string(kTraceCsvHeader) + "\n0,0,0,0,0,0,1,9\n1,0,0,0,0,0,1\n");
        EXPECT_THROW(parse_trace_csv(in, "mem"), ValidationError);
    }
    {
        std::istringstream in(std::string(kTraceCsvHeader) + "\n0,0,0,0,0,0,1\n");
        EXPECT_THROW(parse_trace_csv(in, "mem"), ValidationError);  // one sample only
    }
    {
        std::istringstream in("");
        EXPECT_THROW(parse_trace_csv(in, "mem"), ValidationError);
    }
}

TEST(TraceCsv, AcceptsCrLfAndBlankLines) {
    std::istringstream in(std::string(kTraceCsvHeader) +
                          "\r\n0,0,0,0,0,0,0\r\n\r\n0.1,0,0,0,0,0,0.5\r\n");
    const SimTrace tr = parse_trace_csv(in, "mem");
    ASSERT_EQ(tr.size(), 2u);
    EXPECT_DOUBLE_EQ(tr.y[1], 0.5);
}

TEST(RunReport, SchemaForAClosedLoopRun) {
    ordered_json doc = ordered_json::parse(R"({
        "name": "unit",
        "plant": {"type": "ipdt", "kp": 0.05, "dead_time": 0.5},
        "controller": {"type": "ipi"},
        "setpoint": {"type": "step", "amplitude": 1.0, "time": 1.0},
        "sim": {"horizon": 40.0}
    })");
    const RunResult run = execute_scenario(parse_scenario(doc, "."));
    const ordered_json j = run_report("unit", run);

    EXPECT_EQ(j.at("scenario"), "unit");
    EXPECT_EQ(j.at("label"), "base");
    EXPECT_TRUE(j.at("sweep_point").is_object());
    ASSERT_TRUE(j.at("gains").is_object());
    EXPECT_TRUE(j.at("gains").contains("kc"));
    EXPECT_TRUE(j.at("gains").contains("ti"));
    for (const char* key : {"wn", "zeta", "ts_estimate", "phase_margin_deg", "crossover_freq"})
        EXPECT_TRUE(j.at("tuning").contains(key)) << key;
    ASSERT_TRUE(j.at("metrics").is_object());
    for (const char* key : {"rise_time", "settling_time", "overshoot_pct", "iae"})
        EXPECT_TRUE(j.at("metrics").contains(key)) << key;
    for (const char* key : {"settled", "diverged", "saturated", "low_phase_margin"})
        EXPECT_TRUE(j.at("flags").at(key).is_boolean()) << key;
    EXPECT_EQ(j.at("files").at("csv"), "base.csv");
    EXPECT_EQ(j.at("files").at("svg"), "base.svg");
    EXPECT_FALSE(j.contains("metrics_error"));
}

TEST(RunReport, OpenLoopRunHasNullGainsAndMetrics) {
    RunResult run;
    run.label = "base";
    run.sweep_point = ordered_json::object();
    run.trace = small_trace();
    const ordered_json j = run_report("ol", run);
    EXPECT_TRUE(j.at("gains").is_null());
    EXPECT_TRUE(j.at("metrics").is_null());
    EXPECT_FALSE(j.at("flags").at("settled").get<bool>());
}

TEST(RunReport, NonFiniteMetricsSerializeAsNull) {
    RunResult run;
    run.label = "x";
    run.sweep_point = ordered_json::object();
    run.trace = small_trace();
    StepMetrics m;  // all NaN defaults
    m.iae = 2.5;
    run.metrics = m;
    const ordered_json j = run_report("s", run);
    EXPECT_TRUE(j.at("metrics").at("rise_time").is_null());
    EXPECT_DOUBLE_EQ(j.at("metrics").at("iae").get<double>(), 2.5);
}

TEST(RunReport, PidGainsIncludeDerivativeTime) {
    RunResult run;
    run.label = "x";
    run.sweep_point = ordered_json::object();
    run.pid_gains = PidGains(1.65, 48.0, 3.0, 10.0);
    run.trace = small_trace();
    const ordered_json j = run_report("s", run);
    EXPECT_DOUBLE_EQ(j.at("gains").at("td").get<double>(), 3.0);
    EXPECT_FALSE(j.contains("tuning"));
}

TEST(ScenarioReport, CollectsAllRuns) {
    ScenarioOutcome outcome;
    outcome.name = "demo";
    for (int i = 0; i < 3; ++i) {
        RunResult run;
        run.label = "run" + std::to_string(i);
        run.sweep_point = ordered_json::object();
        run.trace = small_trace();
        outcome.runs.push_back(std::move(run));
    }
    const ordered_json j = scenario_report(outcome);
    EXPECT_EQ(j.at("scenario"), "demo");
    ASSERT_EQ(j.at("runs").size(), 3u);
    EXPECT_EQ(j.at("runs")[2].at("label"), "run2");
}

TEST(Svg, WellFormedAndDeterministic) {
    const SimTrace tr = small_trace();
    const std::string svg = run_svg(tr, "demo run");
    EXPECT_EQ(svg, run_svg(tr, "demo run"));
    EXPECT_NE(svg.find("<svg xmlns"), std::string::npos);
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
    // Three series: setpoint and output on the top panel, control below.
    std::size_t polylines = 0;
    for (std::size_t pos = svg.find("<polyline"); pos != std::string::npos;
         pos = svg.find("<polyline", pos + 1))
        ++polylines;
    EXPECT_EQ(polylines, 3u);
    EXPECT_NE(svg.find("demo run"), std::string::npos);
}

TEST(Svg, SkipsNonFiniteSamples) {
    SimTrace tr = small_trace();
    tr.y[5] = std::numeric_limits<double>::quiet_NaN();
    const std::string svg = run_svg(tr, "with gap");
    EXPECT_NE(svg.find("</svg>"), std::string::npos);
    EXPECT_EQ(svg.find("nan"), std::string::npos);
}

TEST(WriteJson, CreatesParentDirectories) {
    const std::filesystem::path dir =
        std::filesystem::path(::testing::TempDir()) / "nested" / "deeper";
    std::filesystem::remove_all(dir.parent_path());
    const std::string path = (dir / "report.json").string();
    write_json_file(path, ordered_json{{"ok", true}});
    const ordered_json back = load_json_file(path);
    EXPECT_TRUE(back.at("ok").get<bool>());
}

}  // namespace
}  // namespace ipdt

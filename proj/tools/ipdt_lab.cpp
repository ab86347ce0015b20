// ipdt-lab: scenario runner and tuning front end for the ipdt library.
//
// Subcommands:
//   run <scenario.json>    execute a scenario (sweep section ignored)
//   sweep <scenario.json>  expand the sweep section and run every point
//   tune                   print I+PI gains and margins for a given plant
//   identify <trace.csv>   fit (kp, d) to a recorded open-loop step test
//
// Exit codes: 0 success, 2 bad configuration or input data, 3 runtime error.
// Output files land under --out, $IPDT_OUT_DIR, or ./out, in that order.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ipdt/emit.hpp"
#include "ipdt/identify.hpp"
#include "ipdt/scenario.hpp"
#include "ipdt/tuning.hpp"

namespace {

std::string output_root(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("IPDT_OUT_DIR"); env && *env) return env;
    return "out";
}

std::string fmt(double v) {
    if (!std::isfinite(v)) return "-";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

void print_run_summary(const ipdt::RunResult& run) {
    std::string flags;
    const bool diverged =
        run.metrics ? run.metrics->diverged : run.trace.fault_time.has_value();
    if (run.metrics && run.metrics->settled) flags += " settled";
    if (diverged) flags += " DIVERGED";
    if (run.saturated) flags += " saturated";
    if (run.tuning && run.tuning->low_phase_margin) flags += " low-phase-margin";
    if (flags.empty()) flags = " -";

    std::printf("  %-28s", run.label.c_str());
    if (run.metrics) {
        std::printf(" rise=%-8s settle=%-8s overshoot=%6s%%  iae=%-8s",
                    fmt(run.metrics->rise_time).c_str(), fmt(run.metrics->settling_time).c_str(),
                    fmt(run.metrics->overshoot_pct).c_str(), fmt(run.metrics->iae).c_str());
    } else if (!run.metrics_error.empty()) {
        std::printf(" metrics: %s", run.metrics_error.c_str());
    } else {
        std::printf(" (open loop, no metrics)");
    }
    std::printf(" |%s\n", flags.c_str());
}

int run_scenario_command(const std::string& file, const std::string& out_flag, bool expand,
                         const std::string& sweep_param = std::string(),
                         const std::vector<double>& sweep_values = {}) {
    ipdt::ordered_json root = ipdt::load_json_file(file);
    if (!sweep_param.empty()) {
        // A command-line axis replaces whatever sweep the file declares.
        root["sweep"] = ipdt::ordered_json::object({{sweep_param, sweep_values}});
    }
    if (expand && (!root.is_object() || !root.contains("sweep")))
        throw ipdt::ValidationError(
            "scenario has no sweep section; pass --param/--values or use 'run'", file);

    const std::string base_dir = std::filesystem::path(file).parent_path().string();
    const ipdt::ScenarioOutcome outcome = ipdt::run_scenario(root, base_dir, expand);

    const std::filesystem::path dir =
        std::filesystem::path(output_root(out_flag)) / outcome.name;
    for (const ipdt::RunResult& run : outcome.runs) {
        ipdt::write_trace_csv((dir / (run.label + ".csv")).string(), run.trace);
        ipdt::write_run_svg((dir / (run.label + ".svg")).string(), run.trace,
                            outcome.name + " / " + run.label);
    }
    ipdt::write_json_file((dir / "report.json").string(), ipdt::scenario_report(outcome));

    std::printf("%s: %zu run%s\n", outcome.name.c_str(), outcome.runs.size(),
                outcome.runs.size() == 1 ? "" : "s");
    for (const ipdt::RunResult& run : outcome.runs) {
        print_run_summary(run);
        if (run.tuning && run.tuning->low_phase_margin)
            std::fprintf(stderr,
                         "warning: %s: phase margin %.1f deg is below %.0f deg; "
                         "the loop is fragile against unmodelled lag\n",
                         run.label.c_str(), run.tuning->phase_margin_deg,
                         ipdt::kLowMarginThresholdDeg);
    }
    std::printf("wrote %s\n", dir.string().c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ipdt-lab: simulation and tuning toolkit for integrating-plus-dead-time loops"};
    app.require_subcommand(1);

    std::string scenario_file, out_dir;
    CLI::App* cmd_run = app.add_subcommand("run", "execute a scenario file");
    cmd_run->add_option("scenario", scenario_file, "scenario JSON file")->required();
    cmd_run->add_option("--out", out_dir, "output root (default: $IPDT_OUT_DIR or ./out)");

    std::string sweep_param;
    std::vector<double> sweep_values;
    CLI::App* cmd_sweep = app.add_subcommand("sweep", "expand and run a scenario's sweep");
    cmd_sweep->add_option("scenario", scenario_file, "scenario JSON file")->required();
    cmd_sweep->add_option("--out", out_dir, "output root (default: $IPDT_OUT_DIR or ./out)");
    CLI::Option* opt_param =
        cmd_sweep->add_option("--param", sweep_param,
                              "dotted config path to sweep (overrides the file's sweep)");
    cmd_sweep->add_option("--values", sweep_values, "comma-separated values for --param")
        ->delimiter(',')
        ->needs(opt_param);
    opt_param->needs(cmd_sweep->get_option("--values"));

    double kp = 0.0, dead_time = 0.0, zeta = 0.7, k = 1.0;
    std::optional<double> wn;
    CLI::App* cmd_tune = app.add_subcommand("tune", "compute I+PI gains for an IPDT plant");
    cmd_tune->add_option("--kp", kp, "integrator gain of the plant")->required();
    cmd_tune->add_option("--dead-time,--d", dead_time, "plant dead time [s]")->required();
    cmd_tune->add_option("--zeta", zeta, "target damping ratio (default 0.7)");
    cmd_tune->add_option("--k", k, "bandwidth aggressiveness factor (default 1)");
    cmd_tune->add_option("--wn,--omega-n", wn,
                         "target natural frequency [rad/s]; bypasses the rule");

    std::string trace_file;
    std::optional<double> id_step_amp, id_step_time;
    CLI::App* cmd_identify =
        app.add_subcommand("identify", "fit (kp, d) to a recorded step-test CSV");
    cmd_identify->add_option("trace", trace_file, "trace CSV file")->required();
    cmd_identify->add_option("--step-amplitude", id_step_amp,
                             "known input step size (overrides the recorded estimate)");
    cmd_identify->add_option("--step-time", id_step_time,
                             "known step onset time [s] (overrides auto-detection)");

    try {
        app.parse(argc, argv);

        if (cmd_run->parsed()) return run_scenario_command(scenario_file, out_dir, false);
        if (cmd_sweep->parsed())
            return run_scenario_command(scenario_file, out_dir, true, sweep_param, sweep_values);

        if (cmd_tune->parsed()) {
            const ipdt::TuningResult r = wn ? ipdt::tune_ipi_at(kp, dead_time, *wn, zeta)
                                            : ipdt::tune_ipi(kp, dead_time,
                                                             ipdt::TuningSpec(zeta, k));
            ipdt::ordered_json j;
            j["plant"] = {{"kp", kp}, {"dead_time", dead_time}};
            j["zeta"] = r.zeta;
            j["wn"] = r.wn;
            j["ts_estimate"] = r.ts_estimate;
            j["gains"] = {{"kc", r.gains.kc}, {"ti", r.gains.ti}};
            j["phase_margin_deg"] = r.phase_margin_deg;
            j["crossover_freq"] = r.crossover_freq;
            j["low_phase_margin"] = r.low_phase_margin;
            std::cout << j.dump(2) << '\n';
            if (r.low_phase_margin)
                std::fprintf(stderr,
                             "warning: phase margin %.1f deg is below %.0f deg; "
                             "the loop is fragile against unmodelled lag\n",
                             r.phase_margin_deg, ipdt::kLowMarginThresholdDeg);
            return 0;
        }

        if (cmd_identify->parsed()) {
            const ipdt::SimTrace trace = ipdt::read_trace_csv(trace_file);
            ipdt::IdentifyOverrides overrides;
            overrides.step_amplitude = id_step_amp;
            overrides.step_time = id_step_time;
            const ipdt::IdentifiedModel m = ipdt::identify_ipdt(trace, overrides);
            ipdt::ordered_json j;
            j["kp"] = m.kp;
            j["dead_time"] = m.d;
            j["diagnostics"] = {{"fit_rms_residual", m.diagnostics.fit_rms_residual},
                                {"slope_variation", m.diagnostics.slope_variation},
                                {"linear_fraction", m.diagnostics.linear_fraction},
                                {"samples_used", m.diagnostics.samples_used}};
            std::cout << j.dump(2) << '\n';
            return 0;
        }
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ipdt::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
    return 0;
}

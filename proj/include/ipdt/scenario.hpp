#pragma once

// Scenario runner: JSON configuration -> plant + controller -> recorded runs
// with metrics and flags. A scenario describes one loop; an optional sweep
// section expands it into the cross product of parameter overrides.

#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ipdt/control.hpp"
#include "ipdt/errors.hpp"
#include "ipdt/identify.hpp"
#include "ipdt/metrics.hpp"
#include "ipdt/process.hpp"
#include "ipdt/sim.hpp"
#include "ipdt/tuning.hpp"

namespace ipdt {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Strict JSON access helpers: unknown keys and wrong types are configuration
// errors, reported with the dotted path of the offending entry.

namespace cfg {

inline std::string join(const std::string& base, const std::string& key) {
    return base.empty() ? key : base + "." + key;
}

inline void check_keys(const ordered_json& obj, std::initializer_list<const char*> allowed,
                       const std::string& path) {
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* key : allowed)
            if (item.key() == key) {
                known = true;
                break;
            }
        if (!known) throw ValidationError("unknown key '" + item.key() + "'", path);
    }
}

inline const ordered_json* find(const ordered_json& obj, const char* key) {
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

inline double as_number(const ordered_json& j, const std::string& path) {
    if (!j.is_number()) throw ValidationError("expected a number", path);
    return j.get<double>();
}

inline double number_or(const ordered_json& obj, const char* key, double fallback,
                        const std::string& path) {
    const ordered_json* j = find(obj, key);
    return j ? as_number(*j, join(path, key)) : fallback;
}

inline double required_number(const ordered_json& obj, const char* key, const std::string& path) {
    const ordered_json* j = find(obj, key);
    if (!j) throw ValidationError("missing required key '" + std::string(key) + "'", path);
    return as_number(*j, join(path, key));
}

inline std::string required_string(const ordered_json& obj, const char* key,
                                   const std::string& path) {
    const ordered_json* j = find(obj, key);
    if (!j || !j->is_string())
        throw ValidationError("missing or non-string key '" + std::string(key) + "'", path);
    return j->get<std::string>();
}

}  // namespace cfg

// ---------------------------------------------------------------------------
// Parsed configuration.

struct PlantConfig {
    enum class Type { ipdt, auv };
    Type type = Type::ipdt;
    // ipdt
    double kp = 1.0;
    double dead_time = 0.0;
    double initial_y = 0.0;
    // auv
    std::string coefficients;  ///< resolved path of the coefficient file
    double u_surge = 0.8;
};

struct IdentifyConfig {
    double amplitude = 0.03491;  ///< stern-plane step [rad]
    double horizon = 60.0;       ///< step-test length [s]
    double step_h = 0.05;
};

struct TuningConfig {
    double zeta = 0.7;
    double k = 1.0;
    std::optional<double> wn;            ///< direct bandwidth choice
    std::optional<PiGains> gains;        ///< explicit gains bypass tuning
    std::optional<double> design_kp;     ///< pin the design plant gain
    std::optional<double> design_d;      ///< pin the design dead time
    bool identify_kp = false;            ///< obtain (kp, d) from a built-in step test
    IdentifyConfig identify;
};

struct ControllerConfig {
    enum class Type { ipi, pid, open_loop };
    Type type = Type::ipi;
    TuningConfig tuning;                        // ipi
    std::optional<PidGains> pid_gains;          // pid
    Signal command;                             // open_loop
    std::optional<ActuatorLimits> limits;       // explicit limits on an ipdt loop
};

struct ScenarioConfig {
    std::string name;
    PlantConfig plant;
    ControllerConfig controller;
    Signal setpoint;
    Signal disturbance;
    std::optional<double> step_h;
    double horizon = 0.0;
};

// ---------------------------------------------------------------------------
// Parsing.

namespace cfg {

inline Signal parse_signal(const ordered_json& j, const std::string& path) {
    const auto parse_term = [&](const ordered_json& term, const std::string& tpath) {
        if (!term.is_object()) throw ValidationError("expected a signal term object", tpath);
        const std::string type = required_string(term, "type", tpath);
        if (type == "step") {
            check_keys(term, {"type", "amplitude", "time"}, tpath);
            return Signal::step(required_number(term, "amplitude", tpath),
                                number_or(term, "time", 0.0, tpath));
        }
        if (type == "ramp") {
            check_keys(term, {"type", "slope", "time"}, tpath);
            return Signal::ramp(required_number(term, "slope", tpath),
                                number_or(term, "time", 0.0, tpath));
        }
        if (type == "constant") {
            check_keys(term, {"type", "value"}, tpath);
            return Signal::constant(required_number(term, "value", tpath));
        }
        throw ValidationError("unknown signal type '" + type + "'", join(tpath, "type"));
    };

    if (j.is_object()) return parse_term(j, path);
    if (!j.is_array()) throw ValidationError("expected a signal term or array of terms", path);
    Signal s = Signal::zero();
    for (std::size_t i = 0; i < j.size(); ++i)
        s.add(parse_term(j[i], path + "[" + std::to_string(i) + "]"));
    return s;
}

inline PlantConfig parse_plant(const ordered_json& j, const std::string& base_dir,
                               const std::string& path) {
    if (!j.is_object()) throw ValidationError("expected an object", path);
    PlantConfig p;
    const std::string type = required_string(j, "type", path);
    if (type == "ipdt") {
        check_keys(j, {"type", "kp", "dead_time", "initial_y"}, path);
        p.type = PlantConfig::Type::ipdt;
        p.kp = required_number(j, "kp", path);
        p.dead_time = number_or(j, "dead_time", 0.0, path);
        p.initial_y = number_or(j, "initial_y", 0.0, path);
        if (p.kp == 0.0) throw ValidationError("process gain must be nonzero", join(path, "kp"));
        if (p.dead_time < 0.0)
            throw ValidationError("dead time must be >= 0", join(path, "dead_time"));
    } else if (type == "auv") {
        check_keys(j, {"type", "coefficients", "u_surge"}, path);
        p.type = PlantConfig::Type::auv;
        const std::string file = required_string(j, "coefficients", path);
        p.coefficients = (std::filesystem::path(base_dir) / file).string();
        p.u_surge = number_or(j, "u_surge", 0.8, path);
        if (!(p.u_surge > 0.0))
            throw ValidationError("surge speed must be > 0", join(path, "u_surge"));
    } else {
        throw ValidationError("unknown plant type '" + type + "'", join(path, "type"));
    }
    return p;
}

inline TuningConfig parse_tuning(const ordered_json& j, const std::string& path) {
    if (!j.is_object()) throw ValidationError("expected an object", path);
    check_keys(j, {"zeta", "k", "wn", "kc", "ti", "kp", "dead_time", "identify"}, path);
    TuningConfig t;
    t.zeta = number_or(j, "zeta", 0.7, path);
    t.k = number_or(j, "k", 1.0, path);
    if (!(t.zeta > 0.0)) throw ValidationError("damping ratio must be > 0", join(path, "zeta"));
    if (!(t.k > 0.0)) throw ValidationError("aggressiveness must be > 0", join(path, "k"));

    if (const ordered_json* wn = find(j, "wn")) {
        t.wn = as_number(*wn, join(path, "wn"));
        if (!(*t.wn > 0.0))
            throw ValidationError("natural frequency must be > 0", join(path, "wn"));
    }

    const ordered_json* kc = find(j, "kc");
    const ordered_json* ti = find(j, "ti");
    if ((kc != nullptr) != (ti != nullptr))
        throw ValidationError("explicit gains need both kc and ti", path);
    if (kc) t.gains = PiGains(as_number(*kc, join(path, "kc")), as_number(*ti, join(path, "ti")));

    if (const ordered_json* kp = find(j, "kp")) {
        if (kp->is_string()) {
            if (kp->get<std::string>() != "identified")
                throw ValidationError("tuning.kp must be a number or \"identified\"",
                                      join(path, "kp"));
            t.identify_kp = true;
        } else {
            t.design_kp = as_number(*kp, join(path, "kp"));
            if (*t.design_kp == 0.0)
                throw ValidationError("design gain must be nonzero", join(path, "kp"));
        }
    }
    if (const ordered_json* d = find(j, "dead_time")) {
        t.design_d = as_number(*d, join(path, "dead_time"));
        if (*t.design_d < 0.0)
            throw ValidationError("design dead time must be >= 0", join(path, "dead_time"));
    }

    if (const ordered_json* id = find(j, "identify")) {
        const std::string ipath = join(path, "identify");
        if (!id->is_object()) throw ValidationError("expected an object", ipath);
        check_keys(*id, {"amplitude", "horizon", "step_h"}, ipath);
        t.identify.amplitude = number_or(*id, "amplitude", t.identify.amplitude, ipath);
        t.identify.horizon = number_or(*id, "horizon", t.identify.horizon, ipath);
        t.identify.step_h = number_or(*id, "step_h", t.identify.step_h, ipath);
        if (t.identify.amplitude == 0.0)
            throw ValidationError("step-test amplitude must be nonzero", join(ipath, "amplitude"));
        if (!(t.identify.horizon > 0.0))
            throw ValidationError("step-test horizon must be > 0", join(ipath, "horizon"));
        if (!(t.identify.step_h > 0.0))
            throw ValidationError("step-test step_h must be > 0", join(ipath, "step_h"));
    }
    return t;
}

inline ControllerConfig parse_controller(const ordered_json& j, const std::string& path) {
    if (!j.is_object()) throw ValidationError("expected an object", path);
    ControllerConfig c;
    const std::string type = required_string(j, "type", path);
    if (type == "ipi") {
        check_keys(j, {"type", "tuning", "actuator_limits"}, path);
        c.type = ControllerConfig::Type::ipi;
        if (const ordered_json* t = find(j, "tuning"))
            c.tuning = parse_tuning(*t, join(path, "tuning"));
    } else if (type == "pid") {
        check_keys(j, {"type", "gains", "actuator_limits"}, path);
        c.type = ControllerConfig::Type::pid;
        const ordered_json* g = find(j, "gains");
        if (!g || !g->is_object())
            throw ValidationError("pid controller needs a gains object", join(path, "gains"));
        const std::string gpath = join(path, "gains");
        check_keys(*g, {"kc", "ti", "td", "deriv_filter_n"}, gpath);
        c.pid_gains = PidGains(required_number(*g, "kc", gpath), required_number(*g, "ti", gpath),
                               number_or(*g, "td", 0.0, gpath),
                               number_or(*g, "deriv_filter_n", 10.0, gpath));
    } else if (type == "open_loop") {
        check_keys(j, {"type", "command", "actuator_limits"}, path);
        c.type = ControllerConfig::Type::open_loop;
        if (const ordered_json* cmd = find(j, "command"))
            c.command = parse_signal(*cmd, join(path, "command"));
    } else {
        throw ValidationError("unknown controller type '" + type + "'", join(path, "type"));
    }

    if (const ordered_json* lim = find(j, "actuator_limits")) {
        const std::string lpath = join(path, "actuator_limits");
        if (!lim->is_object()) throw ValidationError("expected an object", lpath);
        check_keys(*lim, {"max_deflection", "max_rate"}, lpath);
        ActuatorLimits limits;
        limits.max_deflection = number_or(*lim, "max_deflection", limits.max_deflection, lpath);
        limits.max_rate = number_or(*lim, "max_rate", limits.max_rate, lpath);
        if (!(limits.max_deflection > 0.0))
            throw ValidationError("max_deflection must be > 0", join(lpath, "max_deflection"));
        if (!(limits.max_rate > 0.0))
            throw ValidationError("max_rate must be > 0", join(lpath, "max_rate"));
        c.limits = limits;
    }
    return c;
}

}  // namespace cfg

/// Parse and validate a scenario document. base_dir anchors relative paths
/// (the AUV coefficient file); pass the directory of the scenario file.
inline ScenarioConfig parse_scenario(const ordered_json& root, const std::string& base_dir) {
    if (!root.is_object()) throw ValidationError("scenario document must be a JSON object");
    cfg::check_keys(root, {"name", "plant", "controller", "setpoint", "disturbance", "sim", "sweep"},
                    "");
    ScenarioConfig s;
    s.name = cfg::required_string(root, "name", "");
    if (s.name.empty()) throw ValidationError("scenario name must be nonempty", "name");

    const ordered_json* plant = cfg::find(root, "plant");
    if (!plant) throw ValidationError("missing required key 'plant'");
    s.plant = cfg::parse_plant(*plant, base_dir, "plant");

    const ordered_json* controller = cfg::find(root, "controller");
    if (!controller) throw ValidationError("missing required key 'controller'");
    s.controller = cfg::parse_controller(*controller, "controller");

    if (s.plant.type == PlantConfig::Type::auv && s.controller.limits)
        throw ValidationError("the vehicle's own actuator limits always apply; do not override",
                              "controller.actuator_limits");
    if (s.plant.type == PlantConfig::Type::auv &&
        s.controller.type == ControllerConfig::Type::ipi && !s.controller.tuning.identify_kp &&
        !s.controller.tuning.design_kp && !s.controller.tuning.gains)
        throw ValidationError(
            "an auv loop needs tuning.kp (a number or \"identified\") or explicit gains",
            "controller.tuning");

    if (const ordered_json* sp = cfg::find(root, "setpoint"))
        s.setpoint = cfg::parse_signal(*sp, "setpoint");
    if (const ordered_json* di = cfg::find(root, "disturbance"))
        s.disturbance = cfg::parse_signal(*di, "disturbance");

    const ordered_json* sim = cfg::find(root, "sim");
    if (!sim || !sim->is_object()) throw ValidationError("missing required object 'sim'", "sim");
    cfg::check_keys(*sim, {"step_h", "horizon"}, "sim");
    s.horizon = cfg::required_number(*sim, "horizon", "sim");
    if (!(s.horizon > 0.0)) throw ValidationError("horizon must be > 0", "sim.horizon");
    if (const ordered_json* h = cfg::find(*sim, "step_h")) {
        s.step_h = cfg::as_number(*h, "sim.step_h");
        if (!(*s.step_h > 0.0)) throw ValidationError("step_h must be > 0", "sim.step_h");
        if (*s.step_h > s.horizon)
            throw ValidationError("step_h must not exceed the horizon", "sim.step_h");
    }
    return s;
}

// ---------------------------------------------------------------------------
// Sweep expansion.

/// One expanded sweep point: the scenario document with overrides applied,
/// plus the override map itself for labelling and reports.
struct SweepPoint {
    ordered_json config;
    ordered_json overrides;  ///< dotted path -> value; empty for the base run
};

/// Expand the sweep section into the cross product of its axes, in document
/// order. Without a sweep section the single base document is returned.
inline std::vector<SweepPoint> expand_sweep(const ordered_json& root) {
    if (!root.is_object()) throw ValidationError("scenario document must be a JSON object");
    const ordered_json* sweep = cfg::find(root, "sweep");

    ordered_json base = root;
    base.erase("sweep");

    if (!sweep) return {SweepPoint{base, ordered_json::object()}};
    if (!sweep->is_object() || sweep->empty())
        throw ValidationError("sweep must be a nonempty object of path -> value arrays", "sweep");

    struct Axis {
        std::string dotted;
        ordered_json::json_pointer pointer;
        const ordered_json* values;
    };
    std::vector<Axis> axes;
    for (const auto& item : sweep->items()) {
        if (!item.value().is_array() || item.value().empty())
            throw ValidationError("sweep values must be a nonempty array",
                                  cfg::join("sweep", item.key()));
        std::string ptr = "/" + item.key();
        for (char& ch : ptr)
            if (ch == '.') ch = '/';
        Axis axis{item.key(), ordered_json::json_pointer(ptr), &item.value()};
        if (!base.contains(axis.pointer))
            throw ValidationError("sweep path does not exist in the scenario",
                                  cfg::join("sweep", item.key()));
        axes.push_back(std::move(axis));
    }

    std::vector<SweepPoint> points;
    std::vector<std::size_t> idx(axes.size(), 0);
    for (;;) {
        SweepPoint pt{base, ordered_json::object()};
        for (std::size_t a = 0; a < axes.size(); ++a) {
            pt.config[axes[a].pointer] = (*axes[a].values)[idx[a]];
            pt.overrides[axes[a].dotted] = (*axes[a].values)[idx[a]];
        }
        points.push_back(std::move(pt));

        std::size_t a = axes.size();
        while (a-- > 0) {
            if (++idx[a] < axes[a].values->size()) break;
            idx[a] = 0;
            if (a == 0) return points;
        }
        if (axes.empty()) return points;
    }
}

// ---------------------------------------------------------------------------
// Execution.

/// Everything recorded about one run of one sweep point.
struct RunResult {
    ordered_json sweep_point;             ///< overrides for this run ({} for base)
    std::string label;                    ///< filesystem-safe run name
    std::optional<TuningResult> tuning;   ///< present for ipi loops
    std::optional<PidGains> pid_gains;    ///< present for pid loops
    SimTrace trace;
    double step_time = 0.0;               ///< event the metrics are measured against
    std::optional<StepMetrics> metrics;   ///< absent for open-loop runs
    std::string metrics_error;            ///< set when metric extraction was rejected
    bool saturated = false;
};

struct ScenarioOutcome {
    std::string name;
    std::vector<RunResult> runs;
};

namespace detail {

inline std::string format_value(const ordered_json& v) {
    std::string s = v.dump();
    for (char& ch : s)
        if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '-' ||
              ch == '+'))
            ch = '_';
    return s;
}

inline std::string run_label(const ordered_json& overrides) {
    if (overrides.empty()) return "base";
    std::string label;
    for (const auto& item : overrides.items()) {
        const std::string key = item.key().substr(item.key().rfind('.') + 1);
        if (!label.empty()) label += "_";
        label += key + "=" + format_value(item.value());
    }
    return label;
}

/// Resolve the (kp, d) pair the tuning rule designs against, identifying
/// them from a built-in step test on a fresh copy of the plant if requested.
/// kp may stay unknown only when the gains are given explicitly; the margin
/// report is then skipped.
template <typename MakePlant>
std::pair<std::optional<double>, double> design_plant(const TuningConfig& t,
                                                      std::optional<double> plant_kp,
                                                      std::optional<double> plant_d,
                                                      MakePlant&& make_plant,
                                                      std::optional<ActuatorLimits> limits) {
    std::optional<double> kp = t.design_kp ? t.design_kp : plant_kp;
    std::optional<double> d = t.design_d ? t.design_d : plant_d;
    if (t.identify_kp) {
        auto plant = make_plant();
        const TimeGrid grid(t.identify.step_h, t.identify.horizon);
        // Fire the step after a 1 s quiet baseline: a rate-limited actuator
        // is already moving at the first sample of a t=0 step, which skews
        // the step-size estimate.
        const SimTrace record = step_test(plant, t.identify.amplitude, grid, 1.0, limits);
        const IdentifiedModel fit = identify_ipdt(record);
        if (!t.design_kp) kp = fit.kp;
        if (!t.design_d) d = fit.d;
    }
    if (!kp && !t.gains)
        throw ValidationError("no design gain available; set tuning.kp", "controller.tuning.kp");
    return {kp, d.value_or(0.0)};
}

inline TuningResult resolve_ipi(const TuningConfig& t, std::optional<double> kp, double d) {
    if (t.gains) {
        // Work the design point back out of the gains for the report:
        // kp kc / ti = wn^2 and kp kc = 2 zeta wn.
        TuningResult r;
        r.gains = *t.gains;
        if (kp) {
            const double loop_gain = std::abs(*kp * t.gains->kc);
            r.wn = std::sqrt(loop_gain / t.gains->ti);
            r.zeta = r.wn > 0.0 ? loop_gain / (2.0 * r.wn) : 0.0;
            r.ts_estimate = d > 0.0 ? settling_time_estimate(*kp, d) : 0.0;
            const MarginInfo m = phase_margin(*kp, d, *t.gains);
            r.phase_margin_deg = m.phase_margin_deg;
            r.crossover_freq = m.crossover_freq;
            r.low_phase_margin = m.phase_margin_deg < kLowMarginThresholdDeg;
        } else {
            r.wn = r.zeta = r.phase_margin_deg = r.crossover_freq =
                std::numeric_limits<double>::quiet_NaN();
        }
        return r;
    }
    if (t.wn) return tune_ipi_at(*kp, d, *t.wn, t.zeta);
    return tune_ipi(*kp, d, TuningSpec(t.zeta, t.k));
}

}  // namespace detail

/// Run one parsed scenario (a single sweep point).
inline RunResult execute_scenario(const ScenarioConfig& s, ordered_json sweep_point = {}) {
    RunResult result;
    result.sweep_point =
        sweep_point.is_null() ? ordered_json::object() : std::move(sweep_point);
    result.label = detail::run_label(result.sweep_point);

    // Plant factory: identification and the actual run each get a fresh one.
    const bool is_auv = s.plant.type == PlantConfig::Type::auv;
    std::optional<AuvDepthModel> auv_model;
    if (is_auv) auv_model = AuvDepthModel::from_file(s.plant.coefficients, s.plant.u_surge);

    std::optional<ActuatorLimits> limits =
        is_auv ? std::optional<ActuatorLimits>(auv_model->actuator) : s.controller.limits;

    // Controller resolution (may run the built-in identification step test).
    std::optional<PiGains> ipi_gains;
    if (s.controller.type == ControllerConfig::Type::ipi) {
        std::optional<double> design_kp;
        double design_d = 0.0;
        if (is_auv) {
            std::tie(design_kp, design_d) = detail::design_plant(
                s.controller.tuning, std::nullopt, std::nullopt,
                [&] { return AuvPlant(*auv_model); }, limits);
        } else {
            std::tie(design_kp, design_d) = detail::design_plant(
                s.controller.tuning, s.plant.kp, s.plant.dead_time,
                [&] { return IpdtPlant(IpdtModel(s.plant.kp, s.plant.dead_time)); }, limits);
        }
        result.tuning = detail::resolve_ipi(s.controller.tuning, design_kp, design_d);
        ipi_gains = result.tuning->gains;
    } else if (s.controller.type == ControllerConfig::Type::pid) {
        result.pid_gains = s.controller.pid_gains;
    }

    // Grid: an explicit step_h wins; otherwise resolve dead time and
    // integral time against 50 ms and take the finest.
    double h = s.step_h.value_or(0.05);
    if (!s.step_h) {
        if (!is_auv && s.plant.dead_time > 0.0) h = std::min(h, s.plant.dead_time / 20.0);
        if (ipi_gains) h = std::min(h, ipi_gains->ti / 50.0);
    }
    const TimeGrid grid(h, s.horizon);

    const auto run_with = [&](auto& controller) {
        if (is_auv) {
            AuvPlant plant(*auv_model);
            return run_loop(plant, controller, grid, s.setpoint, s.disturbance);
        }
        IpdtPlant plant(IpdtModel(s.plant.kp, s.plant.dead_time, s.plant.initial_y));
        return run_loop(plant, controller, grid, s.setpoint, s.disturbance);
    };

    switch (s.controller.type) {
        case ControllerConfig::Type::ipi: {
            IpiController ctrl(*ipi_gains, limits);
            result.trace = run_with(ctrl);
            break;
        }
        case ControllerConfig::Type::pid: {
            PidController ctrl(*s.controller.pid_gains, limits);
            result.trace = run_with(ctrl);
            break;
        }
        case ControllerConfig::Type::open_loop: {
            OpenLoopController ctrl(s.controller.command, limits);
            result.trace = run_with(ctrl);
            break;
        }
    }

    // Saturation flag: the raw command departed from what the actuator
    // delivered at some sample. The raw command is u_ff - u_fb for the I+PI
    // structure, u_fb for pid, and the command signal itself open loop.
    for (std::size_t i = 0; i < result.trace.size() && !result.saturated; ++i) {
        double cmd = 0.0;
        switch (s.controller.type) {
            case ControllerConfig::Type::ipi:
                cmd = result.trace.u_ff[i] - result.trace.u_fb[i];
                break;
            case ControllerConfig::Type::pid:
                cmd = result.trace.u_fb[i];
                break;
            case ControllerConfig::Type::open_loop:
                cmd = s.controller.command(result.trace.t[i]);
                break;
        }
        if (std::abs(cmd - result.trace.u_applied[i]) > 1e-12) result.saturated = true;
    }

    if (s.controller.type != ControllerConfig::Type::open_loop) {
        result.step_time = s.setpoint.has_transient() ? s.setpoint.first_event_time()
                           : s.disturbance.has_transient() ? s.disturbance.first_event_time()
                                                           : 0.0;
        try {
            result.metrics = compute_step_metrics(result.trace, result.step_time);
        } catch (const ValidationError& err) {
            result.metrics_error = err.what();
        }
    }
    return result;
}

/// Run a whole scenario document: expand the sweep (if asked), parse and
/// execute every point. base_dir anchors relative file references.
inline ScenarioOutcome run_scenario(const ordered_json& root, const std::string& base_dir,
                                    bool expand) {
    ScenarioOutcome outcome;
    std::vector<SweepPoint> points;
    if (expand) {
        points = expand_sweep(root);
    } else {
        ordered_json base = root;
        if (base.is_object()) base.erase("sweep");
        points.push_back(SweepPoint{std::move(base), ordered_json::object()});
    }
    for (SweepPoint& pt : points) {
        const ScenarioConfig cfg = parse_scenario(pt.config, base_dir);
        if (outcome.name.empty()) outcome.name = cfg.name;
        outcome.runs.push_back(execute_scenario(cfg, std::move(pt.overrides)));
    }
    return outcome;
}

/// Load a JSON document, reporting I/O and parse problems as configuration
/// errors with the file name.
inline ordered_json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open file '" + path + "'");
    try {
        return ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& err) {
        throw ValidationError(std::string("invalid JSON: ") + err.what(), path);
    }
}

}  // namespace ipdt

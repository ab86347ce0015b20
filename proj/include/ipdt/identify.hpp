#pragma once

// Open-loop step-test identification: fit the late-time ramp of the
// response, read the integrator gain off its slope and the effective dead
// time off its intercept, and reject plants that do not keep ramping.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "ipdt/control.hpp"
#include "ipdt/errors.hpp"
#include "ipdt/sim.hpp"

namespace ipdt {

/// Fit-quality figures reported alongside the identified parameters.
struct IdentifyDiagnostics {
    double fit_rms_residual = 0.0;  ///< RMS residual / fitted rise over the window
    double slope_variation = 0.0;   ///< relative slope change across the fit window
    double linear_fraction = 0.0;   ///< trailing fraction of the post-step record on the ramp
    std::size_t samples_used = 0;   ///< samples in the fit window
};

struct IdentifiedModel {
    double kp = 0.0;  ///< integrator gain
    double d = 0.0;   ///< effective dead time [s]
    IdentifyDiagnostics diagnostics;
};

namespace detail {
struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
};

inline LineFit fit_line(const std::vector<double>& t, const std::vector<double>& y,
                        std::size_t begin, std::size_t end) {
    const double n = static_cast<double>(end - begin);
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
        st += t[i];
        sy += y[i];
        stt += t[i] * t[i];
        sty += t[i] * y[i];
    }
    const double denom = n * stt - st * st;
    if (denom == 0.0) throw ValidationError("degenerate time axis in identification window");
    LineFit f;
    f.slope = (n * sty - st * sy) / denom;
    f.intercept = (sy - f.slope * st) / n;
    return f;
}
}  // namespace detail

/// Optional pins for records where the step cannot be located automatically
/// (noisy command channel, truncated pre-step history). Either field, when
/// set, replaces the corresponding estimate read off the trace.
struct IdentifyOverrides {
    std::optional<double> step_time;       ///< known onset time of the input step
    std::optional<double> step_amplitude;  ///< known input step size
};

/// Identify (kp, d) from a recorded open-loop step test. The input step is
/// located from the applied-command column (plus any disturbance, since the
/// plant sees their sum); the ramp is fitted over the last 40% of the
/// post-step record. Throws NotIntegratingError when the late response is
/// not a steady ramp — a flattening output means the plant self-regulates.
inline IdentifiedModel identify_ipdt(const SimTrace& trace,
                                     const IdentifyOverrides& overrides = {}) {
    const std::size_t n = trace.size();
    if (n < 20) throw ValidationError("step-test record too short to identify");

    std::vector<double> input(n);
    for (std::size_t i = 0; i < n; ++i) input[i] = trace.u_applied[i] + trace.d_in[i];

    // Step onset: first sample whose input departs from the initial level,
    // unless the caller pinned the onset time.
    const double u0 = input.front();
    std::size_t onset = n;
    if (overrides.step_time) {
        if (*overrides.step_time > trace.t.back())
            throw ValidationError("step time lies beyond the end of the record");
        onset = static_cast<std::size_t>(
            std::lower_bound(trace.t.begin(), trace.t.end(), *overrides.step_time) -
            trace.t.begin());
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            if (std::abs(input[i] - u0) > 1e-9 * std::max(1.0, std::abs(u0))) {
                onset = i;
                break;
            }
        }
        if (onset == n) throw ValidationError("no input step found in the record");
    }

    const double t_step = trace.t[onset];
    const double post = trace.t.back() - t_step;
    if (!(post > 0.0)) throw ValidationError("input step lies at the very end of the record");

    double du;
    if (overrides.step_amplitude) {
        du = *overrides.step_amplitude;
    } else {
        const std::size_t tail = std::max<std::size_t>(1, n / 10);
        double u1 = 0.0;
        for (std::size_t i = n - tail; i < n; ++i) u1 += input[i];
        u1 /= static_cast<double>(tail);
        du = u1 - u0;
    }
    if (std::abs(du) < 1e-12)
        throw ValidationError("input returns to its initial level; not a step test");

    // Fit window: last 40% of the post-step record.
    const double t_fit = t_step + 0.6 * post;
    const std::size_t begin =
        static_cast<std::size_t>(std::lower_bound(trace.t.begin(), trace.t.end(), t_fit) -
                                 trace.t.begin());
    if (n - begin < 10) throw ValidationError("too few samples after the step to fit a ramp");

    const detail::LineFit line = detail::fit_line(trace.t, trace.y, begin, n);
    const std::size_t mid = begin + (n - begin) / 2;
    const detail::LineFit early = detail::fit_line(trace.t, trace.y, begin, mid);
    const detail::LineFit late = detail::fit_line(trace.t, trace.y, mid, n);

    double dy_post = 0.0;
    for (std::size_t i = onset; i < n; ++i)
        dy_post = std::max(dy_post, std::abs(trace.y[i] - trace.y[onset]));
    if (std::abs(late.slope) * post < 1e-9 * std::max(1.0, dy_post))
        throw NotIntegratingError("output slope decays to zero; plant self-regulates");

    IdentifyDiagnostics diag;
    diag.samples_used = n - begin;
    diag.slope_variation = std::abs(late.slope - early.slope) /
                           std::max({std::abs(early.slope), std::abs(late.slope), 1e-300});
    if (diag.slope_variation > 0.2)
        throw NotIntegratingError("late response is not a steady ramp; plant is not integrating");

    double ss_res = 0.0;
    for (std::size_t i = begin; i < n; ++i) {
        const double res = trace.y[i] - (line.intercept + line.slope * trace.t[i]);
        ss_res += res * res;
    }
    const double window_rise = std::abs(line.slope) * (trace.t.back() - trace.t[begin]);
    diag.fit_rms_residual =
        std::sqrt(ss_res / static_cast<double>(n - begin)) / std::max(window_rise, 1e-300);

    // Trailing fraction of the post-step record that lies on the fitted ramp.
    const double tol = 0.02 * std::max(std::abs(line.slope) * post, 1e-300);
    std::size_t first_on_line = n - 1;
    for (std::size_t i = n; i-- > onset;) {
        if (std::abs(trace.y[i] - (line.intercept + line.slope * trace.t[i])) > tol) break;
        first_on_line = i;
    }
    diag.linear_fraction = (trace.t.back() - trace.t[first_on_line]) / post;

    IdentifiedModel model;
    model.kp = line.slope / du;
    // The ramp extended backward meets the pre-step output level at
    // t_step + d.
    const double y0 = trace.y[onset];
    const double t_meet = (y0 - line.intercept) / line.slope;
    model.d = std::clamp(t_meet - t_step, 0.0, post);
    model.diagnostics = diag;
    return model;
}

/// Drive any plant open loop with a step of the given amplitude and record
/// the response; the usual front end to identify_ipdt. Pass the plant's
/// actuator limits so the recorded applied command matches what a
/// constrained actuator can deliver.
template <Process P>
SimTrace step_test(P& plant, double amplitude, const TimeGrid& grid, double step_time = 0.0,
                   std::optional<ActuatorLimits> limits = std::nullopt) {
    OpenLoopController ctrl(Signal::step(amplitude, step_time), limits);
    return run_loop(plant, ctrl, grid, Signal::zero(), Signal::zero());
}

}  // namespace ipdt

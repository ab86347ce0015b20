#pragma once

// Step-response metrics over recorded traces, and the closed-form
// second-order responses the delay-free loop is designed to reproduce.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ipdt/errors.hpp"
#include "ipdt/sim.hpp"

namespace ipdt {

// ---------------------------------------------------------------------------
// Analytic references for y'' + 2 zeta wn y' + wn^2 y = wn^2 r.

/// Unit step response at time t >= 0, for any damping ratio.
inline double second_order_step(double wn, double zeta, double t) {
    if (t <= 0.0) return 0.0;
    if (std::abs(zeta - 1.0) < 1e-9) return 1.0 - std::exp(-wn * t) * (1.0 + wn * t);
    if (zeta < 1.0) {
        const double wd = wn * std::sqrt(1.0 - zeta * zeta);
        const double decay = std::exp(-zeta * wn * t);
        return 1.0 - decay * (std::cos(wd * t) + zeta / std::sqrt(1.0 - zeta * zeta) * std::sin(wd * t));
    }
    const double root = wn * std::sqrt(zeta * zeta - 1.0);
    const double p1 = -zeta * wn + root;
    const double p2 = -zeta * wn - root;
    return 1.0 + (p2 * std::exp(p1 * t) - p1 * std::exp(p2 * t)) / (p1 - p2);
}

/// Output deviation after a unit step load at the plant input (setpoint
/// zero): y/d_in = kp s / (s^2 + 2 zeta wn s + wn^2).
inline double regulation_response(double kp, double wn, double zeta, double t) {
    if (t <= 0.0) return 0.0;
    if (std::abs(zeta - 1.0) < 1e-9) return kp * t * std::exp(-wn * t);
    if (zeta < 1.0) {
        const double wd = wn * std::sqrt(1.0 - zeta * zeta);
        return kp * std::exp(-zeta * wn * t) * std::sin(wd * t) / wd;
    }
    const double root = wn * std::sqrt(zeta * zeta - 1.0);
    const double p1 = -zeta * wn + root;
    const double p2 = -zeta * wn - root;
    return kp * (std::exp(p1 * t) - std::exp(p2 * t)) / (p1 - p2);
}

/// Percent overshoot of the underdamped step response; zero for zeta >= 1.
inline double overshoot_pct_for_zeta(double zeta) {
    if (zeta >= 1.0) return 0.0;
    if (!(zeta > 0.0)) throw ValidationError("damping ratio must be > 0", "tuning.zeta");
    return 100.0 * std::exp(-zeta * std::numbers::pi / std::sqrt(1.0 - zeta * zeta));
}

/// Inverse of overshoot_pct_for_zeta on (0, 100).
inline double zeta_for_overshoot_pct(double pct) {
    if (!(pct > 0.0 && pct < 100.0))
        throw ValidationError("overshoot must lie in (0, 100) percent", "tuning.overshoot_pct");
    const double l = std::log(pct / 100.0);
    return -l / std::sqrt(std::numbers::pi * std::numbers::pi + l * l);
}

/// Time of the first overshoot peak, pi / (wn sqrt(1 - zeta^2)).
inline double peak_time(double wn, double zeta) {
    if (!(zeta > 0.0 && zeta < 1.0))
        throw ValidationError("peak time is defined for 0 < zeta < 1", "tuning.zeta");
    return std::numbers::pi / (wn * std::sqrt(1.0 - zeta * zeta));
}

// ---------------------------------------------------------------------------
// Trace metrics.

/// Quantities extracted from one run. Times are relative to the step instant;
/// undefined entries (e.g. rise time of a regulation run) are NaN.
struct StepMetrics {
    double baseline = std::numeric_limits<double>::quiet_NaN();     ///< y at the step instant
    double final_value = std::numeric_limits<double>::quiet_NaN();  ///< trailing-window mean of y
    double rise_time = std::numeric_limits<double>::quiet_NaN();    ///< 10% -> 90% of the net change
    double settling_time = std::numeric_limits<double>::quiet_NaN();///< last entry into the 2% band
    double overshoot_pct = std::numeric_limits<double>::quiet_NaN();///< peak beyond net change, in %
    double peak_time = std::numeric_limits<double>::quiet_NaN();
    double peak_value = std::numeric_limits<double>::quiet_NaN();
    double iae = std::numeric_limits<double>::quiet_NaN();          ///< integral |r - y| from the step
    bool settled = false;
    bool diverged = false;
};

namespace detail {
inline double crossing_time(double t1, double v1, double t2, double v2, double level) {
    if (v2 == v1) return t2;
    return t1 + (level - v1) / (v2 - v1) * (t2 - t1);
}

inline double interp_at(const std::vector<double>& t, const std::vector<double>& v, double when) {
    if (when <= t.front()) return v.front();
    if (when >= t.back()) return v.back();
    const auto it = std::lower_bound(t.begin(), t.end(), when);
    const std::size_t i = static_cast<std::size_t>(it - t.begin());
    const double a = (when - t[i - 1]) / (t[i] - t[i - 1]);
    return v[i - 1] + a * (v[i] - v[i - 1]);
}
}  // namespace detail

/// Characterize the response to the event (setpoint step or load step) at
/// step_time. Rise/overshoot follow the net output change
/// delta = final - baseline; a run whose setpoint changed but whose output
/// did not move is rejected as degenerate. When the setpoint is flat the run
/// is treated as regulation: the 2% band is taken from the peak deviation
/// and rise/overshoot stay NaN.
inline StepMetrics compute_step_metrics(const SimTrace& trace, double step_time) {
    const std::size_t n = trace.size();
    if (n < 2) throw ValidationError("trace too short for metrics");
    if (step_time > trace.t.back())
        throw ValidationError("step time lies beyond the end of the trace");

    const auto first_at = std::lower_bound(trace.t.begin(), trace.t.end(), step_time);
    const std::size_t i0 = static_cast<std::size_t>(first_at - trace.t.begin());

    StepMetrics m;
    m.baseline = detail::interp_at(trace.t, trace.y, step_time);
    const double r_base = i0 > 0 ? trace.r[i0 - 1] : trace.y.front();
    const double r_target = trace.r.back();
    const double delta_r = r_target - r_base;

    const std::size_t window = std::max<std::size_t>(1, (n - i0) / 10);
    double acc = 0.0;
    for (std::size_t i = n - window; i < n; ++i) acc += trace.y[i];
    m.final_value = acc / static_cast<double>(window);

    double max_abs_y = 0.0;
    bool finite = true;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(trace.y[i])) finite = false;
        max_abs_y = std::max(max_abs_y, std::abs(trace.y[i]));
    }
    const double scale = std::max({1.0, std::abs(m.baseline), std::abs(r_target), std::abs(delta_r)});
    m.diverged = !finite || trace.fault_time.has_value() || max_abs_y > 1e3 * scale;

    const double delta = m.final_value - m.baseline;
    const bool tracking = std::abs(delta_r) > 1e-12 * std::max(1.0, std::abs(r_target));
    if (tracking && std::abs(delta) < 1e-9 * std::abs(delta_r))
        throw ValidationError("output did not respond to the setpoint change; metrics degenerate");

    // Peak excursion from the baseline: signed along the step for tracking,
    // absolute for regulation.
    const double dir = tracking ? (delta > 0.0 ? 1.0 : -1.0) : 0.0;
    double peak_excursion = -std::numeric_limits<double>::infinity();
    std::size_t peak_idx = i0;
    for (std::size_t i = i0; i < n; ++i) {
        const double dev = trace.y[i] - m.baseline;
        const double score = tracking ? dir * dev : std::abs(dev);
        if (score > peak_excursion) {
            peak_excursion = score;
            peak_idx = i;
        }
    }
    if (i0 < n) {
        m.peak_value = trace.y[peak_idx];
        m.peak_time = trace.t[peak_idx] - step_time;
    }

    if (tracking) {
        m.overshoot_pct = std::max(0.0, (peak_excursion - std::abs(delta)) / std::abs(delta) * 100.0);

        // 10% / 90% crossings, starting from the virtual point (step_time, baseline).
        const double l10 = m.baseline + 0.1 * delta;
        const double l90 = m.baseline + 0.9 * delta;
        double t10 = std::numeric_limits<double>::quiet_NaN();
        double t90 = std::numeric_limits<double>::quiet_NaN();
        double prev_t = step_time, prev_y = m.baseline;
        for (std::size_t i = i0; i < n; ++i) {
            const double yt = trace.y[i], tt = trace.t[i];
            if (std::isnan(t10) && dir * (yt - l10) >= 0.0)
                t10 = detail::crossing_time(prev_t, prev_y, tt, yt, l10);
            if (std::isnan(t90) && dir * (yt - l90) >= 0.0) {
                t90 = detail::crossing_time(prev_t, prev_y, tt, yt, l90);
                break;
            }
            prev_t = tt;
            prev_y = yt;
        }
        if (!std::isnan(t10) && !std::isnan(t90)) m.rise_time = t90 - t10;
    }

    // Settling: last time |y - final| leaves the 2% band.
    const double band_ref = tracking ? std::abs(delta) : peak_excursion;
    if (band_ref > 0.0 && !m.diverged) {
        const double band = 0.02 * band_ref;
        std::size_t last_out = n;  // sentinel: never outside
        for (std::size_t i = n; i-- > i0;) {
            if (std::abs(trace.y[i] - m.final_value) > band) {
                last_out = i;
                break;
            }
        }
        if (last_out == n) {
            m.settling_time = 0.0;
            m.settled = true;
        } else if (last_out + 1 < n) {
            const double v1 = trace.y[last_out] - m.final_value;
            const double v2 = trace.y[last_out + 1] - m.final_value;
            const double level = v1 > 0.0 ? band : -band;
            m.settling_time =
                detail::crossing_time(trace.t[last_out], v1, trace.t[last_out + 1], v2, level) -
                step_time;
            m.settled = true;
        }
    } else if (band_ref == 0.0) {
        m.settling_time = 0.0;
        m.settled = true;
    }

    // IAE of the tracking error from the first sample at/after the step.
    double iae = 0.0;
    for (std::size_t i = i0 + 1; i < n; ++i) {
        const double e1 = std::abs(trace.r[i - 1] - trace.y[i - 1]);
        const double e2 = std::abs(trace.r[i] - trace.y[i]);
        iae += 0.5 * (e1 + e2) * (trace.t[i] - trace.t[i - 1]);
    }
    m.iae = iae;

    return m;
}

/// Largest jump between consecutive applied-control samples; the smoothness
/// figure quoted for actuator wear comparisons.
inline double max_control_step(const SimTrace& trace) {
    double worst = 0.0;
    for (std::size_t i = 1; i < trace.size(); ++i)
        worst = std::max(worst, std::abs(trace.u_applied[i] - trace.u_applied[i - 1]));
    return worst;
}

}  // namespace ipdt

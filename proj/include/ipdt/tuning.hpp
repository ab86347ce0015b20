#pragma once

// Closed-form tuning of the I+PI structure for an integrating-plus-dead-time
// plant, plus a phase-margin check of the resulting open loop.

#include <cmath>
#include <numbers>
#include <string>

#include "ipdt/control.hpp"
#include "ipdt/errors.hpp"

namespace ipdt {

/// Margins below this are flagged as fragile with respect to unmodelled lag.
inline constexpr double kLowMarginThresholdDeg = 30.0;

/// Designer inputs for the settling-time rule: damping ratio of the target
/// second-order response and an aggressiveness multiplier on bandwidth.
struct TuningSpec {
    double zeta = 0.7;
    double k = 1.0;

    TuningSpec() = default;
    TuningSpec(double zeta_, double k_) : zeta(zeta_), k(k_) {
        if (!(zeta > 0.0)) throw ValidationError("damping ratio must be > 0", "tuning.zeta");
        if (!(k > 0.0)) throw ValidationError("aggressiveness factor must be > 0", "tuning.k");
    }
};

/// Open-loop settling-time estimate of the plant, Ts = d / kp.
inline double settling_time_estimate(double kp, double d) {
    if (kp == 0.0) throw ValidationError("process gain must be nonzero", "plant.kp");
    return d / std::abs(kp);
}

/// Target natural frequency, wn = 4 k / (zeta * (Ts + d)).
inline double natural_frequency(const TuningSpec& spec, double ts, double d) {
    const double horizon = ts + d;
    if (!(horizon > 0.0))
        throw ValidationError("settling-time rule needs dead time > 0; pass wn explicitly",
                              "plant.d");
    return 4.0 * spec.k / (spec.zeta * horizon);
}

/// Gains that place the delay-free closed loop at (wn, zeta):
/// kc = 2 zeta wn / kp, ti = 2 zeta / wn.
inline PiGains pi_gains(double kp, double wn, double zeta) {
    if (kp == 0.0) throw ValidationError("process gain must be nonzero", "plant.kp");
    if (!(wn > 0.0)) throw ValidationError("natural frequency must be > 0", "tuning.wn");
    if (!(zeta > 0.0)) throw ValidationError("damping ratio must be > 0", "tuning.zeta");
    return PiGains(2.0 * zeta * wn / kp, 2.0 * zeta / wn);
}

/// Gain crossover and phase margin of L(s) = kp kc (1 + 1/(ti s)) e^{-d s}/s.
struct MarginInfo {
    double crossover_freq = 0.0;   ///< [rad/s] where |L| = 1
    double phase_margin_deg = 0.0;
};

/// |L(jw)| is strictly decreasing, so the crossover is found by bisection.
inline MarginInfo phase_margin(double kp, double d, const PiGains& g) {
    const double loop_gain = std::abs(kp * g.kc);
    if (!(loop_gain > 0.0))
        throw ValidationError("loop gain must be nonzero for a margin check", "gains.kc");

    const auto mag = [&](double w) {
        const double tw = g.ti * w;
        return loop_gain * std::sqrt(1.0 + 1.0 / (tw * tw)) / w;
    };

    double lo = 1e-12, hi = 1.0;
    while (mag(hi) > 1.0) hi *= 2.0;
    while (mag(lo) < 1.0) lo *= 0.5;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (mag(mid) > 1.0 ? lo : hi) = mid;
    }
    const double wc = 0.5 * (lo + hi);

    constexpr double pi = std::numbers::pi;
    const double phase = -0.5 * pi - std::atan(1.0 / (g.ti * wc)) - wc * d;
    MarginInfo m;
    m.crossover_freq = wc;
    m.phase_margin_deg = (phase + pi) * 180.0 / pi;
    return m;
}

/// Full tuning output: gains together with the intermediate design numbers
/// and the margin diagnostic.
struct TuningResult {
    PiGains gains;
    double wn = 0.0;
    double zeta = 0.0;
    double ts_estimate = 0.0;
    double phase_margin_deg = 0.0;
    double crossover_freq = 0.0;
    bool low_phase_margin = false;
};

/// Apply the settling-time rule end to end for a plant (kp, d).
inline TuningResult tune_ipi(double kp, double d, const TuningSpec& spec = {}) {
    TuningResult r;
    r.zeta = spec.zeta;
    r.ts_estimate = settling_time_estimate(kp, d);
    r.wn = natural_frequency(spec, r.ts_estimate, d);
    r.gains = pi_gains(kp, r.wn, spec.zeta);
    const MarginInfo m = phase_margin(kp, d, r.gains);
    r.phase_margin_deg = m.phase_margin_deg;
    r.crossover_freq = m.crossover_freq;
    r.low_phase_margin = m.phase_margin_deg < kLowMarginThresholdDeg;
    return r;
}

/// Tune directly from a chosen (wn, zeta) pair, bypassing the settling-time
/// estimate; used when the bandwidth is picked by hand.
inline TuningResult tune_ipi_at(double kp, double d, double wn, double zeta) {
    TuningResult r;
    r.zeta = zeta;
    r.wn = wn;
    r.ts_estimate = d > 0.0 ? settling_time_estimate(kp, d) : 0.0;
    r.gains = pi_gains(kp, wn, zeta);
    const MarginInfo m = phase_margin(kp, d, r.gains);
    r.phase_margin_deg = m.phase_margin_deg;
    r.crossover_freq = m.crossover_freq;
    r.low_phase_margin = m.phase_margin_deg < kLowMarginThresholdDeg;
    return r;
}

}  // namespace ipdt

#pragma once

// Controller blocks: feedforward I, feedback PI, the composite I+PI loop,
// and a standard-form PID used for configured comparison runs. All
// integrators are trapezoidal; anti-windup is conditional integration
// (accumulation toward an active limit is skipped).

#include <cmath>
#include <optional>

#include "ipdt/errors.hpp"
#include "ipdt/process.hpp"
#include "ipdt/sim.hpp"

namespace ipdt {

/// Shared settings of the feedforward I and feedback PI blocks. A single
/// instance feeds both, so their integral gains agree by construction.
struct PiGains {
    double kc = 1.0;  ///< controller gain
    double ti = 1.0;  ///< integral time [s], > 0

    PiGains() = default;
    PiGains(double kc_, double ti_) : kc(kc_), ti(ti_) {
        if (!(ti > 0.0)) throw ValidationError("integral time must be > 0", "gains.ti");
        if (!std::isfinite(kc)) throw ValidationError("controller gain must be finite", "gains.kc");
    }
};

/// Standard-form PID settings (derivative acts on the filtered measurement).
struct PidGains {
    double kc = 1.0;
    double ti = 1.0;            ///< [s], > 0
    double td = 0.0;            ///< [s], >= 0; 0 degenerates to PI on error
    double deriv_filter_n = 10.0;  ///< filter divisor, in [5, 20] when td > 0

    PidGains() = default;
    PidGains(double kc_, double ti_, double td_, double n = 10.0)
        : kc(kc_), ti(ti_), td(td_), deriv_filter_n(n) {
        if (!(ti > 0.0)) throw ValidationError("integral time must be > 0", "gains.ti");
        if (td < 0.0) throw ValidationError("derivative time must be >= 0", "gains.td");
        if (td > 0.0 && (n < 5.0 || n > 20.0))
            throw ValidationError("derivative filter divisor must lie in [5, 20]",
                                  "gains.deriv_filter_n");
    }
};

/// Mutable controller memory. sat_dir records which way the actuator was
/// clipping on the previous sample (+1 high, -1 low, 0 free); integrator
/// updates that would push further in that direction are skipped.
struct ControllerState {
    double integ_ff = 0.0;  ///< accumulated feedforward I term (already scaled by kc/ti)
    double integ_fb = 0.0;  ///< accumulated feedback I term (already scaled by kc/ti)
    double u_last = 0.0;    ///< last applied control
    double filt_meas = 0.0; ///< filtered measurement for the PID derivative
    int sat_dir = 0;

    std::optional<double> prev_setpoint;  ///< previous feedforward input
    std::optional<double> prev_meas;      ///< previous feedback input / raw measurement
};

namespace detail {
// Trapezoidal accumulation with conditional-integration freeze. u_sign is
// the sign with which the integrator enters the control sum (+1 for the
// feedforward block, -1 for the feedback block).
inline void accumulate(double* integ, std::optional<double>* prev, double input, double scale,
                       double h, int sat_dir, int u_sign) {
    if (prev->has_value()) {
        const double inc = scale * h * 0.5 * (input + **prev);
        if (!(sat_dir != 0 && sat_dir * u_sign * inc > 0.0)) *integ += inc;
    }
    *prev = input;
}
}  // namespace detail

/// Feedforward block: (kc/ti) * integral of the setpoint. Returns the
/// accumulated term.
inline double i_feedforward(ControllerState& st, const PiGains& g, double r, double h) {
    detail::accumulate(&st.integ_ff, &st.prev_setpoint, r, g.kc / g.ti, h, st.sat_dir, +1);
    return st.integ_ff;
}

/// Feedback PI block on its input e: kc*e + (kc/ti) * integral of e. In the
/// composite loop e is the plant measurement itself and the block output is
/// subtracted from the feedforward term.
inline double pi_feedback(ControllerState& st, const PiGains& g, double e, double h) {
    detail::accumulate(&st.integ_fb, &st.prev_meas, e, g.kc / g.ti, h, st.sat_dir, -1);
    return g.kc * e + st.integ_fb;
}

/// Rate-limit (against the previously applied value) then clamp. Updates
/// u_last and the saturation direction used to freeze the integrators.
inline double apply_actuator(double u, const ActuatorLimits& limits, ControllerState& st,
                             double h) {
    const double applied = rate_limit_and_clamp(u, st.u_last, limits, h);
    const double excess = u - applied;
    st.sat_dir = std::abs(excess) > 1e-12 ? (excess > 0.0 ? +1 : -1) : 0;
    st.u_last = applied;
    return applied;
}

/// Composite loop controller: u = I(r) - PI(y). The feedback path acts on
/// the measurement alone, so a setpoint change never steps the control
/// signal; tracking comes entirely from the feedforward integral.
class IpiController {
public:
    explicit IpiController(const PiGains& gains,
                           std::optional<ActuatorLimits> limits = std::nullopt)
        : gains_(gains), limits_(limits) {}

    ControlAction update(double r, double y, double /*t*/, double h) {
        ControlAction a;
        a.u_ff = i_feedforward(state_, gains_, r, h);
        a.u_fb = pi_feedback(state_, gains_, y, h);
        a.u_cmd = a.u_ff - a.u_fb;
        a.u_applied = limits_ ? apply_actuator(a.u_cmd, *limits_, state_, h) : a.u_cmd;
        if (!limits_) state_.u_last = a.u_cmd;
        return a;
    }

    const PiGains& gains() const { return gains_; }
    const ControllerState& state() const { return state_; }

private:
    PiGains gains_;
    std::optional<ActuatorLimits> limits_;
    ControllerState state_;
};

/// Standard-form PID on the error with derivative on the filtered
/// measurement: u = kc*(e + integral(e)/ti) - kc*td * d(y_f)/dt.
class PidController {
public:
    explicit PidController(const PidGains& gains,
                           std::optional<ActuatorLimits> limits = std::nullopt)
        : gains_(gains), limits_(limits) {}

    ControlAction update(double r, double y, double /*t*/, double h) {
        const double e = r - y;

        double deriv = 0.0;
        if (gains_.td > 0.0) {
            const double tf = gains_.td / gains_.deriv_filter_n;
            if (state_.prev_meas.has_value()) {
                const double yf_prev = state_.filt_meas;
                state_.filt_meas += (h / (tf + h)) * (y - state_.filt_meas);
                deriv = (state_.filt_meas - yf_prev) / h;
            } else {
                state_.filt_meas = y;  // no derivative kick on the first sample
            }
        }

        // Integral of the error, stored scaled, accumulated behind prev_setpoint
        // so the measurement slot stays free for the derivative filter above.
        detail::accumulate(&state_.integ_fb, &state_.prev_setpoint, e, gains_.kc / gains_.ti, h,
                           state_.sat_dir, +1);
        state_.prev_meas = y;

        ControlAction a;
        a.u_fb = gains_.kc * e + state_.integ_fb - gains_.kc * gains_.td * deriv;
        a.u_cmd = a.u_fb;
        a.u_applied = limits_ ? apply_actuator(a.u_cmd, *limits_, state_, h) : a.u_cmd;
        if (!limits_) state_.u_last = a.u_cmd;
        return a;
    }

    const PidGains& gains() const { return gains_; }

private:
    PidGains gains_;
    std::optional<ActuatorLimits> limits_;
    ControllerState state_;
};

/// No feedback at all: replays a command signal. Used for open-loop step
/// tests and as the "zero controller" when the command signal is empty.
class OpenLoopController {
public:
    explicit OpenLoopController(Signal command = Signal::zero(),
                                std::optional<ActuatorLimits> limits = std::nullopt)
        : command_(std::move(command)), limits_(limits) {}

    ControlAction update(double /*r*/, double /*y*/, double t, double h) {
        ControlAction a;
        a.u_cmd = command_(t);
        a.u_applied = limits_ ? apply_actuator(a.u_cmd, *limits_, state_, h) : a.u_cmd;
        return a;
    }

private:
    Signal command_;
    std::optional<ActuatorLimits> limits_;
    ControllerState state_;
};

}  // namespace ipdt

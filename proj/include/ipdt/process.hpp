#pragma once

// Plant implementations: the integrating-plus-dead-time process and a
// reduced nonlinear depth-plane model of an underwater vehicle with
// actuator constraints.

#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

#include "ipdt/errors.hpp"
#include "ipdt/sim.hpp"

namespace ipdt {

/// Integrating process with dead time: an integrator of gain kp fed through
/// a transport delay of d seconds.
struct IpdtModel {
    double kp = 1.0;       ///< integrator gain [output/(input*s)], != 0
    double d = 0.0;        ///< dead time [s], >= 0
    double state_y = 0.0;  ///< current output

    IpdtModel() = default;
    IpdtModel(double kp_, double d_, double y0 = 0.0) : kp(kp_), d(d_), state_y(y0) {
        if (kp == 0.0) throw ValidationError("process gain must be nonzero", "plant.kp");
        if (d < 0.0) throw ValidationError("dead time must be >= 0", "plant.dead_time");
    }
};

/// Advance the process one step with input u held over [t, t+h]. The delay
/// line supplies the delayed, zero-order-held input; for this plant the
/// interpolated delayed sample equals the exact step average, so the output
/// ramp is exact at grid points.
inline double ipdt_step(IpdtModel& model, DelayLine& line, double u, double t, double h) {
    const double delayed = line.push_pop(t, u);
    model.state_y = rk4_step([&](double /*y*/, double /*ts*/) { return model.kp * delayed; },
                             model.state_y, t, h);
    if (!std::isfinite(model.state_y)) throw NumericFault("non-finite process output", t);
    return model.state_y;
}

/// IpdtModel + its delay line, packaged for run_loop.
class IpdtPlant {
public:
    explicit IpdtPlant(const IpdtModel& model)
        : model_(model), line_(model.d, 0.0) {}

    double output() const { return model_.state_y; }
    void step(double u, double t, double h) { ipdt_step(model_, line_, u, t, h); }
    const IpdtModel& model() const { return model_; }

private:
    IpdtModel model_;
    DelayLine line_;
};

/// Stern-plane travel and slew limits.
struct ActuatorLimits {
    double max_deflection = 0.4;  ///< [rad]
    double max_rate = 0.5;        ///< [rad/s]
};

/// Apply a rate limit (relative to the previous applied value) followed by
/// saturation.
inline double rate_limit_and_clamp(double cmd, double prev, const ActuatorLimits& lim, double h) {
    double v = cmd;
    const double dmax = lim.max_rate * h;
    if (v > prev + dmax) v = prev + dmax;
    if (v < prev - dmax) v = prev - dmax;
    if (v > lim.max_deflection) v = lim.max_deflection;
    if (v < -lim.max_deflection) v = -lim.max_deflection;
    return v;
}

/// Depth-plane state: heave velocity w [m/s], pitch rate q [rad/s], pitch
/// angle theta [rad], depth z [m, positive down].
struct AuvDepthState {
    double w = 0.0;
    double q = 0.0;
    double theta = 0.0;
    double z = 0.0;
};

/// Hydrodynamic coefficients of the reduced w-q subsystem. Linear terms
/// scale with surge speed (damping/coupling ~ u, fin effectiveness ~ u^2),
/// the cross-flow drag is quadratic in w, and the restoring moment is
/// hydrostatic (speed independent).
struct AuvCoefficients {
    double heave_damping = 0.0;       ///< w-force per u*w (stabilizing when < 0)
    double heave_pitch_couple = 0.0;  ///< w-force per u*q
    double heave_quad_drag = 0.0;     ///< w-force per w|w| (cross-flow drag)
    double fin_heave_force = 0.0;     ///< w-force per u^2 * deflection
    double pitch_heave_couple = 0.0;  ///< q-moment per u*w
    double pitch_damping = 0.0;       ///< q-moment per u*q (stabilizing when < 0)
    double restoring_moment = 0.0;    ///< q-moment per sin(theta)
    double fin_pitch_moment = 0.0;    ///< q-moment per u^2 * deflection
};

/// Reduced nonlinear depth-plane vehicle at constant forward speed.
struct AuvDepthModel {
    double u_surge = 0.8;  ///< constant forward speed [m/s]
    AuvCoefficients coeffs;
    ActuatorLimits actuator;

    /// Parse a flat key=value coefficient document ('#' starts a comment).
    /// All coefficient keys are required; actuator limits are optional and
    /// default to 0.4 rad / 0.5 rad/s. The loaded model is checked for an
    /// open-loop stable w-q subsystem before being returned.
    static AuvDepthModel from_file(const std::string& path, double u_surge);

    /// Unforced (w, q) perturbations must decay; anything else means the
    /// damping coefficients describe an unusable vehicle.
    void validate() const;
};

/// Depth-plane derivatives with the stern deflection held constant.
inline std::array<double, 4> auv_deriv(const AuvDepthModel& m, const std::array<double, 4>& x,
                                       double delta) {
    const double w = x[0], q = x[1], theta = x[2];
    const double u = m.u_surge;
    const AuvCoefficients& c = m.coeffs;
    return {
        c.heave_damping * u * w + c.heave_pitch_couple * u * q +
            c.heave_quad_drag * w * std::abs(w) + c.fin_heave_force * u * u * delta,
        c.pitch_heave_couple * u * w + c.pitch_damping * u * q -
            c.restoring_moment * std::sin(theta) + c.fin_pitch_moment * u * u * delta,
        q,
        -u * std::sin(theta) + w * std::cos(theta),
    };
}

/// Advance the vehicle one step. The raw stern command is rate limited
/// against fin_pos, then clamped; fin_pos is updated to the applied
/// deflection. Throws ModelValidityError once |theta| reaches pi/2.
inline AuvDepthState auv_step(const AuvDepthModel& model, const AuvDepthState& st,
                              double stern_cmd, double& fin_pos, double t, double h) {
    const double delta = rate_limit_and_clamp(stern_cmd, fin_pos, model.actuator, h);
    fin_pos = delta;

    const std::array<double, 4> x{st.w, st.q, st.theta, st.z};
    const std::array<double, 4> next = rk4_step<4>(
        [&](const std::array<double, 4>& xs, double /*ts*/) { return auv_deriv(model, xs, delta); },
        x, t, h);

    if (std::abs(next[2]) >= std::numbers::pi / 2.0)
        throw ModelValidityError("pitch angle left the valid range |theta| < pi/2", t + h);
    return AuvDepthState{next[0], next[1], next[2], next[3]};
}

/// Vehicle + actuator position, packaged for run_loop. Output is depth.
class AuvPlant {
public:
    explicit AuvPlant(const AuvDepthModel& model, const AuvDepthState& initial = {})
        : model_(model), state_(initial) {}

    double output() const { return state_.z; }
    void step(double u, double t, double h) { state_ = auv_step(model_, state_, u, fin_pos_, t, h); }

    const AuvDepthState& state() const { return state_; }
    const AuvDepthModel& model() const { return model_; }
    double fin_position() const { return fin_pos_; }

private:
    AuvDepthModel model_;
    AuvDepthState state_;
    double fin_pos_ = 0.0;
};

inline void AuvDepthModel::validate() const {
    AuvDepthState st{0.1, 0.1, 0.0, 0.0};
    double fin = 0.0;
    AuvDepthModel unforced = *this;
    for (int k = 0; k < 800; ++k)
        st = auv_step(unforced, st, 0.0, fin, k * 0.05, 0.05);
    if (!(std::abs(st.w) < 0.01 && std::abs(st.q) < 0.01))
        throw ValidationError("unforced w/q perturbations do not decay; "
                              "check damping coefficients", "auv.coeffs");
}

inline AuvDepthModel AuvDepthModel::from_file(const std::string& path, double u_surge) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open coefficient file: " + path, "plant.coeff_file");

    std::map<std::string, double> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string key, eq;
        double value = 0.0;
        if (!(ls >> key)) continue;  // blank line
        if (!(ls >> eq >> value) || eq != "=")
            throw ValidationError("expected 'key = value' at " + path + ":" +
                                  std::to_string(lineno), "plant.coeff_file");
        kv[key] = value;
    }

    AuvDepthModel model;
    model.u_surge = u_surge;
    auto take = [&](const char* key, double* dst, bool required, double fallback = 0.0) {
        auto it = kv.find(key);
        if (it == kv.end()) {
            if (required)
                throw ValidationError(std::string("missing coefficient '") + key + "' in " + path,
                                      "plant.coeff_file");
            *dst = fallback;
            return;
        }
        *dst = it->second;
        kv.erase(it);
    };

    AuvCoefficients& c = model.coeffs;
    take("heave_damping", &c.heave_damping, true);
    take("heave_pitch_couple", &c.heave_pitch_couple, true);
    take("heave_quad_drag", &c.heave_quad_drag, true);
    take("fin_heave_force", &c.fin_heave_force, true);
    take("pitch_heave_couple", &c.pitch_heave_couple, true);
    take("pitch_damping", &c.pitch_damping, true);
    take("restoring_moment", &c.restoring_moment, true);
    take("fin_pitch_moment", &c.fin_pitch_moment, true);
    take("max_deflection", &model.actuator.max_deflection, false, 0.4);
    take("max_rate", &model.actuator.max_rate, false, 0.5);

    if (!kv.empty())
        throw ValidationError("unknown key '" + kv.begin()->first + "' in " + path,
                              "plant.coeff_file");
    if (!(model.actuator.max_deflection > 0.0) || !(model.actuator.max_rate > 0.0))
        throw ValidationError("actuator limits must be positive", "plant.coeff_file");

    model.validate();
    return model;
}

}  // namespace ipdt

#pragma once

// Fixed-step simulation engine: time base, signal sources, dead-time delay
// line and RK4 state integration. Everything here is deterministic by
// construction; re-running a loop with identical inputs gives bit-identical
// traces.

#include <array>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <deque>
#include <optional>
#include <vector>

#include "ipdt/errors.hpp"

namespace ipdt {

/// Uniform time grid. Sample k lives at exactly k * step_h (computed as a
/// product, never by accumulation, so long runs do not drift).
struct TimeGrid {
    double step_h = 0.05;     ///< step size [s], > 0
    double horizon_T = 1.0;   ///< run length [s], >= step_h

    TimeGrid() = default;
    TimeGrid(double h, double horizon) : step_h(h), horizon_T(horizon) {
        if (!(step_h > 0.0))
            throw ValidationError("step_h must be > 0", "grid.step");
        if (!(horizon_T >= step_h))
            throw ValidationError("horizon_T must be >= step_h", "grid.horizon");
    }

    std::size_t n_steps() const {
        return static_cast<std::size_t>(std::llround(horizon_T / step_h));
    }
    double time(std::size_t k) const { return static_cast<double>(k) * step_h; }
};

/// Additive signal source built from step / ramp / constant terms. A "sum"
/// signal is simply one holding several terms.
class Signal {
public:
    enum class Kind { step, ramp, constant };

    struct Term {
        Kind kind = Kind::constant;
        double amplitude = 0.0;   // step height, ramp slope, or constant level
        double start_time = 0.0;  // ignored for constant terms
    };

    Signal() = default;

    static Signal zero() { return Signal{}; }
    static Signal constant(double level) {
        return Signal{{Term{Kind::constant, level, 0.0}}};
    }
    static Signal step(double amplitude, double start_time = 0.0) {
        return Signal{{Term{Kind::step, amplitude, start_time}}};
    }
    static Signal ramp(double slope, double start_time = 0.0) {
        return Signal{{Term{Kind::ramp, slope, start_time}}};
    }

    Signal& add(const Term& term) {
        terms_.push_back(term);
        return *this;
    }
    Signal& add(const Signal& other) {
        terms_.insert(terms_.end(), other.terms_.begin(), other.terms_.end());
        return *this;
    }

    double operator()(double t) const {
        double v = 0.0;
        for (const Term& term : terms_) {
            switch (term.kind) {
                case Kind::constant: v += term.amplitude; break;
                case Kind::step:
                    if (t >= term.start_time) v += term.amplitude;
                    break;
                case Kind::ramp:
                    if (t >= term.start_time) v += term.amplitude * (t - term.start_time);
                    break;
            }
        }
        return v;
    }

    const std::vector<Term>& terms() const { return terms_; }

    /// Earliest step/ramp onset, or 0 when the signal has no transient part.
    /// Metric extraction uses this as the default step time.
    double first_event_time() const {
        double t0 = 0.0;
        bool found = false;
        for (const Term& term : terms_) {
            if (term.kind == Kind::constant || term.amplitude == 0.0) continue;
            if (!found || term.start_time < t0) {
                t0 = term.start_time;
                found = true;
            }
        }
        return found ? t0 : 0.0;
    }

    bool is_identically_zero() const {
        for (const Term& term : terms_)
            if (term.amplitude != 0.0) return false;
        return true;
    }

    /// True when the signal actually changes at some point (has a nonzero
    /// step or ramp term), as opposed to being constant.
    bool has_transient() const {
        for (const Term& term : terms_)
            if (term.kind != Kind::constant && term.amplitude != 0.0) return true;
        return false;
    }

private:
    explicit Signal(std::vector<Term> terms) : terms_(std::move(terms)) {}
    std::vector<Term> terms_;
};

/// Transport-delay line over grid-aligned samples.
///
/// push() must be called once per step with strictly increasing t. output
/// equals the input from delay_d seconds earlier, linearly interpolated
/// between stored samples when the delay is not an integer multiple of the
/// step. Before enough history exists the line reports fill_value.
///
/// For a zero-order-held input the interpolated value at t - d equals the
/// exact average of the delayed input over [t, t + h], so integrating a pure
/// integrator against it reproduces the continuous ramp exactly at grid
/// points.
class DelayLine {
public:
    explicit DelayLine(double delay_d = 0.0, double fill_value = 0.0)
        : delay_(delay_d), fill_(fill_value) {
        if (delay_ < 0.0)
            throw ValidationError("delay must be >= 0", "delay_line.delay");
    }

    double delay() const { return delay_; }

    /// Record input u at time t and return the delayed value u(t - delay).
    double push_pop(double t, double u) {
        if (has_last_ && !(t > last_t_))
            throw ContractViolation("DelayLine::push_pop called with non-increasing time");
        has_last_ = true;
        last_t_ = t;
        buf_.push_back({t, u});
        const double out = sample(t - delay_);
        trim(t - delay_);
        return out;
    }

    std::size_t size() const { return buf_.size(); }

private:
    struct Entry {
        double t;
        double v;
    };

    double sample(double tq) const {
        if (buf_.empty() || tq < buf_.front().t) return fill_;
        if (tq >= buf_.back().t) return buf_.back().v;
        // buf_ is short (O(d/h)); linear scan from the front is fine.
        for (std::size_t i = 1; i < buf_.size(); ++i) {
            if (tq <= buf_[i].t) {
                const Entry& lo = buf_[i - 1];
                const Entry& hi = buf_[i];
                const double w = (tq - lo.t) / (hi.t - lo.t);
                return lo.v + w * (hi.v - lo.v);
            }
        }
        return buf_.back().v;
    }

    // Keep exactly one sample at or before the query time so the next
    // interpolation still has its left bracket.
    void trim(double tq) {
        while (buf_.size() >= 2 && buf_[1].t <= tq) buf_.pop_front();
    }

    double delay_;
    double fill_;
    bool has_last_ = false;
    double last_t_ = 0.0;
    std::deque<Entry> buf_;
};

/// One classical 4th-order Runge-Kutta step with the input held constant
/// over the step (the derivative functor closes over it). Throws
/// NumericFault if any stage produces a non-finite derivative.
template <std::size_t N, typename Deriv>
std::array<double, N> rk4_step(Deriv&& deriv, const std::array<double, N>& x,
                               double t, double h) {
    if (!(h > 0.0)) throw ValidationError("rk4 step size must be > 0");

    auto eval = [&](const std::array<double, N>& xs, double ts) {
        std::array<double, N> dx = deriv(xs, ts);
        for (double v : dx)
            if (!std::isfinite(v)) throw NumericFault("non-finite derivative", ts);
        return dx;
    };

    const std::array<double, N> k1 = eval(x, t);
    std::array<double, N> xs;
    for (std::size_t i = 0; i < N; ++i) xs[i] = x[i] + 0.5 * h * k1[i];
    const std::array<double, N> k2 = eval(xs, t + 0.5 * h);
    for (std::size_t i = 0; i < N; ++i) xs[i] = x[i] + 0.5 * h * k2[i];
    const std::array<double, N> k3 = eval(xs, t + 0.5 * h);
    for (std::size_t i = 0; i < N; ++i) xs[i] = x[i] + h * k3[i];
    const std::array<double, N> k4 = eval(xs, t + h);

    std::array<double, N> out;
    for (std::size_t i = 0; i < N; ++i)
        out[i] = x[i] + (h / 6.0) * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
    return out;
}

/// Scalar convenience overload.
template <typename Deriv>
double rk4_step(Deriv&& deriv, double x, double t, double h) {
    auto wrap = [&](const std::array<double, 1>& xs, double ts) {
        return std::array<double, 1>{deriv(xs[0], ts)};
    };
    return rk4_step<1>(wrap, std::array<double, 1>{x}, t, h)[0];
}

/// Uniformly sampled record of one closed- or open-loop run.
/// Column meanings match the CSV emitted by the scenario runner:
/// t, r (setpoint), d_in (input disturbance), u_ff / u_fb (controller
/// components), u_applied (after actuator limits), y (plant output).
/// fault_time is set when integration aborted (state blew up or left the
/// model's valid range); the rows up to the fault are kept.
struct SimTrace {
    std::vector<double> t;
    std::vector<double> r;
    std::vector<double> d_in;
    std::vector<double> u_ff;
    std::vector<double> u_fb;
    std::vector<double> u_applied;
    std::vector<double> y;
    std::optional<double> fault_time;

    std::size_t size() const { return t.size(); }
    double step_h() const { return t.size() >= 2 ? t[1] - t[0] : 0.0; }

    void reserve(std::size_t n) {
        t.reserve(n);
        r.reserve(n);
        d_in.reserve(n);
        u_ff.reserve(n);
        u_fb.reserve(n);
        u_applied.reserve(n);
        y.reserve(n);
    }

    bool operator==(const SimTrace&) const = default;
};

/// What a controller hands back each sample.
struct ControlAction {
    double u_ff = 0.0;       ///< feedforward component
    double u_fb = 0.0;       ///< feedback component (subtracted from u_ff)
    double u_cmd = 0.0;      ///< raw command before actuator limits
    double u_applied = 0.0;  ///< command after rate limit and saturation
};

template <typename P>
concept Process = requires(P p, double u, double t, double h) {
    { p.output() } -> std::convertible_to<double>;
    { p.step(u, t, h) };
};

template <typename C>
concept LoopController = requires(C c, double r, double y, double t, double h) {
    { c.update(r, y, t, h) } -> std::convertible_to<ControlAction>;
};

/// Run one loop over the grid. Per sample k: read the plant output, let the
/// controller act on (r, y), then advance the plant with the applied command
/// plus the input disturbance held over the step. The trace holds
/// n_steps + 1 rows; the last row records the controller state at the final
/// time without stepping past the horizon. A NumericFault while stepping
/// truncates the run and stamps fault_time instead of propagating, so a
/// diverging case still yields an inspectable (flagged) trace.
template <Process P, LoopController C>
SimTrace run_loop(P& process, C& controller, const TimeGrid& grid,
                  const Signal& setpoint, const Signal& disturbance) {
    const std::size_t n = grid.n_steps();
    SimTrace trace;
    trace.reserve(n + 1);

    for (std::size_t k = 0; k <= n; ++k) {
        const double t = grid.time(k);
        const double r = setpoint(t);
        const double din = disturbance(t);
        const double y = process.output();
        const ControlAction act = controller.update(r, y, t, grid.step_h);

        trace.t.push_back(t);
        trace.r.push_back(r);
        trace.d_in.push_back(din);
        trace.u_ff.push_back(act.u_ff);
        trace.u_fb.push_back(act.u_fb);
        trace.u_applied.push_back(act.u_applied);
        trace.y.push_back(y);

        if (k < n) {
            try {
                process.step(act.u_applied + din, t, grid.step_h);
            } catch (const NumericFault& fault) {
                trace.fault_time = fault.time();
                break;
            }
        }
    }
    return trace;
}

}  // namespace ipdt

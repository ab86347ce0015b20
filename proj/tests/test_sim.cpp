#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "ipdt/control.hpp"
#include "ipdt/process.hpp"
#include "ipdt/sim.hpp"
#include "ipdt/tuning.hpp"

namespace ipdt {
namespace {

TEST(TimeGrid, StepCountAndSampleTimes) {
    const TimeGrid grid(0.05, 300.0);
    EXPECT_EQ(grid.n_steps(), 6000u);
    EXPECT_DOUBLE_EQ(grid.time(0), 0.0);
    EXPECT_DOUBLE_EQ(grid.time(3), 3 * 0.05);
    EXPECT_DOUBLE_EQ(grid.time(6000), 6000 * 0.05);
}

TEST(TimeGrid, RejectsBadParameters) {
    EXPECT_THROW(TimeGrid(0.0, 1.0), ValidationError);
    EXPECT_THROW(TimeGrid(-0.1, 1.0), ValidationError);
    EXPECT_THROW(TimeGrid(1.0, 0.5), ValidationError);
}

TEST(Signal, StepRampConstantValues) {
    const Signal s = Signal::step(2.0, 1.0);
    EXPECT_DOUBLE_EQ(s(0.999), 0.0);
    EXPECT_DOUBLE_EQ(s(1.0), 2.0);  // onset is inclusive
    EXPECT_DOUBLE_EQ(s(5.0), 2.0);

    const Signal r = Signal::ramp(0.5, 2.0);
    EXPECT_DOUBLE_EQ(r(1.0), 0.0);
    EXPECT_DOUBLE_EQ(r(2.0), 0.0);
    EXPECT_DOUBLE_EQ(r(4.0), 1.0);

    const Signal c = Signal::constant(-3.0);
    EXPECT_DOUBLE_EQ(c(0.0), -3.0);
    EXPECT_DOUBLE_EQ(c(100.0), -3.0);
}

TEST(Signal, TermsAreAdditive) {
    Signal s = Signal::step(1.0, 1.0);
    s.add(Signal::ramp(2.0, 3.0));
    s.add(Signal::constant(0.25));
    EXPECT_DOUBLE_EQ(s(0.0), 0.25);
    EXPECT_DOUBLE_EQ(s(2.0), 1.25);
    EXPECT_DOUBLE_EQ(s(4.0), 1.0 + 2.0 + 0.25);
}

TEST(Signal, EventDetection) {
    EXPECT_TRUE(Signal::zero().is_identically_zero());
    EXPECT_TRUE(Signal::constant(1.0).has_transient() == false);
    EXPECT_FALSE(Signal::constant(1.0).is_identically_zero());

    Signal s = Signal::step(1.0, 4.0);
    s.add(Signal::ramp(0.1, 2.0));
    EXPECT_TRUE(s.has_transient());
    EXPECT_DOUBLE_EQ(s.first_event_time(), 2.0);

    // Zero-amplitude terms do not count as events.
    Signal z = Signal::step(0.0, 1.0);
    EXPECT_FALSE(z.has_transient());
    EXPECT_DOUBLE_EQ(z.first_event_time(), 0.0);
}

TEST(DelayLine, InterpolatesLinearHistoryExactly) {
    // For a ramp input, linear interpolation is exact even when the delay is
    // not a multiple of the step.
    const double h = 0.1, d = 0.25;
    DelayLine line(d, 0.0);
    for (int k = 0; k < 100; ++k) {
        const double t = k * h;
        const double out = line.push_pop(t, t);  // input value == time
        if (t - d >= 0.0)
            EXPECT_NEAR(out, t - d, 1e-12) << "k=" << k;
        else
            EXPECT_DOUBLE_EQ(out, 0.0);
    }
}

TEST(DelayLine, ReportsFillBeforeHistory) {
    DelayLine line(1.0, -7.5);
    EXPECT_DOUBLE_EQ(line.push_pop(0.0, 3.0), -7.5);
    EXPECT_DOUBLE_EQ(line.push_pop(0.5, 4.0), -7.5);
}

TEST(DelayLine, ZeroDelayPassesThrough) {
    DelayLine line(0.0, 0.0);
    EXPECT_DOUBLE_EQ(line.push_pop(0.0, 1.5), 1.5);
    EXPECT_DOUBLE_EQ(line.push_pop(0.1, 2.5), 2.5);
}

TEST(DelayLine, RejectsNonMonotoneTime) {
    DelayLine line(1.0, 0.0);
    line.push_pop(0.0, 1.0);
    EXPECT_THROW(line.push_pop(0.0, 2.0), ContractViolation);
    EXPECT_THROW(line.push_pop(-0.1, 2.0), ContractViolation);
}

TEST(DelayLine, TrimsHistoryToTheDelayWindow) {
    const double h = 0.05;
    DelayLine line(0.5, 0.0);
    for (int k = 0; k < 10000; ++k) line.push_pop(k * h, 1.0);
    // 0.5 s of history at 0.05 s steps is 10 samples; allow the bracket pair.
    EXPECT_LE(line.size(), 12u);
}

TEST(DelayLine, RejectsNegativeDelay) {
    EXPECT_THROW(DelayLine(-0.1, 0.0), ValidationError);
}

TEST(Rk4, SingleStepExponentialDecayOracle) {
    // x' = -x, x(0) = 1, h = 0.1. The classical RK4 update gives exactly
    // 1 - h + h^2/2 - h^3/6 + h^4/24 = 0.9048375.
    const double x1 = rk4_step([](double x, double) { return -x; }, 1.0, 0.0, 0.1);
    EXPECT_NEAR(x1, 0.9048375, 1e-15);
}

TEST(Rk4, FourthOrderConvergence) {
    // Halving the step on x' = -x over [0, 1] must shrink the global error
    // by about 2^4.
    const auto integrate = [](double h) {
        double x = 1.0;
        const int n = static_cast<int>(std::lround(1.0 / h));
        for (int k = 0; k < n; ++k)
            x = rk4_step([](double v, double) { return -v; }, x, k * h, h);
        return x;
    };
    const double exact = std::exp(-1.0);
    const double e1 = std::abs(integrate(0.1) - exact);
    const double e2 = std::abs(integrate(0.05) - exact);
    EXPECT_GT(e1 / e2, 14.0);
    EXPECT_LT(e1 / e2, 18.0);
}

TEST(Rk4, VectorStateMatchesComponentwiseScalar) {
    // Decoupled system integrates like two scalars.
    const std::array<double, 2> x0{1.0, 2.0};
    const auto deriv = [](const std::array<double, 2>& x, double) {
        return std::array<double, 2>{-x[0], -0.5 * x[1]};
    };
    const std::array<double, 2> x1 = rk4_step<2>(deriv, x0, 0.0, 0.1);
    const double s0 = rk4_step([](double v, double) { return -v; }, 1.0, 0.0, 0.1);
    const double s1 = rk4_step([](double v, double) { return -0.5 * v; }, 2.0, 0.0, 0.1);
    EXPECT_DOUBLE_EQ(x1[0], s0);
    EXPECT_DOUBLE_EQ(x1[1], s1);
}

TEST(Rk4, ThrowsOnNonFiniteDerivative) {
    EXPECT_THROW(
        rk4_step([](double, double) { return std::numeric_limits<double>::infinity(); }, 1.0, 0.0,
                 0.1),
        NumericFault);
    EXPECT_THROW(rk4_step([](double x, double) { return -x; }, 1.0, 0.0, 0.0), ValidationError);
}

TEST(RunLoop, TraceShapeAndTimeBase) {
    IpdtPlant plant(IpdtModel(0.0506, 6.0));
    IpiController ctrl(tune_ipi(0.0506, 6.0).gains);
    const TimeGrid grid(0.05, 30.0);
    const SimTrace trace = run_loop(plant, ctrl, grid, Signal::step(1.0, 1.0), Signal::zero());
    ASSERT_EQ(trace.size(), grid.n_steps() + 1);
    EXPECT_DOUBLE_EQ(trace.t.front(), 0.0);
    EXPECT_DOUBLE_EQ(trace.t.back(), 30.0);
    EXPECT_DOUBLE_EQ(trace.step_h(), 0.05);
    EXPECT_FALSE(trace.fault_time.has_value());
}

TEST(RunLoop, ReRunsAreBitIdentical) {
    const auto run_once = [] {
        IpdtPlant plant(IpdtModel(0.0506, 6.0));
        IpiController ctrl(tune_ipi(0.0506, 6.0).gains);
        const TimeGrid grid(0.05, 120.0);
        return run_loop(plant, ctrl, grid, Signal::step(1.0, 1.0),
                        Signal::step(0.3, 40.0));
    };
    EXPECT_TRUE(run_once() == run_once());
}

TEST(RunLoop, NumericFaultTruncatesAndStampsTheTrace) {
    // A plant that blows up mid-run: the trace keeps the rows before the
    // fault and records the fault time instead of throwing.
    struct ExplodingPlant {
        double y = 0.0;
        double output() const { return y; }
        void step(double, double t, double) {
            if (t >= 0.5) throw NumericFault("boom", t);
            y += 0.1;
        }
    };
    ExplodingPlant plant;
    OpenLoopController ctrl(Signal::constant(1.0));
    const SimTrace trace = run_loop(plant, ctrl, TimeGrid(0.1, 2.0), Signal::zero(),
                                    Signal::zero());
    ASSERT_TRUE(trace.fault_time.has_value());
    EXPECT_NEAR(*trace.fault_time, 0.5, 1e-12);
    EXPECT_LT(trace.size(), 21u);
    EXPECT_GE(trace.size(), 6u);
}

}  // namespace
}  // namespace ipdt

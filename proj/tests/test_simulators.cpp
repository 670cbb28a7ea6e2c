#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "acl/error.hpp"
#include "acl/rng.hpp"
#include "acl/simulators.hpp"
#include "vendor/doctest.h"

using namespace acl;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("oscillator spec validation") {
    HarmonicOscillatorSpec s;
    CHECK_NOTHROW(s.validate());
    s.period_min = 15.0;  // above period_max
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = {};
    s.amplitude = 0.0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = {};
    s.length = 1;
    CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("pendulum draws follow their reported sinusoid exactly") {
    HarmonicOscillatorSpec spec;
    spec.amplitude = 1.7;
    spec.length = 9;
    Rng rng(21);
    for (int d = 0; d < 50; ++d) {
        PendulumDraw draw = sample_pendulum_trajectory_ex(spec, rng);
        REQUIRE(draw.y.rows() == 9);
        REQUIRE(draw.y.cols() == 1);
        CHECK(draw.period >= spec.period_min);
        CHECK(draw.period <= spec.period_max);
        CHECK(draw.phase >= 0.0);
        CHECK(draw.phase < 2.0 * kPi);
        for (int t = 0; t < 9; ++t) {
            const double want =
                spec.amplitude * std::sin(2.0 * kPi * t / draw.period + draw.phase);
            CHECK(draw.y.at(t, 0) == doctest::Approx(want).epsilon(1e-12));
        }
    }
}

TEST_CASE("pendulum draw bounds over many samples") {
    HarmonicOscillatorSpec spec;
    spec.amplitude = 2.0;
    Rng rng(22);
    double lo = 1e9, hi = -1e9;
    for (int d = 0; d < 1000; ++d) {
        Tensor y = sample_pendulum_trajectory(spec, rng);
        for (int t = 0; t < y.rows(); ++t) {
            CHECK(std::fabs(y.at(t, 0)) <= spec.amplitude);
            lo = std::min(lo, y.at(t, 0));
            hi = std::max(hi, y.at(t, 0));
        }
    }
    // The family actually fills its range.
    CHECK(lo < -1.8);
    CHECK(hi > 1.8);
}

TEST_CASE("pendulum rendering: canvas, mirror, angular response") {
    Tensor img = render_pendulum_frame(0.0);
    REQUIRE(img.rows() == kCanvas);
    REQUIRE(img.cols() == kCanvas);
    double drawn = 0.0;
    for (int i = 0; i < kCanvas; ++i)
        for (int j = 0; j < kCanvas; ++j) {
            const double v = img.at(i, j);
            CHECK((v == 0.0 || v == 1.0));
            drawn += v;
        }
    CHECK(drawn > 10.0);  // ball plus pivot actually drawn

    SUBCASE("negating the angle mirrors the columns exactly") {
        for (double a : {0.3, 0.9, 1.4}) {
            const Tensor pos = render_pendulum_frame(a);
            const Tensor neg = render_pendulum_frame(-a);
            for (int i = 0; i < kCanvas; ++i)
                for (int j = 0; j < kCanvas; ++j)
                    CHECK(neg.at(i, j) == pos.at(i, kCanvas - 1 - j));
        }
    }

    SUBCASE("ball centroid tracks the angle") {
        // Rows >= 5 exclude the fixed pivot marker, leaving only the ball.
        auto ball_x = [](double angle) {
            const Tensor f = render_pendulum_frame(angle);
            double sx = 0.0, n = 0.0;
            for (int i = 5; i < kCanvas; ++i)
                for (int j = 0; j < kCanvas; ++j)
                    if (f.at(i, j) > 0.5) {
                        sx += j;
                        n += 1.0;
                    }
            REQUIRE(n > 0.0);
            return sx / n;
        };
        CHECK(ball_x(0.8) > ball_x(0.3));
        CHECK(ball_x(0.3) > ball_x(0.0));
        CHECK(ball_x(0.0) > ball_x(-0.3));
        CHECK(ball_x(-0.3) > ball_x(-0.8));
    }
}

TEST_CASE("skeleton spec validation") {
    TrapezoidSkeletonSpec s;
    CHECK_NOTHROW(s.validate());
    s.frames = 1;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = {};
    s.kick_min = 0.7;  // above kick_max
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = {};
    s.leg_length = 0.0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("skeleton trajectories: mirror symmetry and kick geometry") {
    TrapezoidSkeletonSpec spec;
    spec.noise = 0.0;  // isolate the deterministic geometry
    Rng rng(23);
    for (int d = 0; d < 20; ++d) {
        Tensor traj = sample_skeleton_trajectory(spec, rng);
        REQUIRE(traj.rows() == spec.frames);
        REQUIRE(traj.cols() == 2 * kSkeletonJoints);
        double prev_sep = -1.0;
        for (int f = 0; f < traj.rows(); ++f) {
            // Exact mirror: left x = 2*center - right x, equal y.
            for (int pair = 0; pair < 3; ++pair) {
                const int l = 2 * pair, r = 2 * pair + 1;
                CHECK(traj.at(f, 2 * l) == 2.0 * spec.center_x - traj.at(f, 2 * r));
                CHECK(traj.at(f, 2 * l + 1) == traj.at(f, 2 * r + 1));
            }
            // Hips stay put.
            CHECK(traj.at(f, 1) == spec.hip_y);
            CHECK(traj.at(f, 2 * 1) == spec.center_x + spec.hip_width / 2.0);
            // Knee bisects hip and foot on the straight leg.
            CHECK(traj.at(f, 2 * 3) ==
                  doctest::Approx((traj.at(f, 2 * 1) + traj.at(f, 2 * 5)) / 2.0));
            // Feet sweep outward monotonically.
            const double sep = traj.at(f, 2 * 5) - traj.at(f, 2 * 4);
            CHECK(sep >= prev_sep - 1e-12);
            prev_sep = sep;
            // Feet below hips by the leg length for small angles.
            CHECK(traj.at(f, 2 * 5 + 1) > spec.hip_y);
        }
        // The kick actually opens: final separation above the initial one.
        CHECK(traj.at(traj.rows() - 1, 2 * 5) - traj.at(traj.rows() - 1, 2 * 4) >
              traj.at(0, 2 * 5) - traj.at(0, 2 * 4) + 1.0);
    }
}

TEST_CASE("skeleton noise is applied after mirroring") {
    TrapezoidSkeletonSpec spec;  // default noise 0.5
    Rng rng(24);
    Tensor traj = sample_skeleton_trajectory(spec, rng);
    int broken = 0;
    for (int f = 0; f < traj.rows(); ++f)
        if (traj.at(f, 0) != 2.0 * spec.center_x - traj.at(f, 2)) ++broken;
    CHECK(broken > 0);  // mirror only holds pre-noise
}

TEST_CASE("skeleton rendering: joints drawn, clamping flagged") {
    std::vector<double> joints = {12, 10, 20, 10, 11, 18, 21, 18, 10, 26, 22, 26};
    SkeletonRender r = render_skeleton_frame(joints);
    REQUIRE(r.image.rows() == kCanvas);
    REQUIRE(r.image.cols() == kCanvas);
    CHECK_FALSE(r.clamped);
    // Every joint disk center is lit.
    for (int j = 0; j < kSkeletonJoints; ++j) {
        const int x = static_cast<int>(joints[2 * j]);
        const int y = static_cast<int>(joints[2 * j + 1]);
        CHECK(r.image.at(y, x) > 0.0);
    }
    joints[0] = -5.0;  // push one joint off the canvas
    CHECK(render_skeleton_frame(joints).clamped);
    CHECK_THROWS_AS(render_skeleton_frame(std::vector<double>(7)), DimensionError);
}

TEST_CASE("target column helpers split a step-major window") {
    CHECK(temperature_target_cols(1) == std::vector<int>{0, 1});
    CHECK(humidity_target_cols(1) == std::vector<int>{2, 3});
    CHECK(temperature_target_cols(2) == std::vector<int>{0, 1, 4, 5});
    CHECK(humidity_target_cols(2) == std::vector<int>{2, 3, 6, 7});
}

namespace {

TimeSeriesGroup flat_group(double base, bool complete) {
    TimeSeriesGroup g;
    g.complete = complete;
    for (int s = 0; s < kSeriesSteps; ++s)
        for (int c = 0; c < kSeriesChannels; ++c)
            g.steps[s][c] = complete || c < 2
                                ? base + 10.0 * c + s
                                : std::numeric_limits<double>::quiet_NaN();
    return g;
}

}  // namespace

TEST_CASE("timeseries label sampling") {
    std::vector<TimeSeriesGroup> groups = {flat_group(100, true),
                                           flat_group(200, false),
                                           flat_group(300, true)};
    Rng rng(25);
    const int k = 2, batch = 64;
    TimeseriesLabelBatch lb = sample_timeseries_labels(groups, batch, k, rng);
    REQUIRE(lb.temperature.rows() == batch);
    REQUIRE(lb.temperature.cols() == 2 * k);
    REQUIRE(lb.humidity.rows() == batch);

    std::set<double> temp_bases, hum_bases;
    for (int i = 0; i < batch; ++i) {
        // Rows are the last k steps of one group: step 5 then step 6.
        const double base_t = lb.temperature.at(i, 0) - 5.0;
        temp_bases.insert(base_t);
        CHECK(lb.temperature.at(i, 1) == base_t + 10.0 + 5.0);  // temp_out, step 5
        CHECK(lb.temperature.at(i, 2) == base_t + 6.0);         // temp_in, step 6
        CHECK(lb.temperature.at(i, 3) == base_t + 10.0 + 6.0);

        const double base_h = lb.humidity.at(i, 0) - 20.0 - 5.0;
        hum_bases.insert(base_h);
        CHECK(lb.humidity.at(i, 1) == base_h + 30.0 + 5.0);
        CHECK(lb.humidity.at(i, 2) == base_h + 20.0 + 6.0);
        CHECK(lb.humidity.at(i, 3) == base_h + 30.0 + 6.0);
    }
    // Temperature draws reach every group, humidity only the complete ones.
    CHECK(temp_bases == std::set<double>{100, 200, 300});
    CHECK(hum_bases == std::set<double>{100, 300});

    SUBCASE("no complete group") {
        std::vector<TimeSeriesGroup> bad = {flat_group(1, false)};
        CHECK_THROWS_AS(sample_timeseries_labels(bad, 4, k, rng), ConfigError);
    }
    SUBCASE("bad arguments") {
        CHECK_THROWS_AS(sample_timeseries_labels(groups, 0, k, rng),
                        ArgumentError);
        CHECK_THROWS_AS(sample_timeseries_labels(groups, 4, 0, rng),
                        ArgumentError);
        CHECK_THROWS_AS(sample_timeseries_labels(groups, 4, 8, rng),
                        ArgumentError);
        CHECK_THROWS_AS(
            sample_timeseries_labels(std::vector<TimeSeriesGroup>{}, 4, k, rng),
            ArgumentError);
    }
}

#include "acl/simulators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "acl/error.hpp"

namespace acl {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Exactly odd in its argument: sin_odd(-a) == -sin_odd(a) bitwise, which the
// renderer's mirror guarantee leans on (plain std::sin has no such contract).
double sin_odd(double a) {
    return std::copysign(std::sin(std::fabs(a)), a);
}

double seg_dist2(double px, double py, double ax, double ay, double bx,
                 double by) {
    const double vx = bx - ax, vy = by - ay;
    const double wx = px - ax, wy = py - ay;
    const double vv = vx * vx + vy * vy;
    double t = vv > 0.0 ? (wx * vx + wy * vy) / vv : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double dx = wx - t * vx;
    const double dy = wy - t * vy;
    return dx * dx + dy * dy;
}

}  // namespace

void HarmonicOscillatorSpec::validate() const {
    if (!(period_min <= period_max))
        throw ConfigError("oscillator: period_min must be <= period_max");
    if (!(amplitude > 0.0))
        throw ConfigError("oscillator: amplitude must be positive");
    if (length < 2) throw ConfigError("oscillator: length must be >= 2");
}

PendulumDraw sample_pendulum_trajectory_ex(const HarmonicOscillatorSpec& spec,
                                           Rng& rng) {
    spec.validate();
    PendulumDraw d;
    d.period = rng.uniform(spec.period_min, spec.period_max);
    d.phase = rng.uniform(0.0, 2.0 * kPi);
    d.y = Tensor(spec.length, 1);
    for (int t = 0; t < spec.length; ++t)
        d.y.data()[t] =
            spec.amplitude * std::sin(2.0 * kPi * t / d.period + d.phase);
    return d;
}

Tensor sample_pendulum_trajectory(const HarmonicOscillatorSpec& spec,
                                  Rng& rng) {
    return sample_pendulum_trajectory_ex(spec, rng).y;
}

Tensor render_pendulum_frame(double angle) {
    if (!std::isfinite(angle))
        throw ArgumentError("render_pendulum_frame: non-finite angle");
    constexpr double cx = 15.5;   // mirror axis
    constexpr double pivot_y = 2.0;
    constexpr double rod = 12.0;
    constexpr double ball_r2 = 2.5 * 2.5;
    constexpr double pivot_r2 = 1.4 * 1.4;
    // cos over |angle| and the odd sine keep the ball center's x offset
    // exactly sign-symmetric and its y identical for +-angle.
    const double off_x = rod * sin_odd(angle);
    const double ball_y = pivot_y + rod * std::cos(std::fabs(angle));
    Tensor img(kCanvas, kCanvas);
    for (int py = 0; py < kCanvas; ++py) {
        for (int px = 0; px < kCanvas; ++px) {
            const double ax = px - cx;
            const double dx = ax - off_x;
            const double dy = py - ball_y;
            const double pdy = py - pivot_y;
            if (dx * dx + dy * dy <= ball_r2 ||
                ax * ax + pdy * pdy <= pivot_r2)
                img.at(py, px) = 1.0;
        }
    }
    return img;
}

void TrapezoidSkeletonSpec::validate() const {
    if (!(hip_width > 0.0) || !(leg_length > 0.0))
        throw ConfigError("skeleton: geometric extents must be positive");
    if (!(0.0 <= kick_min && kick_min <= kick_max && kick_max < kPi / 2))
        throw ConfigError("skeleton: kick range must satisfy 0 <= min <= max < pi/2");
    if (!(0.0 < rate_min && rate_min <= rate_max))
        throw ConfigError("skeleton: rate range must satisfy 0 < min <= max");
    if (frames < 2) throw ConfigError("skeleton: frames must be >= 2");
    if (noise < 0.0) throw ConfigError("skeleton: noise must be >= 0");
}

Tensor sample_skeleton_trajectory(const TrapezoidSkeletonSpec& spec, Rng& rng) {
    spec.validate();
    const double kick = rng.uniform(spec.kick_min, spec.kick_max);
    const double rate = rng.uniform(spec.rate_min, spec.rate_max);
    const double half = spec.hip_width / 2.0;
    const double knee_len = spec.leg_length / 2.0;
    Tensor out(spec.frames, 2 * kSkeletonJoints);
    for (int t = 0; t < spec.frames; ++t) {
        const double phase =
            std::min(1.0, rate * t / static_cast<double>(spec.frames - 1));
        const double a = kick * phase;
        const double sa = std::sin(a);
        const double ca = std::cos(a);
        const double rhx = spec.center_x + half;
        const double rkx = rhx + knee_len * sa;
        const double rky = spec.hip_y + knee_len * ca;
        const double rfx = rhx + spec.leg_length * sa;
        const double rfy = spec.hip_y + spec.leg_length * ca;
        double* row = out.data() + static_cast<std::size_t>(t) * 12;
        // Left x coordinates mirror the right ones in a single subtraction;
        // this is the exact-symmetry invariant the property tests pin down.
        row[0] = 2.0 * spec.center_x - rhx;
        row[1] = spec.hip_y;
        row[2] = rhx;
        row[3] = spec.hip_y;
        row[4] = 2.0 * spec.center_x - rkx;
        row[5] = rky;
        row[6] = rkx;
        row[7] = rky;
        row[8] = 2.0 * spec.center_x - rfx;
        row[9] = rfy;
        row[10] = rfx;
        row[11] = rfy;
    }
    if (spec.noise > 0.0)
        for (double& v : out.values()) v += rng.normal(0.0, spec.noise);
    return out;
}

SkeletonRender render_skeleton_frame(const std::vector<double>& joints) {
    if (joints.size() != 2 * kSkeletonJoints)
        throw DimensionError("render_skeleton_frame: expected 12 values, got " +
                             std::to_string(joints.size()));
    constexpr double joint_r2 = 1.3 * 1.3;
    constexpr double seg_r2 = 0.7 * 0.7;
    constexpr double seg_level = 0.6;
    SkeletonRender res;
    res.clamped = false;
    std::array<double, 12> j;
    for (int i = 0; i < 12; ++i) {
        if (!std::isfinite(joints[i]))
            throw ArgumentError("render_skeleton_frame: non-finite joint");
        double v = joints[i];
        if (v < 0.0 || v > kCanvas - 1.0) {
            res.clamped = true;
            v = std::clamp(v, 0.0, kCanvas - 1.0);
        }
        j[i] = v;
    }
    // Segment endpoints by joint index: hip-knee and knee-foot per side.
    constexpr int segs[4][2] = {{0, 2}, {2, 4}, {1, 3}, {3, 5}};
    res.image = Tensor(kCanvas, kCanvas);
    for (int py = 0; py < kCanvas; ++py) {
        for (int px = 0; px < kCanvas; ++px) {
            double v = 0.0;
            for (int q = 0; q < kSkeletonJoints; ++q) {
                const double dx = px - j[2 * q];
                const double dy = py - j[2 * q + 1];
                if (dx * dx + dy * dy <= joint_r2) {
                    v = 1.0;
                    break;
                }
            }
            if (v == 0.0) {
                for (const auto& s : segs) {
                    if (seg_dist2(px, py, j[2 * s[0]], j[2 * s[0] + 1],
                                  j[2 * s[1]], j[2 * s[1] + 1]) <= seg_r2) {
                        v = seg_level;
                        break;
                    }
                }
            }
            if (v > 0.0) res.image.at(py, px) = v;
        }
    }
    return res;
}

std::vector<int> temperature_target_cols(int k) {
    std::vector<int> cols;
    for (int s = 0; s < k; ++s) {
        cols.push_back(kSeriesChannels * s + 0);
        cols.push_back(kSeriesChannels * s + 1);
    }
    return cols;
}

std::vector<int> humidity_target_cols(int k) {
    std::vector<int> cols;
    for (int s = 0; s < k; ++s) {
        cols.push_back(kSeriesChannels * s + 2);
        cols.push_back(kSeriesChannels * s + 3);
    }
    return cols;
}

TimeseriesLabelBatch sample_timeseries_labels(
    const std::vector<TimeSeriesGroup>& groups, int batch, int k, Rng& rng) {
    if (groups.empty())
        throw ArgumentError("sample_timeseries_labels: no groups");
    if (batch < 1)
        throw ArgumentError("sample_timeseries_labels: batch must be >= 1");
    if (k < 1 || k > kSeriesSteps)
        throw ArgumentError("sample_timeseries_labels: bad target length " +
                            std::to_string(k));
    std::vector<int> complete;
    for (std::size_t i = 0; i < groups.size(); ++i)
        if (groups[i].complete) complete.push_back(static_cast<int>(i));
    if (complete.empty())
        throw ConfigError(
            "sample_timeseries_labels: no complete group to draw humidity from");

    TimeseriesLabelBatch out;
    out.temperature = Tensor(batch, 2 * k);
    out.humidity = Tensor(batch, 2 * k);
    for (int i = 0; i < batch; ++i) {
        const TimeSeriesGroup& g =
            groups[rng.uniform_int(static_cast<int>(groups.size()))];
        for (int s = 0; s < k; ++s) {
            const auto& step = g.steps[kSeriesSteps - k + s];
            out.temperature.at(i, 2 * s) = step[0];
            out.temperature.at(i, 2 * s + 1) = step[1];
        }
    }
    for (int i = 0; i < batch; ++i) {
        const TimeSeriesGroup& g =
            groups[complete[rng.uniform_int(static_cast<int>(complete.size()))]];
        for (int s = 0; s < k; ++s) {
            const auto& step = g.steps[kSeriesSteps - k + s];
            out.humidity.at(i, 2 * s) = step[2];
            out.humidity.at(i, 2 * s + 1) = step[3];
        }
    }
    return out;
}

}  // namespace acl

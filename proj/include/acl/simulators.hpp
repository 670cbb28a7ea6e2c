#pragma once

#include <array>
#include <vector>

#include "acl/rng.hpp"
#include "acl/tensor.hpp"

namespace acl {

// Label simulators sample from p(y) only; none of them ever sees an input x.

struct HarmonicOscillatorSpec {
    double amplitude = 1.0;
    double period_min = 10.0;  // frames
    double period_max = 14.0;
    int length = 5;            // trajectory frames
    // ConfigError unless period_min <= period_max, amplitude > 0, length >= 2.
    void validate() const;
};

struct PendulumDraw {
    Tensor y;  // length x 1
    double period;
    double phase;
};

// y_t = A sin(2 pi t / T + phi), T ~ U[period_min, period_max],
// phi ~ U[0, 2 pi).
PendulumDraw sample_pendulum_trajectory_ex(const HarmonicOscillatorSpec& spec,
                                           Rng& rng);
Tensor sample_pendulum_trajectory(const HarmonicOscillatorSpec& spec, Rng& rng);

inline constexpr int kCanvas = 32;  // both renderers draw 32x32 grayscale

// Pivot marker at top-center, ball of radius ~2.5 px at the end of a 12 px
// rod hanging from the pivot; angle 0 points straight down, positive angles
// swing toward +x. Background 0, drawn pixels 1. The x geometry is arranged
// so render(-a) is the exact column mirror of render(a).
Tensor render_pendulum_frame(double angle);

// Joint layout used throughout: index 0 left hip, 1 right hip, 2 left knee,
// 3 right knee, 4 left foot, 5 right foot; flattened per frame as
// (x0, y0, x1, y1, ..., x5, y5). "Left" is the -x side of the center axis.
inline constexpr int kSkeletonJoints = 6;

struct TrapezoidSkeletonSpec {
    double hip_width = 8.0;
    double leg_length = 16.0;       // hip to foot; knee at the midpoint
    double kick_min = 0.25;         // final leg angle from vertical, radians
    double kick_max = 0.55;
    double rate_min = 0.8;          // expansion-phase slope multiplier
    double rate_max = 1.6;
    int frames = 15;
    double center_x = 15.5;         // mirror axis
    double hip_y = 10.0;
    double noise = 0.5;             // px, iid Gaussian, added after mirroring
    void validate() const;
};

// Per frame t the legs open to angle kick * min(1, rate * t / (frames - 1)):
// closed at t = 0, monotone outward sweep. Right-side joints are computed
// from the geometry, left-side x coordinates as 2 * center_x - right_x, so
// the pre-noise pose is exactly mirror symmetric. Returns frames x 12.
Tensor sample_skeleton_trajectory(const TrapezoidSkeletonSpec& spec, Rng& rng);

struct SkeletonRender {
    Tensor image;  // kCanvas x kCanvas
    bool clamped;  // some joint fell outside the canvas and was clamped
};

// Disks at the six joints plus dimmer hip-knee-foot segments per leg.
SkeletonRender render_skeleton_frame(const std::vector<double>& joints);

// One 28-hour group resampled to 7 steps of 4 channels, CSV column order
// temp_in, temp_out, hum_in, hum_out. Incomplete groups carry NaN in both
// humidity channels at every step.
inline constexpr int kSeriesSteps = 7;
inline constexpr int kSeriesChannels = 4;

struct TimeSeriesGroup {
    std::array<std::array<double, kSeriesChannels>, kSeriesSteps> steps;
    bool complete;
};

// Column indices of a step-major flattened k-step target window holding the
// temperature channels, and the humidity ones.
std::vector<int> temperature_target_cols(int k);
std::vector<int> humidity_target_cols(int k);

struct TimeseriesLabelBatch {
    Tensor temperature;  // batch x (k*2), drawn from all groups
    Tensor humidity;     // batch x (k*2), drawn from complete groups only
};

// Target windows are the last k steps of each group. Humidity targets are
// sampled from complete groups only; temperature targets from every group.
// ConfigError when no complete group exists.
TimeseriesLabelBatch sample_timeseries_labels(
    const std::vector<TimeSeriesGroup>& groups, int batch, int k, Rng& rng);

}  // namespace acl

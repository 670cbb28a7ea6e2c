#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "acl/metrics.hpp"
#include "acl/nn.hpp"
#include "acl/simulators.hpp"
#include "acl/tensor.hpp"
#include "acl/trainer.hpp"
#include "vendor/json.hpp"

namespace acl {

// One experiment = one dataset + one training mode + one metric report.
// Everything downstream of `seed` is deterministic, so reruns with the same
// config produce byte-identical history.csv and report.csv.
struct ExperimentConfig {
    std::string experiment = "pendulum";  // pendulum | skeleton | timeseries
    TrainConfig train;
    std::uint64_t seed = 1;
    std::string out_dir = ".";

    int window = 5;          // frames per adversarial window (pendulum, skeleton)
    int labeled_groups = 1;  // i, skeleton label budget

    // pendulum: frame counts must tile into whole trajectories
    int train_frames = 500;
    int test_frames = 100;
    int trajectory_frames = 20;

    // skeleton and timeseries group counts
    int train_groups = 28;
    int test_groups = 7;

    // timeseries
    std::string series_csv;            // empty: synthetic dataset
    double incomplete_fraction = 0.25; // train groups stripped of humidity
    int series_t = 5;                  // input steps per window
    int series_k = 2;                  // target steps per window

    void validate() const;
};

// Key=value config file; '#' starts a comment, blank lines are skipped.
// `experiment` and `mode` select the default values for everything else, so
// they are applied before the remaining keys regardless of file order.
// Unknown key -> ConfigError; duplicate key or malformed line -> ParseError.
ExperimentConfig config_from_file(const std::string& path);
ExperimentConfig config_from_map(const std::map<std::string, std::string>& kv);
std::map<std::string, std::string> config_to_map(const ExperimentConfig& cfg);
ExperimentConfig default_config(const std::string& experiment, Mode mode);

// Sliding stride-1 windows over a len x m series: input rows [s, s+t) and
// target rows [s+t, s+t+k), each flattened step-major. len < t+k is an
// ArgumentError; len == t+k yields exactly one window.
struct WindowSet {
    Tensor inputs;   // count x (t*m)
    Tensor targets;  // count x (k*m)
};
WindowSet make_windows(const Tensor& series, int t, int k);

// CSV with header timestamp,temp_in,temp_out,hum_in,hum_out; timestamps are
// seconds (numeric, ascending). Rows are grouped into consecutive 28-hour
// spans from the first timestamp and each span is averaged into 7 four-hour
// buckets. Humidity cells may be empty: any gap marks the whole group
// incomplete (its humidity channels become NaN). Groups with an empty
// temperature bucket or short trailing span are dropped. Malformed rows are
// ParseError with the line number; an empty file is an ArgumentError.
std::vector<TimeSeriesGroup> load_timeseries_csv(const std::string& path);

// Seeded Fisher-Yates permutation split at group granularity; the first
// n_test permuted indices form the test set. n_test must leave at least one
// training group (ArgumentError).
struct GroupSplit {
    std::vector<int> train;  // permutation order; callers treat a prefix as labeled
    std::vector<int> test;
};
GroupSplit split_groups(int n_groups, int n_test, Rng& rng);
GroupSplit split_groups(int n_groups, int n_test, std::uint64_t seed);

// Per-column affine output transform: normalize(raw) = (raw - shift) / scale.
struct Normalization {
    std::vector<double> shift;
    std::vector<double> scale;

    Tensor normalize(const Tensor& raw) const;
    Tensor denormalize(const Tensor& norm) const;
    nlohmann::json to_json() const;
    static Normalization from_json(const nlohmann::json& j);
};

// Datasets. Pendulum frames are rendered 32x32 images (one row per frame,
// trajectory-major) with the true angle kept for evaluation only.
struct PendulumData {
    Tensor train_x;
    std::vector<double> train_y;
    Tensor test_x;
    std::vector<double> test_y;
};

struct SkeletonGroup {
    Tensor x;      // frames x 1024 rendered images
    Tensor y_raw;  // frames x 12 joint pixel coordinates
    double box_h;  // true-joint bounding box over the whole group
    double box_w;
};
struct SkeletonData {
    std::vector<SkeletonGroup> train;  // split order; the labeled prefix is first
    std::vector<SkeletonGroup> test;
};

struct SeriesData {
    std::vector<TimeSeriesGroup> train;  // raw units; incomplete groups have NaN humidity
    std::vector<TimeSeriesGroup> test;   // complete only
};

PendulumData build_pendulum_data(const ExperimentConfig& cfg, Rng& rng);
SkeletonData build_skeleton_data(const ExperimentConfig& cfg, Rng& rng);
// Synthetic coupled sinusoids + drift + noise when cfg.series_csv is empty,
// otherwise the loaded CSV groups; either way split and incompleteness
// marking are seeded by `rng`.
SeriesData build_series_data(const ExperimentConfig& cfg, Rng& rng);

// Architecture per experiment: 4 weight layers, 64 hidden units, relu.
MlpConfig predictor_config(const ExperimentConfig& cfg);
std::vector<MlpConfig> critic_configs(const ExperimentConfig& cfg);
std::vector<std::vector<int>> critic_columns(const ExperimentConfig& cfg);

// Pearson with the sign gauge fixed on the training split: the oscillator
// label family is closed under negation, so predictors can converge to
// either sign. `oriented` multiplies the test correlation by the sign of the
// train correlation; `raw` is the unflipped test value. Undefined
// correlations (a constant series) are reported as 0 rather than thrown, so
// a degraded predictor shows up as a failing score, not a crash.
struct OrientedCorrelation {
    double oriented;
    double raw;
    double sign;
};
OrientedCorrelation oriented_pearson(const std::vector<double>& train_pred,
                                     const std::vector<double>& train_true,
                                     const std::vector<double>& test_pred,
                                     const std::vector<double>& test_true);

struct MetricRow {
    std::string split;  // train | test
    std::string mode;
    int labeled_groups;
    std::string metric;
    double value;
};

void write_report_csv(std::ostream& out, const std::vector<MetricRow>& rows);
std::vector<MetricRow> read_report_csv(const std::string& path);
// Groups rows from several report files by (split, mode, labeled_groups,
// metric) and writes mean, sample stddev and count per group, preserving
// first-seen order.
void aggregate_reports(const std::vector<std::string>& paths,
                       std::ostream& out);

struct ExperimentResult {
    std::vector<MetricRow> rows;
    std::string history_path;
    std::string report_path;
    std::string checkpoint_path;

    double metric(const std::string& split, const std::string& name) const;
};

// Builds the dataset, trains in cfg.train.mode, evaluates, and writes
// history.csv, report.csv and checkpoint.json under cfg.out_dir.
ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                std::ostream* warnings = nullptr);

struct Checkpoint {
    ExperimentConfig config;
    Mlp predictor;
    std::vector<Mlp> critics;
    Normalization norm;
};

void write_checkpoint(const std::string& path, const ExperimentConfig& cfg,
                      const Mlp& predictor, const std::vector<Mlp>& critics,
                      const Normalization& norm);
Checkpoint load_checkpoint(const std::string& path);

// Rebuilds the dataset from the stored config and seed, evaluates the stored
// predictor, and writes report.csv under out_dir.
ExperimentResult evaluate_checkpoint(const Checkpoint& ck,
                                     const std::string& out_dir);

// Dumps `count` simulator label samples as CSV: pendulum and skeleton write
// one flattened window per row, timeseries writes temperature and humidity
// target windows tagged by a leading `stream` column.
void dump_simulator_samples(const ExperimentConfig& cfg, int count,
                            std::ostream& out);

// Central-difference check of every parameter gradient of the supervised,
// critic (objective + gradient penalty) and generator losses through
// 4-layer tanh MLPs. Writes one line per check to `log`.
struct GradcheckConfig {
    int seeds = 20;
    int hidden = 64;
    int batch = 2;
    double step = 1e-4;
    double tol = 1e-4;
    double lambda = 10.0;
    std::uint64_t seed = 1;
};
struct GradcheckReport {
    double max_rel_err = 0.0;
    bool pass = true;
};
GradcheckReport run_gradcheck(const GradcheckConfig& cfg, std::ostream& log);

}  // namespace acl

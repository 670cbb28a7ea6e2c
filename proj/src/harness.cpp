#include "acl/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <utility>

#include "acl/csv.hpp"
#include "acl/error.hpp"
#include "acl/objectives.hpp"

namespace acl {

namespace {

// Substream ids hung off the experiment seed. Dataset construction and
// training consume distinct streams so the data is identical across modes
// with the same seed.
constexpr std::uint64_t kStreamDataset = 1;
constexpr std::uint64_t kStreamPredictorInit = 2;
constexpr std::uint64_t kStreamCriticInit = 3;  // +j per critic
constexpr std::uint64_t kStreamPairs = 16;
constexpr std::uint64_t kStreamInputs = 17;
constexpr std::uint64_t kStreamSim = 18;
constexpr std::uint64_t kStreamGp = 19;

constexpr int kPixels = kCanvas * kCanvas;

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

long long parse_ll(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    long long out = 0;
    try {
        out = std::stoll(v, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != v.size() || v.empty())
        throw ParseError("config: bad integer for '" + key + "': '" + v + "'");
    return out;
}

int parse_int(const std::string& key, const std::string& v) {
    return static_cast<int>(parse_ll(key, v));
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    unsigned long long out = 0;
    try {
        out = std::stoull(v, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != v.size() || v.empty())
        throw ParseError("config: bad integer for '" + key + "': '" + v + "'");
    return out;
}

double parse_double(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != v.size() || v.empty())
        throw ParseError("config: bad number for '" + key + "': '" + v + "'");
    return out;
}

double parse_cell(const std::string& field, int line, const char* what) {
    std::size_t pos = 0;
    double out = 0.0;
    try {
        out = std::stod(field, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (field.empty() || pos != field.size())
        throw ParseError("line " + std::to_string(line) + ": bad " + what +
                         " value '" + field + "'");
    return out;
}

void copy_row(Tensor& dst, int di, const Tensor& src, int si) {
    const int n = src.cols();
    const double* s = src.data() + static_cast<std::size_t>(si) * n;
    double* d = dst.data() + static_cast<std::size_t>(di) * n;
    std::copy(s, s + n, d);
}

double safe_pearson(const std::vector<double>& a, const std::vector<double>& b) {
    try {
        return pearson_correlation(a, b);
    } catch (const UndefinedCorrelation&) {
        return 0.0;
    }
}

std::vector<double> column0(const Tensor& t) {
    std::vector<double> out(t.rows());
    for (int i = 0; i < t.rows(); ++i) out[i] = t.at(i, 0);
    return out;
}

Tensor randn(int rows, int cols, Rng& rng) {
    Tensor t(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) t.at(i, j) = rng.normal();
    return t;
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

ExperimentConfig default_config(const std::string& experiment, Mode mode) {
    ExperimentConfig cfg;
    cfg.experiment = experiment;
    cfg.train.mode = mode;
    if (experiment == "pendulum") {
        cfg.window = mode == Mode::ECL ? 20 : 5;
        cfg.train.batch = mode == Mode::ECL ? 16 : 24;
        cfg.train.budget = 1600;
        cfg.train.eval_interval = 200;
    } else if (experiment == "skeleton") {
        cfg.window = 5;
        cfg.labeled_groups = 1;
        cfg.train_groups = 28;
        cfg.test_groups = 7;
        if (mode == Mode::SL) {
            cfg.train.batch = 32;
            cfg.train.budget = 1500;
        } else {
            cfg.train.batch = 16;
            cfg.train.budget = 800;
        }
        cfg.train.eval_interval = 200;
    } else if (experiment == "timeseries") {
        cfg.train_groups = 96;
        cfg.test_groups = 24;
        cfg.train.batch = 32;
        cfg.train.budget = 2000;
        cfg.train.eval_interval = 200;
    }
    return cfg;
}

void ExperimentConfig::validate() const {
    train.validate();
    if (experiment != "pendulum" && experiment != "skeleton" &&
        experiment != "timeseries")
        throw ConfigError("unknown experiment '" + experiment + "'");
    if (window < 1) throw ConfigError("window must be >= 1");

    if (experiment == "pendulum") {
        if (trajectory_frames < 2)
            throw ConfigError("pendulum: trajectory_frames must be >= 2");
        if (window > trajectory_frames)
            throw ConfigError("pendulum: window exceeds trajectory_frames");
        if (train_frames < trajectory_frames ||
            train_frames % trajectory_frames != 0 ||
            test_frames < trajectory_frames ||
            test_frames % trajectory_frames != 0)
            throw ConfigError(
                "pendulum: frame counts must be positive multiples of "
                "trajectory_frames");
        if (train.mode == Mode::ECL && window < 4)
            throw ConfigError("pendulum: ECL needs window >= 4");
    } else if (experiment == "skeleton") {
        if (train.mode == Mode::ECL)
            throw ConfigError("skeleton has no handcrafted constraint; "
                              "use ACL, SSACL or SL");
        if (train_groups < 1 || test_groups < 1)
            throw ConfigError("skeleton: group counts must be >= 1");
        if (labeled_groups < 0 || labeled_groups > train_groups)
            throw ConfigError("skeleton: labeled_groups must lie in "
                              "[0, train_groups]");
        if (window > 14)
            throw ConfigError("skeleton: window exceeds the minimum group "
                              "length of 14 frames");
        const bool needs_labels =
            train.mode == Mode::SL ||
            (train.mode == Mode::SSACL && train.alpha > 0.0);
        if (needs_labels && labeled_groups < 1)
            throw ConfigError("skeleton: mode " + mode_name(train.mode) +
                              " needs labeled_groups >= 1");
    } else {
        if (train.mode == Mode::ECL)
            throw ConfigError("timeseries has no handcrafted constraint; "
                              "use ACL, SSACL or SL");
        if (series_t < 1 || series_k < 1 ||
            series_t + series_k > kSeriesSteps)
            throw ConfigError("timeseries: need t >= 1, k >= 1 and t+k <= " +
                              std::to_string(kSeriesSteps));
        if (train_groups < 2 || test_groups < 1)
            throw ConfigError("timeseries: need train_groups >= 2 and "
                              "test_groups >= 1");
        if (incomplete_fraction < 0.0 || incomplete_fraction >= 1.0)
            throw ConfigError(
                "timeseries: incomplete_fraction must lie in [0, 1)");
    }
}

namespace {

void apply_key(ExperimentConfig& cfg, const std::string& k,
               const std::string& v) {
    if (k == "experiment") {
        cfg.experiment = v;
    } else if (k == "mode") {
        cfg.train.mode = mode_from_name(v);
    } else if (k == "seed") {
        cfg.seed = parse_u64(k, v);
    } else if (k == "out") {
        cfg.out_dir = v;
    } else if (k == "alpha") {
        cfg.train.alpha = parse_double(k, v);
    } else if (k == "critic_steps") {
        cfg.train.critic_steps = parse_int(k, v);
    } else if (k == "lambda") {
        cfg.train.lambda = parse_double(k, v);
    } else if (k == "budget") {
        cfg.train.budget = parse_int(k, v);
    } else if (k == "batch") {
        cfg.train.batch = parse_int(k, v);
    } else if (k == "lr_pred") {
        cfg.train.lr_pred = parse_double(k, v);
    } else if (k == "lr_critic") {
        cfg.train.lr_critic = parse_double(k, v);
    } else if (k == "weight_decay") {
        cfg.train.weight_decay = parse_double(k, v);
    } else if (k == "eval_interval") {
        cfg.train.eval_interval = parse_int(k, v);
    } else if (k == "window") {
        cfg.window = parse_int(k, v);
    } else if (k == "labeled_groups") {
        cfg.labeled_groups = parse_int(k, v);
    } else if (k == "train_frames") {
        cfg.train_frames = parse_int(k, v);
    } else if (k == "test_frames") {
        cfg.test_frames = parse_int(k, v);
    } else if (k == "trajectory_frames") {
        cfg.trajectory_frames = parse_int(k, v);
    } else if (k == "train_groups") {
        cfg.train_groups = parse_int(k, v);
    } else if (k == "test_groups") {
        cfg.test_groups = parse_int(k, v);
    } else if (k == "csv") {
        cfg.series_csv = v;
    } else if (k == "incomplete_fraction") {
        cfg.incomplete_fraction = parse_double(k, v);
    } else if (k == "t") {
        cfg.series_t = parse_int(k, v);
    } else if (k == "k") {
        cfg.series_k = parse_int(k, v);
    } else {
        throw ConfigError("config: unknown key '" + k + "'");
    }
}

}  // namespace

ExperimentConfig config_from_map(const std::map<std::string, std::string>& kv) {
    std::string experiment = "pendulum";
    if (auto it = kv.find("experiment"); it != kv.end())
        experiment = it->second;
    Mode mode = experiment == "pendulum" ? Mode::ACL : Mode::SSACL;
    if (auto it = kv.find("mode"); it != kv.end())
        mode = mode_from_name(it->second);

    ExperimentConfig cfg = default_config(experiment, mode);
    for (const auto& [k, v] : kv) apply_key(cfg, k, v);
    cfg.validate();
    return cfg;
}

ExperimentConfig config_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open config file " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (std::size_t hash = line.find('#'); hash != std::string::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("config line " + std::to_string(lineno) +
                             ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ParseError("config line " + std::to_string(lineno) +
                             ": empty key");
        if (!kv.emplace(key, value).second)
            throw ParseError("config line " + std::to_string(lineno) +
                             ": duplicate key '" + key + "'");
    }
    return config_from_map(kv);
}

std::map<std::string, std::string> config_to_map(const ExperimentConfig& cfg) {
    std::map<std::string, std::string> kv;
    kv["experiment"] = cfg.experiment;
    kv["mode"] = mode_name(cfg.train.mode);
    kv["seed"] = std::to_string(cfg.seed);
    kv["out"] = cfg.out_dir;
    kv["alpha"] = fmt_g(cfg.train.alpha);
    kv["critic_steps"] = std::to_string(cfg.train.critic_steps);
    kv["lambda"] = fmt_g(cfg.train.lambda);
    kv["budget"] = std::to_string(cfg.train.budget);
    kv["batch"] = std::to_string(cfg.train.batch);
    kv["lr_pred"] = fmt_g(cfg.train.lr_pred);
    kv["lr_critic"] = fmt_g(cfg.train.lr_critic);
    kv["weight_decay"] = fmt_g(cfg.train.weight_decay);
    kv["eval_interval"] = std::to_string(cfg.train.eval_interval);
    kv["window"] = std::to_string(cfg.window);
    kv["labeled_groups"] = std::to_string(cfg.labeled_groups);
    kv["train_frames"] = std::to_string(cfg.train_frames);
    kv["test_frames"] = std::to_string(cfg.test_frames);
    kv["trajectory_frames"] = std::to_string(cfg.trajectory_frames);
    kv["train_groups"] = std::to_string(cfg.train_groups);
    kv["test_groups"] = std::to_string(cfg.test_groups);
    kv["csv"] = cfg.series_csv;
    kv["incomplete_fraction"] = fmt_g(cfg.incomplete_fraction);
    kv["t"] = std::to_string(cfg.series_t);
    kv["k"] = std::to_string(cfg.series_k);
    return kv;
}

// ---------------------------------------------------------------------------
// Windowing, CSV ingestion, splits

WindowSet make_windows(const Tensor& series, int t, int k) {
    if (t < 1 || k < 1)
        throw ArgumentError("make_windows: t and k must be >= 1");
    const int len = series.rows();
    const int m = series.cols();
    if (len < t + k)
        throw ArgumentError("make_windows: series of " + std::to_string(len) +
                            " rows is shorter than t+k = " +
                            std::to_string(t + k));
    const int count = len - t - k + 1;
    WindowSet ws{Tensor(count, t * m), Tensor(count, k * m)};
    for (int s = 0; s < count; ++s) {
        for (int r = 0; r < t; ++r)
            for (int c = 0; c < m; ++c)
                ws.inputs.at(s, r * m + c) = series.at(s + r, c);
        for (int r = 0; r < k; ++r)
            for (int c = 0; c < m; ++c)
                ws.targets.at(s, r * m + c) = series.at(s + t + r, c);
    }
    return ws;
}

std::vector<TimeSeriesGroup> load_timeseries_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw ArgumentError(path + " is empty");
    if (trim(line) != "timestamp,temp_in,temp_out,hum_in,hum_out")
        throw ParseError(
            "line 1: expected header "
            "timestamp,temp_in,temp_out,hum_in,hum_out");

    constexpr double kBucketSeconds = 4.0 * 3600.0;
    struct Bucket {
        double sum[kSeriesChannels] = {0, 0, 0, 0};
        int temp_count = 0;
        int hum_count = 0;
    };
    struct RawGroup {
        std::array<Bucket, kSeriesSteps> buckets;
        bool humidity_gap = false;
    };
    std::vector<RawGroup> raw;

    bool have_start = false;
    double start = 0.0;
    int lineno = 1;
    int data_rows = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(trim(f));
        if (line.back() == ',') fields.push_back("");
        if (fields.size() != 5)
            throw ParseError("line " + std::to_string(lineno) + ": expected " +
                             "5 fields, got " + std::to_string(fields.size()));
        const double ts = parse_cell(fields[0], lineno, "timestamp");
        const double temp_in = parse_cell(fields[1], lineno, "temp_in");
        const double temp_out = parse_cell(fields[2], lineno, "temp_out");
        if (!have_start) {
            start = ts;
            have_start = true;
        }
        if (ts < start)
            throw ParseError("line " + std::to_string(lineno) +
                             ": timestamp before the first row");
        const long long bucket =
            static_cast<long long>(std::floor((ts - start) / kBucketSeconds));
        const std::size_t g = static_cast<std::size_t>(bucket / kSeriesSteps);
        const int b = static_cast<int>(bucket % kSeriesSteps);
        if (g >= raw.size()) raw.resize(g + 1);
        Bucket& bk = raw[g].buckets[b];
        bk.sum[0] += temp_in;
        bk.sum[1] += temp_out;
        bk.temp_count += 1;
        const bool has_hum_in = !fields[3].empty();
        const bool has_hum_out = !fields[4].empty();
        if (has_hum_in != has_hum_out)
            throw ParseError("line " + std::to_string(lineno) +
                             ": humidity cells must be both present or both "
                             "empty");
        if (has_hum_in) {
            bk.sum[2] += parse_cell(fields[3], lineno, "hum_in");
            bk.sum[3] += parse_cell(fields[4], lineno, "hum_out");
            bk.hum_count += 1;
        } else {
            raw[g].humidity_gap = true;
        }
        ++data_rows;
    }
    if (data_rows == 0) throw ArgumentError(path + " has no data rows");

    std::vector<TimeSeriesGroup> groups;
    for (const RawGroup& rg : raw) {
        bool full = true;
        for (const Bucket& bk : rg.buckets)
            if (bk.temp_count == 0) full = false;
        // Spans with an empty 4-hour bucket (including the trailing partial
        // span) cannot be resampled to 7 points and are skipped.
        if (!full) continue;
        TimeSeriesGroup g;
        g.complete = !rg.humidity_gap;
        for (int b = 0; b < kSeriesSteps; ++b) {
            const Bucket& bk = rg.buckets[b];
            g.steps[b][0] = bk.sum[0] / bk.temp_count;
            g.steps[b][1] = bk.sum[1] / bk.temp_count;
            if (g.complete && bk.hum_count > 0) {
                g.steps[b][2] = bk.sum[2] / bk.hum_count;
                g.steps[b][3] = bk.sum[3] / bk.hum_count;
            } else {
                g.complete = g.complete && bk.hum_count > 0;
                g.steps[b][2] = std::numeric_limits<double>::quiet_NaN();
                g.steps[b][3] = std::numeric_limits<double>::quiet_NaN();
            }
        }
        if (!g.complete)
            for (int b = 0; b < kSeriesSteps; ++b) {
                g.steps[b][2] = std::numeric_limits<double>::quiet_NaN();
                g.steps[b][3] = std::numeric_limits<double>::quiet_NaN();
            }
        groups.push_back(g);
    }
    if (groups.empty())
        throw ArgumentError(path + " holds no full 28-hour span");
    return groups;
}

GroupSplit split_groups(int n_groups, int n_test, Rng& rng) {
    if (n_groups < 1)
        throw ArgumentError("split_groups: need at least one group");
    if (n_test < 0 || n_test >= n_groups)
        throw ArgumentError("split_groups: n_test " + std::to_string(n_test) +
                            " must leave at least one of " +
                            std::to_string(n_groups) + " groups for training");
    std::vector<int> perm(n_groups);
    for (int i = 0; i < n_groups; ++i) perm[i] = i;
    for (int i = n_groups - 1; i > 0; --i)
        std::swap(perm[i], perm[rng.uniform_int(i + 1)]);
    GroupSplit out;
    out.test.assign(perm.begin(), perm.begin() + n_test);
    out.train.assign(perm.begin() + n_test, perm.end());
    return out;
}

GroupSplit split_groups(int n_groups, int n_test, std::uint64_t seed) {
    Rng rng(seed);
    return split_groups(n_groups, n_test, rng);
}

// ---------------------------------------------------------------------------
// Normalization

Tensor Normalization::normalize(const Tensor& raw) const {
    if (raw.cols() != static_cast<int>(shift.size()))
        throw DimensionError("normalize: expected " +
                             std::to_string(shift.size()) + " columns, got " +
                             std::to_string(raw.cols()));
    Tensor out(raw.rows(), raw.cols());
    for (int i = 0; i < raw.rows(); ++i)
        for (int j = 0; j < raw.cols(); ++j)
            out.at(i, j) = (raw.at(i, j) - shift[j]) / scale[j];
    return out;
}

Tensor Normalization::denormalize(const Tensor& norm) const {
    if (norm.cols() != static_cast<int>(shift.size()))
        throw DimensionError("denormalize: expected " +
                             std::to_string(shift.size()) + " columns, got " +
                             std::to_string(norm.cols()));
    Tensor out(norm.rows(), norm.cols());
    for (int i = 0; i < norm.rows(); ++i)
        for (int j = 0; j < norm.cols(); ++j)
            out.at(i, j) = norm.at(i, j) * scale[j] + shift[j];
    return out;
}

nlohmann::json Normalization::to_json() const {
    return nlohmann::json{{"shift", shift}, {"scale", scale}};
}

Normalization Normalization::from_json(const nlohmann::json& j) {
    Normalization n;
    try {
        n.shift = j.at("shift").get<std::vector<double>>();
        n.scale = j.at("scale").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("normalization: ") + e.what());
    }
    if (n.shift.size() != n.scale.size() || n.shift.empty())
        throw ParseError("normalization: shift and scale sizes disagree");
    for (double s : n.scale)
        if (!(s > 0.0)) throw ParseError("normalization: scale must be > 0");
    return n;
}

namespace {

Normalization identity_normalization(int cols) {
    Normalization n;
    n.shift.assign(cols, 0.0);
    n.scale.assign(cols, 1.0);
    return n;
}

// Joint pixel coordinates mapped to roughly [-1, 1] around the canvas center.
Normalization skeleton_normalization() {
    Normalization n;
    n.shift.assign(2 * kSkeletonJoints, kCanvas / 2.0);
    n.scale.assign(2 * kSkeletonJoints, kCanvas / 2.0);
    return n;
}

struct ChannelStats {
    std::array<double, kSeriesChannels> mean{};
    std::array<double, kSeriesChannels> sd{};
};

// Per-channel moments over every step of the complete training groups; both
// modes see the same statistics, so reported MAEs are comparable.
ChannelStats series_channel_stats(const std::vector<TimeSeriesGroup>& train) {
    ChannelStats st;
    int n = 0;
    for (const TimeSeriesGroup& g : train) {
        if (!g.complete) continue;
        for (const auto& step : g.steps) {
            for (int c = 0; c < kSeriesChannels; ++c) st.mean[c] += step[c];
            ++n;
        }
    }
    if (n == 0)
        throw ConfigError("timeseries: no complete training group");
    for (int c = 0; c < kSeriesChannels; ++c) st.mean[c] /= n;
    std::array<double, kSeriesChannels> var{};
    for (const TimeSeriesGroup& g : train) {
        if (!g.complete) continue;
        for (const auto& step : g.steps)
            for (int c = 0; c < kSeriesChannels; ++c) {
                const double d = step[c] - st.mean[c];
                var[c] += d * d;
            }
    }
    for (int c = 0; c < kSeriesChannels; ++c) {
        const double sd = std::sqrt(var[c] / n);
        st.sd[c] = sd > 1e-9 ? sd : 1.0;
    }
    return st;
}

// Step-major window normalization from per-channel stats: column s*4+c holds
// channel c at step s.
Normalization window_normalization(const ChannelStats& st, int steps) {
    Normalization n;
    for (int s = 0; s < steps; ++s)
        for (int c = 0; c < kSeriesChannels; ++c) {
            n.shift.push_back(st.mean[c]);
            n.scale.push_back(st.sd[c]);
        }
    return n;
}

// Label-window normalization for one channel pair (temperature channels 0,1
// or humidity channels 2,3): column s*2+i holds channel base+i at step s.
Normalization label_normalization(const ChannelStats& st, int steps,
                                  int base) {
    Normalization n;
    for (int s = 0; s < steps; ++s)
        for (int i = 0; i < 2; ++i) {
            n.shift.push_back(st.mean[base + i]);
            n.scale.push_back(st.sd[base + i]);
        }
    return n;
}

Tensor group_series(const TimeSeriesGroup& g) {
    Tensor t(kSeriesSteps, kSeriesChannels);
    for (int s = 0; s < kSeriesSteps; ++s)
        for (int c = 0; c < kSeriesChannels; ++c) t.at(s, c) = g.steps[s][c];
    return t;
}

}  // namespace

// ---------------------------------------------------------------------------
// Dataset builders

PendulumData build_pendulum_data(const ExperimentConfig& cfg, Rng& rng) {
    HarmonicOscillatorSpec spec;
    spec.length = cfg.trajectory_frames;
    spec.validate();
    auto build = [&](int frames, Tensor& x, std::vector<double>& y) {
        x = Tensor(frames, kPixels);
        y.resize(frames);
        const int n_traj = frames / cfg.trajectory_frames;
        int row = 0;
        for (int tj = 0; tj < n_traj; ++tj) {
            Tensor traj = sample_pendulum_trajectory(spec, rng);
            for (int t = 0; t < cfg.trajectory_frames; ++t, ++row) {
                const double angle = traj.at(t, 0);
                y[row] = angle;
                Tensor img = render_pendulum_frame(angle);
                const double* src = img.data();
                std::copy(src, src + kPixels,
                          x.data() + static_cast<std::size_t>(row) * kPixels);
            }
        }
    };
    PendulumData data;
    build(cfg.train_frames, data.train_x, data.train_y);
    build(cfg.test_frames, data.test_x, data.test_y);
    return data;
}

SkeletonData build_skeleton_data(const ExperimentConfig& cfg, Rng& rng) {
    const int total = cfg.train_groups + cfg.test_groups;
    std::vector<SkeletonGroup> groups;
    groups.reserve(total);
    for (int gi = 0; gi < total; ++gi) {
        TrapezoidSkeletonSpec spec;
        spec.frames = 14 + rng.uniform_int(4);
        // Subjects are not centered: each group carries its own offset, which
        // the label simulator does not know about.
        spec.center_x += rng.uniform(-1.5, 1.5);
        spec.hip_y += rng.uniform(-1.5, 1.5);
        spec.validate();
        Tensor traj = sample_skeleton_trajectory(spec, rng);
        SkeletonGroup g;
        g.y_raw = traj;
        g.x = Tensor(traj.rows(), kPixels);
        double min_x = std::numeric_limits<double>::infinity();
        double max_x = -min_x, min_y = min_x, max_y = -min_x;
        std::vector<double> joints(2 * kSkeletonJoints);
        for (int f = 0; f < traj.rows(); ++f) {
            for (int j = 0; j < 2 * kSkeletonJoints; ++j)
                joints[j] = traj.at(f, j);
            for (int j = 0; j < kSkeletonJoints; ++j) {
                min_x = std::min(min_x, joints[2 * j]);
                max_x = std::max(max_x, joints[2 * j]);
                min_y = std::min(min_y, joints[2 * j + 1]);
                max_y = std::max(max_y, joints[2 * j + 1]);
            }
            SkeletonRender r = render_skeleton_frame(joints);
            std::copy(r.image.data(), r.image.data() + kPixels,
                      g.x.data() + static_cast<std::size_t>(f) * kPixels);
        }
        g.box_w = max_x - min_x;
        g.box_h = max_y - min_y;
        groups.push_back(std::move(g));
    }
    Rng split_rng = rng.split(0);
    GroupSplit split = split_groups(total, cfg.test_groups, split_rng);
    SkeletonData data;
    for (int idx : split.train) data.train.push_back(std::move(groups[idx]));
    for (int idx : split.test) data.test.push_back(std::move(groups[idx]));
    return data;
}

namespace {

// Shared daily cycle (period 6 steps = 24 h) with per-group phase, base
// level, amplitude and drift; humidity runs against temperature. Noise is
// iid Gaussian per cell.
TimeSeriesGroup synth_series_group(Rng& rng) {
    const double omega = 2.0 * 3.14159265358979323846 / 6.0;
    const double phase = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    const double base_t = rng.uniform(18.0, 24.0);
    const double amp_t = rng.uniform(2.0, 4.0);
    const double drift = rng.uniform(-0.15, 0.15);
    const double base_h = rng.uniform(45.0, 65.0);
    const double amp_h = rng.uniform(5.0, 10.0);
    TimeSeriesGroup g;
    g.complete = true;
    for (int s = 0; s < kSeriesSteps; ++s) {
        const double th = omega * s + phase;
        g.steps[s][0] = base_t + amp_t * std::sin(th) + drift * s +
                        0.10 * rng.normal();
        g.steps[s][1] = base_t - 4.0 + 1.4 * amp_t * std::sin(th - 0.5) +
                        drift * s + 0.15 * rng.normal();
        g.steps[s][2] = base_h - 0.9 * amp_h * std::sin(th - 0.2) +
                        0.20 * rng.normal();
        g.steps[s][3] = base_h + 5.0 - 1.2 * amp_h * std::sin(th - 0.7) +
                        0.30 * rng.normal();
    }
    return g;
}

}  // namespace

SeriesData build_series_data(const ExperimentConfig& cfg, Rng& rng) {
    SeriesData data;
    if (cfg.series_csv.empty()) {
        const int total = cfg.train_groups + cfg.test_groups;
        std::vector<TimeSeriesGroup> groups;
        groups.reserve(total);
        for (int i = 0; i < total; ++i)
            groups.push_back(synth_series_group(rng));
        Rng split_rng = rng.split(0);
        GroupSplit split = split_groups(total, cfg.test_groups, split_rng);
        for (int idx : split.train) data.train.push_back(groups[idx]);
        for (int idx : split.test) data.test.push_back(groups[idx]);
        // Strip humidity from a fraction of the training groups; the test
        // side stays complete.
        const int n_train = static_cast<int>(data.train.size());
        int n_inc = static_cast<int>(
            std::llround(cfg.incomplete_fraction * n_train));
        n_inc = std::min(n_inc, n_train - 1);
        Rng mark_rng = rng.split(1);
        std::vector<int> order(n_train);
        for (int i = 0; i < n_train; ++i) order[i] = i;
        for (int i = n_train - 1; i > 0; --i)
            std::swap(order[i], order[mark_rng.uniform_int(i + 1)]);
        for (int i = 0; i < n_inc; ++i) {
            TimeSeriesGroup& g = data.train[order[i]];
            g.complete = false;
            for (int s = 0; s < kSeriesSteps; ++s) {
                g.steps[s][2] = std::numeric_limits<double>::quiet_NaN();
                g.steps[s][3] = std::numeric_limits<double>::quiet_NaN();
            }
        }
    } else {
        std::vector<TimeSeriesGroup> groups =
            load_timeseries_csv(cfg.series_csv);
        Rng split_rng = rng.split(0);
        GroupSplit split = split_groups(static_cast<int>(groups.size()),
                                        cfg.test_groups, split_rng);
        for (int idx : split.train) data.train.push_back(groups[idx]);
        // Incomplete groups cannot be scored on humidity; they stay out of
        // both sides rather than leaking into training.
        for (int idx : split.test)
            if (groups[idx].complete) data.test.push_back(groups[idx]);
        if (data.test.empty())
            throw ConfigError("timeseries: no complete test group in " +
                              cfg.series_csv);
    }
    return data;
}

// ---------------------------------------------------------------------------
// Architectures

MlpConfig predictor_config(const ExperimentConfig& cfg) {
    MlpConfig mc;
    if (cfg.experiment == "pendulum") {
        mc.widths = {kPixels, 64, 64, 64, 1};
    } else if (cfg.experiment == "skeleton") {
        mc.widths = {kPixels, 64, 64, 64, 2 * kSkeletonJoints};
    } else {
        mc.widths = {kSeriesChannels * cfg.series_t, 64, 64, 64,
                     kSeriesChannels * cfg.series_k};
    }
    return mc;
}

std::vector<MlpConfig> critic_configs(const ExperimentConfig& cfg) {
    auto critic = [](int in) {
        MlpConfig mc;
        mc.widths = {in, 64, 64, 64, 1};
        return mc;
    };
    if (cfg.experiment == "pendulum") return {critic(cfg.window)};
    if (cfg.experiment == "skeleton")
        return {critic(2 * kSkeletonJoints * cfg.window)};
    return {critic(2 * cfg.series_k), critic(2 * cfg.series_k)};
}

std::vector<std::vector<int>> critic_columns(const ExperimentConfig& cfg) {
    if (cfg.experiment == "timeseries")
        return {temperature_target_cols(cfg.series_k),
                humidity_target_cols(cfg.series_k)};
    return {{}};
}

// ---------------------------------------------------------------------------
// Metrics plumbing

OrientedCorrelation oriented_pearson(const std::vector<double>& train_pred,
                                     const std::vector<double>& train_true,
                                     const std::vector<double>& test_pred,
                                     const std::vector<double>& test_true) {
    const double train_r = safe_pearson(train_pred, train_true);
    OrientedCorrelation oc;
    oc.sign = train_r < 0.0 ? -1.0 : 1.0;
    oc.raw = safe_pearson(test_pred, test_true);
    oc.oriented = oc.sign * oc.raw;
    return oc;
}

void write_report_csv(std::ostream& out, const std::vector<MetricRow>& rows) {
    out << "split,mode,labeled_groups,metric,value\n";
    for (const MetricRow& r : rows)
        out << r.split << "," << r.mode << "," << r.labeled_groups << ","
            << r.metric << "," << fmt_g(r.value) << "\n";
}

std::vector<MetricRow> read_report_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw ArgumentError(path + " is empty");
    if (trim(line) != "split,mode,labeled_groups,metric,value")
        throw ParseError(path + " line 1: not a report header");
    std::vector<MetricRow> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(trim(f));
        if (fields.size() != 5)
            throw ParseError(path + " line " + std::to_string(lineno) +
                             ": expected 5 fields");
        MetricRow r;
        r.split = fields[0];
        r.mode = fields[1];
        r.labeled_groups = parse_int("labeled_groups", fields[2]);
        r.metric = fields[3];
        r.value = parse_cell(fields[4], lineno, "metric");
        rows.push_back(std::move(r));
    }
    return rows;
}

void aggregate_reports(const std::vector<std::string>& paths,
                       std::ostream& out) {
    if (paths.empty()) throw ArgumentError("no report files given");
    using Key = std::tuple<std::string, std::string, int, std::string>;
    std::vector<Key> order;
    std::map<Key, std::vector<double>> values;
    for (const std::string& p : paths)
        for (const MetricRow& r : read_report_csv(p)) {
            Key k{r.split, r.mode, r.labeled_groups, r.metric};
            auto [it, fresh] = values.try_emplace(k);
            if (fresh) order.push_back(k);
            it->second.push_back(r.value);
        }
    out << "split,mode,labeled_groups,metric,mean,stddev,n\n";
    for (const Key& k : order) {
        const std::vector<double>& v = values[k];
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        const double sd =
            v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1))
                         : 0.0;
        out << std::get<0>(k) << "," << std::get<1>(k) << "," << std::get<2>(k)
            << "," << std::get<3>(k) << "," << fmt_g(mean) << "," << fmt_g(sd)
            << "," << v.size() << "\n";
    }
}

double ExperimentResult::metric(const std::string& split,
                                const std::string& name) const {
    for (const MetricRow& r : rows)
        if (r.split == split && r.metric == name) return r.value;
    throw ArgumentError("no metric " + name + " for split " + split);
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

int report_labeled_count(const ExperimentConfig& cfg, int pool) {
    const Mode m = cfg.train.mode;
    return (m == Mode::SL || m == Mode::SSACL) ? pool : 0;
}

std::vector<MetricRow> evaluate_pendulum(const ExperimentConfig& cfg,
                                         const Mlp& predictor,
                                         const PendulumData& data) {
    const std::vector<double> train_pred =
        column0(mlp_forward(predictor, data.train_x));
    const std::vector<double> test_pred =
        column0(mlp_forward(predictor, data.test_x));
    OrientedCorrelation oc = oriented_pearson(train_pred, data.train_y,
                                              test_pred, data.test_y);
    const double train_raw = safe_pearson(train_pred, data.train_y);
    const std::string mode = mode_name(cfg.train.mode);
    const int labeled = report_labeled_count(
        cfg, cfg.train_frames / cfg.trajectory_frames);
    return {
        {"train", mode, labeled, "pearson", oc.sign * train_raw},
        {"train", mode, labeled, "pearson_raw", train_raw},
        {"test", mode, labeled, "pearson", oc.oriented},
        {"test", mode, labeled, "pearson_raw", oc.raw},
    };
}

const char* kJointNames[kSkeletonJoints] = {"l_hip", "r_hip", "l_knee",
                                            "r_knee", "l_foot", "r_foot"};

// Frame-weighted per-joint PCK over a set of groups, each scored against its
// own body box.
std::vector<double> skeleton_pck(const Mlp& predictor,
                                 const Normalization& norm,
                                 const std::vector<SkeletonGroup>& groups) {
    std::vector<double> hits(kSkeletonJoints, 0.0);
    double frames = 0.0;
    for (const SkeletonGroup& g : groups) {
        Tensor pred = norm.denormalize(mlp_forward(predictor, g.x));
        PckSpec spec;
        spec.box_h = g.box_h;
        spec.box_w = g.box_w;
        const std::vector<double> frac = pck_at(pred, g.y_raw, spec);
        for (int j = 0; j < kSkeletonJoints; ++j)
            hits[j] += frac[j] * g.x.rows();
        frames += g.x.rows();
    }
    for (double& h : hits) h /= frames;
    return hits;
}

std::vector<MetricRow> evaluate_skeleton(const ExperimentConfig& cfg,
                                         const Mlp& predictor,
                                         const SkeletonData& data) {
    const Normalization norm = skeleton_normalization();
    const std::string mode = mode_name(cfg.train.mode);
    const int labeled = report_labeled_count(cfg, cfg.labeled_groups);
    std::vector<MetricRow> rows;
    for (const auto& [split, groups] :
         {std::pair<const char*, const std::vector<SkeletonGroup>&>{
              "train", data.train},
          {"test", data.test}}) {
        const std::vector<double> pck = skeleton_pck(predictor, norm, groups);
        double mean = 0.0;
        for (int j = 0; j < kSkeletonJoints; ++j) {
            rows.push_back({split, mode, labeled,
                            std::string("pck_") + kJointNames[j], pck[j]});
            mean += pck[j];
        }
        rows.push_back({split, mode, labeled, "pck_mean",
                        mean / kSkeletonJoints});
    }
    return rows;
}

// Windows over the complete groups of one split, in raw units.
WindowSet series_windows(const std::vector<TimeSeriesGroup>& groups, int t,
                         int k) {
    std::vector<WindowSet> parts;
    int count = 0;
    for (const TimeSeriesGroup& g : groups) {
        if (!g.complete) continue;
        parts.push_back(make_windows(group_series(g), t, k));
        count += parts.back().inputs.rows();
    }
    if (count == 0)
        throw ConfigError("timeseries: no complete group to window");
    WindowSet all{Tensor(count, parts[0].inputs.cols()),
                  Tensor(count, parts[0].targets.cols())};
    int row = 0;
    for (const WindowSet& ws : parts)
        for (int i = 0; i < ws.inputs.rows(); ++i, ++row) {
            copy_row(all.inputs, row, ws.inputs, i);
            copy_row(all.targets, row, ws.targets, i);
        }
    return all;
}

struct SeriesMae {
    double temperature = 0.0;
    double humidity = 0.0;
    std::array<double, kSeriesChannels> channel{};
};

// MAE in raw units, pooled over rows and target steps, per channel and per
// channel class.
SeriesMae series_mae(const Mlp& predictor, const Normalization& in_norm,
                     const Normalization& out_norm, const WindowSet& raw) {
    Tensor pred =
        out_norm.denormalize(mlp_forward(predictor, in_norm.normalize(raw.inputs)));
    SeriesMae m;
    std::array<double, kSeriesChannels> count{};
    for (int i = 0; i < pred.rows(); ++i)
        for (int j = 0; j < pred.cols(); ++j) {
            const int c = j % kSeriesChannels;
            m.channel[c] += std::fabs(pred.at(i, j) - raw.targets.at(i, j));
            count[c] += 1.0;
        }
    for (int c = 0; c < kSeriesChannels; ++c) m.channel[c] /= count[c];
    m.temperature = (m.channel[0] + m.channel[1]) / 2.0;
    m.humidity = (m.channel[2] + m.channel[3]) / 2.0;
    return m;
}

std::vector<MetricRow> evaluate_series(const ExperimentConfig& cfg,
                                       const Mlp& predictor,
                                       const SeriesData& data) {
    const ChannelStats stats = series_channel_stats(data.train);
    const Normalization in_norm = window_normalization(stats, cfg.series_t);
    const Normalization out_norm = window_normalization(stats, cfg.series_k);
    int complete = 0;
    for (const TimeSeriesGroup& g : data.train)
        if (g.complete) ++complete;
    const std::string mode = mode_name(cfg.train.mode);
    const int labeled = report_labeled_count(cfg, complete);
    std::vector<MetricRow> rows;
    for (const auto& [split, groups] :
         {std::pair<const char*, const std::vector<TimeSeriesGroup>&>{
              "train", data.train},
          {"test", data.test}}) {
        const WindowSet ws = series_windows(groups, cfg.series_t, cfg.series_k);
        const SeriesMae m = series_mae(predictor, in_norm, out_norm, ws);
        rows.push_back({split, mode, labeled, "mae_temperature",
                        m.temperature});
        rows.push_back({split, mode, labeled, "mae_humidity", m.humidity});
        rows.push_back({split, mode, labeled, "mae_temp_in", m.channel[0]});
        rows.push_back({split, mode, labeled, "mae_temp_out", m.channel[1]});
        rows.push_back({split, mode, labeled, "mae_hum_in", m.channel[2]});
        rows.push_back({split, mode, labeled, "mae_hum_out", m.channel[3]});
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Experiment runners

TrainState make_state(const ExperimentConfig& cfg, const Rng& root) {
    Rng pred_rng = root.split(kStreamPredictorInit);
    Mlp predictor = init_params(predictor_config(cfg), pred_rng);
    std::vector<Mlp> critics;
    std::vector<std::vector<int>> cols;
    if (cfg.train.mode == Mode::ACL || cfg.train.mode == Mode::SSACL) {
        const std::vector<MlpConfig> ccfgs = critic_configs(cfg);
        cols = critic_columns(cfg);
        for (std::size_t j = 0; j < ccfgs.size(); ++j) {
            Rng crng = root.split(kStreamCriticInit + j);
            critics.push_back(init_params(ccfgs[j], crng));
        }
    }
    const int frames = cfg.experiment == "timeseries" ? 1 : cfg.window;
    return TrainState(std::move(predictor), frames, std::move(critics),
                      std::move(cols), cfg.train);
}

ExperimentResult finish_run(const ExperimentConfig& cfg, TrainState& st,
                            const Sources& src, const RunHooks& hooks,
                            const std::function<std::vector<MetricRow>()>&
                                final_rows,
                            const Normalization& norm,
                            std::ostream* warnings) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    ExperimentResult res;
    res.history_path = (fs::path(cfg.out_dir) / "history.csv").string();
    res.report_path = (fs::path(cfg.out_dir) / "report.csv").string();
    res.checkpoint_path =
        (fs::path(cfg.out_dir) / "checkpoint.json").string();

    std::ofstream history(res.history_path, std::ios::binary);
    if (!history)
        throw ConfigError("cannot write " + res.history_path);
    Rng gp_rng = Rng(cfg.seed).split(kStreamGp);
    run(st, cfg.train, src, hooks, gp_rng, history, warnings);
    history.close();

    res.rows = final_rows();
    std::ofstream report(res.report_path, std::ios::binary);
    if (!report) throw ConfigError("cannot write " + res.report_path);
    write_report_csv(report, res.rows);
    report.close();

    write_checkpoint(res.checkpoint_path, cfg, st.predictor, st.critics,
                     norm);
    return res;
}

ExperimentResult run_pendulum(const ExperimentConfig& cfg,
                              std::ostream* warnings) {
    const Rng root(cfg.seed);
    Rng data_rng = root.split(kStreamDataset);
    const PendulumData data = build_pendulum_data(cfg, data_rng);
    const int traj = cfg.trajectory_frames;
    const int n_train_traj = cfg.train_frames / traj;
    const int W = cfg.window;
    const int batch = cfg.train.batch;
    const Mode mode = cfg.train.mode;

    TrainState st = make_state(cfg, root);
    Rng input_rng = root.split(kStreamInputs);
    Rng sim_rng = root.split(kStreamSim);
    Rng pair_rng = root.split(kStreamPairs);

    Sources src;
    if (mode != Mode::SL) {
        src.inputs = [&, W, batch]() {
            Tensor x(batch * W, kPixels);
            for (int b = 0; b < batch; ++b) {
                const int tj = input_rng.uniform_int(n_train_traj);
                const int s = input_rng.uniform_int(traj - W + 1);
                for (int f = 0; f < W; ++f)
                    copy_row(x, b * W + f, data.train_x, tj * traj + s + f);
            }
            return x;
        };
    }
    if (mode == Mode::ACL || mode == Mode::SSACL) {
        HarmonicOscillatorSpec sim_spec;
        sim_spec.length = W;
        src.sim = [&, sim_spec, batch, W]() {
            Tensor r(batch, W);
            for (int b = 0; b < batch; ++b) {
                Tensor y = sample_pendulum_trajectory(sim_spec, sim_rng);
                for (int t = 0; t < W; ++t) r.at(b, t) = y.at(t, 0);
            }
            return std::vector<Tensor>{r};
        };
    }
    if (mode == Mode::SL || (mode == Mode::SSACL && cfg.train.alpha > 0.0)) {
        src.pairs = [&, batch]() {
            PairBatch p{Tensor(batch, kPixels), Tensor(batch, 1)};
            for (int b = 0; b < batch; ++b) {
                const int f = pair_rng.uniform_int(cfg.train_frames);
                copy_row(p.x, b, data.train_x, f);
                p.y.at(b, 0) = data.train_y[f];
            }
            return p;
        };
    }
    if (mode == Mode::ECL)
        src.constraint = [](const Tensor& windows) {
            return pendulum_constraint_batch(windows);
        };

    RunHooks hooks;
    hooks.metric_names = {"pearson_train", "pearson_test"};
    hooks.eval = [&]() {
        const std::vector<double> tp =
            column0(mlp_forward(st.predictor, data.train_x));
        const std::vector<double> sp =
            column0(mlp_forward(st.predictor, data.test_x));
        OrientedCorrelation oc =
            oriented_pearson(tp, data.train_y, sp, data.test_y);
        return std::vector<double>{oc.sign * safe_pearson(tp, data.train_y),
                                   oc.oriented};
    };

    return finish_run(
        cfg, st, src, hooks,
        [&]() { return evaluate_pendulum(cfg, st.predictor, data); },
        identity_normalization(1), warnings);
}

ExperimentResult run_skeleton(const ExperimentConfig& cfg,
                              std::ostream* warnings) {
    const Rng root(cfg.seed);
    Rng data_rng = root.split(kStreamDataset);
    const SkeletonData data = build_skeleton_data(cfg, data_rng);
    const Normalization norm = skeleton_normalization();
    const int W = cfg.window;
    const int batch = cfg.train.batch;
    const Mode mode = cfg.train.mode;
    const int d = 2 * kSkeletonJoints;

    TrainState st = make_state(cfg, root);
    Rng input_rng = root.split(kStreamInputs);
    Rng sim_rng = root.split(kStreamSim);
    Rng pair_rng = root.split(kStreamPairs);

    Sources src;
    if (mode != Mode::SL) {
        src.inputs = [&, W, batch]() {
            Tensor x(batch * W, kPixels);
            for (int b = 0; b < batch; ++b) {
                const int gi =
                    input_rng.uniform_int(static_cast<int>(data.train.size()));
                const SkeletonGroup& g = data.train[gi];
                const int s = input_rng.uniform_int(g.x.rows() - W + 1);
                for (int f = 0; f < W; ++f)
                    copy_row(x, b * W + f, g.x, s + f);
            }
            return x;
        };
    }
    if (mode == Mode::ACL || mode == Mode::SSACL) {
        src.sim = [&, batch, W, d]() {
            TrapezoidSkeletonSpec spec;  // canonical center, no jitter
            Tensor r(batch, W * d);
            for (int b = 0; b < batch; ++b) {
                Tensor traj = sample_skeleton_trajectory(spec, sim_rng);
                const int s = sim_rng.uniform_int(traj.rows() - W + 1);
                for (int f = 0; f < W; ++f)
                    for (int j = 0; j < d; ++j)
                        r.at(b, f * d + j) =
                            (traj.at(s + f, j) - norm.shift[j]) /
                            norm.scale[j];
            }
            return std::vector<Tensor>{r};
        };
    }
    if (mode == Mode::SL || (mode == Mode::SSACL && cfg.train.alpha > 0.0)) {
        src.pairs = [&, batch, d]() {
            PairBatch p{Tensor(batch, kPixels), Tensor(batch, d)};
            for (int b = 0; b < batch; ++b) {
                const int gi = pair_rng.uniform_int(cfg.labeled_groups);
                const SkeletonGroup& g = data.train[gi];
                const int f = pair_rng.uniform_int(g.x.rows());
                copy_row(p.x, b, g.x, f);
                for (int j = 0; j < d; ++j)
                    p.y.at(b, j) =
                        (g.y_raw.at(f, j) - norm.shift[j]) / norm.scale[j];
            }
            return p;
        };
    }

    RunHooks hooks;
    hooks.metric_names = {"pck_train", "pck_test"};
    auto mean_pck = [&](const std::vector<SkeletonGroup>& groups) {
        const std::vector<double> pck = skeleton_pck(st.predictor, norm, groups);
        double mean = 0.0;
        for (double v : pck) mean += v;
        return mean / static_cast<double>(pck.size());
    };
    hooks.eval = [&]() {
        return std::vector<double>{mean_pck(data.train), mean_pck(data.test)};
    };

    return finish_run(
        cfg, st, src, hooks,
        [&]() { return evaluate_skeleton(cfg, st.predictor, data); }, norm,
        warnings);
}

ExperimentResult run_series(const ExperimentConfig& cfg,
                            std::ostream* warnings) {
    const Rng root(cfg.seed);
    Rng data_rng = root.split(kStreamDataset);
    const SeriesData data = build_series_data(cfg, data_rng);
    const ChannelStats stats = series_channel_stats(data.train);
    const Normalization in_norm = window_normalization(stats, cfg.series_t);
    const Normalization out_norm = window_normalization(stats, cfg.series_k);
    const Normalization temp_norm =
        label_normalization(stats, cfg.series_k, 0);
    const Normalization hum_norm = label_normalization(stats, cfg.series_k, 2);
    const int batch = cfg.train.batch;
    const Mode mode = cfg.train.mode;

    // Supervised pool: windows of the complete training groups, normalized.
    const WindowSet raw_train =
        series_windows(data.train, cfg.series_t, cfg.series_k);
    const Tensor sup_x = in_norm.normalize(raw_train.inputs);
    const Tensor sup_y = out_norm.normalize(raw_train.targets);

    TrainState st = make_state(cfg, root);
    Rng input_rng = root.split(kStreamInputs);
    Rng sim_rng = root.split(kStreamSim);
    Rng pair_rng = root.split(kStreamPairs);

    Sources src;
    if (mode != Mode::SL) {
        src.inputs = [&, batch]() {
            Tensor x(batch, sup_x.cols());
            for (int b = 0; b < batch; ++b)
                copy_row(x, b, sup_x, input_rng.uniform_int(sup_x.rows()));
            return x;
        };
    }
    if (mode == Mode::ACL || mode == Mode::SSACL) {
        src.sim = [&, batch]() {
            TimeseriesLabelBatch lb = sample_timeseries_labels(
                data.train, batch, cfg.series_k, sim_rng);
            return std::vector<Tensor>{temp_norm.normalize(lb.temperature),
                                       hum_norm.normalize(lb.humidity)};
        };
    }
    if (mode == Mode::SL || (mode == Mode::SSACL && cfg.train.alpha > 0.0)) {
        src.pairs = [&, batch]() {
            PairBatch p{Tensor(batch, sup_x.cols()), Tensor(batch, sup_y.cols())};
            for (int b = 0; b < batch; ++b) {
                const int i = pair_rng.uniform_int(sup_x.rows());
                copy_row(p.x, b, sup_x, i);
                copy_row(p.y, b, sup_y, i);
            }
            return p;
        };
    }

    const WindowSet raw_test =
        series_windows(data.test, cfg.series_t, cfg.series_k);
    RunHooks hooks;
    hooks.metric_names = {"mae_temp_train", "mae_hum_train", "mae_temp_test",
                          "mae_hum_test"};
    hooks.eval = [&]() {
        const SeriesMae tr =
            series_mae(st.predictor, in_norm, out_norm, raw_train);
        const SeriesMae te =
            series_mae(st.predictor, in_norm, out_norm, raw_test);
        return std::vector<double>{tr.temperature, tr.humidity,
                                   te.temperature, te.humidity};
    };

    return finish_run(
        cfg, st, src, hooks,
        [&]() { return evaluate_series(cfg, st.predictor, data); }, out_norm,
        warnings);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                std::ostream* warnings) {
    cfg.validate();
    if (cfg.experiment == "pendulum") return run_pendulum(cfg, warnings);
    if (cfg.experiment == "skeleton") return run_skeleton(cfg, warnings);
    return run_series(cfg, warnings);
}

// ---------------------------------------------------------------------------
// Checkpoints

void write_checkpoint(const std::string& path, const ExperimentConfig& cfg,
                      const Mlp& predictor, const std::vector<Mlp>& critics,
                      const Normalization& norm) {
    nlohmann::json ck;
    ck["format"] = "acl-checkpoint";
    ck["version"] = 1;
    ck["config"] = config_to_map(cfg);
    ck["predictor"] = mlp_to_json(predictor);
    nlohmann::json cs = nlohmann::json::array();
    for (const Mlp& c : critics) cs.push_back(mlp_to_json(c));
    ck["critics"] = std::move(cs);
    ck["normalization"] = norm.to_json();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << ck.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open " + path);
    nlohmann::json ck;
    try {
        in >> ck;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    try {
        if (ck.at("format") != "acl-checkpoint" || ck.at("version") != 1)
            throw ParseError(path + ": not a version-1 checkpoint");
        Checkpoint out{
            config_from_map(
                ck.at("config").get<std::map<std::string, std::string>>()),
            mlp_from_json(ck.at("predictor")),
            {},
            Normalization::from_json(ck.at("normalization"))};
        for (const nlohmann::json& c : ck.at("critics"))
            out.critics.push_back(mlp_from_json(c));
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

ExperimentResult evaluate_checkpoint(const Checkpoint& ck,
                                     const std::string& out_dir) {
    ExperimentConfig cfg = ck.config;
    cfg.out_dir = out_dir;
    const Rng root(cfg.seed);
    Rng data_rng = root.split(kStreamDataset);

    ExperimentResult res;
    if (cfg.experiment == "pendulum") {
        res.rows = evaluate_pendulum(cfg, ck.predictor,
                                     build_pendulum_data(cfg, data_rng));
    } else if (cfg.experiment == "skeleton") {
        res.rows = evaluate_skeleton(cfg, ck.predictor,
                                     build_skeleton_data(cfg, data_rng));
    } else {
        res.rows = evaluate_series(cfg, ck.predictor,
                                   build_series_data(cfg, data_rng));
    }
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    res.report_path = (fs::path(out_dir) / "report.csv").string();
    std::ofstream report(res.report_path, std::ios::binary);
    if (!report) throw ConfigError("cannot write " + res.report_path);
    write_report_csv(report, res.rows);
    return res;
}

// ---------------------------------------------------------------------------
// Simulator sample dumps

void dump_simulator_samples(const ExperimentConfig& cfg, int count,
                            std::ostream& out) {
    if (count < 1) throw ArgumentError("simulate: count must be >= 1");
    cfg.validate();
    const Rng root(cfg.seed);
    Rng rng = root.split(kStreamSim);
    auto header = [&](const char* lead, int d) {
        if (lead) out << lead;
        for (int j = 0; j < d; ++j) out << (j || lead ? "," : "") << "v" << j;
        out << "\n";
    };
    if (cfg.experiment == "pendulum") {
        HarmonicOscillatorSpec spec;
        spec.length = cfg.window;
        header(nullptr, cfg.window);
        for (int i = 0; i < count; ++i) {
            Tensor y = sample_pendulum_trajectory(spec, rng);
            for (int t = 0; t < cfg.window; ++t)
                out << (t ? "," : "") << fmt_g(y.at(t, 0));
            out << "\n";
        }
    } else if (cfg.experiment == "skeleton") {
        const int d = 2 * kSkeletonJoints;
        header(nullptr, cfg.window * d);
        TrapezoidSkeletonSpec spec;
        for (int i = 0; i < count; ++i) {
            Tensor traj = sample_skeleton_trajectory(spec, rng);
            const int s = rng.uniform_int(traj.rows() - cfg.window + 1);
            for (int f = 0; f < cfg.window; ++f)
                for (int j = 0; j < d; ++j)
                    out << (f + j ? "," : "") << fmt_g(traj.at(s + f, j));
            out << "\n";
        }
    } else {
        Rng data_rng = root.split(kStreamDataset);
        const SeriesData data = build_series_data(cfg, data_rng);
        header("stream", 2 * cfg.series_k);
        TimeseriesLabelBatch lb =
            sample_timeseries_labels(data.train, count, cfg.series_k, rng);
        for (int i = 0; i < count; ++i) {
            out << "temperature";
            for (int j = 0; j < lb.temperature.cols(); ++j)
                out << "," << fmt_g(lb.temperature.at(i, j));
            out << "\n";
        }
        for (int i = 0; i < count; ++i) {
            out << "humidity";
            for (int j = 0; j < lb.humidity.cols(); ++j)
                out << "," << fmt_g(lb.humidity.at(i, j));
            out << "\n";
        }
    }
}

// ---------------------------------------------------------------------------
// Gradient checking

namespace {

// Central difference over every parameter of `m`; f() must evaluate the loss
// at the current parameters without recording.
double max_rel_fd(Mlp& m, const std::vector<double>& grads,
                  const std::function<double()>& f, double h) {
    std::size_t idx = 0;
    double worst = 0.0;
    for (Tensor& p : m.params()) {
        double* data = p.data();
        const std::size_t n =
            static_cast<std::size_t>(p.rows()) * p.cols();
        for (std::size_t e = 0; e < n; ++e, ++idx) {
            const double orig = data[e];
            data[e] = orig + h;
            const double fp = f();
            data[e] = orig - h;
            const double fm = f();
            data[e] = orig;
            const double fd = (fp - fm) / (2.0 * h);
            const double rel =
                std::fabs(grads[idx] - fd) / std::max(1.0, std::fabs(fd));
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

MlpConfig tanh_mlp(int in, int hidden, int out) {
    MlpConfig mc;
    mc.widths = {in, hidden, hidden, hidden, out};
    mc.hidden = Act::Tanh;
    return mc;
}

}  // namespace

GradcheckReport run_gradcheck(const GradcheckConfig& cfg, std::ostream& log) {
    if (cfg.seeds < 1 || cfg.hidden < 1 || cfg.batch < 1 || cfg.step <= 0.0 ||
        cfg.tol <= 0.0 || cfg.lambda < 0.0)
        throw ArgumentError("gradcheck: bad configuration");
    GradcheckReport report;
    const Rng root(cfg.seed);
    auto note = [&](int seed, const char* name, double rel) {
        log << "seed " << seed << " " << name << " max_rel " << fmt_g(rel)
            << (rel < cfg.tol ? "" : "  ** exceeds tol") << "\n";
        report.max_rel_err = std::max(report.max_rel_err, rel);
    };
    for (int s = 0; s < cfg.seeds; ++s) {
        Rng rng = root.split(static_cast<std::uint64_t>(s) + 1);

        {
            Mlp pred = init_params(tanh_mlp(3, cfg.hidden, 2), rng);
            const Tensor x = randn(cfg.batch, 3, rng);
            const Tensor y = randn(cfg.batch, 2, rng);
            {
                Tape tape;
                LossValue lv = supervised_loss(mlp_forward(pred, x), y);
                backward(lv.value);
            }
            const std::vector<double> grads = flatten_grads(pred);
            note(s, "supervised", max_rel_fd(pred, grads, [&]() {
                return supervised_loss(mlp_forward(pred, x), y).number;
            }, cfg.step));
        }
        {
            Mlp critic = init_params(tanh_mlp(2, cfg.hidden, 1), rng);
            const Tensor real = randn(cfg.batch, 2, rng);
            const Tensor fake = randn(cfg.batch, 2, rng);
            std::vector<double> eps(cfg.batch);
            for (double& e : eps) e = rng.uniform();
            const Tensor yhat = gp_interpolate(real, fake, eps);
            {
                Tape tape;
                LossValue obj = critic_objective(mlp_forward(critic, real),
                                                 mlp_forward(critic, fake));
                LossValue gp = gradient_penalty_at(critic, yhat, cfg.lambda);
                backward(add(obj.value, gp.value));
            }
            const std::vector<double> grads = flatten_grads(critic);
            note(s, "critic+penalty", max_rel_fd(critic, grads, [&]() {
                return critic_objective(mlp_forward(critic, real),
                                        mlp_forward(critic, fake)).number +
                       gradient_penalty_at(critic, yhat, cfg.lambda).number;
            }, cfg.step));
        }
        {
            Mlp pred = init_params(tanh_mlp(3, cfg.hidden, 2), rng);
            Mlp critic = init_params(tanh_mlp(2, cfg.hidden, 1), rng);
            const Tensor x = randn(cfg.batch, 3, rng);
            {
                Tape tape;
                LossValue lv = generator_objective(
                    mlp_forward(critic, mlp_forward(pred, x)));
                backward(lv.value);
            }
            const std::vector<double> grads = flatten_grads(pred);
            note(s, "generator", max_rel_fd(pred, grads, [&]() {
                return generator_objective(
                           mlp_forward(critic, mlp_forward(pred, x))).number;
            }, cfg.step));
        }
    }
    report.pass = report.max_rel_err < cfg.tol;
    log << "gradcheck max_rel_err " << fmt_g(report.max_rel_err) << " tol "
        << fmt_g(cfg.tol) << ": " << (report.pass ? "PASS" : "FAIL") << "\n";
    return report;
}

}  // namespace acl

#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "acl/nn.hpp"
#include "acl/objectives.hpp"
#include "acl/rng.hpp"

namespace acl {

enum class Mode { SL, ECL, ACL, SSACL };

std::string mode_name(Mode m);
Mode mode_from_name(const std::string& s);

struct TrainConfig {
    Mode mode = Mode::ACL;
    double alpha = 10.0;       // supervised weight in the SSACL objective
    int critic_steps = 5;      // inner critic updates per predictor update
    double lambda = 10.0;      // gradient-penalty weight
    int budget = 2000;         // predictor updates
    int batch = 32;            // windows per minibatch
    double lr_pred = 1e-4;
    double lr_critic = 1e-4;
    double weight_decay = 0.0;
    int eval_interval = 100;
    void validate() const;
};

// Predictor plus any number of critics. critic_cols[j] selects which columns
// of the flattened prediction window critic j scores; an empty list means
// the whole window.
struct TrainState {
    TrainState(Mlp predictor, int frames_per_window, std::vector<Mlp> critics,
               std::vector<std::vector<int>> critic_cols,
               const TrainConfig& cfg);

    Mlp predictor;
    int frames_per_window;  // n: predictor rows concatenated into one window
    std::vector<Mlp> critics;
    std::vector<std::vector<int>> critic_cols;
    Adam pred_adam;
    std::vector<Adam> critic_adams;
    int step = 0;
};

// Applies the predictor to each input row and concatenates every group of
// frames_per_window consecutive output rows into one window row.
Tensor predict_windows(const TrainState& st, const Tensor& inputs);

struct PairBatch {
    Tensor x;
    Tensor y;
};

// Batch providers; each call must yield a fresh batch (the critic inner loop
// calls once per update, mirroring the usual WGAN-GP procedure).
using InputSource = std::function<Tensor()>;
using SimSource = std::function<std::vector<Tensor>()>;  // one per critic
using PairSource = std::function<PairBatch()>;
using ConstraintFn = std::function<LossValue(const Tensor& windows)>;

struct StepDiagnostics {
    double loss_sup = 0.0;     // supervised MSE, or the constraint value in ECL
    double loss_critic = 0.0;  // critic objective at the last inner step
    double loss_gen = 0.0;
    double loss_gp = 0.0;
    // Critic objective measured at the parameters entering each inner update
    // (summed over critics); lets tests watch the inner ascent.
    std::vector<double> critic_trace;
};

StepDiagnostics supervised_step(TrainState& st, const PairBatch& batch);

StepDiagnostics ecl_step(TrainState& st, const Tensor& inputs,
                         const ConstraintFn& constraint);

// critic_steps critic updates (each on a fresh batch, maximizing objective
// minus penalty), then one predictor update on the generator objective.
StepDiagnostics acl_step(TrainState& st, const TrainConfig& cfg,
                         const InputSource& inputs, const SimSource& sim,
                         Rng& gp_rng);

// As acl_step, with alpha * supervised loss on `pair` added to the predictor
// update. pair may be null only when alpha is 0.
StepDiagnostics ssacl_step(TrainState& st, const TrainConfig& cfg,
                           const InputSource& inputs, const SimSource& sim,
                           const PairBatch* pair, Rng& gp_rng);

struct Sources {
    InputSource inputs;       // unlabeled input windows
    SimSource sim;            // simulator label windows, one tensor per critic
    PairSource pairs;         // labeled pairs
    ConstraintFn constraint;  // ECL only
};

struct RunHooks {
    std::vector<std::string> metric_names;        // extra history columns
    std::function<std::vector<double>()> eval;    // called at logged steps
};

// Executes cfg.budget steps of the configured mode, appending history rows at
// every eval_interval-th step and at the final step. Header:
// step,loss_sup,loss_critic,loss_gen,loss_gp[,metric...]. ConfigError names
// any data source the mode needs but was not given; sources the mode ignores
// are reported to `warnings` (SL reads only pairs, ECL inputs+constraint,
// ACL inputs+sim, SSACL additionally pairs when alpha > 0).
void run(TrainState& st, const TrainConfig& cfg, const Sources& src,
         const RunHooks& hooks, Rng& gp_rng, std::ostream& history,
         std::ostream* warnings = nullptr);

}  // namespace acl

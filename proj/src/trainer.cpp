#include "acl/trainer.hpp"

#include <ostream>
#include <utility>

#include "acl/csv.hpp"
#include "acl/error.hpp"

namespace acl {

std::string mode_name(Mode m) {
    switch (m) {
        case Mode::SL: return "SL";
        case Mode::ECL: return "ECL";
        case Mode::ACL: return "ACL";
        case Mode::SSACL: return "SSACL";
    }
    return "ACL";
}

Mode mode_from_name(const std::string& s) {
    if (s == "SL" || s == "sl") return Mode::SL;
    if (s == "ECL" || s == "ecl") return Mode::ECL;
    if (s == "ACL" || s == "acl") return Mode::ACL;
    if (s == "SSACL" || s == "ssacl") return Mode::SSACL;
    throw ParseError("unknown mode '" + s + "'");
}

void TrainConfig::validate() const {
    if (alpha < 0.0) throw ConfigError("train: alpha must be >= 0");
    if (critic_steps < 1) throw ConfigError("train: critic_steps must be >= 1");
    if (lambda < 0.0) throw ConfigError("train: lambda must be >= 0");
    if (batch < 1) throw ConfigError("train: batch must be >= 1");
    if (budget < 0) throw ConfigError("train: budget must be >= 0");
    if (eval_interval < 1) throw ConfigError("train: eval_interval must be >= 1");
    if (weight_decay < 0.0) throw ConfigError("train: weight_decay must be >= 0");
}

namespace {

AdamConfig adam_config(double lr, double weight_decay) {
    AdamConfig a;
    a.lr = lr;
    a.weight_decay = weight_decay;
    return a;
}

}  // namespace

TrainState::TrainState(Mlp pred, int frames, std::vector<Mlp> crit,
                       std::vector<std::vector<int>> cols,
                       const TrainConfig& cfg)
    : predictor(std::move(pred)),
      frames_per_window(frames),
      critics(std::move(crit)),
      critic_cols(std::move(cols)),
      pred_adam(predictor.params(), adam_config(cfg.lr_pred, cfg.weight_decay)) {
    if (frames_per_window < 1)
        throw ConfigError("train: frames_per_window must be >= 1");
    if (critic_cols.size() != critics.size())
        throw ConfigError("train: one column list per critic required");
    for (const Mlp& c : critics)
        critic_adams.emplace_back(c.params(),
                                  adam_config(cfg.lr_critic, 0.0));
}

Tensor predict_windows(const TrainState& st, const Tensor& inputs) {
    const int n = st.frames_per_window;
    if (inputs.rows() % n != 0)
        throw DimensionError("predict_windows: " + std::to_string(inputs.rows()) +
                             " rows do not tile windows of " +
                             std::to_string(n) + " frames");
    Tensor out = mlp_forward(st.predictor, inputs);
    if (n == 1) return out;
    return reshape(out, inputs.rows() / n, n * out.cols());
}

namespace {

// Prediction slice critic j scores; cols empty means the whole window.
Tensor critic_view(const TrainState& st, std::size_t j, const Tensor& windows) {
    const std::vector<int>& cols = st.critic_cols[j];
    if (cols.empty()) return windows;
    return col_gather(windows, cols);
}

}  // namespace

StepDiagnostics supervised_step(TrainState& st, const PairBatch& batch) {
    if (batch.x.empty() || batch.y.empty())
        throw ArgumentError("supervised_step: empty batch");
    StepDiagnostics d;
    {
        Tape tape;
        Tensor pred = mlp_forward(st.predictor, batch.x);
        LossValue lv = supervised_loss(pred, batch.y);
        d.loss_sup = lv.number;
        backward(lv.value);
    }
    st.pred_adam.step();
    return d;
}

StepDiagnostics ecl_step(TrainState& st, const Tensor& inputs,
                         const ConstraintFn& constraint) {
    if (!constraint)
        throw ConfigError("ecl_step: no constraint function configured");
    StepDiagnostics d;
    {
        Tape tape;
        Tensor windows = predict_windows(st, inputs);
        LossValue lv = constraint(windows);
        d.loss_sup = lv.number;
        backward(lv.value);
    }
    st.pred_adam.step();
    return d;
}

namespace {

StepDiagnostics adversarial_step(TrainState& st, const TrainConfig& cfg,
                                 const InputSource& inputs,
                                 const SimSource& sim, const PairBatch* pair,
                                 double alpha, Rng& gp_rng) {
    if (st.critics.empty())
        throw ConfigError("adversarial step: no critic configured");
    StepDiagnostics d;

    for (int c = 0; c < cfg.critic_steps; ++c) {
        const Tensor in = inputs();
        const std::vector<Tensor> labels = sim();
        if (labels.size() != st.critics.size())
            throw DimensionError("adversarial step: expected " +
                                 std::to_string(st.critics.size()) +
                                 " simulator batches, got " +
                                 std::to_string(labels.size()));
        // The predictor is frozen during critic updates, so its outputs are
        // plain data here (no recording).
        const Tensor fake_windows = predict_windows(st, in);
        double obj_total = 0.0;
        double gp_total = 0.0;
        for (std::size_t j = 0; j < st.critics.size(); ++j) {
            const Tensor fake = critic_view(st, j, fake_windows);
            const Tensor& real = labels[j];
            {
                Tape tape;
                LossValue obj = critic_objective(
                    mlp_forward(st.critics[j], real),
                    mlp_forward(st.critics[j], fake));
                LossValue gp = gradient_penalty(st.critics[j], real, fake,
                                                cfg.lambda, gp_rng);
                // Ascent on objective - penalty, phrased as descent.
                Tensor loss = add(scale(obj.value, -1.0), gp.value);
                backward(loss);
                obj_total += obj.number;
                gp_total += gp.number;
            }
            st.critic_adams[j].step();
        }
        d.critic_trace.push_back(obj_total);
        d.loss_critic = obj_total;
        d.loss_gp = gp_total;
    }

    const Tensor gen_in = inputs();
    {
        Tape tape;
        Tensor windows = predict_windows(st, gen_in);
        Tensor total;
        for (std::size_t j = 0; j < st.critics.size(); ++j) {
            LossValue gen = generator_objective(
                mlp_forward(st.critics[j], critic_view(st, j, windows)));
            total = j == 0 ? gen.value : add(total, gen.value);
        }
        d.loss_gen = total.item();
        if (pair && alpha > 0.0) {
            Tensor pred = mlp_forward(st.predictor, pair->x);
            LossValue sup = supervised_loss(pred, pair->y);
            d.loss_sup = sup.number;
            total = add(total, scale(sup.value, alpha));
        }
        backward(total);
    }
    st.pred_adam.step();
    return d;
}

}  // namespace

StepDiagnostics acl_step(TrainState& st, const TrainConfig& cfg,
                         const InputSource& inputs, const SimSource& sim,
                         Rng& gp_rng) {
    return adversarial_step(st, cfg, inputs, sim, nullptr, 0.0, gp_rng);
}

StepDiagnostics ssacl_step(TrainState& st, const TrainConfig& cfg,
                           const InputSource& inputs, const SimSource& sim,
                           const PairBatch* pair, Rng& gp_rng) {
    if (cfg.alpha > 0.0 && !pair)
        throw ConfigError("ssacl_step: alpha > 0 needs a labeled batch");
    return adversarial_step(st, cfg, inputs, sim, pair, cfg.alpha, gp_rng);
}

void run(TrainState& st, const TrainConfig& cfg, const Sources& src,
         const RunHooks& hooks, Rng& gp_rng, std::ostream& history,
         std::ostream* warnings) {
    cfg.validate();

    auto need = [&](bool have, const char* what) {
        if (!have)
            throw ConfigError("mode " + mode_name(cfg.mode) +
                              " needs a data source for " + what);
    };
    auto warn_unused = [&](bool have, const char* what) {
        if (have && warnings)
            *warnings << "mode " << mode_name(cfg.mode) << " ignores " << what
                      << "\n";
    };
    switch (cfg.mode) {
        case Mode::SL:
            need(static_cast<bool>(src.pairs), "labeled pairs");
            warn_unused(static_cast<bool>(src.sim), "simulator samples");
            warn_unused(static_cast<bool>(src.inputs), "unlabeled inputs");
            break;
        case Mode::ECL:
            need(static_cast<bool>(src.inputs), "unlabeled inputs");
            need(static_cast<bool>(src.constraint), "a constraint function");
            warn_unused(static_cast<bool>(src.sim), "simulator samples");
            warn_unused(static_cast<bool>(src.pairs), "labeled pairs");
            break;
        case Mode::ACL:
            need(static_cast<bool>(src.inputs), "unlabeled inputs");
            need(static_cast<bool>(src.sim), "simulator samples");
            warn_unused(static_cast<bool>(src.pairs), "labeled pairs");
            break;
        case Mode::SSACL:
            need(static_cast<bool>(src.inputs), "unlabeled inputs");
            need(static_cast<bool>(src.sim), "simulator samples");
            if (cfg.alpha > 0.0) need(static_cast<bool>(src.pairs),
                                      "labeled pairs");
            break;
    }

    history << "step,loss_sup,loss_critic,loss_gen,loss_gp";
    for (const std::string& m : hooks.metric_names) history << "," << m;
    history << "\n";

    for (int step = 1; step <= cfg.budget; ++step) {
        StepDiagnostics d;
        switch (cfg.mode) {
            case Mode::SL:
                d = supervised_step(st, src.pairs());
                break;
            case Mode::ECL:
                d = ecl_step(st, src.inputs(), src.constraint);
                break;
            case Mode::ACL:
                d = acl_step(st, cfg, src.inputs, src.sim, gp_rng);
                break;
            case Mode::SSACL: {
                if (cfg.alpha > 0.0) {
                    PairBatch pair = src.pairs();
                    d = ssacl_step(st, cfg, src.inputs, src.sim, &pair,
                                   gp_rng);
                } else {
                    d = ssacl_step(st, cfg, src.inputs, src.sim, nullptr,
                                   gp_rng);
                }
                break;
            }
        }
        st.step = step;
        if (step % cfg.eval_interval == 0 || step == cfg.budget) {
            history << step << "," << fmt_g(d.loss_sup) << ","
                    << fmt_g(d.loss_critic) << "," << fmt_g(d.loss_gen) << ","
                    << fmt_g(d.loss_gp);
            if (hooks.eval)
                for (double v : hooks.eval()) history << "," << fmt_g(v);
            history << "\n";
        }
    }
}

}  // namespace acl

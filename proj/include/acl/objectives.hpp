#pragma once

#include <vector>

#include "acl/nn.hpp"
#include "acl/rng.hpp"
#include "acl/tensor.hpp"

namespace acl {

// Scalar loss: `value` participates in the active computation record,
// `number` is a plain copy for logging.
struct LossValue {
    Tensor value;
    double number = 0.0;
};

// Mean squared error over all entries.
LossValue supervised_loss(const Tensor& pred, const Tensor& target);

// mean(real_scores) - mean(fake_scores); the critic maximizes this. Scores
// are column vectors (batch x 1). ArgumentError on an empty batch.
LossValue critic_objective(const Tensor& real_scores,
                           const Tensor& fake_scores);

// -mean(fake_scores), minimized by the predictor.
LossValue generator_objective(const Tensor& fake_scores);

// Row i of the result is eps[i]*real_i + (1-eps[i])*fake_i. Plain data: the
// penalty differentiates the critic at these points, not through them.
Tensor gp_interpolate(const Tensor& real, const Tensor& fake,
                      const std::vector<double>& eps);

// lambda * mean((|grad_yhat critic(yhat)|_2 - 1)^2) at given interpolates.
// The input gradient is rebuilt from the traced forward as recorded ops, so
// the penalty is differentiable w.r.t. the critic parameters without a
// general second backward pass.
LossValue gradient_penalty_at(const Mlp& critic, const Tensor& yhat,
                              double lambda);

// Draws one eps ~ U[0,1] per row and evaluates gradient_penalty_at.
LossValue gradient_penalty(const Mlp& critic, const Tensor& real,
                           const Tensor& fake, double lambda, Rng& rng);

// adv + alpha * sup.
LossValue semi_supervised_loss(const LossValue& adv, const LossValue& sup,
                               double alpha);

// Mean over batch rows of the squared residual against each row's best-fit
// sinusoid A*sin(2 pi t / T + phi), T and phi found by grid search over
// [period_min, period_max] x [0, 2 pi), amplitude in closed form as the
// projection onto the centered sinusoid. The fitted parameters are treated
// as constants, so the gradient per row is (2/n)(y - A*s)/batch.
LossValue pendulum_constraint_batch(const Tensor& windows,
                                    double period_min = 10.0,
                                    double period_max = 14.0);

// Single-trajectory form over an n x 1 trajectory, n >= 4.
LossValue handcrafted_pendulum_constraint(const Tensor& traj,
                                          double period_min = 10.0,
                                          double period_max = 14.0);

}  // namespace acl

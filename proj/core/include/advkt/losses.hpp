#pragma once

#include <span>
#include <vector>

#include "advkt/model.hpp"

namespace advkt {

// Sign of the policy-gradient term. `as_written` keeps the confidence-times-
// reward sum positive in the minimized objective; `reinforce` negates it so
// gradient descent maximizes reward. reinforce is the default used by
// training.
enum class AdvSign { as_written, reinforce };

// Direction of the discriminator objective. `separating` minimizes
// dist + gp, driving positive scores above negative ones (the direction the
// reward signal needs); `as_written` keeps the -dist + gp form.
enum class DiscSign { as_written, separating };

// -sum r log p + (1-r) log(1-p), predictions clamped to [eps, 1-eps].
double bce_loss(std::span<const double> predictions, std::span<const int> labels);

// Discounted realism rewards, computed backward with R_{T+1} = 0:
// R_t = -log(1 - s_t) + gamma R_{t+1}; scores clamped below 1.
std::vector<double> rewards(std::span<const double> prefix_scores, double gamma);

// (sign/T) * sum |p_t - 0.5| * R_t; rewards enter as constants.
double adv_loss(std::span<const double> predictions, std::span<const double> reward_values,
                AdvSign sign);

// -sum_{t<T} log dist_t[q_{t+1}]; one distribution per step, final step unused.
double ar_loss(std::span<const Vec> next_question_dists, std::span<const int> questions);

double generator_loss(double bce, double adv, double ar, double lambda1, double lambda2);

// mean(negatives) - mean(positives); identical to the double-sum form.
double dist_loss(std::span<const double> positive_scores,
                 std::span<const double> negative_scores);

// alpha * (||d score / d D_o[last]||_2 - 1)^2 via the closed-form gradient of
// the two-layer head evaluated at the last row of d_o.
double gradient_penalty(const ModelState& m, const Mat& d_o, double alpha);

double discriminator_loss(double dist, double gp, DiscSign sign);

}  // namespace advkt

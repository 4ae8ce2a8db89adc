#include "advkt/losses.hpp"

#include <algorithm>
#include <cmath>

namespace advkt {

namespace {
double clamp_prob(double p) { return std::clamp(p, kProbEps, 1.0 - kProbEps); }
}  // namespace

double bce_loss(std::span<const double> predictions, std::span<const int> labels) {
    if (predictions.size() != labels.size()) throw ContractError("bce_loss length mismatch");
    double loss = 0.0;
    for (std::size_t t = 0; t < predictions.size(); ++t) {
        const double p = clamp_prob(predictions[t]);
        loss -= labels[t] == 1 ? std::log(p) : std::log(1.0 - p);
    }
    return loss;
}

std::vector<double> rewards(std::span<const double> prefix_scores, double gamma) {
    std::vector<double> out(prefix_scores.size());
    double next = 0.0;
    for (std::size_t i = prefix_scores.size(); i-- > 0;) {
        const double s = std::min(prefix_scores[i], 1.0 - kProbEps);
        next = -std::log(1.0 - s) + gamma * next;
        out[i] = next;
    }
    return out;
}

double adv_loss(std::span<const double> predictions, std::span<const double> reward_values,
                AdvSign sign) {
    if (predictions.size() != reward_values.size()) throw ContractError("adv_loss length mismatch");
    if (predictions.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t t = 0; t < predictions.size(); ++t) {
        acc += std::abs(predictions[t] - 0.5) * reward_values[t];
    }
    acc /= static_cast<double>(predictions.size());
    return sign == AdvSign::as_written ? acc : -acc;
}

double ar_loss(std::span<const Vec> next_question_dists, std::span<const int> questions) {
    if (next_question_dists.size() != questions.size()) throw ContractError("ar_loss length mismatch");
    double loss = 0.0;
    for (std::size_t t = 0; t + 1 < questions.size(); ++t) {
        const double p = std::max(next_question_dists[t](questions[t + 1]), kProbEps);
        loss -= std::log(p);
    }
    return loss;
}

double generator_loss(double bce, double adv, double ar, double lambda1, double lambda2) {
    return bce + lambda1 * adv + lambda2 * ar;
}

double dist_loss(std::span<const double> positive_scores,
                 std::span<const double> negative_scores) {
    if (positive_scores.empty() || negative_scores.empty()) {
        throw ContractError("dist_loss needs non-empty score sets");
    }
    double pos = 0.0, neg = 0.0;
    for (double s : positive_scores) pos += s;
    for (double s : negative_scores) neg += s;
    return neg / static_cast<double>(negative_scores.size()) -
           pos / static_cast<double>(positive_scores.size());
}

double gradient_penalty(const ModelState& m, const Mat& d_o, double alpha) {
    if (d_o.rows() == 0) throw ContractError("gradient_penalty on empty D_o");
    const Vec u = d_o.row(d_o.rows() - 1).transpose();
    const auto& p = m.params;
    const Vec t1 = (p[m.disc.pW1].transpose() * u + p[m.disc.pb1].col(0)).array().tanh();
    const double z2 = p[m.disc.pw2].col(0).dot(t1) + p[m.disc.pb2](0, 0);
    const double s = ad::sigmoid_val(z2);
    const Vec grad_u =
        s * (1.0 - s) * (p[m.disc.pW1] * (p[m.disc.pw2].col(0).array() * (1.0 - t1.array().square())).matrix());
    const double gap = grad_u.norm() - 1.0;
    return alpha * gap * gap;
}

double discriminator_loss(double dist, double gp, DiscSign sign) {
    return (sign == DiscSign::as_written ? -dist : dist) + gp;
}

}  // namespace advkt

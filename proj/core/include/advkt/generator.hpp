#pragma once

#include <span>
#include <vector>

#include "advkt/embeddings.hpp"
#include "advkt/model.hpp"

namespace advkt {

// multi_step feeds each interaction vector from the model's own thresholded
// prediction; single_step feeds the ground-truth response.
enum class RolloutMode { multi_step, single_step };

struct RolloutState {
    Vec hidden;                       // h_{t-1}
    std::vector<Vec> history_keys;    // v_{q_1} .. v_{q_{t-1}}
    std::vector<Vec> history_values;  // h_1 .. h_{t-1}
    int t = 1;                        // 1-based step about to be taken
};

struct StepResult {
    double prob = 0.0;  // sigmoid output, in (0,1)
    Vec attention;      // d_h; zero when history is empty
    Vec question_repr;  // v_q, 2d
};

RolloutState initial_state(const ModelState& m);

// One prediction step against the current state; does not mutate it.
StepResult gen_step(const ModelState& m, const RolloutState& s, int question);

// Interaction vector of Eq-style branching: signal >= 0.5 places (v_q, a) in
// the first half, otherwise in the second; the other half is zero.
Vec build_interaction(const ModelState& m, const Vec& vq, const Vec& attention,
                      double response_signal);

// GRU update + history bookkeeping.
void gen_advance(const ModelState& m, RolloutState& s, const Vec& x, const Vec& vq);

// Distribution over the question catalog from an interaction vector.
Vec predict_next_question(const ModelState& m, const Vec& x);

struct RolloutResult {
    std::vector<double> probs;
    std::vector<int> hard;  // probs thresholded at 0.5
    std::vector<Vec> interactions;
};

// Whole-sequence rollout. `responses` must match `questions` in single_step
// mode and is ignored entirely in multi_step mode.
RolloutResult rollout(const ModelState& m, std::span<const int> questions,
                      std::span<const int> responses, RolloutMode mode);

// Tape-building rollout used by the trainer. `forced_branches`, when
// non-empty, pins the interaction-vector branch per step so the loss surface
// stays differentiable under parameter perturbations (gradient checking).
struct RolloutNodes {
    std::vector<ad::NodeId> prob;        // 1x1 nodes
    std::vector<ad::NodeId> x;           // interaction vectors
    std::vector<ad::NodeId> ar_logprob;  // log-softmax over questions, per step
    std::vector<double> probs;
    std::vector<int> hard;
};

RolloutNodes rollout_tape(ad::Tape& tape, const ModelState& m,
                          std::span<const int> questions,
                          std::span<const int> responses, RolloutMode mode,
                          bool with_ar, std::span<const int> forced_branches = {});

}  // namespace advkt

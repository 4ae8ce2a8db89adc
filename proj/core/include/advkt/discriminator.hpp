#pragma once

#include <span>
#include <vector>

#include "advkt/model.hpp"

namespace advkt {

struct PrefixScores {
    std::vector<double> scores;  // scores[t] = D(first t+1 steps), in (0,1)
    Mat d_o;                     // T x 2d encoded rows (row t feeds scores[t])
};

// Scores every prefix of a (question, response) sequence in one causally
// masked pass. Truncating the inputs reproduces the leading scores bit for
// bit. Questions may use the mask id; responses must be 0/1.
PrefixScores score_prefixes(const ModelState& m, std::span<const int> questions,
                            std::span<const int> responses);

// Plain multi-head attention with optional causal masking and explicit
// projections (Q: T x in_q, K: T x in_q, V: T x in_v; Wq/Wk: in_q x w,
// Wv: in_v x w, Wo: w x out). Value-level reference used by tests.
Mat multi_head(const Mat& Q, const Mat& K, const Mat& V, const Mat& Wq,
               const Mat& Wk, const Mat& Wv, const Mat& Wo, int heads,
               bool causal);

// Tape pass for discriminator updates: sequence-level score (last position)
// plus the gradient-penalty term (||d score/d D_o[last]|| - 1)^2 expressed
// through the closed-form gradient of the two-layer head, so one backward
// pass differentiates both through every discriminator parameter.
struct DiscPassNodes {
    ad::NodeId score = -1;    // 1x1
    ad::NodeId gp_term = -1;  // 1x1, before the alpha weight
    double score_value = 0.0;
    double gp_value = 0.0;
};

DiscPassNodes disc_pass_tape(ad::Tape& tape, const ModelState& m,
                             std::span<const int> questions,
                             std::span<const int> responses);

}  // namespace advkt

#pragma once

#include "advkt/model.hpp"

namespace advkt {

// Composite question representation e_q (+) mean of concept embeddings,
// size 2d. The mask token has no concepts; its concept half is zero.
Vec question_repr(const ModelState& m, int question);

// Tape-node version used inside the forward passes.
ad::NodeId question_repr_node(ad::Tape& tape, const ModelState& m, int question);

}  // namespace advkt

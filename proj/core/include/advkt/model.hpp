#pragma once

#include <cstdint>
#include <string>

#include "advkt/autodiff.hpp"
#include "advkt/corpus.hpp"

namespace advkt {

struct Dims {
    int n_questions = 0;  // catalog size, excluding the mask token
    int n_concepts = 0;
    int max_len = 200;
    int embed_dim = 64;   // d
    int hidden_dim = 64;  // d_h (GRU state)
    int heads = 4;

    int mask_id() const { return n_questions; }
    int repr_dim() const { return 2 * embed_dim; }                      // |v_q|
    int interact_dim() const { return 2 * (repr_dim() + hidden_dim); }  // |x_t|
    int pred_in() const { return repr_dim() + 2 * hidden_dim; }
    int pred_hidden() const { return 2 * hidden_dim; }
    int disc_width() const { return 2 * embed_dim; }

    void validate() const;
};

// Four lookup tables; the question table carries one extra row for the mask
// token. Shared by the generator and the discriminator.
struct EmbeddingTables {
    ad::ParamId question = -1;  // (|Q|+1) x d
    ad::ParamId concept_ = -1;  // |C| x d
    ad::ParamId position = -1;  // max_len x d
    ad::ParamId response = -1;  // 2 x d
};

struct GeneratorModel {
    // GRU cell, column convention (hidden x in)
    ad::ParamId Wz = -1, Uz = -1, bz = -1;
    ad::ParamId Wr = -1, Ur = -1, br = -1;
    ad::ParamId Wn = -1, Un = -1, bn = -1;
    // response head: pred_in -> pred_hidden -> 1
    ad::ParamId pW1 = -1, pb1 = -1, pw2 = -1, pb2 = -1;
    // autoregressive next-question head: interact_dim -> pred_hidden -> |Q|
    ad::ParamId aW1 = -1, ab1 = -1, aW2 = -1, ab2 = -1;
};

struct AttentionBlock {
    // row convention (in x out); per-head projections stacked column-wise
    ad::ParamId Wq = -1, Wk = -1, Wv = -1, Wo = -1;
};

struct DiscriminatorModel {
    AttentionBlock q_block;      // self over question-position rows
    AttentionBlock r_block;      // self over response-position rows
    AttentionBlock cross_block;  // Q=w_q, K=w_r, V=w_q (+) w_r
    // per-position score head: 2d -> 2d -> 1
    ad::ParamId pW1 = -1, pb1 = -1, pw2 = -1, pb2 = -1;
};

// The full trainable state: one flat parameter store plus typed handles and
// the catalog the dense ids refer to. Checkpoints round-trip all of it.
struct ModelState {
    Dims dims;
    ad::ParamStore params;
    EmbeddingTables emb;
    GeneratorModel gen;
    DiscriminatorModel disc;
    Catalog catalog;

    static ModelState create(const Dims& dims, const Catalog& catalog, std::uint64_t seed);

    std::span<const int> concepts_of(int question) const;
};

void save_checkpoint(const ModelState& m, const std::string& path);
ModelState load_checkpoint(const std::string& path);

}  // namespace advkt

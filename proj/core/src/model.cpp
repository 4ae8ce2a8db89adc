#include "advkt/model.hpp"

#include <cmath>

#include "advkt/rng.hpp"

namespace advkt {

void Dims::validate() const {
    if (n_questions <= 0 || n_concepts <= 0) throw ContractError("catalog sizes must be positive");
    if (embed_dim <= 0 || hidden_dim <= 0 || max_len <= 0) throw ContractError("dims must be positive");
    if (heads <= 0 || disc_width() % heads != 0) {
        throw ContractError("head count must divide the discriminator width");
    }
}

namespace {

void fill_uniform(Mat& m, double bound, Rng& rng) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = uniform(rng, -bound, bound);
    }
}

// Weight matrices get +-1/sqrt(fan_in); biases stay zero.
ad::ParamId add_weight(ad::ParamStore& ps, const std::string& name, int rows, int cols,
                       int fan_in, Rng& rng) {
    const ad::ParamId id = ps.add(name, rows, cols);
    fill_uniform(ps[id], 1.0 / std::sqrt(static_cast<double>(fan_in)), rng);
    return id;
}

ad::ParamId add_bias(ad::ParamStore& ps, const std::string& name, int rows) {
    return ps.add(name, rows, 1);
}

}  // namespace

ModelState ModelState::create(const Dims& dims, const Catalog& catalog, std::uint64_t seed) {
    dims.validate();
    ModelState m;
    m.dims = dims;
    m.catalog = catalog;
    Rng rng(seed);

    auto& ps = m.params;
    const int d = dims.embed_dim;
    const int dh = dims.hidden_dim;
    const double emb_bound = 1.0 / std::sqrt(static_cast<double>(d));

    m.emb.question = ps.add("emb/question", dims.n_questions + 1, d);
    m.emb.concept_ = ps.add("emb/concept", dims.n_concepts, d);
    m.emb.position = ps.add("emb/position", dims.max_len, d);
    m.emb.response = ps.add("emb/response", 2, d);
    fill_uniform(ps[m.emb.question], emb_bound, rng);
    fill_uniform(ps[m.emb.concept_], emb_bound, rng);
    fill_uniform(ps[m.emb.position], emb_bound, rng);
    fill_uniform(ps[m.emb.response], emb_bound, rng);

    const int xin = dims.interact_dim();
    auto gate = [&](const char* w, const char* u, const char* b, ad::ParamId& W, ad::ParamId& U,
                    ad::ParamId& B) {
        W = add_weight(ps, std::string("gen/gru/") + w, dh, xin, xin, rng);
        U = add_weight(ps, std::string("gen/gru/") + u, dh, dh, dh, rng);
        B = add_bias(ps, std::string("gen/gru/") + b, dh);
    };
    gate("Wz", "Uz", "bz", m.gen.Wz, m.gen.Uz, m.gen.bz);
    gate("Wr", "Ur", "br", m.gen.Wr, m.gen.Ur, m.gen.br);
    gate("Wn", "Un", "bn", m.gen.Wn, m.gen.Un, m.gen.bn);

    const int pin = dims.pred_in();
    const int ph = dims.pred_hidden();
    m.gen.pW1 = add_weight(ps, "gen/pred/W1", ph, pin, pin, rng);
    m.gen.pb1 = add_bias(ps, "gen/pred/b1", ph);
    m.gen.pw2 = add_weight(ps, "gen/pred/w2", ph, 1, ph, rng);
    m.gen.pb2 = add_bias(ps, "gen/pred/b2", 1);

    m.gen.aW1 = add_weight(ps, "gen/ar/W1", ph, xin, xin, rng);
    m.gen.ab1 = add_bias(ps, "gen/ar/b1", ph);
    m.gen.aW2 = add_weight(ps, "gen/ar/W2", dims.n_questions, ph, ph, rng);
    m.gen.ab2 = add_bias(ps, "gen/ar/b2", dims.n_questions);

    const int w = dims.disc_width();  // 2d
    auto block = [&](const char* tag, int value_in, AttentionBlock& b) {
        const std::string p = std::string("disc/") + tag + "/";
        b.Wq = add_weight(ps, p + "Wq", w, w, w, rng);
        b.Wk = add_weight(ps, p + "Wk", w, w, w, rng);
        b.Wv = add_weight(ps, p + "Wv", value_in, w, value_in, rng);
        b.Wo = add_weight(ps, p + "Wo", w, w, w, rng);
    };
    block("q", w, m.disc.q_block);
    block("r", w, m.disc.r_block);
    block("x", 2 * w, m.disc.cross_block);

    m.disc.pW1 = add_weight(ps, "disc/pred/W1", w, w, w, rng);
    m.disc.pb1 = add_bias(ps, "disc/pred/b1", w);
    m.disc.pw2 = add_weight(ps, "disc/pred/w2", w, 1, w, rng);
    m.disc.pb2 = add_bias(ps, "disc/pred/b2", 1);

    return m;
}

std::span<const int> ModelState::concepts_of(int question) const {
    if (question < 0 || question > dims.mask_id()) {
        throw LookupError("question id " + std::to_string(question) + " out of range");
    }
    if (question == dims.mask_id()) return {};
    const auto& c = catalog.questions[static_cast<std::size_t>(question)].concept_ids;
    return {c.data(), c.size()};
}

}  // namespace advkt

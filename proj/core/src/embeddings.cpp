#include "advkt/embeddings.hpp"

namespace advkt {

Vec question_repr(const ModelState& m, int question) {
    const auto concepts = m.concepts_of(question);  // validates the id
    const int d = m.dims.embed_dim;
    Vec out = Vec::Zero(2 * d);
    out.head(d) = m.params[m.emb.question].row(question).transpose();
    if (!concepts.empty()) {
        for (int c : concepts) out.tail(d) += m.params[m.emb.concept_].row(c).transpose();
        out.tail(d) /= static_cast<double>(concepts.size());
    }
    return out;
}

ad::NodeId question_repr_node(ad::Tape& tape, const ModelState& m, int question) {
    const auto concepts = m.concepts_of(question);
    const ad::NodeId eq = tape.embed_row(m.emb.question, question);
    const ad::NodeId vc = concepts.empty()
                              ? tape.zeros(m.dims.embed_dim, 1)
                              : tape.embed_rows_mean(m.emb.concept_, concepts);
    const ad::NodeId parts[] = {eq, vc};
    return tape.vconcat(parts);
}

}  // namespace advkt

#include "advkt/discriminator.hpp"

#include <cmath>
#include <numeric>

namespace advkt {

namespace {

std::vector<int> position_ids(std::size_t n) {
    std::vector<int> pos(n);
    std::iota(pos.begin(), pos.end(), 0);
    return pos;
}

void check_inputs(const ModelState& m, std::span<const int> questions,
                  std::span<const int> responses) {
    if (questions.size() != responses.size()) {
        throw ContractError("question/response length mismatch");
    }
    if (questions.empty()) throw ContractError("empty sequence");
    if (static_cast<int>(questions.size()) > m.dims.max_len) {
        throw ContractError("sequence longer than max_len");
    }
    for (int r : responses) {
        if (r != 0 && r != 1) throw ContractError("responses must be 0/1");
    }
}

ad::NodeId apply_block(ad::Tape& tape, const AttentionBlock& b, int heads,
                       ad::NodeId Q, ad::NodeId K, ad::NodeId V) {
    const ad::NodeId qp = tape.matmul_rows(Q, b.Wq);
    const ad::NodeId kp = tape.matmul_rows(K, b.Wk);
    const ad::NodeId vp = tape.matmul_rows(V, b.Wv);
    return tape.matmul_rows(tape.causal_attention(qp, kp, vp, heads), b.Wo);
}

// Shared encoder: question-position and response-position streams through the
// two self blocks and the cross block. Returns the D_o node (T x 2d).
ad::NodeId encode_tape(ad::Tape& tape, const ModelState& m,
                       std::span<const int> questions, std::span<const int> responses) {
    const auto pos = position_ids(questions.size());
    const ad::NodeId eo = tape.embed_rows(m.emb.position, pos);
    const ad::NodeId vq = tape.hconcat(tape.embed_rows(m.emb.question, questions), eo);
    const ad::NodeId vr = tape.hconcat(tape.embed_rows(m.emb.response, responses), eo);

    const int h = m.dims.heads;
    const ad::NodeId wq = apply_block(tape, m.disc.q_block, h, vq, vq, vq);
    const ad::NodeId wr = apply_block(tape, m.disc.r_block, h, vr, vr, vr);
    return apply_block(tape, m.disc.cross_block, h, wq, wr, tape.hconcat(wq, wr));
}

}  // namespace

PrefixScores score_prefixes(const ModelState& m, std::span<const int> questions,
                            std::span<const int> responses) {
    check_inputs(m, questions, responses);
    ad::Tape tape(m.params, nullptr, /*record=*/false);
    const ad::NodeId d_o = encode_tape(tape, m, questions, responses);
    const ad::NodeId hidden =
        tape.tanh_(tape.add_row_bias(tape.matmul_rows(d_o, m.disc.pW1), m.disc.pb1));
    const ad::NodeId logits =
        tape.add_row_bias(tape.matmul_rows(hidden, m.disc.pw2), m.disc.pb2);
    const ad::NodeId scores = tape.sigmoid(logits);

    PrefixScores out;
    out.d_o = tape.value(d_o);
    const Mat& s = tape.value(scores);
    out.scores.assign(s.data(), s.data() + s.rows());
    return out;
}

Mat multi_head(const Mat& Q, const Mat& K, const Mat& V, const Mat& Wq,
               const Mat& Wk, const Mat& Wv, const Mat& Wo, int heads,
               bool causal) {
    const Mat qp = Q * Wq;
    const Mat kp = K * Wk;
    const Mat vp = V * Wv;
    const Eigen::Index T = qp.rows();
    const Eigen::Index dk = qp.cols() / heads;
    const Eigen::Index dv = vp.cols() / heads;
    const double inv_scale = 1.0 / std::sqrt(static_cast<double>(dk));

    Mat concat(T, vp.cols());
    for (int a = 0; a < heads; ++a) {
        const Eigen::Index qo = a * dk;
        const Eigen::Index vo = a * dv;
        for (Eigen::Index t = 0; t < T; ++t) {
            const Eigen::Index limit = causal ? t : T - 1;
            Vec scores(limit + 1);
            for (Eigen::Index j = 0; j <= limit; ++j) {
                scores(j) = qp.row(t).segment(qo, dk).dot(kp.row(j).segment(qo, dk)) * inv_scale;
            }
            Vec w = (scores.array() - scores.maxCoeff()).exp();
            w /= w.sum();
            concat.row(t).segment(vo, dv).setZero();
            for (Eigen::Index j = 0; j <= limit; ++j) {
                concat.row(t).segment(vo, dv) += w(j) * vp.row(j).segment(vo, dv);
            }
        }
    }
    return concat * Wo;
}

DiscPassNodes disc_pass_tape(ad::Tape& tape, const ModelState& m,
                             std::span<const int> questions,
                             std::span<const int> responses) {
    check_inputs(m, questions, responses);
    const auto& d = m.disc;
    const ad::NodeId d_o = encode_tape(tape, m, questions, responses);
    const ad::NodeId u = tape.row_as_col(d_o, static_cast<int>(questions.size()) - 1);

    // score = sigmoid(w2 . tanh(W1^T u + b1) + b2); row convention of the
    // eval path transposes to the column convention here.
    const ad::NodeId t1 = tape.tanh_(tape.add_param(tape.matvec_t(d.pW1, u), d.pb1));
    const ad::NodeId score =
        tape.sigmoid(tape.add_param(tape.dot_param(d.pw2, t1), d.pb2));

    // d score / d u = s(1-s) * W1 (w2 (*) (1 - t1^2)), written with tape ops
    // so the penalty stays differentiable w.r.t. the head parameters too.
    const ad::NodeId mvec = tape.ewmul_param(d.pw2, tape.one_minus(tape.ewmul(t1, t1)));
    const ad::NodeId sp = tape.ewmul(score, tape.one_minus(score));
    const ad::NodeId grad_u = tape.mul_scalar_node(tape.matvec(d.pW1, mvec), sp);
    const ad::NodeId gap = tape.add_const(tape.norm2(grad_u), -1.0);
    const ad::NodeId gp = tape.ewmul(gap, gap);

    DiscPassNodes out;
    out.score = score;
    out.gp_term = gp;
    out.score_value = tape.scalar(score);
    out.gp_value = tape.scalar(gp);
    return out;
}

}  // namespace advkt

#include "advkt/generator.hpp"

#include <cmath>

namespace advkt {

namespace {

double attention_inv_scale(const Dims& d) {
    return 1.0 / std::sqrt(static_cast<double>(d.repr_dim()));
}

}  // namespace

RolloutState initial_state(const ModelState& m) {
    RolloutState s;
    s.hidden = Vec::Zero(m.dims.hidden_dim);
    return s;
}

StepResult gen_step(const ModelState& m, const RolloutState& s, int question) {
    StepResult out;
    out.question_repr = question_repr(m, question);

    const std::size_t hist = s.history_keys.size();
    if (hist == 0) {
        out.attention = Vec::Zero(m.dims.hidden_dim);
    } else {
        // mirrors Tape::attend: scores, max-shifted softmax, weighted sum
        const double inv_scale = attention_inv_scale(m.dims);
        Vec scores(static_cast<Eigen::Index>(hist));
        for (std::size_t i = 0; i < hist; ++i) {
            scores(static_cast<Eigen::Index>(i)) = out.question_repr.dot(s.history_keys[i]) * inv_scale;
        }
        const double mx = scores.maxCoeff();
        Vec w = (scores.array() - mx).exp();
        w /= w.sum();
        out.attention = Vec::Zero(m.dims.hidden_dim);
        for (std::size_t i = 0; i < hist; ++i) out.attention += w(static_cast<Eigen::Index>(i)) * s.history_values[i];
    }

    Vec pin(m.dims.pred_in());
    pin << out.question_repr, s.hidden, out.attention;
    const Vec h1 = (m.params[m.gen.pW1] * pin + m.params[m.gen.pb1].col(0)).array().tanh();
    const double z = m.params[m.gen.pw2].col(0).dot(h1) + m.params[m.gen.pb2](0, 0);
    out.prob = ad::sigmoid_val(z);
    return out;
}

Vec build_interaction(const ModelState& m, const Vec& vq, const Vec& attention,
                      double response_signal) {
    const int rd = m.dims.repr_dim();
    const int dh = m.dims.hidden_dim;
    Vec x = Vec::Zero(m.dims.interact_dim());
    const int offset = response_signal >= 0.5 ? 0 : rd + dh;
    x.segment(offset, rd) = vq;
    x.segment(offset + rd, dh) = attention;
    return x;
}

void gen_advance(const ModelState& m, RolloutState& s, const Vec& x, const Vec& vq) {
    const auto& p = m.params;
    const Vec z = (p[m.gen.Wz] * x + p[m.gen.Uz] * s.hidden + p[m.gen.bz].col(0))
                      .unaryExpr([](double v) { return ad::sigmoid_val(v); });
    const Vec r = (p[m.gen.Wr] * x + p[m.gen.Ur] * s.hidden + p[m.gen.br].col(0))
                      .unaryExpr([](double v) { return ad::sigmoid_val(v); });
    const Vec n = (p[m.gen.Wn] * x + r.cwiseProduct(p[m.gen.Un] * s.hidden) + p[m.gen.bn].col(0))
                      .array()
                      .tanh();
    s.hidden = (1.0 - z.array()) * n.array() + z.array() * s.hidden.array();
    s.history_keys.push_back(vq);
    s.history_values.push_back(s.hidden);
    ++s.t;
}

Vec predict_next_question(const ModelState& m, const Vec& x) {
    const auto& p = m.params;
    const Vec h = (p[m.gen.aW1] * x + p[m.gen.ab1].col(0)).array().tanh();
    Vec logits = p[m.gen.aW2] * h + p[m.gen.ab2].col(0);
    const double mx = logits.maxCoeff();
    Vec out = (logits.array() - mx).exp();
    out /= out.sum();
    return out;
}

RolloutResult rollout(const ModelState& m, std::span<const int> questions,
                      std::span<const int> responses, RolloutMode mode) {
    if (mode == RolloutMode::single_step && responses.size() != questions.size()) {
        throw ContractError("single_step rollout needs one response per question");
    }
    RolloutResult out;
    out.probs.reserve(questions.size());
    out.hard.reserve(questions.size());
    out.interactions.reserve(questions.size());

    RolloutState s = initial_state(m);
    for (std::size_t t = 0; t < questions.size(); ++t) {
        const StepResult step = gen_step(m, s, questions[t]);
        out.probs.push_back(step.prob);
        out.hard.push_back(step.prob >= 0.5 ? 1 : 0);
        const double signal = mode == RolloutMode::multi_step
                                  ? step.prob
                                  : static_cast<double>(responses[t]);
        Vec x = build_interaction(m, step.question_repr, step.attention, signal);
        gen_advance(m, s, x, step.question_repr);
        out.interactions.push_back(std::move(x));
    }
    return out;
}

RolloutNodes rollout_tape(ad::Tape& tape, const ModelState& m,
                          std::span<const int> questions,
                          std::span<const int> responses, RolloutMode mode,
                          bool with_ar, std::span<const int> forced_branches) {
    if (mode == RolloutMode::single_step && responses.size() != questions.size()) {
        throw ContractError("single_step rollout needs one response per question");
    }
    if (!forced_branches.empty() && forced_branches.size() != questions.size()) {
        throw ContractError("forced_branches must match the question count");
    }
    using ad::NodeId;
    const auto& g = m.gen;
    const int rd = m.dims.repr_dim();
    const int dh = m.dims.hidden_dim;
    const double inv_scale = attention_inv_scale(m.dims);

    RolloutNodes out;
    std::vector<NodeId> keys, values;
    NodeId h = tape.zeros(dh, 1);
    const NodeId zero_q = tape.zeros(rd, 1);
    const NodeId zero_a = tape.zeros(dh, 1);

    for (std::size_t t = 0; t < questions.size(); ++t) {
        const NodeId vq = question_repr_node(tape, m, questions[t]);
        const NodeId a = keys.empty() ? tape.zeros(dh, 1)
                                      : tape.attend(vq, keys, values, inv_scale);

        const NodeId parts[] = {vq, h, a};
        const NodeId pin = tape.vconcat(parts);
        const NodeId h1 = tape.tanh_(tape.add_param(tape.matvec(g.pW1, pin), g.pb1));
        const NodeId prob = tape.sigmoid(tape.add_param(tape.dot_param(g.pw2, h1), g.pb2));
        const double pv = tape.scalar(prob);
        out.prob.push_back(prob);
        out.probs.push_back(pv);
        out.hard.push_back(pv >= 0.5 ? 1 : 0);

        bool first_half;
        if (!forced_branches.empty()) {
            first_half = forced_branches[t] != 0;
        } else if (mode == RolloutMode::single_step) {
            first_half = responses[t] != 0;
        } else {
            first_half = pv >= 0.5;
        }
        const NodeId xparts_hi[] = {vq, a, zero_q, zero_a};
        const NodeId xparts_lo[] = {zero_q, zero_a, vq, a};
        const NodeId x = tape.vconcat(first_half ? std::span<const NodeId>(xparts_hi)
                                                 : std::span<const NodeId>(xparts_lo));
        out.x.push_back(x);

        // GRU cell
        const NodeId zg = tape.sigmoid(
            tape.add_param(tape.add(tape.matvec(g.Wz, x), tape.matvec(g.Uz, h)), g.bz));
        const NodeId rg = tape.sigmoid(
            tape.add_param(tape.add(tape.matvec(g.Wr, x), tape.matvec(g.Ur, h)), g.br));
        const NodeId ng = tape.tanh_(tape.add_param(
            tape.add(tape.matvec(g.Wn, x), tape.ewmul(rg, tape.matvec(g.Un, h))), g.bn));
        h = tape.add(tape.ewmul(tape.one_minus(zg), ng), tape.ewmul(zg, h));

        keys.push_back(vq);
        values.push_back(h);

        if (with_ar) {
            const NodeId ah = tape.tanh_(tape.add_param(tape.matvec(g.aW1, x), g.ab1));
            out.ar_logprob.push_back(
                tape.log_softmax_col(tape.add_param(tape.matvec(g.aW2, ah), g.ab2)));
        }
    }
    return out;
}

}  // namespace advkt

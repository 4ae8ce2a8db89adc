#pragma once

#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "advkt/corpus.hpp"
#include "advkt/model.hpp"
#include "advkt/rng.hpp"

namespace advkt::test {

// Small random catalog: every concept is someone's primary, 1-2 concepts per
// question.
inline Catalog make_catalog(int n_questions, int n_concepts, std::uint64_t seed) {
    Catalog cat;
    Rng rng(seed);
    for (int q = 0; q < n_questions; ++q) {
        Question question;
        question.id = q;
        question.concept_ids.push_back(q % n_concepts);
        if (n_concepts > 1 && bernoulli(rng, 0.4)) {
            int other = below_int(rng, n_concepts - 1);
            if (other >= q % n_concepts) ++other;
            question.concept_ids.push_back(other);
            std::sort(question.concept_ids.begin(), question.concept_ids.end());
        }
        cat.questions.push_back(std::move(question));
        cat.question_originals.push_back(q);
    }
    for (int c = 0; c < n_concepts; ++c) cat.concept_originals.push_back(c);
    cat.n_concepts = n_concepts;
    return cat;
}

inline Dims tiny_dims(int n_questions = 10, int n_concepts = 4) {
    Dims d;
    d.n_questions = n_questions;
    d.n_concepts = n_concepts;
    d.max_len = 8;
    d.embed_dim = 4;
    d.hidden_dim = 4;
    d.heads = 2;
    return d;
}

inline ModelState tiny_model(std::uint64_t seed = 7, int n_questions = 10, int n_concepts = 4) {
    const Dims d = tiny_dims(n_questions, n_concepts);
    return ModelState::create(d, make_catalog(n_questions, n_concepts, seed + 100), seed);
}

inline std::vector<int> random_questions(int T, int n_questions, Rng& rng) {
    std::vector<int> qs(static_cast<std::size_t>(T));
    for (auto& q : qs) q = below_int(rng, n_questions);
    return qs;
}

inline std::vector<int> random_responses(int T, Rng& rng) {
    std::vector<int> rs(static_cast<std::size_t>(T));
    for (auto& r : rs) r = below_int(rng, 2);
    return rs;
}

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::string worst;
};

// Central finite differences over every entry of every parameter against the
// analytic gradients in `grads`. `loss` must re-evaluate the loss from the
// current parameter values.
inline GradCheckReport finite_diff_check(ad::ParamStore& params, const ad::GradStore& grads,
                                         const std::function<double()>& loss,
                                         double eps = 1e-4) {
    GradCheckReport rep;
    for (int pid = 0; pid < params.size(); ++pid) {
        Mat& p = params[pid];
        for (Eigen::Index r = 0; r < p.rows(); ++r) {
            for (Eigen::Index c = 0; c < p.cols(); ++c) {
                const double saved = p(r, c);
                p(r, c) = saved + eps;
                const double up = loss();
                p(r, c) = saved - eps;
                const double dn = loss();
                p(r, c) = saved;
                const double fd = (up - dn) / (2.0 * eps);
                const double an = grads[pid](r, c);
                const double denom = std::max({1e-6, std::abs(fd), std::abs(an)});
                const double rel = std::abs(fd - an) / denom;
                if (rel > rep.max_rel_err) {
                    rep.max_rel_err = rel;
                    std::ostringstream os;
                    os << params.names[static_cast<std::size_t>(pid)] << '(' << r << ',' << c
                       << ") fd=" << fd << " an=" << an;
                    rep.worst = os.str();
                }
            }
        }
    }
    return rep;
}

inline Dataset tiny_dataset(int n_students, int len_lo, int len_hi, int n_questions,
                            int n_concepts, std::uint64_t seed) {
    Dataset d;
    d.catalog = make_catalog(n_questions, n_concepts, seed);
    Rng rng(seed + 1);
    for (int s = 0; s < n_students; ++s) {
        LearningSequence seq;
        seq.student_id = s;
        const int T = len_lo + below_int(rng, len_hi - len_lo + 1);
        for (int t = 0; t < T; ++t) {
            seq.steps.push_back({below_int(rng, n_questions), below_int(rng, 2)});
        }
        d.sequences.push_back(std::move(seq));
    }
    return d;
}

}  // namespace advkt::test

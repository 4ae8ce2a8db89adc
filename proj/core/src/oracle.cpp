#include "advkt/oracle.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace advkt {

namespace {
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

OracleData simulate(const OracleConfig& cfg) {
    if (cfg.n_students <= 0 || cfg.n_questions <= 0 || cfg.n_concepts <= 0) {
        throw ContractError("oracle counts must be positive");
    }
    if (cfg.n_questions < cfg.n_concepts) {
        throw ContractError("need at least one question per concept");
    }
    if (cfg.len_min < 1 || cfg.len_max < cfg.len_min) throw ContractError("bad length range");
    if (cfg.guess < 0 || cfg.slip < 0 || cfg.guess + cfg.slip > 1.0) {
        throw ContractError("guess/slip must be probabilities with guess + slip <= 1");
    }

    OracleData out;
    Dataset& d = out.dataset;

    // Catalog: primary concept by id modulo, optional second concept,
    // difficulty per question.
    Rng cat_rng(derive_seed(cfg.seed, 0xCA7A106ULL));
    std::vector<double> difficulty(static_cast<std::size_t>(cfg.n_questions));
    std::vector<std::vector<int>> pool(static_cast<std::size_t>(cfg.n_concepts));
    for (int q = 0; q < cfg.n_questions; ++q) {
        Question question;
        question.id = q;
        const int primary = q % cfg.n_concepts;
        question.concept_ids.push_back(primary);
        if (cfg.n_concepts > 1 && bernoulli(cat_rng, cfg.second_concept_prob)) {
            int other = below_int(cat_rng, cfg.n_concepts - 1);
            if (other >= primary) ++other;
            question.concept_ids.push_back(other);
            std::sort(question.concept_ids.begin(), question.concept_ids.end());
        }
        difficulty[static_cast<std::size_t>(q)] = normal(cat_rng, cfg.difficulty_mean, cfg.difficulty_sd);
        pool[static_cast<std::size_t>(primary)].push_back(q);
        d.catalog.questions.push_back(std::move(question));
        d.catalog.question_originals.push_back(q);
    }
    for (int c = 0; c < cfg.n_concepts; ++c) d.catalog.concept_originals.push_back(c);
    d.catalog.n_concepts = cfg.n_concepts;

    for (int s = 0; s < cfg.n_students; ++s) {
        Rng rng(derive_seed(cfg.seed, 0x57adULL, static_cast<std::uint64_t>(s)));
        std::vector<double> ability(static_cast<std::size_t>(cfg.n_concepts));
        for (auto& a : ability) a = normal(rng, cfg.ability_mean, cfg.ability_sd);

        const int len = cfg.len_min + below_int(rng, cfg.len_max - cfg.len_min + 1);
        int cur = below_int(rng, cfg.n_concepts);

        LearningSequence seq;
        seq.student_id = s;
        std::vector<double> probs;
        for (int t = 0; t < len; ++t) {
            if (t > 0 && !bernoulli(rng, cfg.stay_prob)) cur = (cur + 1) % cfg.n_concepts;
            const auto& candidates = pool[static_cast<std::size_t>(cur)];
            const int q = candidates[static_cast<std::size_t>(below_int(rng, static_cast<int>(candidates.size())))];

            const auto& cs = d.catalog.questions[static_cast<std::size_t>(q)].concept_ids;
            double mean_ability = 0.0;
            for (int c : cs) mean_ability += ability[static_cast<std::size_t>(c)];
            mean_ability /= static_cast<double>(cs.size());

            const double p = cfg.guess + (1.0 - cfg.guess - cfg.slip) *
                                             sigmoid(mean_ability - difficulty[static_cast<std::size_t>(q)]);
            const int r = bernoulli(rng, p) ? 1 : 0;
            probs.push_back(p);
            seq.steps.push_back({q, r});
            for (int c : cs) ability[static_cast<std::size_t>(c)] += cfg.learning_gain;
        }
        d.sequences.push_back(std::move(seq));
        out.p_true.push_back(std::move(probs));
    }
    return out;
}

void write_hidden_csv(const OracleData& data, std::ostream& out) {
    out << "student_id,order,p_true\n";
    char buf[32];
    for (std::size_t i = 0; i < data.dataset.sequences.size(); ++i) {
        const auto& seq = data.dataset.sequences[i];
        for (std::size_t t = 0; t < seq.steps.size(); ++t) {
            std::snprintf(buf, sizeof(buf), "%.17g", data.p_true[i][t]);
            out << seq.student_id << ',' << (t + 1) << ',' << buf << '\n';
        }
    }
}

}  // namespace advkt

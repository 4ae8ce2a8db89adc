#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "advkt/oracle.hpp"
#include "helpers.hpp"

using namespace advkt;

TEST_CASE("simulation is deterministic under a fixed seed") {
    OracleConfig cfg;
    cfg.n_students = 6;
    cfg.len_min = 10;
    cfg.len_max = 20;
    cfg.seed = 77;
    const OracleData a = simulate(cfg);
    const OracleData b = simulate(cfg);
    REQUIRE(a.dataset.sequences.size() == b.dataset.sequences.size());
    for (std::size_t i = 0; i < a.dataset.sequences.size(); ++i) {
        REQUIRE(a.dataset.sequences[i].steps.size() == b.dataset.sequences[i].steps.size());
        for (std::size_t t = 0; t < a.dataset.sequences[i].steps.size(); ++t) {
            CHECK(a.dataset.sequences[i].steps[t].question == b.dataset.sequences[i].steps[t].question);
            CHECK(a.dataset.sequences[i].steps[t].response == b.dataset.sequences[i].steps[t].response);
            CHECK(a.p_true[i][t] == b.p_true[i][t]);
        }
    }
    cfg.seed = 78;
    const OracleData c = simulate(cfg);
    bool differs = false;
    for (std::size_t i = 0; i < c.dataset.sequences.size() && !differs; ++i) {
        differs = c.dataset.sequences[i].steps.size() != a.dataset.sequences[i].steps.size() ||
                  c.p_true[i] != a.p_true[i];
    }
    CHECK(differs);
}

TEST_CASE("saturated ability with no noise answers everything correctly") {
    OracleConfig cfg;
    cfg.n_students = 4;
    cfg.guess = 0.0;
    cfg.slip = 0.0;
    cfg.learning_gain = 0.0;
    cfg.ability_mean = 25.0;  // far above any difficulty draw
    cfg.ability_sd = 0.01;
    cfg.len_min = 8;
    cfg.len_max = 12;
    const OracleData d = simulate(cfg);
    for (const auto& seq : d.dataset.sequences) {
        for (const auto& st : seq.steps) CHECK(st.response == 1);
    }
}

TEST_CASE("guess + slip = 1 removes all signal") {
    OracleConfig cfg;
    cfg.n_students = 3;
    cfg.guess = 0.5;
    cfg.slip = 0.5;
    cfg.len_min = 5;
    cfg.len_max = 9;
    const OracleData d = simulate(cfg);
    for (const auto& probs : d.p_true) {
        for (double p : probs) CHECK(p == doctest::Approx(0.5).epsilon(1e-12));
    }
}

TEST_CASE("hidden probabilities stay inside [guess, 1 - slip] and grow with practice") {
    OracleConfig cfg;
    cfg.n_students = 5;
    cfg.n_questions = 6;
    cfg.n_concepts = 1;   // single concept: every attempt trains it
    cfg.stay_prob = 1.0;
    cfg.difficulty_sd = 0.0;
    cfg.second_concept_prob = 0.0;
    cfg.learning_gain = 0.1;
    cfg.len_min = 12;
    cfg.len_max = 12;
    const OracleData d = simulate(cfg);
    for (const auto& probs : d.p_true) {
        for (std::size_t t = 0; t < probs.size(); ++t) {
            CHECK(probs[t] >= cfg.guess - 1e-12);
            CHECK(probs[t] <= 1.0 - cfg.slip + 1e-12);
            if (t > 0) CHECK(probs[t] >= probs[t - 1] - 1e-12);  // ability never decreases
        }
    }
}

TEST_CASE("sidecar CSV lines match the step count") {
    OracleConfig cfg;
    cfg.n_students = 3;
    cfg.len_min = 4;
    cfg.len_max = 7;
    const OracleData d = simulate(cfg);
    std::ostringstream os;
    write_hidden_csv(d, os);
    std::istringstream in(os.str());
    std::string line;
    std::size_t lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == d.dataset.n_steps() + 1);
}

TEST_CASE("oracle dataset serializes through the corpus format") {
    OracleConfig cfg;
    cfg.n_students = 4;
    cfg.len_min = 12;
    cfg.len_max = 16;
    const OracleData d = simulate(cfg);
    std::ostringstream os;
    serialize(d.dataset, os);
    std::istringstream in(os.str());
    const Dataset back = ingest_log(in);
    CHECK(back.sequences.size() == d.dataset.sequences.size());
    CHECK(back.n_steps() == d.dataset.n_steps());
}

TEST_CASE("config contracts") {
    OracleConfig cfg;
    cfg.n_questions = 2;
    cfg.n_concepts = 5;
    CHECK_THROWS_AS(simulate(cfg), ContractError);
    cfg = {};
    cfg.guess = 0.7;
    cfg.slip = 0.7;
    CHECK_THROWS_AS(simulate(cfg), ContractError);
}

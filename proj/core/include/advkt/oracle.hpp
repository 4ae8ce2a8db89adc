#pragma once

#include <cstdint>
#include <iosfwd>

#include "advkt/corpus.hpp"

namespace advkt {

// Synthetic student population with known dynamics: per-concept abilities,
// additive mastery growth on every attempt, guess/slip noise, and a cyclic
// concept curriculum that gives question sequences learnable local structure.
struct OracleConfig {
    int n_students = 300;
    int n_questions = 100;
    int n_concepts = 10;
    double ability_mean = 0.0;
    double ability_sd = 1.0;
    double learning_gain = 0.03;     // per attempt, on every concept of the question
    double difficulty_mean = 0.0;
    double difficulty_sd = 1.0;
    double guess = 0.15;
    double slip = 0.1;
    int len_min = 160;               // sequence length, uniform inclusive range
    int len_max = 200;
    double second_concept_prob = 0.3;
    double stay_prob = 0.85;         // probability of staying on the current concept
    std::uint64_t seed = 1;
};

struct OracleData {
    Dataset dataset;
    // hidden per-step correctness probabilities, aligned with
    // dataset.sequences / steps
    std::vector<std::vector<double>> p_true;
};

OracleData simulate(const OracleConfig& cfg);

// Sidecar CSV: student_id,order,p_true
void write_hidden_csv(const OracleData& data, std::ostream& out);

}  // namespace advkt

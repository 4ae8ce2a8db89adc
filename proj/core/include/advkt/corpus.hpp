#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "advkt/common.hpp"
#include "advkt/rng.hpp"

namespace advkt {

// One catalog entry. Ids are dense per-dataset indices; the original file ids
// live in Catalog's side maps.
struct Question {
    int id = 0;
    std::vector<int> concept_ids;  // dense, sorted, non-empty
};

struct Step {
    int question = 0;
    int response = 0;  // 0/1
};

struct LearningSequence {
    std::int64_t student_id = 0;
    std::vector<Step> steps;
};

struct Catalog {
    std::vector<Question> questions;            // index == dense id
    std::vector<std::int64_t> question_originals;  // dense -> original id
    std::vector<std::int64_t> concept_originals;
    int n_concepts = 0;

    int n_questions() const { return static_cast<int>(questions.size()); }
};

struct Dataset {
    Catalog catalog;
    std::vector<LearningSequence> sequences;

    int n_questions() const { return catalog.n_questions(); }
    int n_concepts() const { return catalog.n_concepts; }
    std::size_t n_steps() const;
};

// Empirical statistics of a training corpus: per-question correct rate,
// successor (bigram) distributions, initial-question and length frequencies.
struct CorpusStats {
    std::vector<double> difficulty;           // correct rate, 0.5 when unattempted
    std::vector<std::int64_t> attempts;       // per question
    std::vector<std::int64_t> corrects;       // per question
    // transitions[q] = sparse successor distribution, (next question, prob),
    // sorted by question id; empty when q was never followed by anything.
    std::vector<std::vector<std::pair<int, double>>> transitions;
    std::vector<double> initial_dist;         // over questions, sums to 1
    std::vector<std::pair<int, double>> length_dist;  // (length, prob), sorted

    int sample_length(Rng& rng) const;
    int sample_initial(Rng& rng) const;
    // Successor draw; returns -1 when q has no outgoing transitions.
    int sample_successor(int q, Rng& rng) const;
};

struct IngestOptions {
    int min_interactions = 10;  // students with fewer rows are dropped
    int max_len = 200;          // keep only the last max_len rows per student
};

// Reads the interaction log CSV (header `student_id,order,question_id,
// concept_ids,response`, concept_ids pipe-separated). Throws ParseError with
// a line number on malformed rows, ValidationError on bad content.
Dataset ingest_log(std::istream& in, const IngestOptions& opts = {});

// Writes a dataset back out in the same CSV format using original ids;
// ingest_log(serialize(d)) == d for datasets produced by ingest_log.
void serialize(const Dataset& d, std::ostream& out);

// Remaps a dataset ingested on its own onto a reference catalog (original ids
// must all exist in `ref`). Used when evaluating a checkpoint on a separately
// supplied file.
Dataset align_to_catalog(const Dataset& d, const Catalog& ref);

// Student-level split; every student lands wholly on one side.
std::pair<Dataset, Dataset> split(const Dataset& d, double test_fraction,
                                  std::uint64_t seed);

// smoothing is an additive prior on the correct-rate only:
// (correct + s) / (attempts + 2 s). Transition and initial/length tables are
// exact empirical frequencies.
CorpusStats compute_stats(const Dataset& train, double smoothing = 0.0);

}  // namespace advkt

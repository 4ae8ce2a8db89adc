#pragma once

#include <vector>

#include "advkt/corpus.hpp"
#include "advkt/rng.hpp"

namespace advkt {

// Which of the discriminator's four training pools a sample belongs to.
// original + augmented are positives; generative + reversed are negatives.
enum class Provenance { original, augmented, generative, reversed };

const char* provenance_name(Provenance p);

struct AugmentedSample {
    std::vector<Step> steps;
    Provenance prov = Provenance::original;
};

// Each question independently becomes `mask_id` with probability `rate`;
// redrawn until at least one step stays unmasked. Responses untouched.
AugmentedSample mask_aug(const std::vector<Step>& seq, int mask_id, double rate, Rng& rng);

// Uniformly positioned contiguous window of ceil(fraction * T) steps.
AugmentedSample crop_aug(const std::vector<Step>& seq, double fraction, Rng& rng);

// One uniformly chosen window of `span` steps has its (q, r) pairs shuffled.
AugmentedSample permute_aug(const std::vector<Step>& seq, int span, Rng& rng);

// Correctly answered questions may be swapped for a strictly easier one
// (higher correct rate), incorrect ones for a strictly harder one; steps with
// no eligible replacement stay put. Responses untouched.
AugmentedSample replace_aug(const std::vector<Step>& seq, const CorpusStats& stats,
                            double rate, Rng& rng);

// Label-reversed negative: each response flips with probability flip_prob,
// redrawn until at least one flip happened. Questions untouched.
AugmentedSample reverse_labels(const std::vector<Step>& seq, double flip_prob, Rng& rng);

// Bigram chain draw: length from the empirical length distribution, first
// question from the initial distribution, then successor draws; dead ends
// fall back to the initial distribution.
std::vector<int> sample_synthetic_questions(const CorpusStats& stats, Rng& rng);

}  // namespace advkt

#include "advkt/augmentor.hpp"

#include <algorithm>
#include <cmath>

namespace advkt {

const char* provenance_name(Provenance p) {
    switch (p) {
        case Provenance::original: return "original";
        case Provenance::augmented: return "augmented";
        case Provenance::generative: return "generative";
        case Provenance::reversed: return "reversed";
    }
    return "?";
}

AugmentedSample mask_aug(const std::vector<Step>& seq, int mask_id, double rate, Rng& rng) {
    if (!(rate > 0.0 && rate < 1.0)) throw ContractError("mask rate must be in (0,1)");
    if (seq.empty()) throw ContractError("empty sequence");
    std::vector<bool> flags(seq.size());
    while (true) {
        bool any_clear = false;
        for (std::size_t i = 0; i < seq.size(); ++i) {
            flags[i] = bernoulli(rng, rate);
            any_clear |= !flags[i];
        }
        if (any_clear) break;
    }
    AugmentedSample out;
    out.prov = Provenance::augmented;
    out.steps = seq;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (flags[i]) out.steps[i].question = mask_id;
    }
    return out;
}

AugmentedSample crop_aug(const std::vector<Step>& seq, double fraction, Rng& rng) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ContractError("crop fraction must be in (0,1]");
    if (seq.empty()) throw ContractError("empty sequence");
    const int T = static_cast<int>(seq.size());
    const int len = std::max(1, static_cast<int>(std::ceil(fraction * T)));
    const int start = below_int(rng, T - len + 1);
    AugmentedSample out;
    out.prov = Provenance::augmented;
    out.steps.assign(seq.begin() + start, seq.begin() + start + len);
    return out;
}

AugmentedSample permute_aug(const std::vector<Step>& seq, int span, Rng& rng) {
    const int T = static_cast<int>(seq.size());
    if (span < 2 || span > T) throw ContractError("permute span must be in [2, T]");
    const int start = below_int(rng, T - span + 1);
    AugmentedSample out;
    out.prov = Provenance::augmented;
    out.steps = seq;
    for (int i = span; i > 1; --i) {
        const int j = below_int(rng, i);
        std::swap(out.steps[static_cast<std::size_t>(start + i - 1)],
                  out.steps[static_cast<std::size_t>(start + j)]);
    }
    return out;
}

AugmentedSample replace_aug(const std::vector<Step>& seq, const CorpusStats& stats,
                            double rate, Rng& rng) {
    if (!(rate > 0.0 && rate < 1.0)) throw ContractError("replace rate must be in (0,1)");
    // question ids ordered by correct rate; equal-difficulty questions are
    // never eligible (strictly easier / strictly harder only)
    const int nq = static_cast<int>(stats.difficulty.size());
    std::vector<int> by_diff(static_cast<std::size_t>(nq));
    for (int q = 0; q < nq; ++q) by_diff[static_cast<std::size_t>(q)] = q;
    std::stable_sort(by_diff.begin(), by_diff.end(), [&](int a, int b) {
        return stats.difficulty[static_cast<std::size_t>(a)] < stats.difficulty[static_cast<std::size_t>(b)];
    });
    std::vector<double> sorted_diff(static_cast<std::size_t>(nq));
    for (int i = 0; i < nq; ++i) {
        sorted_diff[static_cast<std::size_t>(i)] = stats.difficulty[static_cast<std::size_t>(by_diff[static_cast<std::size_t>(i)])];
    }

    AugmentedSample out;
    out.prov = Provenance::augmented;
    out.steps = seq;
    for (auto& st : out.steps) {
        const bool selected = bernoulli(rng, rate);
        if (!selected || st.question >= nq) continue;
        const double d = stats.difficulty[static_cast<std::size_t>(st.question)];
        if (st.response == 1) {
            // strictly easier: correct rate above d
            const auto it = std::upper_bound(sorted_diff.begin(), sorted_diff.end(), d);
            const int lo = static_cast<int>(it - sorted_diff.begin());
            if (lo >= nq) continue;
            st.question = by_diff[static_cast<std::size_t>(lo + below_int(rng, nq - lo))];
        } else {
            // strictly harder: correct rate below d
            const auto it = std::lower_bound(sorted_diff.begin(), sorted_diff.end(), d);
            const int hi = static_cast<int>(it - sorted_diff.begin());
            if (hi <= 0) continue;
            st.question = by_diff[static_cast<std::size_t>(below_int(rng, hi))];
        }
    }
    return out;
}

AugmentedSample reverse_labels(const std::vector<Step>& seq, double flip_prob, Rng& rng) {
    if (!(flip_prob > 0.0 && flip_prob <= 1.0)) throw ContractError("flip_prob must be in (0,1]");
    if (seq.empty()) throw ContractError("empty sequence");
    std::vector<bool> flags(seq.size());
    while (true) {
        bool any = false;
        for (std::size_t i = 0; i < seq.size(); ++i) {
            flags[i] = bernoulli(rng, flip_prob);
            any |= flags[i];
        }
        if (any) break;
    }
    AugmentedSample out;
    out.prov = Provenance::reversed;
    out.steps = seq;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (flags[i]) out.steps[i].response = 1 - out.steps[i].response;
    }
    return out;
}

std::vector<int> sample_synthetic_questions(const CorpusStats& stats, Rng& rng) {
    if (stats.length_dist.empty()) throw ContractError("stats built from an empty corpus");
    const int len = stats.sample_length(rng);
    std::vector<int> qs;
    qs.reserve(static_cast<std::size_t>(len));
    int q = stats.sample_initial(rng);
    qs.push_back(q);
    for (int i = 1; i < len; ++i) {
        int next = stats.sample_successor(q, rng);
        if (next < 0) next = stats.sample_initial(rng);
        qs.push_back(next);
        q = next;
    }
    return qs;
}

}  // namespace advkt

#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "advkt/augmentor.hpp"
#include "advkt/generator.hpp"

namespace advkt {

struct EvalReport {
    RolloutMode mode = RolloutMode::multi_step;
    double acc = 0.0;
    double auc = 0.0;
    std::size_t n_steps = 0;
    std::size_t n_sequences = 0;
};

// Rank-based AUC, ties counted half; equals exhaustive pair enumeration.
// Throws UndefinedMetricError when only one class is present.
double auc(std::span<const int> labels, std::span<const double> scores);

double acc(std::span<const int> labels, std::span<const double> scores,
           double threshold = 0.5);

// Rolls out every sequence in the given mode and pools all step predictions.
// multi_step rollouts never see the ground-truth responses; labels are used
// for scoring only.
EvalReport evaluate(const ModelState& m, const Dataset& data, RolloutMode mode,
                    int threads = 0);

struct LengthBucket {
    int lo = 0;       // inclusive step index, 1-based
    int hi = 0;       // exclusive, except the final bucket which is closed
    bool defined = false;  // false when the bucket holds a single class
    double auc = 0.0;
    std::size_t count = 0;
};

// Buckets step predictions by 1-based step index using the given edges and
// computes AUC within each bucket.
std::vector<LengthBucket> auc_by_length(const ModelState& m, const Dataset& data,
                                        std::span<const int> edges, RolloutMode mode,
                                        int threads = 0);

std::string report_text(const EvalReport& r);
std::string report_csv(const EvalReport& r);
std::string buckets_csv(std::span<const LengthBucket> buckets);

// One row per sample: provenance label plus the last-position D_o vector.
void export_embeddings(const ModelState& m, std::span<const AugmentedSample> samples,
                       std::ostream& out);

}  // namespace advkt

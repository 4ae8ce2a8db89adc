#include "advkt/evaluator.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <sstream>

#include "advkt/discriminator.hpp"
#include "advkt/threading.hpp"

namespace advkt {

namespace {

std::string g17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct PooledSteps {
    std::vector<int> labels;
    std::vector<double> scores;
    std::vector<int> step_index;  // 1-based position within the sequence
};

PooledSteps pooled_rollout(const ModelState& m, const Dataset& data, RolloutMode mode,
                           int threads) {
    if (data.sequences.empty()) throw ContractError("evaluate on empty dataset");
    const std::size_t n = data.sequences.size();
    std::vector<RolloutResult> results(n);
    parallel_chunks(static_cast<int>(n), resolve_threads(threads), [&](int, int begin, int end) {
        std::vector<int> qs, rs;
        for (int i = begin; i < end; ++i) {
            const auto& steps = data.sequences[static_cast<std::size_t>(i)].steps;
            qs.clear();
            rs.clear();
            for (const auto& st : steps) {
                qs.push_back(st.question);
                rs.push_back(st.response);
            }
            results[static_cast<std::size_t>(i)] = rollout(m, qs, rs, mode);
        }
    });
    PooledSteps pool;
    pool.labels.reserve(data.n_steps());
    pool.scores.reserve(data.n_steps());
    pool.step_index.reserve(data.n_steps());
    for (std::size_t i = 0; i < n; ++i) {
        const auto& steps = data.sequences[i].steps;
        for (std::size_t t = 0; t < steps.size(); ++t) {
            pool.labels.push_back(steps[t].response);
            pool.scores.push_back(results[i].probs[t]);
            pool.step_index.push_back(static_cast<int>(t) + 1);
        }
    }
    return pool;
}

}  // namespace

double auc(std::span<const int> labels, std::span<const double> scores) {
    if (labels.size() != scores.size()) throw ContractError("auc length mismatch");
    std::size_t n_pos = 0;
    for (int l : labels) n_pos += static_cast<std::size_t>(l == 1);
    const std::size_t n_neg = labels.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw UndefinedMetricError("AUC undefined: only one class present");
    }

    std::vector<std::size_t> idx(labels.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // average ranks over tied groups, 1-based
    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j + 1 < idx.size() && scores[idx[j + 1]] == scores[idx[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            if (labels[idx[k]] == 1) pos_rank_sum += avg_rank;
        }
        i = j + 1;
    }
    const double np = static_cast<double>(n_pos);
    return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

double acc(std::span<const int> labels, std::span<const double> scores, double threshold) {
    if (labels.size() != scores.size()) throw ContractError("acc length mismatch");
    if (labels.empty()) throw ContractError("acc on empty input");
    std::size_t hit = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        hit += static_cast<std::size_t>((scores[i] >= threshold ? 1 : 0) == labels[i]);
    }
    return static_cast<double>(hit) / static_cast<double>(labels.size());
}

EvalReport evaluate(const ModelState& m, const Dataset& data, RolloutMode mode, int threads) {
    const PooledSteps pool = pooled_rollout(m, data, mode, threads);
    EvalReport r;
    r.mode = mode;
    r.n_steps = pool.labels.size();
    r.n_sequences = data.sequences.size();
    r.acc = acc(pool.labels, pool.scores);
    r.auc = auc(pool.labels, pool.scores);
    return r;
}

std::vector<LengthBucket> auc_by_length(const ModelState& m, const Dataset& data,
                                        std::span<const int> edges, RolloutMode mode,
                                        int threads) {
    if (edges.size() < 2) throw ContractError("need at least two bucket edges");
    for (std::size_t i = 1; i < edges.size(); ++i) {
        if (edges[i] <= edges[i - 1]) throw ContractError("bucket edges must be strictly increasing");
    }
    const PooledSteps pool = pooled_rollout(m, data, mode, threads);

    std::vector<LengthBucket> buckets(edges.size() - 1);
    std::vector<std::vector<int>> labels(buckets.size());
    std::vector<std::vector<double>> scores(buckets.size());
    for (std::size_t b = 0; b < buckets.size(); ++b) {
        buckets[b].lo = edges[b];
        buckets[b].hi = edges[b + 1];
    }
    for (std::size_t i = 0; i < pool.labels.size(); ++i) {
        const int t = pool.step_index[i];
        if (t < edges.front() || t > edges.back()) continue;
        // final bucket is closed at the last edge
        std::size_t b = buckets.size() - 1;
        for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
            if (t < edges[k + 1]) {
                b = k;
                break;
            }
        }
        labels[b].push_back(pool.labels[i]);
        scores[b].push_back(pool.scores[i]);
    }
    for (std::size_t b = 0; b < buckets.size(); ++b) {
        buckets[b].count = labels[b].size();
        try {
            buckets[b].auc = auc(labels[b], scores[b]);
            buckets[b].defined = true;
        } catch (const UndefinedMetricError&) {
            buckets[b].defined = false;
        } catch (const ContractError&) {
            buckets[b].defined = false;  // empty bucket
        }
    }
    return buckets;
}

std::string report_text(const EvalReport& r) {
    std::ostringstream os;
    os << "mode: " << (r.mode == RolloutMode::multi_step ? "multi_step" : "single_step")
       << "\nsequences: " << r.n_sequences << "\nsteps: " << r.n_steps
       << "\nacc: " << g17(r.acc) << "\nauc: " << g17(r.auc) << "\n";
    return os.str();
}

std::string report_csv(const EvalReport& r) {
    std::ostringstream os;
    os << "mode,sequences,steps,acc,auc\n"
       << (r.mode == RolloutMode::multi_step ? "multi_step" : "single_step") << ','
       << r.n_sequences << ',' << r.n_steps << ',' << g17(r.acc) << ',' << g17(r.auc) << '\n';
    return os.str();
}

std::string buckets_csv(std::span<const LengthBucket> buckets) {
    std::ostringstream os;
    os << "bucket_lo,bucket_hi,count,auc\n";
    for (const auto& b : buckets) {
        os << b.lo << ',' << b.hi << ',' << b.count << ',';
        if (b.defined) os << g17(b.auc);
        os << '\n';
    }
    return os.str();
}

void export_embeddings(const ModelState& m, std::span<const AugmentedSample> samples,
                       std::ostream& out) {
    out << "provenance";
    for (int i = 0; i < m.dims.disc_width(); ++i) out << ",v" << i;
    out << '\n';
    for (const auto& s : samples) {
        std::vector<int> qs, rs;
        for (const auto& st : s.steps) {
            qs.push_back(st.question);
            rs.push_back(st.response);
        }
        const PrefixScores ps = score_prefixes(m, qs, rs);
        out << provenance_name(s.prov);
        const auto last = ps.d_o.row(ps.d_o.rows() - 1);
        for (Eigen::Index i = 0; i < last.size(); ++i) out << ',' << g17(last(i));
        out << '\n';
    }
}

}  // namespace advkt

#include "advkt/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>

namespace advkt {

namespace {

std::int64_t parse_int(std::string_view field, int line, const char* what) {
    std::int64_t v = 0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || field.empty()) {
        throw ParseError("line " + std::to_string(line) + ": bad " + what +
                         " '" + std::string(field) + "'");
    }
    return v;
}

std::vector<std::string_view> split_fields(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

struct RawRow {
    std::int64_t student;
    std::int64_t order;
    std::int64_t question;
    std::vector<std::int64_t> concepts;
    int response;
    int line;
};

}  // namespace

std::size_t Dataset::n_steps() const {
    std::size_t n = 0;
    for (const auto& s : sequences) n += s.steps.size();
    return n;
}

Dataset ingest_log(std::istream& in, const IngestOptions& opts) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty stream, header expected");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "student_id,order,question_id,concept_ids,response") {
        throw ParseError("line 1: unexpected header '" + line + "'");
    }

    std::vector<RawRow> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_fields(line, ',');
        if (fields.size() != 5) {
            throw ParseError("line " + std::to_string(lineno) + ": expected 5 fields, got " +
                             std::to_string(fields.size()));
        }
        RawRow r;
        r.line = lineno;
        r.student = parse_int(fields[0], lineno, "student_id");
        r.order = parse_int(fields[1], lineno, "order");
        r.question = parse_int(fields[2], lineno, "question_id");
        for (auto c : split_fields(fields[3], '|')) {
            if (c.empty()) continue;
            r.concepts.push_back(parse_int(c, lineno, "concept id"));
        }
        if (r.concepts.empty()) {
            throw ValidationError("line " + std::to_string(lineno) +
                                  ": question " + std::to_string(r.question) +
                                  " has no concepts");
        }
        std::sort(r.concepts.begin(), r.concepts.end());
        r.concepts.erase(std::unique(r.concepts.begin(), r.concepts.end()), r.concepts.end());
        const std::int64_t resp = parse_int(fields[4], lineno, "response");
        if (resp != 0 && resp != 1) {
            throw ValidationError("line " + std::to_string(lineno) + ": response " +
                                  std::to_string(resp) + " not in {0,1}");
        }
        r.response = static_cast<int>(resp);
        rows.push_back(std::move(r));
    }

    // Group rows per student in file order, check order strictly increasing,
    // and check concept sets are consistent per question.
    std::vector<std::int64_t> student_order;
    std::unordered_map<std::int64_t, std::vector<const RawRow*>> per_student;
    std::unordered_map<std::int64_t, std::vector<std::int64_t>> question_concepts;
    for (const auto& r : rows) {
        auto [it, inserted] = per_student.try_emplace(r.student);
        if (inserted) student_order.push_back(r.student);
        if (!it->second.empty() && it->second.back()->order >= r.order) {
            throw ValidationError("line " + std::to_string(r.line) + ": order " +
                                  std::to_string(r.order) + " not strictly increasing for student " +
                                  std::to_string(r.student));
        }
        it->second.push_back(&r);
        auto [qit, qnew] = question_concepts.try_emplace(r.question, r.concepts);
        if (!qnew && qit->second != r.concepts) {
            throw ValidationError("line " + std::to_string(r.line) + ": question " +
                                  std::to_string(r.question) +
                                  " declared with a different concept set earlier");
        }
    }

    // Drop short students, truncate long ones to their last max_len rows.
    std::vector<std::pair<std::int64_t, std::vector<const RawRow*>>> kept;
    for (auto sid : student_order) {
        auto& rws = per_student[sid];
        if (static_cast<int>(rws.size()) < opts.min_interactions) continue;
        if (static_cast<int>(rws.size()) > opts.max_len) {
            rws.erase(rws.begin(), rws.end() - opts.max_len);
        }
        kept.emplace_back(sid, std::move(rws));
    }

    // Dense re-indexing in first-appearance order over the kept rows.
    Dataset d;
    std::unordered_map<std::int64_t, int> qmap;
    std::unordered_map<std::int64_t, int> cmap;
    auto concept_dense = [&](std::int64_t oc) {
        auto [it, inserted] = cmap.try_emplace(oc, static_cast<int>(d.catalog.concept_originals.size()));
        if (inserted) d.catalog.concept_originals.push_back(oc);
        return it->second;
    };
    for (auto& [sid, rws] : kept) {
        LearningSequence seq;
        seq.student_id = sid;
        seq.steps.reserve(rws.size());
        for (const RawRow* r : rws) {
            auto [it, inserted] = qmap.try_emplace(r->question, static_cast<int>(d.catalog.questions.size()));
            if (inserted) {
                Question q;
                q.id = it->second;
                for (auto oc : r->concepts) q.concept_ids.push_back(concept_dense(oc));
                std::sort(q.concept_ids.begin(), q.concept_ids.end());
                d.catalog.questions.push_back(std::move(q));
                d.catalog.question_originals.push_back(r->question);
            }
            seq.steps.push_back({it->second, r->response});
        }
        d.sequences.push_back(std::move(seq));
    }
    d.catalog.n_concepts = static_cast<int>(d.catalog.concept_originals.size());
    return d;
}

void serialize(const Dataset& d, std::ostream& out) {
    out << "student_id,order,question_id,concept_ids,response\n";
    for (const auto& seq : d.sequences) {
        int order = 1;
        for (const auto& st : seq.steps) {
            out << seq.student_id << ',' << order++ << ','
                << d.catalog.question_originals[static_cast<std::size_t>(st.question)] << ',';
            const auto& q = d.catalog.questions[static_cast<std::size_t>(st.question)];
            for (std::size_t i = 0; i < q.concept_ids.size(); ++i) {
                if (i) out << '|';
                out << d.catalog.concept_originals[static_cast<std::size_t>(q.concept_ids[i])];
            }
            out << ',' << st.response << '\n';
        }
    }
}

Dataset align_to_catalog(const Dataset& d, const Catalog& ref) {
    std::unordered_map<std::int64_t, int> qmap;
    for (std::size_t i = 0; i < ref.question_originals.size(); ++i) {
        qmap.emplace(ref.question_originals[i], static_cast<int>(i));
    }
    Dataset out;
    out.catalog = ref;
    out.sequences.reserve(d.sequences.size());
    for (const auto& seq : d.sequences) {
        LearningSequence mapped;
        mapped.student_id = seq.student_id;
        mapped.steps.reserve(seq.steps.size());
        for (const auto& st : seq.steps) {
            const auto orig = d.catalog.question_originals[static_cast<std::size_t>(st.question)];
            const auto it = qmap.find(orig);
            if (it == qmap.end()) {
                throw ValidationError("question id " + std::to_string(orig) +
                                      " not present in the reference catalog");
            }
            mapped.steps.push_back({it->second, st.response});
        }
        out.sequences.push_back(std::move(mapped));
    }
    return out;
}

std::pair<Dataset, Dataset> split(const Dataset& d, double test_fraction,
                                  std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ContractError("test_fraction must be in (0,1)");
    }
    const int n = static_cast<int>(d.sequences.size());
    if (n < 2) throw ValidationError("need at least 2 students to split");

    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    Rng rng(seed);
    shuffle(idx, rng);

    int n_test = static_cast<int>(std::llround(test_fraction * n));
    n_test = std::clamp(n_test, 1, n - 1);

    std::vector<bool> is_test(static_cast<std::size_t>(n), false);
    for (int i = 0; i < n_test; ++i) is_test[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] = true;

    Dataset train, test;
    train.catalog = d.catalog;
    test.catalog = d.catalog;
    for (int i = 0; i < n; ++i) {
        (is_test[static_cast<std::size_t>(i)] ? test : train).sequences.push_back(d.sequences[static_cast<std::size_t>(i)]);
    }
    return {std::move(train), std::move(test)};
}

CorpusStats compute_stats(const Dataset& train, double smoothing) {
    if (train.sequences.empty()) throw ContractError("compute_stats on empty dataset");
    const std::size_t nq = static_cast<std::size_t>(train.n_questions());

    CorpusStats s;
    s.attempts.assign(nq, 0);
    s.corrects.assign(nq, 0);
    s.difficulty.assign(nq, 0.5);
    s.initial_dist.assign(nq, 0.0);
    s.transitions.resize(nq);

    std::vector<std::map<int, std::int64_t>> trans_counts(nq);
    std::map<int, std::int64_t> length_counts;

    for (const auto& seq : train.sequences) {
        s.initial_dist[static_cast<std::size_t>(seq.steps.front().question)] += 1.0;
        ++length_counts[static_cast<int>(seq.steps.size())];
        for (std::size_t i = 0; i < seq.steps.size(); ++i) {
            const auto& st = seq.steps[i];
            ++s.attempts[static_cast<std::size_t>(st.question)];
            s.corrects[static_cast<std::size_t>(st.question)] += st.response;
            if (i + 1 < seq.steps.size()) {
                ++trans_counts[static_cast<std::size_t>(st.question)][seq.steps[i + 1].question];
            }
        }
    }

    for (std::size_t q = 0; q < nq; ++q) {
        if (s.attempts[q] > 0 || smoothing > 0.0) {
            const double denom = static_cast<double>(s.attempts[q]) + 2.0 * smoothing;
            if (denom > 0.0) {
                s.difficulty[q] = (static_cast<double>(s.corrects[q]) + smoothing) / denom;
            }
        }
        std::int64_t total = 0;
        for (const auto& [next, c] : trans_counts[q]) total += c;
        if (total > 0) {
            s.transitions[q].reserve(trans_counts[q].size());
            for (const auto& [next, c] : trans_counts[q]) {
                s.transitions[q].emplace_back(next, static_cast<double>(c) / static_cast<double>(total));
            }
        }
    }

    const double n_seq = static_cast<double>(train.sequences.size());
    for (auto& p : s.initial_dist) p /= n_seq;
    s.length_dist.reserve(length_counts.size());
    for (const auto& [len, c] : length_counts) {
        s.length_dist.emplace_back(len, static_cast<double>(c) / n_seq);
    }
    return s;
}

namespace {
template <typename Pairs>
int sample_pairs(const Pairs& pairs, Rng& rng) {
    const double u = uniform01(rng);
    double acc = 0.0;
    for (const auto& [k, p] : pairs) {
        acc += p;
        if (u < acc) return k;
    }
    return pairs.back().first;
}
}  // namespace

int CorpusStats::sample_length(Rng& rng) const { return sample_pairs(length_dist, rng); }

int CorpusStats::sample_initial(Rng& rng) const {
    const double u = uniform01(rng);
    double acc = 0.0;
    for (std::size_t q = 0; q < initial_dist.size(); ++q) {
        acc += initial_dist[q];
        if (u < acc) return static_cast<int>(q);
    }
    // numerically possible only when u ~ 1; fall back to the last nonzero entry
    for (std::size_t q = initial_dist.size(); q-- > 0;) {
        if (initial_dist[q] > 0.0) return static_cast<int>(q);
    }
    return 0;
}

int CorpusStats::sample_successor(int q, Rng& rng) const {
    const auto& succ = transitions[static_cast<std::size_t>(q)];
    if (succ.empty()) return -1;
    return sample_pairs(succ, rng);
}

}  // namespace advkt

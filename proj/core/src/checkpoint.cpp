#include "advkt/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "advkt/model.hpp"

namespace advkt {

namespace {

constexpr char kMagic[4] = {'A', 'K', 'T', 'C'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const char* what) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw ValidationError(std::string("checkpoint truncated while reading ") + what);
    return v;
}

}  // namespace

void NamedArrays::put(const std::string& name, Mat m) { entries.emplace_back(name, std::move(m)); }

const Mat& NamedArrays::get(const std::string& name) const {
    for (const auto& [n, m] : entries) {
        if (n == name) return m;
    }
    throw ValidationError("checkpoint is missing array '" + name + "'");
}

bool NamedArrays::has(const std::string& name) const {
    for (const auto& [n, m] : entries) {
        if (n == name) return true;
    }
    return false;
}

void write_container(const NamedArrays& a, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out.write(kMagic, 4);
    write_pod<std::uint32_t>(out, kVersion);
    write_pod<std::uint64_t>(out, a.entries.size());
    for (const auto& [name, m] : a.entries) {
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
        write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) write_pod<double>(out, m(r, c));
        }
    }
    if (!out) throw std::runtime_error("short write to '" + path + "'");
}

NamedArrays read_container(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw ValidationError("'" + path + "' is not a checkpoint container");
    }
    const auto version = read_pod<std::uint32_t>(in, "version");
    if (version != kVersion) {
        throw ValidationError("unsupported checkpoint version " + std::to_string(version));
    }
    const auto count = read_pod<std::uint64_t>(in, "entry count");
    NamedArrays a;
    a.entries.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto name_len = read_pod<std::uint32_t>(in, "name length");
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        if (!in) throw ValidationError("checkpoint truncated while reading a name");
        const auto rows = read_pod<std::uint64_t>(in, "rows");
        const auto cols = read_pod<std::uint64_t>(in, "cols");
        Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (Eigen::Index r = 0; r < m.rows(); ++r) {
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = read_pod<double>(in, name.c_str());
        }
        a.entries.emplace_back(std::move(name), std::move(m));
    }
    return a;
}

namespace {

Mat int_column(const std::vector<std::int64_t>& v) {
    Mat m(static_cast<Eigen::Index>(v.size()), 1);
    for (std::size_t i = 0; i < v.size(); ++i) m(static_cast<Eigen::Index>(i), 0) = static_cast<double>(v[i]);
    return m;
}

std::vector<std::int64_t> column_ints(const Mat& m) {
    std::vector<std::int64_t> v(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) v[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(m(i, 0));
    return v;
}

}  // namespace

void save_checkpoint(const ModelState& m, const std::string& path) {
    NamedArrays a;
    Mat dims(1, 6);
    dims << m.dims.n_questions, m.dims.n_concepts, m.dims.max_len, m.dims.embed_dim,
        m.dims.hidden_dim, m.dims.heads;
    a.put("meta/dims", dims);

    a.put("catalog/question_originals", int_column(m.catalog.question_originals));
    a.put("catalog/concept_originals", int_column(m.catalog.concept_originals));
    std::vector<std::int64_t> offsets{0};
    std::vector<std::int64_t> concat;
    for (const auto& q : m.catalog.questions) {
        for (int c : q.concept_ids) concat.push_back(c);
        offsets.push_back(static_cast<std::int64_t>(concat.size()));
    }
    a.put("catalog/concept_offsets", int_column(offsets));
    a.put("catalog/concept_ids", int_column(concat));

    for (int i = 0; i < m.params.size(); ++i) a.put(m.params.names[static_cast<std::size_t>(i)], m.params[i]);
    write_container(a, path);
}

ModelState load_checkpoint(const std::string& path) {
    const NamedArrays a = read_container(path);
    const Mat& dm = a.get("meta/dims");
    if (dm.rows() != 1 || dm.cols() != 6) throw ValidationError("malformed meta/dims");
    Dims dims;
    dims.n_questions = static_cast<int>(dm(0, 0));
    dims.n_concepts = static_cast<int>(dm(0, 1));
    dims.max_len = static_cast<int>(dm(0, 2));
    dims.embed_dim = static_cast<int>(dm(0, 3));
    dims.hidden_dim = static_cast<int>(dm(0, 4));
    dims.heads = static_cast<int>(dm(0, 5));

    Catalog cat;
    cat.question_originals = column_ints(a.get("catalog/question_originals"));
    cat.concept_originals = column_ints(a.get("catalog/concept_originals"));
    cat.n_concepts = static_cast<int>(cat.concept_originals.size());
    const auto offsets = column_ints(a.get("catalog/concept_offsets"));
    const auto concat = column_ints(a.get("catalog/concept_ids"));
    for (std::size_t q = 0; q + 1 < offsets.size(); ++q) {
        Question question;
        question.id = static_cast<int>(q);
        for (std::int64_t i = offsets[q]; i < offsets[q + 1]; ++i) {
            question.concept_ids.push_back(static_cast<int>(concat[static_cast<std::size_t>(i)]));
        }
        cat.questions.push_back(std::move(question));
    }
    if (static_cast<int>(cat.questions.size()) != dims.n_questions) {
        throw ValidationError("checkpoint catalog does not match meta/dims");
    }

    ModelState m = ModelState::create(dims, cat, /*seed=*/0);
    for (int i = 0; i < m.params.size(); ++i) {
        const std::string& name = m.params.names[static_cast<std::size_t>(i)];
        const Mat& stored = a.get(name);
        if (stored.rows() != m.params[i].rows() || stored.cols() != m.params[i].cols()) {
            throw ValidationError("checkpoint array '" + name + "' has unexpected shape");
        }
        m.params[i] = stored;
    }
    return m;
}

}  // namespace advkt

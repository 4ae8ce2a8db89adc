#pragma once

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "advkt/common.hpp"

// Reverse-mode automatic differentiation over Eigen matrices, sized for the
// small recurrent/attention networks in this project. A Tape is built per
// forward pass; parameters live outside the tape in a ParamStore and ops that
// touch them accumulate directly into a caller-supplied GradStore, so
// per-sequence tapes can run on worker threads against thread-local gradient
// buffers.
//
// Ops on time-major matrices (rows = positions) compute each output row with
// a fixed per-row kernel whose arithmetic order does not depend on the number
// of rows. Scoring a truncated sequence therefore reproduces the leading rows
// of the full pass bit for bit, which the discriminator's prefix contract
// relies on.

namespace advkt::ad {

using NodeId = int;
using ParamId = int;

struct ParamStore {
    std::vector<std::string> names;
    std::vector<Mat> values;

    ParamId add(std::string name, int rows, int cols);
    ParamId find(const std::string& name) const;  // -1 when absent
    Mat& operator[](ParamId id) { return values[static_cast<std::size_t>(id)]; }
    const Mat& operator[](ParamId id) const { return values[static_cast<std::size_t>(id)]; }
    int size() const { return static_cast<int>(values.size()); }
    std::size_t scalar_count() const;
};

struct GradStore {
    std::vector<Mat> grads;

    explicit GradStore(const ParamStore& ps);
    void zero();
    void add(const GradStore& other);
    Mat& operator[](ParamId id) { return grads[static_cast<std::size_t>(id)]; }
    const Mat& operator[](ParamId id) const { return grads[static_cast<std::size_t>(id)]; }
};

class Tape {
  public:
    // `grads` may be null for evaluation-only passes; `record` = false skips
    // closure construction entirely (values only).
    Tape(const ParamStore& params, GradStore* grads, bool record = true);
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // ---- leaves ----
    NodeId constant(Mat v);
    NodeId zeros(int rows, int cols);

    // ---- parameter-backed ops (column convention: W is rows x cols, x is cols x 1) ----
    NodeId matvec(ParamId W, NodeId x);     // W * x
    NodeId matvec_t(ParamId W, NodeId x);   // W^T * x
    NodeId add_param(NodeId x, ParamId b);  // x + b, same shape
    NodeId dot_param(ParamId w, NodeId x);  // w . x -> 1x1
    NodeId ewmul_param(ParamId w, NodeId x);
    NodeId embed_row(ParamId table, int row);                          // -> d x 1
    NodeId embed_rows_mean(ParamId table, std::span<const int> rows);  // -> d x 1
    NodeId embed_rows(ParamId table, std::span<const int> rows);       // -> T x d
    // Row convention for sequence streams: X is T x in, W is in x out.
    NodeId matmul_rows(NodeId X, ParamId W);
    NodeId add_row_bias(NodeId X, ParamId b);  // b is out x 1

    // ---- elementwise / structural ----
    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId scale(NodeId a, double c);
    NodeId add_const(NodeId a, double c);
    NodeId one_minus(NodeId a);  // 1 - a
    NodeId ewmul(NodeId a, NodeId b);
    NodeId sigmoid(NodeId a);
    NodeId tanh_(NodeId a);
    NodeId abs_(NodeId a);  // d|0| taken as 0
    NodeId log_clamped(NodeId a, double eps);  // log(max(a, eps))
    NodeId vconcat(std::span<const NodeId> parts);  // column vectors stacked
    NodeId hconcat(NodeId a, NodeId b);             // side by side
    NodeId row_as_col(NodeId X, int row);
    NodeId pick(NodeId x, int i);     // element of a column vector -> 1x1
    NodeId dot(NodeId a, NodeId b);   // -> 1x1
    NodeId mul_scalar_node(NodeId x, NodeId s);  // x * s, s is 1x1
    NodeId norm2(NodeId x);           // Euclidean norm -> 1x1 (grad 0 at 0)
    NodeId sum(std::span<const NodeId> scalars);  // all 1x1
    NodeId log_softmax_col(NodeId x);

    // Single-query attention over a growing history: softmax of
    // (q . key_i) * inv_scale applied to value vectors.
    NodeId attend(NodeId q, std::span<const NodeId> keys,
                  std::span<const NodeId> values, double inv_scale);

    // Multi-head causally masked scaled dot-product attention over projected
    // streams. Qp/Kp: T x (h*dk), Vp: T x (h*dv); per-head scale 1/sqrt(dk).
    NodeId causal_attention(NodeId Qp, NodeId Kp, NodeId Vp, int heads);

    // ---- access / execution ----
    const Mat& value(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    double scalar(NodeId id) const { return nodes_[static_cast<std::size_t>(id)].value(0, 0); }
    void backward(NodeId loss);
    void backward_weighted(std::span<const std::pair<NodeId, double>> seeds);
    void clear();
    bool recording() const { return record_; }
    int size() const { return static_cast<int>(nodes_.size()); }

  private:
    struct Node {
        Mat value;
        Mat grad;  // empty until touched
        std::function<void()> back;
    };

    NodeId push(Mat value);
    NodeId push(Mat value, std::function<void()> back);
    Mat& grad(NodeId id);
    const Mat& pval(ParamId id) const { return (*params_)[id]; }
    Mat& pgrad(ParamId id);

    const ParamStore* params_;
    GradStore* grads_;
    bool record_;
    std::vector<Node> nodes_;
};

// Numerically matching scalar helpers (shared with the plain forward paths).
inline double sigmoid_val(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace advkt::ad

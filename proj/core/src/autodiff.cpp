#include "advkt/autodiff.hpp"

#include <cassert>
#include <cmath>

namespace advkt::ad {

ParamId ParamStore::add(std::string name, int rows, int cols) {
    names.push_back(std::move(name));
    values.emplace_back(Mat::Zero(rows, cols));
    return static_cast<ParamId>(values.size()) - 1;
}

ParamId ParamStore::find(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return static_cast<ParamId>(i);
    }
    return -1;
}

std::size_t ParamStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& m : values) n += static_cast<std::size_t>(m.size());
    return n;
}

GradStore::GradStore(const ParamStore& ps) {
    grads.reserve(ps.values.size());
    for (const auto& v : ps.values) grads.emplace_back(Mat::Zero(v.rows(), v.cols()));
}

void GradStore::zero() {
    for (auto& g : grads) g.setZero();
}

void GradStore::add(const GradStore& other) {
    assert(grads.size() == other.grads.size());
    for (std::size_t i = 0; i < grads.size(); ++i) grads[i] += other.grads[i];
}

Tape::Tape(const ParamStore& params, GradStore* grads, bool record)
    : params_(&params), grads_(grads), record_(record) {
    nodes_.reserve(1024);
}

NodeId Tape::push(Mat value) {
    nodes_.push_back(Node{std::move(value), Mat(), nullptr});
    return static_cast<NodeId>(nodes_.size()) - 1;
}

NodeId Tape::push(Mat value, std::function<void()> back) {
    if (!record_) return push(std::move(value));
    nodes_.push_back(Node{std::move(value), Mat(), std::move(back)});
    return static_cast<NodeId>(nodes_.size()) - 1;
}

Mat& Tape::grad(NodeId id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    return n.grad;
}

Mat& Tape::pgrad(ParamId id) {
    assert(grads_ != nullptr && "parameter gradient requested without a GradStore");
    return (*grads_)[id];
}

void Tape::clear() { nodes_.clear(); }

NodeId Tape::constant(Mat v) { return push(std::move(v)); }

NodeId Tape::zeros(int rows, int cols) { return push(Mat::Zero(rows, cols)); }

NodeId Tape::matvec(ParamId W, NodeId x) {
    const Mat& w = pval(W);
    assert(w.cols() == value(x).rows() && value(x).cols() == 1);
    Mat out = w * value(x);
    NodeId id = push(std::move(out), nullptr);
    if (record_) {
        nodes_.back().back = [this, W, x, id] {
            const Mat& g = nodes_[static_cast<std::size_t>(id)].grad;
            pgrad(W).noalias() += g * value(x).transpose();
            grad(x).noalias() += pval(W).transpose() * g;
        };
    }
    return id;
}

NodeId Tape::matvec_t(ParamId W, NodeId x) {
    const Mat& w = pval(W);
    assert(w.rows() == value(x).rows() && value(x).cols() == 1);
    Mat out = w.transpose() * value(x);
    NodeId id = push(std::move(out), nullptr);
    if (record_) {
        nodes_.back().back = [this, W, x, id] {
            const Mat& g = nodes_[static_cast<std::size_t>(id)].grad;
            pgrad(W).noalias() += value(x) * g.transpose();
            grad(x).noalias() += pval(W) * g;
        };
    }
    return id;
}

NodeId Tape::add_param(NodeId x, ParamId b) {
    assert(pval(b).rows() == value(x).rows() && pval(b).cols() == value(x).cols());
    Mat out = value(x) + pval(b);
    NodeId id = push(std::move(out), nullptr);
    if (record_) {
        nodes_.back().back = [this, x, b, id] {
            const Mat& g = nodes_[static_cast<std::size_t>(id)].grad;
            pgrad(b) += g;
            grad(x) += g;
        };
    }
    return id;
}

NodeId Tape::dot_param(ParamId w, NodeId x) {
    assert(pval(w).rows() == value(x).rows() && pval(w).cols() == 1 && value(x).cols() == 1);
    Mat out(1, 1);
    out(0, 0) = pval(w).col(0).dot(value(x).col(0));
    NodeId id = push(std::move(out), nullptr);
    if (record_) {
        nodes_.back().back = [this, w, x, id] {
            const double g = nodes_[static_cast<std::size_t>(id)].grad(0, 0);
            pgrad(w) += g * value(x);
            grad(x) += g * pval(w);
        };
    }
    return id;
}

NodeId Tape::ewmul_param(ParamId w, NodeId x) {
    assert(pval(w).rows() == value(x).rows() && pval(w).cols() == value(x).cols());
    Mat out = pval(w).cwiseProduct(value(x));
    NodeId id = push(std::move(out), nullptr);
    if (record_) {
        nodes_.back().back = [this, w, x, id] {
            const Mat& g = nodes_[static_cast<std::size_t>(id)].grad;
            pgrad(w) += g.cwiseProduct(value(x));
            grad(x) += g.cwiseProduct(pval(w));
        };
    }
    return id;
}

NodeId Tape::embed_row(ParamId table, int row) {
    assert(row >= 0 && row < pval(table).rows());
    Mat out = pval(table).row(row).transpose();
    NodeId id = push(std::move(out), nullptr);
    if (record_) {
        nodes_.back().back = [this, table, row, id] {
            pgrad(table).row(row) += nodes_[static_cast<std::size_t>(id)].grad.transpose();
        };
    }
    return id;
}

NodeId Tape::embed_rows_mean(ParamId table, std::span<const int> rows) {
    assert(!rows.empty());
    const Mat& t = pval(table);
    Mat out = Mat::Zero(t.cols(), 1);
    for (int r : rows) out += t.row(r).transpose();
    out /= static_cast<double>(rows.size());
    NodeId id = push(std::move(out), nullptr);
    if (record_) {
        std::vector<int> rs(rows.begin(), rows.end());
        nodes_.back().back = [this, table, rs = std::move(rs), id] {
            const Mat g = nodes_[static_cast<std::size_t>(id)].grad.transpose() /
                          static_cast<double>(rs.size());
            for (int r : rs) pgrad(table).row(r) += g;
        };
    }
    return id;
}

NodeId Tape::embed_rows(ParamId table, std::span<const int> rows) {
    const Mat& t = pval(table);
    Mat out(static_cast<Eigen::Index>(rows.size()), t.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = t.row(rows[i]);
    NodeId id = push(std::move(out), nullptr);
    if (record_) {
        std::vector<int> rs(rows.begin(), rows.end());
        nodes_.back().back = [this, table, rs = std::move(rs), id] {
            const Mat& g = nodes_[static_cast<std::size_t>(id)].grad;
            for (std::size_t i = 0; i < rs.size(); ++i) {
                pgrad(table).row(rs[i]) += g.row(static_cast<Eigen::Index>(i));
            }
        };
    }
    return id;
}

NodeId Tape::matmul_rows(NodeId X, ParamId W) {
    const Mat& x = value(X);
    const Mat& w = pval(W);
    assert(x.cols() == w.rows());
    Mat out(x.rows(), w.cols());
    // per-row products keep each output row independent of the row count
    for (Eigen::Index t = 0; t < x.rows(); ++t) out.row(t) = x.row(t) * w;
    NodeId id = push(std::move(out), nullptr);
    if (record_) {
        nodes_.back().back = [this, X, W, id] {
            const Mat& g = nodes_[static_cast<std::size_t>(id)].grad;
            grad(X).noalias() += g * pval(W).transpose();
            pgrad(W).noalias() += value(X).transpose() * g;
        };
    }
    return id;
}

NodeId Tape::add_row_bias(NodeId X, ParamId b) {
    assert(pval(b).rows() == value(X).cols() && pval(b).cols() == 1);
    Mat out = value(X);
    out.rowwise() += pval(b).col(0).transpose();
    NodeId id = push(std::move(out), nullptr);
    if (record_) {
        nodes_.back().back = [this, X, b, id] {
            const Mat& g = nodes_[static_cast<std::size_t>(id)].grad;
            grad(X) += g;
            pgrad(b) += g.colwise().sum().transpose();
        };
    }
    return id;
}

NodeId Tape::add(NodeId a, NodeId b) {
    assert(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols());
    Mat out = value(a) + value(b);
    NodeId id = push(std::move(out), nullptr);
    if (record_) {
        nodes_.back().back = [this, a, b, id] {
            const Mat& g = nodes_[static_cast<std::size_t>(id)].grad;
            grad(a) += g;
            grad(b) += g;
        };
    }
    return id;
}

NodeId Tape::sub(NodeId a, NodeId b) {
    Mat out = value(a) - value(b);
    NodeId id = push(std::move(out), nullptr);
    if (record_) {
        nodes_.back().back = [this, a, b, id] {
            const Mat& g = nodes_[static_cast<std::size_t>(id)].grad;
            grad(a) += g;
            grad(b) -= g;
        };
    }
    return id;
}

NodeId Tape::scale(NodeId a, double c) {
    Mat out = value(a) * c;
    NodeId id = push(std::move(out), nullptr);
    if (record_) {
        nodes_.back().back = [this, a, c, id] {
            grad(a) += nodes_[static_cast<std::size_t>(id)].grad * c;
        };
    }
    return id;
}

NodeId Tape::add_const(NodeId a, double c) {
    Mat out = value(a).array() + c;
    NodeId id = push(std::move(out), nullptr);
    if (record_) {
        nodes_.back().back = [this, a, id] { grad(a) += nodes_[static_cast<std::size_t>(id)].grad; };
    }
    return id;
}

NodeId Tape::one_minus(NodeId a) {
    Mat out = (1.0 - value(a).array()).matrix();
    NodeId id = push(std::move(out), nullptr);
    if (record_) {
        nodes_.back().back = [this, a, id] { grad(a) -= nodes_[static_cast<std::size_t>(id)].grad; };
    }
    return id;
}

NodeId Tape::ewmul(NodeId a, NodeId b) {
    assert(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols());
    Mat out = value(a).cwiseProduct(value(b));
    NodeId id = push(std::move(out), nullptr);
    if (record_) {
        nodes_.back().back = [this, a, b, id] {
            const Mat& g = nodes_[static_cast<std::size_t>(id)].grad;
            grad(a) += g.cwiseProduct(value(b));
            grad(b) += g.cwiseProduct(value(a));
        };
    }
    return id;
}

NodeId Tape::sigmoid(NodeId a) {
    Mat out = value(a).unaryExpr([](double v) { return sigmoid_val(v); });
    NodeId id = push(std::move(out), nullptr);
    if (record_) {
        nodes_.back().back = [this, a, id] {
            const Mat& y = nodes_[static_cast<std::size_t>(id)].value;
            const Mat& g = nodes_[static_cast<std::size_t>(id)].grad;
            grad(a).array() += g.array() * y.array() * (1.0 - y.array());
        };
    }
    return id;
}

NodeId Tape::tanh_(NodeId a) {
    Mat out = value(a).array().tanh().matrix();
    NodeId id = push(std::move(out), nullptr);
    if (record_) {
        nodes_.back().back = [this, a, id] {
            const Mat& y = nodes_[static_cast<std::size_t>(id)].value;
            const Mat& g = nodes_[static_cast<std::size_t>(id)].grad;
            grad(a).array() += g.array() * (1.0 - y.array().square());
        };
    }
    return id;
}

NodeId Tape::abs_(NodeId a) {
    Mat out = value(a).cwiseAbs();
    NodeId id = push(std::move(out), nullptr);
    if (record_) {
        nodes_.back().back = [this, a, id] {
            const Mat& x = nodes_[static_cast<std::size_t>(a)].value;
            const Mat& g = nodes_[static_cast<std::size_t>(id)].grad;
            grad(a).array() += g.array() * x.array().sign();
        };
    }
    return id;
}

NodeId Tape::log_clamped(NodeId a, double eps) {
    Mat out = value(a).unaryExpr([eps](double v) { return std::log(v < eps ? eps : v); });
    NodeId id = push(std::move(out), nullptr);
    if (record_) {
        nodes_.back().back = [this, a, eps, id] {
            const Mat& x = nodes_[static_cast<std::size_t>(a)].value;
            const Mat& g = nodes_[static_cast<std::size_t>(id)].grad;
            grad(a).array() +=
                g.array() * (x.array() >= eps).cast<double>() / x.array().max(eps);
        };
    }
    return id;
}

NodeId Tape::vconcat(std::span<const NodeId> parts) {
    Eigen::Index rows = 0;
    for (NodeId p : parts) {
        assert(value(p).cols() == 1);
        rows += value(p).rows();
    }
    Mat out(rows, 1);
    Eigen::Index at = 0;
    for (NodeId p : parts) {
        out.block(at, 0, value(p).rows(), 1) = value(p);
        at += value(p).rows();
    }
    NodeId id = push(std::move(out), nullptr);
    if (record_) {
        std::vector<NodeId> ps(parts.begin(), parts.end());
        nodes_.back().back = [this, ps = std::move(ps), id] {
            const Mat& g = nodes_[static_cast<std::size_t>(id)].grad;
            Eigen::Index at = 0;
            for (NodeId p : ps) {
                const Eigen::Index r = value(p).rows();
                grad(p) += g.block(at, 0, r, 1);
                at += r;
            }
        };
    }
    return id;
}

NodeId Tape::hconcat(NodeId a, NodeId b) {
    assert(value(a).rows() == value(b).rows());
    Mat out(value(a).rows(), value(a).cols() + value(b).cols());
    out.leftCols(value(a).cols()) = value(a);
    out.rightCols(value(b).cols()) = value(b);
    NodeId id = push(std::move(out), nullptr);
    if (record_) {
        nodes_.back().back = [this, a, b, id] {
            const Mat& g = nodes_[static_cast<std::size_t>(id)].grad;
            grad(a) += g.leftCols(value(a).cols());
            grad(b) += g.rightCols(value(b).cols());
        };
    }
    return id;
}

NodeId Tape::row_as_col(NodeId X, int row) {
    Mat out = value(X).row(row).transpose();
    NodeId id = push(std::move(out), nullptr);
    if (record_) {
        nodes_.back().back = [this, X, row, id] {
            grad(X).row(row) += nodes_[static_cast<std::size_t>(id)].grad.transpose();
        };
    }
    return id;
}

NodeId Tape::pick(NodeId x, int i) {
    Mat out(1, 1);
    out(0, 0) = value(x)(i, 0);
    NodeId id = push(std::move(out), nullptr);
    if (record_) {
        nodes_.back().back = [this, x, i, id] {
            grad(x)(i, 0) += nodes_[static_cast<std::size_t>(id)].grad(0, 0);
        };
    }
    return id;
}

NodeId Tape::dot(NodeId a, NodeId b) {
    assert(value(a).cols() == 1 && value(b).cols() == 1 && value(a).rows() == value(b).rows());
    Mat out(1, 1);
    out(0, 0) = value(a).col(0).dot(value(b).col(0));
    NodeId id = push(std::move(out), nullptr);
    if (record_) {
        nodes_.back().back = [this, a, b, id] {
            const double g = nodes_[static_cast<std::size_t>(id)].grad(0, 0);
            grad(a) += g * value(b);
            grad(b) += g * value(a);
        };
    }
    return id;
}

NodeId Tape::mul_scalar_node(NodeId x, NodeId s) {
    assert(value(s).rows() == 1 && value(s).cols() == 1);
    Mat out = value(x) * value(s)(0, 0);
    NodeId id = push(std::move(out), nullptr);
    if (record_) {
        nodes_.back().back = [this, x, s, id] {
            const Mat& g = nodes_[static_cast<std::size_t>(id)].grad;
            grad(x) += g * value(s)(0, 0);
            grad(s)(0, 0) += g.cwiseProduct(value(x)).sum();
        };
    }
    return id;
}

NodeId Tape::norm2(NodeId x) {
    Mat out(1, 1);
    out(0, 0) = value(x).norm();
    NodeId id = push(std::move(out), nullptr);
    if (record_) {
        nodes_.back().back = [this, x, id] {
            const double n = nodes_[static_cast<std::size_t>(id)].value(0, 0);
            if (n > 0.0) {
                grad(x) += (nodes_[static_cast<std::size_t>(id)].grad(0, 0) / n) * value(x);
            }
        };
    }
    return id;
}

NodeId Tape::sum(std::span<const NodeId> scalars) {
    Mat out = Mat::Zero(1, 1);
    for (NodeId s : scalars) out(0, 0) += value(s)(0, 0);
    NodeId id = push(std::move(out), nullptr);
    if (record_) {
        std::vector<NodeId> ss(scalars.begin(), scalars.end());
        nodes_.back().back = [this, ss = std::move(ss), id] {
            const double g = nodes_[static_cast<std::size_t>(id)].grad(0, 0);
            for (NodeId s : ss) grad(s)(0, 0) += g;
        };
    }
    return id;
}

NodeId Tape::log_softmax_col(NodeId x) {
    const Mat& v = value(x);
    assert(v.cols() == 1);
    const double m = v.maxCoeff();
    double lse = 0.0;
    for (Eigen::Index i = 0; i < v.rows(); ++i) lse += std::exp(v(i, 0) - m);
    lse = m + std::log(lse);
    Mat out = v.array() - lse;
    NodeId id = push(std::move(out), nullptr);
    if (record_) {
        nodes_.back().back = [this, x, id] {
            const Mat& y = nodes_[static_cast<std::size_t>(id)].value;
            const Mat& g = nodes_[static_cast<std::size_t>(id)].grad;
            const double gs = g.sum();
            grad(x).array() += g.array() - y.array().exp() * gs;
        };
    }
    return id;
}

NodeId Tape::attend(NodeId q, std::span<const NodeId> keys,
                    std::span<const NodeId> values, double inv_scale) {
    assert(keys.size() == values.size() && !keys.empty());
    const std::size_t m = keys.size();
    const Mat& qv = value(q);

    Vec scores(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
        scores(static_cast<Eigen::Index>(i)) = qv.col(0).dot(value(keys[i]).col(0)) * inv_scale;
    }
    const double mx = scores.maxCoeff();
    Vec w = (scores.array() - mx).exp();
    w /= w.sum();

    Mat out = Mat::Zero(value(values[0]).rows(), 1);
    for (std::size_t i = 0; i < m; ++i) out += w(static_cast<Eigen::Index>(i)) * value(values[i]);

    NodeId id = push(std::move(out), nullptr);
    if (record_) {
        std::vector<NodeId> ks(keys.begin(), keys.end());
        std::vector<NodeId> vs(values.begin(), values.end());
        nodes_.back().back = [this, q, ks = std::move(ks), vs = std::move(vs), w = std::move(w),
                              inv_scale, id] {
            const Mat& g = nodes_[static_cast<std::size_t>(id)].grad;
            const std::size_t m = ks.size();
            Vec gw(static_cast<Eigen::Index>(m));
            for (std::size_t i = 0; i < m; ++i) {
                gw(static_cast<Eigen::Index>(i)) = g.col(0).dot(value(vs[i]).col(0));
                grad(vs[i]) += w(static_cast<Eigen::Index>(i)) * g;
            }
            const double dotwg = w.dot(gw);
            Vec gs = w.array() * (gw.array() - dotwg);
            Mat& gq = grad(q);
            for (std::size_t i = 0; i < m; ++i) {
                const double c = gs(static_cast<Eigen::Index>(i)) * inv_scale;
                gq += c * value(ks[i]);
                grad(ks[i]) += c * value(q);
            }
        };
    }
    return id;
}

NodeId Tape::causal_attention(NodeId Qp, NodeId Kp, NodeId Vp, int heads) {
    const Mat& q = value(Qp);
    const Mat& k = value(Kp);
    const Mat& v = value(Vp);
    const Eigen::Index T = q.rows();
    assert(k.rows() == T && v.rows() == T);
    assert(q.cols() % heads == 0 && v.cols() % heads == 0 && q.cols() == k.cols());
    const Eigen::Index dk = q.cols() / heads;
    const Eigen::Index dv = v.cols() / heads;
    const double inv_scale = 1.0 / std::sqrt(static_cast<double>(dk));

    Mat out(T, v.cols());
    std::vector<Mat> weights;  // per head, row t holds softmax over columns 0..t
    if (record_) weights.assign(static_cast<std::size_t>(heads), Mat::Zero(T, T));

    Vec srow, wrow;
    for (int a = 0; a < heads; ++a) {
        const Eigen::Index qo = a * dk;
        const Eigen::Index vo = a * dv;
        for (Eigen::Index t = 0; t < T; ++t) {
            srow.resize(t + 1);
            for (Eigen::Index j = 0; j <= t; ++j) {
                srow(j) = q.row(t).segment(qo, dk).dot(k.row(j).segment(qo, dk)) * inv_scale;
            }
            const double mx = srow.maxCoeff();
            wrow = (srow.array() - mx).exp();
            wrow /= wrow.sum();
            out.row(t).segment(vo, dv).setZero();
            for (Eigen::Index j = 0; j <= t; ++j) {
                out.row(t).segment(vo, dv) += wrow(j) * v.row(j).segment(vo, dv);
            }
            if (record_) weights[static_cast<std::size_t>(a)].row(t).head(t + 1) = wrow.transpose();
        }
    }

    NodeId id = push(std::move(out), nullptr);
    if (record_) {
        nodes_.back().back = [this, Qp, Kp, Vp, heads, dk, dv, inv_scale,
                              weights = std::move(weights), id] {
            const Mat& g = nodes_[static_cast<std::size_t>(id)].grad;
            const Mat& q = value(Qp);
            const Mat& k = value(Kp);
            const Mat& v = value(Vp);
            const Eigen::Index T = q.rows();
            Mat& gq = grad(Qp);
            Mat& gk = grad(Kp);
            Mat& gv = grad(Vp);
            for (int a = 0; a < heads; ++a) {
                const Eigen::Index qo = a * dk;
                const Eigen::Index vo = a * dv;
                const Mat& w = weights[static_cast<std::size_t>(a)];
                for (Eigen::Index t = 0; t < T; ++t) {
                    // gw_j = gOut_t . v_j ; softmax backward ; chain to q, k
                    Vec gw(t + 1);
                    for (Eigen::Index j = 0; j <= t; ++j) {
                        gw(j) = g.row(t).segment(vo, dv).dot(v.row(j).segment(vo, dv));
                        gv.row(j).segment(vo, dv) += w(t, j) * g.row(t).segment(vo, dv);
                    }
                    const double dotwg = w.row(t).head(t + 1).dot(gw);
                    for (Eigen::Index j = 0; j <= t; ++j) {
                        const double gs = w(t, j) * (gw(j) - dotwg) * inv_scale;
                        gq.row(t).segment(qo, dk) += gs * k.row(j).segment(qo, dk);
                        gk.row(j).segment(qo, dk) += gs * q.row(t).segment(qo, dk);
                    }
                }
            }
        };
    }
    return id;
}

void Tape::backward(NodeId loss) {
    const std::pair<NodeId, double> seed{loss, 1.0};
    backward_weighted(std::span(&seed, 1));
}

void Tape::backward_weighted(std::span<const std::pair<NodeId, double>> seeds) {
    assert(record_ && "backward on a non-recording tape");
    NodeId top = -1;
    for (const auto& [id, w] : seeds) {
        grad(id)(0, 0) += w;
        top = std::max(top, id);
    }
    for (NodeId i = top; i >= 0; --i) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        if (n.grad.size() != 0 && n.back) n.back();
    }
}

}  // namespace advkt::ad

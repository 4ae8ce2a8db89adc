#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "advkt/autodiff.hpp"
#include "advkt/discriminator.hpp"
#include "helpers.hpp"

using namespace advkt;
using ad::NodeId;
using ad::ParamId;

namespace {

Mat random_mat(int r, int c, Rng& rng, double bound = 0.8) {
    Mat m(r, c);
    for (int i = 0; i < r; ++i) {
        for (int j = 0; j < c; ++j) m(i, j) = uniform(rng, -bound, bound);
    }
    return m;
}

}  // namespace

TEST_CASE("scalar chain gradients match finite differences") {
    Rng rng(3);
    ad::ParamStore ps;
    const ParamId W = ps.add("W", 3, 4);
    const ParamId b = ps.add("b", 3, 1);
    const ParamId w2 = ps.add("w2", 3, 1);
    ps[W] = random_mat(3, 4, rng);
    ps[b] = random_mat(3, 1, rng);
    ps[w2] = random_mat(3, 1, rng);
    const Mat x = random_mat(4, 1, rng);

    auto loss = [&] {
        ad::Tape t(ps, nullptr, false);
        const NodeId xs = t.constant(x);
        const NodeId h = t.tanh_(t.add_param(t.matvec(W, xs), b));
        const NodeId s = t.sigmoid(t.dot_param(w2, h));
        const NodeId l = t.ewmul(s, t.log_clamped(s, 1e-7));
        return t.scalar(l);
    };

    ad::GradStore grads(ps);
    {
        ad::Tape t(ps, &grads, true);
        const NodeId xs = t.constant(x);
        const NodeId h = t.tanh_(t.add_param(t.matvec(W, xs), b));
        const NodeId s = t.sigmoid(t.dot_param(w2, h));
        const NodeId l = t.ewmul(s, t.log_clamped(s, 1e-7));
        t.backward(l);
    }
    const auto rep = test::finite_diff_check(ps, grads, loss);
    CHECK_MESSAGE(rep.max_rel_err < 1e-6, rep.worst);
}

TEST_CASE("structural ops and norms match finite differences") {
    Rng rng(11);
    ad::ParamStore ps;
    const ParamId W = ps.add("W", 4, 4);
    const ParamId v = ps.add("v", 4, 1);
    ps[W] = random_mat(4, 4, rng);
    ps[v] = random_mat(4, 1, rng);
    const Mat x = random_mat(4, 1, rng);

    auto build = [&](ad::Tape& t) {
        const NodeId xs = t.constant(x);
        const NodeId a = t.matvec_t(W, xs);
        const NodeId b = t.ewmul_param(v, t.one_minus(t.ewmul(a, a)));
        const NodeId parts[] = {a, b};
        const NodeId cat = t.vconcat(parts);
        const NodeId n = t.norm2(cat);
        const NodeId d = t.add_const(n, -1.0);
        const NodeId sq = t.ewmul(d, d);
        const NodeId ab = t.abs_(t.add_const(t.sigmoid(t.dot(a, b)), -0.5));
        const NodeId both[] = {sq, ab};
        return t.scale(t.sum(both), 1.5);
    };
    auto loss = [&] {
        ad::Tape t(ps, nullptr, false);
        return t.scalar(build(t));
    };
    ad::GradStore grads(ps);
    {
        ad::Tape t(ps, &grads, true);
        t.backward(build(t));
    }
    const auto rep = test::finite_diff_check(ps, grads, loss);
    CHECK_MESSAGE(rep.max_rel_err < 1e-6, rep.worst);
}

TEST_CASE("log_softmax and pick gradients match finite differences") {
    Rng rng(17);
    ad::ParamStore ps;
    const ParamId W = ps.add("W", 6, 3);
    ps[W] = random_mat(6, 3, rng);
    const Mat x = random_mat(3, 1, rng);

    auto build = [&](ad::Tape& t) {
        const NodeId lp = t.log_softmax_col(t.matvec(W, t.constant(x)));
        const NodeId picks[] = {t.pick(lp, 2), t.pick(lp, 4)};
        return t.scale(t.sum(picks), -1.0);
    };
    auto loss = [&] {
        ad::Tape t(ps, nullptr, false);
        return t.scalar(build(t));
    };
    ad::GradStore grads(ps);
    {
        ad::Tape t(ps, &grads, true);
        t.backward(build(t));
    }
    const auto rep = test::finite_diff_check(ps, grads, loss);
    CHECK_MESSAGE(rep.max_rel_err < 1e-6, rep.worst);

    // softmax of the log-softmax output sums to one
    ad::Tape t(ps, nullptr, false);
    const NodeId lp = t.log_softmax_col(t.matvec(W, t.constant(x)));
    CHECK(t.value(lp).array().exp().sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("attend matches a hand-rolled softmax attention and its gradients") {
    Rng rng(23);
    ad::ParamStore ps;
    const ParamId q = ps.add("q", 4, 1);
    const ParamId k0 = ps.add("k0", 4, 1);
    const ParamId k1 = ps.add("k1", 4, 1);
    const ParamId v0 = ps.add("v0", 3, 1);
    const ParamId v1 = ps.add("v1", 3, 1);
    for (ParamId id = 0; id < ps.size(); ++id) ps[id] = random_mat(static_cast<int>(ps[id].rows()), 1, rng);
    const double inv_scale = 0.5;

    auto build = [&](ad::Tape& t) {
        const NodeId qn = t.add_param(t.zeros(4, 1), q);
        const NodeId ks[] = {t.add_param(t.zeros(4, 1), k0), t.add_param(t.zeros(4, 1), k1)};
        const NodeId vs[] = {t.add_param(t.zeros(3, 1), v0), t.add_param(t.zeros(3, 1), v1)};
        const NodeId a = t.attend(qn, ks, vs, inv_scale);
        return t.norm2(a);
    };
    double expected;
    {
        const double s0 = ps[q].col(0).dot(ps[k0].col(0)) * inv_scale;
        const double s1 = ps[q].col(0).dot(ps[k1].col(0)) * inv_scale;
        const double m = std::max(s0, s1);
        const double e0 = std::exp(s0 - m), e1 = std::exp(s1 - m);
        const Vec a = (e0 * ps[v0].col(0) + e1 * ps[v1].col(0)) / (e0 + e1);
        expected = a.norm();
    }
    auto loss = [&] {
        ad::Tape t(ps, nullptr, false);
        return t.scalar(build(t));
    };
    CHECK(loss() == doctest::Approx(expected).epsilon(1e-12));

    ad::GradStore grads(ps);
    {
        ad::Tape t(ps, &grads, true);
        t.backward(build(t));
    }
    const auto rep = test::finite_diff_check(ps, grads, loss);
    CHECK_MESSAGE(rep.max_rel_err < 1e-6, rep.worst);
}

TEST_CASE("causal_attention forward matches the plain multi_head reference") {
    Rng rng(31);
    const int T = 7, w = 8, heads = 2;
    ad::ParamStore ps;
    const ParamId Wq = ps.add("Wq", w, w);
    const ParamId Wk = ps.add("Wk", w, w);
    const ParamId Wv = ps.add("Wv", 2 * w, w);
    const ParamId Wo = ps.add("Wo", w, w);
    ps[Wq] = random_mat(w, w, rng);
    ps[Wk] = random_mat(w, w, rng);
    ps[Wv] = random_mat(2 * w, w, rng);
    ps[Wo] = random_mat(w, w, rng);
    const Mat Q = random_mat(T, w, rng);
    const Mat K = random_mat(T, w, rng);
    const Mat V = random_mat(T, 2 * w, rng);

    ad::Tape t(ps, nullptr, false);
    const NodeId out = t.matmul_rows(
        t.causal_attention(t.matmul_rows(t.constant(Q), Wq), t.matmul_rows(t.constant(K), Wk),
                           t.matmul_rows(t.constant(V), Wv), heads),
        Wo);
    const Mat ref = multi_head(Q, K, V, ps[Wq], ps[Wk], ps[Wv], ps[Wo], heads, /*causal=*/true);
    CHECK((t.value(out) - ref).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("causal_attention gradients match finite differences") {
    Rng rng(37);
    const int T = 5, w = 4, heads = 2;
    ad::ParamStore ps;
    const ParamId X = ps.add("X", T, w);
    const ParamId Wq = ps.add("Wq", w, w);
    const ParamId Wk = ps.add("Wk", w, w);
    const ParamId Wv = ps.add("Wv", w, w);
    const ParamId Wo = ps.add("Wo", w, w);
    for (ParamId id = 0; id < ps.size(); ++id) {
        ps[id] = random_mat(static_cast<int>(ps[id].rows()), static_cast<int>(ps[id].cols()), rng);
    }

    auto build = [&](ad::Tape& t) {
        const NodeId stream = t.matmul_rows(t.constant(Mat::Identity(T, T)), X);
        const NodeId att = t.causal_attention(t.matmul_rows(stream, Wq), t.matmul_rows(stream, Wk),
                                              t.matmul_rows(stream, Wv), heads);
        const NodeId o = t.matmul_rows(att, Wo);
        return t.norm2(t.row_as_col(o, T - 1));
    };
    auto loss = [&] {
        ad::Tape t(ps, nullptr, false);
        return t.scalar(build(t));
    };
    ad::GradStore grads(ps);
    {
        ad::Tape t(ps, &grads, true);
        t.backward(build(t));
    }
    const auto rep = test::finite_diff_check(ps, grads, loss, 1e-5);
    CHECK_MESSAGE(rep.max_rel_err < 1e-4, rep.worst);
}

TEST_CASE("backward_weighted accumulates multiple seeds") {
    ad::ParamStore ps;
    const ParamId a = ps.add("a", 1, 1);
    ps[a](0, 0) = 0.3;
    ad::GradStore grads(ps);
    ad::Tape t(ps, &grads, true);
    const NodeId x = t.add_param(t.zeros(1, 1), a);
    const NodeId s1 = t.scale(x, 2.0);
    const NodeId s2 = t.ewmul(x, x);
    const std::pair<NodeId, double> seeds[] = {{s1, 1.0}, {s2, 3.0}};
    t.backward_weighted(seeds);
    // d/da [2a + 3a^2] = 2 + 6a
    CHECK(grads[a](0, 0) == doctest::Approx(2.0 + 6.0 * 0.3).epsilon(1e-12));
}

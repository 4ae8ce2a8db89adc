#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "advkt/discriminator.hpp"
#include "helpers.hpp"

using namespace advkt;

TEST_CASE("one head with identity projections collapses to plain attention") {
    const int T = 4, w = 3;
    Rng rng(1);
    Mat Q(T, w), K(T, w), V(T, w);
    for (int i = 0; i < T; ++i) {
        for (int j = 0; j < w; ++j) {
            Q(i, j) = uniform(rng, -1, 1);
            K(i, j) = uniform(rng, -1, 1);
            V(i, j) = uniform(rng, -1, 1);
        }
    }
    const Mat I = Mat::Identity(w, w);
    const Mat out = multi_head(Q, K, V, I, I, I, I, 1, /*causal=*/true);

    // hand-rolled masked scaled dot-product attention
    const double inv_scale = 1.0 / std::sqrt(static_cast<double>(w));
    for (int t = 0; t < T; ++t) {
        Vec scores(t + 1);
        for (int j = 0; j <= t; ++j) scores(j) = Q.row(t).dot(K.row(j)) * inv_scale;
        Vec wts = (scores.array() - scores.maxCoeff()).exp();
        wts /= wts.sum();
        Vec expect = Vec::Zero(w);
        for (int j = 0; j <= t; ++j) expect += wts(j) * V.row(j).transpose();
        CHECK((out.row(t).transpose() - expect).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(wts.sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("causal masking: position 1 sees only itself") {
    const int T = 5, w = 4;
    Rng rng(2);
    Mat X(T, w);
    for (int i = 0; i < T; ++i) {
        for (int j = 0; j < w; ++j) X(i, j) = uniform(rng, -1, 1);
    }
    const Mat I = Mat::Identity(w, w);
    const Mat out1 = multi_head(X, X, X, I, I, I, I, 2, true);
    Mat Y = X;
    Y.bottomRows(T - 1).setConstant(3.0);  // perturb the future
    const Mat out2 = multi_head(Y, Y, Y, I, I, I, I, 2, true);
    CHECK((out1.row(0) - out2.row(0)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((out1.row(1) - out2.row(1)).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("prefix scores: shape, range, and the T=1 base case") {
    const ModelState m = test::tiny_model(3);
    Rng rng(3);
    const auto qs = test::random_questions(6, m.dims.n_questions, rng);
    const auto rs = test::random_responses(6, rng);
    const PrefixScores ps = score_prefixes(m, qs, rs);
    REQUIRE(ps.scores.size() == qs.size());
    CHECK(ps.d_o.rows() == 6);
    CHECK(ps.d_o.cols() == m.dims.disc_width());
    for (double s : ps.scores) {
        CHECK(s > 0.0);
        CHECK(s < 1.0);
    }
    const PrefixScores one = score_prefixes(m, std::vector<int>{qs[0]}, std::vector<int>{rs[0]});
    CHECK(one.scores.size() == 1);
    CHECK(one.scores[0] == ps.scores[0]);  // causal pass reproduces the prefix
}

TEST_CASE("prefix consistency is bit-identical for truncations") {
    const ModelState m = test::tiny_model(5);
    Rng rng(7);
    for (int trial = 0; trial < 25; ++trial) {
        const int T = 2 + below_int(rng, 7);  // max_len is 8 in the tiny config
        const auto qs = test::random_questions(T, m.dims.n_questions + 1, rng);  // mask id included
        const auto rs = test::random_responses(T, rng);
        const PrefixScores full = score_prefixes(m, qs, rs);
        const int Tp = 1 + below_int(rng, T);
        const PrefixScores part = score_prefixes(m, std::span(qs).first(static_cast<std::size_t>(Tp)),
                                                 std::span(rs).first(static_cast<std::size_t>(Tp)));
        for (int t = 0; t < Tp; ++t) {
            CHECK(part.scores[static_cast<std::size_t>(t)] == full.scores[static_cast<std::size_t>(t)]);
        }
        CHECK((part.d_o - full.d_o.topRows(Tp)).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("changing the last step leaves earlier scores untouched") {
    const ModelState m = test::tiny_model(6);
    Rng rng(11);
    auto qs = test::random_questions(7, m.dims.n_questions, rng);
    auto rs = test::random_responses(7, rng);
    const PrefixScores a = score_prefixes(m, qs, rs);
    qs.back() = (qs.back() + 1) % m.dims.n_questions;
    rs.back() = 1 - rs.back();
    const PrefixScores b = score_prefixes(m, qs, rs);
    for (std::size_t t = 0; t + 1 < qs.size(); ++t) CHECK(a.scores[t] == b.scores[t]);
    CHECK(a.scores.back() != b.scores.back());
}

TEST_CASE("input contracts") {
    const ModelState m = test::tiny_model(8);
    CHECK_THROWS_AS(score_prefixes(m, std::vector<int>{0, 1}, std::vector<int>{1}), ContractError);
    CHECK_THROWS_AS(score_prefixes(m, std::vector<int>{}, std::vector<int>{}), ContractError);
    CHECK_THROWS_AS(score_prefixes(m, std::vector<int>{0}, std::vector<int>{2}), ContractError);
}

TEST_CASE("disc_pass_tape matches the evaluation path and its gradient checks out") {
    ModelState m = test::tiny_model(9);
    Rng rng(13);
    const auto qs = test::random_questions(5, m.dims.n_questions, rng);
    const auto rs = test::random_responses(5, rng);

    const PrefixScores ps = score_prefixes(m, qs, rs);
    ad::GradStore grads(m.params);
    ad::Tape tape(m.params, &grads, true);
    const DiscPassNodes pass = disc_pass_tape(tape, m, qs, rs);
    CHECK(pass.score_value == doctest::Approx(ps.scores.back()).epsilon(1e-12));

    // gradient of score + gp through every parameter
    const std::pair<ad::NodeId, double> seeds[] = {{pass.score, 1.0}, {pass.gp_term, 1.0}};
    tape.backward_weighted(seeds);
    auto loss = [&] {
        ad::Tape t(m.params, nullptr, false);
        const DiscPassNodes p = disc_pass_tape(t, m, qs, rs);
        return p.score_value + p.gp_value;
    };
    const auto rep = test::finite_diff_check(m.params, grads, loss);
    CHECK_MESSAGE(rep.max_rel_err < 1e-3, rep.worst);
}

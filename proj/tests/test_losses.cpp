#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "advkt/losses.hpp"
#include "helpers.hpp"

using namespace advkt;

TEST_CASE("bce examples") {
    // predictions equal to (clamped) labels give ~0 loss
    const std::vector<double> perfect{1.0 - 1e-7, 1e-7};
    const std::vector<int> labels{1, 0};
    CHECK(bce_loss(perfect, labels) == doctest::Approx(0.0).epsilon(1e-6));

    // 0.5 everywhere over T steps: T log 2
    const std::vector<double> half(5, 0.5);
    const std::vector<int> ones(5, 1);
    CHECK(bce_loss(half, ones) == doctest::Approx(5.0 * std::log(2.0)).epsilon(1e-12));

    // direct evaluation
    const std::vector<double> p{0.8, 0.3};
    const std::vector<int> l{1, 0};
    CHECK(bce_loss(p, l) == doctest::Approx(-(std::log(0.8) + std::log(0.7))).epsilon(1e-12));
    CHECK(bce_loss(p, l) == doctest::Approx(0.57981849525294).epsilon(1e-9));

    // out-of-range predictions are clamped, not fatal
    const std::vector<double> extreme{0.0, 1.0};
    CHECK(std::isfinite(bce_loss(extreme, l)));
}

TEST_CASE("reward recursion") {
    // gamma 0 collapses to the pointwise form
    const std::vector<double> s{0.3, 0.6, 0.9};
    const auto r0 = rewards(s, 0.0);
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(r0[i] == doctest::Approx(-std::log(1.0 - s[i])).epsilon(1e-12));
    }

    // hand recursion: scores [0.5, 0.5], gamma 1 -> R2 = log 2, R1 = 2 log 2
    const std::vector<double> s2{0.5, 0.5};
    const auto r1 = rewards(s2, 1.0);
    CHECK(r1[1] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(r1[0] == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));

    // zero scores give zero rewards
    const std::vector<double> zero(4, 0.0);
    for (double v : rewards(zero, 0.9)) CHECK(v == 0.0);

    // recursion residual on random inputs
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> sc(10);
        for (auto& v : sc) v = uniform01(rng) * 0.999;
        const double gamma = uniform01(rng);
        const auto rw = rewards(sc, gamma);
        for (std::size_t t = 0; t < sc.size(); ++t) {
            const double next = t + 1 < sc.size() ? rw[t + 1] : 0.0;
            CHECK(std::abs(rw[t] - gamma * next + std::log(1.0 - sc[t])) < 1e-12);
        }
    }

    // score of exactly 1 is clamped, not infinite
    const std::vector<double> one{1.0};
    CHECK(std::isfinite(rewards(one, 0.5)[0]));
}

TEST_CASE("adv loss examples") {
    const std::vector<double> conf0(6, 0.5);
    const std::vector<double> rw(6, 3.0);
    CHECK(adv_loss(conf0, rw, AdvSign::as_written) == 0.0);
    CHECK(adv_loss(conf0, rw, AdvSign::reinforce) == 0.0);

    const std::vector<double> p{0.9};
    const std::vector<double> r{2.0};
    CHECK(adv_loss(p, r, AdvSign::as_written) == doctest::Approx(0.8).epsilon(1e-12));

    Rng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> pp(7), rr(7);
        for (auto& v : pp) v = uniform01(rng);
        for (auto& v : rr) v = uniform(rng, 0, 5);
        CHECK(adv_loss(pp, rr, AdvSign::reinforce) ==
              doctest::Approx(-adv_loss(pp, rr, AdvSign::as_written)).epsilon(1e-12));
    }
}

TEST_CASE("ar loss examples") {
    // point mass on every target
    std::vector<Vec> dists;
    const std::vector<int> qs{2, 0, 1};
    for (int t = 0; t < 3; ++t) {
        Vec d = Vec::Zero(3);
        if (t < 2) d(qs[static_cast<std::size_t>(t + 1)]) = 1.0;
        else d(0) = 1.0;
        dists.push_back(d);
    }
    CHECK(ar_loss(dists, qs) == doctest::Approx(0.0).epsilon(1e-9));

    // uniform over 10 questions, 3 targets -> 3 log 10
    std::vector<Vec> uni(4, Vec::Constant(10, 0.1));
    const std::vector<int> qs4{0, 3, 7, 9};
    CHECK(ar_loss(uni, qs4) == doctest::Approx(3.0 * std::log(10.0)).epsilon(1e-12));

    // single step has no targets
    std::vector<Vec> one(1, Vec::Constant(10, 0.1));
    const std::vector<int> q1{5};
    CHECK(ar_loss(one, q1) == 0.0);
}

TEST_CASE("generator loss combination") {
    CHECK(generator_loss(1.7, 0.4, 0.9, 0.0, 0.0) == doctest::Approx(1.7));
    CHECK(generator_loss(1.0, 0.002, 0.5, 1000.0, 1.0) == doctest::Approx(3.5).epsilon(1e-12));
    CHECK(generator_loss(1.0, 0.002, 123.0, 1000.0, 0.0) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("dist loss identity and examples") {
    const std::vector<double> pos1(4, 1.0), neg0(3, 0.0);
    CHECK(dist_loss(pos1, neg0) == doctest::Approx(-1.0).epsilon(1e-12));

    const std::vector<double> same{0.2, 0.7, 0.5};
    CHECK(dist_loss(same, same) == doctest::Approx(0.0).epsilon(1e-12));

    const std::vector<double> p{0.8, 0.6}, n{0.3};
    CHECK(dist_loss(p, n) == doctest::Approx(-0.4).epsilon(1e-12));

    CHECK_THROWS_AS(dist_loss({}, n), ContractError);

    // identity vs the double-sum form on random sets
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> P(1 + below_int(rng, 8)), N(1 + below_int(rng, 8));
        for (auto& v : P) v = uniform01(rng);
        for (auto& v : N) v = uniform01(rng);
        double dsum = 0.0;
        for (double a : P) {
            for (double b : N) dsum += a - b;
        }
        dsum *= -1.0 / (static_cast<double>(P.size()) * static_cast<double>(N.size()));
        CHECK(std::abs(dist_loss(P, N) - dsum) < 1e-9);
    }
}

TEST_CASE("gradient penalty closed-form anchors") {
    ModelState m = test::tiny_model(4);
    const int w = m.dims.disc_width();

    // craft the head so the score gradient has exactly unit norm at u = 0:
    // W1 = I, b1 = 0, b2 = 0, w2 = (4, 0, ...) => grad = s'(0) * 4 * e1, s'(0) = 1/4
    m.params[m.disc.pW1] = Mat::Identity(w, w);
    m.params[m.disc.pb1].setZero();
    m.params[m.disc.pb2].setZero();
    m.params[m.disc.pw2].setZero();
    m.params[m.disc.pw2](0, 0) = 4.0;
    Mat d_o = Mat::Zero(3, w);
    CHECK(gradient_penalty(m, d_o, 10.0) == doctest::Approx(0.0).epsilon(1e-12));

    // zero head weights give zero gradient: penalty alpha
    m.params[m.disc.pw2].setZero();
    CHECK(gradient_penalty(m, d_o, 10.0) == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(gradient_penalty(m, d_o, 20.0) == doctest::Approx(20.0).epsilon(1e-12));

    // doubling alpha doubles the penalty in general
    ModelState m2 = test::tiny_model(5);
    Rng rng(6);
    Mat d2(2, w);
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < w; ++j) d2(i, j) = uniform(rng, -1, 1);
    }
    CHECK(gradient_penalty(m2, d2, 20.0) ==
          doctest::Approx(2.0 * gradient_penalty(m2, d2, 10.0)).epsilon(1e-12));
}

TEST_CASE("discriminator loss signs") {
    // as-written bookkeeping: perfect separation, no penalty -> 1
    CHECK(discriminator_loss(-1.0, 0.0, DiscSign::as_written) == doctest::Approx(1.0));
    // gp-only ablation with identical score sets
    CHECK(discriminator_loss(0.0, 0.7, DiscSign::separating) == doctest::Approx(0.7));
    CHECK(discriminator_loss(0.0, 0.7, DiscSign::as_written) == doctest::Approx(0.7));
    // separating direction: loss decreases as mean(P) - mean(N) grows
    const double worse = discriminator_loss(dist_loss({{0.6}}, {{0.5}}), 0.3, DiscSign::separating);
    const double better = discriminator_loss(dist_loss({{0.9}}, {{0.1}}), 0.3, DiscSign::separating);
    CHECK(better < worse);
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "advkt/checkpoint.hpp"
#include "helpers.hpp"

using namespace advkt;

TEST_CASE("checkpoint round-trips the full model state") {
    const ModelState m = test::tiny_model(55);
    const std::string path = "ckpt_roundtrip.bin";
    save_checkpoint(m, path);
    const ModelState back = load_checkpoint(path);
    std::remove(path.c_str());

    CHECK(back.dims.n_questions == m.dims.n_questions);
    CHECK(back.dims.embed_dim == m.dims.embed_dim);
    CHECK(back.dims.heads == m.dims.heads);
    REQUIRE(back.params.size() == m.params.size());
    for (int i = 0; i < m.params.size(); ++i) {
        CHECK(back.params.names[static_cast<std::size_t>(i)] == m.params.names[static_cast<std::size_t>(i)]);
        CHECK(back.params[i] == m.params[i]);
    }
    REQUIRE(back.catalog.questions.size() == m.catalog.questions.size());
    for (std::size_t q = 0; q < m.catalog.questions.size(); ++q) {
        CHECK(back.catalog.questions[q].concept_ids == m.catalog.questions[q].concept_ids);
    }
    CHECK(back.catalog.question_originals == m.catalog.question_originals);
}

TEST_CASE("container rejects foreign files") {
    const std::string path = "not_a_ckpt.bin";
    {
        std::ofstream out(path, std::ios::binary);
        out << "PNG\x89 nothing to see";
    }
    CHECK_THROWS_AS(read_container(path), ValidationError);
    std::remove(path.c_str());
    CHECK_THROWS_AS(read_container("does_not_exist.bin"), std::runtime_error);
}

TEST_CASE("named arrays store and fetch by name") {
    NamedArrays a;
    a.put("x", Mat::Identity(2, 2));
    CHECK(a.has("x"));
    CHECK(!a.has("y"));
    CHECK(a.get("x")(1, 1) == 1.0);
    CHECK_THROWS_AS(a.get("y"), ValidationError);
}

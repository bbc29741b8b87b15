#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstring>
#include <fstream>

#include "carl/checkpoint.hpp"
#include "carl/model.hpp"
#include "support.hpp"
#include "toy_model.hpp"

TEST_CASE("checkpoint file round-trip is exact") {
    ts::TmpDir tmp;
    carl::Checkpoint ck;
    ck.rng_seed = 0xdeadbeef12345678ULL;
    ck.step = 4242;
    ck.tensors.push_back({"a.weights", {2, 3}, {1.5, -2.25, 1e-300, 0.0, -0.0, 3.141592653589793}});
    ck.tensors.push_back({"b.bias", {4}, {0.1, 0.2, 0.3, 0.4}});
    auto path = tmp.file("model.ckpt");
    carl::save_checkpoint(path, ck);
    auto back = carl::load_checkpoint(path);
    CHECK(back.rng_seed == ck.rng_seed);
    CHECK(back.step == ck.step);
    REQUIRE(back.tensors.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(back.tensors[i].name == ck.tensors[i].name);
        CHECK(back.tensors[i].shape == ck.tensors[i].shape);
        REQUIRE(back.tensors[i].data.size() == ck.tensors[i].data.size());
        CHECK(std::memcmp(back.tensors[i].data.data(), ck.tensors[i].data.data(),
                          ck.tensors[i].data.size() * sizeof(double)) == 0);
    }
    SECTION("find locates tensors by name") {
        CHECK(back.find("b.bias") != nullptr);
        CHECK(back.find("missing") == nullptr);
    }
}

TEST_CASE("non-checkpoint files are rejected") {
    ts::TmpDir tmp;
    auto path = tmp.file("junk.ckpt");
    std::ofstream(path) << "definitely not a checkpoint";
    CHECK_THROWS_AS(carl::load_checkpoint(path), carl::DataError);
    CHECK_THROWS_AS(carl::load_checkpoint(tmp.file("absent.ckpt")), carl::DataError);
}

TEST_CASE("model checkpoint round-trip preserves predictions bit for bit") {
    auto cfg = ts::toy_config();
    carl::CarlModel m(cfg);
    m.init(17);
    carl::Rng rng(9);
    auto ud = ts::toy_doc(cfg, rng, 5);
    auto id = ts::toy_doc(cfg, rng, 7);
    carl::PairExample ex{2, 1, &ud, &id, 4.0};
    double y = m.predict(ex);

    ts::TmpDir tmp;
    carl::save_checkpoint(tmp.file("m.ckpt"), m.to_checkpoint(17, 123));
    auto ck = carl::load_checkpoint(tmp.file("m.ckpt"));
    CHECK(ck.rng_seed == 17);
    CHECK(ck.step == 123);

    carl::CarlModel m2(cfg);
    m2.load(ck);
    double y2 = m2.predict(ex);
    CHECK(std::memcmp(&y, &y2, sizeof(double)) == 0);
}

TEST_CASE("checkpoint/model mismatches are data errors") {
    auto cfg = ts::toy_config();
    carl::CarlModel m(cfg);
    m.init(1);
    auto ck = m.to_checkpoint(1, 0);

    SECTION("missing tensor") {
        auto broken = ck;
        broken.tensors.pop_back();
        carl::CarlModel m2(cfg);
        CHECK_THROWS_AS(m2.load(broken), carl::DataError);
    }
    SECTION("renamed tensor") {
        auto broken = ck;
        broken.tensors[0].name = "something.else";
        carl::CarlModel m2(cfg);
        CHECK_THROWS_AS(m2.load(broken), carl::DataError);
    }
    SECTION("wrong shape") {
        auto other = ts::toy_config();
        other.latent = 5;  // different widths everywhere downstream
        carl::CarlModel m2(other);
        try {
            m2.load(ck);
            FAIL("expected DataError");
        } catch (const carl::DataError& e) {
            CHECK(std::string(e.what()).find("shape") != std::string::npos);
        }
    }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "helpers.hpp"
#include "sr/backends/registry.hpp"
#include "sr/distill/csds.hpp"
#include "sr/core/errors.hpp"

using namespace sr;
using namespace sr::backends;

TEST_CASE("toy extractor: zero image gives zero features at both taps") {
    auto e = make_toy_extractor(4);
    nn::Tensor zero(3, 8, 8, 0.0);
    for (const auto& tap : e->taps()) {
        auto f = e->extract_value(zero, tap);
        for (size_t i = 0; i < f.size(); ++i) CHECK(f[i] == 0.0);
    }
}

TEST_CASE("toy extractor: identical weights for identical seeds") {
    auto a = make_toy_extractor(8);
    auto b = make_toy_extractor(8);
    auto c = make_toy_extractor(9);
    CHECK(a->params_fingerprint() == b->params_fingerprint());
    CHECK(a->params_fingerprint() != c->params_fingerprint());
}

TEST_CASE("toy extractor: delta impulse response reproduces the stage-1 kernel") {
    auto eptr = make_toy_extractor(12);
    auto& e = dynamic_cast<ToyExtractor&>(*eptr);
    nn::Tensor delta(3, 9, 9, 0.0);
    delta.at(1, 4, 4) = 1.0; // impulse in channel 1
    auto f = e.extract_value(delta, "t1");
    const auto& k = e.stage1_kernel(); // (out=4, in=3, 3*3)
    // cross-correlation: response at (4+dy, 4+dx) picks kernel entry (1-dy, 1-dx)
    for (int oc = 0; oc < 4; ++oc)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx)
                CHECK(f.at(oc, 4 + dy, 4 + dx) ==
                      doctest::Approx(k.at(oc, 1, (1 - dy) * 3 + (1 - dx)))
                          .epsilon(1e-12));
}

TEST_CASE("oracle denoiser reproduces the side-channel noise exactly") {
    auto sched = distill::NoiseSchedule::build({});
    auto d = make_toy_denoiser(ToyDenoiserKind::Oracle, sched);
    auto oracle = std::dynamic_pointer_cast<ToyOracleDenoiser>(d);
    REQUIRE(oracle);
    auto eps = testutil::random_tensor(3, 4, 4, 1, -2, 2);
    oracle->set_expected_noise(eps);
    auto r = distill::loss_csds(*d, sched, 10, testutil::random_tensor(3, 4, 4, 2),
                                nn::Tensor(1, 4, 4, 0.0), eps);
    CHECK(r.value == 0.0);

    // unset shape is a backend error
    auto other = testutil::random_tensor(3, 5, 5, 3);
    CHECK_THROWS_AS((void)d->predict_noise(other, nn::Tensor(1, 5, 5, 0.0), 10),
                    core::BackendError);
}

TEST_CASE("identity denoiser value at y=0 with unit noise") {
    auto sched = distill::NoiseSchedule::build({});
    auto d = make_toy_denoiser(ToyDenoiserKind::Identity, sched);
    const int t = 16;
    const double ab = sched.alpha_bar(t);
    nn::Tensor zeros(3, 4, 4, 0.0), ones(3, 4, 4, 1.0);
    auto r = distill::loss_csds(*d, sched, t, zeros, nn::Tensor(1, 4, 4, 0.0), ones);
    CHECK(r.value == doctest::Approx(std::pow(std::sqrt(1 - ab) - 1, 2)).epsilon(1e-12));
}

TEST_CASE("structure denoiser gradient points toward the broadcast condition") {
    auto sched = distill::NoiseSchedule::build({});
    auto d = make_toy_denoiser(ToyDenoiserKind::Structure, sched);
    const int t = 28;
    nn::Tensor cond(1, 8, 8, 0.0);
    for (int y = 0; y < 8; ++y)
        for (int x = 4; x < 8; ++x) cond.at(0, y, x) = 1.0;
    auto y_hat = testutil::random_tensor(3, 8, 8, 5);
    auto eps = testutil::random_tensor(3, 8, 8, 6, -1, 1);
    auto r = distill::loss_csds(*d, sched, t, y_hat, cond, eps);
    const double coef = sched.alpha_bar(t) / std::sqrt(1 - sched.alpha_bar(t));
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x)
                REQUIRE(r.grad.at(c, y, x) ==
                        doctest::Approx(coef * (y_hat.at(c, y, x) - cond.at(0, y, x)))
                            .epsilon(1e-6));
}

TEST_CASE("unknown toy denoiser kind is a configuration error") {
    CHECK_THROWS_AS((void)toy_denoiser_kind_from("nope"), core::ConfigError);
}

TEST_CASE("empty config registry has only toy entries, all available") {
    BackendRegistry reg = register_real_backends({});
    CHECK(reg.names(Role::Extractor) == std::vector<std::string>{"toy"});
    auto denoisers = reg.names(Role::Denoiser);
    CHECK(denoisers.size() == 3);
    for (const auto& n : denoisers) CHECK(reg.probe(Role::Denoiser, n).available);
    CHECK(reg.probe(Role::Guidance, "toy").available);
    CHECK(reg.probe(Role::Guidance, "canny").available);
}

TEST_CASE("declared real backends are listed and probed without loading") {
    testutil::TempDir tmp("registry");
    const auto artifact = tmp.path() / "lineart.bin";
    std::ofstream(artifact) << "weights";

    RealBackendConfig cfg;
    cfg.entries.push_back({"lineart", Role::Denoiser, artifact, "[-1,1]", true, "lineart"});
    cfg.entries.push_back(
        {"depth", Role::Denoiser, tmp.path() / "missing.bin", "[-1,1]", true, "depth"});
    auto reg = register_real_backends(cfg);

    auto denoisers = reg.names(Role::Denoiser);
    CHECK(denoisers.size() == 5); // 3 toys + 2 declared

    CHECK(reg.probe(Role::Denoiser, "lineart").available);
    auto missing = reg.probe(Role::Denoiser, "depth");
    CHECK(!missing.available);
    CHECK(missing.diagnostic.find("missing.bin") != std::string::npos);

    auto sched = distill::NoiseSchedule::build({});
    CHECK_THROWS_AS((void)reg.make_denoiser("depth", sched), core::BackendError);
    CHECK_THROWS_AS((void)reg.make_denoiser("nosuch", sched), core::BackendError);
    // artifact present but this build carries no runtime adapter
    CHECK_THROWS_AS((void)reg.make_denoiser("lineart", sched), core::BackendError);
}

TEST_CASE("backend config file round trips through json") {
    testutil::TempDir tmp("regcfg");
    std::ofstream(tmp.path() / "backends.json")
        << R"({"entries":[{"name":"softedge","role":"denoiser",)"
        << R"("artifact":"/nonexistent/softedge.bin","condition":"softedge"}]})";
    auto cfg = load_backend_config(tmp.path() / "backends.json");
    REQUIRE(cfg.entries.size() == 1);
    CHECK(cfg.entries[0].name == "softedge");
    CHECK(cfg.entries[0].role == Role::Denoiser);
    auto reg = register_real_backends(cfg);
    auto p = reg.probe(Role::Denoiser, "softedge");
    CHECK(!p.available);
    CHECK(p.diagnostic.find("/nonexistent/softedge.bin") != std::string::npos);
}

TEST_CASE("toy backends are deterministic across instantiations") {
    auto sched = distill::NoiseSchedule::build({});
    auto g1 = make_toy_guidance();
    auto g2 = make_toy_guidance();
    auto img = testutil::random_image(8, 8, 3, 10);
    auto c1 = g1->condition(img);
    auto c2 = g2->condition(img);
    for (size_t i = 0; i < c1.size(); ++i) CHECK(c1.data()[i] == c2.data()[i]);
}

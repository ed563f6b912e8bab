#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <array>
#include <thread>

#include "helpers.hpp"
#include "sr/core/errors.hpp"
#include "sr/op/stylizer.hpp"

using namespace sr;
using op::Stylizer;
using testutil::random_tensor;

TEST_CASE("same seed gives bitwise-identical parameters, different seeds differ") {
    auto a = Stylizer::init(9, 0.25);
    auto b = Stylizer::init(9, 0.25);
    auto c = Stylizer::init(10, 0.25);
    CHECK(a.params_fingerprint() == b.params_fingerprint());
    CHECK(a.params_fingerprint() != c.params_fingerprint());
    REQUIRE(a.parameters().size() == b.parameters().size());
    for (size_t k = 0; k < a.parameters().size(); ++k) {
        const auto& ta = a.parameters()[k]->value;
        const auto& tb = b.parameters()[k]->value;
        for (size_t i = 0; i < ta.size(); ++i) REQUIRE(ta[i] == tb[i]);
    }
}

TEST_CASE("width multiplier 0.25 shrinks the parameter count about 16x") {
    const auto full = Stylizer::init(1, 1.0).parameter_count();
    const auto quarter = Stylizer::init(1, 0.25).parameter_count();
    const double ratio = static_cast<double>(full) / quarter;
    CHECK(ratio > 13.0);
    CHECK(ratio < 18.0);
}

TEST_CASE("output shape equals input shape across the pad/crop path") {
    auto oper = Stylizer::init(3, 0.125);
    for (auto [h, w] : {std::pair{64, 64}, {60, 52}, {33, 41}, {8, 8}, {17, 9}}) {
        auto x = random_tensor(3, h, w, 1000 + h * w);
        auto y = oper.apply_value(x);
        CHECK(y.channels() == 3);
        CHECK(y.height() == h);
        CHECK(y.width() == w);
        CHECK(y.all_finite());
        for (size_t i = 0; i < y.size(); ++i) {
            REQUIRE(y[i] >= 0.0);
            REQUIRE(y[i] <= 1.0);
        }
    }
}

TEST_CASE("inference is deterministic for a frozen operator") {
    auto oper = Stylizer::init(4, 0.25);
    auto x = random_tensor(3, 24, 24, 77);
    auto y1 = oper.apply_value(x);
    auto y2 = oper.apply_value(x);
    for (size_t i = 0; i < y1.size(); ++i) REQUIRE(y1[i] == y2[i]);
}

TEST_CASE("fresh operator output is finite on any valid input") {
    auto oper = Stylizer::init(5, 0.5);
    for (uint64_t s : {1u, 2u, 3u}) {
        auto x = random_tensor(3, 16, 16, s);
        CHECK(oper.apply_value(x).all_finite());
    }
    nn::Tensor extremes(3, 16, 16, 1.0);
    CHECK(oper.apply_value(extremes).all_finite());
}

TEST_CASE("non-finite parameter fails fast with a diagnostic") {
    auto oper = Stylizer::init(6, 0.125);
    oper.parameters()[2]->value[0] = std::numeric_limits<double>::quiet_NaN();
    auto x = random_tensor(3, 16, 16, 5);
    CHECK_THROWS_AS((void)oper.apply_value(x), core::ContractError);
}

TEST_CASE("parameter gradients match central finite differences") {
    auto oper = Stylizer::init(7, 0.125);
    auto x = random_tensor(3, 16, 16, 51);
    auto target = random_tensor(3, 16, 16, 52);

    auto probe_loss = [&]() {
        return nn::mse(oper.apply(nn::constant(x)), nn::constant(target));
    };
    oper.zero_grad();
    nn::backward(probe_loss());

    // analytic vs central differences on a random sample of 32 parameters
    auto rng = nn::CounterRng::keyed({99});
    const double step = 1e-3;
    int checked = 0;
    double worst = 0;
    while (checked < 32) {
        auto& p = oper.parameters()[rng.below(static_cast<int>(oper.parameters().size()))];
        if (p->grad.empty()) continue;
        const int i = rng.below(static_cast<int>(p->value.size()));
        const double analytic = p->grad[i];
        const double keep = p->value[i];
        p->value[i] = keep + step;
        const double up = probe_loss()->value[0];
        p->value[i] = keep - step;
        const double down = probe_loss()->value[0];
        p->value[i] = keep;
        const double numeric = (up - down) / (2 * step);
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
        worst = std::max(worst, std::abs(analytic - numeric) / denom);
        ++checked;
    }
    CHECK(worst < 1e-3);
}

TEST_CASE("checkpoint save/load round trips parameters and metadata") {
    testutil::TempDir tmp("ckpt");
    auto oper = Stylizer::init(11, 0.25);
    const auto file = tmp.path() / "model.ckpt";
    oper.save(file, {11, 0.25, 1234, 0.0625});

    auto meta = Stylizer::peek_meta(file);
    CHECK(meta.seed == 11);
    CHECK(meta.step == 1234);
    CHECK(meta.total_loss == doctest::Approx(0.0625));

    auto back = Stylizer::load(file);
    CHECK(back.params_fingerprint() == oper.params_fingerprint());
    CHECK(back.downsample_factor() == oper.downsample_factor());

    auto x = random_tensor(3, 16, 16, 5);
    auto y1 = oper.apply_value(x);
    auto y2 = back.apply_value(x);
    for (size_t i = 0; i < y1.size(); ++i) REQUIRE(y1[i] == y2[i]);
}

TEST_CASE("corrupt or foreign files are rejected") {
    testutil::TempDir tmp("ckpt_bad");
    const auto file = tmp.path() / "junk.ckpt";
    std::FILE* f = std::fopen(file.string().c_str(), "wb");
    std::fputs("not a checkpoint at all", f);
    std::fclose(f);
    CHECK_THROWS_AS((void)Stylizer::load(file), core::IoError);
    CHECK_THROWS_AS((void)Stylizer::load(tmp.path() / "missing.ckpt"), core::IoError);
}

TEST_CASE("identity operator passes input through unchanged") {
    auto ident = Stylizer::identity();
    CHECK(ident.parameter_count() == 0);
    CHECK(ident.downsample_factor() == 1);
    auto x = random_tensor(3, 10, 13, 3);
    auto y = ident.apply_value(x);
    for (size_t i = 0; i < x.size(); ++i) REQUIRE(y[i] == x[i]);

    testutil::TempDir tmp("ident");
    ident.save(tmp.path() / "id.ckpt", {});
    auto back = Stylizer::load(tmp.path() / "id.ckpt");
    CHECK(back.is_identity());
}

TEST_CASE("small inputs are rejected") {
    auto oper = Stylizer::init(2, 0.125);
    CHECK_THROWS_AS((void)oper.apply_value(random_tensor(3, 4, 4, 1)),
                    core::ContractError);
}

TEST_CASE("a frozen operator serves concurrent readers identically") {
    auto oper = Stylizer::init(21, 0.125);
    auto x = random_tensor(3, 24, 24, 99);
    const auto reference = oper.apply_value(x);
    std::vector<std::thread> workers;
    std::array<bool, 4> ok{};
    for (int w = 0; w < 4; ++w)
        workers.emplace_back([&, w] {
            bool good = true;
            for (int rep = 0; rep < 5; ++rep) {
                auto y = oper.apply_value(x);
                for (size_t i = 0; i < y.size(); ++i) good &= y[i] == reference[i];
            }
            ok[w] = good;
        });
    for (auto& t : workers) t.join();
    for (bool good : ok) CHECK(good);
}

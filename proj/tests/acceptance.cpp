// Acceptance suite: runs every criterion with toy backends and prints one
// pass/fail line per criterion. Exit status is the number of failures.

#include <algorithm>
#include <cstdarg>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "sr/backends/registry.hpp"
#include "sr/core/errors.hpp"
#include "sr/core/image_io.hpp"
#include "sr/distill/csds.hpp"
#include "sr/train/harness.hpp"
#include "sr/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace sr;
using Clock = std::chrono::steady_clock;

namespace {

struct Criterion {
    std::string id;
    std::string summary;
    std::function<bool(std::string&)> run;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof(buf), f, args);
    va_end(args);
    return buf;
}

// ---------------------------------------------------------------- A1

bool a1_gram_oracle(std::string& detail) {
    const auto t0 = Clock::now();
    auto rng = nn::CounterRng::keyed({0xA1});
    double worst = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const int c = 1 + rng.below(8);
        const int h = 1 + rng.below(6);
        const int w = 1 + rng.below(6);
        nn::Tensor f(c, h, w);
        rng.fill_uniform(f, -1.0, 1.0);

        auto g = perceptual::gram_matrix(f);

        // scalar double-loop oracle
        for (int a = 0; a < c; ++a)
            for (int b = 0; b < c; ++b) {
                double s = 0;
                for (int y = 0; y < h; ++y)
                    for (int x = 0; x < w; ++x) s += f.at(a, y, x) * f.at(b, y, x);
                s /= h * w;
                const double denom = std::max({std::abs(s), std::abs(g.at(a, b)), 1e-12});
                worst = std::max(worst, std::abs(g.at(a, b) - s) / denom);
                if (g.at(a, b) != g.at(b, a)) {
                    detail = "symmetry violated";
                    return false;
                }
            }

        // PSD via random quadratic forms
        for (int probe = 0; probe < 20; ++probe) {
            std::vector<double> v(c);
            for (auto& x : v) x = rng.uniform() * 2 - 1;
            double q = 0, trace = 0;
            for (int a = 0; a < c; ++a) {
                trace += g.at(a, a);
                for (int b = 0; b < c; ++b) q += v[a] * g.at(a, b) * v[b];
            }
            if (q < -1e-10 * std::max(trace, 1.0)) {
                detail = fmt("negative quadratic form %g", q);
                return false;
            }
        }
    }
    const double dt = seconds_since(t0);
    detail = fmt("100 maps, worst rel err %.2e, %.2fs", worst, dt);
    return worst < 1e-6 && dt < 5.0;
}

// ---------------------------------------------------------------- A2

bool a2_gradient_checks(std::string& detail) {
    const auto t0 = Clock::now();
    auto e = backends::make_toy_extractor(0xA2);
    distill::ToyEdgeGuidance toy_guidance;
    auto target = testutil::random_image(16, 16, 3, 0xA21);
    auto pred0 = testutil::random_image(16, 16, 3, 0xA22);
    const std::vector<std::string> taps{"t1", "t2"};
    perceptual::StyleGramCache cache(*e, std::span(&target, 1), taps);

    double err_key, err_vgg, err_lineart;
    {
        auto pred = nn::leaf(core::to_chw(pred0));
        nn::backward(perceptual::loss_key_node(pred, nn::constant(core::to_chw(target))));
        std::vector<double> analytic(pred->grad.data(),
                                     pred->grad.data() + pred->grad.size());
        err_key = testutil::finite_diff_check(
            core::to_chw(pred0),
            [&](const nn::Tensor& v) {
                return nn::mse(nn::constant(v), nn::constant(core::to_chw(target)))
                    ->value[0];
            },
            analytic, 1e-3);
    }
    {
        auto pred = nn::leaf(core::to_chw(pred0));
        nn::backward(perceptual::loss_vgg_node(*e, pred, cache, 0, taps));
        std::vector<double> analytic(pred->grad.data(),
                                     pred->grad.data() + pred->grad.size());
        err_vgg = testutil::finite_diff_check(
            core::to_chw(pred0),
            [&](const nn::Tensor& v) {
                return perceptual::loss_vgg_node(*e, nn::constant(v), cache, 0, taps)
                    ->value[0];
            },
            analytic, 1e-3);
    }
    {
        auto pred = nn::leaf(core::to_chw(pred0));
        nn::backward(distill::loss_lineart_node(toy_guidance, pred, target));
        std::vector<double> analytic(pred->grad.data(),
                                     pred->grad.data() + pred->grad.size());
        err_lineart = testutil::finite_diff_check(
            core::to_chw(pred0),
            [&](const nn::Tensor& v) {
                return distill::loss_lineart_node(toy_guidance, nn::constant(v), target)
                    ->value[0];
            },
            analytic, 1e-3);
    }
    const double dt = seconds_since(t0);
    detail = fmt("rel err key %.2e vgg %.2e lineart %.2e, %.1fs", err_key, err_vgg,
                 err_lineart, dt);
    return err_key < 1e-4 && err_vgg < 1e-4 && err_lineart < 1e-4 && dt < 60.0;
}

// ---------------------------------------------------------------- A3

class PoisonWrapper final : public distill::GuidedDenoiser {
public:
    explicit PoisonWrapper(std::shared_ptr<distill::GuidedDenoiser> inner)
        : inner_(std::move(inner)) {}
    std::string name() const override { return "poison"; }
    nn::Tensor vjp(const nn::Tensor&, const nn::Tensor&, int,
                   const nn::Tensor&) const override {
        queried_ = true;
        throw core::BackendError("derivative query");
    }
    bool queried() const { return queried_; }

protected:
    nn::Tensor predict(const nn::Tensor& z, const nn::Tensor& c, int t) const override {
        return inner_->predict_noise(z, c, t);
    }

private:
    std::shared_ptr<distill::GuidedDenoiser> inner_;
    mutable bool queried_ = false;
};

bool a3_csds_contract(std::string& detail) {
    auto sched = distill::NoiseSchedule::build({});
    auto y = testutil::random_tensor(3, 8, 8, 0xA31);
    auto eps = testutil::random_tensor(3, 8, 8, 0xA32, -2, 2);
    nn::Tensor cond(1, 8, 8, 0.0);
    for (int yy = 0; yy < 8; ++yy)
        for (int xx = 0; xx < 4; ++xx) cond.at(0, yy, xx) = 1.0;

    // (a) oracle denoiser: exactly zero value and gradient
    auto oracle = std::make_shared<backends::ToyOracleDenoiser>();
    oracle->set_expected_noise(eps);
    for (int t : {0, 16, 20, 28, 29}) {
        auto r = distill::loss_csds(*oracle, sched, t, y, cond, eps);
        if (r.value != 0.0) {
            detail = fmt("oracle value %g at t=%d", r.value, t);
            return false;
        }
        for (size_t i = 0; i < r.grad.size(); ++i)
            if (r.grad[i] != 0.0) {
                detail = "oracle gradient not exactly zero";
                return false;
            }
    }

    // (b) stop-gradient form w(t)*(d - eps) to machine precision
    backends::ToyIdentityDenoiser ident;
    backends::ToyStructureDenoiser structure(sched);
    for (int t : {16, 28}) {
        const double ab = sched.alpha_bar(t);
        const double w = std::sqrt(ab);
        {
            auto r = distill::loss_csds(ident, sched, t, y, cond, eps);
            const auto mixed = distill::mix_noise(y, eps, sched, t);
            for (size_t i = 0; i < y.size(); ++i) {
                const double expect = w * (mixed[i] - eps[i]);
                if (r.grad[i] != expect) {
                    detail = fmt("identity grad off by %g", r.grad[i] - expect);
                    return false;
                }
            }
        }
        {
            auto r = distill::loss_csds(structure, sched, t, y, cond, eps);
            const auto mixed = distill::mix_noise(y, eps, sched, t);
            const auto pred = structure.predict_noise(mixed, cond, t);
            for (size_t i = 0; i < y.size(); ++i) {
                const double expect = w * (pred[i] - eps[i]);
                if (r.grad[i] != expect) {
                    detail = fmt("structure grad off by %g", r.grad[i] - expect);
                    return false;
                }
            }
        }
    }

    // (c) derivative queries never reach the denoiser
    PoisonWrapper poison(
        backends::make_toy_denoiser(backends::ToyDenoiserKind::Structure, sched));
    auto leafy = nn::leaf(y);
    auto r = distill::loss_csds(poison, sched, 20, y, cond, eps);
    nn::backward(nn::weighted_sum({{distill::csds_term(leafy, r), 1.0}}));
    if (poison.queried()) {
        detail = "denoiser derivative was queried";
        return false;
    }
    detail = "oracle zero, stop-gradient exact, no derivative queries";
    return true;
}

// ---------------------------------------------------------------- A4

bool a4_noise_statistics(std::string& detail) {
    auto sched = distill::NoiseSchedule::build({});
    const int n = 100000;
    std::string parts;
    for (int t : {0, 16, 20, 28, 29}) {
        const double ab = sched.alpha_bar(t);
        nn::Tensor y(1, 1, n, 0.41), eps(1, 1, n);
        auto rng = nn::CounterRng::keyed({0xA4, static_cast<uint64_t>(t)});
        rng.fill_normal(eps);
        const auto mixed = distill::mix_noise(y, eps, sched, t);
        const double anchor = std::sqrt(ab) * 0.41;
        double mean = 0;
        for (int i = 0; i < n; ++i) mean += mixed[i] - anchor;
        mean /= n;
        double var = 0;
        for (int i = 0; i < n; ++i) {
            const double d = mixed[i] - anchor - mean;
            var += d * d;
        }
        var /= n - 1;
        const double se = (1 - ab) * std::sqrt(2.0 / (n - 1));
        if (std::abs(var - (1 - ab)) > 3 * se) {
            detail = fmt("t=%d var %.6f expected %.6f (3se %.6f)", t, var, 1 - ab,
                         3 * se);
            return false;
        }
        parts += fmt("t%d:%.4f ", t, var);
    }
    // endpoint semantics: maximal noise at t=0, minimal at t=29
    if (!(sched.alpha_bar(0) <= 0.05 && sched.alpha_bar(29) >= 0.95)) {
        detail = "endpoint alpha_bar outside the documented ranges";
        return false;
    }
    detail = "variances " + parts + "match 1-alpha_bar within 3 SE";
    return true;
}

// ---------------------------------------------------------------- A5

train::TrainBackends acceptance_backends(const core::TrainConfig& cfg) {
    backends::BackendRegistry reg;
    return train::resolve_backends(reg, cfg, distill::NoiseSchedule::build({}));
}

bool a5_structure_directionality(std::string& detail) {
    const auto t0 = Clock::now();
    auto data = testutil::synthetic_dataset(
        {.frames = 8, .width = 64, .height = 64, .keyframe = 0});

    core::TrainConfig base;
    base.learning_rate = 2e-3;
    base.max_steps = 800;
    base.checkpoint_every = 200;
    base.width_multiplier = 0.25;
    base.seed = 0xA5;
    base.t_index = 28;
    base.guidance_kind = "toy";
    base.denoiser = "toy-structure";
    base.weights = {1.0, 0.5, 0.0};
    base.weight_decay = 0.0;

    // desk-scale preset grid {0, weak, strong}: the distillation gradient is
    // per-element (unnormalized), so toy-scale weights sit well below the
    // keyframe term's mean-normalized scale
    const std::vector<double> lambda_cells{0.0, 2e-5, 2e-4};
    std::vector<double> iou;
    backends::BackendRegistry reg;
    auto report = train::run_grid(data, base, reg, lambda_cells, {base.t_index});
    for (const auto& cell : report.cells) {
        if (cell.status != "ok") {
            detail = "cell failed: " + cell.status;
            return false;
        }
        iou.push_back(cell.structure_score);
    }
    const double dt = seconds_since(t0);
    detail = fmt("IoU 0:%.3f weak:%.3f strong:%.3f, %.0fs", iou[0], iou[1], iou[2], dt);
    return iou[2] >= iou[0] + 0.10 && iou[1] >= iou[0] - 1e-9 && iou[2] >= iou[1] - 1e-9 &&
           dt < 900.0;
}

// ---------------------------------------------------------------- A6

bool a6_overfit_smoke(std::string& detail) {
    const auto t0 = Clock::now();
    auto spec = testutil::SyntheticSpec{.frames = 1, .width = 64, .height = 64};
    auto one = testutil::synthetic_dataset(spec);
    // luminance-keyed target so exact reconstruction is representable
    one.stylized_keyframes = {testutil::stylize_reference_flat(one.frames[0])};

    core::TrainConfig cfg;
    cfg.learning_rate = 3e-3;
    cfg.max_steps = 2000;
    cfg.checkpoint_every = 2000;
    cfg.width_multiplier = 0.25;
    cfg.seed = 0xA6;
    cfg.weights = {1.0, 0.0, 0.0};
    cfg.weight_decay = 0.0;

    train::Trainer tr(one, cfg, acceptance_backends(cfg));
    int64_t steps = 0;
    double mse = 1;
    while (steps < 2000) {
        tr.step();
        ++steps;
        mse = tr.trace().back().l_key;
        if (mse < 1e-3) break;
    }
    const double final_mse = tr.evaluate_full().l_key;
    const double dt = seconds_since(t0);
    detail = fmt("keyframe mse %.2e after %lld steps, %.0fs", final_mse,
                 static_cast<long long>(steps), dt);
    return final_mse < 1e-3 && steps <= 2000 && dt < 300.0;
}

// ---------------------------------------------------------------- A7

bool a7_checkpoint_selection(std::string& detail) {
    auto rng = nn::CounterRng::keyed({0xA7});
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 1 + rng.below(40);
        std::vector<train::EvalPoint> evals;
        for (int i = 0; i < n; ++i) {
            // coarse grid provokes plenty of exact ties
            const double total = rng.below(8) / 4.0;
            evals.push_back({i, 0, 0, 0, total, {}});
        }
        const int got = train::select_checkpoint(evals);
        // brute-force oracle: scan for global min, earliest wins
        int expect = 0;
        for (int i = 1; i < n; ++i)
            if (evals[i].total < evals[expect].total) expect = i;
        if (got != expect) {
            detail = fmt("trial %d: got %d expected %d", trial, got, expect);
            return false;
        }
    }
    detail = "1000 random traces, argmin with earliest-step ties";
    return true;
}

// ---------------------------------------------------------------- A8

bool a8_determinism(std::string& detail) {
    auto data = testutil::synthetic_dataset({.frames = 4, .width = 16, .height = 16});
    core::TrainConfig cfg;
    cfg.learning_rate = 2e-3;
    cfg.max_steps = 40;
    cfg.checkpoint_every = 20;
    cfg.width_multiplier = 0.125;
    cfg.seed = 0xA8;
    cfg.weights = {1.0, 0.05, 0.05};
    cfg.weight_decay = 0.0;

    testutil::TempDir tmp("acceptance_a8");
    std::string csv[2];
    uint64_t op_fp[2];
    for (int run = 0; run < 2; ++run) {
        auto backends = acceptance_backends(cfg);
        const uint64_t fe = backends.extractor->params_fingerprint();
        const uint64_t fd = backends.denoiser->params_fingerprint();
        const uint64_t fg = backends.guidance->params_fingerprint();
        const auto dir = tmp.path() / ("run" + std::to_string(run));
        train::Trainer tr(data, cfg, backends, dir);
        tr.run();
        if (backends.extractor->params_fingerprint() != fe ||
            backends.denoiser->params_fingerprint() != fd ||
            backends.guidance->params_fingerprint() != fg) {
            detail = "frozen backend hash changed during the run";
            return false;
        }
        std::ifstream in(dir / "trace.csv", std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        csv[run] = ss.str();
        op_fp[run] = tr.oper().params_fingerprint();
    }
    if (csv[0].empty() || csv[0] != csv[1]) {
        detail = "trace CSVs differ between identical-seed runs";
        return false;
    }
    if (op_fp[0] != op_fp[1]) {
        detail = "final parameters differ between identical-seed runs";
        return false;
    }
    detail = fmt("byte-identical traces (%zu bytes), stable backend hashes",
                 csv[0].size());
    return true;
}

// ---------------------------------------------------------------- A9

bool a9_estimator_consistency(std::string& detail) {
    const auto t0 = Clock::now();
    auto data = testutil::synthetic_dataset({.frames = 4, .width = 16, .height = 16});
    data.keyframe_indices = {0, 2};
    data.stylized_keyframes = {testutil::stylize_reference(data.frames[0]),
                               testutil::stylize_reference(data.frames[2])};

    core::TrainConfig cfg;
    cfg.learning_rate = 0.0; // freeze parameters so the expectation is stationary
    cfg.max_steps = 10000;
    cfg.checkpoint_every = 10000;
    cfg.width_multiplier = 0.125;
    cfg.seed = 0xA9;
    cfg.weights = {1.0, 1.0, 1.0};
    cfg.weight_decay = 0.0;

    train::Trainer tr(data, cfg, acceptance_backends(cfg));
    const auto full = tr.evaluate_full();
    for (int i = 0; i < 10000; ++i) tr.step();

    double mk = 0, mv = 0, mc = 0;
    for (const auto& row : tr.trace()) {
        mk += row.l_key;
        mv += row.l_vgg;
        mc += row.l_csds;
    }
    const double n = static_cast<double>(tr.trace().size());
    mk /= n;
    mv /= n;
    mc /= n;

    const double ek = std::abs(mk - full.l_key) / full.l_key;
    const double ev = std::abs(mv - full.l_vgg) / full.l_vgg;
    const double ec = std::abs(mc - full.l_csds) / full.l_csds;
    const double dt = seconds_since(t0);
    detail = fmt("rel err key %.3f%% vgg %.3f%% csds %.3f%%, %.0fs", 100 * ek, 100 * ev,
                 100 * ec, dt);
    return ek < 0.02 && ev < 0.02 && ec < 0.02;
}

// ---------------------------------------------------------------- A10

bool a10_inference_contract(std::string& detail) {
    // feed-forward independence: per-frame latency without dataset coupling
    auto oper = op::Stylizer::init(0xA10, 0.125);
    auto frame = core::to_chw(testutil::random_image(32, 32, 3, 0xA101));
    for (int i = 0; i < 25; ++i) (void)oper.apply_value(frame); // warm up

    // noise-floor per-frame latency, measured identically for both job sizes
    // (min filters scheduler preemption on shared machines)
    auto best_frame_latency = [&](int frames) {
        double best = 1e9;
        for (int i = 0; i < frames; ++i) {
            const auto t0 = Clock::now();
            (void)oper.apply_value(frame);
            best = std::min(best, seconds_since(t0));
        }
        return best;
    };
    double single = 1e9;
    for (int rep = 0; rep < 250; ++rep) single = std::min(single, best_frame_latency(1));
    const double bulk = best_frame_latency(1000);
    const double spread = std::abs(single - bulk) / std::max(single, bulk);

    // bit-exact SRRAW1 round trip through the identity operator, via the CLI
    testutil::TempDir tmp("acceptance_a10");
    op::Stylizer::identity().save(tmp.path() / "id.ckpt", {});
    const uint32_t w = 24, h = 18;
    std::string payload;
    auto rng = nn::CounterRng::keyed({0xA102});
    for (int f = 0; f < 3; ++f)
        for (uint32_t i = 0; i < w * h * 3; ++i)
            payload.push_back(static_cast<char>(rng.below(256)));
    const fs::path in = tmp.path() / "in.raw";
    {
        std::ofstream s(in, std::ios::binary);
        s.write("SRRAW1", 6);
        s.write(reinterpret_cast<const char*>(&w), 4);
        s.write(reinterpret_cast<const char*>(&h), 4);
        s.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    }
    const fs::path out = tmp.path() / "out.raw";
    const std::string cmd = std::string(SRSTYLE_BIN) + " stylize --model " +
                            (tmp.path() / "id.ckpt").string() + " --pipe < " +
                            in.string() + " > " + out.string() + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    bool round_trip = WIFEXITED(status) && WEXITSTATUS(status) == 0;
    if (round_trip) {
        std::ifstream a(in, std::ios::binary), b(out, std::ios::binary);
        std::stringstream sa, sb;
        sa << a.rdbuf();
        sb << b.rdbuf();
        round_trip = sa.str() == sb.str() && !sa.str().empty();
    }

    detail = fmt("latency 1-frame %.3fms vs 1000-frame %.3fms (spread %.1f%%), "
                 "pipe round trip %s",
                 1e3 * single, 1e3 * bulk, 100 * spread,
                 round_trip ? "bit-exact" : "FAILED");
    return spread < 0.10 && round_trip;
}

} // namespace

int main(int argc, char** argv) {
    // optional filter: run only criteria whose id is listed
    std::vector<std::string> only(argv + 1, argv + argc);
    auto selected = [&](const std::string& id) {
        if (only.empty()) return true;
        for (const auto& o : only)
            if (o == id) return true;
        return false;
    };

    std::vector<Criterion> criteria = {
        {"A1", "gram matches the scalar double-loop oracle", a1_gram_oracle},
        {"A2", "loss gradients match central finite differences", a2_gradient_checks},
        {"A3", "cSDS stop-gradient contract", a3_csds_contract},
        {"A4", "noise-mixing variance tracks 1-alpha_bar", a4_noise_statistics},
        {"A5", "structure reinforcement is directional in lambda_c",
         a5_structure_directionality},
        {"A6", "keyframe-only overfit reaches mse < 1e-3", a6_overfit_smoke},
        {"A7", "checkpoint selection is argmin with earliest ties",
         a7_checkpoint_selection},
        {"A8", "identical seeds give byte-identical traces", a8_determinism},
        {"A9", "stochastic loss means match full sums within 2%",
         a9_estimator_consistency},
        {"A10", "inference latency is dataset-independent; pipe is bit-exact",
         a10_inference_contract},
    };

    int failures = 0;
    for (auto& c : criteria) {
        if (!selected(c.id)) continue;
        std::string detail;
        bool ok = false;
        try {
            ok = c.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        std::printf("[%s] %-4s %s — %s\n", ok ? "PASS" : "FAIL", c.id.c_str(),
                    c.summary.c_str(), detail.c_str());
        std::fflush(stdout);
        failures += !ok;
    }
    return failures;
}

#include "sr/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "sr/core/errors.hpp"
#include "sr/core/image_io.hpp"

namespace sr::train {

namespace fs = std::filesystem;

real total_loss(const LossWeights& w, real lk, real lv, real lc) {
    return w.lambda_k * lk + w.lambda_v * lv + w.lambda_c * lc;
}

int select_checkpoint(std::span<const EvalPoint> evals) {
    if (evals.empty())
        throw core::ContractError("select_checkpoint: no evaluation points");
    int best = 0;
    for (int k = 1; k < static_cast<int>(evals.size()); ++k)
        if (evals[k].total < evals[best].total) best = k;
    return best;
}

std::vector<AggregateRow> aggregate_convergence(std::span<const ConvergenceReport> runs) {
    std::vector<AggregateRow> out;
    if (runs.empty()) return out;
    const size_t marks = runs.front().size();
    for (size_t m = 0; m < marks; ++m) {
        AggregateRow row;
        row.minutes = runs.front()[m].minutes;
        std::vector<real> totals;
        for (const auto& r : runs)
            if (m < r.size() && r[m].reached) totals.push_back(r[m].total);
        row.count = static_cast<int>(totals.size());
        if (!totals.empty()) {
            real mean = 0;
            for (real t : totals) mean += t;
            mean /= totals.size();
            real var = 0;
            for (real t : totals) var += (t - mean) * (t - mean);
            var /= totals.size();
            row.mean_total = mean;
            row.std_total = std::sqrt(var);
        }
        out.push_back(row);
    }
    return out;
}

TrainBackends resolve_backends(const backends::BackendRegistry& reg,
                               const TrainConfig& cfg,
                               const distill::NoiseSchedule& sched) {
    TrainBackends b;
    b.extractor = reg.make_extractor(cfg.extractor, cfg.seed);
    b.denoiser = reg.make_denoiser(cfg.denoiser, sched);
    b.guidance = reg.make_guidance(cfg.guidance_kind);
    if (auto want = b.denoiser->accepted_condition();
        want && *want != b.guidance->kind())
        throw core::BackendError("denoiser '" + b.denoiser->name() +
                                 "' expects condition kind '" +
                                 distill::to_string(*want) + "', got '" +
                                 distill::to_string(b.guidance->kind()) + "'");
    return b;
}

Trainer::Trainer(const FrameDataset& data, TrainConfig cfg, TrainBackends backends,
                 fs::path run_root)
    : data_(data), cfg_(std::move(cfg)), backends_(std::move(backends)),
      sched_(distill::NoiseSchedule::build({})),
      oper_(op::Stylizer::init(cfg_.seed, cfg_.width_multiplier)),
      optim_(nn::AdamWConfig{cfg_.learning_rate, 0.9, 0.999, 1e-8, cfg_.weight_decay}),
      sample_rng_(nn::CounterRng::keyed({cfg_.seed, 0x5A3D})),
      run_root_(std::move(run_root)) {
    if (data_.frame_count() < 1 || data_.keyframe_count() < 1)
        throw core::ContractError("Trainer: dataset needs frames and >= 1 keyframe");
    if (cfg_.t_index < 0 || cfg_.t_index >= sched_.steps())
        throw core::ContractError("Trainer: t_index out of schedule range");
    unlabeled_ = data_.unlabeled_indices();
    weighting_ = cfg_.sds_weighting == "one" ? distill::SdsWeighting::One
                                             : distill::SdsWeighting::SqrtAlphaBar;
    if (cfg_.structure_loss == "lineart" && backends_.guidance &&
        !backends_.guidance->differentiable())
        throw core::ConfigError(
            "structure_loss=lineart needs a differentiable guidance kind; '" +
            distill::to_string(backends_.guidance->kind()) + "' is not");
    if (backends_.extractor && !cfg_.feature_layers.empty())
        gram_cache_ = perceptual::StyleGramCache(
            *backends_.extractor, data_.stylized_keyframes, cfg_.feature_layers);
    probe_ = unlabeled_.empty() ? data_.keyframe_indices.front() : unlabeled_.front();
    if (!run_root_.empty()) {
        fs::create_directories(run_root_ / "checkpoints");
        fs::create_directories(run_root_ / "snapshots");
    }
    started_ = std::chrono::steady_clock::now();
}

nn::Tensor Trainer::fresh_eps(int64_t step, int frame, int c, int h, int w) const {
    nn::Tensor eps(c, h, w);
    auto rng = nn::CounterRng::keyed({cfg_.seed, 0xE995, static_cast<uint64_t>(step),
                                      static_cast<uint64_t>(frame)});
    rng.fill_normal(eps);
    return eps;
}

const nn::Tensor& Trainer::condition_chw(int frame) const {
    auto it = cond_cache_.find(frame);
    if (it == cond_cache_.end()) {
        auto cond = backends_.guidance->condition(data_.frames[frame]);
        it = cond_cache_.emplace(frame, core::to_chw(cond)).first;
    }
    return it->second;
}

void Trainer::step() {
    ++step_;
    const int j_pos = sample_rng_.below(data_.keyframe_count());
    const int j = data_.keyframe_indices[j_pos];
    int i = -1;
    if (!unlabeled_.empty()) {
        i = unlabeled_[sample_rng_.below(static_cast<int>(unlabeled_.size()))];
    } else if (!key_only_warned_) {
        key_only_warned_ = true;
        std::cerr << "warning: no unlabeled frames; training on the keyframe "
                     "term only\n";
    }
    draws_.push_back({step_, i, j});

    oper_.zero_grad();
    std::vector<std::pair<nn::NodePtr, real>> terms;

    const auto diag = [&](const char* what) {
        return core::ContractError(std::string(what) + " at step " +
                                   std::to_string(step_) + " (i=" + std::to_string(i) +
                                   ", j=" + std::to_string(j) + ")");
    };

    auto yj = oper_.apply(nn::constant(core::to_chw(data_.frames[j])));
    if (!yj->value.all_finite()) throw diag("non-finite operator output");
    auto lk_node = nn::mse(yj, nn::constant(core::to_chw(data_.stylized_keyframes[j_pos])));
    const real lk = lk_node->value[0];
    terms.emplace_back(lk_node, cfg_.weights.lambda_k);

    real lv = 0, lc = 0;
    if (i >= 0) {
        auto yi = oper_.apply(nn::constant(core::to_chw(data_.frames[i])));
        if (!yi->value.all_finite()) throw diag("non-finite operator output");
        if (backends_.extractor && !cfg_.feature_layers.empty()) {
            auto lv_node = perceptual::loss_vgg_node(*backends_.extractor, yi,
                                                     gram_cache_, j_pos,
                                                     cfg_.feature_layers);
            lv = lv_node->value[0];
            terms.emplace_back(lv_node, cfg_.weights.lambda_v);
        }
        if (cfg_.structure_loss == "lineart") {
            auto ln = distill::loss_lineart_node(*backends_.guidance, yi,
                                                 data_.frames[i]);
            lc = ln->value[0];
            terms.emplace_back(ln, cfg_.weights.lambda_c);
        } else if (backends_.denoiser) {
            const nn::Tensor& cond = condition_chw(i);
            const nn::Tensor eps =
                fresh_eps(step_, i, yi->value.channels(), yi->value.height(),
                          yi->value.width());
            auto r = distill::loss_csds(*backends_.denoiser, sched_, cfg_.t_index,
                                        yi->value, cond, eps, weighting_);
            lc = r.value;
            terms.emplace_back(distill::csds_term(yi, r), cfg_.weights.lambda_c);
        }
    }

    const real tot = total_loss(cfg_.weights, lk, lv, lc);
    if (!std::isfinite(tot)) throw diag("non-finite loss");

    nn::backward(nn::weighted_sum(terms));
    optim_.step(oper_.parameters());
    trace_.push_back({step_, lk, lv, lc, tot});
}

FullLosses Trainer::evaluate_full() const {
    FullLosses out;
    const int K = data_.keyframe_count();
    for (int k = 0; k < K; ++k) {
        const int j = data_.keyframe_indices[k];
        out.l_key += perceptual::loss_key(oper_.stylize(data_.frames[j]),
                                          data_.stylized_keyframes[k]);
    }
    out.l_key /= K;

    if (!unlabeled_.empty()) {
        const bool vgg = backends_.extractor && !cfg_.feature_layers.empty();
        int pairs = 0;
        for (int i : unlabeled_) {
            const nn::Tensor y_i = oper_.apply_value(core::to_chw(data_.frames[i]));
            if (vgg) {
                // pred grams once per frame, then all keyframe pairs
                std::vector<nn::Tensor> pred_grams;
                for (const auto& tap : cfg_.feature_layers)
                    pred_grams.push_back(
                        nn::gram(nn::constant(backends_.extractor->extract_value(
                                     y_i, tap)))
                            ->value);
                for (int k = 0; k < K; ++k) {
                    real pair_loss = 0;
                    for (size_t l = 0; l < cfg_.feature_layers.size(); ++l) {
                        auto d = nn::mse(nn::constant(pred_grams[l]),
                                         nn::constant(gram_cache_.gram(
                                             k, cfg_.feature_layers[l])));
                        pair_loss += d->value[0];
                    }
                    out.l_vgg += pair_loss / cfg_.feature_layers.size();
                    ++pairs;
                }
            }
            if (cfg_.structure_loss == "lineart") {
                out.l_csds += distill::loss_lineart(*backends_.guidance,
                                                    core::from_chw(y_i),
                                                    data_.frames[i]);
            } else if (backends_.denoiser) {
                nn::Tensor eps(y_i.channels(), y_i.height(), y_i.width());
                auto rng = nn::CounterRng::keyed(
                    {cfg_.seed, 0xEA17, static_cast<uint64_t>(i)});
                rng.fill_normal(eps);
                out.l_csds += distill::loss_csds(*backends_.denoiser, sched_,
                                                 cfg_.t_index, y_i, condition_chw(i),
                                                 eps, weighting_)
                                  .value;
            }
        }
        if (pairs > 0) out.l_vgg /= pairs;
        out.l_csds /= static_cast<real>(unlabeled_.size());
    }
    out.total = total_loss(cfg_.weights, out.l_key, out.l_vgg, out.l_csds);
    return out;
}

void Trainer::evaluate_and_checkpoint() {
    const FullLosses f = evaluate_full();
    EvalPoint ev{step_, f.l_key, f.l_vgg, f.l_csds, f.total, {}};
    if (!run_root_.empty()) {
        char name[64];
        std::snprintf(name, sizeof(name), "step_%08lld.ckpt",
                      static_cast<long long>(step_));
        ev.checkpoint = run_root_ / "checkpoints" / name;
        oper_.save(ev.checkpoint, {cfg_.seed, cfg_.width_multiplier, step_, f.total});
    }
    if (evals_.empty() || f.total < best_total_) {
        best_total_ = f.total;
        best_params_.clear();
        for (const auto& p : oper_.parameters()) best_params_.push_back(p->value);
    }
    evals_.push_back(ev);
}

void Trainer::maybe_snapshot(real elapsed_min) {
    for (auto& m : marks_) {
        if (m.reached || elapsed_min < m.minutes) continue;
        m.reached = true;
        m.step = step_;
        m.total = trace_.empty() ? 0 : trace_.back().total;
        if (!run_root_.empty()) {
            char name[64];
            std::snprintf(name, sizeof(name), "mark_%gmin.png", m.minutes);
            m.snapshot = run_root_ / "snapshots" / name;
            core::save_png(oper_.stylize(data_.frames[probe_]).clamped(), m.snapshot);
        }
    }
}

void Trainer::set_wallclock_marks(std::vector<real> minutes) {
    marks_.clear();
    std::sort(minutes.begin(), minutes.end());
    for (real m : minutes) marks_.push_back({m, false, 0, 0, {}});
}

void Trainer::run() {
    const auto budget_left = [&]() {
        if (cfg_.max_steps && step_ >= *cfg_.max_steps) return false;
        if (cfg_.max_wallclock_sec) {
            const real elapsed =
                std::chrono::duration<real>(std::chrono::steady_clock::now() - started_)
                    .count();
            if (elapsed >= *cfg_.max_wallclock_sec) return false;
        }
        return true;
    };
    if (!cfg_.max_steps && !cfg_.max_wallclock_sec)
        throw core::ContractError("Trainer: no step or wallclock budget configured");

    while (budget_left()) {
        step();
        if (step_ % cfg_.checkpoint_every == 0) evaluate_and_checkpoint();
        if (!marks_.empty()) {
            const real elapsed_min =
                std::chrono::duration<real>(std::chrono::steady_clock::now() - started_)
                    .count() /
                60.0;
            maybe_snapshot(elapsed_min);
        }
    }
    if (evals_.empty() || evals_.back().step != step_) evaluate_and_checkpoint();
    if (!run_root_.empty()) write_run_artifacts();
}

op::Stylizer Trainer::best_operator() const {
    const int idx = best_eval_index();
    if (!evals_[idx].checkpoint.empty()) return op::Stylizer::load(evals_[idx].checkpoint);
    op::Stylizer restored = op::Stylizer::init(cfg_.seed, cfg_.width_multiplier);
    // best_params_ tracks the running minimum, which select_checkpoint also
    // returns (earliest-tie consistency holds because only strict improvements
    // replace the copy)
    for (size_t k = 0; k < restored.parameters().size(); ++k)
        restored.parameters()[k]->value = best_params_[k];
    return restored;
}

ConvergenceReport Trainer::convergence_report(std::span<const real> marks_minutes) const {
    ConvergenceReport out;
    for (real m : marks_minutes) {
        ConvergenceRow row;
        row.minutes = m;
        for (const auto& rec : marks_) {
            if (rec.minutes == m && rec.reached) {
                row = rec;
                break;
            }
        }
        out.push_back(row);
    }
    return out;
}

void Trainer::write_run_artifacts() {
    if (run_root_.empty()) return;
    std::FILE* f = std::fopen((run_root_ / "trace.csv").string().c_str(), "wb");
    if (!f) throw core::IoError("cannot write trace.csv in " + run_root_.string());
    std::fprintf(f, "step,l_key,l_vgg,l_csds,total\n");
    for (const auto& r : trace_)
        std::fprintf(f, "%lld,%.17g,%.17g,%.17g,%.17g\n",
                     static_cast<long long>(r.step), r.l_key, r.l_vgg, r.l_csds,
                     r.total);
    std::fclose(f);
}

} // namespace sr::train

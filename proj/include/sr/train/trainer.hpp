#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "sr/backends/registry.hpp"
#include "sr/core/config.hpp"
#include "sr/core/dataset.hpp"
#include "sr/distill/csds.hpp"
#include "sr/nn/adamw.hpp"
#include "sr/nn/rng.hpp"
#include "sr/op/stylizer.hpp"
#include "sr/perceptual/perceptual.hpp"

namespace sr::train {

using core::FrameDataset;
using core::LossWeights;
using core::TrainConfig;
using nn::real;

// lambda_k * lk + lambda_v * lv + lambda_c * lc
real total_loss(const LossWeights& w, real lk, real lv, real lc);

struct TraceRow {
    int64_t step;
    real l_key, l_vgg, l_csds, total;
};

struct EvalPoint {
    int64_t step;
    real l_key, l_vgg, l_csds, total;
    std::filesystem::path checkpoint; // empty when running without a run dir
};

struct Draw {
    int64_t step;
    int i; // unlabeled index, -1 when Z is empty
    int j; // keyframe index
};

struct FullLosses {
    real l_key = 0, l_vgg = 0, l_csds = 0, total = 0;
};

struct ConvergenceRow {
    real minutes = 0;
    bool reached = false;
    int64_t step = 0;
    real total = 0;
    std::filesystem::path snapshot;
};
using ConvergenceReport = std::vector<ConvergenceRow>;

struct AggregateRow {
    real minutes = 0;
    int count = 0;
    real mean_total = 0, std_total = 0;
};
// Per-mark mean/std of totals across runs (rows that were reached).
std::vector<AggregateRow> aggregate_convergence(std::span<const ConvergenceReport> runs);

// Global argmin of evaluated totals, earliest step on ties.
int select_checkpoint(std::span<const EvalPoint> evals);

struct TrainBackends {
    std::shared_ptr<perceptual::FeatureExtractor> extractor;
    std::shared_ptr<distill::GuidedDenoiser> denoiser;
    std::shared_ptr<distill::GuidanceFunction> guidance;
};

TrainBackends resolve_backends(const backends::BackendRegistry& reg,
                               const TrainConfig& cfg,
                               const distill::NoiseSchedule& sched);

// Owns the operator, optimizer state, loss trace, and caches for one run.
// One logical optimization thread drives step(); loss evaluation reads a
// frozen parameter snapshot inside the step.
class Trainer {
public:
    Trainer(const FrameDataset& data, TrainConfig cfg, TrainBackends backends,
            std::filesystem::path run_root = {});

    // One stochastic update: draw j from K and i from Z uniformly, take one
    // optimizer step on the weighted objective, append all three loss values
    // to the trace.
    void step();

    // Full-sum losses over all pairs; evaluation noise is fixed per frame so
    // checkpoint selection compares like with like.
    FullLosses evaluate_full() const;

    // Run to the configured budget, evaluating (and checkpointing when a run
    // dir is set) every checkpoint_every steps plus once at the end.
    void run();

    int64_t step_count() const { return step_; }
    const std::vector<TraceRow>& trace() const { return trace_; }
    const std::vector<EvalPoint>& evals() const { return evals_; }
    const std::vector<Draw>& draws() const { return draws_; }

    int best_eval_index() const { return select_checkpoint(evals_); }
    const EvalPoint& best_eval() const { return evals_[best_eval_index()]; }
    // Operator restored to the lowest-total-loss evaluation point.
    op::Stylizer best_operator() const;

    op::Stylizer& oper() { return oper_; }
    const op::Stylizer& oper() const { return oper_; }
    const TrainConfig& config() const { return cfg_; }
    const distill::NoiseSchedule& schedule() const { return sched_; }
    const TrainBackends& backends() const { return backends_; }

    void set_wallclock_marks(std::vector<real> minutes);
    ConvergenceReport convergence_report(std::span<const real> marks_minutes) const;

    int probe_frame() const { return probe_; }
    bool fell_back_to_key_only() const { return key_only_warned_; }

    void write_run_artifacts(); // trace CSV (+ report hooks) into the run dir

private:
    void evaluate_and_checkpoint();
    void maybe_snapshot(real elapsed_min);
    nn::Tensor fresh_eps(int64_t step, int frame, int c, int h, int w) const;
    const nn::Tensor& condition_chw(int frame) const;

    FrameDataset data_;
    TrainConfig cfg_;
    TrainBackends backends_;
    distill::NoiseSchedule sched_;
    op::Stylizer oper_;
    nn::AdamW optim_;
    nn::CounterRng sample_rng_;
    std::vector<int> unlabeled_;
    perceptual::StyleGramCache gram_cache_;
    mutable std::map<int, nn::Tensor> cond_cache_;
    distill::SdsWeighting weighting_;

    int64_t step_ = 0;
    std::vector<TraceRow> trace_;
    std::vector<EvalPoint> evals_;
    std::vector<Draw> draws_;
    std::vector<nn::Tensor> best_params_;
    real best_total_ = 0;
    bool key_only_warned_ = false;
    int probe_ = 0;

    std::filesystem::path run_root_;
    std::vector<ConvergenceRow> marks_;
    std::chrono::steady_clock::time_point started_;
};

} // namespace sr::train

#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sr/train/trainer.hpp"

namespace sr::train {

// Canny-map agreement between stylized and target probe frames:
// intersection-over-union of the binarized edge maps, averaged over up to
// `max_probes` unlabeled frames. Empty union counts as full agreement.
real structure_score(const op::Stylizer& oper, const FrameDataset& data,
                     int max_probes = 4);

// Documented convention for the style/structure trade-off presets; the
// production per-sequence values span this range.
const std::map<std::string, real>& lambda_c_presets(); // style/balanced/structure

struct GridCell {
    real lambda_c = 0;
    int t = 0;
    std::string status = "ok"; // error text on cell failure
    real structure_score = 0;
    FullLosses final_losses;
    std::filesystem::path checkpoint;
};
struct GridReport {
    std::vector<GridCell> cells;
};

// One training run per (lambda_c, t) cell; cell failures are recorded and
// the grid continues.
GridReport run_grid(const FrameDataset& data, const TrainConfig& base,
                    const backends::BackendRegistry& reg,
                    const std::vector<real>& lambda_c_values,
                    const std::vector<int>& t_values,
                    const std::filesystem::path& out_dir = {});

struct AblationRun {
    std::string name; // full, drop_key, drop_vgg, drop_csds
    LossWeights weights;
    std::string status = "ok";
    FullLosses final_losses;
    std::vector<Draw> draws;
    std::filesystem::path checkpoint;
    std::filesystem::path probe_png;
};
struct AblationReport {
    std::vector<AblationRun> runs;
};

// Four runs to the same step budget: each loss weight dropped in turn plus
// the full objective. All runs share the data-sampling stream.
AblationReport run_ablation(const FrameDataset& data, const TrainConfig& base,
                            const backends::BackendRegistry& reg,
                            const std::filesystem::path& out_dir = {});

struct ConditioningRow {
    std::string kind;
    bool completed = false;
    std::string note;
    real guidance_ms_per_frame = 0;
    FullLosses final_losses;
    std::filesystem::path probe_png;
};
struct ConditioningReport {
    std::vector<ConditioningRow> rows;
};

// One run per guidance kind at the base config's lambda_c and t; kinds whose
// backend is unavailable are skipped with a note.
ConditioningReport run_conditioning_comparison(const FrameDataset& data,
                                               const TrainConfig& base,
                                               const backends::BackendRegistry& reg,
                                               const std::vector<std::string>& kinds,
                                               const std::filesystem::path& out_dir = {});

nlohmann::json to_json(const GridReport&);
nlohmann::json to_json(const AblationReport&);
nlohmann::json to_json(const ConditioningReport&);

} // namespace sr::train

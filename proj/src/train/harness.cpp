#include "sr/train/harness.hpp"

#include <chrono>

#include "sr/core/errors.hpp"
#include "sr/core/image_io.hpp"
#include "sr/train/rundir.hpp"

namespace sr::train {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// 3x3 max filter; gives the edge-map IoU a one-pixel matching tolerance,
// since non-maximum suppression can legitimately land a line one pixel off
core::ImagePlane dilate1(const core::ImagePlane& bin) {
    core::ImagePlane out(bin.width(), bin.height(), 1, 0.0);
    for (int y = 0; y < bin.height(); ++y)
        for (int x = 0; x < bin.width(); ++x) {
            real m = 0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int yy = y + dy, xx = x + dx;
                    if (yy < 0 || yy >= bin.height() || xx < 0 || xx >= bin.width())
                        continue;
                    m = std::max(m, bin.at(yy, xx, 0));
                }
            out.at(y, x, 0) = m;
        }
    return out;
}

} // namespace

real structure_score(const op::Stylizer& oper, const FrameDataset& data,
                     int max_probes) {
    distill::CannyGuidance canny;
    auto probes = data.unlabeled_indices();
    if (probes.empty()) probes = data.keyframe_indices;
    if (static_cast<int>(probes.size()) > max_probes) probes.resize(max_probes);

    real score = 0;
    for (int idx : probes) {
        const auto target_edges = dilate1(canny.condition(data.frames[idx]));
        const auto pred_edges =
            dilate1(canny.condition(oper.stylize(data.frames[idx]).clamped()));
        size_t inter = 0, uni = 0;
        for (size_t p = 0; p < target_edges.size(); ++p) {
            const bool a = target_edges.data()[p] > 0.5;
            const bool b = pred_edges.data()[p] > 0.5;
            inter += a && b;
            uni += a || b;
        }
        score += uni == 0 ? 1.0 : static_cast<real>(inter) / static_cast<real>(uni);
    }
    return score / probes.size();
}

const std::map<std::string, real>& lambda_c_presets() {
    static const std::map<std::string, real> presets = {
        {"style", 1e-6}, {"balanced", 5e-6}, {"structure", 1e-5}};
    return presets;
}

namespace {

fs::path cell_dir(const fs::path& out_dir, const std::string& name) {
    if (out_dir.empty()) return {};
    fs::path p = out_dir / name;
    fs::create_directories(p);
    return p;
}

} // namespace

GridReport run_grid(const FrameDataset& data, const TrainConfig& base,
                    const backends::BackendRegistry& reg,
                    const std::vector<real>& lambda_c_values,
                    const std::vector<int>& t_values, const fs::path& out_dir) {
    if (lambda_c_values.empty() || t_values.empty())
        throw core::ContractError("run_grid: empty value lists");
    GridReport report;
    const auto sched = distill::NoiseSchedule::build({});
    int cell_no = 0;
    for (real lc : lambda_c_values) {
        for (int t : t_values) {
            GridCell cell;
            cell.lambda_c = lc;
            cell.t = t;
            try {
                TrainConfig cfg = base;
                cfg.weights.lambda_c = lc;
                cfg.t_index = t;
                char name[64];
                std::snprintf(name, sizeof(name), "cell_%02d", cell_no);
                Trainer tr(data, cfg, resolve_backends(reg, cfg, sched),
                           cell_dir(out_dir, name));
                tr.run();
                auto best = tr.best_operator();
                cell.structure_score = structure_score(best, data);
                cell.final_losses = tr.evaluate_full();
                cell.checkpoint = tr.best_eval().checkpoint;
            } catch (const std::exception& e) {
                cell.status = e.what();
            }
            report.cells.push_back(std::move(cell));
            ++cell_no;
        }
    }
    if (!out_dir.empty()) RunDirWriter(out_dir).write_report(to_json(report));
    return report;
}

AblationReport run_ablation(const FrameDataset& data, const TrainConfig& base,
                            const backends::BackendRegistry& reg,
                            const fs::path& out_dir) {
    AblationReport report;
    const auto sched = distill::NoiseSchedule::build({});
    const std::vector<std::pair<std::string, LossWeights>> variants = {
        {"drop_key", {0.0, base.weights.lambda_v, base.weights.lambda_c}},
        {"drop_vgg", {base.weights.lambda_k, 0.0, base.weights.lambda_c}},
        {"drop_csds", {base.weights.lambda_k, base.weights.lambda_v, 0.0}},
        {"full", base.weights},
    };
    for (const auto& [name, weights] : variants) {
        AblationRun run;
        run.name = name;
        run.weights = weights;
        if (auto errs = weights.violations(); !errs.empty()) {
            run.status = "rejected: " + errs.front();
            report.runs.push_back(std::move(run));
            continue;
        }
        try {
            TrainConfig cfg = base;
            cfg.weights = weights;
            Trainer tr(data, cfg, resolve_backends(reg, cfg, sched),
                       cell_dir(out_dir, name));
            tr.run();
            run.final_losses = tr.evaluate_full();
            run.draws = tr.draws();
            run.checkpoint = tr.best_eval().checkpoint;
            if (!out_dir.empty()) {
                run.probe_png = out_dir / name / "probe.png";
                core::save_png(
                    tr.best_operator().stylize(data.frames[tr.probe_frame()]).clamped(),
                    run.probe_png);
            }
        } catch (const std::exception& e) {
            run.status = e.what();
        }
        report.runs.push_back(std::move(run));
    }
    if (!out_dir.empty()) RunDirWriter(out_dir).write_report(to_json(report));
    return report;
}

ConditioningReport run_conditioning_comparison(const FrameDataset& data,
                                               const TrainConfig& base,
                                               const backends::BackendRegistry& reg,
                                               const std::vector<std::string>& kinds,
                                               const fs::path& out_dir) {
    ConditioningReport report;
    const auto sched = distill::NoiseSchedule::build({});
    for (const auto& kind : kinds) {
        ConditioningRow row;
        row.kind = kind;
        if (!reg.has(backends::Role::Guidance, kind)) {
            row.note = "skipped: unknown guidance kind";
            report.rows.push_back(std::move(row));
            continue;
        }
        if (auto a = reg.probe(backends::Role::Guidance, kind); !a.available) {
            row.note = "skipped: " + a.diagnostic;
            report.rows.push_back(std::move(row));
            continue;
        }
        try {
            // extraction time per frame, cold cache
            auto g = reg.make_guidance(kind);
            const auto t0 = std::chrono::steady_clock::now();
            for (const auto& f : data.frames) (void)g->condition(f);
            const auto t1 = std::chrono::steady_clock::now();
            row.guidance_ms_per_frame =
                std::chrono::duration<real, std::milli>(t1 - t0).count() /
                data.frame_count();

            TrainConfig cfg = base;
            cfg.guidance_kind = kind;
            Trainer tr(data, cfg, resolve_backends(reg, cfg, sched),
                       cell_dir(out_dir, kind));
            tr.run();
            row.final_losses = tr.evaluate_full();
            if (!out_dir.empty()) {
                row.probe_png = out_dir / kind / "probe.png";
                core::save_png(
                    tr.best_operator().stylize(data.frames[tr.probe_frame()]).clamped(),
                    row.probe_png);
            }
            row.completed = true;
        } catch (const std::exception& e) {
            row.note = std::string("skipped: ") + e.what();
        }
        report.rows.push_back(std::move(row));
    }
    if (!out_dir.empty()) RunDirWriter(out_dir).write_report(to_json(report));
    return report;
}

json to_json(const GridReport& r) {
    json cells = json::array();
    for (const auto& c : r.cells)
        cells.push_back({{"lambda_c", c.lambda_c},
                         {"t", c.t},
                         {"status", c.status},
                         {"structure_score", c.structure_score},
                         {"l_key", c.final_losses.l_key},
                         {"l_vgg", c.final_losses.l_vgg},
                         {"l_csds", c.final_losses.l_csds},
                         {"total", c.final_losses.total},
                         {"checkpoint", c.checkpoint.string()}});
    return json{{"harness", "grid"}, {"cells", cells}};
}

json to_json(const AblationReport& r) {
    json runs = json::array();
    for (const auto& run : r.runs)
        runs.push_back({{"name", run.name},
                        {"status", run.status},
                        {"lambda_k", run.weights.lambda_k},
                        {"lambda_v", run.weights.lambda_v},
                        {"lambda_c", run.weights.lambda_c},
                        {"l_key", run.final_losses.l_key},
                        {"l_vgg", run.final_losses.l_vgg},
                        {"l_csds", run.final_losses.l_csds},
                        {"total", run.final_losses.total},
                        {"checkpoint", run.checkpoint.string()},
                        {"probe", run.probe_png.string()}});
    return json{{"harness", "ablation"}, {"runs", runs}};
}

json to_json(const ConditioningReport& r) {
    json rows = json::array();
    for (const auto& row : r.rows)
        rows.push_back({{"kind", row.kind},
                        {"completed", row.completed},
                        {"note", row.note},
                        {"guidance_ms_per_frame", row.guidance_ms_per_frame},
                        {"l_key", row.final_losses.l_key},
                        {"l_vgg", row.final_losses.l_vgg},
                        {"l_csds", row.final_losses.l_csds},
                        {"total", row.final_losses.total},
                        {"probe", row.probe_png.string()}});
    return json{{"harness", "conditioning"}, {"rows", rows}};
}

} // namespace sr::train

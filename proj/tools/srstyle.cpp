#include <cstdio>
#include <cstring>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "sr/core/errors.hpp"
#include "sr/core/image_io.hpp"
#include "sr/train/harness.hpp"
#include "sr/train/rundir.hpp"
#include "sr/train/trainer.hpp"

namespace {

namespace fs = std::filesystem;
using namespace sr;

constexpr int kExitValidation = 2;
constexpr int kExitBackend = 3;
constexpr int kExitDimension = 4;
constexpr int kExitStream = 5;
constexpr int kExitUsage = 64;

constexpr char kStreamMagic[6] = {'S', 'R', 'R', 'A', 'W', '1'};

std::string hex64(uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

backends::BackendRegistry registry_from_env() {
    if (const char* dir = std::getenv("SR_BACKEND_DIR")) {
        const fs::path cfg = fs::path(dir) / "backends.json";
        if (fs::exists(cfg))
            return backends::register_real_backends(backends::load_backend_config(cfg));
    }
    return backends::BackendRegistry();
}

std::vector<double> parse_reals(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(std::stod(item));
    return out;
}

std::vector<int> parse_ints(const std::string& csv) {
    std::vector<int> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(std::stoi(item));
    return out;
}

std::vector<std::string> parse_names(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

struct DataArgs {
    std::string frames, keyframes, config, out;
};

core::FrameDataset load_and_validate(const DataArgs& a, const core::TrainConfig& cfg) {
    auto data = core::load_dataset(a.frames, a.keyframes, cfg.resolution);
    auto violations = core::validate_dataset(data);
    bool fatal = false;
    for (const auto& v : violations) {
        std::cerr << (v.warning ? "warning" : "violation");
        if (v.index >= 0) std::cerr << " [frame " << v.index << "]";
        std::cerr << ": " << v.rule << "\n";
        fatal |= !v.warning;
    }
    if (fatal) throw core::ConfigError("dataset validation failed");
    return data;
}

train::RunManifest start_manifest(const std::string& command,
                                  const core::TrainConfig& cfg,
                                  const core::FrameDataset& data,
                                  const train::TrainBackends& b) {
    train::RunManifest m;
    m.command = command;
    m.config = cfg.to_key_values();
    m.dataset_fingerprint = hex64(data.fingerprint());
    m.backends["extractor"] =
        cfg.extractor + "@" + hex64(b.extractor ? b.extractor->params_fingerprint() : 0);
    m.backends["denoiser"] =
        cfg.denoiser + "@" + hex64(b.denoiser ? b.denoiser->params_fingerprint() : 0);
    m.backends["guidance"] =
        cfg.guidance_kind + "@" +
        hex64(b.guidance ? b.guidance->params_fingerprint() : 0);
    m.seed = cfg.seed;
    m.started_at = train::iso8601_now();
    return m;
}

int cmd_train(const DataArgs& args, const std::string& marks_csv) {
    const auto cfg = core::load_config(args.config);
    if (auto errs = cfg.violations(); !errs.empty()) {
        for (const auto& e : errs) std::cerr << "config violation: " << e << "\n";
        return kExitValidation;
    }
    const auto data = load_and_validate(args, cfg);
    const auto reg = registry_from_env();
    const auto sched = distill::NoiseSchedule::build({});
    auto backends = train::resolve_backends(reg, cfg, sched);

    train::RunDirWriter rundir(args.out);
    auto manifest = start_manifest("train", cfg, data, backends);
    rundir.write_manifest(manifest);
    rundir.write_config_copy(cfg.to_key_values());

    train::Trainer trainer(data, cfg, backends, args.out);
    if (!marks_csv.empty()) trainer.set_wallclock_marks(parse_reals(marks_csv));
    trainer.run();

    const auto& best = trainer.best_eval();
    nlohmann::json report{{"harness", "train"},
                          {"steps", trainer.step_count()},
                          {"best_step", best.step},
                          {"best_total", best.total},
                          {"best_checkpoint", best.checkpoint.string()}};
    if (!marks_csv.empty()) {
        auto marks = parse_reals(marks_csv);
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& row : trainer.convergence_report(marks))
            rows.push_back({{"minutes", row.minutes},
                            {"reached", row.reached},
                            {"step", row.step},
                            {"total", row.total},
                            {"snapshot", row.snapshot.string()}});
        report["convergence"] = rows;
    }
    rundir.write_report(report);

    manifest.finished_at = train::iso8601_now();
    manifest.artifacts = {"trace.csv", "report.json", "checkpoints/", "snapshots/"};
    rundir.write_manifest(manifest);

    std::cout << best.checkpoint.string() << "\n";
    return 0;
}

int stylize_directory(const op::Stylizer& oper, const std::string& frames,
                      const std::string& out) {
    fs::create_directories(out);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(frames))
        if (e.is_regular_file() && e.path().extension() == ".png")
            files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        const auto img = core::load_png(f);
        core::save_png(oper.stylize(img).clamped(), fs::path(out) / f.filename());
    }
    std::cout << files.size() << " frames stylized\n";
    return 0;
}

int stylize_pipe(const op::Stylizer& oper) {
    char magic[6];
    if (std::fread(magic, 1, 6, stdin) != 6 ||
        std::memcmp(magic, kStreamMagic, 6) != 0) {
        std::cerr << "malformed stream header (expected SRRAW1)\n";
        return kExitStream;
    }
    uint32_t w = 0, h = 0;
    if (std::fread(&w, 4, 1, stdin) != 1 || std::fread(&h, 4, 1, stdin) != 1 ||
        w == 0 || h == 0 || w > (1u << 16) || h > (1u << 16)) {
        std::cerr << "malformed stream header (bad dimensions)\n";
        return kExitStream;
    }
    std::fwrite(kStreamMagic, 1, 6, stdout);
    std::fwrite(&w, 4, 1, stdout);
    std::fwrite(&h, 4, 1, stdout);

    const size_t frame_bytes = static_cast<size_t>(w) * h * 3;
    std::vector<unsigned char> buf(frame_bytes);
    for (;;) {
        const size_t got = std::fread(buf.data(), 1, frame_bytes, stdin);
        if (got == 0) break; // clean end of stream
        if (got != frame_bytes) {
            std::cerr << "truncated frame on stream (got " << got << " of "
                      << frame_bytes << " bytes)\n";
            return kExitStream;
        }
        core::ImagePlane img(static_cast<int>(w), static_cast<int>(h), 3);
        for (size_t i = 0; i < frame_bytes; ++i) img.data()[i] = buf[i] / 255.0;
        const auto styled = oper.stylize(img).clamped();
        for (size_t i = 0; i < frame_bytes; ++i)
            buf[i] = static_cast<unsigned char>(
                std::lround(styled.data()[i] * 255.0));
        std::fwrite(buf.data(), 1, frame_bytes, stdout);
        std::fflush(stdout);
    }
    return 0;
}

int cmd_stylize(const std::string& model, const std::string& frames,
                const std::string& out, bool pipe) {
    const auto oper = op::Stylizer::load(model);
    if (pipe) return stylize_pipe(oper);
    return stylize_directory(oper, frames, out);
}

int cmd_experiments(const std::string& sub, const DataArgs& args,
                    const std::string& lambda_csv, const std::string& t_csv,
                    const std::string& preset_csv, const std::string& kinds_csv) {
    auto cfg = core::load_config(args.config);
    if (auto errs = cfg.violations(); !errs.empty()) {
        for (const auto& e : errs) std::cerr << "config violation: " << e << "\n";
        return kExitValidation;
    }
    const auto data = load_and_validate(args, cfg);
    const auto reg = registry_from_env();
    const auto sched = distill::NoiseSchedule::build({});

    train::RunDirWriter rundir(args.out);
    auto manifest = start_manifest("experiments " + sub, cfg, data,
                                   train::resolve_backends(reg, cfg, sched));
    rundir.write_manifest(manifest);
    rundir.write_config_copy(cfg.to_key_values());

    if (sub == "ablate") {
        auto report = train::run_ablation(data, cfg, reg, args.out);
        std::cout << report.runs.size() << " ablation runs\n";
    } else if (sub == "grid") {
        std::vector<double> lambdas = parse_reals(lambda_csv);
        for (const auto& name : parse_names(preset_csv)) {
            auto it = train::lambda_c_presets().find(name);
            if (it == train::lambda_c_presets().end())
                throw core::ConfigError("unknown preset: " + name);
            lambdas.push_back(it->second);
        }
        auto ts = parse_ints(t_csv);
        if (lambdas.empty()) lambdas = {cfg.weights.lambda_c};
        if (ts.empty()) ts = {cfg.t_index};
        auto report = train::run_grid(data, cfg, reg, lambdas, ts, args.out);
        std::cout << report.cells.size() << " grid cells\n";
    } else if (sub == "conditioning") {
        auto kinds = parse_names(kinds_csv);
        if (kinds.empty()) kinds = {"canny", "toy"};
        auto report = train::run_conditioning_comparison(data, cfg, reg, kinds, args.out);
        std::cout << report.rows.size() << " conditioning rows\n";
    } else if (sub == "lineart-baseline") {
        cfg.structure_loss = "lineart";
        train::Trainer trainer(data, cfg, train::resolve_backends(reg, cfg, sched),
                               args.out);
        trainer.run();
        const auto& best = trainer.best_eval();
        rundir.write_report(nlohmann::json{{"harness", "lineart-baseline"},
                                           {"best_step", best.step},
                                           {"best_total", best.total},
                                           {"best_checkpoint", best.checkpoint.string()}});
        std::cout << best.checkpoint.string() << "\n";
    } else {
        std::cerr << "unknown experiments subcommand: " << sub << "\n";
        return kExitUsage;
    }

    manifest.finished_at = train::iso8601_now();
    manifest.artifacts = {"report.json"};
    rundir.write_manifest(manifest);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"srstyle: keyframe-driven video stylization"};
    app.require_subcommand(1);

    DataArgs train_args;
    std::string train_marks;
    auto* train_cmd = app.add_subcommand("train", "train a stylization operator");
    train_cmd->add_option("--frames", train_args.frames, "frame PNG directory")->required();
    train_cmd->add_option("--keyframes", train_args.keyframes, "stylized keyframe directory")->required();
    train_cmd->add_option("--config", train_args.config, "key=value config file")->required();
    train_cmd->add_option("--out", train_args.out, "run output directory")->required();
    train_cmd->add_option("--marks", train_marks, "wallclock snapshot marks, minutes (csv)");

    std::string sty_model, sty_frames, sty_out;
    bool sty_pipe = false;
    auto* sty_cmd = app.add_subcommand("stylize", "stylize frames with a checkpoint");
    sty_cmd->add_option("--model", sty_model, "checkpoint file")->required();
    sty_cmd->add_option("--frames", sty_frames, "input PNG directory");
    sty_cmd->add_option("--out", sty_out, "output PNG directory");
    sty_cmd->add_flag("--pipe", sty_pipe, "SRRAW1 stream on stdin/stdout");

    DataArgs exp_args;
    std::string exp_sub, exp_lambda, exp_t, exp_preset, exp_kinds;
    auto* exp_cmd = app.add_subcommand("experiments", "run an experiment harness");
    exp_cmd->add_option("subcommand", exp_sub, "ablate|grid|conditioning|lineart-baseline")->required();
    exp_cmd->add_option("--frames", exp_args.frames, "frame PNG directory")->required();
    exp_cmd->add_option("--keyframes", exp_args.keyframes, "stylized keyframe directory")->required();
    exp_cmd->add_option("--config", exp_args.config, "key=value config file")->required();
    exp_cmd->add_option("--out", exp_args.out, "run output directory")->required();
    exp_cmd->add_option("--lambda-c", exp_lambda, "grid lambda_c values (csv)");
    exp_cmd->add_option("--t", exp_t, "grid t values (csv)");
    exp_cmd->add_option("--preset", exp_preset, "grid presets: style,balanced,structure");
    exp_cmd->add_option("--kinds", exp_kinds, "conditioning guidance kinds (csv)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (train_cmd->parsed()) return cmd_train(train_args, train_marks);
        if (sty_cmd->parsed()) {
            if (!sty_pipe && (sty_frames.empty() || sty_out.empty())) {
                std::cerr << "stylize needs --pipe or both --frames and --out\n";
                return kExitUsage;
            }
            return cmd_stylize(sty_model, sty_frames, sty_out, sty_pipe);
        }
        if (exp_cmd->parsed())
            return cmd_experiments(exp_sub, exp_args, exp_lambda, exp_t, exp_preset,
                                   exp_kinds);
    } catch (const core::DimensionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDimension;
    } catch (const core::ContractError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return sty_cmd->parsed() ? kExitDimension : kExitValidation;
    } catch (const core::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const core::BackendError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitUsage;
}

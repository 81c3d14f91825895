#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "CLI11.hpp"
#include "json.hpp"

#include "mclsc/config.hpp"
#include "mclsc/io.hpp"
#include "mclsc/metrics.hpp"
#include "mclsc/runtime.hpp"
#include "mclsc/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mclsc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

AppConfig load_effective_config(const std::string& config_flag) {
    std::string path = config_flag;
    if (path.empty()) {
        if (const char* env = std::getenv("MCLSC_CONFIG")) path = env;
    }
    if (path.empty()) return default_config();
    return load_config(path);
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthOptions {
    std::string out_dir;
    std::string preset = "benchmark";
    std::uint64_t seed = 7;
    int frames = 600;
    int width = 640;
    int height = 360;
    bool color = false;
};

int cmd_synth(const SynthOptions& opt) {
    SceneSpec spec;
    if (opt.preset == "benchmark") {
        spec = benchmark_scene(opt.seed);
    } else if (opt.preset == "mini") {
        spec = mini_scene(opt.seed);
    } else if (opt.preset == "static") {
        spec = static_scene(opt.width, opt.height, opt.frames, opt.seed);
    } else if (opt.preset == "shake") {
        spec = shake_scene(opt.width, opt.height, opt.frames, opt.seed, 6.0, 1.0);
    } else {
        std::cerr << "unknown preset: " << opt.preset << "\n";
        return kExitUsage;
    }

    const fs::path dir(opt.out_dir);
    fs::create_directories(dir);
    fs::create_directories(dir / "truth_labels");

    SceneRenderer renderer(spec);
    std::vector<AffineTransform> transforms;
    transforms.reserve(spec.frame_count);
    for (int t = 0; t < spec.frame_count; ++t) {
        const auto frame = renderer.render(t);
        if (opt.color) {
            write_ppm(dir / frame_file_name(t, true), frame.color);
        } else {
            write_pgm(dir / frame_file_name(t, false), frame.gray);
        }
        write_pgm16(dir / "truth_labels" / frame_file_name(t, false), frame.truth_labels);
        transforms.push_back(frame.truth_transform);
    }
    write_sequence_index(dir, spec.viewport_w, spec.viewport_h, spec.frame_count,
                         opt.color);
    write_sequence_truth_transforms(dir, transforms);
    std::cout << "wrote " << spec.frame_count << " frames to " << dir.string() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// run
// ---------------------------------------------------------------------------

struct RunOptions {
    std::string scene_dir;
    std::string mode;
    std::string config_path;
    std::string log_path;
    std::string backend;
    double mock_latency_ms = -1.0;
    double mock_noise = -1.0;
    std::int64_t mock_seed = -1;
    std::string backend_cmd;
    std::vector<std::string> backend_args;
    int backend_timeout_ms = 0;
    std::string debug_tiles_dir;
    std::string save_canvas_dir;
    bool realtime = false;
    double fps = 0.0;
    int result_delay = 0;
};

std::unique_ptr<SegmentationBackend> make_backend(const AppConfig& cfg,
                                                  const FrameSequenceInfo& info) {
    if (cfg.backend.type == "mock") {
        auto truth = make_sequence_truth_provider(info);
        return std::make_unique<MockBackend>(truth, cfg.backend.mock_latency_ms,
                                             cfg.backend.mock_label_noise,
                                             cfg.backend.mock_seed);
    }
    if (cfg.backend.command.empty()) {
        throw ConfigError("external backend needs a command");
    }
    return std::make_unique<ExternalBackend>(cfg.backend.command, cfg.backend.args,
                                             cfg.backend.timeout_ms);
}

void merge_run_flags(AppConfig& cfg, const RunOptions& opt) {
    if (!opt.mode.empty()) {
        if (opt.mode == "naive") cfg.pipeline.mode = PipelineMode::Naive;
        else if (opt.mode == "gated") cfg.pipeline.mode = PipelineMode::Gated;
        else throw ConfigError("--mode must be naive or gated");
    }
    if (!opt.backend.empty()) {
        if (opt.backend != "mock" && opt.backend != "external") {
            throw ConfigError("--backend must be mock or external");
        }
        cfg.backend.type = opt.backend;
    }
    if (opt.mock_latency_ms >= 0.0) cfg.backend.mock_latency_ms = opt.mock_latency_ms;
    if (opt.mock_noise >= 0.0) cfg.backend.mock_label_noise = opt.mock_noise;
    if (opt.mock_seed >= 0) cfg.backend.mock_seed = static_cast<std::uint64_t>(opt.mock_seed);
    if (!opt.backend_cmd.empty()) cfg.backend.command = opt.backend_cmd;
    if (!opt.backend_args.empty()) cfg.backend.args = opt.backend_args;
    if (opt.backend_timeout_ms > 0) cfg.backend.timeout_ms = opt.backend_timeout_ms;
    if (opt.realtime) cfg.pipeline.realtime = true;
    if (opt.fps > 0.0) cfg.pipeline.target_fps = opt.fps;
    if (opt.result_delay > 0) cfg.result_delay_frames = opt.result_delay;
    resolve_result_delay(cfg);
}

int cmd_run(const RunOptions& opt) {
    AppConfig cfg = load_effective_config(opt.config_path);
    merge_run_flags(cfg, opt);

    const FrameSequenceInfo info = open_frame_sequence(opt.scene_dir);
    DiskFrameSource source(info);
    const auto backend = make_backend(cfg, info);

    std::unique_ptr<JsonlLogWriter> log;
    if (!opt.log_path.empty()) log = std::make_unique<JsonlLogWriter>(opt.log_path);

    DebugEmitter debug;
    if (!opt.debug_tiles_dir.empty()) {
        const fs::path tile_dir(opt.debug_tiles_dir);
        fs::create_directories(tile_dir);
        debug = [tile_dir](int frame_index, const ColorImage& tiles) {
            char name[48];
            std::snprintf(name, sizeof(name), "tiles_%06d.ppm", frame_index);
            write_ppm(tile_dir / name, tiles);
        };
    } else {
        cfg.pipeline.debug_every = 0;
    }

    const RunResult result = run_pipeline(cfg.pipeline, source, *backend, log.get(), debug);

    if (!opt.save_canvas_dir.empty()) {
        const fs::path canvas_dir(opt.save_canvas_dir);
        fs::create_directories(canvas_dir);
        write_pgm16(canvas_dir / "static_layer.pgm", result.canvas.static_layer);
        write_pgm16(canvas_dir / "dynamic_layer.pgm", result.canvas.dynamic_layer);
    }

    std::cout << render_summary_row(cfg.pipeline.mode == PipelineMode::Naive ? "NAIVE"
                                                                             : "GATED",
                                    result.summary)
              << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

struct CompareOptions {
    std::string naive_log;
    std::string gated_log;
    std::string out_prefix;
    std::string series_prefix;
};

RunSummary summary_from_log(const RunLog& log, const std::string& name) {
    if (!log.summary.has_value()) {
        throw IoError(name + ": log has no summary line");
    }
    if (log.stats.empty()) {
        throw IoError(name + ": log has no frame records");
    }
    // Recompute from the records; the stored summary line is the producer's
    // view and must match.
    return summarize(log.stats);
}

void write_series_csv(const fs::path& path, const RunLog& log) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "frame_index,t_total_ms,seg_submitted\n";
    std::set<int> submits(log.submit_frames.begin(), log.submit_frames.end());
    for (size_t i = 0; i < log.stats.size(); ++i) {
        out << i << "," << log.stats[i].t_total_ms << ","
            << (log.stats[i].seg_submitted ? 1 : 0) << "\n";
    }
}

int cmd_compare(const CompareOptions& opt) {
    const RunLog naive_log = read_run_log(opt.naive_log);
    const RunLog gated_log = read_run_log(opt.gated_log);
    const RunSummary naive = summary_from_log(naive_log, "naive");
    const RunSummary gated = summary_from_log(gated_log, "gated");
    const Comparison cmp = compare(naive, gated);

    const std::string table = render_comparison_table(cmp);
    std::cout << table;

    if (!opt.out_prefix.empty()) {
        std::ofstream txt(opt.out_prefix + ".txt");
        txt << table;
        const json doc{
            {"naive", {{"frames", cmp.naive.frames}, {"seg_calls", cmp.naive.seg_calls},
                       {"call_rate", cmp.naive.call_rate}, {"mean_ms", cmp.naive.mean_ms},
                       {"p50_ms", cmp.naive.p50_ms}, {"p95_ms", cmp.naive.p95_ms},
                       {"p99_ms", cmp.naive.p99_ms}, {"eff_fps", cmp.naive.eff_fps}}},
            {"gated", {{"frames", cmp.gated.frames}, {"seg_calls", cmp.gated.seg_calls},
                       {"call_rate", cmp.gated.call_rate}, {"mean_ms", cmp.gated.mean_ms},
                       {"p50_ms", cmp.gated.p50_ms}, {"p95_ms", cmp.gated.p95_ms},
                       {"p99_ms", cmp.gated.p99_ms}, {"eff_fps", cmp.gated.eff_fps}}},
            {"speedup_calls", cmp.speedup_calls},
            {"speedup_mean", cmp.speedup_mean},
        };
        std::ofstream jf(opt.out_prefix + ".json");
        jf << doc.dump(2) << "\n";
    }
    if (!opt.series_prefix.empty()) {
        write_series_csv(opt.series_prefix + "_naive.csv", naive_log);
        write_series_csv(opt.series_prefix + "_gated.csv", gated_log);
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepOptions {
    std::string scene_dir;
    std::string config_path;
    std::vector<double> tau_s{1.0, 2.0, 4.0};
    std::vector<double> tau_a{0.005, 0.01, 0.02};
    std::vector<int> min_spacing{10};
    std::string out_csv;
    double mock_latency_ms = 0.0;
    std::int64_t mock_seed = 7;
};

// First frame each dynamic-class label value shows up in the ground truth.
std::vector<int> mover_appearances(const FrameSequenceInfo& info, const Taxonomy& taxonomy) {
    std::map<std::uint16_t, int> first_seen;
    for (int t = 0; t < info.frame_count; ++t) {
        const LabelImage labels = load_sequence_truth_labels(info, t);
        std::set<std::uint16_t> present(labels.data.begin(), labels.data.end());
        for (const auto v : present) {
            if (v == 0) continue;
            if (!taxonomy.contains(label_class(v)) || !taxonomy.is_dynamic(label_class(v))) {
                continue;
            }
            first_seen.try_emplace(v, t);
        }
    }
    std::vector<int> frames;
    frames.reserve(first_seen.size());
    for (const auto& [_, t] : first_seen) frames.push_back(t);
    return frames;
}

double staleness_frames(const std::vector<int>& appearances,
                        const std::vector<int>& submit_frames, int frame_count) {
    if (appearances.empty()) return 0.0;
    double total = 0.0;
    for (const int appear : appearances) {
        int lag = frame_count - appear;  // penalty when nothing ever lands
        for (const int s : submit_frames) {
            if (s >= appear) {
                lag = s - appear;
                break;
            }
        }
        total += lag;
    }
    return total / static_cast<double>(appearances.size());
}

int cmd_sweep(const SweepOptions& opt) {
    AppConfig base = load_effective_config(opt.config_path);
    base.pipeline.mode = PipelineMode::Gated;
    base.backend.type = "mock";
    base.backend.mock_latency_ms = opt.mock_latency_ms;
    base.backend.mock_seed = static_cast<std::uint64_t>(opt.mock_seed);
    base.pipeline.debug_every = 0;

    if (opt.tau_s.empty() || opt.tau_a.empty() || opt.min_spacing.empty()) {
        std::cerr << "sweep grids must be non-empty\n";
        return kExitUsage;
    }

    const FrameSequenceInfo info = open_frame_sequence(opt.scene_dir);
    const auto appearances = mover_appearances(info, base.pipeline.taxonomy);

    std::ofstream csv(opt.out_csv);
    if (!csv) {
        std::cerr << "cannot write " << opt.out_csv << "\n";
        return kExitRuntime;
    }
    csv << "tau_s,tau_a,min_spacing,call_rate,mean_ms,staleness\n";

    for (const double tau_s : opt.tau_s) {
        for (const double tau_a : opt.tau_a) {
            for (const int spacing : opt.min_spacing) {
                AppConfig cfg = base;
                cfg.pipeline.gate.tau_s = tau_s;
                cfg.pipeline.gate.tau_a = tau_a;
                cfg.pipeline.gate.min_spacing = spacing;
                resolve_result_delay(cfg);

                DiskFrameSource source(info);
                const auto backend = make_backend(cfg, info);
                const RunResult result =
                    run_pipeline(cfg.pipeline, source, *backend, nullptr, {});

                std::vector<int> submit_frames;
                for (const auto& r : result.records) {
                    if (r.seg_submitted) submit_frames.push_back(r.frame_index);
                }
                csv << tau_s << "," << tau_a << "," << spacing << ","
                    << result.summary.call_rate << "," << result.summary.mean_ms << ","
                    << staleness_frames(appearances, submit_frames, info.frame_count)
                    << "\n";
            }
        }
    }
    std::cout << "sweep written to " << opt.out_csv << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Motion-compensated latent semantic canvases pipeline"};
    app.require_subcommand(1);

    SynthOptions synth_opt;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic scene on disk");
    synth->add_option("-o,--out", synth_opt.out_dir, "Output directory")->required();
    synth->add_option("--preset", synth_opt.preset, "benchmark | mini | static | shake");
    synth->add_option("--seed", synth_opt.seed, "Scene seed");
    synth->add_option("--frames", synth_opt.frames, "Frame count (static/shake presets)");
    synth->add_option("--width", synth_opt.width, "Viewport width (static/shake presets)");
    synth->add_option("--height", synth_opt.height, "Viewport height (static/shake presets)");
    synth->add_flag("--color", synth_opt.color, "Write P6 color frames instead of P5 gray");

    RunOptions run_opt;
    auto* run = app.add_subcommand("run", "Run the pipeline over a scene directory");
    run->add_option("scene", run_opt.scene_dir, "Scene directory")->required();
    run->add_option("--mode", run_opt.mode, "naive | gated");
    run->add_option("--config", run_opt.config_path, "Config file (or $MCLSC_CONFIG)");
    run->add_option("--log", run_opt.log_path, "JSONL log output path");
    run->add_option("--backend", run_opt.backend, "mock | external");
    run->add_option("--mock-latency-ms", run_opt.mock_latency_ms, "Mock backend latency");
    run->add_option("--mock-noise", run_opt.mock_noise, "Mock label corruption fraction");
    run->add_option("--mock-seed", run_opt.mock_seed, "Mock corruption seed");
    run->add_option("--backend-cmd", run_opt.backend_cmd, "External backend command");
    run->add_option("--backend-arg", run_opt.backend_args, "External backend argument");
    run->add_option("--backend-timeout-ms", run_opt.backend_timeout_ms,
                    "External backend reply timeout");
    run->add_option("--debug-tiles", run_opt.debug_tiles_dir, "Debug tile output directory");
    run->add_option("--save-canvas", run_opt.save_canvas_dir,
                    "Directory for final canvas layers (16-bit PGM)");
    run->add_flag("--realtime", run_opt.realtime, "Wall-clock pacing with frame dropping");
    run->add_option("--fps", run_opt.fps, "Target display rate");
    run->add_option("--result-delay", run_opt.result_delay,
                    "Frames between submit and canvas landing (benchmark mode)");

    CompareOptions cmp_opt;
    auto* cmp = app.add_subcommand("compare", "Compare a NAIVE log against a GATED log");
    cmp->add_option("naive_log", cmp_opt.naive_log, "NAIVE run JSONL")->required();
    cmp->add_option("gated_log", cmp_opt.gated_log, "GATED run JSONL")->required();
    cmp->add_option("--out", cmp_opt.out_prefix, "Report prefix (.txt and .json)");
    cmp->add_option("--series-csv", cmp_opt.series_prefix,
                    "Time-series CSV prefix (frame_index, t_total_ms, seg_submitted)");

    SweepOptions sweep_opt;
    auto* sweep = app.add_subcommand("sweep", "Gate-threshold ablation sweep (GATED + mock)");
    sweep->add_option("scene", sweep_opt.scene_dir, "Scene directory")->required();
    sweep->add_option("--config", sweep_opt.config_path, "Config file");
    sweep->add_option("--tau-s", sweep_opt.tau_s, "Motion score thresholds")->delimiter(',');
    sweep->add_option("--tau-a", sweep_opt.tau_a, "Area ratio thresholds")->delimiter(',');
    sweep->add_option("--min-spacing", sweep_opt.min_spacing, "Min spacings")->delimiter(',');
    sweep->add_option("--out", sweep_opt.out_csv, "Output CSV path")->required();
    sweep->add_option("--mock-latency-ms", sweep_opt.mock_latency_ms, "Mock latency");
    sweep->add_option("--seed", sweep_opt.mock_seed, "Mock seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (synth->parsed()) return cmd_synth(synth_opt);
        if (run->parsed()) return cmd_run(run_opt);
        if (cmp->parsed()) return cmd_compare(cmp_opt);
        if (sweep->parsed()) return cmd_sweep(sweep_opt);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}

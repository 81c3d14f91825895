#pragma once

#include <chrono>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "mclsc/canvas.hpp"
#include "mclsc/gating.hpp"
#include "mclsc/metrics.hpp"
#include "mclsc/segmentation.hpp"
#include "mclsc/stabilizer.hpp"
#include "mclsc/synth.hpp"

namespace mclsc {

enum class PipelineMode { Naive, Gated };

struct PipelineConfig {
    PipelineMode mode = PipelineMode::Gated;
    double target_fps = 30.0;
    int buffer_capacity = 8;
    int prebuffer = 4;
    // Wall-clock pacing with frame arrival simulation and dropping. Off by
    // default: benchmark runs process every frame as fast as possible and
    // t_total measures compute.
    bool realtime = false;
    // Benchmark-mode delivery: a result submitted at frame i is applied at
    // frame i + result_delay_frames (waiting if the worker is still busy),
    // which keeps gate decisions and canvases frame-deterministic.
    int result_delay_frames = 7;
    int debug_every = 30;  // emit debug tiles every K frames; 0 disables
    GateConfig gate;
    TrustConfig trust;
    FeatureConfig features;
    LkConfig lk;
    RansacConfig ransac;
    CanvasConfig canvas;
    Taxonomy taxonomy;
    Palette palette;
};

struct TimingRecord {
    int frame_index = 0;
    double t_total_ms = 0.0;
    double t_stabilize_ms = 0.0;
    double t_warp_ms = 0.0;
    double t_gate_ms = 0.0;
    double t_canvas_ms = 0.0;
    int seg_submitted = 0;
    int seg_arrived = 0;
    GateDecision gate;
    bool stab_accepted = false;
    int dropped_before = 0;
};

struct FrameData {
    int index = 0;
    GrayImage gray;
    std::optional<ColorImage> color;
};

class FrameSource {
public:
    virtual ~FrameSource() = default;
    virtual int frame_count() const = 0;
    virtual FrameData frame_at(int index) = 0;
};

// Frame source over an in-memory synthetic scene.
class SceneFrameSource : public FrameSource {
public:
    explicit SceneFrameSource(std::shared_ptr<const SceneRenderer> renderer,
                              bool with_color = false)
        : renderer_(std::move(renderer)), with_color_(with_color) {}
    int frame_count() const override { return renderer_->frame_count(); }
    FrameData frame_at(int index) override;

private:
    std::shared_ptr<const SceneRenderer> renderer_;
    bool with_color_;
};

struct FrameSequenceInfo;

// Frame source over an on-disk sequence (io.hpp layout).
class DiskFrameSource : public FrameSource {
public:
    explicit DiskFrameSource(FrameSequenceInfo info);
    ~DiskFrameSource() override;
    int frame_count() const override;
    FrameData frame_at(int index) override;

private:
    std::unique_ptr<FrameSequenceInfo> info_;
};

// Bounded frame buffer; pushing past capacity evicts the oldest entries.
class FrameBuffer {
public:
    explicit FrameBuffer(int capacity);
    int push(FrameData frame);  // returns the number of evicted frames
    bool empty() const { return entries_.empty(); }
    size_t size() const { return entries_.size(); }
    FrameData pop_oldest();
    // Realtime policy: take the newest entry, dropping everything older;
    // returns the frame and the count of skipped frames.
    std::pair<FrameData, int> pop_newest();

private:
    int capacity_;
    std::deque<FrameData> entries_;
};

// Wait needed so successive displays are >= 1000/target_fps ms apart.
std::chrono::duration<double, std::milli> pace(
    double target_fps, std::chrono::steady_clock::time_point last_display_instant,
    std::chrono::steady_clock::time_point now);

// One policy point distinguishes NAIVE from GATED; everything else in the
// loop is shared. `blocking` makes the loop wait out the in-flight request
// before submitting (NAIVE semantics: every frame gets segmented).
struct SubmitPolicy {
    bool blocking = false;
    std::function<bool(const GateDecision&, bool worker_idle)> should_submit;
};

SubmitPolicy policy_for_mode(PipelineMode mode);

class LogSink {
public:
    virtual ~LogSink() = default;
    virtual void write_record(const TimingRecord& record) = 0;
    virtual void write_summary(const RunSummary& summary, PipelineMode mode) = 0;
};

// JSONL writer with the stable field names consumed by the compare tooling.
class JsonlLogWriter : public LogSink {
public:
    explicit JsonlLogWriter(const std::filesystem::path& path);
    ~JsonlLogWriter() override;
    void write_record(const TimingRecord& record) override;
    void write_summary(const RunSummary& summary, PipelineMode mode) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Parsed back from a JSONL run log.
struct RunLog {
    std::vector<FrameStat> stats;
    std::vector<int> submit_frames;  // frame_index where seg_submitted = 1
    std::optional<RunSummary> summary;
};

RunLog read_run_log(const std::filesystem::path& path);

// The six debug tiles in one image: original, edge map, baseline,
// stabilized viewport, static overlay, dynamic overlay (3 columns x 2 rows).
using DebugEmitter = std::function<void(int frame_index, const ColorImage& tiles)>;

struct RunResult {
    RunSummary summary;
    std::vector<TimingRecord> records;
    CanvasState canvas;  // final state, for saving and determinism checks
};

// Drives the full per-frame loop: stabilize, warp, gate, submit policy,
// asynchronous result landing, canvas writes, pacing/dropping in realtime
// mode. Backend failures are reported to stderr and skipped; baseline
// detection failure raises BaselineInitFailure.
RunResult run_pipeline(const PipelineConfig& cfg, FrameSource& source,
                       SegmentationBackend& backend, LogSink* log = nullptr,
                       const DebugEmitter& debug = {});

// Same loop with an injected submit policy (exercised directly by tests).
RunResult run_pipeline_with_policy(const PipelineConfig& cfg, const SubmitPolicy& policy,
                                   FrameSource& source, SegmentationBackend& backend,
                                   LogSink* log = nullptr, const DebugEmitter& debug = {});

}  // namespace mclsc

#include "mclsc/runtime.hpp"

#include <cassert>
#include <cmath>
#include <condition_variable>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "json.hpp"

#include "mclsc/features.hpp"
#include "mclsc/io.hpp"

namespace mclsc {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

double ms_between(Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double, std::milli>(b - a).count();
}

}  // namespace

FrameData SceneFrameSource::frame_at(int index) {
    FrameData f;
    f.index = index;
    if (with_color_) {
        auto rendered = renderer_->render(index);
        f.gray = std::move(rendered.gray);
        f.color = std::move(rendered.color);
    } else {
        f.gray = renderer_->render_gray(index);
    }
    return f;
}

DiskFrameSource::DiskFrameSource(FrameSequenceInfo info)
    : info_(std::make_unique<FrameSequenceInfo>(std::move(info))) {}

DiskFrameSource::~DiskFrameSource() = default;

int DiskFrameSource::frame_count() const { return info_->frame_count; }

FrameData DiskFrameSource::frame_at(int index) {
    FrameData f;
    f.index = index;
    f.gray = load_sequence_gray(*info_, index);
    f.color = load_sequence_color(*info_, index);
    return f;
}

FrameBuffer::FrameBuffer(int capacity) : capacity_(capacity) {
    if (capacity < 1) throw InvalidArgument("FrameBuffer: capacity must be >= 1");
}

int FrameBuffer::push(FrameData frame) {
    entries_.push_back(std::move(frame));
    int dropped = 0;
    while (static_cast<int>(entries_.size()) > capacity_) {
        entries_.pop_front();
        ++dropped;
    }
    return dropped;
}

FrameData FrameBuffer::pop_oldest() {
    if (entries_.empty()) throw EmptyInput("FrameBuffer: empty");
    FrameData f = std::move(entries_.front());
    entries_.pop_front();
    return f;
}

std::pair<FrameData, int> FrameBuffer::pop_newest() {
    if (entries_.empty()) throw EmptyInput("FrameBuffer: empty");
    FrameData f = std::move(entries_.back());
    const int skipped = static_cast<int>(entries_.size()) - 1;
    entries_.clear();
    return {std::move(f), skipped};
}

std::chrono::duration<double, std::milli> pace(double target_fps,
                                               Clock::time_point last_display_instant,
                                               Clock::time_point now) {
    if (target_fps <= 0.0) throw InvalidArgument("pace: target_fps must be > 0");
    const auto period = std::chrono::duration<double, std::milli>(1000.0 / target_fps);
    const auto next = last_display_instant + std::chrono::duration_cast<Clock::duration>(period);
    if (next <= now) return std::chrono::duration<double, std::milli>(0.0);
    return std::chrono::duration<double, std::milli>(next - now);
}

SubmitPolicy policy_for_mode(PipelineMode mode) {
    SubmitPolicy policy;
    if (mode == PipelineMode::Naive) {
        policy.blocking = true;
        policy.should_submit = [](const GateDecision&, bool worker_idle) {
            return worker_idle;  // always true after the blocking drain
        };
    } else {
        policy.blocking = false;
        policy.should_submit = [](const GateDecision& gate, bool worker_idle) {
            return gate.triggered && worker_idle;
        };
    }
    return policy;
}

// ---------------------------------------------------------------------------
// Worker thread + depth-1 channels
// ---------------------------------------------------------------------------

namespace {

using WorkerReply = std::variant<SegmentationResult, std::string>;

template <typename T>
class Slot {
public:
    bool try_push(T value) {
        std::lock_guard lock(mutex_);
        if (value_ || closed_) return false;
        value_ = std::move(value);
        cv_.notify_all();
        return true;
    }

    std::optional<T> try_pop() {
        std::lock_guard lock(mutex_);
        return take_locked();
    }

    std::optional<T> pop_wait() {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return value_.has_value() || closed_; });
        return take_locked();
    }

    void push_wait(T value) {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return !value_.has_value() || closed_; });
        if (closed_) return;
        value_ = std::move(value);
        cv_.notify_all();
    }

    void close() {
        std::lock_guard lock(mutex_);
        closed_ = true;
        cv_.notify_all();
    }

private:
    std::optional<T> take_locked() {
        if (!value_) return std::nullopt;
        std::optional<T> out = std::move(value_);
        value_.reset();
        cv_.notify_all();
        return out;
    }

    std::mutex mutex_;
    std::condition_variable cv_;
    std::optional<T> value_;
    bool closed_ = false;
};

class SegmentationWorker {
public:
    explicit SegmentationWorker(SegmentationBackend& backend) : backend_(backend) {
        thread_ = std::thread([this] { run(); });
    }

    ~SegmentationWorker() {
        requests_.close();
        results_.close();
        if (thread_.joinable()) thread_.join();
    }

    void submit(SegmentationRequest req) {
        const bool pushed = requests_.try_push(std::move(req));
        assert(pushed && "submit with a request already in flight");
        (void)pushed;
    }

    std::optional<WorkerReply> try_take() { return results_.try_pop(); }

    WorkerReply take_blocking() {
        auto reply = results_.pop_wait();
        if (!reply) return std::string("worker shut down");
        return std::move(*reply);
    }

private:
    void run() {
        while (auto req = requests_.pop_wait()) {
            WorkerReply reply;
            try {
                reply = backend_.segment(*req);
            } catch (const std::exception& e) {
                reply = std::string(e.what());
            }
            results_.push_wait(std::move(reply));
        }
    }

    SegmentationBackend& backend_;
    Slot<SegmentationRequest> requests_;
    Slot<WorkerReply> results_;
    std::thread thread_;
};

}  // namespace

// ---------------------------------------------------------------------------
// JSONL log
// ---------------------------------------------------------------------------

namespace {

json record_to_json(const TimingRecord& r) {
    return json{{"frame_index", r.frame_index},
                {"t_total_ms", r.t_total_ms},
                {"t_stabilize_ms", r.t_stabilize_ms},
                {"t_warp_ms", r.t_warp_ms},
                {"t_gate_ms", r.t_gate_ms},
                {"t_canvas_ms", r.t_canvas_ms},
                {"seg_submitted", r.seg_submitted},
                {"seg_arrived", r.seg_arrived},
                {"gate_score", r.gate.score},
                {"gate_area", r.gate.area_ratio},
                {"gate_triggered", r.gate.triggered},
                {"stab_accepted", r.stab_accepted},
                {"dropped_before", r.dropped_before}};
}

json summary_to_json(const RunSummary& s, PipelineMode mode) {
    return json{{"summary", true},
                {"mode", mode == PipelineMode::Naive ? "naive" : "gated"},
                {"frames", s.frames},
                {"seg_calls", s.seg_calls},
                {"call_rate", s.call_rate},
                {"mean_ms", s.mean_ms},
                {"p50_ms", s.p50_ms},
                {"p95_ms", s.p95_ms},
                {"p99_ms", s.p99_ms},
                {"eff_fps", s.eff_fps}};
}

}  // namespace

struct JsonlLogWriter::Impl {
    std::ofstream out;
};

JsonlLogWriter::JsonlLogWriter(const std::filesystem::path& path)
    : impl_(std::make_unique<Impl>()) {
    impl_->out.open(path);
    if (!impl_->out) throw IoError("cannot open log for writing: " + path.string());
}

JsonlLogWriter::~JsonlLogWriter() = default;

void JsonlLogWriter::write_record(const TimingRecord& record) {
    impl_->out << record_to_json(record).dump() << "\n";
}

void JsonlLogWriter::write_summary(const RunSummary& summary, PipelineMode mode) {
    impl_->out << summary_to_json(summary, mode).dump() << "\n";
    impl_->out.flush();
}

RunLog read_run_log(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open log: " + path.string());
    RunLog log;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json doc;
        try {
            doc = json::parse(line);
        } catch (const json::exception& e) {
            throw IoError("bad JSONL at " + path.string() + ":" +
                          std::to_string(line_no) + ": " + e.what());
        }
        try {
            if (doc.value("summary", false)) {
                RunSummary s;
                s.frames = doc.at("frames").get<int>();
                s.seg_calls = doc.at("seg_calls").get<int>();
                s.call_rate = doc.at("call_rate").get<double>();
                s.mean_ms = doc.at("mean_ms").get<double>();
                s.p50_ms = doc.at("p50_ms").get<double>();
                s.p95_ms = doc.at("p95_ms").get<double>();
                s.p99_ms = doc.at("p99_ms").get<double>();
                s.eff_fps = doc.at("eff_fps").get<double>();
                log.summary = s;
            } else {
                FrameStat stat;
                stat.t_total_ms = doc.at("t_total_ms").get<double>();
                stat.seg_submitted = doc.at("seg_submitted").get<int>() != 0;
                log.stats.push_back(stat);
                if (stat.seg_submitted) {
                    log.submit_frames.push_back(doc.at("frame_index").get<int>());
                }
            }
        } catch (const json::exception& e) {
            throw IoError("log record missing fields at " + path.string() + ":" +
                          std::to_string(line_no) + ": " + e.what());
        }
    }
    return log;
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

namespace {

struct InFlight {
    int submit_frame = 0;
};

class Pipeline {
public:
    Pipeline(const PipelineConfig& cfg, const SubmitPolicy& policy, FrameSource& source,
             SegmentationBackend& backend, LogSink* log, const DebugEmitter& debug)
        : cfg_(cfg), policy_(policy), source_(source), log_(log), debug_(debug),
          buffer_(cfg.buffer_capacity), worker_(backend) {}

    RunResult run();

private:
    void process_frame(FrameData frame);
    void apply_reply(WorkerReply reply, int frame_index, double* canvas_ms);
    void emit_debug(const FrameData& frame, const GrayImage& viewport);

    const PipelineConfig& cfg_;
    const SubmitPolicy& policy_;
    FrameSource& source_;
    LogSink* log_;
    const DebugEmitter& debug_;

    FrameBuffer buffer_;
    SegmentationWorker worker_;

    std::optional<StabilizerState> stabilizer_;
    std::optional<CanvasState> canvas_;
    std::optional<GrayImage> prev_viewport_;
    std::optional<BinaryMask> prev_mask_;
    std::optional<InFlight> in_flight_;
    int frames_since_call_ = 0;
    int dropped_pending_ = 0;
    std::vector<TimingRecord> records_;
};

void Pipeline::apply_reply(WorkerReply reply, int frame_index, double* canvas_ms) {
    if (std::holds_alternative<std::string>(reply)) {
        std::cerr << "[mclsc] segmentation backend failure: "
                  << std::get<std::string>(reply) << "\n";
        return;
    }
    auto& result = std::get<SegmentationResult>(reply);
    const auto t0 = Clock::now();
    try {
        validate_result(result);
        const LabelImage encoded = result_to_canvas_labels(result);
        const LabelImage viewport_labels =
            warp_labels_to_viewport(*canvas_, encoded, result.transform_at_submit);
        write_static(*canvas_, viewport_labels, cfg_.taxonomy);
        write_dynamic(*canvas_, viewport_labels, cfg_.taxonomy, frame_index, cfg_.canvas);
    } catch (const Error& e) {
        std::cerr << "[mclsc] dropping segmentation result for frame "
                  << result.frame_index << ": " << e.what() << "\n";
        return;
    }
    if (canvas_ms) *canvas_ms += ms_between(t0, Clock::now());
}

void Pipeline::process_frame(FrameData frame) {
    TimingRecord rec;
    rec.frame_index = frame.index;
    rec.dropped_before = dropped_pending_;
    dropped_pending_ = 0;

    const auto t_start = Clock::now();

    auto t0 = Clock::now();
    const StabilizationOutcome outcome =
        stabilize_frame(*stabilizer_, frame.gray, cfg_.lk, cfg_.ransac, cfg_.trust,
                        static_cast<std::uint64_t>(frame.index));
    rec.t_stabilize_ms = ms_between(t0, Clock::now());
    rec.stab_accepted = outcome.accepted;

    t0 = Clock::now();
    auto [viewport, valid] = warp_to_viewport(*canvas_, frame.gray, outcome.transform);
    rec.t_warp_ms = ms_between(t0, Clock::now());

    t0 = Clock::now();
    double score = 0.0;
    double area = 0.0;
    if (prev_viewport_) {
        // The gate sees only pixels both frames actually covered.
        BinaryMask both(valid.width, valid.height);
        bool any = false;
        for (size_t i = 0; i < both.data.size(); ++i) {
            both.data[i] = valid.data[i] & prev_mask_->data[i];
            any |= both.data[i] != 0;
        }
        if (any) {
            score = motion_score(viewport, *prev_viewport_, both);
            area = motion_area_ratio(viewport, *prev_viewport_, both, cfg_.gate.pixel_threshold);
        }
    }
    const GateDecision decision = decide(cfg_.gate, score, area, frames_since_call_);
    rec.gate = decision;
    rec.t_gate_ms = ms_between(t0, Clock::now());

    // Submit policy. NAIVE drains the in-flight slot first so that every
    // frame can be submitted; GATED never blocks here.
    if (policy_.blocking && in_flight_) {
        apply_reply(worker_.take_blocking(), frame.index, &rec.t_canvas_ms);
        in_flight_.reset();
        rec.seg_arrived = 1;
    }
    const bool worker_idle = !in_flight_;
    if (policy_.should_submit(decision, worker_idle) && worker_idle) {
        SegmentationRequest req;
        req.frame_index = frame.index;
        req.frame = frame.gray;
        req.color = frame.color;
        req.transform_at_submit = outcome.transform;
        worker_.submit(std::move(req));
        in_flight_ = InFlight{frame.index};
        rec.seg_submitted = 1;
    }

    // Asynchronous result landing for non-blocking policies. Benchmark runs
    // land a result exactly result_delay_frames after its submit frame (the
    // wait keeps canvases frame-deterministic); realtime runs poll.
    if (!policy_.blocking && in_flight_) {
        if (cfg_.realtime) {
            if (auto reply = worker_.try_take()) {
                apply_reply(std::move(*reply), frame.index, &rec.t_canvas_ms);
                in_flight_.reset();
                rec.seg_arrived = 1;
            }
        } else if (frame.index >= in_flight_->submit_frame + cfg_.result_delay_frames) {
            apply_reply(worker_.take_blocking(), frame.index, &rec.t_canvas_ms);
            in_flight_.reset();
            rec.seg_arrived = 1;
        }
    }

    frames_since_call_ = rec.seg_submitted ? 1 : frames_since_call_ + 1;

    rec.t_total_ms = ms_between(t_start, Clock::now());
    records_.push_back(rec);
    if (log_) log_->write_record(rec);

    // Debug emission is outside t_total by design.
    if (debug_ && cfg_.debug_every > 0 && frame.index % cfg_.debug_every == 0) {
        emit_debug(frame, viewport);
    }

    prev_viewport_ = std::move(viewport);
    prev_mask_ = std::move(valid);
}

void Pipeline::emit_debug(const FrameData& frame, const GrayImage& viewport) {
    const int w = frame.gray.width;
    const int h = frame.gray.height;
    ColorImage tiles(3 * w, 2 * h);

    const auto blit_gray = [&](const GrayImage& img, int tx, int ty) {
        for (int y = 0; y < img.height && y < h; ++y) {
            for (int x = 0; x < img.width && x < w; ++x) {
                std::uint8_t* px = tiles.rgb(tx * w + x, ty * h + y);
                px[0] = px[1] = px[2] = img.at(x, y);
            }
        }
    };
    const auto blit_color = [&](const ColorImage& img, int tx, int ty) {
        for (int y = 0; y < img.height && y < h; ++y) {
            for (int x = 0; x < img.width && x < w; ++x) {
                const std::uint8_t* src = img.rgb(x, y);
                std::uint8_t* px = tiles.rgb(tx * w + x, ty * h + y);
                px[0] = src[0];
                px[1] = src[1];
                px[2] = src[2];
            }
        }
    };

    blit_gray(frame.gray, 0, 0);
    const BinaryMask edges = edge_strength_mask(frame.gray, 80.0, 1);
    GrayImage edge_img(w, h);
    for (size_t i = 0; i < edges.data.size(); ++i) edge_img.data[i] = edges.data[i] ? 255 : 0;
    blit_gray(edge_img, 1, 0);
    blit_gray(stabilizer_->baseline, 2, 0);
    blit_gray(viewport, 0, 1);
    blit_color(render_overlay(*canvas_, viewport, cfg_.palette, cfg_.canvas.overlay_alpha,
                              OverlayLayers::StaticOnly),
               1, 1);
    blit_color(render_overlay(*canvas_, viewport, cfg_.palette, cfg_.canvas.overlay_alpha,
                              OverlayLayers::DynamicOnly),
               2, 1);
    debug_(frame.index, tiles);
}

RunResult Pipeline::run() {
    const int total = source_.frame_count();
    if (total < 2) throw SourceError("run_pipeline: source must yield at least 2 frames");

    FrameData first = source_.frame_at(0);
    try {
        stabilizer_ = init_baseline(first.gray, cfg_.features, cfg_.trust);
    } catch (const Error& e) {
        throw BaselineInitFailure(std::string("baseline init failed: ") + e.what());
    }
    canvas_ = new_canvas(first.gray.width, first.gray.height);
    frames_since_call_ = cfg_.gate.min_spacing;

    if (!cfg_.realtime) {
        buffer_.push(std::move(first));
        process_frame(buffer_.pop_oldest());
        for (int i = 1; i < total; ++i) {
            dropped_pending_ += buffer_.push(source_.frame_at(i));
            process_frame(buffer_.pop_oldest());
        }
    } else {
        // Frames become available on the wall clock at target_fps; the loop
        // displays the newest available frame and drops the backlog.
        const auto start = Clock::now();
        const auto period = std::chrono::duration<double, std::milli>(1000.0 / cfg_.target_fps);
        int produced = 0;
        const auto arrival_time = [&](int i) {
            return start + std::chrono::duration_cast<Clock::duration>(period * i);
        };
        const auto ingest_due = [&](Clock::time_point now) {
            while (produced < total && arrival_time(produced) <= now) {
                if (produced == 0) {
                    dropped_pending_ += buffer_.push(std::move(first));
                } else {
                    dropped_pending_ += buffer_.push(source_.frame_at(produced));
                }
                ++produced;
            }
        };
        // Prebuffer before the display loop starts.
        const int prebuffer = std::min(cfg_.prebuffer, total);
        while (produced < prebuffer) {
            std::this_thread::sleep_until(arrival_time(produced));
            ingest_due(Clock::now());
        }
        auto last_display = Clock::now();
        bool first_display = true;
        while (produced < total || !buffer_.empty()) {
            ingest_due(Clock::now());
            if (buffer_.empty()) {
                std::this_thread::sleep_until(arrival_time(produced));
                continue;
            }
            auto [frame, skipped] = buffer_.pop_newest();
            dropped_pending_ += skipped;
            process_frame(std::move(frame));
            const auto now = Clock::now();
            if (first_display) {
                first_display = false;
                last_display = now;
            } else {
                const auto wait = pace(cfg_.target_fps, last_display, now);
                if (wait.count() > 0) {
                    std::this_thread::sleep_for(wait);
                }
                last_display = Clock::now();
            }
        }
    }

    // Land whatever is still in flight so the canvases are complete.
    if (in_flight_) {
        apply_reply(worker_.take_blocking(), total - 1, nullptr);
        in_flight_.reset();
    }

    RunResult result;
    result.records = std::move(records_);
    std::vector<FrameStat> stats;
    stats.reserve(result.records.size());
    for (const auto& r : result.records) {
        stats.push_back({r.t_total_ms, r.seg_submitted != 0});
    }
    result.summary = summarize(stats);
    result.canvas = std::move(*canvas_);
    if (log_) log_->write_summary(result.summary, cfg_.mode);
    return result;
}

}  // namespace

RunResult run_pipeline(const PipelineConfig& cfg, FrameSource& source,
                       SegmentationBackend& backend, LogSink* log,
                       const DebugEmitter& debug) {
    const SubmitPolicy policy = policy_for_mode(cfg.mode);
    Pipeline pipeline(cfg, policy, source, backend, log, debug);
    return pipeline.run();
}

RunResult run_pipeline_with_policy(const PipelineConfig& cfg, const SubmitPolicy& policy,
                                   FrameSource& source, SegmentationBackend& backend,
                                   LogSink* log, const DebugEmitter& debug) {
    Pipeline pipeline(cfg, policy, source, backend, log, debug);
    return pipeline.run();
}

}  // namespace mclsc

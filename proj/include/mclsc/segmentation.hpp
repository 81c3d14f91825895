#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mclsc/image.hpp"
#include "mclsc/motion_model.hpp"

namespace mclsc {

struct SegmentMeta {
    int segment_id = 0;  // >= 1, unique within one result
    int class_id = 0;
    double score = 1.0;
};

struct SegmentationResult {
    int frame_index = 0;
    LabelImage label_map;  // per-pixel segment_id; 0 = void
    std::vector<SegmentMeta> segments;
    double latency_ms = 0.0;
    // Echoed from the request so results can be landed with the transform of
    // the frame they were computed on, however late they arrive.
    AffineTransform transform_at_submit;
};

struct SegmentationRequest {
    int frame_index = 0;
    GrayImage frame;  // source-frame pixels; results align to these coords
    std::optional<ColorImage> color;
    AffineTransform transform_at_submit;
};

// Throws BackendFailure when a nonzero label has no segment entry or
// segment ids repeat / fall below 1.
void validate_result(const SegmentationResult& result);

// Nearest-neighbor resize for label maps whose size differs from the frame.
LabelImage resize_labels_nearest(const LabelImage& src, int out_w, int out_h);

// Canvas-encoded labels: encode(class_id, segment_id) per pixel, with
// segment ids wrapped into the 10-bit instance field.
LabelImage result_to_canvas_labels(const SegmentationResult& result);

class SegmentationBackend {
public:
    virtual ~SegmentationBackend() = default;
    // Serialized by the single worker thread; implementations need not be
    // thread-safe.
    virtual SegmentationResult segment(const SegmentationRequest& req) = 0;
};

// Ground-truth label source for the mock backend.
class TruthProvider {
public:
    virtual ~TruthProvider() = default;
    virtual int frame_count() const = 0;
    virtual LabelImage labels_at(int frame_index) const = 0;  // throws UnknownFrame
    virtual std::vector<int> class_ids() const = 0;           // classes the scene can emit
};

class SceneRenderer;  // synth.hpp

std::shared_ptr<TruthProvider> make_scene_truth_provider(
    std::shared_ptr<const SceneRenderer> renderer);

struct FrameSequenceInfo;  // io.hpp

std::shared_ptr<TruthProvider> make_sequence_truth_provider(FrameSequenceInfo info);

// Oracle backend: answers from the scene's ground-truth labels, sleeps for
// the configured latency, and optionally corrupts a fraction of segment
// classes. Corruption is seeded per frame index, so output is independent
// of call order.
class MockBackend : public SegmentationBackend {
public:
    MockBackend(std::shared_ptr<const TruthProvider> truth, double latency_ms,
                double label_noise, std::uint64_t seed);

    SegmentationResult segment(const SegmentationRequest& req) override;

private:
    std::shared_ptr<const TruthProvider> truth_;
    double latency_ms_;
    double label_noise_;
    std::uint64_t seed_;
};

// Adapter for out-of-process models. The child is spawned once and spoken to
// in line-delimited JSON over its standard streams:
//   request:  {"frame_index": N, "width": W, "height": H, "frame_path": "...ppm"}
//   reply:    {"frame_index": N, "label_map_path": "...pgm",
//              "segments": [{"id": k, "class_id": c, "score": s}, ...]}
// Frames are written as P6 PPM; label maps are read as 16-bit big-endian PGM
// (P5, maxval 65535). Timeout, child exit, or schema violations raise
// BackendFailure.
class ExternalBackend : public SegmentationBackend {
public:
    ExternalBackend(std::string command, std::vector<std::string> args, int timeout_ms,
                    std::filesystem::path work_dir = {});
    ~ExternalBackend() override;

    ExternalBackend(const ExternalBackend&) = delete;
    ExternalBackend& operator=(const ExternalBackend&) = delete;

    SegmentationResult segment(const SegmentationRequest& req) override;

private:
    void spawn();
    void shutdown();
    std::string read_reply_line();

    std::string command_;
    std::vector<std::string> args_;
    int timeout_ms_;
    std::filesystem::path work_dir_;
    bool owns_work_dir_ = false;
    int child_pid_ = -1;
    int to_child_fd_ = -1;
    int from_child_fd_ = -1;
    std::string read_buffer_;
    long request_counter_ = 0;
};

}  // namespace mclsc

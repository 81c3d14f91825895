#include "mclsc/segmentation.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <set>
#include <thread>

#include "json.hpp"

#include "mclsc/canvas.hpp"
#include "mclsc/io.hpp"
#include "mclsc/synth.hpp"

namespace mclsc {

using nlohmann::json;

LabelImage resize_labels_nearest(const LabelImage& src, int out_w, int out_h) {
    if (src.width == out_w && src.height == out_h) return src;
    LabelImage out(out_w, out_h);
    for (int y = 0; y < out_h; ++y) {
        const int sy = std::clamp(
            static_cast<int>(std::lround((y + 0.5) * src.height / out_h - 0.5)), 0,
            src.height - 1);
        for (int x = 0; x < out_w; ++x) {
            const int sx = std::clamp(
                static_cast<int>(std::lround((x + 0.5) * src.width / out_w - 0.5)), 0,
                src.width - 1);
            out.at(x, y) = src.at(sx, sy);
        }
    }
    return out;
}

void validate_result(const SegmentationResult& result) {
    std::set<int> ids;
    for (const auto& s : result.segments) {
        if (s.segment_id < 1) {
            throw BackendFailure("segment id " + std::to_string(s.segment_id) + " below 1");
        }
        if (!ids.insert(s.segment_id).second) {
            throw BackendFailure("duplicate segment id " + std::to_string(s.segment_id));
        }
    }
    for (const auto v : result.label_map.data) {
        if (v != 0 && ids.find(v) == ids.end()) {
            throw BackendFailure("label map references unknown segment " + std::to_string(v));
        }
    }
}

LabelImage result_to_canvas_labels(const SegmentationResult& result) {
    std::map<int, int> class_of;
    for (const auto& s : result.segments) class_of[s.segment_id] = s.class_id;
    LabelImage out(result.label_map.width, result.label_map.height);
    for (size_t i = 0; i < out.data.size(); ++i) {
        const int sid = result.label_map.data[i];
        if (sid == 0) continue;
        // Wrap into the 10-bit instance field, avoiding the reserved 0.
        const int instance = 1 + (sid - 1) % 1023;
        out.data[i] = encode_label(class_of.at(sid), instance);
    }
    return out;
}

namespace {

class SceneTruthProvider : public TruthProvider {
public:
    explicit SceneTruthProvider(std::shared_ptr<const SceneRenderer> renderer)
        : renderer_(std::move(renderer)) {}

    int frame_count() const override { return renderer_->frame_count(); }

    LabelImage labels_at(int frame_index) const override {
        if (frame_index < 0 || frame_index >= renderer_->frame_count()) {
            throw UnknownFrame("truth frame " + std::to_string(frame_index) +
                               " outside scene");
        }
        return renderer_->render_truth_labels(frame_index);
    }

    std::vector<int> class_ids() const override {
        std::set<int> classes;
        for (const auto& band : renderer_->spec().background.band_classes) {
            classes.insert(band);
        }
        for (const auto& m : renderer_->spec().movers) classes.insert(m.class_id);
        return {classes.begin(), classes.end()};
    }

private:
    std::shared_ptr<const SceneRenderer> renderer_;
};

class SequenceTruthProvider : public TruthProvider {
public:
    explicit SequenceTruthProvider(FrameSequenceInfo info) : info_(std::move(info)) {
        if (!info_.has_truth_labels) {
            throw SourceError("sequence has no truth_labels; mock backend needs them");
        }
        // Class inventory from a sample of frames would be incomplete; scan
        // all frames once at construction.
        std::set<int> classes;
        for (int t = 0; t < info_.frame_count; ++t) {
            const auto labels = load_sequence_truth_labels(info_, t);
            for (const auto v : labels.data) {
                if (v != 0) classes.insert(label_class(v));
            }
        }
        class_ids_.assign(classes.begin(), classes.end());
    }

    int frame_count() const override { return info_.frame_count; }

    LabelImage labels_at(int frame_index) const override {
        if (frame_index < 0 || frame_index >= info_.frame_count) {
            throw UnknownFrame("truth frame " + std::to_string(frame_index) +
                               " outside sequence");
        }
        return load_sequence_truth_labels(info_, frame_index);
    }

    std::vector<int> class_ids() const override { return class_ids_; }

private:
    FrameSequenceInfo info_;
    std::vector<int> class_ids_;
};

}  // namespace

std::shared_ptr<TruthProvider> make_scene_truth_provider(
    std::shared_ptr<const SceneRenderer> renderer) {
    return std::make_shared<SceneTruthProvider>(std::move(renderer));
}

std::shared_ptr<TruthProvider> make_sequence_truth_provider(FrameSequenceInfo info) {
    return std::make_shared<SequenceTruthProvider>(std::move(info));
}

MockBackend::MockBackend(std::shared_ptr<const TruthProvider> truth, double latency_ms,
                         double label_noise, std::uint64_t seed)
    : truth_(std::move(truth)),
      latency_ms_(latency_ms),
      label_noise_(label_noise),
      seed_(seed) {
    if (latency_ms_ < 0.0 || label_noise_ < 0.0 || label_noise_ >= 1.0) {
        throw InvalidArgument("MockBackend: latency must be >= 0 and noise in [0, 1)");
    }
}

SegmentationResult MockBackend::segment(const SegmentationRequest& req) {
    const auto t0 = std::chrono::steady_clock::now();
    const LabelImage truth = truth_->labels_at(req.frame_index);

    // Distinct truth values in ascending order become segments 1..K.
    std::set<std::uint16_t> values;
    for (const auto v : truth.data) {
        if (v != 0) values.insert(v);
    }
    std::map<std::uint16_t, int> segment_of;
    SegmentationResult result;
    result.frame_index = req.frame_index;
    result.transform_at_submit = req.transform_at_submit;
    int next_id = 1;
    for (const auto v : values) {
        segment_of[v] = next_id;
        result.segments.push_back({next_id, label_class(v), 1.0});
        ++next_id;
    }
    result.label_map = LabelImage(truth.width, truth.height);
    for (size_t i = 0; i < truth.data.size(); ++i) {
        if (truth.data[i] != 0) {
            result.label_map.data[i] =
                static_cast<std::uint16_t>(segment_of.at(truth.data[i]));
        }
    }

    if (label_noise_ > 0.0 && !result.segments.empty()) {
        // Seeded per frame index: corruption is identical no matter when or
        // how often the frame is requested.
        Rng rng(mix_seed(seed_, static_cast<std::uint64_t>(req.frame_index)));
        const auto classes = truth_->class_ids();
        for (auto& seg : result.segments) {
            if (rng.next_unit() >= label_noise_) continue;
            std::vector<int> others;
            for (int c : classes) {
                if (c != seg.class_id) others.push_back(c);
            }
            if (others.empty()) continue;
            seg.class_id = others[rng.next_below(static_cast<std::uint32_t>(others.size()))];
            seg.score = 0.5;
        }
    }

    if (latency_ms_ > 0.0) {
        std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(latency_ms_));
    }
    result.latency_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    return result;
}

// ---------------------------------------------------------------------------
// ExternalBackend
// ---------------------------------------------------------------------------

ExternalBackend::ExternalBackend(std::string command, std::vector<std::string> args,
                                 int timeout_ms, std::filesystem::path work_dir)
    : command_(std::move(command)), args_(std::move(args)), timeout_ms_(timeout_ms),
      work_dir_(std::move(work_dir)) {
    if (timeout_ms_ <= 0) throw InvalidArgument("ExternalBackend: timeout must be > 0");
    if (work_dir_.empty()) {
        work_dir_ = std::filesystem::temp_directory_path() /
                    ("mclsc_backend_" + std::to_string(::getpid()));
        std::filesystem::create_directories(work_dir_);
        owns_work_dir_ = true;
    }
    spawn();
}

ExternalBackend::~ExternalBackend() {
    shutdown();
    if (owns_work_dir_) {
        std::error_code ec;
        std::filesystem::remove_all(work_dir_, ec);
    }
}

void ExternalBackend::spawn() {
    int to_child[2];
    int from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0) {
        throw BackendFailure("pipe() failed");
    }
    const int pid = fork();
    if (pid < 0) throw BackendFailure("fork() failed");
    if (pid == 0) {
        dup2(to_child[0], STDIN_FILENO);
        dup2(from_child[1], STDOUT_FILENO);
        close(to_child[0]);
        close(to_child[1]);
        close(from_child[0]);
        close(from_child[1]);
        std::vector<char*> argv;
        argv.push_back(const_cast<char*>(command_.c_str()));
        for (auto& a : args_) argv.push_back(const_cast<char*>(a.c_str()));
        argv.push_back(nullptr);
        execvp(command_.c_str(), argv.data());
        _exit(127);
    }
    child_pid_ = pid;
    to_child_fd_ = to_child[1];
    from_child_fd_ = from_child[0];
    close(to_child[0]);
    close(from_child[1]);
}

void ExternalBackend::shutdown() {
    if (to_child_fd_ >= 0) {
        close(to_child_fd_);
        to_child_fd_ = -1;
    }
    if (from_child_fd_ >= 0) {
        close(from_child_fd_);
        from_child_fd_ = -1;
    }
    if (child_pid_ > 0) {
        kill(child_pid_, SIGTERM);
        int status = 0;
        for (int i = 0; i < 50; ++i) {
            if (waitpid(child_pid_, &status, WNOHANG) == child_pid_) {
                child_pid_ = -1;
                return;
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(10));
        }
        kill(child_pid_, SIGKILL);
        waitpid(child_pid_, &status, 0);
        child_pid_ = -1;
    }
}

std::string ExternalBackend::read_reply_line() {
    const auto deadline =
        std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms_);
    for (;;) {
        const auto nl = read_buffer_.find('\n');
        if (nl != std::string::npos) {
            std::string line = read_buffer_.substr(0, nl);
            read_buffer_.erase(0, nl + 1);
            return line;
        }
        const auto now = std::chrono::steady_clock::now();
        if (now >= deadline) throw BackendFailure("backend reply timed out");
        const auto remain =
            std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now);
        pollfd pfd{from_child_fd_, POLLIN, 0};
        const int rv = poll(&pfd, 1, static_cast<int>(remain.count()));
        if (rv < 0) throw BackendFailure("poll() failed");
        if (rv == 0) throw BackendFailure("backend reply timed out");
        char buf[4096];
        const ssize_t n = read(from_child_fd_, buf, sizeof(buf));
        if (n <= 0) throw BackendFailure("backend process closed its output");
        read_buffer_.append(buf, static_cast<size_t>(n));
    }
}

SegmentationResult ExternalBackend::segment(const SegmentationRequest& req) {
    if (child_pid_ <= 0) throw BackendFailure("backend process is not running");
    const auto t0 = std::chrono::steady_clock::now();

    char name[64];
    std::snprintf(name, sizeof(name), "req_%06ld.ppm", request_counter_++);
    const std::filesystem::path frame_path = work_dir_ / name;
    if (req.color && same_size(*req.color, req.frame)) {
        write_ppm(frame_path, *req.color);
    } else {
        ColorImage rgb(req.frame.width, req.frame.height);
        for (size_t i = 0; i < req.frame.data.size(); ++i) {
            rgb.data[3 * i] = rgb.data[3 * i + 1] = rgb.data[3 * i + 2] = req.frame.data[i];
        }
        write_ppm(frame_path, rgb);
    }

    const json request{{"frame_index", req.frame_index},
                       {"width", req.frame.width},
                       {"height", req.frame.height},
                       {"frame_path", frame_path.string()}};
    const std::string line = request.dump() + "\n";
    const ssize_t written = write(to_child_fd_, line.data(), line.size());

    SegmentationResult result;
    try {
        if (written != static_cast<ssize_t>(line.size())) {
            throw BackendFailure("failed to write request to backend");
        }
        const std::string reply_line = read_reply_line();
        json reply;
        try {
            reply = json::parse(reply_line);
        } catch (const json::exception& e) {
            throw BackendFailure(std::string("malformed backend reply: ") + e.what());
        }
        try {
            if (reply.at("frame_index").get<int>() != req.frame_index) {
                throw BackendFailure("backend replied for a different frame");
            }
            result.frame_index = req.frame_index;
            result.label_map = read_pgm16(reply.at("label_map_path").get<std::string>());
            for (const auto& seg : reply.at("segments")) {
                result.segments.push_back({seg.at("id").get<int>(),
                                           seg.at("class_id").get<int>(),
                                           seg.at("score").get<double>()});
            }
        } catch (const json::exception& e) {
            throw BackendFailure(std::string("backend reply schema violation: ") + e.what());
        } catch (const IoError& e) {
            throw BackendFailure(std::string("cannot load backend label map: ") + e.what());
        }
        if (!same_size(result.label_map, req.frame)) {
            result.label_map = resize_labels_nearest(result.label_map, req.frame.width,
                                                     req.frame.height);
        }
        validate_result(result);
    } catch (...) {
        std::error_code ec;
        std::filesystem::remove(frame_path, ec);
        throw;
    }
    std::error_code ec;
    std::filesystem::remove(frame_path, ec);

    result.transform_at_submit = req.transform_at_submit;
    result.latency_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    return result;
}

}  // namespace mclsc

#include "mclsc/gating.hpp"

#include <cstdlib>

namespace mclsc {

namespace {

void check_gate_inputs(const GrayImage& curr, const GrayImage& prev,
                       const BinaryMask& valid) {
    if (!same_size(curr, prev) || !same_size(curr, valid)) {
        throw DimensionMismatch("motion gate: inputs differ in size");
    }
}

}  // namespace

double motion_score(const GrayImage& curr, const GrayImage& prev, const BinaryMask& valid) {
    check_gate_inputs(curr, prev, valid);
    std::uint64_t sum = 0;
    std::uint64_t count = 0;
    const size_t n = curr.data.size();
    for (size_t i = 0; i < n; ++i) {
        if (!valid.data[i]) continue;
        sum += static_cast<std::uint64_t>(std::abs(int(curr.data[i]) - int(prev.data[i])));
        ++count;
    }
    if (count == 0) throw EmptyMask("motion_score: no valid pixels");
    return static_cast<double>(sum) / static_cast<double>(count);
}

double motion_area_ratio(const GrayImage& curr, const GrayImage& prev,
                         const BinaryMask& valid, int pixel_threshold) {
    check_gate_inputs(curr, prev, valid);
    std::uint64_t moving = 0;
    std::uint64_t count = 0;
    const size_t n = curr.data.size();
    for (size_t i = 0; i < n; ++i) {
        if (!valid.data[i]) continue;
        ++count;
        if (std::abs(int(curr.data[i]) - int(prev.data[i])) > pixel_threshold) ++moving;
    }
    if (count == 0) throw EmptyMask("motion_area_ratio: no valid pixels");
    return static_cast<double>(moving) / static_cast<double>(count);
}

GateDecision decide(const GateConfig& cfg, double score, double area_ratio,
                    int frames_since_last_call) {
    GateDecision d;
    d.score = score;
    d.area_ratio = area_ratio;
    d.frames_since_last_call = frames_since_last_call;
    const bool motion = score > cfg.tau_s && area_ratio > cfg.tau_a;
    const bool spaced = frames_since_last_call >= cfg.min_spacing;
    d.triggered = motion && spaced;
    d.suppressed_by_spacing = motion && !spaced;
    return d;
}

}  // namespace mclsc

#pragma once

#include "mclsc/image.hpp"

namespace mclsc {

struct GateConfig {
    double tau_s = 2.0;        // motion-score threshold, 0-255 scale
    double tau_a = 0.01;       // motion-area-ratio threshold
    int pixel_threshold = 25;  // per-pixel |diff| threshold feeding the area ratio
    int min_spacing = 10;      // minimum frames between segmentation calls
};

struct GateDecision {
    double score = 0.0;       // s_t
    double area_ratio = 0.0;  // a_t
    bool triggered = false;
    bool suppressed_by_spacing = false;
    int frames_since_last_call = 0;
};

// Mean |curr - prev| over pixels where `valid` is true.
// Throws EmptyMask when no pixel is valid, DimensionMismatch on size skew.
double motion_score(const GrayImage& curr, const GrayImage& prev, const BinaryMask& valid);

// Fraction of valid pixels whose |curr - prev| exceeds pixel_threshold.
double motion_area_ratio(const GrayImage& curr, const GrayImage& prev,
                         const BinaryMask& valid, int pixel_threshold);

// Strict inequalities on both thresholds, plus the spacing rule.
GateDecision decide(const GateConfig& cfg, double score, double area_ratio,
                    int frames_since_last_call);

}  // namespace mclsc

#pragma once

#include <optional>
#include <vector>

#include "mclsc/image.hpp"

namespace mclsc {

struct Corner {
    double x = 0.0;
    double y = 0.0;
    double response = 0.0;  // min eigenvalue of the structure tensor
};

enum class TrackStatus { Tracked, Lost };

struct TrackResult {
    Corner src;
    double dst_x = 0.0;  // valid only when status == Tracked
    double dst_y = 0.0;
    TrackStatus status = TrackStatus::Lost;
    double residual = 0.0;  // mean |I - J| over the window at the final position
};

struct FeatureConfig {
    int max_corners = 400;
    double quality_level = 0.01;
    double min_distance = 8.0;
};

struct LkConfig {
    int levels = 3;
    int window = 21;  // odd, >= 5
    int max_iters = 30;
    double epsilon = 0.01;      // stop when the update norm drops below this
    double max_residual = 20.0; // mean |I - J| on the 8-bit scale
};

// Mask of pixels whose Sobel gradient magnitude exceeds grad_threshold,
// dilated by a square structuring element of the given radius.
BinaryMask edge_strength_mask(const GrayImage& img, double grad_threshold,
                              int dilate_radius);

// Shi-Tomasi corners: response is the min eigenvalue of the 2x2 structure
// tensor accumulated over a 7x7 window. Candidates below
// quality_level * max_response (or outside `mask`) are dropped; the rest are
// selected greedily in descending response with min_distance suppression.
std::vector<Corner> detect_corners(const GrayImage& img, int max_corners,
                                   double quality_level, double min_distance,
                                   const BinaryMask* mask = nullptr);

// Coarse-to-fine iterative Lucas-Kanade from `prev` to `next`. A point is
// lost when its window leaves the image, the 2x2 system is near-singular
// (min eigenvalue < 1e-4 * window area), or the final mean absolute
// residual exceeds max_residual.
std::vector<TrackResult> track_lk(const GrayImage& prev, const GrayImage& next,
                                  const std::vector<Corner>& points,
                                  const LkConfig& cfg);

}  // namespace mclsc

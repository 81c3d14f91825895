#pragma once

#include <optional>
#include <vector>

#include "mclsc/features.hpp"
#include "mclsc/image.hpp"
#include "mclsc/motion_model.hpp"

namespace mclsc {

struct TrustConfig {
    int min_tracked = 25;
    double min_inlier_ratio = 0.5;
    double max_median_error = 2.0;  // pixels
};

struct RansacConfig {
    double inlier_threshold = 3.0;
    int max_iters = 2000;
    double confidence = 0.999;
    std::uint64_t seed = 12345;
};

struct StabilizerState {
    GrayImage baseline;
    std::vector<Corner> baseline_corners;
    AffineTransform last_accepted;  // frame -> baseline
    int frames_since_accept = 0;
};

struct StabilizationOutcome {
    AffineTransform transform;  // accepted or held, always usable
    bool accepted = false;
    std::optional<EstimateReport> report;
    int tracked_count = 0;
};

// Detects and stores baseline corners; the initial transform is identity.
// Throws InsufficientFeatures when fewer than trust.min_tracked corners are
// found.
StabilizerState init_baseline(const GrayImage& frame, const FeatureConfig& features,
                              const TrustConfig& trust);

// min of the three normalized components; >= 1.0 means every component meets
// its threshold and the estimate is accepted.
double trust_score(int tracked_count, double inlier_ratio, double median_error,
                   const TrustConfig& cfg);

// Tracks baseline corners into `frame`, estimates the frame -> baseline
// affine via RANSAC, and applies trust gating: on acceptance the state's
// transform is replaced, otherwise the last accepted transform is held.
// Estimation failures are not errors; they surface as accepted = false.
// `seed_salt` (typically the frame index) keeps RANSAC deterministic per
// frame without correlating consecutive frames.
StabilizationOutcome stabilize_frame(StabilizerState& state, const GrayImage& frame,
                                     const LkConfig& lk, const RansacConfig& ransac,
                                     const TrustConfig& trust,
                                     std::uint64_t seed_salt = 0);

}  // namespace mclsc

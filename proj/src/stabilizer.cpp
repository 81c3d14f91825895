#include "mclsc/stabilizer.hpp"

#include <algorithm>

namespace mclsc {

StabilizerState init_baseline(const GrayImage& frame, const FeatureConfig& features,
                              const TrustConfig& trust) {
    StabilizerState state;
    state.baseline = frame;
    state.baseline_corners = detect_corners(frame, features.max_corners,
                                            features.quality_level,
                                            features.min_distance);
    if (static_cast<int>(state.baseline_corners.size()) < trust.min_tracked) {
        throw InsufficientFeatures("init_baseline: found " +
                                   std::to_string(state.baseline_corners.size()) +
                                   " corners, need " + std::to_string(trust.min_tracked));
    }
    state.last_accepted = AffineTransform::identity();
    state.frames_since_accept = 0;
    return state;
}

double trust_score(int tracked_count, double inlier_ratio, double median_error,
                   const TrustConfig& cfg) {
    const auto clamp01 = [](double v) { return std::clamp(v, 0.0, 1.0); };
    const double count_part =
        clamp01(static_cast<double>(tracked_count) / static_cast<double>(cfg.min_tracked));
    const double ratio_part = clamp01(inlier_ratio / cfg.min_inlier_ratio);
    const double error_part =
        clamp01(cfg.max_median_error / std::max(median_error, 1e-9));
    return std::min({count_part, ratio_part, error_part});
}

StabilizationOutcome stabilize_frame(StabilizerState& state, const GrayImage& frame,
                                     const LkConfig& lk, const RansacConfig& ransac,
                                     const TrustConfig& trust,
                                     std::uint64_t seed_salt) {
    if (!same_size(frame, state.baseline)) {
        throw DimensionMismatch("stabilize_frame: frame size differs from baseline");
    }

    StabilizationOutcome outcome;
    outcome.transform = state.last_accepted;
    outcome.accepted = false;

    const auto tracks = track_lk(state.baseline, frame, state.baseline_corners, lk);

    // Pairs run frame -> baseline so the estimate is T_t directly.
    std::vector<PointPair> pairs;
    pairs.reserve(tracks.size());
    for (const auto& t : tracks) {
        if (t.status != TrackStatus::Tracked) continue;
        pairs.push_back({t.dst_x, t.dst_y, t.src.x, t.src.y});
    }
    outcome.tracked_count = static_cast<int>(pairs.size());

    if (outcome.tracked_count >= 3) {
        try {
            const auto report = estimate_affine_ransac(
                pairs, ransac.inlier_threshold, ransac.max_iters,
                mix_seed(ransac.seed, seed_salt), ransac.confidence);
            outcome.report = report;
            const double score = trust_score(outcome.tracked_count, report.inlier_ratio,
                                             report.median_reproj_error, trust);
            if (score >= 1.0 && report.transform.invertible()) {
                state.last_accepted = report.transform;
                state.frames_since_accept = 0;
                outcome.transform = report.transform;
                outcome.accepted = true;
            }
        } catch (const EstimationFailed&) {
            // fall through to the hold rule
        }
    }

    if (!outcome.accepted) {
        state.frames_since_accept += 1;
    }
    return outcome;
}

}  // namespace mclsc

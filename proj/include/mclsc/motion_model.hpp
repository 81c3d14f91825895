#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "mclsc/common.hpp"

namespace mclsc {

// 2x3 affine matrix mapping (x, y) -> (a11 x + a12 y + a13, a21 x + a22 y + a23).
// Used throughout as the frame -> baseline transform T_t and its compositions.
struct AffineTransform {
    double a11 = 1.0, a12 = 0.0, a13 = 0.0;
    double a21 = 0.0, a22 = 1.0, a23 = 0.0;

    static AffineTransform identity() { return {}; }

    static AffineTransform translation(double tx, double ty) {
        return {1.0, 0.0, tx, 0.0, 1.0, ty};
    }

    // CCW rotation about the origin in the usual math convention:
    // (1,0) -> (cos, sin).
    static AffineTransform rotation(double radians);

    static AffineTransform rotation_about(double radians, double cx, double cy);

    static AffineTransform scaling(double s) {
        return {s, 0.0, 0.0, 0.0, s, 0.0};
    }

    double det2x2() const { return a11 * a22 - a12 * a21; }
    bool invertible(double eps = 1e-12) const { return std::abs(det2x2()) > eps; }

    bool operator==(const AffineTransform&) const = default;
};

struct PointPair {
    double sx = 0.0, sy = 0.0;  // src
    double dx = 0.0, dy = 0.0;  // dst
};

struct EstimateReport {
    AffineTransform transform;
    int inlier_count = 0;
    int total_count = 0;
    double inlier_ratio = 0.0;
    double median_reproj_error = 0.0;
};

std::pair<double, double> apply(const AffineTransform& t, double x, double y);

// Result applies `inner` first, then `outer` (3x3 matrix product of the
// embedded forms).
AffineTransform compose(const AffineTransform& outer, const AffineTransform& inner);

// Throws SingularTransform when the 2x2 part is not invertible.
AffineTransform invert(const AffineTransform& t);

// Least-squares affine fit from >= 3 pairs via the 3x3 normal equations.
// Throws DegenerateConfiguration when the system is near-singular
// (smallest pivot < 1e-9 x largest).
AffineTransform fit_affine_lsq(std::span<const PointPair> pairs);

// Median of ||apply(t, src) - dst||; even count averages the middle two.
double median_reprojection_error(const AffineTransform& t,
                                 std::span<const PointPair> pairs);

// Seeded RANSAC over a canonically sorted copy of `pairs` (sorted by src x,
// then y, then dst), so the result is invariant to input ordering. Ties on
// inlier count are broken by lower median reprojection error. The winning
// inlier set is refit with fit_affine_lsq; the report's inlier stats and
// median error are those of the final transform over all pairs.
// Throws EstimationFailed when no valid sample yields >= 3 inliers.
EstimateReport estimate_affine_ransac(std::span<const PointPair> pairs,
                                      double inlier_threshold,
                                      int max_iters,
                                      std::uint64_t seed,
                                      double confidence = 0.999);

}  // namespace mclsc

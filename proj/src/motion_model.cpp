#include "mclsc/motion_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace mclsc {

AffineTransform AffineTransform::rotation(double radians) {
    const double c = std::cos(radians);
    const double s = std::sin(radians);
    return {c, -s, 0.0, s, c, 0.0};
}

AffineTransform AffineTransform::rotation_about(double radians, double cx, double cy) {
    // translate(-c) then rotate then translate(+c), composed.
    const double c = std::cos(radians);
    const double s = std::sin(radians);
    return {c, -s, cx - c * cx + s * cy,
            s, c, cy - s * cx - c * cy};
}

std::pair<double, double> apply(const AffineTransform& t, double x, double y) {
    return {t.a11 * x + t.a12 * y + t.a13,
            t.a21 * x + t.a22 * y + t.a23};
}

AffineTransform compose(const AffineTransform& o, const AffineTransform& i) {
    return {
        o.a11 * i.a11 + o.a12 * i.a21,
        o.a11 * i.a12 + o.a12 * i.a22,
        o.a11 * i.a13 + o.a12 * i.a23 + o.a13,
        o.a21 * i.a11 + o.a22 * i.a21,
        o.a21 * i.a12 + o.a22 * i.a22,
        o.a21 * i.a13 + o.a22 * i.a23 + o.a23,
    };
}

AffineTransform invert(const AffineTransform& t) {
    const double det = t.det2x2();
    if (std::abs(det) <= 1e-12) {
        throw SingularTransform("invert: 2x2 part is singular");
    }
    const double inv = 1.0 / det;
    const double b11 = t.a22 * inv;
    const double b12 = -t.a12 * inv;
    const double b21 = -t.a21 * inv;
    const double b22 = t.a11 * inv;
    return {b11, b12, -(b11 * t.a13 + b12 * t.a23),
            b21, b22, -(b21 * t.a13 + b22 * t.a23)};
}

namespace {

// Gaussian elimination with partial pivoting on an n x n system.
// Throws DegenerateConfiguration when the pivot ratio collapses.
template <int N>
std::array<double, N> solve_linear(std::array<std::array<double, N + 1>, N> m) {
    double max_pivot = 0.0;
    double min_pivot = std::numeric_limits<double>::max();
    for (int col = 0; col < N; ++col) {
        int best = col;
        for (int r = col + 1; r < N; ++r) {
            if (std::abs(m[r][col]) > std::abs(m[best][col])) best = r;
        }
        std::swap(m[col], m[best]);
        const double pivot = std::abs(m[col][col]);
        max_pivot = std::max(max_pivot, pivot);
        min_pivot = std::min(min_pivot, pivot);
        if (pivot == 0.0 || min_pivot < 1e-9 * max_pivot) {
            throw DegenerateConfiguration("linear system is near-singular");
        }
        for (int r = col + 1; r < N; ++r) {
            const double f = m[r][col] / m[col][col];
            for (int c = col; c <= N; ++c) m[r][c] -= f * m[col][c];
        }
    }
    std::array<double, N> x{};
    for (int r = N - 1; r >= 0; --r) {
        double acc = m[r][N];
        for (int c = r + 1; c < N; ++c) acc -= m[r][c] * x[c];
        x[r] = acc / m[r][r];
    }
    return x;
}

double reproj_error(const AffineTransform& t, const PointPair& p) {
    const auto [px, py] = apply(t, p.sx, p.sy);
    return std::hypot(px - p.dx, py - p.dy);
}

bool collinear(const PointPair& a, const PointPair& b, const PointPair& c) {
    const double area2 = (b.sx - a.sx) * (c.sy - a.sy) - (b.sy - a.sy) * (c.sx - a.sx);
    return std::abs(area2) < 1e-9;
}

// Exact affine through three non-collinear pairs.
AffineTransform fit_exact3(const PointPair& p0, const PointPair& p1, const PointPair& p2) {
    std::array<std::array<double, 4>, 3> mx{{
        {p0.sx, p0.sy, 1.0, p0.dx},
        {p1.sx, p1.sy, 1.0, p1.dx},
        {p2.sx, p2.sy, 1.0, p2.dx},
    }};
    std::array<std::array<double, 4>, 3> my{{
        {p0.sx, p0.sy, 1.0, p0.dy},
        {p1.sx, p1.sy, 1.0, p1.dy},
        {p2.sx, p2.sy, 1.0, p2.dy},
    }};
    const auto rx = solve_linear<3>(mx);
    const auto ry = solve_linear<3>(my);
    return {rx[0], rx[1], rx[2], ry[0], ry[1], ry[2]};
}

}  // namespace

AffineTransform fit_affine_lsq(std::span<const PointPair> pairs) {
    if (pairs.size() < 3) {
        throw DegenerateConfiguration("fit_affine_lsq: need at least 3 pairs");
    }
    // The two output rows share one normal matrix built from src moments.
    double sxx = 0, sxy = 0, syy = 0, sx = 0, sy = 0;
    double bx0 = 0, bx1 = 0, bx2 = 0, by0 = 0, by1 = 0, by2 = 0;
    const double n = static_cast<double>(pairs.size());
    for (const auto& p : pairs) {
        sxx += p.sx * p.sx;
        sxy += p.sx * p.sy;
        syy += p.sy * p.sy;
        sx += p.sx;
        sy += p.sy;
        bx0 += p.sx * p.dx;
        bx1 += p.sy * p.dx;
        bx2 += p.dx;
        by0 += p.sx * p.dy;
        by1 += p.sy * p.dy;
        by2 += p.dy;
    }
    std::array<std::array<double, 4>, 3> mx{{
        {sxx, sxy, sx, bx0},
        {sxy, syy, sy, bx1},
        {sx, sy, n, bx2},
    }};
    std::array<std::array<double, 4>, 3> my{{
        {sxx, sxy, sx, by0},
        {sxy, syy, sy, by1},
        {sx, sy, n, by2},
    }};
    const auto rx = solve_linear<3>(mx);
    const auto ry = solve_linear<3>(my);
    return {rx[0], rx[1], rx[2], ry[0], ry[1], ry[2]};
}

double median_reprojection_error(const AffineTransform& t,
                                 std::span<const PointPair> pairs) {
    if (pairs.empty()) {
        throw EmptyInput("median_reprojection_error: no pairs");
    }
    std::vector<double> errs;
    errs.reserve(pairs.size());
    for (const auto& p : pairs) errs.push_back(reproj_error(t, p));
    std::sort(errs.begin(), errs.end());
    const size_t n = errs.size();
    if (n % 2 == 1) return errs[n / 2];
    return 0.5 * (errs[n / 2 - 1] + errs[n / 2]);
}

EstimateReport estimate_affine_ransac(std::span<const PointPair> pairs,
                                      double inlier_threshold,
                                      int max_iters,
                                      std::uint64_t seed,
                                      double confidence) {
    if (pairs.size() < 3) {
        throw EstimationFailed("estimate_affine_ransac: need at least 3 pairs");
    }
    if (inlier_threshold <= 0.0 || max_iters < 1) {
        throw InvalidArgument("estimate_affine_ransac: bad parameters");
    }

    // Canonical order makes seed-driven sampling permutation-invariant.
    std::vector<PointPair> sorted(pairs.begin(), pairs.end());
    std::sort(sorted.begin(), sorted.end(), [](const PointPair& a, const PointPair& b) {
        return std::tie(a.sx, a.sy, a.dx, a.dy) < std::tie(b.sx, b.sy, b.dx, b.dy);
    });

    const auto count_inliers = [&](const AffineTransform& t) {
        int c = 0;
        for (const auto& p : sorted) {
            if (reproj_error(t, p) <= inlier_threshold) ++c;
        }
        return c;
    };

    Rng rng(seed);
    const std::uint32_t n = static_cast<std::uint32_t>(sorted.size());

    bool have_best = false;
    AffineTransform best_t;
    int best_inliers = 0;
    double best_median = std::numeric_limits<double>::max();
    double required_iters = static_cast<double>(max_iters);

    for (int iter = 0; iter < max_iters && static_cast<double>(iter) < required_iters; ++iter) {
        std::uint32_t i0 = rng.next_below(n);
        std::uint32_t i1 = rng.next_below(n);
        std::uint32_t i2 = rng.next_below(n);
        if (i0 == i1 || i0 == i2 || i1 == i2) continue;
        const PointPair& p0 = sorted[i0];
        const PointPair& p1 = sorted[i1];
        const PointPair& p2 = sorted[i2];
        if (collinear(p0, p1, p2)) continue;

        AffineTransform cand;
        try {
            cand = fit_exact3(p0, p1, p2);
        } catch (const DegenerateConfiguration&) {
            continue;
        }

        const int inliers = count_inliers(cand);
        if (inliers < 3) continue;

        if (inliers > best_inliers) {
            best_t = cand;
            best_inliers = inliers;
            best_median = median_reprojection_error(best_t, sorted);
            have_best = true;
        } else if (inliers == best_inliers && have_best) {
            const double med = median_reprojection_error(cand, sorted);
            if (med < best_median) {
                best_t = cand;
                best_median = med;
            }
        }

        if (have_best) {
            const double w = static_cast<double>(best_inliers) / static_cast<double>(n);
            const double p_sample = w * w * w;
            if (p_sample >= 1.0) break;
            if (p_sample > 0.0) {
                required_iters = std::log(1.0 - confidence) / std::log(1.0 - p_sample);
            }
        }
    }

    if (!have_best) {
        throw EstimationFailed("estimate_affine_ransac: no sample produced >= 3 inliers");
    }

    std::vector<PointPair> inlier_set;
    inlier_set.reserve(sorted.size());
    for (const auto& p : sorted) {
        if (reproj_error(best_t, p) <= inlier_threshold) inlier_set.push_back(p);
    }

    AffineTransform final_t = best_t;
    try {
        final_t = fit_affine_lsq(inlier_set);
    } catch (const DegenerateConfiguration&) {
        // Keep the sample fit when the inlier set itself is degenerate.
    }

    EstimateReport report;
    report.transform = final_t;
    report.total_count = static_cast<int>(sorted.size());
    report.inlier_count = count_inliers(final_t);
    report.inlier_ratio =
        static_cast<double>(report.inlier_count) / static_cast<double>(report.total_count);
    report.median_reproj_error = median_reprojection_error(final_t, sorted);
    return report;
}

}  // namespace mclsc

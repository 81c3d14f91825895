#include "mclsc/features.hpp"

#include <algorithm>
#include <cmath>

namespace mclsc {

BinaryMask edge_strength_mask(const GrayImage& img, double grad_threshold,
                              int dilate_radius) {
    if (grad_threshold <= 0.0) {
        throw InvalidArgument("edge_strength_mask: grad_threshold must be > 0");
    }
    if (dilate_radius < 0) {
        throw InvalidArgument("edge_strength_mask: dilate_radius must be >= 0");
    }
    const auto [gx, gy] = sobel_gradients(img);
    BinaryMask mask(img.width, img.height);
    const double thr2 = grad_threshold * grad_threshold;
    const size_t n = mask.data.size();
    for (size_t i = 0; i < n; ++i) {
        const double g2 = double(gx.data[i]) * gx.data[i] + double(gy.data[i]) * gy.data[i];
        mask.data[i] = g2 > thr2 ? 1 : 0;
    }
    if (dilate_radius == 0) return mask;

    // Separable dilation by a (2r+1)^2 square.
    const int r = dilate_radius;
    BinaryMask tmp(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            std::uint8_t v = 0;
            for (int dx = -r; dx <= r && !v; ++dx) {
                const int xx = x + dx;
                if (xx >= 0 && xx < img.width) v = mask.data[size_t(y) * img.width + xx];
            }
            tmp.data[size_t(y) * img.width + x] = v;
        }
    }
    BinaryMask out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            std::uint8_t v = 0;
            for (int dy = -r; dy <= r && !v; ++dy) {
                const int yy = y + dy;
                if (yy >= 0 && yy < img.height) v = tmp.data[size_t(yy) * img.width + x];
            }
            out.data[size_t(y) * img.width + x] = v;
        }
    }
    return out;
}

namespace {

constexpr int kTensorWindow = 7;  // structure-tensor accumulation window

// Horizontal then vertical box sum of `src` over a (2h+1) window, borders
// excluded by the caller's margin.
FloatImage box_sum(const FloatImage& src, int half) {
    const int w = src.width;
    const int hgt = src.height;
    FloatImage tmp(w, hgt);
    for (int y = 0; y < hgt; ++y) {
        const float* row = &src.data[size_t(y) * w];
        float* out = &tmp.data[size_t(y) * w];
        double acc = 0.0;
        for (int x = 0; x < std::min(2 * half + 1, w); ++x) acc += row[x];
        if (half < w) out[half] = static_cast<float>(acc);
        for (int x = half + 1; x + half < w; ++x) {
            acc += row[x + half] - row[x - half - 1];
            out[x] = static_cast<float>(acc);
        }
    }
    FloatImage dst(w, hgt);
    for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int y = 0; y < std::min(2 * half + 1, hgt); ++y) acc += tmp.data[size_t(y) * w + x];
        if (half < hgt) dst.data[size_t(half) * w + x] = static_cast<float>(acc);
        for (int y = half + 1; y + half < hgt; ++y) {
            acc += tmp.data[size_t(y + half) * w + x] - tmp.data[size_t(y - half - 1) * w + x];
            dst.data[size_t(y) * w + x] = static_cast<float>(acc);
        }
    }
    return dst;
}

}  // namespace

std::vector<Corner> detect_corners(const GrayImage& img, int max_corners,
                                   double quality_level, double min_distance,
                                   const BinaryMask* mask) {
    if (max_corners < 1) throw InvalidArgument("detect_corners: max_corners must be >= 1");
    if (!(quality_level > 0.0 && quality_level <= 1.0)) {
        throw InvalidArgument("detect_corners: quality_level must be in (0, 1]");
    }
    if (min_distance < 0.0) throw InvalidArgument("detect_corners: min_distance must be >= 0");
    if (mask && !same_size(*mask, img)) {
        throw DimensionMismatch("detect_corners: mask size differs from image");
    }

    const auto [gx, gy] = sobel_gradients(img);
    const int w = img.width;
    const int h = img.height;

    FloatImage gxx(w, h), gxy(w, h), gyy(w, h);
    for (size_t i = 0; i < gxx.data.size(); ++i) {
        const double a = gx.data[i];
        const double b = gy.data[i];
        gxx.data[i] = static_cast<float>(a * a);
        gxy.data[i] = static_cast<float>(a * b);
        gyy.data[i] = static_cast<float>(b * b);
    }
    const int half = kTensorWindow / 2;
    const FloatImage sxx = box_sum(gxx, half);
    const FloatImage sxy = box_sum(gxy, half);
    const FloatImage syy = box_sum(gyy, half);

    // Margin of one extra pixel keeps replicated Sobel borders out of the
    // accumulation window.
    const int margin = half + 1;
    FloatImage response(w, h);
    double max_response = 0.0;
    for (int y = margin; y < h - margin; ++y) {
        for (int x = margin; x < w - margin; ++x) {
            const double a = sxx.at(x, y);
            const double b = sxy.at(x, y);
            const double c = syy.at(x, y);
            const double tr = a + c;
            const double det_part = std::sqrt((a - c) * (a - c) + 4.0 * b * b);
            const double lambda_min = 0.5 * (tr - det_part);
            response.at(x, y) = static_cast<float>(lambda_min);
            if (lambda_min > max_response) max_response = lambda_min;
        }
    }
    if (max_response <= 0.0) return {};

    const double threshold = quality_level * max_response;
    struct Candidate {
        float resp;
        int x, y;
    };
    std::vector<Candidate> candidates;
    for (int y = margin; y < h - margin; ++y) {
        for (int x = margin; x < w - margin; ++x) {
            const float r = response.at(x, y);
            if (r < threshold || r <= 0.0f) continue;
            if (mask && !mask->at(x, y)) continue;
            candidates.push_back({r, x, y});
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.resp != b.resp) return a.resp > b.resp;
        if (a.y != b.y) return a.y < b.y;
        return a.x < b.x;
    });

    std::vector<Corner> accepted;
    accepted.reserve(std::min<size_t>(candidates.size(), size_t(max_corners)));
    const double min_d2 = min_distance * min_distance;
    for (const auto& c : candidates) {
        bool suppressed = false;
        for (const auto& a : accepted) {
            const double dx = a.x - c.x;
            const double dy = a.y - c.y;
            if (dx * dx + dy * dy < min_d2) {
                suppressed = true;
                break;
            }
        }
        if (suppressed) continue;
        accepted.push_back({double(c.x), double(c.y), double(c.resp)});
        if (static_cast<int>(accepted.size()) >= max_corners) break;
    }
    return accepted;
}

namespace {

// Bilinear patch extraction with a constant fractional offset: positions are
// (x0 + fx + c, y0 + fy + r), so the four weights are shared by every pixel.
// Returns false when any required source pixel is out of bounds.
bool extract_patch(const GrayImage& img, double cx, double cy, int half,
                   float* out /* (2*half+1)^2 */) {
    const int n = 2 * half + 1;
    const double ox = cx - half;
    const double oy = cy - half;
    const int x0 = static_cast<int>(std::floor(ox));
    const int y0 = static_cast<int>(std::floor(oy));
    if (x0 < 0 || y0 < 0 || x0 + n >= img.width || y0 + n >= img.height) return false;
    const float fx = static_cast<float>(ox - x0);
    const float fy = static_cast<float>(oy - y0);
    const float w00 = (1.0f - fx) * (1.0f - fy);
    const float w10 = fx * (1.0f - fy);
    const float w01 = (1.0f - fx) * fy;
    const float w11 = fx * fy;
    for (int r = 0; r < n; ++r) {
        const std::uint8_t* row0 = &img.data[size_t(y0 + r) * img.width + x0];
        const std::uint8_t* row1 = row0 + img.width;
        float* dst = out + size_t(r) * n;
        for (int c = 0; c < n; ++c) {
            dst[c] = w00 * row0[c] + w10 * row0[c + 1] + w01 * row1[c] + w11 * row1[c + 1];
        }
    }
    return true;
}

}  // namespace

std::vector<TrackResult> track_lk(const GrayImage& prev, const GrayImage& next,
                                  const std::vector<Corner>& points,
                                  const LkConfig& cfg) {
    if (!same_size(prev, next)) {
        throw DimensionMismatch("track_lk: frames differ in size");
    }
    if (cfg.window < 5 || cfg.window % 2 == 0) {
        throw InvalidArgument("track_lk: window must be odd and >= 5");
    }
    if (cfg.levels < 1) throw InvalidArgument("track_lk: levels must be >= 1");

    // Clamp the pyramid depth to what the image size permits.
    int levels = cfg.levels;
    {
        int w = prev.width, h = prev.height;
        int ok = 1;
        while (ok < levels && w / 2 >= 8 && h / 2 >= 8) {
            w /= 2;
            h /= 2;
            ++ok;
        }
        levels = ok;
    }
    const auto pyr_prev = build_pyramid(prev, levels);
    const auto pyr_next = build_pyramid(next, levels);

    const int half = cfg.window / 2;
    const int n = cfg.window;
    const int area = n * n;
    const double min_eig_threshold = 1e-4 * area;

    // Scratch buffers reused across points.
    std::vector<float> patch_big((n + 2) * (n + 2));
    std::vector<float> tmpl(area), grad_x(area), grad_y(area), moved(area);

    std::vector<TrackResult> results;
    results.reserve(points.size());

    for (const auto& pt : points) {
        TrackResult res;
        res.src = pt;
        res.status = TrackStatus::Lost;

        double gx_disp = 0.0;  // displacement guess carried across levels
        double gy_disp = 0.0;
        bool lost = false;
        double final_residual = 0.0;

        for (int level = levels - 1; level >= 0 && !lost; --level) {
            const GrayImage& I = pyr_prev[level];
            const GrayImage& J = pyr_next[level];
            const double scale = static_cast<double>(1 << level);
            const double px = pt.x / scale;
            const double py = pt.y / scale;
            // Coarse levels refine the guess opportunistically; only the
            // finest level decides whether the point is lost.
            const bool finest = level == 0;

            // Template patch with a one-pixel apron for central differences.
            if (!extract_patch(I, px, py, half + 1, patch_big.data())) {
                if (finest) lost = true;
                else { gx_disp *= 2.0; gy_disp *= 2.0; }
                continue;
            }
            const int bw = n + 2;
            double sxx = 0.0, sxy = 0.0, syy = 0.0;
            for (int r = 0; r < n; ++r) {
                const float* rm = &patch_big[size_t(r) * bw + 1];      // row above
                const float* rc = &patch_big[size_t(r + 1) * bw + 1];  // center row
                const float* rp = &patch_big[size_t(r + 2) * bw + 1];  // row below
                for (int c = 0; c < n; ++c) {
                    const float ix = 0.5f * (rc[c + 1] - rc[c - 1]);
                    const float iy = 0.5f * (rp[c] - rm[c]);
                    const size_t idx = size_t(r) * n + c;
                    tmpl[idx] = rc[c];
                    grad_x[idx] = ix;
                    grad_y[idx] = iy;
                    sxx += double(ix) * ix;
                    sxy += double(ix) * iy;
                    syy += double(iy) * iy;
                }
            }
            const double tr = sxx + syy;
            const double det_part = std::sqrt((sxx - syy) * (sxx - syy) + 4.0 * sxy * sxy);
            const double lambda_min = 0.5 * (tr - det_part);
            if (lambda_min < min_eig_threshold) {
                if (finest) lost = true;
                else { gx_disp *= 2.0; gy_disp *= 2.0; }
                continue;
            }
            const double det = sxx * syy - sxy * sxy;
            const double inv_det = 1.0 / det;

            for (int iter = 0; iter < cfg.max_iters; ++iter) {
                if (!extract_patch(J, px + gx_disp, py + gy_disp, half, moved.data())) {
                    if (finest) lost = true;
                    break;
                }
                double bx = 0.0, by = 0.0, abs_err = 0.0;
                for (int i = 0; i < area; ++i) {
                    const double d = double(tmpl[i]) - double(moved[i]);
                    bx += d * grad_x[i];
                    by += d * grad_y[i];
                    abs_err += std::abs(d);
                }
                final_residual = abs_err / area;
                const double ux = (syy * bx - sxy * by) * inv_det;
                const double uy = (sxx * by - sxy * bx) * inv_det;
                gx_disp += ux;
                gy_disp += uy;
                if (std::hypot(ux, uy) < cfg.epsilon) break;
            }
            if (lost) break;

            if (level > 0) {
                gx_disp *= 2.0;
                gy_disp *= 2.0;
            }
        }

        if (!lost) {
            // Residual at the final position on the finest level.
            if (extract_patch(pyr_next[0], pt.x + gx_disp, pt.y + gy_disp, half,
                              moved.data()) &&
                extract_patch(pyr_prev[0], pt.x, pt.y, half, tmpl.data())) {
                double abs_err = 0.0;
                for (int i = 0; i < area; ++i) {
                    abs_err += std::abs(double(tmpl[i]) - double(moved[i]));
                }
                final_residual = abs_err / area;
            } else {
                lost = true;
            }
        }

        if (!lost && final_residual <= cfg.max_residual) {
            res.status = TrackStatus::Tracked;
            res.dst_x = pt.x + gx_disp;
            res.dst_y = pt.y + gy_disp;
            res.residual = final_residual;
        }
        results.push_back(res);
    }
    return results;
}

}  // namespace mclsc

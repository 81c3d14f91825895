#include "mclsc/image.hpp"

#include <cmath>

namespace mclsc {

GrayImage to_gray(const ColorImage& img) {
    GrayImage out(img.width, img.height);
    const size_t n = static_cast<size_t>(img.width) * img.height;
    for (size_t i = 0; i < n; ++i) {
        const std::uint8_t* p = &img.data[i * 3];
        const double luma = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
        const long v = std::lround(luma);
        out.data[i] = static_cast<std::uint8_t>(std::clamp(v, 0L, 255L));
    }
    return out;
}

std::pair<FloatImage, FloatImage> sobel_gradients(const GrayImage& img) {
    if (img.width < 3 || img.height < 3) {
        throw ImageTooSmall("sobel_gradients: image must be at least 3x3");
    }
    FloatImage gx(img.width, img.height);
    FloatImage gy(img.width, img.height);
    const int w = img.width;
    const int h = img.height;
    for (int y = 0; y < h; ++y) {
        const int ym = y > 0 ? y - 1 : 0;
        const int yp = y < h - 1 ? y + 1 : h - 1;
        for (int x = 0; x < w; ++x) {
            const int xm = x > 0 ? x - 1 : 0;
            const int xp = x < w - 1 ? x + 1 : w - 1;
            const double p00 = img.at(xm, ym), p10 = img.at(x, ym), p20 = img.at(xp, ym);
            const double p01 = img.at(xm, y), p21 = img.at(xp, y);
            const double p02 = img.at(xm, yp), p12 = img.at(x, yp), p22 = img.at(xp, yp);
            gx.at(x, y) = static_cast<float>((p20 + 2.0 * p21 + p22) - (p00 + 2.0 * p01 + p02));
            gy.at(x, y) = static_cast<float>((p02 + 2.0 * p12 + p22) - (p00 + 2.0 * p10 + p20));
        }
    }
    return {std::move(gx), std::move(gy)};
}

GrayImage downsample_2x2(const GrayImage& img) {
    const int ow = img.width / 2;
    const int oh = img.height / 2;
    GrayImage out(ow, oh);
    for (int y = 0; y < oh; ++y) {
        for (int x = 0; x < ow; ++x) {
            const unsigned sum = img.at(2 * x, 2 * y) + img.at(2 * x + 1, 2 * y) +
                                 img.at(2 * x, 2 * y + 1) + img.at(2 * x + 1, 2 * y + 1);
            out.at(x, y) = static_cast<std::uint8_t>((sum + 2) / 4);  // floor(sum/4 + 0.5)
        }
    }
    return out;
}

std::vector<GrayImage> build_pyramid(const GrayImage& img, int levels) {
    if (levels < 1) throw InvalidArgument("build_pyramid: levels must be >= 1");
    int w = img.width;
    int h = img.height;
    for (int l = 1; l < levels; ++l) {
        w /= 2;
        h /= 2;
    }
    if (w < 8 || h < 8) {
        throw TooManyLevels("build_pyramid: coarsest level would fall below 8x8");
    }
    std::vector<GrayImage> pyr;
    pyr.reserve(static_cast<size_t>(levels));
    pyr.push_back(img);
    for (int l = 1; l < levels; ++l) {
        pyr.push_back(downsample_2x2(pyr.back()));
    }
    return pyr;
}

double sample_bilinear(const GrayImage& img, double x, double y) {
    if (!(x >= 0.0 && x <= img.width - 1 && y >= 0.0 && y <= img.height - 1)) {
        throw OutOfBounds("sample_bilinear: coordinate outside image");
    }
    return sample_bilinear_unchecked(img, x, y);
}

namespace {

AffineTransform checked_inverse(const AffineTransform& t) {
    if (!t.invertible()) {
        throw SingularTransform("warp_affine: transform is not invertible");
    }
    return invert(t);
}

}  // namespace

GrayImage warp_affine(const GrayImage& src, const AffineTransform& t,
                      int out_w, int out_h) {
    const AffineTransform inv = checked_inverse(t);
    GrayImage out(out_w, out_h);
    const double max_x = src.width - 1;
    const double max_y = src.height - 1;
    for (int y = 0; y < out_h; ++y) {
        // Walk the row incrementally; the inverse map is affine in x.
        double sx = inv.a11 * 0 + inv.a12 * y + inv.a13;
        double sy = inv.a21 * 0 + inv.a22 * y + inv.a23;
        std::uint8_t* row = &out.data[static_cast<size_t>(y) * out_w];
        for (int x = 0; x < out_w; ++x, sx += inv.a11, sy += inv.a21) {
            if (sx >= 0.0 && sx <= max_x && sy >= 0.0 && sy <= max_y) {
                row[x] = static_cast<std::uint8_t>(
                    std::lround(sample_bilinear_unchecked(src, sx, sy)));
            }
        }
    }
    return out;
}

namespace {

template <typename Img>
Img warp_nearest(const Img& src, const AffineTransform& t, int out_w, int out_h) {
    const AffineTransform inv = checked_inverse(t);
    Img out(out_w, out_h);
    for (int y = 0; y < out_h; ++y) {
        double sx = inv.a12 * y + inv.a13;
        double sy = inv.a22 * y + inv.a23;
        auto* row = &out.data[static_cast<size_t>(y) * out_w];
        for (int x = 0; x < out_w; ++x, sx += inv.a11, sy += inv.a21) {
            const long ix = std::lround(sx);
            const long iy = std::lround(sy);
            if (ix >= 0 && ix < src.width && iy >= 0 && iy < src.height) {
                row[x] = src.data[static_cast<size_t>(iy) * src.width + ix];
            }
        }
    }
    return out;
}

}  // namespace

LabelImage warp_affine(const LabelImage& src, const AffineTransform& t,
                       int out_w, int out_h) {
    return warp_nearest(src, t, out_w, out_h);
}

BinaryMask warp_affine(const BinaryMask& src, const AffineTransform& t,
                       int out_w, int out_h) {
    return warp_nearest(src, t, out_w, out_h);
}

FloatImage abs_diff(const GrayImage& a, const GrayImage& b) {
    if (!same_size(a, b)) {
        throw DimensionMismatch("abs_diff: images differ in size");
    }
    FloatImage out(a.width, a.height);
    const size_t n = a.data.size();
    for (size_t i = 0; i < n; ++i) {
        out.data[i] = static_cast<float>(std::abs(int(a.data[i]) - int(b.data[i])));
    }
    return out;
}

}  // namespace mclsc

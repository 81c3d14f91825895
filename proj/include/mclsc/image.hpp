#pragma once

#include <cassert>
#include <cstdint>
#include <utility>
#include <vector>

#include "mclsc/common.hpp"
#include "mclsc/motion_model.hpp"

namespace mclsc {

// Row-major 8-bit luma image.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    GrayImage() = default;
    GrayImage(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

    std::uint8_t at(int x, int y) const {
        assert(x >= 0 && x < width && y >= 0 && y < height);
        return data[static_cast<size_t>(y) * width + x];
    }
    std::uint8_t& at(int x, int y) {
        assert(x >= 0 && x < width && y >= 0 && y < height);
        return data[static_cast<size_t>(y) * width + x];
    }

    bool operator==(const GrayImage&) const = default;
};

// Row-major 8-bit RGB image (3 bytes per pixel).
struct ColorImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    ColorImage() = default;
    ColorImage(int w, int h)
        : width(w), height(h), data(static_cast<size_t>(w) * h * 3, 0) {}

    const std::uint8_t* rgb(int x, int y) const {
        assert(x >= 0 && x < width && y >= 0 && y < height);
        return &data[(static_cast<size_t>(y) * width + x) * 3];
    }
    std::uint8_t* rgb(int x, int y) {
        assert(x >= 0 && x < width && y >= 0 && y < height);
        return &data[(static_cast<size_t>(y) * width + x) * 3];
    }

    bool operator==(const ColorImage&) const = default;
};

// Row-major boolean mask stored as bytes (0 or 1).
struct BinaryMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;

    BinaryMask() = default;
    BinaryMask(int w, int h, bool fill = false)
        : width(w), height(h), data(static_cast<size_t>(w) * h, fill ? 1 : 0) {}

    bool at(int x, int y) const {
        assert(x >= 0 && x < width && y >= 0 && y < height);
        return data[static_cast<size_t>(y) * width + x] != 0;
    }
    void set(int x, int y, bool v) {
        assert(x >= 0 && x < width && y >= 0 && y < height);
        data[static_cast<size_t>(y) * width + x] = v ? 1 : 0;
    }

    size_t count_true() const {
        size_t c = 0;
        for (auto v : data) c += (v != 0);
        return c;
    }

    bool operator==(const BinaryMask&) const = default;
};

// Row-major 32-bit float image.
struct FloatImage {
    int width = 0;
    int height = 0;
    std::vector<float> data;

    FloatImage() = default;
    FloatImage(int w, int h, float fill = 0.0f)
        : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

    float at(int x, int y) const {
        assert(x >= 0 && x < width && y >= 0 && y < height);
        return data[static_cast<size_t>(y) * width + x];
    }
    float& at(int x, int y) {
        assert(x >= 0 && x < width && y >= 0 && y < height);
        return data[static_cast<size_t>(y) * width + x];
    }

    bool operator==(const FloatImage&) const = default;
};

// Row-major 16-bit label image; 0 is reserved for "no assignment".
struct LabelImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint16_t> data;

    LabelImage() = default;
    LabelImage(int w, int h, std::uint16_t fill = 0)
        : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

    std::uint16_t at(int x, int y) const {
        assert(x >= 0 && x < width && y >= 0 && y < height);
        return data[static_cast<size_t>(y) * width + x];
    }
    std::uint16_t& at(int x, int y) {
        assert(x >= 0 && x < width && y >= 0 && y < height);
        return data[static_cast<size_t>(y) * width + x];
    }

    bool operator==(const LabelImage&) const = default;
};

template <typename A, typename B>
bool same_size(const A& a, const B& b) {
    return a.width == b.width && a.height == b.height;
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

// BT.601 luma: round(0.299 R + 0.587 G + 0.114 B), clamped to [0, 255].
GrayImage to_gray(const ColorImage& img);

// Standard 3x3 Sobel kernels with replicate border addressing.
// Throws ImageTooSmall when either dimension is < 3.
std::pair<FloatImage, FloatImage> sobel_gradients(const GrayImage& img);

// One 2x downsampling step: 2x2 box average with floor(sum/4 + 0.5) rounding;
// an odd trailing row/column is dropped.
GrayImage downsample_2x2(const GrayImage& img);

// Level 0 is the input; each further level is downsample_2x2 of the previous.
// Throws TooManyLevels when the coarsest level would fall below 8x8.
std::vector<GrayImage> build_pyramid(const GrayImage& img, int levels);

// Bilinear interpolation of the four neighbors.
// Throws OutOfBounds outside [0, width-1] x [0, height-1].
double sample_bilinear(const GrayImage& img, double x, double y);

// Unchecked bilinear read for hot loops; caller guarantees
// 0 <= x <= width-1 and 0 <= y <= height-1.
inline double sample_bilinear_unchecked(const GrayImage& img, double x, double y) {
    const int x0 = static_cast<int>(x);
    const int y0 = static_cast<int>(y);
    const int x1 = x0 + 1 < img.width ? x0 + 1 : x0;
    const int y1 = y0 + 1 < img.height ? y0 + 1 : y0;
    const double fx = x - x0;
    const double fy = y - y0;
    const std::uint8_t* row0 = &img.data[static_cast<size_t>(y0) * img.width];
    const std::uint8_t* row1 = &img.data[static_cast<size_t>(y1) * img.width];
    const double top = row0[x0] + fx * (row0[x1] - row0[x0]);
    const double bot = row1[x0] + fx * (row1[x1] - row1[x0]);
    return top + fy * (bot - top);
}

// Inverse-mapping affine warps. `t` maps src coords to output coords; each
// output pixel samples src at t^-1 * p. Gray uses bilinear sampling, labels
// and masks nearest neighbor; pixels with no source are 0 / empty / false.
// Throws SingularTransform when the 2x2 part of `t` is not invertible.
GrayImage warp_affine(const GrayImage& src, const AffineTransform& t,
                      int out_w, int out_h);
LabelImage warp_affine(const LabelImage& src, const AffineTransform& t,
                       int out_w, int out_h);
BinaryMask warp_affine(const BinaryMask& src, const AffineTransform& t,
                       int out_w, int out_h);

// Per-pixel |a - b|. Throws DimensionMismatch.
FloatImage abs_diff(const GrayImage& a, const GrayImage& b);

}  // namespace mclsc

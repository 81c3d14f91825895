#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace mclsc {

// ---------------------------------------------------------------------------
// Error types. Everything thrown by the library derives from Error.
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error { public: using Error::Error; };
class ImageTooSmall : public Error { public: using Error::Error; };
class TooManyLevels : public Error { public: using Error::Error; };
class OutOfBounds : public Error { public: using Error::Error; };
class SingularTransform : public Error { public: using Error::Error; };
class DegenerateConfiguration : public Error { public: using Error::Error; };
class EstimationFailed : public Error { public: using Error::Error; };
class EmptyInput : public Error { public: using Error::Error; };
class InsufficientFeatures : public Error { public: using Error::Error; };
class UnmappedClass : public Error { public: using Error::Error; };
class DegenerateRect : public Error { public: using Error::Error; };
class EmptyMask : public Error { public: using Error::Error; };
class BackendFailure : public Error { public: using Error::Error; };
class UnknownFrame : public Error { public: using Error::Error; };
class IndexOutOfRange : public Error { public: using Error::Error; };
class SourceError : public Error { public: using Error::Error; };
class BaselineInitFailure : public Error { public: using Error::Error; };
class DivisionByZero : public Error { public: using Error::Error; };
class ConfigError : public Error { public: using Error::Error; };
class IoError : public Error { public: using Error::Error; };
class InvalidArgument : public Error { public: using Error::Error; };

// ---------------------------------------------------------------------------
// Axis-aligned integer rectangle (x, y are the top-left corner).
// ---------------------------------------------------------------------------

struct Rect {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    bool contains(int px, int py) const {
        return px >= x && py >= y && px < x + w && py < y + h;
    }
    long long area() const { return static_cast<long long>(w) * h; }

    bool operator==(const Rect&) const = default;
};

inline Rect intersect(const Rect& a, const Rect& b) {
    const int x0 = std::max(a.x, b.x);
    const int y0 = std::max(a.y, b.y);
    const int x1 = std::min(a.x + a.w, b.x + b.w);
    const int y1 = std::min(a.y + a.h, b.y + b.h);
    if (x1 <= x0 || y1 <= y0) return Rect{0, 0, 0, 0};
    return Rect{x0, y0, x1 - x0, y1 - y0};
}

// ---------------------------------------------------------------------------
// Deterministic RNG. mt19937_64 has a standard-pinned output sequence; the
// value mappings below are explicit so results are identical across
// platforms and standard libraries (std::*_distribution is not pinned).
// ---------------------------------------------------------------------------

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53 bits of precision.
    double next_unit() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double next_range(double lo, double hi) {
        return lo + (hi - lo) * next_unit();
    }

    // Uniform in [0, n) without modulo bias.
    std::uint32_t next_below(std::uint32_t n) {
        if (n == 0) throw InvalidArgument("Rng::next_below: n must be > 0");
        const std::uint64_t span = std::uint64_t(n);
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % span;
        std::uint64_t v;
        do {
            v = gen_();
        } while (v >= limit);
        return static_cast<std::uint32_t>(v % span);
    }

    // Standard normal via Box-Muller.
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = next_unit();
        while (u1 <= 0.0) u1 = next_unit();
        const double u2 = next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// splitmix64 step; used to derive independent per-frame / per-call seeds
// from one base seed.
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace mclsc

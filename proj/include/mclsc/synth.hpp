#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mclsc/canvas.hpp"
#include "mclsc/image.hpp"
#include "mclsc/motion_model.hpp"

namespace mclsc {

// Smoothstep-interpolated value noise in [0, 1); deterministic in
// (seed, octave, position). Continuous in x and y, so shifted renderings
// provide exact subpixel ground truth.
double value_noise(std::uint64_t seed, int octave, double x, double y, double cell);

// Weighted 3-octave stack of value_noise, cells {cell, cell/2, cell/4}.
double layered_noise(std::uint64_t seed, double x, double y, double base_cell);

enum class MoverShape { Rectangle, Disk };

struct MoverSpec {
    int class_id = 0;  // must be dynamic in the scene taxonomy
    MoverShape shape = MoverShape::Disk;
    double size_a = 32.0;  // disk radius, or rectangle width
    double size_b = 32.0;  // rectangle height (unused for disks)
    int first_frame = 0;   // active range, inclusive
    int last_frame = 0;
    // Center positions in baseline coordinates, one per active frame.
    std::vector<std::pair<double, double>> trajectory;
    std::uint8_t base_brightness = 210;
    double texture_contrast = 55.0;
};

struct BackgroundSpec {
    double base_cell = 24.0;
    double noise_amplitude = 50.0;
    // Three horizontal class bands (sky / structure / ground analogues).
    std::array<int, 3> band_classes{1, 2, 3};
    std::array<double, 2> band_splits{0.30, 0.65};  // fractions of world height
    std::array<int, 3> band_brightness{170, 120, 90};
};

struct SceneSpec {
    int viewport_w = 0;
    int viewport_h = 0;
    int frame_count = 0;
    std::uint64_t seed = 0;
    BackgroundSpec background;
    // G_t mapping frame coordinates to baseline coordinates; G_0 = identity.
    std::vector<AffineTransform> camera_path;
    std::vector<MoverSpec> movers;
};

struct RenderedFrame {
    GrayImage gray;
    ColorImage color;
    LabelImage truth_labels;
    AffineTransform truth_transform;  // G_t
};

// Renders frames of a scene; the static world (2x viewport, so camera motion
// never samples undefined pixels) is rasterized once at construction.
class SceneRenderer {
public:
    explicit SceneRenderer(SceneSpec spec);

    const SceneSpec& spec() const { return spec_; }
    int frame_count() const { return spec_.frame_count; }

    RenderedFrame render(int t) const;  // throws IndexOutOfRange
    GrayImage render_gray(int t) const;
    LabelImage render_truth_labels(int t) const;

private:
    struct World {
        GrayImage gray;
        LabelImage labels;
    };
    World compose_world(int t) const;
    AffineTransform world_to_frame(int t) const;
    void check_index(int t) const;

    SceneSpec spec_;
    GrayImage world_gray_;    // static background only
    LabelImage world_labels_;
    int offset_x_ = 0;  // baseline -> world coordinate offset
    int offset_y_ = 0;
};

// One-shot convenience wrapper around SceneRenderer.
RenderedFrame render_frame(const SceneSpec& spec, int t);

// Sinusoidal shake with seeded jitter, identity at t = 0; magnitudes stay
// within max_translation pixels and max_rotation_deg degrees.
std::vector<AffineTransform> shake_camera_path(int frames, std::uint64_t seed,
                                               double max_translation,
                                               double max_rotation_deg,
                                               double center_x, double center_y);

// 640x360, 600 frames: gentle shake (<= 6 px, <= 1 deg) over three static
// bands, with two textured movers active for 60-frame windows that are
// separated by at least 150 mover-free frames.
SceneSpec benchmark_scene(std::uint64_t seed);

// Identity camera, no movers; every frame is identical.
SceneSpec static_scene(int viewport_w, int viewport_h, int frames, std::uint64_t seed);

// 320x180, 120 frames, one disk mover in frames [40, 79]; a fast variant of
// the benchmark layout for tests and demos.
SceneSpec mini_scene(std::uint64_t seed);

// Shake-only scene with configurable motion envelope (no movers).
SceneSpec shake_scene(int viewport_w, int viewport_h, int frames, std::uint64_t seed,
                      double max_translation, double max_rotation_deg);

// static/dynamic mapping for every class the generator can produce.
Taxonomy synth_taxonomy();

// Display colors for the generator's classes.
Palette synth_palette();

}  // namespace mclsc

#include "mclsc/synth.hpp"

#include <algorithm>
#include <cmath>

namespace mclsc {

namespace {

constexpr double kPi = 3.14159265358979323846;

double lattice_value(std::uint64_t seed, int octave, int ix, int iy) {
    const std::uint64_t cell =
        (static_cast<std::uint64_t>(static_cast<std::uint32_t>(ix)) << 32) |
        static_cast<std::uint32_t>(iy);
    const std::uint64_t h = mix_seed(mix_seed(seed, static_cast<std::uint64_t>(octave)), cell);
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

}  // namespace

double value_noise(std::uint64_t seed, int octave, double x, double y, double cell) {
    const double gx = x / cell;
    const double gy = y / cell;
    const double fx = std::floor(gx);
    const double fy = std::floor(gy);
    const int ix = static_cast<int>(fx);
    const int iy = static_cast<int>(fy);
    const double tx = smoothstep(gx - fx);
    const double ty = smoothstep(gy - fy);
    const double v00 = lattice_value(seed, octave, ix, iy);
    const double v10 = lattice_value(seed, octave, ix + 1, iy);
    const double v01 = lattice_value(seed, octave, ix, iy + 1);
    const double v11 = lattice_value(seed, octave, ix + 1, iy + 1);
    const double top = v00 + tx * (v10 - v00);
    const double bot = v01 + tx * (v11 - v01);
    return top + ty * (bot - top);
}

double layered_noise(std::uint64_t seed, double x, double y, double base_cell) {
    return 0.5 * value_noise(seed, 0, x, y, base_cell) +
           0.3 * value_noise(seed, 1, x, y, base_cell * 0.5) +
           0.2 * value_noise(seed, 2, x, y, base_cell * 0.25);
}

SceneRenderer::SceneRenderer(SceneSpec spec) : spec_(std::move(spec)) {
    if (spec_.viewport_w < 16 || spec_.viewport_h < 16 || spec_.frame_count < 1) {
        throw InvalidArgument("SceneRenderer: bad scene dimensions");
    }
    if (static_cast<int>(spec_.camera_path.size()) != spec_.frame_count) {
        throw InvalidArgument("SceneRenderer: camera path length != frame count");
    }
    const int ww = 2 * spec_.viewport_w;
    const int wh = 2 * spec_.viewport_h;
    offset_x_ = spec_.viewport_w / 2;
    offset_y_ = spec_.viewport_h / 2;

    world_gray_ = GrayImage(ww, wh);
    world_labels_ = LabelImage(ww, wh);
    const auto& bg = spec_.background;
    const int split0 = static_cast<int>(bg.band_splits[0] * wh);
    const int split1 = static_cast<int>(bg.band_splits[1] * wh);
    for (int y = 0; y < wh; ++y) {
        const int band = y < split0 ? 0 : (y < split1 ? 1 : 2);
        const double base = bg.band_brightness[band];
        const std::uint16_t label = encode_label(bg.band_classes[band], 0);
        for (int x = 0; x < ww; ++x) {
            const double n = layered_noise(spec_.seed, x, y, bg.base_cell);
            const double v = base + (n - 0.5) * 2.0 * bg.noise_amplitude;
            world_gray_.at(x, y) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
            world_labels_.at(x, y) = label;
        }
    }
}

void SceneRenderer::check_index(int t) const {
    if (t < 0 || t >= spec_.frame_count) {
        throw IndexOutOfRange("SceneRenderer: frame " + std::to_string(t) +
                              " outside [0, " + std::to_string(spec_.frame_count) + ")");
    }
}

SceneRenderer::World SceneRenderer::compose_world(int t) const {
    World w{world_gray_, world_labels_};
    for (size_t mi = 0; mi < spec_.movers.size(); ++mi) {
        const MoverSpec& m = spec_.movers[mi];
        if (t < m.first_frame || t > m.last_frame) continue;
        const size_t step = static_cast<size_t>(t - m.first_frame);
        if (step >= m.trajectory.size()) continue;
        const auto [bx, by] = m.trajectory[step];
        const double cx = bx + offset_x_;  // baseline -> world
        const double cy = by + offset_y_;
        const double half_w = m.shape == MoverShape::Disk ? m.size_a : m.size_a * 0.5;
        const double half_h = m.shape == MoverShape::Disk ? m.size_a : m.size_b * 0.5;
        const int x0 = std::max(0, static_cast<int>(std::floor(cx - half_w)));
        const int x1 = std::min(w.gray.width - 1, static_cast<int>(std::ceil(cx + half_w)));
        const int y0 = std::max(0, static_cast<int>(std::floor(cy - half_h)));
        const int y1 = std::min(w.gray.height - 1, static_cast<int>(std::ceil(cy + half_h)));
        const std::uint16_t label = encode_label(m.class_id, static_cast<int>(mi) + 1);
        const std::uint64_t tex_seed = mix_seed(spec_.seed, 0xabcd0000 + mi);
        const double r2 = m.size_a * m.size_a;
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const double dx = x - cx;
                const double dy = y - cy;
                if (m.shape == MoverShape::Disk) {
                    if (dx * dx + dy * dy > r2) continue;
                } else {
                    if (std::abs(dx) > half_w || std::abs(dy) > half_h) continue;
                }
                // Texture anchored to the mover so its interior moves with it.
                const double n = value_noise(tex_seed, 0, dx, dy, 7.0);
                const double v = m.base_brightness + (n - 0.5) * 2.0 * m.texture_contrast;
                w.gray.at(x, y) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
                w.labels.at(x, y) = label;
            }
        }
    }
    return w;
}

AffineTransform SceneRenderer::world_to_frame(int t) const {
    // The camera view is I_t(f) = World(offset + G_t(f)); warp_affine samples
    // the source at M^-1 * p, so M = (offset o G_t)^-1.
    const auto sample = compose(
        AffineTransform::translation(offset_x_, offset_y_), spec_.camera_path[t]);
    return invert(sample);
}

RenderedFrame SceneRenderer::render(int t) const {
    check_index(t);
    const World w = compose_world(t);
    const AffineTransform m = world_to_frame(t);
    RenderedFrame out;
    out.gray = warp_affine(w.gray, m, spec_.viewport_w, spec_.viewport_h);
    out.truth_labels = warp_affine(w.labels, m, spec_.viewport_w, spec_.viewport_h);
    out.truth_transform = spec_.camera_path[t];

    // Color view: class-tinted grayscale, display only.
    out.color = ColorImage(spec_.viewport_w, spec_.viewport_h);
    for (int y = 0; y < spec_.viewport_h; ++y) {
        for (int x = 0; x < spec_.viewport_w; ++x) {
            const double g = out.gray.at(x, y);
            const int cls = label_class(out.truth_labels.at(x, y));
            double tr = 1.0, tg = 1.0, tb = 1.0;
            switch (cls) {
                case 1: tr = 0.85; tg = 0.92; tb = 1.10; break;   // sky
                case 2: tr = 1.00; tg = 1.00; tb = 0.95; break;   // structure
                case 3: tr = 1.05; tg = 0.95; tb = 0.80; break;   // ground
                default: tr = 1.10; tg = 0.85; tb = 0.85; break;  // movers
            }
            std::uint8_t* px = out.color.rgb(x, y);
            px[0] = static_cast<std::uint8_t>(std::clamp(g * tr, 0.0, 255.0));
            px[1] = static_cast<std::uint8_t>(std::clamp(g * tg, 0.0, 255.0));
            px[2] = static_cast<std::uint8_t>(std::clamp(g * tb, 0.0, 255.0));
        }
    }
    return out;
}

GrayImage SceneRenderer::render_gray(int t) const {
    check_index(t);
    const World w = compose_world(t);
    return warp_affine(w.gray, world_to_frame(t), spec_.viewport_w, spec_.viewport_h);
}

LabelImage SceneRenderer::render_truth_labels(int t) const {
    check_index(t);
    const World w = compose_world(t);
    return warp_affine(w.labels, world_to_frame(t), spec_.viewport_w, spec_.viewport_h);
}

RenderedFrame render_frame(const SceneSpec& spec, int t) {
    return SceneRenderer(spec).render(t);
}

std::vector<AffineTransform> shake_camera_path(int frames, std::uint64_t seed,
                                               double max_translation,
                                               double max_rotation_deg,
                                               double center_x, double center_y) {
    Rng rng(mix_seed(seed, 0x5ca1e));
    // Each channel: primary sinusoid plus a sin*cos jitter term; every factor
    // is zero at t = 0 so G_0 stays the identity.
    struct Channel {
        double w_main, w_jit_a, w_jit_b, phase;
    };
    const auto make_channel = [&rng]() {
        return Channel{2.0 * kPi / rng.next_range(110.0, 190.0),
                       2.0 * kPi / rng.next_range(23.0, 47.0),
                       2.0 * kPi / rng.next_range(53.0, 97.0),
                       rng.next_range(0.0, 2.0 * kPi)};
    };
    const Channel ch_tx = make_channel();
    const Channel ch_ty = make_channel();
    const Channel ch_rot = make_channel();

    const auto eval = [](const Channel& c, double t, double amplitude) {
        const double main = 0.7 * std::sin(c.w_main * t);
        const double jitter = 0.3 * std::sin(c.w_jit_a * t) * std::cos(c.w_jit_b * t + c.phase);
        return amplitude * (main + jitter);
    };

    std::vector<AffineTransform> path;
    path.reserve(static_cast<size_t>(frames));
    const double max_rot = max_rotation_deg * kPi / 180.0;
    for (int t = 0; t < frames; ++t) {
        const double tx = eval(ch_tx, t, max_translation);
        const double ty = eval(ch_ty, t, max_translation * 0.7);
        const double rot = eval(ch_rot, t, max_rot);
        path.push_back(compose(AffineTransform::rotation_about(rot, center_x, center_y),
                               AffineTransform::translation(tx, ty)));
    }
    return path;
}

SceneSpec benchmark_scene(std::uint64_t seed) {
    SceneSpec spec;
    spec.viewport_w = 640;
    spec.viewport_h = 360;
    spec.frame_count = 600;
    spec.seed = seed;
    spec.camera_path = shake_camera_path(spec.frame_count, seed, 6.0, 1.0, 320.0, 180.0);

    // Two textured movers in disjoint 60-frame windows, >= 150 static frames
    // before, between, and after.
    MoverSpec disk;
    disk.class_id = 10;
    disk.shape = MoverShape::Disk;
    disk.size_a = 60.0;
    disk.first_frame = 150;
    disk.last_frame = 209;
    disk.base_brightness = 205;
    disk.texture_contrast = 80.0;
    for (int i = 0; i < 60; ++i) {
        const double f = static_cast<double>(i) / 59.0;
        disk.trajectory.push_back({110.0 + f * 430.0, 170.0 + f * 30.0});
    }
    spec.movers.push_back(disk);

    MoverSpec box;
    box.class_id = 11;
    box.shape = MoverShape::Rectangle;
    box.size_a = 150.0;
    box.size_b = 100.0;
    box.first_frame = 420;
    box.last_frame = 479;
    box.base_brightness = 70;
    box.texture_contrast = 70.0;
    for (int i = 0; i < 60; ++i) {
        const double f = static_cast<double>(i) / 59.0;
        box.trajectory.push_back({520.0 - f * 380.0, 120.0 + f * 90.0});
    }
    spec.movers.push_back(box);
    return spec;
}

SceneSpec mini_scene(std::uint64_t seed) {
    SceneSpec spec;
    spec.viewport_w = 320;
    spec.viewport_h = 180;
    spec.frame_count = 120;
    spec.seed = seed;
    spec.camera_path = shake_camera_path(spec.frame_count, seed, 4.0, 0.6, 160.0, 90.0);

    MoverSpec disk;
    disk.class_id = 10;
    disk.shape = MoverShape::Disk;
    disk.size_a = 40.0;
    disk.first_frame = 40;
    disk.last_frame = 79;
    disk.base_brightness = 205;
    disk.texture_contrast = 80.0;
    for (int i = 0; i < 40; ++i) {
        const double f = static_cast<double>(i) / 39.0;
        disk.trajectory.push_back({60.0 + f * 200.0, 80.0 + f * 20.0});
    }
    spec.movers.push_back(disk);
    return spec;
}

SceneSpec static_scene(int viewport_w, int viewport_h, int frames, std::uint64_t seed) {
    SceneSpec spec;
    spec.viewport_w = viewport_w;
    spec.viewport_h = viewport_h;
    spec.frame_count = frames;
    spec.seed = seed;
    spec.camera_path.assign(static_cast<size_t>(frames), AffineTransform::identity());
    return spec;
}

SceneSpec shake_scene(int viewport_w, int viewport_h, int frames, std::uint64_t seed,
                      double max_translation, double max_rotation_deg) {
    SceneSpec spec;
    spec.viewport_w = viewport_w;
    spec.viewport_h = viewport_h;
    spec.frame_count = frames;
    spec.seed = seed;
    spec.camera_path = shake_camera_path(frames, seed, max_translation, max_rotation_deg,
                                         viewport_w / 2.0, viewport_h / 2.0);
    return spec;
}

Taxonomy synth_taxonomy() {
    Taxonomy tax;
    tax.kinds[1] = ClassKind::Static;
    tax.kinds[2] = ClassKind::Static;
    tax.kinds[3] = ClassKind::Static;
    tax.kinds[10] = ClassKind::Dynamic;
    tax.kinds[11] = ClassKind::Dynamic;
    return tax;
}

Palette synth_palette() {
    return Palette{
        {1, {90, 140, 235}},   // sky
        {2, {150, 150, 150}},  // structure
        {3, {170, 120, 60}},   // ground
        {10, {230, 60, 60}},   // disk mover
        {11, {60, 200, 90}},   // box mover
    };
}

}  // namespace mclsc

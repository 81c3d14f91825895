#include "doctest.h"

#include <cmath>
#include <set>

#include "mclsc/synth.hpp"

using namespace mclsc;

namespace {

double psnr_interior(const GrayImage& a, const GrayImage& b, int border) {
    double mse = 0.0;
    int count = 0;
    for (int y = border; y < a.height - border; ++y) {
        for (int x = border; x < a.width - border; ++x) {
            const double d = double(a.at(x, y)) - double(b.at(x, y));
            mse += d * d;
            ++count;
        }
    }
    mse /= count;
    if (mse == 0.0) return 1e9;
    return 10.0 * std::log10(255.0 * 255.0 / mse);
}

bool has_class(const LabelImage& labels, int class_id) {
    for (auto v : labels.data) {
        if (v != 0 && label_class(v) == class_id) return true;
    }
    return false;
}

}  // namespace

TEST_CASE("frame 0 is the identity view of the world") {
    auto spec = mini_scene(4);
    SceneRenderer renderer(spec);
    const auto frame = renderer.render(0);
    CHECK(frame.truth_transform == AffineTransform::identity());
    // Identity means an exact integer crop of the cached world.
    const auto again = renderer.render_gray(0);
    CHECK(frame.gray == again);
    CHECK(frame.gray.width == spec.viewport_w);
    CHECK(frame.gray.height == spec.viewport_h);
}

TEST_CASE("static scenes produce identical frames") {
    auto spec = static_scene(80, 60, 5, 11);
    SceneRenderer renderer(spec);
    const auto f0 = renderer.render_gray(0);
    for (int t = 1; t < 5; ++t) {
        CHECK(renderer.render_gray(t) == f0);
    }
}

TEST_CASE("movers appear exactly inside their active range") {
    auto spec = mini_scene(9);
    const auto& mover = spec.movers[0];
    SceneRenderer renderer(spec);

    CHECK_FALSE(has_class(renderer.render_truth_labels(mover.first_frame - 1), mover.class_id));
    CHECK(has_class(renderer.render_truth_labels(mover.first_frame), mover.class_id));
    CHECK(has_class(renderer.render_truth_labels(mover.last_frame), mover.class_id));
    CHECK_FALSE(has_class(renderer.render_truth_labels(mover.last_frame + 1), mover.class_id));
}

TEST_CASE("rendering is deterministic under a fixed seed") {
    auto a = SceneRenderer(benchmark_scene(7));
    auto b = SceneRenderer(benchmark_scene(7));
    for (const int t : {0, 151, 300}) {
        CHECK(a.render_gray(t) == b.render_gray(t));
        CHECK(a.render_truth_labels(t) == b.render_truth_labels(t));
    }
    auto c = SceneRenderer(benchmark_scene(8));
    CHECK_FALSE(a.render_gray(0) == c.render_gray(0));
}

TEST_CASE("frame index bounds are enforced") {
    SceneRenderer renderer(mini_scene(2));
    CHECK_THROWS_AS(renderer.render(-1), IndexOutOfRange);
    CHECK_THROWS_AS(renderer.render(120), IndexOutOfRange);
}

TEST_CASE("benchmark scene matches its published layout") {
    auto spec = benchmark_scene(7);
    CHECK(spec.frame_count == 600);
    CHECK(spec.viewport_w == 640);
    CHECK(spec.viewport_h == 360);
    REQUIRE(spec.movers.size() == 2);

    // Mover windows: 60 frames each, separated by >= 150 static frames, with
    // 20% total mover occupancy.
    std::set<int> active;
    for (const auto& m : spec.movers) {
        CHECK(m.last_frame - m.first_frame + 1 == 60);
        for (int t = m.first_frame; t <= m.last_frame; ++t) active.insert(t);
    }
    CHECK(active.size() == 120);
    CHECK(double(active.size()) / spec.frame_count == doctest::Approx(0.2));
    CHECK(spec.movers[0].first_frame >= 150);
    CHECK(spec.movers[1].first_frame - spec.movers[0].last_frame - 1 >= 150);
    CHECK(spec.frame_count - spec.movers[1].last_frame - 1 >= 100);

    // Camera path stays inside the stated envelope and starts at identity.
    CHECK(spec.camera_path[0] == AffineTransform::identity());
    for (const auto& g : spec.camera_path) {
        const auto [cx, cy] = apply(g, 320.0, 180.0);
        CHECK(std::hypot(cx - 320.0, cy - 180.0) <= 12.0);
        const double angle = std::atan2(g.a21, g.a11) * 180.0 / 3.14159265358979323846;
        CHECK(std::abs(angle) <= 1.0 + 1e-9);
    }
}

TEST_CASE("ground-truth transforms are self-consistent") {
    // Warping frame t by G_t must reproduce the baseline view interior.
    auto spec = shake_scene(160, 120, 12, 5, 8.0, 2.0);
    SceneRenderer renderer(spec);
    const auto baseline = renderer.render_gray(0);
    for (const int t : {3, 7, 11}) {
        const auto frame = renderer.render_gray(t);
        const auto back = warp_affine(frame, spec.camera_path[t], 160, 120);
        CHECK(psnr_interior(baseline, back, 16) >= 35.0);
    }
}

TEST_CASE("truth labels respect the taxonomy split") {
    auto spec = mini_scene(6);
    SceneRenderer renderer(spec);
    const auto tax = synth_taxonomy();

    const auto quiet = renderer.render_truth_labels(0);
    for (auto v : quiet.data) {
        REQUIRE(v != 0);
        CHECK(tax.is_static(label_class(v)));
    }

    const auto busy = renderer.render_truth_labels(spec.movers[0].first_frame + 5);
    bool saw_dynamic = false;
    for (auto v : busy.data) {
        if (v != 0 && tax.is_dynamic(label_class(v))) {
            saw_dynamic = true;
            CHECK(label_instance(v) == 1);  // first mover
        }
    }
    CHECK(saw_dynamic);
}

TEST_CASE("value noise is smooth and stays in range") {
    for (int i = 0; i < 200; ++i) {
        const double x = i * 0.37, y = i * 0.21;
        const double v = layered_noise(42, x, y, 16.0);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        // continuity: small steps move the value a little
        const double v2 = layered_noise(42, x + 0.01, y, 16.0);
        CHECK(std::abs(v2 - v) < 0.05);
    }
}

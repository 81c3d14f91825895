#include "doctest.h"

#include <cstdlib>

#include "mclsc/common.hpp"
#include "mclsc/gating.hpp"

using namespace mclsc;

namespace {

struct GateInputs {
    GrayImage curr;
    GrayImage prev;
    BinaryMask valid;
};

GateInputs uniform_diff(int w, int h, std::uint8_t delta) {
    GateInputs g{GrayImage(w, h, 100), GrayImage(w, h, static_cast<std::uint8_t>(100 + delta)),
                 BinaryMask(w, h, true)};
    return g;
}

}  // namespace

TEST_CASE("motion_score basics") {
    auto g = uniform_diff(16, 12, 0);
    CHECK(motion_score(g.curr, g.prev, g.valid) == doctest::Approx(0.0));

    g = uniform_diff(16, 12, 10);
    CHECK(motion_score(g.curr, g.prev, g.valid) == doctest::Approx(10.0));
}

TEST_CASE("motion_score averages only over valid pixels") {
    GrayImage curr(10, 10, 0);
    GrayImage prev(10, 10, 0);
    BinaryMask valid(10, 10, false);
    // 40 valid pixels; half differ by 100.
    int marked = 0;
    for (int y = 0; y < 10 && marked < 40; ++y) {
        for (int x = 0; x < 10 && marked < 40; ++x) {
            valid.set(x, y, true);
            if (marked < 20) curr.at(x, y) = 100;
            ++marked;
        }
    }
    CHECK(motion_score(curr, prev, valid) == doctest::Approx(50.0));
}

TEST_CASE("motion gate input validation") {
    GrayImage a(8, 8, 0);
    GrayImage b(9, 8, 0);
    BinaryMask mask(8, 8, true);
    CHECK_THROWS_AS(motion_score(a, b, mask), DimensionMismatch);

    BinaryMask empty(8, 8, false);
    CHECK_THROWS_AS(motion_score(a, a, empty), EmptyMask);
    CHECK_THROWS_AS(motion_area_ratio(a, a, empty, 25), EmptyMask);
}

TEST_CASE("motion_area_ratio examples") {
    auto g = uniform_diff(16, 12, 0);
    CHECK(motion_area_ratio(g.curr, g.prev, g.valid, 25) == doctest::Approx(0.0));

    g = uniform_diff(16, 12, 255 - 100);
    CHECK(motion_area_ratio(g.curr, g.prev, g.valid, 25) == doctest::Approx(1.0));

    // Exactly 10% of valid pixels differ by 50.
    GrayImage curr(20, 10, 0);
    GrayImage prev(20, 10, 0);
    BinaryMask valid(20, 10, true);
    for (int i = 0; i < 20; ++i) curr.data[i] = 50;
    CHECK(motion_area_ratio(curr, prev, valid, 25) == doctest::Approx(0.10));
}

TEST_CASE("area ratio uses a strict per-pixel threshold") {
    auto g = uniform_diff(8, 8, 25);
    CHECK(motion_area_ratio(g.curr, g.prev, g.valid, 25) == doctest::Approx(0.0));
    g = uniform_diff(8, 8, 26);
    CHECK(motion_area_ratio(g.curr, g.prev, g.valid, 25) == doctest::Approx(1.0));
}

TEST_CASE("decide trigger logic") {
    GateConfig cfg;  // tau_s 2.0, tau_a 0.01, spacing 10

    SUBCASE("static scene never triggers") {
        const auto d = decide(cfg, 0.0, 0.0, 100);
        CHECK_FALSE(d.triggered);
        CHECK_FALSE(d.suppressed_by_spacing);
    }
    SUBCASE("both conditions exceeded with spacing satisfied") {
        const auto d = decide(cfg, 2 * cfg.tau_s, 2 * cfg.tau_a, cfg.min_spacing);
        CHECK(d.triggered);
        CHECK_FALSE(d.suppressed_by_spacing);
    }
    SUBCASE("spacing suppression is reported") {
        const auto d = decide(cfg, 2 * cfg.tau_s, 2 * cfg.tau_a, cfg.min_spacing - 1);
        CHECK_FALSE(d.triggered);
        CHECK(d.suppressed_by_spacing);
    }
    SUBCASE("strict inequalities: equality never triggers") {
        CHECK_FALSE(decide(cfg, cfg.tau_s, 2 * cfg.tau_a, 100).triggered);
        CHECK_FALSE(decide(cfg, 2 * cfg.tau_s, cfg.tau_a, 100).triggered);
    }
    SUBCASE("one condition alone is not enough") {
        CHECK_FALSE(decide(cfg, 2 * cfg.tau_s, 0.0, 100).triggered);
        CHECK_FALSE(decide(cfg, 0.0, 2 * cfg.tau_a, 100).triggered);
    }
}

namespace {

// Replays the decision sequence over a fixed (s, a) trace the way the
// pipeline does: the spacing counter resets only on a trigger.
int count_triggers(const GateConfig& cfg, const std::vector<std::pair<double, double>>& trace,
                   std::vector<int>* trigger_frames = nullptr) {
    int count = 0;
    int since = cfg.min_spacing;
    for (size_t i = 0; i < trace.size(); ++i) {
        const auto d = decide(cfg, trace[i].first, trace[i].second, since);
        if (d.triggered) {
            ++count;
            if (trigger_frames) trigger_frames->push_back(static_cast<int>(i));
            since = 1;
        } else {
            since += 1;
        }
    }
    return count;
}

}  // namespace

TEST_CASE("spacing: consecutive triggers are at least min_spacing apart") {
    GateConfig cfg;
    cfg.min_spacing = 7;
    // Strong motion on every frame: triggers come exactly every 7 frames.
    std::vector<std::pair<double, double>> trace(50, {10.0, 0.5});
    std::vector<int> frames;
    count_triggers(cfg, trace, &frames);
    REQUIRE(frames.size() >= 2);
    for (size_t i = 1; i < frames.size(); ++i) {
        CHECK(frames[i] - frames[i - 1] >= cfg.min_spacing);
    }
}

TEST_CASE("raising thresholds never increases the trigger count") {
    Rng rng(31);
    std::vector<std::pair<double, double>> trace;
    for (int i = 0; i < 300; ++i) {
        const bool burst = (i / 25) % 3 == 0;
        trace.push_back({burst ? rng.next_range(0.0, 8.0) : rng.next_range(0.0, 1.0),
                         burst ? rng.next_range(0.0, 0.2) : rng.next_range(0.0, 0.01)});
    }
    const std::vector<double> tau_s_grid{0.5, 1.0, 2.0, 4.0, 8.0};
    const std::vector<double> tau_a_grid{0.001, 0.01, 0.05, 0.2};
    for (const double tau_a : tau_a_grid) {
        int prev = INT32_MAX;
        for (const double tau_s : tau_s_grid) {
            GateConfig cfg;
            cfg.tau_s = tau_s;
            cfg.tau_a = tau_a;
            const int n = count_triggers(cfg, trace);
            CHECK(n <= prev);
            prev = n;
        }
    }
    for (const double tau_s : tau_s_grid) {
        int prev = INT32_MAX;
        for (const double tau_a : tau_a_grid) {
            GateConfig cfg;
            cfg.tau_s = tau_s;
            cfg.tau_a = tau_a;
            const int n = count_triggers(cfg, trace);
            CHECK(n <= prev);
            prev = n;
        }
    }
}

TEST_CASE("all-true mask equals the brute-force whole-image computation") {
    Rng rng(64);
    GrayImage curr(32, 20);
    GrayImage prev(32, 20);
    for (size_t i = 0; i < curr.data.size(); ++i) {
        curr.data[i] = static_cast<std::uint8_t>(rng.next_below(256));
        prev.data[i] = static_cast<std::uint8_t>(rng.next_below(256));
    }
    const BinaryMask all(32, 20, true);

    double sum = 0.0;
    int over = 0;
    for (size_t i = 0; i < curr.data.size(); ++i) {
        const int d = std::abs(int(curr.data[i]) - int(prev.data[i]));
        sum += d;
        over += d > 25;
    }
    CHECK(motion_score(curr, prev, all) ==
          doctest::Approx(sum / curr.data.size()).epsilon(1e-12));
    CHECK(motion_area_ratio(curr, prev, all, 25) ==
          doctest::Approx(double(over) / curr.data.size()).epsilon(1e-12));
}

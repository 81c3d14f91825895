#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "mclsc/common.hpp"
#include "mclsc/metrics.hpp"

using namespace mclsc;

namespace {

std::vector<FrameStat> make_stats(int frames, int calls, double t_ms) {
    std::vector<FrameStat> stats(frames);
    for (int i = 0; i < frames; ++i) {
        stats[i].t_total_ms = t_ms;
        stats[i].seg_submitted = i < calls;
    }
    return stats;
}

// Independent oracle: same closest-ranks definition, written separately.
double percentile_oracle(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double rank = q / 100.0 * (v.size() - 1);
    const auto lo = static_cast<size_t>(std::floor(rank));
    const auto hi = static_cast<size_t>(std::ceil(rank));
    const double w = rank - lo;
    return v[lo] * (1.0 - w) + v[hi] * w;
}

}  // namespace

TEST_CASE("percentile examples") {
    CHECK(percentile({5.0}, 0) == 5.0);
    CHECK(percentile({5.0}, 50) == 5.0);
    CHECK(percentile({5.0}, 100) == 5.0);
    CHECK(percentile({1, 2, 3, 4, 5}, 50) == doctest::Approx(3.0));
    CHECK(percentile({10, 20}, 95) == doctest::Approx(19.5));
    CHECK_THROWS_AS(percentile({}, 50), EmptyInput);
    CHECK_THROWS_AS(percentile({1.0}, 101), InvalidArgument);
}

TEST_CASE("percentile matches the brute-force oracle on random lists") {
    Rng rng(17);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 1 + static_cast<int>(rng.next_below(40));
        std::vector<double> values;
        values.reserve(n);
        for (int i = 0; i < n; ++i) values.push_back(rng.next_range(0.0, 1000.0));
        const double q = rng.next_range(0.0, 100.0);
        CHECK(percentile(values, q) == doctest::Approx(percentile_oracle(values, q)).epsilon(1e-12));
    }
}

TEST_CASE("summarize reproduces the derivable aggregate cells") {
    SUBCASE("paper-shaped call statistics") {
        const auto s = summarize(make_stats(2000, 1909, 5100.1));
        CHECK(s.frames == 2000);
        CHECK(s.seg_calls == 1909);
        CHECK(s.call_rate == doctest::Approx(0.9545).epsilon(1e-12));
        CHECK(format_fixed(s.call_rate, 3) == "0.955");
        CHECK(format_fixed(s.eff_fps, 2) == "0.20");
    }
    SUBCASE("constant series") {
        const auto s = summarize(make_stats(50, 50, 100.0));
        CHECK(s.mean_ms == doctest::Approx(100.0));
        CHECK(s.p50_ms == doctest::Approx(100.0));
        CHECK(s.p95_ms == doctest::Approx(100.0));
        CHECK(s.p99_ms == doctest::Approx(100.0));
        CHECK(s.eff_fps == doctest::Approx(10.0));
    }
    SUBCASE("gated-row effective fps rounding") {
        // A raw mean of 170.52 displays as "170.5" and its reciprocal as
        // "5.86"; the displayed mean itself (exactly 170.5) would round the
        // fps cell to 5.87, so the published pair can only come from a raw
        // mean slightly above the printed one.
        const auto s = summarize(make_stats(2000, 54, 170.52));
        CHECK(format_fixed(s.mean_ms, 1) == "170.5");
        CHECK(s.eff_fps == doctest::Approx(1000.0 / 170.52));
        CHECK(format_fixed(s.eff_fps, 2) == "5.86");
    }
    SUBCASE("empty input") {
        CHECK_THROWS_AS(summarize({}), EmptyInput);
    }
}

TEST_CASE("percentile ordering holds on every summary") {
    Rng rng(23);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<FrameStat> stats;
        const int n = 2 + static_cast<int>(rng.next_below(200));
        for (int i = 0; i < n; ++i) {
            stats.push_back({rng.next_range(1.0, 500.0), rng.next_unit() < 0.3});
        }
        const auto s = summarize(stats);
        CHECK(s.p50_ms <= s.p95_ms);
        CHECK(s.p95_ms <= s.p99_ms);
    }
}

TEST_CASE("compare reproduces the published ratios") {
    const auto naive = summarize(make_stats(2000, 1909, 5100.1));
    const auto gated = summarize(make_stats(2000, 54, 170.52));
    const auto cmp = compare(naive, gated);

    CHECK(cmp.speedup_calls == doctest::Approx(35.35).epsilon(0.0003));
    CHECK(cmp.speedup_mean == doctest::Approx(29.91).epsilon(0.0003));
    CHECK(format_fixed(cmp.speedup_calls, 2) == "35.35");
    CHECK(format_fixed(cmp.speedup_mean, 2) == "29.91");

    const auto same = compare(naive, naive);
    CHECK(same.speedup_calls == doctest::Approx(1.0));
    CHECK(same.speedup_mean == doctest::Approx(1.0));
}

TEST_CASE("compare rejects zero denominators") {
    const auto naive = summarize(make_stats(100, 50, 10.0));
    const auto no_calls = summarize(make_stats(100, 0, 10.0));
    CHECK_THROWS_AS(compare(naive, no_calls), DivisionByZero);
}

TEST_CASE("comparison table carries the Table-1 column set") {
    const auto naive = summarize(make_stats(2000, 1909, 5100.1));
    const auto gated = summarize(make_stats(2000, 54, 170.52));
    const std::string table = render_comparison_table(compare(naive, gated));

    for (const char* needle :
         {"Scenario", "Frames", "SegCalls", "CallRate", "Mean(ms)", "Median", "P95", "P99",
          "Eff.FPS", "NAIVE", "GATED", "0.955", "0.027", "5100.1", "170.5", "0.20", "5.86",
          "35.35", "29.91"}) {
        INFO("missing: " << needle);
        CHECK(table.find(needle) != std::string::npos);
    }
}

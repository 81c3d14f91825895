#include "mclsc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace mclsc {

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw EmptyInput("percentile: empty list");
    if (!(q >= 0.0 && q <= 100.0)) {
        throw InvalidArgument("percentile: q must be in [0, 100]");
    }
    std::sort(values.begin(), values.end());
    const double rank = q / 100.0 * static_cast<double>(values.size() - 1);
    const size_t lo = static_cast<size_t>(std::floor(rank));
    const size_t hi = static_cast<size_t>(std::ceil(rank));
    if (lo == hi) return values[lo];
    const double frac = rank - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

RunSummary summarize(const std::vector<FrameStat>& stats) {
    if (stats.empty()) throw EmptyInput("summarize: no records");
    RunSummary s;
    s.frames = static_cast<int>(stats.size());
    std::vector<double> times;
    times.reserve(stats.size());
    double sum = 0.0;
    for (const auto& r : stats) {
        times.push_back(r.t_total_ms);
        sum += r.t_total_ms;
        s.seg_calls += r.seg_submitted ? 1 : 0;
    }
    s.call_rate = static_cast<double>(s.seg_calls) / static_cast<double>(s.frames);
    s.mean_ms = sum / static_cast<double>(s.frames);
    s.p50_ms = percentile(times, 50.0);
    s.p95_ms = percentile(times, 95.0);
    s.p99_ms = percentile(times, 99.0);
    s.eff_fps = s.mean_ms > 0.0 ? 1000.0 / s.mean_ms : 0.0;
    return s;
}

Comparison compare(const RunSummary& naive, const RunSummary& gated) {
    if (gated.mean_ms <= 0.0 || gated.seg_calls == 0) {
        throw DivisionByZero("compare: gated denominators must be positive");
    }
    Comparison c;
    c.naive = naive;
    c.gated = gated;
    c.speedup_mean = naive.mean_ms / gated.mean_ms;
    c.speedup_calls =
        static_cast<double>(naive.seg_calls) / static_cast<double>(gated.seg_calls);
    return c;
}

std::string format_fixed(double value, int decimals) {
    double scale = 1.0;
    for (int i = 0; i < decimals; ++i) scale *= 10.0;
    const double rounded = std::round(value * scale) / scale;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, rounded);
    return buf;
}

std::string render_summary_row(const std::string& name, const RunSummary& s) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-8s %7d %9d %9s %10s %8s %8s %8s %8s",
                  name.c_str(), s.frames, s.seg_calls,
                  format_fixed(s.call_rate, 3).c_str(),
                  format_fixed(s.mean_ms, 1).c_str(),
                  format_fixed(s.p50_ms, 1).c_str(),
                  format_fixed(s.p95_ms, 1).c_str(),
                  format_fixed(s.p99_ms, 1).c_str(),
                  format_fixed(s.eff_fps, 2).c_str());
    return buf;
}

std::string render_comparison_table(const Comparison& cmp) {
    std::ostringstream out;
    char header[256];
    std::snprintf(header, sizeof(header), "%-8s %7s %9s %9s %10s %8s %8s %8s %8s",
                  "Scenario", "Frames", "SegCalls", "CallRate", "Mean(ms)", "Median",
                  "P95", "P99", "Eff.FPS");
    out << header << "\n";
    out << render_summary_row("NAIVE", cmp.naive) << "\n";
    out << render_summary_row("GATED", cmp.gated) << "\n";
    out << "speedup_calls = " << format_fixed(cmp.speedup_calls, 2) << "\n";
    out << "speedup_mean  = " << format_fixed(cmp.speedup_mean, 2) << "\n";
    return out.str();
}

}  // namespace mclsc

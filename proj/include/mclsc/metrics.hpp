#pragma once

#include <string>
#include <vector>

#include "mclsc/common.hpp"

namespace mclsc {

// Minimal per-frame view a summary needs; the full runtime record carries
// more fields but only these two feed the aggregate statistics.
struct FrameStat {
    double t_total_ms = 0.0;
    bool seg_submitted = false;
};

struct RunSummary {
    int frames = 0;
    int seg_calls = 0;
    double call_rate = 0.0;
    double mean_ms = 0.0;
    double p50_ms = 0.0;
    double p95_ms = 0.0;
    double p99_ms = 0.0;
    double eff_fps = 0.0;
};

struct Comparison {
    RunSummary naive;
    RunSummary gated;
    double speedup_mean = 0.0;
    double speedup_calls = 0.0;
};

// Linear interpolation between closest ranks on the (n-1) basis.
// Throws EmptyInput on an empty list, InvalidArgument for q outside [0, 100].
double percentile(std::vector<double> values, double q);

// Aggregates per the run-summary definitions. Throws EmptyInput.
RunSummary summarize(const std::vector<FrameStat>& stats);

// NAIVE / GATED ratios. Throws DivisionByZero when a gated denominator is 0.
Comparison compare(const RunSummary& naive, const RunSummary& gated);

// Fixed-decimal formatting with round-half-away-from-zero, so reported
// values are stable across platforms.
std::string format_fixed(double value, int decimals);

// Two-row table with the columns Frames, SegCalls, CallRate, Mean(ms),
// Median, P95, P99, Eff.FPS, plus the two speedup lines.
std::string render_comparison_table(const Comparison& cmp);

std::string render_summary_row(const std::string& name, const RunSummary& s);

}  // namespace mclsc

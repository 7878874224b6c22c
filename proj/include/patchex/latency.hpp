#ifndef PATCHEX_LATENCY_HPP
#define PATCHEX_LATENCY_HPP

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "patchex/common.hpp"

namespace px {

// Analytic frame-timing model. All durations are in milliseconds: refresh_ms is
// the display period D, render_ms the per-frame render times R_i, interp_ms /
// extrap_ms the cost of synthesizing one generated frame.
struct TimingScenario {
    double refresh_ms = 0.0;
    std::vector<double> render_ms;
    double interp_ms = 0.0;
    double extrap_ms = 0.0;

    void validate() const
    {
        if (!(refresh_ms > 0.0))
            throw data_error("timing: refresh period must be positive");
        if (!(interp_ms > 0.0) || !(extrap_ms > 0.0))
            throw data_error("timing: synthesis costs must be positive");
        if (render_ms.empty())
            throw data_error("timing: no render samples");
        for (double r : render_ms) {
            if (!(r > 0.0))
                throw data_error("timing: render times must be positive");
            if (!(r > refresh_ms))
                throw data_error("timing: render within one refresh needs no synthesis");
        }
    }
};

enum class SynthesisMode { interpolate, extrapolate };

// Per-frame presentation latency of the rendered frame plus a feasibility flag:
// whether the synthesis work fits the schedule (it never aborts the model).
struct LatencyReport {
    std::vector<double> presentation_ms;
    std::vector<bool> feasible;
};

// Interpolation holds frame i back one extra period to synthesize between i-1
// and i: latency 3D - R_i, feasible when R_i + I <= 2D. Extrapolation presents
// each rendered frame immediately (latency 0) and synthesizes ahead, feasible
// when the next frame's render plus synthesis fits two periods.
inline LatencyReport presentation_latency(const TimingScenario& s, SynthesisMode mode)
{
    s.validate();
    const double d = s.refresh_ms;
    LatencyReport report;
    report.presentation_ms.reserve(s.render_ms.size());
    report.feasible.reserve(s.render_ms.size());
    for (size_t i = 0; i < s.render_ms.size(); ++i) {
        if (mode == SynthesisMode::interpolate) {
            report.presentation_ms.push_back(3.0 * d - s.render_ms[i]);
            report.feasible.push_back(s.render_ms[i] + s.interp_ms <= 2.0 * d);
        } else {
            report.presentation_ms.push_back(0.0);
            const bool last = i + 1 == s.render_ms.size();
            report.feasible.push_back(last || s.render_ms[i + 1] + s.extrap_ms <= 2.0 * d);
        }
    }
    return report;
}

// Fraction of frames whose latency strictly exceeds the perceptual threshold.
inline double jnd_violation_fraction(const std::vector<double>& latencies_ms, double threshold_ms)
{
    if (latencies_ms.empty())
        throw data_error("jnd: no latency samples");
    size_t over = 0;
    for (double p : latencies_ms)
        if (p > threshold_ms)
            ++over;
    return double(over) / double(latencies_ms.size());
}

inline std::string latency_csv(const LatencyReport& r)
{
    std::string out = "frame_index,presentation_ms,feasible\n";
    for (size_t i = 0; i < r.presentation_ms.size(); ++i) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%zu,%.6f,%d\n", i, r.presentation_ms[i],
                      r.feasible[i] ? 1 : 0);
        out += buf;
    }
    return out;
}

} // namespace px

#endif // PATCHEX_LATENCY_HPP

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sser {

// One sensor event: pixel coordinates, microsecond timestamp, polarity ±1.
struct Event {
    std::uint16_t x = 0;
    std::uint16_t y = 0;
    std::uint64_t t = 0;  // microseconds
    std::int8_t p = 1;    // -1 or +1
};

inline bool operator==(const Event& a, const Event& b) {
    return a.x == b.x && a.y == b.y && a.t == b.t && a.p == b.p;
}

// Ordered event stream with sensor dimensions. Timestamps are non-decreasing;
// ties are allowed only across distinct pixels.
struct EventSequence {
    std::uint16_t width = 0;
    std::uint16_t height = 0;
    std::vector<Event> events;

    bool empty() const { return events.empty(); }
    std::size_t size() const { return events.size(); }
};

// Throws Error("validation", ...) on bounds, ordering or same-pixel-tie
// violations. Readers and the generator run this before handing a sequence out.
void validate_sequence(const EventSequence& seq);

enum class ScenePattern : std::uint8_t { Static = 0, Ramp = 1, Bar = 2, Dot = 3, Mixed = 4 };

ScenePattern scene_pattern_from_name(const std::string& name);
const char* scene_pattern_name(ScenePattern p);

// Synthetic moving-geometry scene rendered through the per-pixel
// log-brightness threshold rule: an event fires whenever the brightness at a
// pixel moves a full threshold step away from its level at that pixel's
// previous event.
struct SceneConfig {
    std::uint16_t width = 64;
    std::uint16_t height = 64;
    double threshold = 0.15;  // contrast threshold, > 0
    ScenePattern pattern = ScenePattern::Bar;
    std::uint64_t duration_us = 200000;
    std::uint64_t seed = 1;

    // pattern shape
    double amplitude = 1.0;    // peak log-brightness of the moving geometry
    double bar_width = 6.0;    // pixels
    double bar_speed = 160.0;  // pixels / second
    int dot_count = 3;
    double dot_sigma = 2.5;    // pixels
    double dot_speed = 120.0;  // pixels / second

    // brightness sampling step; crossings are interpolated inside a step
    std::uint32_t sample_dt_us = 200;
};

EventSequence generate_synthetic(const SceneConfig& cfg);

// Events with t0 <= t < t0 + window_us, order preserved.
EventSequence slice_window(const EventSequence& seq, std::uint64_t t0, std::uint64_t window_us);

// (t - t0 + 1) / (window_us + 1) per event; strictly inside (0, 1) so that 0
// stays reserved for padding. Throws if an event lies outside the window.
std::vector<double> normalize_timestamps(const EventSequence& window, std::uint64_t t0,
                                         std::uint64_t window_us);

// Spatial crop with rebased coordinates; keeps event order.
EventSequence crop_events(const EventSequence& seq, int x0, int y0, int w, int h);

}  // namespace sser

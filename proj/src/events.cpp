// SPDX-License-Identifier: Apache-2.0
#include "sser/events.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sser/common.hpp"

namespace sser {

void validate_sequence(const EventSequence& seq) {
    std::uint64_t prev_t = 0;
    bool first = true;
    for (std::size_t i = 0; i < seq.events.size(); ++i) {
        const Event& e = seq.events[i];
        if (e.x >= seq.width || e.y >= seq.height)
            fail("validation", "event " + std::to_string(i) + " out of bounds: (" +
                                   std::to_string(e.x) + "," + std::to_string(e.y) + ") on " +
                                   std::to_string(seq.width) + "x" + std::to_string(seq.height));
        if (e.p != 1 && e.p != -1)
            fail("validation", "event " + std::to_string(i) + " has polarity " + std::to_string(e.p));
        if (!first && e.t < prev_t)
            fail("validation", "event " + std::to_string(i) + " breaks timestamp order: " +
                                   std::to_string(e.t) + " < " + std::to_string(prev_t));
        prev_t = e.t;
        first = false;
    }
    // same-pixel ties: scan each run of equal timestamps
    std::size_t i = 0;
    while (i < seq.events.size()) {
        std::size_t j = i + 1;
        while (j < seq.events.size() && seq.events[j].t == seq.events[i].t) ++j;
        if (j - i > 1) {
            for (std::size_t a = i; a < j; ++a)
                for (std::size_t b = a + 1; b < j; ++b)
                    if (seq.events[a].x == seq.events[b].x && seq.events[a].y == seq.events[b].y)
                        fail("validation", "events " + std::to_string(a) + " and " + std::to_string(b) +
                                               " share pixel and timestamp t=" + std::to_string(seq.events[a].t));
        }
        i = j;
    }
}

ScenePattern scene_pattern_from_name(const std::string& name) {
    if (name == "static") return ScenePattern::Static;
    if (name == "ramp") return ScenePattern::Ramp;
    if (name == "bar") return ScenePattern::Bar;
    if (name == "dot") return ScenePattern::Dot;
    if (name == "mixed") return ScenePattern::Mixed;
    fail("usage", "unknown scene pattern: " + name);
}

const char* scene_pattern_name(ScenePattern p) {
    switch (p) {
        case ScenePattern::Static: return "static";
        case ScenePattern::Ramp: return "ramp";
        case ScenePattern::Bar: return "bar";
        case ScenePattern::Dot: return "dot";
        case ScenePattern::Mixed: return "mixed";
    }
    return "?";
}

namespace {

struct DotState {
    double x0, y0, vx, vy;
};

// Seeded scene: analytic log-brightness L(x, y, t).
struct Scene {
    const SceneConfig& cfg;
    double bar_phase = 0.0;
    std::vector<DotState> dots;

    explicit Scene(const SceneConfig& c) : cfg(c) {
        Rng rng(c.seed);
        bar_phase = rng.uniform(0.0, double(c.width));
        for (int i = 0; i < c.dot_count; ++i) {
            DotState d;
            d.x0 = rng.uniform(0.0, double(c.width));
            d.y0 = rng.uniform(0.0, double(c.height));
            const double ang = rng.uniform(0.0, 6.283185307179586);
            const double speed = c.dot_speed * rng.uniform(0.5, 1.5);
            d.vx = speed * std::cos(ang);
            d.vy = speed * std::sin(ang);
            dots.push_back(d);
        }
    }

    double level(int x, int y, double t_us) const {
        const double ts = t_us * 1e-6;
        switch (cfg.pattern) {
            case ScenePattern::Static:
                return 0.3;
            case ScenePattern::Ramp: {
                const double span = cfg.duration_us > 1 ? double(cfg.duration_us - 1) : 1.0;
                return cfg.amplitude * (t_us / span);
            }
            case ScenePattern::Bar:
                return bar_level(x, ts);
            case ScenePattern::Dot:
                return dot_level(x, y, ts);
            case ScenePattern::Mixed:
                return bar_level(x, ts) + dot_level(x, y, ts);
        }
        return 0.0;
    }

    // Vertical bar with a triangular profile, sweeping in x and wrapping.
    double bar_level(int x, double ts) const {
        const double w = double(cfg.width);
        double c = std::fmod(bar_phase + cfg.bar_speed * ts, w);
        if (c < 0) c += w;
        double d = std::fabs(double(x) - c);
        d = std::min(d, w - d);  // wrap distance
        const double half = cfg.bar_width * 0.5;
        if (d >= half) return 0.0;
        return cfg.amplitude * (1.0 - d / half);
    }

    // Gaussian dots on straight trajectories, bouncing off the frame edges.
    double dot_level(int x, int y, double ts) const {
        double acc = 0.0;
        const double inv2s2 = 1.0 / (2.0 * cfg.dot_sigma * cfg.dot_sigma);
        for (const DotState& d : dots) {
            const double px = bounce(d.x0 + d.vx * ts, double(cfg.width));
            const double py = bounce(d.y0 + d.vy * ts, double(cfg.height));
            const double dx = double(x) - px;
            const double dy = double(y) - py;
            acc += cfg.amplitude * std::exp(-(dx * dx + dy * dy) * inv2s2);
        }
        return acc;
    }

    static double bounce(double v, double extent) {
        const double period = 2.0 * extent;
        double m = std::fmod(v, period);
        if (m < 0) m += period;
        return m < extent ? m : period - m;
    }
};

}  // namespace

EventSequence generate_synthetic(const SceneConfig& cfg) {
    if (cfg.threshold <= 0.0) fail("config", "scene threshold must be > 0");
    if (cfg.duration_us == 0) fail("config", "scene duration must be > 0");
    if (cfg.width == 0 || cfg.height == 0) fail("config", "scene dimensions must be positive");

    const Scene scene(cfg);
    const double C = cfg.threshold;
    const std::uint64_t t_end = cfg.duration_us - 1;  // events live in [0, duration)
    const std::uint64_t dt = std::max<std::uint64_t>(1, cfg.sample_dt_us);

    EventSequence out;
    out.width = cfg.width;
    out.height = cfg.height;

    for (int y = 0; y < cfg.height; ++y) {
        for (int x = 0; x < cfg.width; ++x) {
            double ref = scene.level(x, y, 0.0);  // level at the pixel's previous event
            double l_a = ref;
            std::uint64_t t_a = 0;
            std::uint64_t prev_emit = 0;
            bool emitted = false;
            while (t_a < t_end) {
                const std::uint64_t t_b = std::min(t_end, t_a + dt);
                const double l_b = scene.level(x, y, double(t_b));
                // multiple threshold crossings may fall inside one sample step
                while (std::fabs(l_b - ref) >= C) {
                    const double sign = (l_b - ref) > 0 ? 1.0 : -1.0;
                    const double target = ref + sign * C;
                    const double denom = l_b - l_a;
                    double tau = double(t_b);
                    if (denom != 0.0)
                        tau = double(t_a) + (target - l_a) / denom * double(t_b - t_a);
                    std::uint64_t te = std::uint64_t(std::max<std::int64_t>(0, iround(tau)));
                    if (te > t_end) te = t_end;
                    if (emitted && te <= prev_emit) te = prev_emit + 1;  // strict per-pixel order
                    if (te > t_end) {
                        ref = target;
                        continue;  // ran past the window; absorb the crossing silently
                    }
                    Event e;
                    e.x = std::uint16_t(x);
                    e.y = std::uint16_t(y);
                    e.t = te;
                    e.p = sign > 0 ? 1 : -1;
                    out.events.push_back(e);
                    prev_emit = te;
                    emitted = true;
                    ref = target;
                }
                l_a = l_b;
                t_a = t_b;
            }
        }
    }

    std::sort(out.events.begin(), out.events.end(), [](const Event& a, const Event& b) {
        if (a.t != b.t) return a.t < b.t;
        if (a.y != b.y) return a.y < b.y;
        return a.x < b.x;
    });
    validate_sequence(out);
    return out;
}

EventSequence slice_window(const EventSequence& seq, std::uint64_t t0, std::uint64_t window_us) {
    if (window_us == 0) fail("config", "window length must be > 0");
    EventSequence out;
    out.width = seq.width;
    out.height = seq.height;
    const std::uint64_t t1 = t0 + window_us;
    for (const Event& e : seq.events)
        if (e.t >= t0 && e.t < t1) out.events.push_back(e);
    return out;
}

std::vector<double> normalize_timestamps(const EventSequence& window, std::uint64_t t0,
                                         std::uint64_t window_us) {
    std::vector<double> out;
    out.reserve(window.events.size());
    for (std::size_t i = 0; i < window.events.size(); ++i) {
        const Event& e = window.events[i];
        if (e.t < t0 || e.t >= t0 + window_us)
            fail("validation", "event " + std::to_string(i) + " at t=" + std::to_string(e.t) +
                                   " outside window [" + std::to_string(t0) + ", " +
                                   std::to_string(t0 + window_us) + ")");
        out.push_back(double(e.t - t0 + 1) / double(window_us + 1));
    }
    return out;
}

EventSequence crop_events(const EventSequence& seq, int x0, int y0, int w, int h) {
    if (x0 < 0 || y0 < 0 || w <= 0 || h <= 0 || x0 + w > seq.width || y0 + h > seq.height)
        fail("config", "crop outside sensor bounds");
    EventSequence out;
    out.width = std::uint16_t(w);
    out.height = std::uint16_t(h);
    for (const Event& e : seq.events) {
        if (e.x >= x0 && e.x < x0 + w && e.y >= y0 && e.y < y0 + h) {
            Event c = e;
            c.x = std::uint16_t(e.x - x0);
            c.y = std::uint16_t(e.y - y0);
            out.events.push_back(c);
        }
    }
    return out;
}

}  // namespace sser

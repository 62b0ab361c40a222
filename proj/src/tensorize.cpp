// SPDX-License-Identifier: Apache-2.0
#include "sser/tensorize.hpp"

#include <algorithm>

#include "sser/common.hpp"

namespace sser {

TensorizedWindow tensorize(const EventSequence& window, const std::vector<double>& t_norm,
                           int z_cap) {
    if (z_cap < 1) fail("config", "z_cap must be >= 1");
    if (t_norm.size() != window.events.size())
        fail("config", "t_norm size does not match event count");

    const int wh = int(window.width) * int(window.height);
    std::vector<int> counts(wh, 0);
    for (const Event& e : window.events) ++counts[std::size_t(e.y) * window.width + e.x];
    int max_count = 0;
    for (int c : counts) max_count = std::max(max_count, c);

    TensorizedWindow tw;
    tw.width = window.width;
    tw.height = window.height;
    tw.z = std::max(1, std::min(z_cap, max_count));
    tw.values.assign(std::size_t(tw.z) * wh * 2, 0.0);
    tw.mask.assign(std::size_t(tw.z) * wh, 0);

    std::vector<int> fill(wh, 0);
    for (std::size_t i = 0; i < window.events.size(); ++i) {
        const Event& e = window.events[i];
        const int pix = int(e.y) * window.width + e.x;
        const int slot = fill[pix];
        if (slot >= tw.z) continue;  // hot pixel: keep the earliest z events
        fill[pix] = slot + 1;
        tw.value(slot, pix, 0) = t_norm[i];
        tw.value(slot, pix, 1) = double(e.p);
        tw.mask[std::size_t(slot) * wh + pix] = 1;
    }
    return tw;
}

std::vector<std::vector<std::array<double, 2>>> detensorize(const TensorizedWindow& tw) {
    std::vector<std::vector<std::array<double, 2>>> out(tw.pixels());
    for (int pix = 0; pix < tw.pixels(); ++pix) {
        for (int slot = 0; slot < tw.z; ++slot) {
            if (!tw.masked(slot, pix)) break;
            out[pix].push_back({tw.value(slot, pix, 0), tw.value(slot, pix, 1)});
        }
    }
    return out;
}

}  // namespace sser

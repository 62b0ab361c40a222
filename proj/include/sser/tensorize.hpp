// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "sser/events.hpp"

namespace sser {

// Padded per-pixel view of one time window: values holds (t_norm, polarity)
// pairs packed densely from slot 0, mask marks the filled slots.
//   values: z * (width*height) * 2, index (slot * WH + pixel) * 2 + component
//   mask:   z * (width*height)
// Per pixel the mask is a prefix of ones; a zero mask entry implies a (0, 0)
// value pair, and masked-in times are strictly inside (0, 1).
struct TensorizedWindow {
    int z = 0;
    int width = 0;
    int height = 0;
    std::vector<double> values;
    std::vector<std::uint8_t> mask;

    int pixels() const { return width * height; }

    double value(int slot, int pixel, int comp) const {
        return values[(std::size_t(slot) * pixels() + pixel) * 2 + comp];
    }
    double& value(int slot, int pixel, int comp) {
        return values[(std::size_t(slot) * pixels() + pixel) * 2 + comp];
    }
    std::uint8_t masked(int slot, int pixel) const {
        return mask[std::size_t(slot) * pixels() + pixel];
    }

    // filled-slot count for a pixel (prefix length)
    int count(int pixel) const {
        int n = 0;
        while (n < z && masked(n, pixel)) ++n;
        return n;
    }
};

// Packs a normalized window. z = min(z_cap, max per-pixel event count) but at
// least 1; events past z_cap per pixel are dropped, earliest kept. t_norm runs
// parallel to window.events.
TensorizedWindow tensorize(const EventSequence& window, const std::vector<double>& t_norm,
                           int z_cap);

// Inverse view for round-trip checks: per pixel, the masked-in (t_norm, p)
// pairs in slot order.
std::vector<std::vector<std::array<double, 2>>> detensorize(const TensorizedWindow& tw);

}  // namespace sser

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sser/events.hpp"
#include "sser/model.hpp"
#include "sser/quantize.hpp"

namespace sser {

enum class EngineMode : std::uint8_t { Float = 0, Quantized = 1 };
enum class EmitPolicy : std::uint8_t { OnWindowBoundary = 0, OnDemand = 1 };
enum class ResetPolicy : std::uint8_t { ZeroEachWindow = 0, Persist = 1 };

struct EngineConfig {
    std::uint16_t width = 0;
    std::uint16_t height = 0;
    std::uint64_t window_us = 50000;
    EmitPolicy emit = EmitPolicy::OnWindowBoundary;
    ResetPolicy reset = ResetPolicy::ZeroEachWindow;
    int workers = 1;  // pixel-sharded; results are identical for any count
};

// Dense per-pixel latent memory, one block per layer. Quantized layers store
// state codes; float layers store doubles (plus the LSTM cell lane).
struct HiddenStateMap {
    struct Layer {
        int d_out = 0;
        int precision_bits = 0;  // reported storage width per element
        bool has_cell = false;
        std::vector<double> h;        // float mode, W*H*d_out
        std::vector<double> c;        // float mode, LSTM only
        std::vector<std::int32_t> q;  // quantized mode, W*H*d_out
    };
    std::uint16_t width = 0;
    std::uint16_t height = 0;
    std::vector<Layer> layers;

    // exact storage accounting: W*H*d_out*precision summed over layers
    std::uint64_t state_bits() const;
    void zero();
};

HiddenStateMap init_state(const EncoderModel& m, const EngineConfig& cfg);
HiddenStateMap init_state(const QuantizedModel& m, const EngineConfig& cfg);

// Snapshot of the final layer. Float mode fills data; quantized mode fills
// codes and the dequantization scale. Row-major, channel-last.
struct Representation {
    std::uint16_t width = 0;
    std::uint16_t height = 0;
    int channels = 0;
    EngineMode mode = EngineMode::Float;
    double scale = 1.0;
    std::vector<double> data;
    std::vector<std::int32_t> codes;

    std::vector<double> dense() const;  // dequantizes codes when quantized
    std::uint64_t digest() const;
};

struct RejectionCounts {
    std::uint64_t out_of_bounds = 0;
    std::uint64_t time_regression = 0;
    std::uint64_t total() const { return out_of_bounds + time_regression; }
};

// Event-by-event representation generator. Events inside the current window
// update exactly one pixel's per-layer states; emission snapshots the final
// layer without mutating anything.
class Engine {
public:
    Engine(EncoderModel model, EngineConfig cfg);
    Engine(QuantizedModel model, EngineConfig cfg);

    EngineMode mode() const { return mode_; }
    const EngineConfig& config() const { return cfg_; }
    const HiddenStateMap& state() const { return state_; }
    const RejectionCounts& rejections() const { return rejections_; }
    std::uint64_t state_bits() const { return state_.state_bits(); }

    // Starts a window at t0: resets per policy and rebases normalization.
    void begin_window(std::uint64_t t0);

    // Applies one event; returns false (and counts) on out-of-bounds or
    // same-pixel time regression. Never truncates dense pixels.
    bool process_event(const Event& e);

    Representation emit() const;

private:
    friend std::vector<std::pair<int, Representation>> run_stream(Engine&, const EventSequence&);

    void apply(const Event& e);  // bounds already checked

    EngineMode mode_;
    EngineConfig cfg_;
    EncoderModel fmodel_;
    QuantizedModel qmodel_;
    HiddenStateMap state_;
    std::vector<std::uint64_t> last_t_;  // per pixel, +1 biased; 0 = none yet
    RejectionCounts rejections_;
    std::uint64_t window_t0_ = 0;
    bool window_open_ = false;
};

// Partitions time into consecutive windows starting at the first event,
// processes in order and emits one representation per window boundary under
// the OnWindowBoundary policy (including the final partial window).
std::vector<std::pair<int, Representation>> run_stream(Engine& eng, const EventSequence& seq);

// SSRP container: magic "SSRP", u8 mode (0 float32, 1 int8, 2 int16),
// u16 W, u16 H, u16 C, f64 scale, then a row-major channel-last payload.
void write_representation(std::ostream& out, const Representation& rep);
Representation read_representation(std::istream& in);
void write_representation_file(const std::string& path, const Representation& rep);
Representation read_representation_file(const std::string& path);

}  // namespace sser

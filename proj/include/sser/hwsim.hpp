// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sser/cells.hpp"
#include "sser/events.hpp"

namespace sser {

enum class StallPolicy : std::uint8_t { Stall = 0, Reject = 1 };

// Discrete-cycle model of the per-event datapath: fully pipelined, one issue
// per cycle, with a same-pixel hazard window (an event may not issue until
// hazard_window cycles after its predecessor at the same pixel issued).
struct PipelineConfig {
    double clock_hz = 100e6;
    int pipeline_depth = 16;
    int hazard_window = 0;  // 0 => pipeline_depth
    CellKind kind = CellKind::Gru;
    StallPolicy policy = StallPolicy::Stall;
    int d_in = 2;
    int d_out = 12;

    int effective_hazard() const { return hazard_window > 0 ? hazard_window : pipeline_depth; }
    void validate() const;
};

struct ArrivalEvent {
    std::uint64_t cycle = 0;
    std::uint16_t x = 0;
    std::uint16_t y = 0;
};

struct EventTiming {
    std::uint64_t arrival = 0;
    std::uint64_t issue = 0;
    std::uint64_t retire = 0;  // issue + pipeline_depth
    std::uint32_t stall_cycles = 0;
    bool rejected = false;
};

struct CycleReport {
    std::vector<EventTiming> events;
    std::uint64_t total_events = 0;
    std::uint64_t issued = 0;
    std::uint64_t rejected = 0;
    std::uint64_t stalled_events = 0;
    std::uint64_t stall_cycles = 0;
    std::uint64_t makespan_cycles = 0;  // last retire - first arrival
    double throughput_eps = 0.0;
    double latency_ns = 0.0;        // pipeline_depth / clock_hz
    bool latency_ns_integral = false;
    std::int64_t latency_ns_int = 0;
};

// In-order issue; a stalled event blocks everything behind it under the Stall
// policy, while Reject drops the hazarded event and lets the rest continue.
CycleReport schedule(const std::vector<ArrivalEvent>& trace, const PipelineConfig& cfg);

// Uniform arrival mapping helpers for EVT-bin / CSV traces.
std::vector<ArrivalEvent> arrivals_from_timestamps(const EventSequence& seq, double clock_hz);
std::vector<ArrivalEvent> arrivals_from_rate(const EventSequence& seq, double clock_hz,
                                             double events_per_second);

struct ResourceEstimate {
    struct LayerFigures {
        int d_in = 0;
        int d_out = 0;
        CellKind kind = CellKind::Gru;
        int precision_bits = 0;
        std::uint64_t state_bits = 0;       // W*H*d_out*precision
        int multiplier_height = 0;          // 3*d_out (GRU) or 2*d_out (MGU)
        std::uint64_t multiply_units = 0;   // (d_in + d_out) * multiplier_height
    };
    std::uint16_t sensor_width = 0;
    std::uint16_t sensor_height = 0;
    LayerFigures layer;
    std::uint64_t bits_saved_per_precision_bit = 0;  // W*H*d_out
};

ResourceEstimate estimate_resources(int d_in, int d_out, CellKind kind, int precision_bits,
                                    std::uint16_t sensor_w, std::uint16_t sensor_h);

// Figures measured on the reference FPGA build (ZCU104, single recurrent
// layer, 128x128x12 memory). Quoted for report output only; nothing in this
// module derives them.
struct ReportedLayerHw {
    const char* model;
    int clock_mhz;
    int lut_layer;
    double lut_layer_pct;
    int ff;
    double ff_pct;
    int lut_memory;
    double lut_memory_pct;
    int bram;
    double bram_pct;
    int dsp;
    double dsp_pct;
    double static_power_w;
    double dynamic_power_w;
    int latency_ns;
};
const std::vector<ReportedLayerHw>& reported_hw_table();

// Reference object-detection scores of the representation variants (Gen1,
// ResNet-50 + YOLOX). Reported constants, never computed here.
struct ReportedDetection {
    const char* name;
    double map;
    double ap50;
    double ap75;
};
const std::vector<ReportedDetection>& reported_detection_table();

struct HazardViolation {
    std::size_t first_index = 0;
    std::size_t second_index = 0;
    double gap_ns = 0.0;
};

struct HazardCheck {
    bool ok = true;
    double required_gap_ns = 0.0;
    std::vector<HazardViolation> violations;
};

// True iff every same-pixel pair is separated by at least
// pipeline_depth / clock_hz (or the explicit min gap when > 0).
// Timestamps are scaled by ns_per_tick (1000 for microsecond traces).
HazardCheck verify_hazard_safety(const EventSequence& trace, const PipelineConfig& cfg,
                                 double min_same_pixel_gap_ns = 0.0, double ns_per_tick = 1000.0);

// Full JSON report: schedule totals, derived resource figures and the quoted
// reference blocks, each labeled as derived or reported.
std::string report_json(const CycleReport& rep, const ResourceEstimate& res,
                        const PipelineConfig& cfg);

}  // namespace sser

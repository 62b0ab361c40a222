// SPDX-License-Identifier: Apache-2.0
#include "sser/hwsim.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "sser/common.hpp"

namespace sser {

void PipelineConfig::validate() const {
    if (!(clock_hz > 0)) fail("config", "clock must be > 0");
    if (pipeline_depth < 1) fail("config", "pipeline depth must be >= 1");
    if (kind != CellKind::Gru && kind != CellKind::Mgu)
        fail("config", "pipeline model covers GRU and MGU");
    if (d_in < 1 || d_out < 1) fail("config", "layer dims must be positive");
}

CycleReport schedule(const std::vector<ArrivalEvent>& trace, const PipelineConfig& cfg) {
    cfg.validate();
    for (std::size_t i = 1; i < trace.size(); ++i)
        if (trace[i].cycle < trace[i - 1].cycle)
            fail("validation", "arrival cycles must be non-decreasing");

    const std::uint64_t hazard = std::uint64_t(cfg.effective_hazard());
    CycleReport rep;
    rep.total_events = trace.size();
    rep.events.reserve(trace.size());

    std::unordered_map<std::uint32_t, std::uint64_t> last_issue;  // pixel -> issue + 1 bias
    std::uint64_t next_free = 0;  // earliest cycle the in-order front end can issue
    std::uint64_t last_retire = 0;

    for (const ArrivalEvent& ev : trace) {
        EventTiming t;
        t.arrival = ev.cycle;
        const std::uint32_t pix = (std::uint32_t(ev.y) << 16) | ev.x;
        const std::uint64_t earliest = std::max(ev.cycle, next_free);

        std::uint64_t hazard_ready = 0;
        const auto it = last_issue.find(pix);
        if (it != last_issue.end()) hazard_ready = (it->second - 1) + hazard;

        if (cfg.policy == StallPolicy::Reject && earliest < hazard_ready) {
            t.rejected = true;
            ++rep.rejected;
            rep.events.push_back(t);
            continue;
        }
        const std::uint64_t issue = std::max(earliest, hazard_ready);
        t.issue = issue;
        t.retire = issue + std::uint64_t(cfg.pipeline_depth);
        t.stall_cycles = std::uint32_t(issue - earliest);
        if (t.stall_cycles > 0) ++rep.stalled_events;
        rep.stall_cycles += t.stall_cycles;
        rep.events.push_back(t);

        last_issue[pix] = issue + 1;
        next_free = issue + 1;
        last_retire = std::max(last_retire, t.retire);
        ++rep.issued;
    }

    if (rep.issued > 0) {
        rep.makespan_cycles = last_retire - trace.front().cycle;
        rep.throughput_eps = double(rep.issued) * cfg.clock_hz / double(rep.makespan_cycles);
    }
    rep.latency_ns = double(cfg.pipeline_depth) * 1e9 / cfg.clock_hz;
    const std::int64_t num = std::int64_t(cfg.pipeline_depth) * 1000000000ll;
    const std::int64_t clk = std::int64_t(cfg.clock_hz);
    if (double(clk) == cfg.clock_hz && clk > 0 && num % clk == 0) {
        rep.latency_ns_integral = true;
        rep.latency_ns_int = num / clk;
    }
    return rep;
}

std::vector<ArrivalEvent> arrivals_from_timestamps(const EventSequence& seq, double clock_hz) {
    std::vector<ArrivalEvent> out;
    out.reserve(seq.events.size());
    const std::uint64_t base = seq.events.empty() ? 0 : seq.events.front().t;
    const double cycles_per_us = clock_hz / 1e6;  // exact for MHz-grid clocks
    for (const Event& e : seq.events) {
        ArrivalEvent a;
        a.cycle = std::uint64_t(std::floor(double(e.t - base) * cycles_per_us));
        a.x = e.x;
        a.y = e.y;
        out.push_back(a);
    }
    return out;
}

std::vector<ArrivalEvent> arrivals_from_rate(const EventSequence& seq, double clock_hz,
                                             double events_per_second) {
    if (!(events_per_second > 0)) fail("config", "event rate must be > 0");
    std::vector<ArrivalEvent> out;
    out.reserve(seq.events.size());
    for (std::size_t i = 0; i < seq.events.size(); ++i) {
        ArrivalEvent a;
        a.cycle = std::uint64_t(std::floor(double(i) * clock_hz / events_per_second));
        a.x = seq.events[i].x;
        a.y = seq.events[i].y;
        out.push_back(a);
    }
    return out;
}

ResourceEstimate estimate_resources(int d_in, int d_out, CellKind kind, int precision_bits,
                                    std::uint16_t sensor_w, std::uint16_t sensor_h) {
    if (d_in < 1 || d_out < 1 || precision_bits < 1) fail("config", "bad resource query");
    if (kind != CellKind::Gru && kind != CellKind::Mgu)
        fail("config", "resource model covers GRU and MGU");
    ResourceEstimate r;
    r.sensor_width = sensor_w;
    r.sensor_height = sensor_h;
    r.layer.d_in = d_in;
    r.layer.d_out = d_out;
    r.layer.kind = kind;
    r.layer.precision_bits = precision_bits;
    r.layer.state_bits = std::uint64_t(sensor_w) * sensor_h * std::uint64_t(d_out) *
                         std::uint64_t(precision_bits);
    r.layer.multiplier_height = (kind == CellKind::Gru ? 3 : 2) * d_out;
    r.layer.multiply_units =
        std::uint64_t(d_in + d_out) * std::uint64_t(r.layer.multiplier_height);
    r.bits_saved_per_precision_bit = std::uint64_t(sensor_w) * sensor_h * std::uint64_t(d_out);
    return r;
}

const std::vector<ReportedLayerHw>& reported_hw_table() {
    static const std::vector<ReportedLayerHw> table = {
        {"gru", 100, 26744, 11.6, 5082, 1.1, 25862, 11.2, 48, 15.4, 108, 6.3, 0.599, 1.344, 160},
        {"mgu", 100, 19156, 8.3, 3677, 0.8, 17115, 7.4, 48, 15.4, 108, 6.3, 0.597, 1.007, 160},
        {"gru", 200, 27441, 11.9, 5082, 1.1, 27745, 12.0, 48, 15.4, 108, 6.3, 0.607, 2.729, 80},
        {"mgu", 200, 19156, 8.3, 3677, 0.8, 17115, 7.4, 48, 15.4, 108, 6.3, 0.603, 1.986, 80},
    };
    return table;
}

const std::vector<ReportedDetection>& reported_detection_table() {
    static const std::vector<ReportedDetection> table = {
        {"sser-gru12", 40.13, 69.03, 39.12},
        {"sser-mgu12", 39.89, 68.91, 38.77},
    };
    return table;
}

HazardCheck verify_hazard_safety(const EventSequence& trace, const PipelineConfig& cfg,
                                 double min_same_pixel_gap_ns, double ns_per_tick) {
    cfg.validate();
    HazardCheck chk;
    chk.required_gap_ns = min_same_pixel_gap_ns > 0
                              ? min_same_pixel_gap_ns
                              : double(cfg.pipeline_depth) * 1e9 / cfg.clock_hz;
    std::unordered_map<std::uint32_t, std::pair<std::uint64_t, std::size_t>> last;  // t, index
    for (std::size_t i = 0; i < trace.events.size(); ++i) {
        const Event& e = trace.events[i];
        const std::uint32_t pix = (std::uint32_t(e.y) << 16) | e.x;
        const auto it = last.find(pix);
        if (it != last.end()) {
            const double gap_ns = double(e.t - it->second.first) * ns_per_tick;
            if (gap_ns < chk.required_gap_ns) {
                chk.ok = false;
                chk.violations.push_back({it->second.second, i, gap_ns});
            }
        }
        last[pix] = {e.t, i};
    }
    return chk;
}

std::string report_json(const CycleReport& rep, const ResourceEstimate& res,
                        const PipelineConfig& cfg) {
    nlohmann::json j;
    j["config"] = {{"clock_hz", cfg.clock_hz},
                   {"pipeline_depth", cfg.pipeline_depth},
                   {"hazard_window", cfg.effective_hazard()},
                   {"cell", cell_kind_name(cfg.kind)},
                   {"policy", cfg.policy == StallPolicy::Stall ? "stall" : "reject"}};
    nlohmann::json sched;
    sched["events"] = rep.total_events;
    sched["issued"] = rep.issued;
    sched["rejected"] = rep.rejected;
    sched["stalled_events"] = rep.stalled_events;
    sched["stall_cycles"] = rep.stall_cycles;
    sched["makespan_cycles"] = rep.makespan_cycles;
    sched["throughput_eps"] = rep.throughput_eps;
    if (rep.latency_ns_integral)
        sched["latency_ns"] = rep.latency_ns_int;
    else
        sched["latency_ns"] = rep.latency_ns;
    j["schedule"] = sched;

    j["resources"] = {{"source", "derived"},
                      {"sensor", {res.sensor_width, res.sensor_height}},
                      {"d_in", res.layer.d_in},
                      {"d_out", res.layer.d_out},
                      {"cell", cell_kind_name(res.layer.kind)},
                      {"precision_bits", res.layer.precision_bits},
                      {"state_bits", res.layer.state_bits},
                      {"multiplier_height", res.layer.multiplier_height},
                      {"multiply_units", res.layer.multiply_units},
                      {"bits_saved_per_precision_bit", res.bits_saved_per_precision_bit}};

    nlohmann::json hw = nlohmann::json::array();
    for (const ReportedLayerHw& r : reported_hw_table()) {
        hw.push_back({{"model", r.model},
                      {"clock_mhz", r.clock_mhz},
                      {"lut_layer", r.lut_layer},
                      {"lut_layer_pct", r.lut_layer_pct},
                      {"ff", r.ff},
                      {"ff_pct", r.ff_pct},
                      {"lut_memory", r.lut_memory},
                      {"lut_memory_pct", r.lut_memory_pct},
                      {"bram", r.bram},
                      {"bram_pct", r.bram_pct},
                      {"dsp", r.dsp},
                      {"dsp_pct", r.dsp_pct},
                      {"static_power_w", r.static_power_w},
                      {"dynamic_power_w", r.dynamic_power_w},
                      {"latency_ns", r.latency_ns}});
    }
    nlohmann::json det = nlohmann::json::array();
    for (const ReportedDetection& r : reported_detection_table())
        det.push_back({{"name", r.name}, {"map", r.map}, {"ap50", r.ap50}, {"ap75", r.ap75}});
    j["reference_reported"] = {
        {"source", "reported"},
        {"note", "figures measured on the reference FPGA build and detection study; "
                 "quoted for comparison only, never derived by this tool"},
        {"hardware_zcu104", hw},
        {"detection_gen1", det}};
    return j.dump(2);
}

}  // namespace sser

// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <nlohmann/json.hpp>

#include "sser/hwsim.hpp"
#include "test_helpers.hpp"

using namespace sser;

TEST_CASE("per-event latency is exact at the reference clocks") {
    PipelineConfig cfg;
    cfg.clock_hz = 100e6;
    std::vector<ArrivalEvent> one = {{0, 3, 4}};
    CycleReport r = schedule(one, cfg);
    CHECK(r.latency_ns_integral);
    CHECK(r.latency_ns_int == 160);

    cfg.clock_hz = 200e6;
    r = schedule(one, cfg);
    CHECK(r.latency_ns_int == 80);

    cfg.clock_hz = 100e6;
    cfg.pipeline_depth = 100;
    r = schedule(one, cfg);
    CHECK(r.latency_ns_int == 1000);
}

TEST_CASE("same-pixel hazard stalls to a 16-cycle issue gap") {
    PipelineConfig cfg;
    std::vector<ArrivalEvent> trace = {{0, 1, 1}, {5, 1, 1}};
    const CycleReport r = schedule(trace, cfg);
    REQUIRE(r.events.size() == 2);
    CHECK(r.events[0].issue == 0);
    CHECK(r.events[1].issue == 16);
    CHECK(r.events[1].stall_cycles == 11);
    CHECK(r.stall_cycles == 11);
    CHECK(r.events[1].retire == 32);
}

TEST_CASE("hazard-free back-to-back events reach one issue per cycle") {
    PipelineConfig cfg;
    const int n = 2000;
    std::vector<ArrivalEvent> trace;
    for (int i = 0; i < n; ++i)
        trace.push_back({std::uint64_t(i), std::uint16_t(i % 64), std::uint16_t(i / 64)});
    const CycleReport r = schedule(trace, cfg);
    CHECK(r.stall_cycles == 0);
    CHECK(r.makespan_cycles == std::uint64_t(n - 1 + 16));
    CHECK(r.throughput_eps <= cfg.clock_hz);
    CHECK(r.throughput_eps == doctest::Approx(cfg.clock_hz * n / double(n - 1 + 16)));
}

TEST_CASE("no two same-pixel issues within the hazard window (property)") {
    Rng rng(5);
    PipelineConfig cfg;
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<ArrivalEvent> trace;
        std::uint64_t cycle = 0;
        const int pixels = int(rng.uniform_int(1, 6));  // few pixels force hazards
        for (int i = 0; i < 300; ++i) {
            cycle += std::uint64_t(rng.uniform_int(0, 4));
            const int p = int(rng.uniform_int(0, pixels - 1));
            trace.push_back({cycle, std::uint16_t(p % 3), std::uint16_t(p / 3)});
        }
        const CycleReport r = schedule(trace, cfg);
        std::map<std::pair<int, int>, std::uint64_t> last;
        std::uint64_t prev_issue = 0;
        bool first = true;
        for (std::size_t i = 0; i < trace.size(); ++i) {
            const EventTiming& t = r.events[i];
            REQUIRE(!t.rejected);
            CHECK(t.issue >= t.arrival);
            CHECK(t.retire == t.issue + 16);
            if (!first) CHECK(t.issue > prev_issue);  // in-order, one per cycle
            prev_issue = t.issue;
            first = false;
            const auto key = std::make_pair(int(trace[i].x), int(trace[i].y));
            const auto it = last.find(key);
            if (it != last.end()) CHECK(t.issue - it->second >= 16);
            last[key] = t.issue;
        }
    }
}

TEST_CASE("gru and mgu schedules are identical") {
    Rng rng(7);
    std::vector<ArrivalEvent> trace;
    std::uint64_t cycle = 0;
    for (int i = 0; i < 500; ++i) {
        cycle += std::uint64_t(rng.uniform_int(0, 3));
        trace.push_back({cycle, std::uint16_t(rng.uniform_int(0, 2)), 0});
    }
    PipelineConfig g;
    g.kind = CellKind::Gru;
    PipelineConfig m;
    m.kind = CellKind::Mgu;
    const CycleReport rg = schedule(trace, g);
    const CycleReport rm = schedule(trace, m);
    REQUIRE(rg.events.size() == rm.events.size());
    for (std::size_t i = 0; i < rg.events.size(); ++i) {
        CHECK(rg.events[i].issue == rm.events[i].issue);
        CHECK(rg.events[i].retire == rm.events[i].retire);
    }
    CHECK(rg.makespan_cycles == rm.makespan_cycles);
}

TEST_CASE("reject policy drops hazarded events and keeps the rest flowing") {
    PipelineConfig cfg;
    cfg.policy = StallPolicy::Reject;
    std::vector<ArrivalEvent> trace = {{0, 1, 1}, {5, 1, 1}, {6, 2, 2}};
    const CycleReport r = schedule(trace, cfg);
    CHECK(r.events[0].issue == 0);
    CHECK(r.events[1].rejected);
    CHECK(r.rejected == 1);
    CHECK(r.issued == 2);
    CHECK(r.events[2].issue == 6);
    CHECK(r.events[2].stall_cycles == 0);
}

TEST_CASE("arrival order is preserved for same-pixel retires") {
    Rng rng(11);
    PipelineConfig cfg;
    std::vector<ArrivalEvent> trace;
    std::uint64_t cycle = 0;
    for (int i = 0; i < 200; ++i) {
        cycle += std::uint64_t(rng.uniform_int(0, 2));
        trace.push_back({cycle, 1, 1});
    }
    const CycleReport r = schedule(trace, cfg);
    for (std::size_t i = 1; i < r.events.size(); ++i)
        CHECK(r.events[i].retire > r.events[i - 1].retire);
}

TEST_CASE("microsecond sensor traces always satisfy the hazard rule") {
    SceneConfig sc;
    sc.pattern = ScenePattern::Mixed;
    sc.width = sc.height = 16;
    sc.duration_us = 50000;
    sc.threshold = 0.1;
    sc.seed = 2;
    const EventSequence seq = generate_synthetic(sc);
    REQUIRE(!seq.events.empty());

    PipelineConfig cfg;  // 100 MHz, depth 16 -> 160 ns required gap
    const HazardCheck chk = verify_hazard_safety(seq, cfg);
    CHECK(chk.required_gap_ns == doctest::Approx(160.0));
    CHECK(chk.ok);
    CHECK(chk.violations.empty());
}

TEST_CASE("a 100 ns same-pixel pair is reported as a violation") {
    EventSequence seq;
    seq.width = seq.height = 4;
    seq.events.push_back({2, 2, 0, 1});
    seq.events.push_back({2, 2, 100, -1});  // interpreted in ns below
    PipelineConfig cfg;
    const HazardCheck chk = verify_hazard_safety(seq, cfg, 0.0, 1.0);  // ns ticks
    CHECK(!chk.ok);
    REQUIRE(chk.violations.size() == 1);
    CHECK(chk.violations[0].gap_ns == doctest::Approx(100.0));
    CHECK(chk.violations[0].first_index == 0);
    CHECK(chk.violations[0].second_index == 1);
}

TEST_CASE("empty trace is hazard-safe") {
    EventSequence empty;
    empty.width = empty.height = 4;
    PipelineConfig cfg;
    CHECK(verify_hazard_safety(empty, cfg).ok);
}

TEST_CASE("resource formulas are exact") {
    const ResourceEstimate r = estimate_resources(2, 12, CellKind::Gru, 8, 128, 128);
    CHECK(r.layer.state_bits == 1572864ull);
    CHECK(r.layer.multiplier_height == 36);
    CHECK(r.layer.multiply_units == std::uint64_t(14) * 36);
    CHECK(r.bits_saved_per_precision_bit == 196608ull);
    CHECK(r.bits_saved_per_precision_bit / 8 == 24576ull);  // 24 kB per bit

    const ResourceEstimate m = estimate_resources(2, 12, CellKind::Mgu, 8, 128, 128);
    CHECK(m.layer.multiplier_height == 24);
}

TEST_CASE("reported reference figures are quoted, labeled and never derived") {
    const auto& hw = reported_hw_table();
    REQUIRE(hw.size() == 4);
    CHECK(hw[0].lut_layer == 26744);
    CHECK(hw[0].dynamic_power_w == doctest::Approx(1.344));
    CHECK(hw[0].latency_ns == 160);
    CHECK(hw[2].latency_ns == 80);
    CHECK(hw[2].dynamic_power_w == doctest::Approx(2.729));
    CHECK(hw[1].lut_layer == 19156);
    CHECK(hw[3].static_power_w == doctest::Approx(0.603));
    for (const auto& row : hw) CHECK(row.dsp == 108);

    const auto& det = reported_detection_table();
    REQUIRE(det.size() == 2);
    CHECK(det[0].map == doctest::Approx(40.13));
    CHECK(det[1].map == doctest::Approx(39.89));

    PipelineConfig cfg;
    const CycleReport rep = schedule({{0, 0, 0}}, cfg);
    const ResourceEstimate res = estimate_resources(2, 12, CellKind::Gru, 8, 128, 128);
    const auto j = nlohmann::json::parse(report_json(rep, res, cfg));
    CHECK(j["schedule"]["latency_ns"] == 160);
    CHECK(j["resources"]["source"] == "derived");
    CHECK(j["reference_reported"]["source"] == "reported");
    CHECK(j["reference_reported"]["hardware_zcu104"].size() == 4);
    CHECK(j["reference_reported"]["detection_gen1"].size() == 2);
}

TEST_CASE("arrival mapping helpers") {
    EventSequence seq;
    seq.width = seq.height = 8;
    seq.events.push_back({0, 0, 1000, 1});
    seq.events.push_back({1, 0, 1010, 1});

    const auto ts = arrivals_from_timestamps(seq, 100e6);  // 100 cycles / us
    CHECK(ts[0].cycle == 0);
    CHECK(ts[1].cycle == 1000);

    const auto rate = arrivals_from_rate(seq, 100e6, 50e6);  // 2 cycles apart
    CHECK(rate[0].cycle == 0);
    CHECK(rate[1].cycle == 2);
}

// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "sser/event_file.hpp"
#include "sser/events.hpp"
#include "sser/tensorize.hpp"
#include "test_helpers.hpp"

using namespace sser;

namespace {

// Independent scalar threshold walk used as the generator oracle: steps the
// ramp one microsecond at a time and fires whenever a full threshold step has
// accumulated since the last firing.
std::vector<std::uint64_t> ramp_oracle(double amplitude, double C, std::uint64_t duration_us) {
    std::vector<std::uint64_t> times;
    double ref = 0.0;
    const double span = double(duration_us - 1);
    for (std::uint64_t t = 0; t < duration_us; ++t) {
        const double level = amplitude * double(t) / span;
        while (level - ref >= C) {
            times.push_back(t);
            ref += C;
        }
    }
    return times;
}

}  // namespace

TEST_CASE("static scene emits no events") {
    SceneConfig cfg;
    cfg.pattern = ScenePattern::Static;
    cfg.width = cfg.height = 8;
    cfg.duration_us = 10000;
    CHECK(generate_synthetic(cfg).events.empty());
}

TEST_CASE("ramp of exactly 3C emits exactly 3 positive events per pixel") {
    SceneConfig cfg;
    cfg.pattern = ScenePattern::Ramp;
    cfg.width = cfg.height = 1;
    cfg.threshold = 1.0;
    cfg.amplitude = 3.0;
    cfg.duration_us = 1000;
    cfg.sample_dt_us = 200;
    const EventSequence seq = generate_synthetic(cfg);

    const auto oracle = ramp_oracle(cfg.amplitude, cfg.threshold, cfg.duration_us);
    REQUIRE(oracle.size() == 3);
    REQUIRE(seq.events.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(seq.events[i].p == 1);
        CHECK(seq.events[i].x == 0);
        CHECK(seq.events[i].y == 0);
        CHECK(seq.events[i].t == oracle[i]);
    }
}

TEST_CASE("generator is deterministic for fixed seed") {
    SceneConfig cfg;
    cfg.pattern = ScenePattern::Mixed;
    cfg.width = cfg.height = 24;
    cfg.duration_us = 50000;
    cfg.seed = 7;
    const EventSequence a = generate_synthetic(cfg);
    const EventSequence b = generate_synthetic(cfg);
    REQUIRE(a.events.size() == b.events.size());
    CHECK(a.events == b.events);
    CHECK(!a.events.empty());
}

TEST_CASE("event count is non-increasing in the threshold") {
    SceneConfig cfg;
    cfg.pattern = ScenePattern::Bar;
    cfg.width = cfg.height = 24;
    cfg.duration_us = 80000;
    cfg.seed = 3;
    std::size_t prev = SIZE_MAX;
    for (double c : {0.05, 0.1, 0.2, 0.4, 0.8}) {
        cfg.threshold = c;
        const std::size_t n = generate_synthetic(cfg).events.size();
        CHECK(n <= prev);
        prev = n;
    }
}

TEST_CASE("slice_window half-open semantics") {
    EventSequence seq;
    seq.width = seq.height = 4;
    for (std::uint64_t t : {10, 20, 30}) seq.events.push_back({0, 0, t, 1});

    const EventSequence mid = slice_window(seq, 15, 10);
    REQUIRE(mid.events.size() == 1);
    CHECK(mid.events[0].t == 20);

    CHECK(slice_window(seq, 0, 100).events.size() == 3);   // full range is identity
    CHECK(slice_window(seq, 1000, 50).events.empty());     // past the end
}

TEST_CASE("normalize_timestamps maps onto the open interval") {
    EventSequence w;
    w.width = w.height = 1;
    w.events.push_back({0, 0, 1000, 1});
    auto tn = normalize_timestamps(w, 1000, 49999);
    CHECK(tn[0] == doctest::Approx(1.0 / 50000.0).epsilon(1e-15));
    CHECK(tn[0] == 0.00002);

    w.events[0].t = 1000 + 50000 - 1;
    tn = normalize_timestamps(w, 1000, 50000);
    CHECK(tn[0] == doctest::Approx(50000.0 / 50001.0).epsilon(1e-15));

    // equal timestamps at different pixels get equal normalized times
    EventSequence w2;
    w2.width = 2;
    w2.height = 1;
    w2.events.push_back({0, 0, 500, 1});
    w2.events.push_back({1, 0, 500, -1});
    const auto tn2 = normalize_timestamps(w2, 0, 1000);
    CHECK(tn2[0] == tn2[1]);
    CHECK(tn2[0] > 0.0);
    CHECK(tn2[0] < 1.0);

    // outside the window is an error
    EventSequence bad;
    bad.width = bad.height = 1;
    bad.events.push_back({0, 0, 99, 1});
    CHECK_THROWS_AS((void)normalize_timestamps(bad, 100, 10), Error);
}

TEST_CASE("csv parsing maps fields directly") {
    std::istringstream in("t,x,y,p\n100,5,7,1\n");
    const EventSequence seq = read_events(in, EventFileFormat::Csv);
    REQUIRE(seq.events.size() == 1);
    CHECK(seq.events[0].t == 100);
    CHECK(seq.events[0].x == 5);
    CHECK(seq.events[0].y == 7);
    CHECK(seq.events[0].p == 1);
}

TEST_CASE("empty file reads as empty sequence") {
    std::istringstream in("");
    CHECK(read_events(in, EventFileFormat::EvtBin).events.empty());
    std::istringstream in2("");
    CHECK(read_events(in2, EventFileFormat::Csv).events.empty());
}

TEST_CASE("binary record with x == width is a validation error naming the record") {
    EventSequence seq;
    seq.width = 4;
    seq.height = 4;
    seq.events.push_back({0, 0, 5, 1});
    seq.events.push_back({3, 3, 6, -1});
    std::ostringstream buf;
    write_events(buf, seq, EventFileFormat::EvtBin);
    std::string bytes = buf.str();
    // corrupt record 1's x to 4 (== width)
    bytes[16 + 13 + 8] = 4;
    std::istringstream in(bytes);
    try {
        (void)read_events(in, EventFileFormat::EvtBin);
        FAIL("expected validation error");
    } catch (const Error& e) {
        CHECK(e.code() == "validation");
        CHECK(std::string(e.what()).find("record 1") != std::string::npos);
    }
}

TEST_CASE("malformed csv reports the line") {
    std::istringstream in("t,x,y,p\n1,2,3,1\nbogus\n");
    try {
        (void)read_events(in, EventFileFormat::Csv);
        FAIL("expected parse error");
    } catch (const Error& e) {
        CHECK(e.code() == "parse");
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("non-monotone timestamps rejected at ingest") {
    std::istringstream in("t,x,y,p\n10,0,0,1\n5,1,1,1\n");
    CHECK_THROWS_AS((void)read_events(in, EventFileFormat::Csv), Error);
}

TEST_CASE("same-pixel same-timestamp pairs rejected at ingest") {
    std::istringstream in("t,x,y,p\n10,2,2,1\n10,2,2,-1\n");
    CHECK_THROWS_AS((void)read_events(in, EventFileFormat::Csv), Error);
}

TEST_CASE("round-trip through both formats") {
    SceneConfig cfg;
    cfg.pattern = ScenePattern::Mixed;
    cfg.width = 32;
    cfg.height = 20;
    cfg.duration_us = 40000;
    cfg.seed = 11;
    const EventSequence seq = generate_synthetic(cfg);
    REQUIRE(!seq.events.empty());

    for (auto fmt : {EventFileFormat::EvtBin, EventFileFormat::Csv}) {
        std::ostringstream buf;
        write_events(buf, seq, fmt);
        std::istringstream in(buf.str());
        const EventSequence back = read_events(in, fmt);
        CHECK(back.width == seq.width);
        CHECK(back.height == seq.height);
        CHECK(back.events == seq.events);
    }
}

TEST_CASE("tensorize packs a dense prefix and pads with zeros") {
    // pixel 0: 3 events; pixel 1: 4 events forces z = 4
    std::vector<std::vector<std::array<double, 2>>> px(2);
    px[0] = {{0.1, 1}, {0.2, -1}, {0.3, 1}};
    px[1] = {{0.1, -1}, {0.15, 1}, {0.5, 1}, {0.9, -1}};
    const TensorizedWindow tw = test::make_window(2, 1, px);
    REQUIRE(tw.z == 4);
    CHECK(tw.masked(0, 0) == 1);
    CHECK(tw.masked(1, 0) == 1);
    CHECK(tw.masked(2, 0) == 1);
    CHECK(tw.masked(3, 0) == 0);
    CHECK(tw.value(3, 0, 0) == 0.0);
    CHECK(tw.value(3, 0, 1) == 0.0);
    CHECK(tw.count(0) == 3);
    CHECK(tw.count(1) == 4);
}

TEST_CASE("tensorize of an empty window is a 1-slot zero tensor") {
    EventSequence seq;
    seq.width = 3;
    seq.height = 3;
    const TensorizedWindow tw = tensorize(seq, {}, 100);
    CHECK(tw.z == 1);
    for (int pix = 0; pix < 9; ++pix) {
        CHECK(tw.masked(0, pix) == 0);
        CHECK(tw.value(0, pix, 0) == 0.0);
    }
}

TEST_CASE("hot pixel keeps the earliest z_cap events") {
    std::vector<std::vector<std::array<double, 2>>> px(1);
    for (int i = 0; i < 120; ++i) px[0].push_back({0.001 + i * 0.008, 1});
    const TensorizedWindow tw = test::make_window(1, 1, px, 100);
    CHECK(tw.z == 100);
    CHECK(tw.count(0) == 100);
    for (int s = 0; s < 100; ++s)
        CHECK(tw.value(s, 0, 0) == doctest::Approx(px[0][s][0]));
}

TEST_CASE("tensorize then detensorize reproduces per-pixel sequences") {
    Rng rng(99);
    for (int it = 0; it < 20; ++it) {
        const TensorizedWindow tw = test::random_window(rng, 4, 3, 6);
        const auto lists = detensorize(tw);
        // rebuild a window from the lists and compare tensors
        const TensorizedWindow back = test::make_window(4, 3, lists, tw.z);
        REQUIRE(back.z <= tw.z);
        for (int pix = 0; pix < tw.pixels(); ++pix) {
            REQUIRE(back.count(pix) == tw.count(pix));
            for (int s = 0; s < back.count(pix); ++s) {
                CHECK(back.value(s, pix, 0) == tw.value(s, pix, 0));
                CHECK(back.value(s, pix, 1) == tw.value(s, pix, 1));
            }
        }
    }
}

TEST_CASE("crop rebases coordinates") {
    EventSequence seq;
    seq.width = 8;
    seq.height = 8;
    seq.events.push_back({4, 5, 10, 1});
    seq.events.push_back({0, 0, 20, -1});
    const EventSequence c = crop_events(seq, 3, 3, 4, 4);
    REQUIRE(c.events.size() == 1);
    CHECK(c.events[0].x == 1);
    CHECK(c.events[0].y == 2);
    CHECK(c.width == 4);
}

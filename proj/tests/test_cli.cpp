// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sser/engine.hpp"
#include "sser/event_file.hpp"
#include "test_helpers.hpp"

using namespace sser;
namespace fs = std::filesystem;

namespace {

const std::string kCli = SSER_CLI_PATH;

struct RunResult {
    int exit_code = 0;
    std::string out;
    std::string err;
};

RunResult run(const std::string& args, const fs::path& dir) {
    const fs::path so = dir / "stdout.txt";
    const fs::path se = dir / "stderr.txt";
    const std::string cmd = "cd " + dir.string() + " && " + kCli + " " + args + " >" +
                            so.string() + " 2>" + se.string();
    const int rc = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = rc == -1 ? -1 : WEXITSTATUS(rc);
    std::ifstream fo(so), fe(se);
    r.out.assign(std::istreambuf_iterator<char>(fo), std::istreambuf_iterator<char>());
    r.err.assign(std::istreambuf_iterator<char>(fe), std::istreambuf_iterator<char>());
    return r;
}

std::uint64_t digest_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    Digest d;
    char buf[4096];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) d.update(buf, std::size_t(in.gcount()));
    return d.value();
}

}  // namespace

TEST_CASE("gen is reproducible and threshold-dominated") {
    const auto dir = test::temp_dir("cli_gen");
    auto r1 = run("gen --pattern bar --w 24 --h 24 --dur-ms 60 --seed 7 --out a.evt", dir);
    REQUIRE(r1.exit_code == 0);
    auto r2 = run("gen --pattern bar --w 24 --h 24 --dur-ms 60 --seed 7 --out b.evt", dir);
    REQUIRE(r2.exit_code == 0);
    CHECK(digest_file(dir / "a.evt") == digest_file(dir / "b.evt"));

    // absurd threshold leaves (nearly) nothing
    auto r3 = run("gen --pattern bar --w 24 --h 24 --dur-ms 60 --threshold 1e9 --out c.evt", dir);
    REQUIRE(r3.exit_code == 0);
    CHECK(read_events_file((dir / "c.evt").string()).events.empty());

    // manifests land next to outputs
    CHECK(fs::exists(dir / "a.evt.manifest.json"));
}

TEST_CASE("missing required flag is a usage error") {
    const auto dir = test::temp_dir("cli_usage");
    const auto r = run("gen --pattern bar", dir);
    CHECK(r.exit_code != 0);
    CHECK(r.err.rfind("error: usage:", 0) == 0);
    CHECK(r.err.find('\n') == r.err.size() - 1);  // single line
}

TEST_CASE("bits range is validated") {
    const auto dir = test::temp_dir("cli_bits");
    const auto r = run("quantize --model x --data y --bits 1 --out q", dir);
    CHECK(r.exit_code != 0);
    CHECK(r.err.rfind("error: usage:", 0) == 0);
}

TEST_CASE("simulate reports the exact reference latencies") {
    const auto dir = test::temp_dir("cli_sim");
    for (auto [flags, ns] : std::initializer_list<std::pair<const char*, int>>{
             {"--clock-mhz 100", 160}, {"--clock-mhz 200", 80}, {"--clock-mhz 100 --depth 100", 1000}}) {
        const auto r = run(std::string("simulate ") + flags, dir);
        REQUIRE(r.exit_code == 0);
        const auto j = nlohmann::json::parse(r.out);
        CHECK(j["schedule"]["latency_ns"] == ns);
        CHECK(j["reference_reported"]["source"] == "reported");
    }
}

TEST_CASE("render maps values to gray endpoints and one image per channel") {
    const auto dir = test::temp_dir("cli_render");
    // hand-made 2x1, 12-channel representation probing -1, 0, +1
    Representation rep;
    rep.width = 2;
    rep.height = 1;
    rep.channels = 12;
    rep.mode = EngineMode::Float;
    rep.data.assign(24, 0.0);
    rep.data[0] = 1.0;   // pixel 0, channel 0
    rep.data[12] = -1.0; // pixel 1, channel 0
    write_representation_file((dir / "r.ssrp").string(), rep);

    const auto r = run("render --input r.ssrp --out-dir imgs", dir);
    REQUIRE(r.exit_code == 0);
    int count = 0;
    for (const auto& e : fs::directory_iterator(dir / "imgs"))
        if (e.path().extension() == ".pgm") ++count;
    CHECK(count == 12);

    std::ifstream img(dir / "imgs/ch00.pgm", std::ios::binary);
    std::string magic, wh, maxv;
    std::getline(img, magic);
    std::getline(img, wh);
    std::getline(img, maxv);
    CHECK(magic == "P5");
    const int p0 = img.get();
    const int p1 = img.get();
    CHECK(p0 == 255);  // +1.0
    CHECK(p1 == 0);    // -1.0

    std::ifstream img1(dir / "imgs/ch01.pgm", std::ios::binary);
    std::getline(img1, magic);
    std::getline(img1, wh);
    std::getline(img1, maxv);
    CHECK(img1.get() == 128);  // 0.0 maps to mid-gray
}

TEST_CASE("train then quantize then encode in both modes") {
    const auto dir = test::temp_dir("cli_pipeline");
    REQUIRE(run("gen --pattern mixed --w 24 --h 24 --dur-ms 80 --seed 5 --threshold 0.12 "
                "--out ev.evt",
                dir)
                .exit_code == 0);

    const std::string train_flags =
        "train --data ev.evt --cell gru --dims 6,6 --epochs 6 --samples 6 --window-ms 20 "
        "--crop 12 --z-cap 24 --seed 3 --out m.sser";
    REQUIRE(run(train_flags, dir).exit_code == 0);
    REQUIRE(fs::exists(dir / "m.sser.loss.csv"));

    REQUIRE(run("quantize --model m.sser --data ev.evt --bits 8 --window-ms 20 --crop 12 "
                "--seed 3 --out q.sser",
                dir)
                .exit_code == 0);

    REQUIRE(run("encode --model m.sser --data ev.evt --mode float --window-ms 20 "
                "--out-prefix f/rep",
                dir)
                .exit_code == 0);
    REQUIRE(run("encode --model q.sser --data ev.evt --mode quant --window-ms 20 "
                "--out-prefix q/rep",
                dir)
                .exit_code == 0);

    // encode twice -> identical digests
    REQUIRE(run("encode --model m.sser --data ev.evt --mode float --window-ms 20 "
                "--out-prefix f2/rep",
                dir)
                .exit_code == 0);
    CHECK(digest_file(dir / "f/rep_0000.ssrp") == digest_file(dir / "f2/rep_0000.ssrp"));

    // float and quantized agree within the documented trajectory bound
    const Representation rf = read_representation_file((dir / "f/rep_0000.ssrp").string());
    const Representation rq = read_representation_file((dir / "q/rep_0000.ssrp").string());
    REQUIRE(rf.channels == rq.channels);
    const auto fd = rf.dense();
    const auto qd = rq.dense();
    double worst = 0.0;
    for (std::size_t i = 0; i < fd.size(); ++i)
        worst = std::max(worst, std::fabs(fd[i] - qd[i]));
    CHECK(worst <= 6.0 * rq.scale);
}

TEST_CASE("lr 0 keeps the loss csv flat") {
    const auto dir = test::temp_dir("cli_lr0");
    REQUIRE(run("gen --pattern mixed --w 20 --h 20 --dur-ms 60 --seed 2 --threshold 0.12 "
                "--out ev.evt",
                dir)
                .exit_code == 0);
    REQUIRE(run("train --data ev.evt --cell gru --dims 4,4 --epochs 4 --samples 3 "
                "--window-ms 15 --crop 10 --z-cap 16 --lr 0 --wd 0 --out m.sser",
                dir)
                .exit_code == 0);
    std::ifstream csv(dir / "m.sser.loss.csv");
    std::string header, line;
    std::getline(csv, header);
    CHECK(header == "epoch,loss");
    std::vector<std::string> losses;
    while (std::getline(csv, line))
        losses.push_back(line.substr(line.find(',') + 1));
    REQUIRE(losses.size() == 4);
    for (const auto& l : losses) CHECK(l == losses[0]);
}

TEST_CASE("bench reports throughput and equal digests across workers") {
    const auto dir = test::temp_dir("cli_bench");
    REQUIRE(run("gen --pattern mixed --w 24 --h 24 --dur-ms 50 --seed 4 --threshold 0.15 "
                "--out ev.evt",
                dir)
                .exit_code == 0);
    REQUIRE(run("train --data ev.evt --cell gru --dims 4,4 --epochs 1 --samples 2 "
                "--window-ms 15 --crop 10 --z-cap 12 --out m.sser",
                dir)
                .exit_code == 0);
    const auto r = run("bench --model m.sser --data ev.evt --workers 2 --window-ms 20", dir);
    REQUIRE(r.exit_code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["float"]["digests_equal"] == true);
    for (const auto& runj : j["float"]["runs"]) CHECK(runj["events_per_s"].get<double>() > 0.0);
}

TEST_CASE("config file supplies defaults that flags override") {
    const auto dir = test::temp_dir("cli_config");
    {
        std::ofstream cfg(dir / "sser.ini");
        cfg << "[gen]\npattern=bar\nw=20\nh=20\ndur-ms=40\nseed=9\nout=from_config.evt\n";
    }
    REQUIRE(run("--config sser.ini gen", dir).exit_code == 0);
    CHECK(fs::exists(dir / "from_config.evt"));
}

TEST_CASE("SSER_OUT_DIR redirects relative outputs") {
    const auto dir = test::temp_dir("cli_envdir");
    const std::string cmd = "cd " + dir.string() + " && SSER_OUT_DIR=envout " + kCli +
                            " gen --pattern bar --w 16 --h 16 --dur-ms 30 --out e.evt >/dev/null 2>&1";
    REQUIRE(std::system(cmd.c_str()) == 0);
    CHECK(fs::exists(dir / "envout/e.evt"));
}

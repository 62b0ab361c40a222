// SPDX-License-Identifier: Apache-2.0
//
// sser — event-stream representation toolkit.
//
// Subcommands: gen, train, quantize, encode, simulate, bench, render.
// Every artifact-producing command drops a <output>.manifest.json next to its
// primary output with the exact configuration, seeds and wall-clock time.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sser/engine.hpp"
#include "sser/event_file.hpp"
#include "sser/hwsim.hpp"
#include "sser/model.hpp"
#include "sser/quantize.hpp"
#include "sser/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sser;

namespace {

constexpr const char* kVersion = "sser 0.1.0";

std::string g_out_dir;

std::string resolve_out(const std::string& path) {
    if (g_out_dir.empty() || path.empty() || fs::path(path).is_absolute()) return path;
    fs::create_directories(g_out_dir);
    return (fs::path(g_out_dir) / path).string();
}

std::uint64_t file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("io", "cannot open " + path);
    Digest d;
    char buf[4096];
    while (in.read(buf, sizeof buf) || in.gcount() > 0)
        d.update(buf, std::size_t(in.gcount()));
    return d.value();
}

class Manifest {
public:
    Manifest(const std::string& command, const std::vector<std::string>& argv) {
        j_["command"] = command;
        j_["tool"] = kVersion;
        j_["argv"] = argv;
        start_ = std::chrono::steady_clock::now();
    }
    json& config() { return j_["config"]; }
    void add_input(const std::string& p) { j_["inputs"].push_back(p); }
    void add_output(const std::string& p) { j_["outputs"].push_back(p); }
    void write(const std::string& primary_output) {
        const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - start_)
                            .count();
        j_["wall_clock_ms"] = ms;
        for (const auto& o : j_["outputs"]) {
            const std::string p = o.get<std::string>();
            if (fs::exists(p)) j_["output_digests"][p] = file_digest(p);
        }
        std::ofstream out(primary_output + ".manifest.json", std::ios::trunc);
        if (!out) fail("io", "cannot write manifest next to " + primary_output);
        out << j_.dump(2) << '\n';
    }

private:
    json j_;
    std::chrono::steady_clock::time_point start_;
};

std::vector<int> parse_dims(const std::string& s) {
    std::vector<int> dims;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        dims.push_back(std::stoi(tok));
    }
    if (dims.empty()) fail("usage", "--dims needs a comma-separated layer list");
    return dims;
}

// ---------------------------------------------------------------- gen

struct GenArgs {
    std::string pattern = "bar";
    int w = 64, h = 64;
    double dur_ms = 200.0;
    double threshold = 0.15;
    std::uint64_t seed = 1;
    double amplitude = 1.0;
    double bar_width = 6.0;
    double bar_speed = 160.0;
    int dots = 3;
    double dot_sigma = 2.5;
    double dot_speed = 120.0;
    std::string out;
};

int run_gen(const GenArgs& a, const std::vector<std::string>& argv) {
    SceneConfig cfg;
    cfg.pattern = scene_pattern_from_name(a.pattern);
    cfg.width = std::uint16_t(a.w);
    cfg.height = std::uint16_t(a.h);
    cfg.duration_us = std::uint64_t(a.dur_ms * 1000.0);
    cfg.threshold = a.threshold;
    cfg.seed = a.seed;
    cfg.amplitude = a.amplitude;
    cfg.bar_width = a.bar_width;
    cfg.bar_speed = a.bar_speed;
    cfg.dot_count = a.dots;
    cfg.dot_sigma = a.dot_sigma;
    cfg.dot_speed = a.dot_speed;

    Manifest man("gen", argv);
    man.config() = {{"pattern", a.pattern},       {"w", a.w},
                    {"h", a.h},                   {"dur_ms", a.dur_ms},
                    {"threshold", a.threshold},   {"seed", a.seed},
                    {"amplitude", a.amplitude},   {"bar_width", a.bar_width},
                    {"bar_speed", a.bar_speed},   {"dots", a.dots},
                    {"dot_sigma", a.dot_sigma},   {"dot_speed", a.dot_speed}};

    const EventSequence seq = generate_synthetic(cfg);
    const std::string out = resolve_out(a.out);
    write_events_file(out, seq);
    man.add_output(out);
    man.write(out);
    std::cout << "wrote " << seq.events.size() << " events to " << out << '\n';
    return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
    std::string data;
    std::string cell = "gru";
    std::string dims = "12,12,12";
    int epochs = 30;
    double lr = 1e-3;
    double wd = 1e-4;
    double window_ms = 200.0;
    int crop = 64;
    int z_cap = 100;
    int samples = 16;
    std::uint64_t seed = 1;
    int wbits = 0;
    int abits = 0;
    double alpha = 1.0;
    double beta = 0.1;
    std::string out;
    std::string loss_csv;
};

int run_train(const TrainArgs& a, const std::vector<std::string>& argv) {
    const EventSequence data = read_events_file(a.data);
    TrainConfig cfg;
    cfg.epochs = a.epochs;
    cfg.lr = a.lr;
    cfg.weight_decay = a.wd;
    cfg.window_us = std::uint64_t(a.window_ms * 1000.0);
    cfg.crop = a.crop;
    cfg.z_cap = a.z_cap;
    cfg.samples_per_epoch = a.samples;
    cfg.seed = a.seed;
    cfg.quant.weight_bits = a.wbits;
    cfg.quant.act_bits = a.abits;
    cfg.loss.alpha = a.alpha;
    cfg.loss.beta = a.beta;

    Manifest man("train", argv);
    man.config() = {{"data", a.data},   {"cell", a.cell},     {"dims", a.dims},
                    {"epochs", a.epochs}, {"lr", a.lr},       {"wd", a.wd},
                    {"window_ms", a.window_ms}, {"crop", a.crop}, {"z_cap", a.z_cap},
                    {"samples", a.samples}, {"seed", a.seed}, {"wbits", a.wbits},
                    {"abits", a.abits}, {"alpha", a.alpha},   {"beta", a.beta}};
    man.add_input(a.data);

    const TrainResult r = train_encoder(data, cell_kind_from_name(a.cell), parse_dims(a.dims), cfg);

    const std::string out = resolve_out(a.out);
    save_model(out, r.enc, &r.dec);
    man.add_output(out);
    const std::string csv = a.loss_csv.empty() ? out + ".loss.csv" : resolve_out(a.loss_csv);
    write_loss_csv(csv, r.epoch_loss);
    man.add_output(csv);
    man.write(out);
    std::cout << "final epoch loss " << r.epoch_loss.back() << ", checkpoint " << out << '\n';
    return 0;
}

// ---------------------------------------------------------------- quantize

struct QuantArgs {
    std::string model;
    std::string data;
    int bits = 8;
    int wbits = 0;  // override
    int abits = 0;
    int lut_bits = 12;
    int calib_windows = 8;
    double window_ms = 200.0;
    int crop = 64;
    int z_cap = 100;
    std::uint64_t seed = 1;
    bool pot_scales = false;
    std::string out;
};

int run_quantize(const QuantArgs& a, const std::vector<std::string>& argv) {
    const LoadedModel lm = load_model(a.model);
    const EventSequence data = read_events_file(a.data);

    QuantScheme scheme;
    scheme.weight_bits = a.wbits > 0 ? a.wbits : a.bits;
    scheme.act_bits = a.abits > 0 ? a.abits : a.bits;
    scheme.lut_in_bits = a.lut_bits;
    scheme.power_of_two_scales = a.pot_scales;

    TrainConfig sampler;
    sampler.window_us = std::uint64_t(a.window_ms * 1000.0);
    sampler.crop = std::min<int>(a.crop, std::min(data.width, data.height));
    sampler.z_cap = a.z_cap;
    sampler.seed = a.seed;
    const auto calib = make_eval_windows(data, sampler, a.calib_windows, 0xCA11B);

    Manifest man("quantize", argv);
    man.config() = {{"model", a.model},       {"data", a.data},
                    {"weight_bits", scheme.weight_bits}, {"act_bits", scheme.act_bits},
                    {"lut_in_bits", a.lut_bits}, {"calib_windows", a.calib_windows},
                    {"window_ms", a.window_ms}, {"crop", sampler.crop},
                    {"z_cap", a.z_cap},        {"seed", a.seed},
                    {"pot_scales", a.pot_scales}};
    man.add_input(a.model);
    man.add_input(a.data);

    const QuantizedModel qm = quantize_model(lm.enc, scheme, calib);
    const std::string out = resolve_out(a.out);
    save_quantized_model(out, qm);
    man.add_output(out);
    man.write(out);
    for (const std::string& w : qm.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << "quantized model (" << scheme.weight_bits << "w/" << scheme.act_bits
              << "a) written to " << out << '\n';
    return 0;
}

// ---------------------------------------------------------------- encode

struct EncodeArgs {
    std::string model;
    std::string data;
    std::string mode = "float";
    double window_ms = 50.0;
    std::string reset = "zero";
    int workers = 1;
    std::string out_prefix;
};

int run_encode(const EncodeArgs& a, const std::vector<std::string>& argv) {
    const EventSequence data = read_events_file(a.data);

    EngineConfig cfg;
    cfg.width = data.width;
    cfg.height = data.height;
    cfg.window_us = std::uint64_t(a.window_ms * 1000.0);
    cfg.workers = a.workers;
    if (a.reset == "zero")
        cfg.reset = ResetPolicy::ZeroEachWindow;
    else if (a.reset == "persist")
        cfg.reset = ResetPolicy::Persist;
    else
        fail("usage", "--reset must be zero or persist");

    Manifest man("encode", argv);
    man.config() = {{"model", a.model},     {"data", a.data},    {"mode", a.mode},
                    {"window_ms", a.window_ms}, {"reset", a.reset}, {"workers", a.workers}};
    man.add_input(a.model);
    man.add_input(a.data);

    std::vector<std::pair<int, Representation>> reps;
    RejectionCounts rej;
    if (a.mode == "float") {
        if (model_file_kind(a.model) != 0)
            fail("usage", "--mode float needs a float checkpoint");
        Engine eng(load_model(a.model).enc, cfg);
        reps = run_stream(eng, data);
        rej = eng.rejections();
    } else if (a.mode == "quant") {
        if (model_file_kind(a.model) != 1)
            fail("usage", "--mode quant needs a quantized model file");
        Engine eng(load_quantized_model(a.model), cfg);
        reps = run_stream(eng, data);
        rej = eng.rejections();
    } else {
        fail("usage", "--mode must be float or quant");
    }

    const std::string prefix = resolve_out(a.out_prefix);
    if (const auto dir = fs::path(prefix).parent_path(); !dir.empty())
        fs::create_directories(dir);
    std::string first;
    for (const auto& [idx, rep] : reps) {
        char name[32];
        std::snprintf(name, sizeof name, "_%04d.ssrp", idx);
        const std::string path = prefix + name;
        write_representation_file(path, rep);
        man.add_output(path);
        if (first.empty()) first = path;
    }
    man.write(first.empty() ? prefix + ".ssrp" : first);
    std::cout << "emitted " << reps.size() << " windows (" << rej.total() << " rejected events)\n";
    return 0;
}

// ---------------------------------------------------------------- simulate

struct SimArgs {
    std::string data;
    double clock_mhz = 100.0;
    int depth = 16;
    int hazard = 0;
    std::string policy = "stall";
    std::string cell = "gru";
    double event_rate = 0.0;
    int d_in = 2;
    int d_out = 12;
    int precision = 8;
    int sensor_w = 128;
    int sensor_h = 128;
    std::string out;
};

// CSV with an explicit per-event arrival-cycle column: "t,x,y,p,cycle"
bool read_cycle_csv(const std::string& path, EventSequence& seq,
                    std::vector<ArrivalEvent>& arrivals) {
    std::ifstream in(path);
    if (!in) fail("io", "cannot open " + path);
    std::string line;
    bool saw_header = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (!saw_header) {
            if (line != "t,x,y,p,cycle") return false;
            saw_header = true;
            continue;
        }
        unsigned long long t = 0, cyc = 0;
        long x = 0, y = 0, p = 0;
        char c1, c2, c3, c4;
        std::istringstream ls(line);
        if (!(ls >> t >> c1 >> x >> c2 >> y >> c3 >> p >> c4 >> cyc))
            fail("parse", "line " + std::to_string(lineno) + ": malformed trace record");
        Event e;
        e.t = t;
        e.x = std::uint16_t(x);
        e.y = std::uint16_t(y);
        e.p = std::int8_t(p);
        seq.events.push_back(e);
        seq.width = std::max<std::uint16_t>(seq.width, std::uint16_t(x + 1));
        seq.height = std::max<std::uint16_t>(seq.height, std::uint16_t(y + 1));
        arrivals.push_back({cyc, e.x, e.y});
    }
    return saw_header;
}

int run_simulate(const SimArgs& a, const std::vector<std::string>& argv) {
    PipelineConfig cfg;
    cfg.clock_hz = a.clock_mhz * 1e6;
    cfg.pipeline_depth = a.depth;
    cfg.hazard_window = a.hazard;
    cfg.kind = cell_kind_from_name(a.cell);
    cfg.policy = a.policy == "reject" ? StallPolicy::Reject : StallPolicy::Stall;
    cfg.d_in = a.d_in;
    cfg.d_out = a.d_out;

    EventSequence seq;
    std::vector<ArrivalEvent> arrivals;
    if (!a.data.empty()) {
        bool cycles_in_file = false;
        if (format_for_path(a.data) == EventFileFormat::Csv)
            cycles_in_file = read_cycle_csv(a.data, seq, arrivals);
        if (!cycles_in_file) {
            seq = read_events_file(a.data);
            arrivals = a.event_rate > 0 ? arrivals_from_rate(seq, cfg.clock_hz, a.event_rate)
                                        : arrivals_from_timestamps(seq, cfg.clock_hz);
        }
    } else {
        arrivals.push_back({0, 0, 0});  // single-event latency probe
    }

    const CycleReport rep = schedule(arrivals, cfg);
    const ResourceEstimate res =
        estimate_resources(a.d_in, a.d_out, cfg.kind, a.precision, std::uint16_t(a.sensor_w),
                           std::uint16_t(a.sensor_h));
    const std::string out_json = report_json(rep, res, cfg);

    if (!a.out.empty()) {
        Manifest man("simulate", argv);
        man.config() = {{"data", a.data},       {"clock_mhz", a.clock_mhz},
                        {"depth", a.depth},     {"hazard", cfg.effective_hazard()},
                        {"policy", a.policy},   {"cell", a.cell},
                        {"event_rate", a.event_rate}, {"d_out", a.d_out},
                        {"precision", a.precision}};
        if (!a.data.empty()) man.add_input(a.data);
        const std::string out = resolve_out(a.out);
        std::ofstream o(out, std::ios::trunc);
        if (!o) fail("io", "cannot open " + out + " for writing");
        o << out_json << '\n';
        man.add_output(out);
        man.write(out);
    }
    std::cout << out_json << '\n';
    if (rep.latency_ns_integral)
        std::cerr << "latency per event: " << rep.latency_ns_int << " ns; throughput "
                  << rep.throughput_eps << " events/s\n";
    return 0;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
    std::string model;
    std::string quant_model;
    std::string data;
    double window_ms = 50.0;
    int workers = 2;
    std::string out;
};

json bench_one(Engine& make_proto, const EventSequence& data, const EngineConfig& base,
               const std::string& model_path, bool quantized, int workers) {
    json j;
    std::uint64_t digest1 = 0;
    for (int w : {1, workers}) {
        EngineConfig cfg = base;
        cfg.workers = w;
        // fresh engine per run
        Engine eng = quantized ? Engine(load_quantized_model(model_path), cfg)
                               : Engine(load_model(model_path).enc, cfg);
        const auto t0 = std::chrono::steady_clock::now();
        const auto reps = run_stream(eng, data);
        const auto dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0);
        Digest d;
        for (const auto& [i, r] : reps) {
            const std::uint64_t h = r.digest();
            d.update(&h, sizeof h);
        }
        const double eps = double(data.events.size()) / dt.count();
        json run;
        run["workers"] = w;
        run["seconds"] = dt.count();
        run["events_per_s"] = eps;
        run["ns_per_event"] = 1e9 / eps;
        run["digest"] = d.value();
        j["runs"].push_back(run);
        if (w == 1) digest1 = d.value();
        j["digests_equal"] = (d.value() == digest1);
    }
    (void)make_proto;
    return j;
}

int run_bench(const BenchArgs& a, const std::vector<std::string>& argv) {
    const EventSequence data = read_events_file(a.data);
    EngineConfig cfg;
    cfg.width = data.width;
    cfg.height = data.height;
    cfg.window_us = std::uint64_t(a.window_ms * 1000.0);

    json out;
    out["events"] = data.events.size();
    Engine dummy(load_model(a.model).enc, cfg);
    out["float"] = bench_one(dummy, data, cfg, a.model, false, a.workers);
    if (!a.quant_model.empty())
        out["quantized"] = bench_one(dummy, data, cfg, a.quant_model, true, a.workers);

    const std::string path = resolve_out(a.out);
    if (!path.empty()) {
        Manifest man("bench", argv);
        man.config() = {{"model", a.model}, {"quant_model", a.quant_model},
                        {"data", a.data},   {"window_ms", a.window_ms},
                        {"workers", a.workers}};
        man.add_input(a.model);
        man.add_input(a.data);
        std::ofstream o(path, std::ios::trunc);
        if (!o) fail("io", "cannot open " + path + " for writing");
        o << out.dump(2) << '\n';
        man.add_output(path);
        man.write(path);
    }
    std::cout << out.dump(2) << '\n';
    return 0;
}

// ---------------------------------------------------------------- render

struct RenderArgs {
    std::string input;
    std::string out_dir = ".";
    std::string palette = "gray";
};

int run_render(const RenderArgs& a, const std::vector<std::string>& argv) {
    const Representation rep = read_representation_file(a.input);
    const std::vector<double> dense = rep.dense();
    const std::string dir = resolve_out(a.out_dir);
    fs::create_directories(dir);

    Manifest man("render", argv);
    man.config() = {{"input", a.input}, {"palette", a.palette}};
    man.add_input(a.input);

    const int wh = int(rep.width) * int(rep.height);
    std::string first;
    for (int c = 0; c < rep.channels; ++c) {
        char name[32];
        const bool gray = a.palette == "gray";
        std::snprintf(name, sizeof name, "ch%02d.%s", c, gray ? "pgm" : "ppm");
        const std::string path = (fs::path(dir) / name).string();
        std::ofstream o(path, std::ios::binary | std::ios::trunc);
        if (!o) fail("io", "cannot open " + path + " for writing");
        if (gray) {
            o << "P5\n" << rep.width << ' ' << rep.height << "\n255\n";
            for (int pix = 0; pix < wh; ++pix) {
                const double v = dense[std::size_t(pix) * rep.channels + c];
                const int g = int(std::clamp<std::int64_t>(iround((v + 1.0) * 127.5), 0, 255));
                o.put(char(g));
            }
        } else if (a.palette == "diverging") {
            // cosmetic blue/red map: negative blue, positive red
            o << "P6\n" << rep.width << ' ' << rep.height << "\n255\n";
            for (int pix = 0; pix < wh; ++pix) {
                const double v = dense[std::size_t(pix) * rep.channels + c];
                const int r = int(std::clamp<std::int64_t>(iround((1.0 + v) * 127.5), 0, 255));
                const int g = int(std::clamp<std::int64_t>(iround((1.0 - std::fabs(v)) * 127.5), 0, 255));
                const int b = int(std::clamp<std::int64_t>(iround((1.0 - v) * 127.5), 0, 255));
                o.put(char(r));
                o.put(char(g));
                o.put(char(b));
            }
        } else {
            fail("usage", "--palette must be gray or diverging");
        }
        man.add_output(path);
        if (first.empty()) first = path;
    }
    man.write(first);
    std::cout << "rendered " << rep.channels << " channel images to " << dir << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"event-stream recurrent representation toolkit"};
    app.set_version_flag("--version", kVersion);
    app.set_config("--config", "", "key=value config file; flags override it");
    app.add_option("--out-dir", g_out_dir, "directory for relative output paths")
        ->envname("SSER_OUT_DIR");
    app.require_subcommand(1);

    std::vector<std::string> raw_args(argv, argv + argc);

    GenArgs ga;
    CLI::App* gen = app.add_subcommand("gen", "generate a synthetic event stream");
    gen->set_help_flag("--help", "print help");  // frees -h / --h for the height flag
    gen->add_option("--pattern", ga.pattern, "static|ramp|bar|dot|mixed");
    gen->add_option("--w", ga.w);
    gen->add_option("--h", ga.h);
    gen->add_option("--dur-ms", ga.dur_ms);
    gen->add_option("--threshold", ga.threshold);
    gen->add_option("--seed", ga.seed);
    gen->add_option("--amplitude", ga.amplitude);
    gen->add_option("--bar-width", ga.bar_width);
    gen->add_option("--bar-speed", ga.bar_speed);
    gen->add_option("--dots", ga.dots);
    gen->add_option("--dot-sigma", ga.dot_sigma);
    gen->add_option("--dot-speed", ga.dot_speed);
    gen->add_option("--out", ga.out, "EVT-bin or .csv output")->required();

    TrainArgs ta;
    CLI::App* train = app.add_subcommand("train", "self-supervised encoder training");
    train->add_option("--data", ta.data)->required();
    train->add_option("--cell", ta.cell, "rnn|lstm|gru|mgu");
    train->add_option("--dims", ta.dims, "comma-separated layer widths");
    train->add_option("--epochs", ta.epochs);
    train->add_option("--lr", ta.lr);
    train->add_option("--wd", ta.wd);
    train->add_option("--window-ms", ta.window_ms);
    train->add_option("--crop", ta.crop);
    train->add_option("--z-cap", ta.z_cap);
    train->add_option("--samples", ta.samples, "windows per epoch");
    train->add_option("--seed", ta.seed);
    train->add_option("--wbits", ta.wbits, "weight bits for quantization-aware training");
    train->add_option("--abits", ta.abits, "activation bits for quantization-aware training");
    train->add_option("--alpha", ta.alpha);
    train->add_option("--beta", ta.beta);
    train->add_option("--out", ta.out, "checkpoint path")->required();
    train->add_option("--loss-csv", ta.loss_csv, "loss curve (default <out>.loss.csv)");

    QuantArgs qa;
    CLI::App* quant = app.add_subcommand("quantize", "export integer kernels from a checkpoint");
    quant->add_option("--model", qa.model)->required();
    quant->add_option("--data", qa.data, "calibration events")->required();
    quant->add_option("--bits", qa.bits)->check(CLI::Range(2, 12));
    quant->add_option("--wbits", qa.wbits, "override weight bits")->check(CLI::Range(2, 12));
    quant->add_option("--abits", qa.abits, "override activation bits")->check(CLI::Range(2, 12));
    quant->add_option("--lut-bits", qa.lut_bits)->check(CLI::Range(4, 16));
    quant->add_option("--calib-windows", qa.calib_windows);
    quant->add_option("--window-ms", qa.window_ms);
    quant->add_option("--crop", qa.crop);
    quant->add_option("--z-cap", qa.z_cap);
    quant->add_option("--seed", qa.seed);
    quant->add_flag("--pot-scales", qa.pot_scales, "round scales to powers of two");
    quant->add_option("--out", qa.out)->required();

    EncodeArgs ea;
    CLI::App* enc = app.add_subcommand("encode", "stream events into dense representations");
    enc->add_option("--model", ea.model)->required();
    enc->add_option("--data", ea.data)->required();
    enc->add_option("--mode", ea.mode, "float|quant");
    enc->add_option("--window-ms", ea.window_ms);
    enc->add_option("--reset", ea.reset, "zero|persist");
    enc->add_option("--workers", ea.workers)->check(CLI::Range(1, 64));
    enc->add_option("--out-prefix", ea.out_prefix)->required();

    SimArgs sa;
    CLI::App* sim = app.add_subcommand("simulate", "cycle-accurate pipeline model");
    sim->add_option("--data", sa.data, "EVT-bin or CSV trace (optional)");
    sim->add_option("--clock-mhz", sa.clock_mhz);
    sim->add_option("--depth", sa.depth);
    sim->add_option("--hazard", sa.hazard, "hazard window in cycles (default depth)");
    sim->add_option("--policy", sa.policy, "stall|reject");
    sim->add_option("--cell", sa.cell, "gru|mgu");
    sim->add_option("--event-rate", sa.event_rate, "uniform arrival rate, events/s");
    sim->add_option("--d-in", sa.d_in);
    sim->add_option("--d-out", sa.d_out);
    sim->add_option("--precision", sa.precision);
    sim->add_option("--sensor-w", sa.sensor_w);
    sim->add_option("--sensor-h", sa.sensor_h);
    sim->add_option("--out", sa.out, "JSON report path");

    BenchArgs ba;
    CLI::App* bench = app.add_subcommand("bench", "engine throughput measurement");
    bench->add_option("--model", ba.model)->required();
    bench->add_option("--quant-model", ba.quant_model);
    bench->add_option("--data", ba.data)->required();
    bench->add_option("--window-ms", ba.window_ms);
    bench->add_option("--workers", ba.workers)->check(CLI::Range(1, 64));
    bench->add_option("--out", ba.out);

    RenderArgs ra;
    CLI::App* render = app.add_subcommand("render", "write per-channel images from a representation");
    render->add_option("--input", ra.input)->required();
    render->add_option("--out-dir", ra.out_dir);
    render->add_option("--palette", ra.palette, "gray|diverging");

    try {
        app.parse(argc, argv);
        if (gen->parsed()) return run_gen(ga, raw_args);
        if (train->parsed()) return run_train(ta, raw_args);
        if (quant->parsed()) return run_quantize(qa, raw_args);
        if (enc->parsed()) return run_encode(ea, raw_args);
        if (sim->parsed()) return run_simulate(sa, raw_args);
        if (bench->parsed()) return run_bench(ba, raw_args);
        if (render->parsed()) return run_render(ra, raw_args);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        std::cout << kVersion << '\n';
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: usage: " << e.what() << '\n';
        return 64;
    } catch (const Error& e) {
        std::cerr << "error: " << e.code() << ": " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << '\n';
        return 3;
    }
    return 0;
}

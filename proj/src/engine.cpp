// SPDX-License-Identifier: Apache-2.0
#include "sser/engine.hpp"

#include <algorithm>
#include <fstream>
#include <thread>

#include "sser/detail/binio.hpp"

namespace sser {

std::uint64_t HiddenStateMap::state_bits() const {
    std::uint64_t bits = 0;
    for (const Layer& l : layers)
        bits += std::uint64_t(width) * height * std::uint64_t(l.d_out) * l.precision_bits;
    return bits;
}

void HiddenStateMap::zero() {
    for (Layer& l : layers) {
        std::fill(l.h.begin(), l.h.end(), 0.0);
        std::fill(l.c.begin(), l.c.end(), 0.0);
        std::fill(l.q.begin(), l.q.end(), 0);
    }
}

namespace {

HiddenStateMap make_map(std::uint16_t w, std::uint16_t h) {
    HiddenStateMap m;
    m.width = w;
    m.height = h;
    return m;
}

}  // namespace

HiddenStateMap init_state(const EncoderModel& model, const EngineConfig& cfg) {
    HiddenStateMap m = make_map(cfg.width, cfg.height);
    const std::size_t px = std::size_t(cfg.width) * cfg.height;
    for (const CellParams& l : model.layers) {
        HiddenStateMap::Layer s;
        s.d_out = l.d_out;
        s.precision_bits = 32;
        s.has_cell = l.kind == CellKind::Lstm;
        s.h.assign(px * l.d_out, 0.0);
        if (s.has_cell) s.c.assign(px * l.d_out, 0.0);
        m.layers.push_back(std::move(s));
    }
    return m;
}

HiddenStateMap init_state(const QuantizedModel& model, const EngineConfig& cfg) {
    HiddenStateMap m = make_map(cfg.width, cfg.height);
    const std::size_t px = std::size_t(cfg.width) * cfg.height;
    for (const QuantizedLayer& l : model.layers) {
        HiddenStateMap::Layer s;
        s.d_out = l.d_out;
        s.precision_bits = model.scheme.act_bits;
        s.q.assign(px * l.d_out, 0);
        m.layers.push_back(std::move(s));
    }
    return m;
}

std::vector<double> Representation::dense() const {
    if (mode == EngineMode::Float) return data;
    return dequantize_representation(codes, scale);
}

std::uint64_t Representation::digest() const {
    Digest d;
    d.update(&width, sizeof width);
    d.update(&height, sizeof height);
    d.update(&channels, sizeof channels);
    if (mode == EngineMode::Float)
        d.update(data.data(), data.size() * sizeof(double));
    else
        d.update(codes.data(), codes.size() * sizeof(std::int32_t));
    return d.value();
}

Engine::Engine(EncoderModel model, EngineConfig cfg)
    : mode_(EngineMode::Float), cfg_(cfg), fmodel_(std::move(model)) {
    fmodel_.validate();
    if (cfg_.width == 0 || cfg_.height == 0) fail("config", "engine needs sensor dimensions");
    if (cfg_.window_us == 0) fail("config", "window length must be > 0");
    if (cfg_.workers < 1) fail("config", "worker count must be >= 1");
    state_ = init_state(fmodel_, cfg_);
    last_t_.assign(std::size_t(cfg_.width) * cfg_.height, 0);
}

Engine::Engine(QuantizedModel model, EngineConfig cfg)
    : mode_(EngineMode::Quantized), cfg_(cfg), qmodel_(std::move(model)) {
    qmodel_.validate();
    if (cfg_.width == 0 || cfg_.height == 0) fail("config", "engine needs sensor dimensions");
    if (cfg_.window_us == 0) fail("config", "window length must be > 0");
    if (cfg_.workers < 1) fail("config", "worker count must be >= 1");
    state_ = init_state(qmodel_, cfg_);
    last_t_.assign(std::size_t(cfg_.width) * cfg_.height, 0);
}

void Engine::begin_window(std::uint64_t t0) {
    window_t0_ = t0;
    window_open_ = true;
    if (cfg_.reset == ResetPolicy::ZeroEachWindow) {
        state_.zero();
        std::fill(last_t_.begin(), last_t_.end(), 0);
    }
}

bool Engine::process_event(const Event& e) {
    if (!window_open_) fail("validation", "process_event before begin_window");
    if (e.x >= cfg_.width || e.y >= cfg_.height) {
        ++rejections_.out_of_bounds;
        return false;
    }
    if (e.t < window_t0_ || e.t >= window_t0_ + cfg_.window_us) {
        ++rejections_.out_of_bounds;
        return false;
    }
    const std::size_t pix = std::size_t(e.y) * cfg_.width + e.x;
    if (last_t_[pix] != 0 && e.t + 1 < last_t_[pix]) {
        ++rejections_.time_regression;
        return false;
    }
    apply(e);
    last_t_[pix] = e.t + 1;
    return true;
}

void Engine::apply(const Event& e) {
    const std::size_t pix = std::size_t(e.y) * cfg_.width + e.x;
    const double t_norm =
        double(e.t - window_t0_ + 1) / double(cfg_.window_us + 1);

    if (mode_ == EngineMode::Float) {
        Vec x = {t_norm, double(e.p)};
        for (std::size_t l = 0; l < fmodel_.layers.size(); ++l) {
            const CellParams& p = fmodel_.layers[l];
            HiddenStateMap::Layer& sl = state_.layers[l];
            StateVec s;
            s.h.assign(sl.h.begin() + pix * p.d_out, sl.h.begin() + (pix + 1) * p.d_out);
            if (sl.has_cell)
                s.c.assign(sl.c.begin() + pix * p.d_out, sl.c.begin() + (pix + 1) * p.d_out);
            const StateVec ns = cell_forward(p, x, s);
            std::copy(ns.h.begin(), ns.h.end(), sl.h.begin() + pix * p.d_out);
            if (sl.has_cell) std::copy(ns.c.begin(), ns.c.end(), sl.c.begin() + pix * p.d_out);
            x = ns.h;
        }
    } else {
        QuantInput x;
        x.codes = {quantize_timestamp(t_norm), std::int64_t(e.p)};
        for (std::size_t l = 0; l < qmodel_.layers.size(); ++l) {
            const QuantizedLayer& p = qmodel_.layers[l];
            HiddenStateMap::Layer& sl = state_.layers[l];
            const std::span<const std::int32_t> h(sl.q.data() + pix * p.d_out,
                                                  std::size_t(p.d_out));
            const std::vector<std::int32_t> nh = q_cell_step(p, x, h);
            std::copy(nh.begin(), nh.end(), sl.q.begin() + pix * p.d_out);
            x.codes.assign(nh.begin(), nh.end());
        }
    }
}

Representation Engine::emit() const {
    Representation r;
    r.width = cfg_.width;
    r.height = cfg_.height;
    r.mode = mode_;
    const HiddenStateMap::Layer& top = state_.layers.back();
    r.channels = top.d_out;
    const std::size_t px = std::size_t(cfg_.width) * cfg_.height;
    if (mode_ == EngineMode::Float) {
        r.data.assign(top.h.begin(), top.h.begin() + px * top.d_out);
    } else {
        r.scale = qmodel_.layers.back().state_scale;
        r.codes.assign(top.q.begin(), top.q.begin() + px * top.d_out);
    }
    return r;
}

std::vector<std::pair<int, Representation>> run_stream(Engine& eng, const EventSequence& seq) {
    std::vector<std::pair<int, Representation>> out;
    if (seq.events.empty()) return out;

    const std::uint64_t T = eng.cfg_.window_us;
    const std::uint64_t t_first = seq.events.front().t;
    const int workers = eng.cfg_.workers;

    std::size_t i = 0;
    int window = 0;
    while (i < seq.events.size()) {
        const std::uint64_t w_start = t_first + std::uint64_t(window) * T;
        const std::uint64_t w_end = w_start + T;
        eng.begin_window(w_start);

        std::size_t j = i;
        while (j < seq.events.size() && seq.events[j].t < w_end) ++j;

        if (workers <= 1) {
            for (std::size_t k = i; k < j; ++k) eng.process_event(seq.events[k]);
        } else {
            // shard by pixel; per-pixel order is preserved inside each bucket
            std::vector<std::vector<Event>> buckets(workers);
            std::vector<RejectionCounts> rej(workers);
            for (std::size_t k = i; k < j; ++k) {
                const Event& e = seq.events[k];
                if (e.x >= eng.cfg_.width || e.y >= eng.cfg_.height) {
                    ++eng.rejections_.out_of_bounds;
                    continue;
                }
                const std::size_t pix = std::size_t(e.y) * eng.cfg_.width + e.x;
                buckets[pix % workers].push_back(e);
            }
            std::vector<std::thread> threads;
            for (int w = 0; w < workers; ++w) {
                threads.emplace_back([&, w]() {
                    for (const Event& e : buckets[w]) {
                        const std::size_t pix = std::size_t(e.y) * eng.cfg_.width + e.x;
                        if (eng.last_t_[pix] != 0 && e.t + 1 < eng.last_t_[pix]) {
                            ++rej[w].time_regression;
                            continue;
                        }
                        eng.apply(e);
                        eng.last_t_[pix] = e.t + 1;
                    }
                });
            }
            for (std::thread& t : threads) t.join();  // quiescent point before emit
            for (const RejectionCounts& rc : rej) {
                eng.rejections_.out_of_bounds += rc.out_of_bounds;
                eng.rejections_.time_regression += rc.time_regression;
            }
        }

        if (eng.cfg_.emit == EmitPolicy::OnWindowBoundary) out.emplace_back(window, eng.emit());
        ++window;
        i = j;
    }
    return out;
}

// ---------------------------------------------------------------------------
// SSRP io

void write_representation(std::ostream& out, const Representation& rep) {
    using namespace binio;
    out.write("SSRP", 4);
    int mode_byte = 0;
    if (rep.mode == EngineMode::Quantized) {
        std::int32_t lo = 0, hi = 0;
        for (std::int32_t v : rep.codes) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        mode_byte = (lo >= -128 && hi <= 127) ? 1 : 2;
    }
    w_u8(out, std::uint8_t(mode_byte));
    w_u16(out, rep.width);
    w_u16(out, rep.height);
    w_u16(out, std::uint16_t(rep.channels));
    w_f64(out, rep.scale);
    if (mode_byte == 0) {
        for (double v : rep.data) w_f32(out, float(v));
    } else if (mode_byte == 1) {
        for (std::int32_t v : rep.codes) out.put(char(std::int8_t(v)));
    } else {
        for (std::int32_t v : rep.codes) w_u16(out, std::uint16_t(std::int16_t(v)));
    }
    if (!out) fail("io", "representation write failed");
}

Representation read_representation(std::istream& in) {
    using namespace binio;
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, "SSRP", 4) != 0)
        fail("parse", "not a representation file");
    Representation r;
    const int mode_byte = r_u8(in);
    r.mode = mode_byte == 0 ? EngineMode::Float : EngineMode::Quantized;
    r.width = r_u16(in);
    r.height = r_u16(in);
    r.channels = r_u16(in);
    r.scale = r_f64(in);
    const std::size_t n = std::size_t(r.width) * r.height * std::size_t(r.channels);
    if (mode_byte == 0) {
        r.data.resize(n);
        for (double& v : r.data) v = double(r_f32(in));
    } else if (mode_byte == 1) {
        r.codes.resize(n);
        for (std::int32_t& v : r.codes) {
            const int c = in.get();
            if (c < 0) fail("parse", "truncated representation payload");
            v = std::int8_t(c);
        }
    } else if (mode_byte == 2) {
        r.codes.resize(n);
        for (std::int32_t& v : r.codes) v = std::int16_t(r_u16(in));
    } else {
        fail("parse", "bad representation mode byte");
    }
    return r;
}

void write_representation_file(const std::string& path, const Representation& rep) {
    std::ofstream o(path, std::ios::binary | std::ios::trunc);
    if (!o) fail("io", "cannot open " + path + " for writing");
    write_representation(o, rep);
}

Representation read_representation_file(const std::string& path) {
    std::ifstream i(path, std::ios::binary);
    if (!i) fail("io", "cannot open " + path);
    return read_representation(i);
}

}  // namespace sser

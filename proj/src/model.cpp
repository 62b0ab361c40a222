// SPDX-License-Identifier: Apache-2.0
#include "sser/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace sser {

void EncoderModel::validate() const {
    if (layers.empty()) fail("validation", "encoder has no layers");
    int prev = input_dim();
    for (const CellParams& l : layers) {
        l.validate();
        if (l.d_in != prev) fail("validation", "encoder layer dimension chain broken");
        prev = l.d_out;
    }
}

void DecoderModel::validate() const {
    if (layers.empty()) fail("validation", "decoder has no layers");
    const int c = layers.front().d_in;
    for (const CellParams& l : layers) {
        l.validate();
        if (l.kind != CellKind::Gru) fail("validation", "decoder layers must be GRU");
        if (l.d_in != c || l.d_out != c) fail("validation", "decoder layer dims must equal channels");
    }
    if (head_out_w.rows != 2 || head_out_w.cols != c || int(head_out_b.size()) != 2)
        fail("validation", "head_out shape mismatch");
    if (head_in_w.rows != c || head_in_w.cols != 2 || int(head_in_b.size()) != c)
        fail("validation", "head_in shape mismatch");
}

std::vector<StateVec> initial_states(const EncoderModel& m) {
    std::vector<StateVec> s;
    s.reserve(m.layers.size());
    for (const CellParams& l : m.layers) s.push_back(zero_state(l));
    return s;
}

std::vector<StateVec> encode_sequence(const EncoderModel& m,
                                      const std::vector<std::array<double, 2>>& inputs,
                                      std::vector<StateVec> states, const QatQuantizers* qat) {
    if (states.size() != m.layers.size()) fail("validation", "state count mismatch");
    for (const auto& u : inputs) {
        Vec x = {u[0], u[1]};
        for (std::size_t l = 0; l < m.layers.size(); ++l) {
            states[l] = cell_forward(m.layers[l], x, states[l], qat);
            x = states[l].h;
        }
    }
    return states;
}

Mat encode_window(const EncoderModel& m, const TensorizedWindow& tw) {
    const int c = m.channels();
    Mat e(tw.pixels(), c);
    const std::vector<StateVec> init = initial_states(m);
    for (int pix = 0; pix < tw.pixels(); ++pix) {
        std::vector<StateVec> states = init;
        for (int slot = 0; slot < tw.z; ++slot) {
            if (!tw.masked(slot, pix)) continue;  // padding does not advance the state
            Vec x = {tw.value(slot, pix, 0), tw.value(slot, pix, 1)};
            for (std::size_t l = 0; l < m.layers.size(); ++l) {
                states[l] = cell_forward(m.layers[l], x, states[l]);
                x = states[l].h;
            }
        }
        for (int k = 0; k < c; ++k) e(pix, k) = states.back().h[k];
    }
    return e;
}

std::vector<std::array<double, 2>> decode(const DecoderModel& m, const Vec& e_row, int z_steps) {
    if (z_steps < 1) fail("validation", "decode needs z_steps >= 1");
    if (int(e_row.size()) != m.channels()) fail("validation", "decode row dimension mismatch");
    const int c = m.channels();
    std::vector<StateVec> states;
    for (const CellParams& l : m.layers) states.push_back(zero_state(l));

    std::vector<std::array<double, 2>> out;
    out.reserve(z_steps);
    Vec input = e_row;
    for (int z = 0; z < z_steps; ++z) {
        Vec x = input;
        for (std::size_t l = 0; l < m.layers.size(); ++l) {
            states[l] = cell_forward(m.layers[l], x, states[l]);
            x = states[l].h;
        }
        std::array<double, 2> d{m.head_out_b[0], m.head_out_b[1]};
        for (int k = 0; k < c; ++k) {
            d[0] += m.head_out_w(0, k) * x[k];
            d[1] += m.head_out_w(1, k) * x[k];
        }
        out.push_back(d);
        if (z + 1 < z_steps) {
            input.assign(c, 0.0);
            for (int k = 0; k < c; ++k)
                input[k] = m.head_in_b[k] + m.head_in_w(k, 0) * d[0] + m.head_in_w(k, 1) * d[1];
        }
    }
    return out;
}

namespace {

void init_cell(CellParams& p, Rng& rng) {
    p.init_shapes();
    const double k = 1.0 / std::sqrt(double(p.d_out));
    for (int g = 0; g < p.gates(); ++g) {
        for (double& v : p.w[g].a) v = rng.uniform(-k, k);
        for (double& v : p.u[g].a) v = rng.uniform(-k, k);
        for (double& v : p.b[g]) v = rng.uniform(-k, k);
    }
    if (p.kind == CellKind::Lstm)
        for (double& v : p.b[0]) v = 1.0;  // open forget gate at start
}

}  // namespace

EncoderModel init_encoder(CellKind kind, const std::vector<int>& dims, Rng& rng,
                          CandidateBias bias) {
    if (dims.empty()) fail("config", "encoder needs at least one layer");
    EncoderModel m;
    int prev = 2;
    for (int d : dims) {
        if (d < 1) fail("config", "layer width must be >= 1");
        CellParams p;
        p.kind = kind;
        p.d_in = prev;
        p.d_out = d;
        p.bias_variant = bias;
        init_cell(p, rng);
        m.layers.push_back(std::move(p));
        prev = d;
    }
    return m;
}

DecoderModel init_decoder(int channels, int num_layers, Rng& rng) {
    if (channels < 1 || num_layers < 1) fail("config", "bad decoder dims");
    DecoderModel m;
    for (int i = 0; i < num_layers; ++i) {
        CellParams p;
        p.kind = CellKind::Gru;
        p.d_in = channels;
        p.d_out = channels;
        init_cell(p, rng);
        m.layers.push_back(std::move(p));
    }
    const double k = 1.0 / std::sqrt(double(channels));
    m.head_out_w = Mat(2, channels);
    m.head_out_b.assign(2, 0.0);
    m.head_in_w = Mat(channels, 2);
    m.head_in_b.assign(channels, 0.0);
    for (double& v : m.head_out_w.a) v = rng.uniform(-k, k);
    for (double& v : m.head_out_b) v = rng.uniform(-k, k);
    for (double& v : m.head_in_w.a) v = rng.uniform(-k, k);
    for (double& v : m.head_in_b) v = rng.uniform(-k, k);
    return m;
}

// ---------------------------------------------------------------------------
// container io

namespace {

constexpr char kMagic[4] = {'S', 'S', 'E', 'R'};
constexpr std::uint8_t kVersion = 1;

void w_u8(std::ostream& o, std::uint8_t v) { o.put(char(v)); }
void w_u32(std::ostream& o, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = (v >> (8 * i)) & 0xff;
    o.write(reinterpret_cast<char*>(b), 4);
}
void w_f32(std::ostream& o, float v) {
    static_assert(sizeof(float) == 4);
    std::uint32_t u;
    std::memcpy(&u, &v, 4);
    w_u32(o, u);
}
std::uint8_t r_u8(std::istream& i) {
    int c = i.get();
    if (c < 0) fail("parse", "unexpected end of model file");
    return std::uint8_t(c);
}
std::uint32_t r_u32(std::istream& i) {
    unsigned char b[4];
    i.read(reinterpret_cast<char*>(b), 4);
    if (i.gcount() != 4) fail("parse", "unexpected end of model file");
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= std::uint32_t(b[k]) << (8 * k);
    return v;
}
float r_f32(std::istream& i) {
    std::uint32_t u = r_u32(i);
    float v;
    std::memcpy(&v, &u, 4);
    return v;
}

void write_tensor(std::ostream& o, const std::vector<double>& t) {
    for (double v : t) w_f32(o, float(v));
}
void read_tensor(std::istream& i, std::vector<double>& t) {
    for (double& v : t) v = double(r_f32(i));
}

void write_cell(std::ostream& o, const CellParams& p) {
    w_u8(o, std::uint8_t(p.kind));
    w_u8(o, std::uint8_t(p.bias_variant));
    w_u32(o, std::uint32_t(p.d_in));
    w_u32(o, std::uint32_t(p.d_out));
    for (int g = 0; g < p.gates(); ++g) {
        write_tensor(o, p.w[g].a);
        write_tensor(o, p.u[g].a);
        write_tensor(o, p.b[g]);
    }
}

CellParams read_cell(std::istream& i) {
    CellParams p;
    p.kind = CellKind(r_u8(i));
    if (int(p.kind) > 3) fail("parse", "bad cell kind in model file");
    p.bias_variant = CandidateBias(r_u8(i));
    p.d_in = int(r_u32(i));
    p.d_out = int(r_u32(i));
    if (p.d_in < 1 || p.d_out < 1 || p.d_in > 1 << 16 || p.d_out > 1 << 16)
        fail("parse", "bad cell dims in model file");
    p.init_shapes();
    for (int g = 0; g < p.gates(); ++g) {
        read_tensor(i, p.w[g].a);
        read_tensor(i, p.u[g].a);
        read_tensor(i, p.b[g]);
    }
    return p;
}

}  // namespace

void save_model(const std::string& path, const EncoderModel& enc, const DecoderModel* dec) {
    enc.validate();
    if (dec) dec->validate();
    std::ofstream o(path, std::ios::binary | std::ios::trunc);
    if (!o) fail("io", "cannot open " + path + " for writing");
    o.write(kMagic, 4);
    w_u8(o, kVersion);
    w_u8(o, 0);  // payload kind: float model
    w_u8(o, dec ? 1 : 0);
    w_u8(o, 0);
    w_u32(o, std::uint32_t(enc.layers.size()));
    for (const CellParams& l : enc.layers) write_cell(o, l);
    if (dec) {
        w_u32(o, std::uint32_t(dec->layers.size()));
        for (const CellParams& l : dec->layers) write_cell(o, l);
        write_tensor(o, dec->head_out_w.a);
        write_tensor(o, dec->head_out_b);
        write_tensor(o, dec->head_in_w.a);
        write_tensor(o, dec->head_in_b);
    }
    if (!o) fail("io", "write failed: " + path);
}

LoadedModel load_model(const std::string& path) {
    std::ifstream i(path, std::ios::binary);
    if (!i) fail("io", "cannot open " + path);
    char magic[4];
    i.read(magic, 4);
    if (i.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0)
        fail("parse", "not a model file: " + path);
    if (r_u8(i) != kVersion) fail("parse", "unsupported model file version");
    if (r_u8(i) != 0) fail("parse", "expected a float model, found a quantized payload");
    const bool has_dec = r_u8(i) != 0;
    r_u8(i);

    LoadedModel lm;
    const std::uint32_t n_enc = r_u32(i);
    if (n_enc == 0 || n_enc > 64) fail("parse", "bad encoder layer count");
    for (std::uint32_t k = 0; k < n_enc; ++k) lm.enc.layers.push_back(read_cell(i));
    lm.enc.validate();
    if (has_dec) {
        DecoderModel dec;
        const std::uint32_t n_dec = r_u32(i);
        if (n_dec == 0 || n_dec > 64) fail("parse", "bad decoder layer count");
        for (std::uint32_t k = 0; k < n_dec; ++k) dec.layers.push_back(read_cell(i));
        const int c = dec.layers.front().d_in;
        dec.head_out_w = Mat(2, c);
        dec.head_out_b.assign(2, 0.0);
        dec.head_in_w = Mat(c, 2);
        dec.head_in_b.assign(c, 0.0);
        read_tensor(i, dec.head_out_w.a);
        read_tensor(i, dec.head_out_b);
        read_tensor(i, dec.head_in_w.a);
        read_tensor(i, dec.head_in_b);
        dec.validate();
        lm.dec = std::move(dec);
    }
    return lm;
}

int model_file_kind(const std::string& path) {
    std::ifstream i(path, std::ios::binary);
    if (!i) fail("io", "cannot open " + path);
    char magic[4];
    i.read(magic, 4);
    if (i.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0)
        fail("parse", "not a model file: " + path);
    r_u8(i);  // version
    return int(r_u8(i));
}

}  // namespace sser

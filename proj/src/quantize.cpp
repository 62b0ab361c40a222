// SPDX-License-Identifier: Apache-2.0
#include "sser/quantize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "sser/detail/binio.hpp"

namespace sser {

namespace {

constexpr double kTimeSteps = 65535.0;  // 2^16 - 1

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// accumulator -> grid code; single multiply then round-half-away, so the
// result is a deterministic function of (acc, coef) on any IEEE-754 platform
inline std::int64_t requant(std::int64_t acc, double coef) {
    return iround(double(acc) * coef);
}

std::int64_t signed_qmax(int bits) { return (std::int64_t(1) << (bits - 1)) - 1; }

double maybe_pot(double scale, bool pot) {
    if (!pot || scale <= 0.0) return scale;
    return std::exp2(std::ceil(std::log2(scale)));
}

}  // namespace

void QuantScheme::validate() const {
    if (weight_bits < 2 || weight_bits > 12) fail("config", "weight bits must be in [2, 12]");
    if (act_bits < 2 || act_bits > 12) fail("config", "activation bits must be in [2, 12]");
    if (input_bits != 16) fail("config", "input width is fixed at 16 bits");
    if (lut_in_bits < 4 || lut_in_bits > 16) fail("config", "LUT input width must be in [4, 16]");
}

std::int32_t ActivationLUT::lookup(std::int64_t pre_code) const {
    const std::int64_t lo = in_min_code();
    const std::int64_t hi = in_max_code();
    const std::int64_t c = std::clamp(pre_code, lo, hi);
    return table[std::size_t(c - lo)];
}

ActivationLUT build_activation_lut(ActivationLUT::Fn fn, int in_bits, int out_bits,
                                   double in_scale, double out_scale) {
    if (in_bits < 2 || in_bits > 16 || out_bits < 2 || out_bits > 16)
        fail("config", "bad LUT bit widths");
    if (!(in_scale > 0.0) || !(out_scale > 0.0)) fail("config", "LUT scales must be > 0");

    ActivationLUT lut;
    lut.fn = fn;
    lut.in_bits = in_bits;
    lut.out_bits = out_bits;
    lut.in_scale = in_scale;
    lut.out_scale = out_scale;
    if (fn == ActivationLUT::Fn::Sigmoid) {
        lut.out_min = 0;
        lut.out_max = std::int32_t(iround(1.0 / out_scale));
    } else {
        lut.out_max = std::int32_t(iround(1.0 / out_scale));
        lut.out_min = -lut.out_max;
    }
    const std::int64_t lo = lut.in_min_code();
    const std::int64_t hi = lut.in_max_code();
    lut.table.resize(std::size_t(hi - lo + 1));
    for (std::int64_t c = lo; c <= hi; ++c) {
        const double x = double(c) * in_scale;
        const double y = fn == ActivationLUT::Fn::Sigmoid ? sigmoid(x) : std::tanh(x);
        const std::int64_t q = std::clamp<std::int64_t>(iround(y / out_scale), lut.out_min,
                                                        lut.out_max);
        lut.table[std::size_t(c - lo)] = std::int32_t(q);
    }
    return lut;
}

void QuantizedModel::validate() const {
    scheme.validate();
    if (layers.empty()) fail("validation", "quantized model has no layers");
    for (const QuantizedLayer& l : layers) {
        if (l.kind != CellKind::Gru && l.kind != CellKind::Mgu)
            fail("validation", "integer kernels cover GRU and MGU only");
        if (int(l.w.size()) != l.block_height() * l.d_in ||
            int(l.u.size()) != l.block_height() * l.d_out)
            fail("validation", "combined block shape mismatch");
        const std::int64_t wq = signed_qmax(scheme.weight_bits);
        for (std::int32_t v : l.w)
            if (v < -wq || v > wq) fail("validation", "weight code out of range");
        for (std::int32_t v : l.u)
            if (v < -wq || v > wq) fail("validation", "weight code out of range");
    }
}

std::int64_t quantize_timestamp(double t_norm) { return iround(t_norm * kTimeSteps); }

std::int32_t quantize_state_value(const QuantizedLayer& l, double v) {
    const std::int64_t qmax = iround(1.0 / l.state_scale);
    return std::int32_t(std::clamp<std::int64_t>(iround(v / l.state_scale), -qmax, qmax));
}

namespace {

struct LayerRanges {
    double sig = 0.0;   // gate pre-activations
    double tnh = 0.0;   // candidate pre-activation and inner term
};

void track(double& m, const Vec& v) {
    for (double x : v) m = std::max(m, std::fabs(x));
}

// Float walk over the calibration windows recording pre-activation ranges.
std::vector<LayerRanges> calibrate(const EncoderModel& m,
                                   const std::vector<TensorizedWindow>& calib) {
    std::vector<LayerRanges> r(m.layers.size());
    for (const TensorizedWindow& tw : calib) {
        for (int pix = 0; pix < tw.pixels(); ++pix) {
            const int n = tw.count(pix);
            if (n == 0) continue;
            std::vector<Vec> h(m.layers.size());
            for (std::size_t l = 0; l < m.layers.size(); ++l)
                h[l].assign(m.layers[l].d_out, 0.0);
            for (int s = 0; s < n; ++s) {
                Vec x = {tw.value(s, pix, 0), tw.value(s, pix, 1)};
                for (std::size_t l = 0; l < m.layers.size(); ++l) {
                    const CellParams& p = m.layers[l];
                    const int cand = p.gates() - 1;
                    const int d = p.d_out;
                    // sigmoid gates
                    std::vector<Vec> act(cand);
                    for (int g = 0; g < cand; ++g) {
                        Vec a = p.b[g];
                        mat_vec_add(p.w[g], x, a);
                        mat_vec_add(p.u[g], h[l], a);
                        track(r[l].sig, a);
                        act[g].resize(d);
                        for (int i = 0; i < d; ++i) act[g][i] = sigmoid(a[i]);
                    }
                    const Vec& mix = p.kind == CellKind::Gru ? act[1] : act[0];
                    Vec inner(d, 0.0);
                    mat_vec_add(p.u[cand], h[l], inner);
                    if (p.bias_variant == CandidateBias::Gated)
                        for (int i = 0; i < d; ++i) inner[i] += p.b[cand][i];
                    track(r[l].tnh, inner);
                    Vec arg(d, 0.0);
                    mat_vec_add(p.w[cand], x, arg);
                    for (int i = 0; i < d; ++i) arg[i] += mix[i] * inner[i];
                    if (p.bias_variant == CandidateBias::Plain)
                        for (int i = 0; i < d; ++i) arg[i] += p.b[cand][i];
                    track(r[l].tnh, arg);
                    for (int i = 0; i < d; ++i)
                        h[l][i] = (1.0 - act[0][i]) * h[l][i] + act[0][i] * std::tanh(arg[i]);
                    x = h[l];
                }
            }
        }
    }
    return r;
}

// Pack gate tensors into one combined block, candidate rows last.
std::vector<std::int32_t> pack_block(const std::vector<Mat>& gates, double scale,
                                     std::int64_t qmax) {
    const int d_out = gates[0].rows;
    const int d_in = gates[0].cols;
    std::vector<std::int32_t> out;
    out.reserve(gates.size() * std::size_t(d_out) * d_in);
    for (const Mat& g : gates)
        for (int rr = 0; rr < d_out; ++rr)
            for (int cc = 0; cc < d_in; ++cc) {
                const std::int64_t q =
                    std::clamp<std::int64_t>(iround(g(rr, cc) / scale), -qmax, qmax);
                out.push_back(std::int32_t(q));
            }
    return out;
}

double block_max_abs(const std::vector<Mat>& gates) {
    double m = 0.0;
    for (const Mat& g : gates) m = std::max(m, max_abs(g.a));
    return m;
}

}  // namespace

QuantizedModel quantize_model(const EncoderModel& m, const QuantScheme& scheme,
                              const std::vector<TensorizedWindow>& calib) {
    m.validate();
    scheme.validate();
    if (calib.empty()) fail("config", "calibration set is empty");
    for (const CellParams& l : m.layers)
        if (l.kind != CellKind::Gru && l.kind != CellKind::Mgu)
            fail("config", "integer kernels cover GRU and MGU only");

    const std::vector<LayerRanges> ranges = calibrate(m, calib);
    const std::int64_t wq = signed_qmax(scheme.weight_bits);
    const std::int64_t lutq = signed_qmax(scheme.lut_in_bits);

    QuantizedModel qm;
    qm.scheme = scheme;
    int max_fanin = 0;
    for (std::size_t li = 0; li < m.layers.size(); ++li) {
        const CellParams& p = m.layers[li];
        QuantizedLayer l;
        l.kind = p.kind;
        l.d_in = p.d_in;
        l.d_out = p.d_out;
        l.first_layer = li == 0;
        l.bias_variant = p.bias_variant;

        auto scale_of = [&](double maxabs, const char* what) {
            if (maxabs == 0.0) {
                qm.warnings.push_back("layer " + std::to_string(li) + " " + what +
                                      ": all-zero tensor, scale fallback 1");
                return 1.0;
            }
            return maybe_pot(maxabs / double(wq), scheme.power_of_two_scales);
        };
        l.w_scale = scale_of(block_max_abs(p.w), "input block");
        l.u_scale = scale_of(block_max_abs(p.u), "recurrent block");
        l.w = pack_block(p.w, l.w_scale, wq);
        l.u = pack_block(p.u, l.u_scale, wq);

        // margin absorbs mild excursions past the calibration set; the LUT
        // input grid is wide enough (default 12 bits) that the lost
        // resolution is immaterial next to the output quantum
        constexpr double kCalibMargin = 1.5;
        auto lut_scale_of = [&](double maxabs, const char* what) {
            if (maxabs == 0.0) {
                qm.warnings.push_back("layer " + std::to_string(li) + " " + what +
                                      ": calibration range collapsed, scale fallback 1");
                return 1.0;
            }
            return maybe_pot(kCalibMargin * maxabs / double(lutq), scheme.power_of_two_scales);
        };
        const double sig_in = lut_scale_of(ranges[li].sig, "sigmoid range");
        const double tnh_in = lut_scale_of(ranges[li].tnh, "tanh range");

        l.gate_scale = 1.0 / double((std::int64_t(1) << scheme.act_bits) - 1);
        l.state_scale = 1.0 / double(signed_qmax(scheme.act_bits));
        l.gate_one = (std::int64_t(1) << scheme.act_bits) - 1;
        l.sig = build_activation_lut(ActivationLUT::Fn::Sigmoid, scheme.lut_in_bits,
                                     scheme.act_bits, sig_in, l.gate_scale);
        l.tnh = build_activation_lut(ActivationLUT::Fn::Tanh, scheme.lut_in_bits,
                                     scheme.act_bits, tnh_in, l.state_scale);

        const int cand = p.gates() - 1;
        l.bias_gate.clear();
        for (int g = 0; g < cand; ++g)
            for (int i = 0; i < p.d_out; ++i)
                l.bias_gate.push_back(std::int32_t(iround(p.b[g][i] / sig_in)));
        l.bias_cand.clear();
        for (int i = 0; i < p.d_out; ++i)
            l.bias_cand.push_back(std::int32_t(iround(p.b[cand][i] / tnh_in)));

        max_fanin = std::max(max_fanin, l.d_in + l.d_out);
        qm.layers.push_back(std::move(l));
    }
    qm.accumulator_bits =
        scheme.input_bits + scheme.weight_bits + int(std::ceil(std::log2(double(max_fanin)))) + 1;
    if (qm.accumulator_bits > 62)
        fail("overflow", "accumulator width " + std::to_string(qm.accumulator_bits) +
                             " exceeds the 64-bit kernel budget");
    return qm;
}

namespace {

// Shared GRU/MGU integer step. Gate rows first, candidate rows last.
std::vector<std::int32_t> q_step_impl(const QuantizedLayer& l, const QuantInput& x,
                                      std::span<const std::int32_t> h) {
    if (int(x.codes.size()) != l.d_in || int(h.size()) != l.d_out)
        fail("validation", "quantized step dimension mismatch");
    const int d = l.d_out;
    const int n_sig = l.gates() - 1;  // 2 for GRU, 1 for MGU

    // requant coefficients; fixed expressions of the stored scales
    const double t_scale = 1.0 / kTimeSteps;
    const double cg_x_t = l.w_scale * t_scale / l.sig.in_scale;
    const double cg_x_p = l.w_scale / l.sig.in_scale;
    const double cg_x_s = l.w_scale * l.state_scale / l.sig.in_scale;
    const double cg_h = l.u_scale * l.state_scale / l.sig.in_scale;
    const double ct_x_t = l.w_scale * t_scale / l.tnh.in_scale;
    const double ct_x_p = l.w_scale / l.tnh.in_scale;
    const double ct_x_s = l.w_scale * l.state_scale / l.tnh.in_scale;
    const double ct_h = l.u_scale * l.state_scale / l.tnh.in_scale;

    // combined-block integer multiplies
    const int rows = l.block_height();
    std::vector<std::int64_t> acc_h(rows, 0);
    for (int r = 0; r < rows; ++r) {
        std::int64_t acc = 0;
        const std::int32_t* urow = l.u.data() + std::size_t(r) * l.d_out;
        for (int j = 0; j < l.d_out; ++j) acc += std::int64_t(urow[j]) * h[j];
        acc_h[r] = acc;
    }
    // input block: first layer splits by column scale (timestamp vs polarity)
    std::vector<std::int64_t> acc_x_t(rows, 0), acc_x_p(rows, 0), acc_x(rows, 0);
    for (int r = 0; r < rows; ++r) {
        const std::int32_t* wrow = l.w.data() + std::size_t(r) * l.d_in;
        if (l.first_layer) {
            acc_x_t[r] = std::int64_t(wrow[0]) * x.codes[0];
            acc_x_p[r] = std::int64_t(wrow[1]) * x.codes[1];
        } else {
            std::int64_t acc = 0;
            for (int j = 0; j < l.d_in; ++j) acc += std::int64_t(wrow[j]) * x.codes[j];
            acc_x[r] = acc;
        }
    }
    auto pre_x = [&](int r, bool tanh_grid) -> std::int64_t {
        if (l.first_layer)
            return tanh_grid ? requant(acc_x_t[r], ct_x_t) + requant(acc_x_p[r], ct_x_p)
                             : requant(acc_x_t[r], cg_x_t) + requant(acc_x_p[r], cg_x_p);
        return requant(acc_x[r], tanh_grid ? ct_x_s : cg_x_s);
    };

    // sigmoid gates
    std::vector<std::int64_t> gate(std::size_t(n_sig) * d);
    for (int g = 0; g < n_sig; ++g)
        for (int i = 0; i < d; ++i) {
            const int r = g * d + i;
            const std::int64_t pre =
                pre_x(r, false) + requant(acc_h[r], cg_h) + l.bias_gate[std::size_t(g) * d + i];
            gate[std::size_t(g) * d + i] = l.sig.lookup(pre);
        }
    const std::int64_t* combine = gate.data();                        // z or f
    const std::int64_t* mix = n_sig == 2 ? gate.data() + d : gate.data();  // r or f

    // candidate: tanh( Wx + mix (.) inner ), inner = Uh (+ bias under Gated)
    std::vector<std::int32_t> out(d);
    for (int i = 0; i < d; ++i) {
        const int r = n_sig * d + i;
        std::int64_t inner = requant(acc_h[r], ct_h);
        if (l.bias_variant == CandidateBias::Gated) inner += l.bias_cand[i];
        const std::int64_t gated = div_round_half_away(mix[i] * inner, l.gate_one);
        std::int64_t pre = pre_x(r, true) + gated;
        if (l.bias_variant == CandidateBias::Plain) pre += l.bias_cand[i];
        const std::int64_t cand = l.tnh.lookup(pre);
        // h' = (1 - z) h + z cand, all on the state grid
        const std::int64_t mixed =
            (l.gate_one - combine[i]) * std::int64_t(h[i]) + combine[i] * cand;
        out[i] = std::int32_t(div_round_half_away(mixed, l.gate_one));
    }
    return out;
}

}  // namespace

std::vector<std::int32_t> q_gru_step(const QuantizedLayer& l, const QuantInput& x,
                                     std::span<const std::int32_t> h) {
    if (l.kind != CellKind::Gru) fail("validation", "layer is not GRU");
    return q_step_impl(l, x, h);
}

std::vector<std::int32_t> q_mgu_step(const QuantizedLayer& l, const QuantInput& x,
                                     std::span<const std::int32_t> h) {
    if (l.kind != CellKind::Mgu) fail("validation", "layer is not MGU");
    return q_step_impl(l, x, h);
}

std::vector<std::int32_t> q_cell_step(const QuantizedLayer& l, const QuantInput& x,
                                      std::span<const std::int32_t> h) {
    return q_step_impl(l, x, h);
}

std::vector<std::int32_t> q_encode_window(const QuantizedModel& m, const TensorizedWindow& tw) {
    const int c = m.channels();
    std::vector<std::int32_t> e(std::size_t(tw.pixels()) * c, 0);
    for (int pix = 0; pix < tw.pixels(); ++pix) {
        const int n = tw.count(pix);
        if (n == 0) continue;
        std::vector<std::vector<std::int32_t>> h(m.layers.size());
        for (std::size_t l = 0; l < m.layers.size(); ++l)
            h[l].assign(m.layers[l].d_out, 0);
        for (int s = 0; s < n; ++s) {
            QuantInput x;
            x.codes = {quantize_timestamp(tw.value(s, pix, 0)),
                       std::int64_t(tw.value(s, pix, 1))};
            for (std::size_t l = 0; l < m.layers.size(); ++l) {
                h[l] = q_step_impl(m.layers[l], x, h[l]);
                x.codes.assign(h[l].begin(), h[l].end());
            }
        }
        for (int k = 0; k < c; ++k) e[std::size_t(pix) * c + k] = h.back()[k];
    }
    return e;
}

std::vector<double> dequantize_representation(const std::vector<std::int32_t>& codes,
                                              double scale) {
    std::vector<double> out(codes.size());
    for (std::size_t i = 0; i < codes.size(); ++i) out[i] = double(codes[i]) * scale;
    return out;
}

double eval_loss_quantized(const QuantizedModel& qm, const DecoderModel& dec,
                           const TensorizedWindow& tw, const LossConfig& cfg) {
    const int c = qm.channels();
    const std::vector<std::int32_t> e = q_encode_window(qm, tw);
    const double scale = qm.layers.back().state_scale;
    DecodedTensor out(tw.z, tw.pixels());
    for (int pix = 0; pix < tw.pixels(); ++pix) {
        if (tw.count(pix) == 0) continue;
        Vec row(c);
        for (int k = 0; k < c; ++k) row[k] = double(e[std::size_t(pix) * c + k]) * scale;
        const auto d = decode(dec, row, tw.z);
        for (int s = 0; s < tw.z; ++s) {
            out.at(s, pix, 0) = d[s][0];
            out.at(s, pix, 1) = d[s][1];
        }
    }
    return masked_mse_loss(tw, out, cfg);
}

double eval_loss_quantized(const QuantizedModel& qm, const DecoderModel& dec,
                           const std::vector<TensorizedWindow>& windows, const LossConfig& cfg) {
    double sum = 0.0;
    for (const TensorizedWindow& tw : windows) sum += eval_loss_quantized(qm, dec, tw, cfg);
    return sum / double(windows.size());
}

// ---------------------------------------------------------------------------
// container io

namespace {
constexpr char kMagic[4] = {'S', 'S', 'E', 'R'};
constexpr std::uint8_t kVersion = 1;

void write_lut(std::ostream& o, const ActivationLUT& l) {
    using namespace binio;
    w_u8(o, std::uint8_t(l.fn));
    w_u8(o, std::uint8_t(l.in_bits));
    w_u8(o, std::uint8_t(l.out_bits));
    w_f64(o, l.in_scale);
    w_f64(o, l.out_scale);
    w_i32(o, l.out_min);
    w_i32(o, l.out_max);
    for (std::int32_t v : l.table) w_i32(o, v);
}

ActivationLUT read_lut(std::istream& i) {
    using namespace binio;
    ActivationLUT l;
    l.fn = ActivationLUT::Fn(r_u8(i));
    l.in_bits = r_u8(i);
    l.out_bits = r_u8(i);
    l.in_scale = r_f64(i);
    l.out_scale = r_f64(i);
    l.out_min = r_i32(i);
    l.out_max = r_i32(i);
    if (l.in_bits < 2 || l.in_bits > 16) fail("parse", "bad LUT width");
    l.table.resize(std::size_t(1) << l.in_bits);
    for (std::int32_t& v : l.table) v = r_i32(i);
    return l;
}
}  // namespace

void save_quantized_model(const std::string& path, const QuantizedModel& m) {
    m.validate();
    using namespace binio;
    std::ofstream o(path, std::ios::binary | std::ios::trunc);
    if (!o) fail("io", "cannot open " + path + " for writing");
    o.write(kMagic, 4);
    w_u8(o, kVersion);
    w_u8(o, 1);  // payload kind: quantized model
    w_u8(o, std::uint8_t(m.scheme.weight_bits));
    w_u8(o, std::uint8_t(m.scheme.act_bits));
    w_u8(o, std::uint8_t(m.scheme.input_bits));
    w_u8(o, std::uint8_t(m.scheme.lut_in_bits));
    w_u8(o, std::uint8_t(m.scheme.rounding));
    w_u8(o, m.scheme.power_of_two_scales ? 1 : 0);
    w_u8(o, std::uint8_t(m.accumulator_bits));
    w_u32(o, std::uint32_t(m.layers.size()));
    for (const QuantizedLayer& l : m.layers) {
        w_u8(o, std::uint8_t(l.kind));
        w_u8(o, std::uint8_t(l.bias_variant));
        w_u8(o, l.first_layer ? 1 : 0);
        w_u32(o, std::uint32_t(l.d_in));
        w_u32(o, std::uint32_t(l.d_out));
        w_f64(o, l.w_scale);
        w_f64(o, l.u_scale);
        w_f64(o, l.state_scale);
        w_f64(o, l.gate_scale);
        w_u64(o, std::uint64_t(l.gate_one));
        for (std::int32_t v : l.w) w_i32(o, v);
        for (std::int32_t v : l.u) w_i32(o, v);
        for (std::int32_t v : l.bias_gate) w_i32(o, v);
        for (std::int32_t v : l.bias_cand) w_i32(o, v);
        write_lut(o, l.sig);
        write_lut(o, l.tnh);
    }
    w_u32(o, std::uint32_t(m.warnings.size()));
    for (const std::string& s : m.warnings) {
        w_u32(o, std::uint32_t(s.size()));
        o.write(s.data(), std::streamsize(s.size()));
    }
    if (!o) fail("io", "write failed: " + path);
}

QuantizedModel load_quantized_model(const std::string& path) {
    using namespace binio;
    std::ifstream i(path, std::ios::binary);
    if (!i) fail("io", "cannot open " + path);
    char magic[4];
    i.read(magic, 4);
    if (i.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0)
        fail("parse", "not a model file: " + path);
    if (r_u8(i) != kVersion) fail("parse", "unsupported model file version");
    if (r_u8(i) != 1) fail("parse", "expected a quantized model payload");

    QuantizedModel m;
    m.scheme.weight_bits = r_u8(i);
    m.scheme.act_bits = r_u8(i);
    m.scheme.input_bits = r_u8(i);
    m.scheme.lut_in_bits = r_u8(i);
    m.scheme.rounding = RoundingMode(r_u8(i));
    m.scheme.power_of_two_scales = r_u8(i) != 0;
    m.accumulator_bits = r_u8(i);
    const std::uint32_t n = r_u32(i);
    if (n == 0 || n > 64) fail("parse", "bad layer count");
    for (std::uint32_t k = 0; k < n; ++k) {
        QuantizedLayer l;
        l.kind = CellKind(r_u8(i));
        l.bias_variant = CandidateBias(r_u8(i));
        l.first_layer = r_u8(i) != 0;
        l.d_in = int(r_u32(i));
        l.d_out = int(r_u32(i));
        if (l.d_in < 1 || l.d_out < 1 || l.d_in > 1 << 16 || l.d_out > 1 << 16)
            fail("parse", "bad layer dims");
        l.w_scale = r_f64(i);
        l.u_scale = r_f64(i);
        l.state_scale = r_f64(i);
        l.gate_scale = r_f64(i);
        l.gate_one = std::int64_t(r_u64(i));
        l.w.resize(std::size_t(l.block_height()) * l.d_in);
        for (std::int32_t& v : l.w) v = r_i32(i);
        l.u.resize(std::size_t(l.block_height()) * l.d_out);
        for (std::int32_t& v : l.u) v = r_i32(i);
        l.bias_gate.resize(std::size_t(l.gates() - 1) * l.d_out);
        for (std::int32_t& v : l.bias_gate) v = r_i32(i);
        l.bias_cand.resize(std::size_t(l.d_out));
        for (std::int32_t& v : l.bias_cand) v = r_i32(i);
        l.sig = read_lut(i);
        l.tnh = read_lut(i);
        m.layers.push_back(std::move(l));
    }
    const std::uint32_t nw = r_u32(i);
    for (std::uint32_t k = 0; k < nw && k < 1024; ++k) {
        const std::uint32_t len = r_u32(i);
        std::string s(len, '\0');
        i.read(s.data(), std::streamsize(len));
        if (i.gcount() != std::streamsize(len)) fail("parse", "truncated warning record");
        m.warnings.push_back(std::move(s));
    }
    m.validate();
    return m;
}

}  // namespace sser

// SPDX-License-Identifier: Apache-2.0
#include "sser/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <optional>

#include "sser/quantize.hpp"

namespace sser {

void TrainConfig::validate(const EventSequence& dataset) const {
    if (dataset.events.empty()) fail("config", "dataset yields no events");
    if (epochs < 1 || samples_per_epoch < 1) fail("config", "epochs and samples must be >= 1");
    if (lr < 0 || weight_decay < 0) fail("config", "negative learning rate or weight decay");
    if (window_us == 0) fail("config", "window length must be > 0");
    if (crop < 1 || crop > dataset.width || crop > dataset.height)
        fail("config", "crop must fit the sensor");
    if (z_cap < 1) fail("config", "z_cap must be >= 1");
    if (decoder_layers < 1) fail("config", "decoder needs at least one layer");
    if (loss.alpha < 0 || loss.beta < 0 || loss.alpha + loss.beta <= 0)
        fail("config", "loss weights must be non-negative and not both zero");
    if (quant.weight_bits != 0 && (quant.weight_bits < 2 || quant.weight_bits > 12))
        fail("config", "weight bits must be in [2, 12]");
    if (quant.act_bits != 0 && (quant.act_bits < 2 || quant.act_bits > 12))
        fail("config", "activation bits must be in [2, 12]");
}

double masked_mse_loss(const TensorizedWindow& ref, const DecodedTensor& dec,
                       const LossConfig& cfg) {
    if (dec.z != ref.z || dec.wh != ref.pixels())
        fail("validation", "loss shape mismatch");
    double lt = 0.0, lp = 0.0;
    for (int s = 0; s < ref.z; ++s) {
        for (int pix = 0; pix < ref.pixels(); ++pix) {
            if (!ref.masked(s, pix)) continue;
            const double dt = ref.value(s, pix, 0) - dec.at(s, pix, 0);
            const double dp = ref.value(s, pix, 1) - dec.at(s, pix, 1);
            lt += dt * dt;
            lp += dp * dp;
        }
    }
    const double denom = double(ref.z) * double(ref.pixels());
    return cfg.alpha / denom * lt + cfg.beta / denom * lp;
}

namespace {

constexpr double kInputSteps = 65535.0;  // 16-bit timestamp grid

inline double fq_time(double t, bool active) {
    if (!active) return t;
    return double(iround(t * kInputSteps)) / kInputSteps;
}

}  // namespace

DecodedTensor decode_window(const EncoderModel& enc, const DecoderModel& dec,
                            const TensorizedWindow& tw, const QatQuantizers* qat) {
    const bool fq_in = qat && qat->active();
    DecodedTensor out(tw.z, tw.pixels());
    const std::vector<StateVec> init = initial_states(enc);
    for (int pix = 0; pix < tw.pixels(); ++pix) {
        const int n = tw.count(pix);
        if (n == 0) continue;
        std::vector<StateVec> states = init;
        for (int s = 0; s < n; ++s) {
            Vec x = {fq_time(tw.value(s, pix, 0), fq_in), tw.value(s, pix, 1)};
            for (std::size_t l = 0; l < enc.layers.size(); ++l) {
                states[l] = cell_forward(enc.layers[l], x, states[l], qat);
                x = states[l].h;
            }
        }
        const auto d = decode(dec, states.back().h, tw.z);
        for (int s = 0; s < tw.z; ++s) {
            out.at(s, pix, 0) = d[s][0];
            out.at(s, pix, 1) = d[s][1];
        }
    }
    return out;
}

void GradientSet::init_like(const EncoderModel& enc, const DecoderModel& dec) {
    encoder.resize(enc.layers.size());
    for (std::size_t l = 0; l < enc.layers.size(); ++l) encoder[l].init_like(enc.layers[l]);
    decoder.resize(dec.layers.size());
    for (std::size_t l = 0; l < dec.layers.size(); ++l) decoder[l].init_like(dec.layers[l]);
    const int c = dec.channels();
    d_head_out_w = Mat(2, c);
    d_head_out_b.assign(2, 0.0);
    d_head_in_w = Mat(c, 2);
    d_head_in_b.assign(c, 0.0);
}

namespace {

// Reverse one step through a layer stack. `down` enters as the gradient on the
// top layer's output from the consumer side and leaves as the gradient on the
// stack input. dh_next/dc_next carry the recurrent gradients across steps.
void stack_backward_step(const std::vector<CellParams>& layers,
                         const std::vector<std::vector<CellCache>>& caches, int step,
                         const QatQuantizers* qat, std::vector<CellGrads>& grads,
                         std::vector<Vec>& dh_next, std::vector<Vec>& dc_next, Vec& down) {
    thread_local Vec dx, dh_in, dc_in, dh_out;
    for (int l = int(layers.size()) - 1; l >= 0; --l) {
        dh_out = dh_next[l];
        vec_add(dh_out, down);
        cell_backward(layers[l], caches[l][step], dh_out, dc_next[l], qat, grads[l], dx, dh_in,
                      dc_in);
        dh_next[l].swap(dh_in);
        dc_next[l].swap(dc_in);
        down.swap(dx);
    }
}



}  // namespace

BackwardResult backward(const EncoderModel& enc, const DecoderModel& dec,
                        const TensorizedWindow& tw, const LossConfig& cfg,
                        const QatQuantizers* qat) {
    const int z = tw.z;
    const int wh = tw.pixels();
    const int c = enc.channels();
    const double denom = double(z) * double(wh);
    const bool fq_in = qat && qat->active();
    const std::size_t n_enc = enc.layers.size();
    const std::size_t n_dec = dec.layers.size();

    BackwardResult res;
    res.grads.init_like(enc, dec);
    double lt = 0.0, lp = 0.0;

    const std::vector<StateVec> enc_init = initial_states(enc);

    // per-pixel work buffers, reused across the whole batch
    std::vector<std::vector<CellCache>> ec(n_enc);
    std::vector<std::vector<CellCache>> dc(n_dec);
    std::vector<StateVec> states;
    std::vector<StateVec> dstates(n_dec);
    std::vector<std::array<double, 2>> d_vals;
    std::vector<Vec> stack_out;
    std::vector<Vec> dh_next, dc_next, eh_next, ecc_next;
    Vec x, input, di_next, d_e_row, down;

    for (int pix = 0; pix < wh; ++pix) {
        const int n = tw.count(pix);
        if (n == 0) continue;  // excluded from the batch axis

        // --- encoder forward
        for (auto& lc : ec) lc.resize(n);
        states = enc_init;
        for (int s = 0; s < n; ++s) {
            x = {fq_time(tw.value(s, pix, 0), fq_in), tw.value(s, pix, 1)};
            for (std::size_t l = 0; l < n_enc; ++l) {
                cell_forward_into(enc.layers[l], x, states[l], qat, &ec[l][s], states[l]);
                x = states[l].h;
            }
        }

        // --- decoder forward (n rolling steps; padded slots carry no loss)
        for (auto& lc : dc) lc.resize(n);
        for (std::size_t l = 0; l < n_dec; ++l) {
            dstates[l].h.assign(dec.layers[l].d_out, 0.0);
            dstates[l].c.clear();
        }
        d_vals.resize(n);
        stack_out.resize(n);
        input = states.back().h;
        for (int s = 0; s < n; ++s) {
            x = input;
            for (std::size_t l = 0; l < n_dec; ++l) {
                cell_forward_into(dec.layers[l], x, dstates[l], nullptr, &dc[l][s], dstates[l]);
                x = dstates[l].h;
            }
            stack_out[s] = x;
            std::array<double, 2> d{dec.head_out_b[0], dec.head_out_b[1]};
            for (int k = 0; k < c; ++k) {
                d[0] += dec.head_out_w(0, k) * x[k];
                d[1] += dec.head_out_w(1, k) * x[k];
            }
            d_vals[s] = d;
            const double dt = tw.value(s, pix, 0) - d[0];
            const double dp = tw.value(s, pix, 1) - d[1];
            lt += dt * dt;
            lp += dp * dp;
            if (s + 1 < n) {
                input.assign(c, 0.0);
                for (int k = 0; k < c; ++k)
                    input[k] = dec.head_in_b[k] + dec.head_in_w(k, 0) * d[0] +
                               dec.head_in_w(k, 1) * d[1];
            }
        }
        if (!std::isfinite(lt) || !std::isfinite(lp))
            fail("training", "non-finite loss at pixel " + std::to_string(pix));

        // --- decoder backward
        dh_next.resize(n_dec);
        dc_next.resize(n_dec);
        for (std::size_t l = 0; l < n_dec; ++l) {
            dh_next[l].assign(dec.layers[l].d_out, 0.0);
            dc_next[l].clear();
        }
        di_next.clear();  // gradient w.r.t. the input of step s+1
        for (int s = n - 1; s >= 0; --s) {
            std::array<double, 2> dd{
                2.0 * cfg.alpha / denom * (d_vals[s][0] - tw.value(s, pix, 0)),
                2.0 * cfg.beta / denom * (d_vals[s][1] - tw.value(s, pix, 1))};
            if (!di_next.empty()) {
                // head_in consumed d_vals[s] to build step s+1's input
                for (int k = 0; k < c; ++k) {
                    res.grads.d_head_in_w(k, 0) += di_next[k] * d_vals[s][0];
                    res.grads.d_head_in_w(k, 1) += di_next[k] * d_vals[s][1];
                    res.grads.d_head_in_b[k] += di_next[k];
                    dd[0] += dec.head_in_w(k, 0) * di_next[k];
                    dd[1] += dec.head_in_w(k, 1) * di_next[k];
                }
            }
            down.assign(c, 0.0);
            for (int k = 0; k < c; ++k) {
                res.grads.d_head_out_w(0, k) += dd[0] * stack_out[s][k];
                res.grads.d_head_out_w(1, k) += dd[1] * stack_out[s][k];
                down[k] = dec.head_out_w(0, k) * dd[0] + dec.head_out_w(1, k) * dd[1];
            }
            res.grads.d_head_out_b[0] += dd[0];
            res.grads.d_head_out_b[1] += dd[1];

            stack_backward_step(dec.layers, dc, s, nullptr, res.grads.decoder, dh_next, dc_next,
                                down);
            if (s == 0)
                d_e_row = down;
            else
                di_next = down;
        }

        // --- encoder backward; only the final top-layer state feeds the loss
        eh_next.resize(n_enc);
        ecc_next.resize(n_enc);
        for (std::size_t l = 0; l < n_enc; ++l) {
            eh_next[l].assign(enc.layers[l].d_out, 0.0);
            ecc_next[l].clear();
        }
        eh_next.back() = d_e_row;
        for (int s = n - 1; s >= 0; --s) {
            down.assign(enc.layers.back().d_out, 0.0);
            stack_backward_step(enc.layers, ec, s, qat, res.grads.encoder, eh_next, ecc_next,
                                down);
        }
    }

    res.loss = cfg.alpha / denom * lt + cfg.beta / denom * lp;
    return res;
}

double fake_quant(double v, int bits, double scale) {
    if (bits < 2) fail("config", "fake_quant needs bits >= 2");
    if (!(scale > 0.0)) fail("config", "fake_quant needs scale > 0");
    const std::int64_t lo = -(std::int64_t(1) << (bits - 1));
    const std::int64_t hi = (std::int64_t(1) << (bits - 1)) - 1;
    const std::int64_t q = std::clamp(iround(v / scale), lo, hi);
    return double(q) * scale;
}

namespace {

void fq_tensor(std::vector<double>& t, int bits) {
    const double m = max_abs(t);
    if (m == 0.0) return;
    const double scale = m / double((std::int64_t(1) << (bits - 1)) - 1);
    for (double& v : t) v = fake_quant(v, bits, scale);
}

}  // namespace

EncoderModel fake_quant_weights(const EncoderModel& m, int bits) {
    EncoderModel out = m;
    for (CellParams& l : out.layers)
        for (int g = 0; g < l.gates(); ++g) {
            fq_tensor(l.w[g].a, bits);
            fq_tensor(l.u[g].a, bits);
            // biases stay full precision; they enter at accumulator width
        }
    return out;
}

namespace {

template <typename F>
void visit_params(EncoderModel& enc, DecoderModel& dec, const GradientSet& g, F&& f) {
    for (std::size_t l = 0; l < enc.layers.size(); ++l)
        for (int k = 0; k < enc.layers[l].gates(); ++k) {
            f(enc.layers[l].w[k].a, g.encoder[l].w[k].a);
            f(enc.layers[l].u[k].a, g.encoder[l].u[k].a);
            f(enc.layers[l].b[k], g.encoder[l].b[k]);
        }
    for (std::size_t l = 0; l < dec.layers.size(); ++l)
        for (int k = 0; k < dec.layers[l].gates(); ++k) {
            f(dec.layers[l].w[k].a, g.decoder[l].w[k].a);
            f(dec.layers[l].u[k].a, g.decoder[l].u[k].a);
            f(dec.layers[l].b[k], g.decoder[l].b[k]);
        }
    f(dec.head_out_w.a, g.d_head_out_w.a);
    f(dec.head_out_b, g.d_head_out_b);
    f(dec.head_in_w.a, g.d_head_in_w.a);
    f(dec.head_in_b, g.d_head_in_b);
}

}  // namespace

void adam_step(EncoderModel& enc, DecoderModel& dec, const GradientSet& g, AdamState& st,
               double lr, double weight_decay) {
    st.t += 1;
    const double bc1 = 1.0 - std::pow(st.beta1, double(st.t));
    const double bc2 = 1.0 - std::pow(st.beta2, double(st.t));

    std::size_t idx = 0;
    visit_params(enc, dec, g, [&](std::vector<double>& p, const std::vector<double>& gr) {
        if (idx >= st.m.size()) {
            st.m.emplace_back(p.size(), 0.0);
            st.v.emplace_back(p.size(), 0.0);
        }
        Vec& m = st.m[idx];
        Vec& v = st.v[idx];
        if (m.size() != p.size()) fail("validation", "optimizer state shape mismatch");
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = st.beta1 * m[i] + (1.0 - st.beta1) * gr[i];
            v[i] = st.beta2 * v[i] + (1.0 - st.beta2) * gr[i] * gr[i];
            const double mh = m[i] / bc1;
            const double vh = v[i] / bc2;
            p[i] -= lr * (mh / (std::sqrt(vh) + st.eps) + weight_decay * p[i]);
        }
        ++idx;
    });
}

namespace {

std::optional<TensorizedWindow> sample_window(const EventSequence& dataset,
                                              const TrainConfig& cfg, Rng& rng) {
    const std::uint64_t t_min = dataset.events.front().t;
    const std::uint64_t t_max = dataset.events.back().t;
    const std::uint64_t span = t_max - t_min;
    std::uint64_t t0 = t_min;
    if (span > cfg.window_us)
        t0 = t_min + std::uint64_t(rng.uniform_int(0, std::int64_t(span - cfg.window_us)));
    const int cw = std::min<int>(cfg.crop, dataset.width);
    const int ch = std::min<int>(cfg.crop, dataset.height);
    const int x0 = int(rng.uniform_int(0, dataset.width - cw));
    const int y0 = int(rng.uniform_int(0, dataset.height - ch));
    EventSequence win = slice_window(dataset, t0, cfg.window_us);
    EventSequence cr = crop_events(win, x0, y0, cw, ch);
    if (cr.events.empty()) return std::nullopt;
    const std::vector<double> tn = normalize_timestamps(cr, t0, cfg.window_us);
    return tensorize(cr, tn, cfg.z_cap);
}

std::optional<TensorizedWindow> sample_window_retry(const EventSequence& dataset,
                                                    const TrainConfig& cfg, Rng& rng,
                                                    int tries = 20) {
    for (int i = 0; i < tries; ++i) {
        auto tw = sample_window(dataset, cfg, rng);
        if (tw) return tw;
    }
    return std::nullopt;
}

}  // namespace

TrainResult train_encoder(const EventSequence& dataset, CellKind kind,
                          const std::vector<int>& dims, const TrainConfig& cfg) {
    cfg.validate(dataset);

    Rng rng_init = Rng(cfg.seed).fork(0xA11CE);
    Rng rng_data = Rng(cfg.effective_data_seed()).fork(0xDA7A);

    TrainResult out;
    out.enc = init_encoder(kind, dims, rng_init);
    out.dec = init_decoder(dims.back(), cfg.decoder_layers, rng_init);

    QatQuantizers qatq;
    const QatQuantizers* qat = nullptr;
    if (cfg.quant.act_bits > 0) {
        qatq.act_bits = cfg.quant.act_bits;
        qatq.cell_max = 4.0;  // generous fixed bound; only LSTM uses it
        qat = &qatq;
    }

    // One epoch is a pass over a fixed pool of randomly drawn windows; the
    // pool is sampled once from the seed so runs are reproducible and a zero
    // learning rate yields an exactly flat loss curve.
    std::vector<TensorizedWindow> pool;
    for (int s = 0; s < cfg.samples_per_epoch; ++s) {
        auto tw = sample_window_retry(dataset, cfg, rng_data);
        if (tw) pool.push_back(std::move(*tw));
    }
    if (pool.empty()) fail("config", "dataset produced no usable training windows");

    AdamState st;
    out.epoch_loss.reserve(cfg.epochs);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double sum = 0.0;
        for (const TensorizedWindow& tw : pool) {
            EncoderModel encq;
            const EncoderModel* fwd = &out.enc;
            if (cfg.quant.weight_bits > 0) {
                encq = fake_quant_weights(out.enc, cfg.quant.weight_bits);
                fwd = &encq;
            }
            BackwardResult r = backward(*fwd, out.dec, tw, cfg.loss, qat);
            adam_step(out.enc, out.dec, r.grads, st, cfg.lr, cfg.weight_decay);
            sum += r.loss;
        }
        out.epoch_loss.push_back(sum / double(pool.size()));
    }
    return out;
}

std::vector<TensorizedWindow> make_eval_windows(const EventSequence& dataset,
                                                const TrainConfig& cfg, int count,
                                                std::uint64_t salt) {
    Rng rng = Rng(cfg.effective_data_seed()).fork(salt);
    std::vector<TensorizedWindow> out;
    int attempts = 0;
    while (int(out.size()) < count && attempts < count * 20) {
        ++attempts;
        auto tw = sample_window(dataset, cfg, rng);
        if (tw) out.push_back(std::move(*tw));
    }
    if (out.empty()) fail("config", "dataset produced no usable evaluation windows");
    return out;
}

double eval_loss(const EncoderModel& enc, const DecoderModel& dec,
                 const std::vector<TensorizedWindow>& windows, const LossConfig& cfg) {
    double sum = 0.0;
    for (const TensorizedWindow& tw : windows)
        sum += masked_mse_loss(tw, decode_window(enc, dec, tw), cfg);
    return sum / double(windows.size());
}

std::vector<SweepRow> ablation_sweep(SweepAxis axis, const std::vector<int>& values,
                                     const EventSequence& dataset, CellKind kind,
                                     const TrainConfig& base, int eval_windows) {
    if (values.empty()) fail("config", "sweep needs at least one value");
    const std::vector<TensorizedWindow> held_out =
        make_eval_windows(dataset, base, eval_windows, 0xE7A1);
    const std::vector<TensorizedWindow> calib =
        make_eval_windows(dataset, base, std::max(4, eval_windows / 2), 0xCA11B);

    std::vector<SweepRow> rows;
    for (int v : values) {
        SweepRow row;
        row.value = v;
        if (axis == SweepAxis::OutputSize) {
            TrainResult r = train_encoder(dataset, kind, {v, v, v}, base);
            row.final_loss = eval_loss(r.enc, r.dec, held_out, base.loss);
        } else {
            TrainConfig c = base;
            c.quant.weight_bits = v;
            c.quant.act_bits = v;
            TrainResult r = train_encoder(dataset, kind, {8, 8, 8}, c);
            QuantScheme scheme;
            scheme.weight_bits = v;
            scheme.act_bits = v;
            QuantizedModel qm = quantize_model(r.enc, scheme, calib);
            row.final_loss = eval_loss_quantized(qm, r.dec, held_out, base.loss);
        }
        rows.push_back(row);
    }
    return rows;
}

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows,
                     SweepAxis axis) {
    std::ofstream o(path, std::ios::trunc);
    if (!o) fail("io", "cannot open " + path + " for writing");
    o << (axis == SweepAxis::OutputSize ? "output_size" : "bits") << ",final_loss\n";
    for (const SweepRow& r : rows) o << r.value << ',' << r.final_loss << '\n';
}

void write_loss_csv(const std::string& path, const std::vector<double>& epoch_loss) {
    std::ofstream o(path, std::ios::trunc);
    if (!o) fail("io", "cannot open " + path + " for writing");
    o << "epoch,loss\n";
    for (std::size_t i = 0; i < epoch_loss.size(); ++i) o << i << ',' << epoch_loss[i] << '\n';
}

void save_adam_state(const std::string& path, const AdamState& st) {
    std::ofstream o(path, std::ios::binary | std::ios::trunc);
    if (!o) fail("io", "cannot open " + path + " for writing");
    o.write("SSEO", 4);
    auto w64 = [&](std::uint64_t v) {
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = (v >> (8 * i)) & 0xff;
        o.write(reinterpret_cast<char*>(b), 8);
    };
    auto wf64 = [&](double d) {
        std::uint64_t u;
        std::memcpy(&u, &d, 8);
        w64(u);
    };
    w64(std::uint64_t(st.t));
    wf64(st.beta1);
    wf64(st.beta2);
    wf64(st.eps);
    w64(st.m.size());
    for (std::size_t i = 0; i < st.m.size(); ++i) {
        w64(st.m[i].size());
        for (double d : st.m[i]) wf64(d);
        for (double d : st.v[i]) wf64(d);
    }
    if (!o) fail("io", "write failed: " + path);
}

AdamState load_adam_state(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("io", "cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, "SSEO", 4) != 0)
        fail("parse", "not an optimizer state file: " + path);
    auto r64 = [&]() -> std::uint64_t {
        unsigned char b[8];
        in.read(reinterpret_cast<char*>(b), 8);
        if (in.gcount() != 8) fail("parse", "truncated optimizer state");
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
        return v;
    };
    auto rf64 = [&]() {
        std::uint64_t u = r64();
        double d;
        std::memcpy(&d, &u, 8);
        return d;
    };
    AdamState st;
    st.t = std::int64_t(r64());
    st.beta1 = rf64();
    st.beta2 = rf64();
    st.eps = rf64();
    const std::uint64_t n = r64();
    st.m.resize(n);
    st.v.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        const std::uint64_t len = r64();
        st.m[i].resize(len);
        st.v[i].resize(len);
        for (double& d : st.m[i]) d = rf64();
        for (double& d : st.v[i]) d = rf64();
    }
    return st;
}

}  // namespace sser

// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "sser/train.hpp"
#include "test_helpers.hpp"

using namespace sser;

namespace {

// enumerate every parameter of both models as mutable spans
void visit_all(EncoderModel& enc, DecoderModel& dec,
               const std::function<void(std::vector<double>&)>& f) {
    for (auto& l : enc.layers)
        for (int g = 0; g < l.gates(); ++g) {
            f(l.w[g].a);
            f(l.u[g].a);
            f(l.b[g]);
        }
    for (auto& l : dec.layers)
        for (int g = 0; g < l.gates(); ++g) {
            f(l.w[g].a);
            f(l.u[g].a);
            f(l.b[g]);
        }
    f(dec.head_out_w.a);
    f(dec.head_out_b);
    f(dec.head_in_w.a);
    f(dec.head_in_b);
}

void visit_grads(const GradientSet& g, const std::function<void(const std::vector<double>&)>& f) {
    for (const auto& l : g.encoder)
        for (std::size_t k = 0; k < l.w.size(); ++k) {
            f(l.w[k].a);
            f(l.u[k].a);
            f(l.b[k]);
        }
    for (const auto& l : g.decoder)
        for (std::size_t k = 0; k < l.w.size(); ++k) {
            f(l.w[k].a);
            f(l.u[k].a);
            f(l.b[k]);
        }
    f(g.d_head_out_w.a);
    f(g.d_head_out_b);
    f(g.d_head_in_w.a);
    f(g.d_head_in_b);
}

// central finite differences against the analytic gradients; returns the
// worst relative error |a - n| / (|n| + 1e-8)
double fd_worst_rel_error(EncoderModel enc, DecoderModel dec, const TensorizedWindow& tw,
                          const LossConfig& cfg, double eps = 1e-4) {
    const BackwardResult res = backward(enc, dec, tw, cfg);

    std::vector<const std::vector<double>*> grad_tensors;
    visit_grads(res.grads, [&](const std::vector<double>& t) { grad_tensors.push_back(&t); });

    double worst = 0.0;
    std::size_t ti = 0;
    visit_all(enc, dec, [&](std::vector<double>& tensor) {
        const std::vector<double>& g = *grad_tensors[ti++];
        for (std::size_t i = 0; i < tensor.size(); ++i) {
            const double keep = tensor[i];
            tensor[i] = keep + eps;
            const double up = masked_mse_loss(tw, decode_window(enc, dec, tw), cfg);
            tensor[i] = keep - eps;
            const double dn = masked_mse_loss(tw, decode_window(enc, dec, tw), cfg);
            tensor[i] = keep;
            const double numeric = (up - dn) / (2.0 * eps);
            const double rel = std::fabs(g[i] - numeric) / (std::fabs(numeric) + 1e-8);
            worst = std::max(worst, rel);
        }
    });
    return worst;
}

TensorizedWindow gradcheck_window(Rng& rng) {
    // 2x2 window, counts <= 4 with at least one active pixel
    for (;;) {
        const TensorizedWindow tw = test::random_window(rng, 2, 2, 4);
        for (int pix = 0; pix < tw.pixels(); ++pix)
            if (tw.count(pix) > 0) return tw;
    }
}

}  // namespace

TEST_CASE("masked loss worked example") {
    std::vector<std::vector<std::array<double, 2>>> px(1);
    px[0] = {{1.0, 1.0}};  // V = (1, 1), one pixel, z = 1
    TensorizedWindow tw = test::make_window(1, 1, px);
    // the synthetic t_norm must be exactly 1.0 for the worked example
    tw.values[0] = 1.0;
    tw.values[1] = 1.0;

    DecodedTensor d(1, 1);
    d.at(0, 0, 0) = 0.0;
    d.at(0, 0, 1) = -1.0;
    LossConfig cfg{1.0, 0.1};
    CHECK(masked_mse_loss(tw, d, cfg) == doctest::Approx(1.4).epsilon(1e-15));

    // perfect reconstruction
    d.at(0, 0, 0) = 1.0;
    d.at(0, 0, 1) = 1.0;
    CHECK(masked_mse_loss(tw, d, cfg) == 0.0);

    // all-zero mask annihilates any decode
    tw.mask[0] = 0;
    d.at(0, 0, 0) = 123.0;
    CHECK(masked_mse_loss(tw, d, cfg) == 0.0);
}

TEST_CASE("loss is invariant to pixel permutation and ignores polarity at beta 0") {
    Rng rng(2);
    std::vector<std::vector<std::array<double, 2>>> px(4);
    px[0] = {{0.2, 1.0}};
    px[1] = {{0.4, -1.0}, {0.6, 1.0}};
    px[2] = {};
    px[3] = {{0.9, -1.0}};
    const TensorizedWindow tw = test::make_window(4, 1, px);
    DecodedTensor d(tw.z, 4);
    for (auto& v : d.v) v = rng.uniform(-1, 1);

    LossConfig cfg{1.0, 0.1};
    const double base = masked_mse_loss(tw, d, cfg);
    CHECK(base >= 0.0);

    // permute pixels 0<->3 in both tensors
    std::vector<std::vector<std::array<double, 2>>> pxp = {px[3], px[1], px[2], px[0]};
    const TensorizedWindow twp = test::make_window(4, 1, pxp);
    DecodedTensor dp(tw.z, 4);
    for (int s = 0; s < tw.z; ++s)
        for (int c = 0; c < 2; ++c) {
            dp.at(s, 0, c) = d.at(s, 3, c);
            dp.at(s, 1, c) = d.at(s, 1, c);
            dp.at(s, 2, c) = d.at(s, 2, c);
            dp.at(s, 3, c) = d.at(s, 0, c);
        }
    CHECK(masked_mse_loss(twp, dp, cfg) == doctest::Approx(base).epsilon(1e-15));

    // beta = 0: perturbing the polarity column leaves the loss unchanged
    LossConfig tonly{1.0, 0.0};
    const double l0 = masked_mse_loss(tw, d, tonly);
    DecodedTensor d2 = d;
    for (int s = 0; s < tw.z; ++s)
        for (int pix = 0; pix < 4; ++pix) d2.at(s, pix, 1) += 5.0;
    CHECK(masked_mse_loss(tw, d2, tonly) == l0);
}

TEST_CASE("zero-mask batch produces zero gradients") {
    Rng rng(3);
    EncoderModel enc = test::random_encoder(rng, CellKind::Gru, {3, 3});
    DecoderModel dec = test::random_decoder(rng, 3, 2);
    EventSequence seq;
    seq.width = 2;
    seq.height = 2;
    const TensorizedWindow tw = tensorize(seq, {}, 4);

    const BackwardResult res = backward(enc, dec, tw, LossConfig{});
    CHECK(res.loss == 0.0);
    visit_grads(res.grads, [&](const std::vector<double>& t) {
        for (double v : t) CHECK(v == 0.0);
    });
}

TEST_CASE("gradients match finite differences across all cell kinds") {
    // small configs: d <= 4, z <= 5, 2 encoder + 2 decoder layers
    for (CellKind kind : {CellKind::Rnn, CellKind::Lstm, CellKind::Gru, CellKind::Mgu}) {
        CAPTURE(cell_kind_name(kind));
        Rng rng(100 + int(kind));
        double worst = 0.0;
        for (int trial = 0; trial < 6; ++trial) {
            const int d1 = int(rng.uniform_int(2, 4));
            const int d2 = int(rng.uniform_int(2, 4));
            EncoderModel enc = test::random_encoder(rng, kind, {d1, d2});
            DecoderModel dec = test::random_decoder(rng, d2, 2);
            const TensorizedWindow tw = gradcheck_window(rng);
            worst = std::max(worst,
                             fd_worst_rel_error(enc, dec, tw, LossConfig{1.0, 0.5}));
        }
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("gradient set mirrors the active kind's tensors exactly") {
    Rng rng(5);
    EncoderModel enc = test::random_encoder(rng, CellKind::Gru, {3});
    DecoderModel dec = test::random_decoder(rng, 3, 1);
    const TensorizedWindow tw = gradcheck_window(rng);
    const BackwardResult res = backward(enc, dec, tw, LossConfig{});
    REQUIRE(res.grads.encoder.size() == 1);
    CHECK(res.grads.encoder[0].w.size() == 3);  // GRU has 3 gate slots, no LSTM slot exists
    CHECK(res.grads.encoder[0].w[0].rows == 3);
    CHECK(res.grads.encoder[0].w[0].cols == 2);
}

TEST_CASE("adam identities") {
    Rng rng(7);
    EncoderModel enc = test::random_encoder(rng, CellKind::Gru, {3});
    DecoderModel dec = test::random_decoder(rng, 3, 1);
    EncoderModel enc0 = enc;

    GradientSet g;
    g.init_like(enc, dec);
    AdamState st;

    // zero gradient, zero weight decay -> parameters unchanged
    adam_step(enc, dec, g, st, 1e-3, 0.0);
    for (std::size_t l = 0; l < enc.layers.size(); ++l)
        CHECK(enc.layers[l].w[0].a == enc0.layers[l].w[0].a);

    // first step moves by ~lr in the gradient's sign direction
    EncoderModel enc1 = enc0;
    DecoderModel dec1 = dec;
    GradientSet g1;
    g1.init_like(enc1, dec1);
    g1.encoder[0].w[0](0, 0) = 0.37;
    g1.encoder[0].w[0](1, 1) = -2.2;
    AdamState st1;
    adam_step(enc1, dec1, g1, st1, 1e-3, 0.0);
    const double step00 = enc0.layers[0].w[0](0, 0) - enc1.layers[0].w[0](0, 0);
    const double step11 = enc0.layers[0].w[0](1, 1) - enc1.layers[0].w[0](1, 1);
    CHECK(step00 == doctest::Approx(1e-3).epsilon(1e-4));
    CHECK(step11 == doctest::Approx(-1e-3).epsilon(1e-4));

    // determinism: identical state and gradients give identical updates
    EncoderModel enc2 = enc0;
    DecoderModel dec2 = dec;
    AdamState st2;
    adam_step(enc2, dec2, g1, st2, 1e-3, 0.0);
    CHECK(enc2.layers[0].w[0].a == enc1.layers[0].w[0].a);
}

TEST_CASE("fake_quant worked examples") {
    CHECK(fake_quant(5.0, 2, 1.0) == 1.0);       // clamp to the top code
    CHECK(fake_quant(0.0, 8, 0.01) == 0.0);      // zero is always on-grid
    CHECK(fake_quant(-5.0, 2, 1.0) == -2.0);     // bottom code
    // on-grid values in range are unchanged
    CHECK(fake_quant(0.05, 8, 0.01) == doctest::Approx(0.05).epsilon(1e-12));
    CHECK(fake_quant(0.42, 4, 0.06) == doctest::Approx(0.42).epsilon(1e-12));
    CHECK_THROWS_AS(fake_quant(1.0, 1, 1.0), Error);
    CHECK_THROWS_AS(fake_quant(1.0, 8, 0.0), Error);
}

TEST_CASE("backward loss equals the forward loss path") {
    Rng rng(11);
    EncoderModel enc = test::random_encoder(rng, CellKind::Gru, {4, 4});
    DecoderModel dec = test::random_decoder(rng, 4, 2);
    const TensorizedWindow tw = test::random_window(rng, 3, 3, 5);
    const LossConfig cfg{1.0, 0.1};
    const double fwd = masked_mse_loss(tw, decode_window(enc, dec, tw), cfg);
    const BackwardResult res = backward(enc, dec, tw, cfg);
    CHECK(res.loss == doctest::Approx(fwd).epsilon(1e-12));
}

namespace {

EventSequence desk_dataset(std::uint64_t seed = 21) {
    SceneConfig cfg;
    cfg.pattern = ScenePattern::Mixed;
    cfg.width = cfg.height = 32;
    cfg.duration_us = 300000;
    cfg.threshold = 0.12;
    cfg.seed = seed;
    return generate_synthetic(cfg);
}

TrainConfig desk_config() {
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.samples_per_epoch = 6;
    cfg.window_us = 25000;
    cfg.crop = 12;
    cfg.z_cap = 24;
    cfg.seed = 4;
    return cfg;
}

}  // namespace

TEST_CASE("lr = 0 keeps the loss curve flat") {
    const EventSequence data = desk_dataset();
    TrainConfig cfg = desk_config();
    cfg.epochs = 4;
    cfg.lr = 0.0;
    cfg.weight_decay = 0.0;
    const TrainResult r = train_encoder(data, CellKind::Gru, {4, 4}, cfg);
    for (double l : r.epoch_loss) CHECK(l == r.epoch_loss[0]);
}

TEST_CASE("trainer halves the loss on the desk-scale dataset") {
    const EventSequence data = desk_dataset();
    TrainConfig cfg = desk_config();
    const TrainResult r = train_encoder(data, CellKind::Gru, {12, 12, 12}, cfg);
    REQUIRE(r.epoch_loss.size() == 30);
    CHECK(r.epoch_loss.back() < 0.5 * r.epoch_loss.front());
}

TEST_CASE("trainer is deterministic") {
    const EventSequence data = desk_dataset();
    TrainConfig cfg = desk_config();
    cfg.epochs = 3;
    const TrainResult a = train_encoder(data, CellKind::Mgu, {5, 5}, cfg);
    const TrainResult b = train_encoder(data, CellKind::Mgu, {5, 5}, cfg);
    CHECK(a.epoch_loss == b.epoch_loss);
    for (std::size_t l = 0; l < a.enc.layers.size(); ++l)
        CHECK(a.enc.layers[l].w[0].a == b.enc.layers[l].w[0].a);
}

TEST_CASE("empty dataset is a configuration error") {
    EventSequence empty;
    empty.width = empty.height = 16;
    TrainConfig cfg = desk_config();
    CHECK_THROWS_AS((void)train_encoder(empty, CellKind::Gru, {4}, cfg), Error);
}

TEST_CASE("quantization-aware training stays finite and trains") {
    const EventSequence data = desk_dataset();
    TrainConfig cfg = desk_config();
    cfg.epochs = 8;
    cfg.quant.weight_bits = 6;
    cfg.quant.act_bits = 6;
    const TrainResult r = train_encoder(data, CellKind::Gru, {6, 6, 6}, cfg);
    for (double l : r.epoch_loss) CHECK(std::isfinite(l));
    CHECK(r.epoch_loss.back() < r.epoch_loss.front());
}

TEST_CASE("output-size sweep runs and reports one row per value") {
    const EventSequence data = desk_dataset();
    TrainConfig cfg = desk_config();
    cfg.epochs = 3;
    const auto rows = ablation_sweep(SweepAxis::OutputSize, {2, 4}, data, CellKind::Gru, cfg, 4);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].value == 2);
    CHECK(rows[1].value == 4);
    for (const auto& r : rows) CHECK(std::isfinite(r.final_loss));
}

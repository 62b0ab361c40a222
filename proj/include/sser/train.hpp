// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sser/events.hpp"
#include "sser/model.hpp"
#include "sser/tensorize.hpp"

namespace sser {

struct LossConfig {
    double alpha = 1.0;  // time-term weight
    double beta = 0.1;   // polarity-term weight
};

struct QuantTrainConfig {
    int weight_bits = 0;  // 0 disables quantization-aware training
    int act_bits = 0;
};

struct TrainConfig {
    int epochs = 30;
    double lr = 1e-3;
    double weight_decay = 1e-4;
    std::uint64_t window_us = 200000;
    int crop = 64;
    int z_cap = 100;
    int samples_per_epoch = 16;
    std::uint64_t seed = 1;
    std::uint64_t data_seed = 0;  // 0: derive from seed; else fixes the window pool
    QuantTrainConfig quant;
    LossConfig loss;
    int decoder_layers = 3;

    std::uint64_t effective_data_seed() const { return data_seed ? data_seed : seed; }

    void validate(const EventSequence& dataset) const;
};

// Decoded tensor, z x wh x 2, same layout as TensorizedWindow values.
struct DecodedTensor {
    int z = 0;
    int wh = 0;
    std::vector<double> v;

    DecodedTensor() = default;
    DecodedTensor(int z_, int wh_) : z(z_), wh(wh_), v(std::size_t(z_) * wh_ * 2, 0.0) {}
    double at(int slot, int pixel, int comp) const {
        return v[(std::size_t(slot) * wh + pixel) * 2 + comp];
    }
    double& at(int slot, int pixel, int comp) {
        return v[(std::size_t(slot) * wh + pixel) * 2 + comp];
    }
};

// Mean squared reconstruction error, masked, with the full z*W*H denominator
// (padded slots contribute zero to the numerator only).
double masked_mse_loss(const TensorizedWindow& ref, const DecodedTensor& dec,
                       const LossConfig& cfg);

// Forward pass: encode every active pixel, then decode z steps per pixel.
// Pixels without events are skipped (rows stay zero; their mask is all zero).
DecodedTensor decode_window(const EncoderModel& enc, const DecoderModel& dec,
                            const TensorizedWindow& tw, const QatQuantizers* qat = nullptr);

// Gradients for every encoder and decoder parameter; shapes mirror the models.
struct GradientSet {
    std::vector<CellGrads> encoder;
    std::vector<CellGrads> decoder;
    Mat d_head_out_w;
    Vec d_head_out_b;
    Mat d_head_in_w;
    Vec d_head_in_b;

    void init_like(const EncoderModel& enc, const DecoderModel& dec);
};

struct BackwardResult {
    double loss = 0.0;
    GradientSet grads;
};

// Loss plus exact reverse-mode gradients through the unrolled encoder
// (masked slots skipped) and the rolling decoder, including the head_in
// feedback path. Throws Error("training", ...) on non-finite intermediates.
BackwardResult backward(const EncoderModel& enc, const DecoderModel& dec,
                        const TensorizedWindow& tw, const LossConfig& cfg,
                        const QatQuantizers* qat = nullptr);

// clamp(round(v / scale), -2^(bits-1), 2^(bits-1)-1) * scale
double fake_quant(double v, int bits, double scale);

// Per-tensor symmetric weight fake-quantization, scale = maxabs / (2^(b-1)-1);
// all-zero tensors pass through unchanged.
EncoderModel fake_quant_weights(const EncoderModel& m, int bits);

struct AdamState {
    std::vector<Vec> m;
    std::vector<Vec> v;
    std::int64_t t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected Adam with decoupled weight decay applied to every parameter.
void adam_step(EncoderModel& enc, DecoderModel& dec, const GradientSet& g, AdamState& st,
               double lr, double weight_decay);

struct TrainResult {
    EncoderModel enc;
    DecoderModel dec;
    std::vector<double> epoch_loss;
};

// Self-supervised loop: per sample, slice a random window, crop, tensorize,
// drop empty pixels, forward/backward, Adam step. Deterministic given seed.
TrainResult train_encoder(const EventSequence& dataset, CellKind kind,
                          const std::vector<int>& dims, const TrainConfig& cfg);

// Fixed held-out windows drawn with a dedicated stream of the seed.
std::vector<TensorizedWindow> make_eval_windows(const EventSequence& dataset,
                                                const TrainConfig& cfg, int count,
                                                std::uint64_t salt = 0x9e3779b9);

double eval_loss(const EncoderModel& enc, const DecoderModel& dec,
                 const std::vector<TensorizedWindow>& windows, const LossConfig& cfg);

enum class SweepAxis : std::uint8_t { OutputSize = 0, Bits = 1 };

struct SweepRow {
    int value = 0;
    double final_loss = 0.0;
};

// One model per value under identical seeds/data. OutputSize trains float
// models at dims {v,v,v}; Bits trains quantization-aware at v bits and scores
// the exported integer-kernel encoder against the float decoder. final_loss
// is the mean masked loss on the held-out windows.
std::vector<SweepRow> ablation_sweep(SweepAxis axis, const std::vector<int>& values,
                                     const EventSequence& dataset, CellKind kind,
                                     const TrainConfig& base, int eval_windows = 16);

void write_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows,
                     SweepAxis axis);
void write_loss_csv(const std::string& path, const std::vector<double>& epoch_loss);

// Optimizer-state sidecar for checkpoints.
void save_adam_state(const std::string& path, const AdamState& st);
AdamState load_adam_state(const std::string& path);

}  // namespace sser

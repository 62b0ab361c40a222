// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sser/model.hpp"
#include "sser/tensorize.hpp"
#include "sser/train.hpp"

namespace sser {

enum class RoundingMode : std::uint8_t { HalfAwayFromZero = 0 };

struct QuantScheme {
    int weight_bits = 8;                                   // 2..12
    int act_bits = 8;                                      // 2..12
    int input_bits = 16;                                   // fixed timestamp width
    int lut_in_bits = 12;                                  // table addressing width
    RoundingMode rounding = RoundingMode::HalfAwayFromZero;
    bool power_of_two_scales = false;

    void validate() const;
};

// Precomputed activation table over every representable pre-activation code.
// Monotone by construction; saturates at the range ends.
struct ActivationLUT {
    enum class Fn : std::uint8_t { Sigmoid = 0, Tanh = 1 };
    Fn fn = Fn::Sigmoid;
    int in_bits = 12;
    int out_bits = 8;
    double in_scale = 1.0;
    double out_scale = 1.0;
    std::int32_t out_min = 0;
    std::int32_t out_max = 0;
    std::vector<std::int32_t> table;  // 2^in_bits entries, index = code + 2^(in_bits-1)

    std::int64_t in_min_code() const { return -(std::int64_t(1) << (in_bits - 1)); }
    std::int64_t in_max_code() const { return (std::int64_t(1) << (in_bits - 1)) - 1; }
    std::int32_t lookup(std::int64_t pre_code) const;
};

ActivationLUT build_activation_lut(ActivationLUT::Fn fn, int in_bits, int out_bits,
                                   double in_scale, double out_scale);

// One recurrent layer in combined-block form: gate rows stacked into a single
// input block and a single recurrent block (3*d_out tall for GRU, 2*d_out for
// MGU, candidate rows last).
struct QuantizedLayer {
    CellKind kind = CellKind::Gru;
    int d_in = 0;
    int d_out = 0;
    bool first_layer = false;  // input is a (t, p) pair with per-column scales
    CandidateBias bias_variant = CandidateBias::Gated;

    std::vector<std::int32_t> w;  // (gates*d_out) x d_in
    std::vector<std::int32_t> u;  // (gates*d_out) x d_out
    double w_scale = 1.0;
    double u_scale = 1.0;

    std::vector<std::int32_t> bias_gate;  // sigmoid-gate biases on the sigmoid LUT input grid
    std::vector<std::int32_t> bias_cand;  // candidate bias on the tanh LUT input grid

    ActivationLUT sig;
    ActivationLUT tnh;

    double state_scale = 1.0;  // 1 / (2^(act_bits-1) - 1)
    double gate_scale = 1.0;   // 1 / (2^act_bits - 1)
    std::int64_t gate_one = 0; // integer code of 1.0 on the gate grid

    int gates() const { return kind == CellKind::Gru ? 3 : 2; }
    int block_height() const { return gates() * d_out; }
};

struct QuantizedModel {
    QuantScheme scheme;
    std::vector<QuantizedLayer> layers;
    std::vector<std::string> warnings;  // scale-collapse records
    int accumulator_bits = 0;

    int channels() const { return layers.empty() ? 0 : layers.back().d_out; }
    void validate() const;
};

// Integer timestamp code: round(t_norm * (2^16 - 1)).
std::int64_t quantize_timestamp(double t_norm);

// Symmetric integer code of a real value on the layer's state grid.
std::int32_t quantize_state_value(const QuantizedLayer& l, double v);

// Post-training export: symmetric per-tensor weights, LUT input scales frozen
// from calibration max-abs, gates packed into the combined blocks. GRU and MGU
// encoders only.
QuantizedModel quantize_model(const EncoderModel& m, const QuantScheme& scheme,
                              const std::vector<TensorizedWindow>& calib);

// Quantized input vector for one layer step. First-layer inputs carry the
// timestamp code and the raw ±1 polarity; deeper layers carry state codes.
struct QuantInput {
    std::vector<std::int64_t> codes;
};

// One integer step; pure, bit-exact. h holds state codes and is d_out long.
std::vector<std::int32_t> q_gru_step(const QuantizedLayer& l, const QuantInput& x,
                                     std::span<const std::int32_t> h);
std::vector<std::int32_t> q_mgu_step(const QuantizedLayer& l, const QuantInput& x,
                                     std::span<const std::int32_t> h);
std::vector<std::int32_t> q_cell_step(const QuantizedLayer& l, const QuantInput& x,
                                      std::span<const std::int32_t> h);

// Per-pixel fold over a tensorized window; row w holds pixel w's state codes.
std::vector<std::int32_t> q_encode_window(const QuantizedModel& m, const TensorizedWindow& tw);

// v = q * scale
std::vector<double> dequantize_representation(const std::vector<std::int32_t>& codes,
                                              double scale);

// Integer-kernel encoder + float decoder reconstruction loss.
double eval_loss_quantized(const QuantizedModel& qm, const DecoderModel& dec,
                           const TensorizedWindow& tw, const LossConfig& cfg);
double eval_loss_quantized(const QuantizedModel& qm, const DecoderModel& dec,
                           const std::vector<TensorizedWindow>& windows, const LossConfig& cfg);

// Container io; same magic as the float model with payload kind 1.
void save_quantized_model(const std::string& path, const QuantizedModel& m);
QuantizedModel load_quantized_model(const std::string& path);

}  // namespace sser

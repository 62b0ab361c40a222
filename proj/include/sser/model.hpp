// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "sser/cells.hpp"
#include "sser/common.hpp"
#include "sser/tensorize.hpp"

namespace sser {

// Stack of recurrent layers over (t_norm, p) inputs; the last layer's hidden
// state is the pixel's representation column.
struct EncoderModel {
    std::vector<CellParams> layers;

    int input_dim() const { return 2; }
    int channels() const { return layers.empty() ? 0 : layers.back().d_out; }
    void validate() const;
};

// Rolling reconstruction head: a GRU stack (d_in = d_out = C) plus two linear
// maps. head_out: C -> 2 recovers one (t, p) pair per step; head_in: 2 -> C
// feeds it back as the next step's input. Step 0 consumes the encoder row.
struct DecoderModel {
    std::vector<CellParams> layers;
    Mat head_out_w;  // 2 x C
    Vec head_out_b;  // 2
    Mat head_in_w;   // C x 2
    Vec head_in_b;   // C
    int channels() const { return layers.empty() ? 0 : layers.back().d_out; }
    void validate() const;
};

std::vector<StateVec> initial_states(const EncoderModel& m);

// Folds time-ordered inputs through the layer stack; returns the final
// per-layer states.
std::vector<StateVec> encode_sequence(const EncoderModel& m,
                                      const std::vector<std::array<double, 2>>& inputs,
                                      std::vector<StateVec> states,
                                      const QatQuantizers* qat = nullptr);

// Per-pixel encode over a tensorized window; masked-out slots do not advance
// the state. Row w of the result is pixel w's C-vector.
Mat encode_window(const EncoderModel& m, const TensorizedWindow& tw);

// Rolling decode of one representation row for z steps.
std::vector<std::array<double, 2>> decode(const DecoderModel& m, const Vec& e_row, int z_steps);

// uniform(-1/sqrt(d_out), +1/sqrt(d_out)) init; LSTM forget bias starts at 1.
EncoderModel init_encoder(CellKind kind, const std::vector<int>& dims, Rng& rng,
                          CandidateBias bias = CandidateBias::Gated);
DecoderModel init_decoder(int channels, int num_layers, Rng& rng);

// Model container, little-endian: magic "SSER", version byte, payload kind
// byte (0 = float model). Layers carry kind, bias variant, dims and row-major
// float32 tensors; an optional decoder section follows the encoder.
void save_model(const std::string& path, const EncoderModel& enc, const DecoderModel* dec);
struct LoadedModel {
    EncoderModel enc;
    std::optional<DecoderModel> dec;
};
LoadedModel load_model(const std::string& path);

// Peek at the payload kind byte: 0 float model, 1 quantized model.
int model_file_kind(const std::string& path);

}  // namespace sser

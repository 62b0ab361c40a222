// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sser/linalg.hpp"

namespace sser {

enum class CellKind : std::uint8_t { Rnn = 0, Lstm = 1, Gru = 2, Mgu = 3 };

CellKind cell_kind_from_name(const std::string& name);
const char* cell_kind_name(CellKind k);

// Candidate-bias placement for GRU/MGU. Gated keeps the bias inside the
// reset/forget product, tanh(W x + r (.) (U h + b)); Plain is the common
// variant with the bias outside, tanh(W x + r (.) (U h) + b).
enum class CandidateBias : std::uint8_t { Gated = 0, Plain = 1 };

// Gate slot order: RNN {cand}; LSTM {f, i, o, cand}; GRU {z, r, cand};
// MGU {f, cand}. The candidate gate is always the last slot.
struct CellParams {
    CellKind kind = CellKind::Gru;
    int d_in = 0;
    int d_out = 0;
    CandidateBias bias_variant = CandidateBias::Gated;
    std::vector<Mat> w;  // input weights, one d_out x d_in per gate
    std::vector<Mat> u;  // recurrent weights, one d_out x d_out per gate
    std::vector<Vec> b;  // biases, one d_out per gate

    static int gate_count(CellKind k);
    int gates() const { return gate_count(kind); }
    void init_shapes();  // allocates zeroed tensors for kind/dims
    void validate() const;
};

// Hidden state; c used only by LSTM.
struct StateVec {
    Vec h;
    Vec c;
};

StateVec zero_state(const CellParams& p);

// Fake-quantization hooks used during quantization-aware training. Grids
// mirror the integer kernels: sigmoid gates on [0,1] with 2^bits-1 steps,
// tanh outputs and states on the symmetric grid, LSTM cell on a running-max
// grid. act_bits == 0 disables everything.
struct QatQuantizers {
    int act_bits = 0;
    double cell_max = 1.0;  // LSTM c grid bound, maintained by the trainer

    bool active() const { return act_bits > 0; }
    double gate(double v) const;
    double sym(double v) const;
    double cell(double v) const;
    bool cell_clipped(double v) const;
};

// Per-step forward record, everything backward needs. *_pre fields hold
// values before fake quantization; without QAT they equal their quantized
// counterparts.
struct CellCache {
    Vec x;       // input as consumed
    Vec h_in;    // state in (already quantized under QAT)
    Vec c_in;    // LSTM only
    Vec g0_pre, g0;  // RNN: unused; LSTM: f; GRU: z; MGU: f
    Vec g1_pre, g1;  // LSTM: i; GRU: r
    Vec g2_pre, g2;  // LSTM: o
    Vec inner;       // GRU/MGU: U_h h (+ b under Gated variant)
    Vec cand_pre, cand;
    Vec c_out_pre, c_out;        // LSTM
    Vec tanh_c_pre, tanh_c;      // LSTM
    Vec h_out_pre, h_out;
};

// One step. qat may be null; cache may be null when no backward pass follows.
StateVec cell_forward(const CellParams& p, const Vec& x, const StateVec& s,
                      const QatQuantizers* qat = nullptr, CellCache* cache = nullptr);

// In-place variant for hot loops: writes the next state into `out`, reusing
// its buffers. `out` may alias `s`; all reads of `s` complete before the
// write-back.
void cell_forward_into(const CellParams& p, const Vec& x, const StateVec& s,
                       const QatQuantizers* qat, CellCache* cache, StateVec& out);

// Spec-facing step names.
StateVec rnn_step(const CellParams& p, const Vec& x, const StateVec& s);
StateVec lstm_step(const CellParams& p, const Vec& x, const StateVec& s);
StateVec gru_step(const CellParams& p, const Vec& x, const StateVec& s);
StateVec mgu_step(const CellParams& p, const Vec& x, const StateVec& s);

// Parameter gradients for one cell; shapes mirror CellParams.
struct CellGrads {
    std::vector<Mat> w;
    std::vector<Mat> u;
    std::vector<Vec> b;

    void init_like(const CellParams& p);
};

// Reverse step. dh_out (and dc_out for LSTM) is the gradient w.r.t. this
// step's outgoing state. Parameter gradients accumulate into g; dx, dh_in and
// dc_in are overwritten. Straight-through estimation across the QAT grids.
void cell_backward(const CellParams& p, const CellCache& cc, const Vec& dh_out, const Vec& dc_out,
                   const QatQuantizers* qat, CellGrads& g, Vec& dx, Vec& dh_in, Vec& dc_in);

}  // namespace sser

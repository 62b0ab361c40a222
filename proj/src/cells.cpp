// SPDX-License-Identifier: Apache-2.0
#include "sser/cells.hpp"

#include <algorithm>
#include <cmath>

#include "sser/common.hpp"

namespace sser {

namespace {

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// pre = W x + U h + b for one gate
void gate_preact(const CellParams& p, int gate, const Vec& x, const Vec& h, Vec& pre) {
    pre = p.b[gate];
    mat_vec_add(p.w[gate], x, pre);
    mat_vec_add(p.u[gate], h, pre);
}

void apply_sigmoid(const Vec& pre, Vec& out) {
    out.resize(pre.size());
    for (std::size_t i = 0; i < pre.size(); ++i) out[i] = sigmoid(pre[i]);
}

void apply_tanh(const Vec& pre, Vec& out) {
    out.resize(pre.size());
    for (std::size_t i = 0; i < pre.size(); ++i) out[i] = std::tanh(pre[i]);
}

void fq_vec(const QatQuantizers* qat, double (QatQuantizers::*f)(double) const, const Vec& in,
            Vec& out) {
    if (!qat || !qat->active()) {
        out = in;
        return;
    }
    out.resize(in.size());
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = (qat->*f)(in[i]);
}

}  // namespace

CellKind cell_kind_from_name(const std::string& name) {
    if (name == "rnn") return CellKind::Rnn;
    if (name == "lstm") return CellKind::Lstm;
    if (name == "gru") return CellKind::Gru;
    if (name == "mgu") return CellKind::Mgu;
    fail("usage", "unknown cell kind: " + name);
}

const char* cell_kind_name(CellKind k) {
    switch (k) {
        case CellKind::Rnn: return "rnn";
        case CellKind::Lstm: return "lstm";
        case CellKind::Gru: return "gru";
        case CellKind::Mgu: return "mgu";
    }
    return "?";
}

int CellParams::gate_count(CellKind k) {
    switch (k) {
        case CellKind::Rnn: return 1;
        case CellKind::Lstm: return 4;
        case CellKind::Gru: return 3;
        case CellKind::Mgu: return 2;
    }
    return 0;
}

void CellParams::init_shapes() {
    const int n = gates();
    w.assign(n, Mat(d_out, d_in));
    u.assign(n, Mat(d_out, d_out));
    b.assign(n, Vec(d_out, 0.0));
}

void CellParams::validate() const {
    if (d_in <= 0 || d_out <= 0) fail("validation", "cell dims must be positive");
    const int n = gates();
    if (int(w.size()) != n || int(u.size()) != n || int(b.size()) != n)
        fail("validation", "gate tensor count does not match cell kind");
    for (int g = 0; g < n; ++g) {
        if (w[g].rows != d_out || w[g].cols != d_in) fail("validation", "input weight shape mismatch");
        if (u[g].rows != d_out || u[g].cols != d_out)
            fail("validation", "recurrent weight shape mismatch");
        if (int(b[g].size()) != d_out) fail("validation", "bias shape mismatch");
        for (double v : w[g].a)
            if (!std::isfinite(v)) fail("validation", "non-finite input weight");
        for (double v : u[g].a)
            if (!std::isfinite(v)) fail("validation", "non-finite recurrent weight");
        for (double v : b[g])
            if (!std::isfinite(v)) fail("validation", "non-finite bias");
    }
}

StateVec zero_state(const CellParams& p) {
    StateVec s;
    s.h.assign(p.d_out, 0.0);
    if (p.kind == CellKind::Lstm) s.c.assign(p.d_out, 0.0);
    return s;
}

double QatQuantizers::gate(double v) const {
    const double steps = double((1 << act_bits) - 1);
    const double q = double(iround(v * steps)) / steps;
    return std::clamp(q, 0.0, 1.0);
}

double QatQuantizers::sym(double v) const {
    const double steps = double((1 << (act_bits - 1)) - 1);
    const double q = double(iround(v * steps)) / steps;
    return std::clamp(q, -1.0, 1.0);
}

double QatQuantizers::cell(double v) const {
    const double steps = double((1 << (act_bits - 1)) - 1);
    const double scale = cell_max / steps;
    const double q = double(iround(v / scale)) * scale;
    return std::clamp(q, -cell_max, cell_max);
}

bool QatQuantizers::cell_clipped(double v) const { return std::fabs(v) > cell_max; }

void cell_forward_into(const CellParams& p, const Vec& x, const StateVec& s,
                       const QatQuantizers* qat, CellCache* cache, StateVec& out) {
    if (int(x.size()) != p.d_in || int(s.h.size()) != p.d_out)
        fail("validation", "cell step dimension mismatch");
    const int d = p.d_out;

    thread_local CellCache scratch_cache;
    CellCache& cc = cache ? *cache : scratch_cache;
    cc.x = x;
    cc.h_in = s.h;

    switch (p.kind) {
        case CellKind::Rnn: {
            thread_local Vec pre;
            gate_preact(p, 0, x, cc.h_in, pre);
            apply_tanh(pre, cc.cand_pre);
            cc.h_out_pre = cc.cand_pre;
            fq_vec(qat, &QatQuantizers::sym, cc.h_out_pre, cc.h_out);
            out.h = cc.h_out;
            out.c.clear();
            break;
        }
        case CellKind::Lstm: {
            if (int(s.c.size()) != d) fail("validation", "lstm step missing cell state");
            cc.c_in = s.c;
            thread_local Vec pre;
            gate_preact(p, 0, x, cc.h_in, pre);
            apply_sigmoid(pre, cc.g0_pre);  // f
            gate_preact(p, 1, x, cc.h_in, pre);
            apply_sigmoid(pre, cc.g1_pre);  // i
            gate_preact(p, 2, x, cc.h_in, pre);
            apply_sigmoid(pre, cc.g2_pre);  // o
            gate_preact(p, 3, x, cc.h_in, pre);
            apply_tanh(pre, cc.cand_pre);
            fq_vec(qat, &QatQuantizers::gate, cc.g0_pre, cc.g0);
            fq_vec(qat, &QatQuantizers::gate, cc.g1_pre, cc.g1);
            fq_vec(qat, &QatQuantizers::gate, cc.g2_pre, cc.g2);
            fq_vec(qat, &QatQuantizers::sym, cc.cand_pre, cc.cand);
            cc.c_out_pre.resize(d);
            for (int i = 0; i < d; ++i)
                cc.c_out_pre[i] = cc.g0[i] * cc.c_in[i] + cc.g1[i] * cc.cand[i];
            fq_vec(qat, &QatQuantizers::cell, cc.c_out_pre, cc.c_out);
            apply_tanh(cc.c_out, cc.tanh_c_pre);
            fq_vec(qat, &QatQuantizers::sym, cc.tanh_c_pre, cc.tanh_c);
            cc.h_out_pre.resize(d);
            for (int i = 0; i < d; ++i) cc.h_out_pre[i] = cc.g2[i] * cc.tanh_c[i];
            fq_vec(qat, &QatQuantizers::sym, cc.h_out_pre, cc.h_out);
            out.h = cc.h_out;
            out.c = cc.c_out;
            break;
        }
        case CellKind::Gru:
        case CellKind::Mgu: {
            const bool gru = p.kind == CellKind::Gru;
            const int cand_gate = gru ? 2 : 1;
            thread_local Vec pre;
            thread_local Vec cand_arg;
            gate_preact(p, 0, x, cc.h_in, pre);
            apply_sigmoid(pre, cc.g0_pre);  // z (GRU) / f (MGU)
            fq_vec(qat, &QatQuantizers::gate, cc.g0_pre, cc.g0);
            const Vec* mix = &cc.g0;
            if (gru) {
                gate_preact(p, 1, x, cc.h_in, pre);
                apply_sigmoid(pre, cc.g1_pre);  // r
                fq_vec(qat, &QatQuantizers::gate, cc.g1_pre, cc.g1);
                mix = &cc.g1;
            }
            // inner = U_c h (+ b_c under the Gated variant)
            cc.inner.assign(d, 0.0);
            mat_vec_add(p.u[cand_gate], cc.h_in, cc.inner);
            if (p.bias_variant == CandidateBias::Gated)
                for (int i = 0; i < d; ++i) cc.inner[i] += p.b[cand_gate][i];
            cand_arg.assign(d, 0.0);
            mat_vec_add(p.w[cand_gate], x, cand_arg);
            for (int i = 0; i < d; ++i) cand_arg[i] += (*mix)[i] * cc.inner[i];
            if (p.bias_variant == CandidateBias::Plain)
                for (int i = 0; i < d; ++i) cand_arg[i] += p.b[cand_gate][i];
            apply_tanh(cand_arg, cc.cand_pre);
            fq_vec(qat, &QatQuantizers::sym, cc.cand_pre, cc.cand);
            cc.h_out_pre.resize(d);
            for (int i = 0; i < d; ++i)
                cc.h_out_pre[i] = (1.0 - cc.g0[i]) * cc.h_in[i] + cc.g0[i] * cc.cand[i];
            fq_vec(qat, &QatQuantizers::sym, cc.h_out_pre, cc.h_out);
            out.h = cc.h_out;
            out.c.clear();
            break;
        }
    }
}

StateVec cell_forward(const CellParams& p, const Vec& x, const StateVec& s,
                      const QatQuantizers* qat, CellCache* cache) {
    StateVec out;
    cell_forward_into(p, x, s, qat, cache, out);
    return out;
}

StateVec rnn_step(const CellParams& p, const Vec& x, const StateVec& s) {
    return cell_forward(p, x, s);
}
StateVec lstm_step(const CellParams& p, const Vec& x, const StateVec& s) {
    return cell_forward(p, x, s);
}
StateVec gru_step(const CellParams& p, const Vec& x, const StateVec& s) {
    return cell_forward(p, x, s);
}
StateVec mgu_step(const CellParams& p, const Vec& x, const StateVec& s) {
    return cell_forward(p, x, s);
}

void CellGrads::init_like(const CellParams& p) {
    const int n = p.gates();
    w.assign(n, Mat(p.d_out, p.d_in));
    u.assign(n, Mat(p.d_out, p.d_out));
    b.assign(n, Vec(p.d_out, 0.0));
}

namespace {

// accumulate one gate's parameter gradients and input/state contributions
void gate_backward(const CellParams& p, int gate, const Vec& da, const CellCache& cc, CellGrads& g,
                   Vec& dx, Vec& dh_in) {
    outer_add(g.w[gate], da, cc.x);
    outer_add(g.u[gate], da, cc.h_in);
    vec_add(g.b[gate], da);
    mat_tvec_add(p.w[gate], da, dx);
    mat_tvec_add(p.u[gate], da, dh_in);
}

}  // namespace

void cell_backward(const CellParams& p, const CellCache& cc, const Vec& dh_out, const Vec& dc_out,
                   const QatQuantizers* qat, CellGrads& g, Vec& dx, Vec& dh_in, Vec& dc_in) {
    const int d = p.d_out;
    dx.assign(p.d_in, 0.0);
    dh_in.assign(d, 0.0);
    dc_in.clear();

    thread_local Vec da, do_, dtc, dc, df, di, dcand, dg0, dmix, dinner;
    switch (p.kind) {
        case CellKind::Rnn: {
            da.resize(d);
            for (int i = 0; i < d; ++i)
                da[i] = dh_out[i] * (1.0 - cc.cand_pre[i] * cc.cand_pre[i]);
            gate_backward(p, 0, da, cc, g, dx, dh_in);
            break;
        }
        case CellKind::Lstm: {
            dc_in.assign(d, 0.0);
            do_.resize(d);
            dtc.resize(d);
            dc.resize(d);
            for (int i = 0; i < d; ++i) {
                do_[i] = dh_out[i] * cc.tanh_c[i];
                dtc[i] = dh_out[i] * cc.g2[i];
            }
            for (int i = 0; i < d; ++i) {
                double dci = dtc[i] * (1.0 - cc.tanh_c_pre[i] * cc.tanh_c_pre[i]);
                if (!dc_out.empty()) dci += dc_out[i];
                if (qat && qat->active() && qat->cell_clipped(cc.c_out_pre[i])) dci = 0.0;
                dc[i] = dci;
            }
            df.resize(d);
            di.resize(d);
            dcand.resize(d);
            for (int i = 0; i < d; ++i) {
                df[i] = dc[i] * cc.c_in[i];
                di[i] = dc[i] * cc.cand[i];
                dcand[i] = dc[i] * cc.g1[i];
                dc_in[i] = dc[i] * cc.g0[i];
            }
            da.resize(d);
            for (int i = 0; i < d; ++i) da[i] = df[i] * cc.g0_pre[i] * (1.0 - cc.g0_pre[i]);
            gate_backward(p, 0, da, cc, g, dx, dh_in);
            for (int i = 0; i < d; ++i) da[i] = di[i] * cc.g1_pre[i] * (1.0 - cc.g1_pre[i]);
            gate_backward(p, 1, da, cc, g, dx, dh_in);
            for (int i = 0; i < d; ++i) da[i] = do_[i] * cc.g2_pre[i] * (1.0 - cc.g2_pre[i]);
            gate_backward(p, 2, da, cc, g, dx, dh_in);
            for (int i = 0; i < d; ++i) da[i] = dcand[i] * (1.0 - cc.cand_pre[i] * cc.cand_pre[i]);
            gate_backward(p, 3, da, cc, g, dx, dh_in);
            break;
        }
        case CellKind::Gru:
        case CellKind::Mgu: {
            const bool gru = p.kind == CellKind::Gru;
            const int cand_gate = gru ? 2 : 1;
            const Vec& mix = gru ? cc.g1 : cc.g0;       // r or f, as used in the candidate
            const Vec& mix_pre = gru ? cc.g1_pre : cc.g0_pre;

            dg0.resize(d);
            dcand.resize(d);
            for (int i = 0; i < d; ++i) {
                dg0[i] = dh_out[i] * (cc.cand[i] - cc.h_in[i]);
                dcand[i] = dh_out[i] * cc.g0[i];
                dh_in[i] = dh_out[i] * (1.0 - cc.g0[i]);
            }
            Vec& da_c = dtc;  // scratch reuse; distinct from da below
            da_c.resize(d);
            for (int i = 0; i < d; ++i)
                da_c[i] = dcand[i] * (1.0 - cc.cand_pre[i] * cc.cand_pre[i]);

            // candidate: W x + mix (.) inner (+ b)
            outer_add(g.w[cand_gate], da_c, cc.x);
            mat_tvec_add(p.w[cand_gate], da_c, dx);
            if (p.bias_variant == CandidateBias::Plain) vec_add(g.b[cand_gate], da_c);

            dmix.resize(d);
            dinner.resize(d);
            for (int i = 0; i < d; ++i) {
                dmix[i] = da_c[i] * cc.inner[i];
                dinner[i] = da_c[i] * mix[i];
            }
            outer_add(g.u[cand_gate], dinner, cc.h_in);
            mat_tvec_add(p.u[cand_gate], dinner, dh_in);
            if (p.bias_variant == CandidateBias::Gated) vec_add(g.b[cand_gate], dinner);

            da.resize(d);
            if (gru) {
                for (int i = 0; i < d; ++i) da[i] = dmix[i] * mix_pre[i] * (1.0 - mix_pre[i]);
                gate_backward(p, 1, da, cc, g, dx, dh_in);
            } else {
                for (int i = 0; i < d; ++i) dg0[i] += dmix[i];
            }
            for (int i = 0; i < d; ++i) da[i] = dg0[i] * cc.g0_pre[i] * (1.0 - cc.g0_pre[i]);
            gate_backward(p, 0, da, cc, g, dx, dh_in);
            break;
        }
    }
}

}  // namespace sser

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace sser {

using Vec = std::vector<double>;

// Dense row-major matrix. Dimensions here are tiny (d <= 16), so a flat
// vector with hand-rolled products keeps the floating-point evaluation order
// fixed, which the stream/batch equivalence contract depends on.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(std::size_t(r) * std::size_t(c), 0.0) {}

    double& operator()(int r, int c) { return a[std::size_t(r) * cols + c]; }
    double operator()(int r, int c) const { return a[std::size_t(r) * cols + c]; }
    std::size_t size() const { return a.size(); }
};

// out += M x
inline void mat_vec_add(const Mat& m, const Vec& x, Vec& out) {
    assert(int(x.size()) == m.cols && int(out.size()) == m.rows);
    const double* row = m.a.data();
    for (int r = 0; r < m.rows; ++r, row += m.cols) {
        double acc = 0.0;
        for (int c = 0; c < m.cols; ++c) acc += row[c] * x[c];
        out[r] += acc;
    }
}

// out += M^T y
inline void mat_tvec_add(const Mat& m, const Vec& y, Vec& out) {
    assert(int(y.size()) == m.rows && int(out.size()) == m.cols);
    const double* row = m.a.data();
    for (int r = 0; r < m.rows; ++r, row += m.cols) {
        const double yr = y[r];
        for (int c = 0; c < m.cols; ++c) out[c] += row[c] * yr;
    }
}

// M += y x^T
inline void outer_add(Mat& m, const Vec& y, const Vec& x) {
    assert(int(y.size()) == m.rows && int(x.size()) == m.cols);
    double* row = m.a.data();
    for (int r = 0; r < m.rows; ++r, row += m.cols) {
        const double yr = y[r];
        for (int c = 0; c < m.cols; ++c) row[c] += yr * x[c];
    }
}

inline void vec_add(Vec& out, const Vec& x) {
    assert(out.size() == x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] += x[i];
}

inline double max_abs(std::span<const double> s) {
    double m = 0.0;
    for (double v : s)
        if (v < 0 ? -v > m : v > m) m = v < 0 ? -v : v;
    return m;
}

}  // namespace sser

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tempad Authors

#include "tempad/matrix.hpp"

#include <algorithm>
#include <vector>

namespace tempad::inline TEMPAD_PRECISION_NS::kernels {

real dot(const real* a, const real* b, int n) noexcept {
    // 16 independent lanes, reduced pairwise in a fixed order.
    constexpr int lanes = 16;
    real acc[lanes] = {};
    int i = 0;
    for (; i + lanes <= n; i += lanes) {
        for (int l = 0; l < lanes; ++l) {
            acc[l] += a[i + l] * b[i + l];
        }
    }
    for (int l = 0; i < n; ++i, ++l) {
        acc[l] += a[i] * b[i];
    }
    for (int width = lanes / 2; width > 0; width /= 2) {
        for (int l = 0; l < width; ++l) {
            acc[l] += acc[l + width];
        }
    }
    return acc[0];
}

void axpy(real alpha, const real* x, real* y, int n) noexcept {
    for (int i = 0; i < n; ++i) {
        y[i] += alpha * x[i];
    }
}

void matmul(const Matrix& x, const Matrix& w, Matrix& y) {
    assert(x.cols() == w.rows());
    if (y.rows() != x.rows() || y.cols() != w.cols()) {
        y.resize(x.rows(), w.cols());
    } else {
        y.fill(real(0.0));
    }
    matmul_acc(x, w, y);
}

void matmul_acc(const Matrix& x, const Matrix& w, Matrix& y) {
    assert(x.cols() == w.rows() && y.rows() == x.rows() && y.cols() == w.cols());
    const int n = x.rows();
    const int k = x.cols();
    const int m = w.cols();
    // 4x32 tiles of y live in registers across the whole p loop. Every y
    // element still sums over p in ascending order, so tiling does not change
    // results.
    constexpr int rows = 4;
    constexpr int cols = 32;
    int i = 0;
    for (; i + rows <= n; i += rows) {
        int j0 = 0;
        for (; j0 + cols <= m; j0 += cols) {
            real acc[rows][cols];
            for (int r = 0; r < rows; ++r) {
                for (int j = 0; j < cols; ++j) {
                    acc[r][j] = y.row(i + r)[j0 + j];
                }
            }
            for (int p = 0; p < k; ++p) {
                const real* wp = w.row(p) + j0;
                for (int r = 0; r < rows; ++r) {
                    const real a = x.row(i + r)[p];
                    for (int j = 0; j < cols; ++j) {
                        acc[r][j] += a * wp[j];
                    }
                }
            }
            for (int r = 0; r < rows; ++r) {
                for (int j = 0; j < cols; ++j) {
                    y.row(i + r)[j0 + j] = acc[r][j];
                }
            }
        }
        if (j0 < m) {
            for (int r = 0; r < rows; ++r) {
                const real* xi = x.row(i + r);
                real* yi = y.row(i + r) + j0;
                for (int p = 0; p < k; ++p) {
                    axpy(xi[p], w.row(p) + j0, yi, m - j0);
                }
            }
        }
    }
    for (; i < n; ++i) {
        const real* xi = x.row(i);
        real* yi = y.row(i);
        for (int p = 0; p < k; ++p) {
            axpy(xi[p], w.row(p), yi, m);
        }
    }
}

void matmul_bt(const Matrix& x, const Matrix& w, Matrix& y) {
    assert(x.cols() == w.cols());
    if (y.rows() != x.rows() || y.cols() != w.rows()) {
        y.resize(x.rows(), w.rows());
    }
    const int k = x.cols();
    for (int i = 0; i < x.rows(); ++i) {
        const real* xi = x.row(i);
        real* yi = y.row(i);
        for (int j = 0; j < w.rows(); ++j) {
            yi[j] = dot(xi, w.row(j), k);
        }
    }
}

void matmul_bt_acc(const Matrix& x, const Matrix& w, real s, Matrix& y) {
    assert(x.cols() == w.cols() && y.rows() == x.rows() && y.cols() == w.rows());
    const int k = x.cols();
    const int m = w.rows();
    if (k < 32) {
        // Short inner dimension (a LoRA rank): a dot per element is mostly
        // overhead, so stream rows of w^T instead.
        thread_local std::vector<real> wt;
        wt.resize(static_cast<std::size_t>(k) * static_cast<std::size_t>(m));
        for (int j = 0; j < m; ++j) {
            const real* wj = w.row(j);
            for (int p = 0; p < k; ++p) {
                wt[static_cast<std::size_t>(p) * static_cast<std::size_t>(m) + static_cast<std::size_t>(j)] = wj[p];
            }
        }
        for (int i = 0; i < x.rows(); ++i) {
            const real* xi = x.row(i);
            real* yi = y.row(i);
            for (int p = 0; p < k; ++p) {
                axpy(s * xi[p], wt.data() + static_cast<std::size_t>(p) * static_cast<std::size_t>(m), yi, m);
            }
        }
        return;
    }
    for (int i = 0; i < x.rows(); ++i) {
        const real* xi = x.row(i);
        real* yi = y.row(i);
        for (int j = 0; j < m; ++j) {
            yi[j] += s * dot(xi, w.row(j), k);
        }
    }
}

void matmul_at_acc(const Matrix& a, const Matrix& b, real s, Matrix& out) {
    assert(a.rows() == b.rows() && out.rows() == a.cols() && out.cols() == b.cols());
    const int q = b.cols();
    for (int i = 0; i < a.rows(); ++i) {
        const real* ai = a.row(i);
        const real* bi = b.row(i);
        for (int p = 0; p < a.cols(); ++p) {
            const real v = s * ai[p];
            if (v != real(0.0)) {
                axpy(v, bi, out.row(p), q);
            }
        }
    }
}

}  // namespace tempad::kernels

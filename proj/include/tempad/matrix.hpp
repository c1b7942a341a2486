// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tempad Authors

#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

#include "tempad/precision.hpp"

namespace tempad::inline TEMPAD_PRECISION_NS {

/// Dense row-major matrix of `real` scalars.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, real fill = real(0.0))
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill) {}

    int rows() const noexcept { return rows_; }
    int cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    real* data() noexcept { return data_.data(); }
    const real* data() const noexcept { return data_.data(); }
    std::span<real> values() noexcept { return data_; }
    std::span<const real> values() const noexcept { return data_; }

    real* row(int r) noexcept {
        assert(r >= 0 && r < rows_);
        return data_.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_);
    }
    const real* row(int r) const noexcept {
        assert(r >= 0 && r < rows_);
        return data_.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_);
    }

    real& operator()(int r, int c) noexcept { return row(r)[c]; }
    real operator()(int r, int c) const noexcept { return row(r)[c]; }

    void fill(real v) noexcept { std::fill(data_.begin(), data_.end(), v); }
    void resize(int rows, int cols) {
        rows_ = rows;
        cols_ = cols;
        data_.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), real(0.0));
    }

    bool same_shape(const Matrix& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }
    bool operator==(const Matrix& o) const = default;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<real> data_;
};

/// Dense kernels. Every output row depends only on the matching input row and
/// accumulates in a fixed order, so results are bit-identical regardless of
/// how many rows are processed together (a prefix of a sequence produces the
/// same rows as the full sequence).
namespace kernels {

/// y = x * w          x: n×k, w: k×m
void matmul(const Matrix& x, const Matrix& w, Matrix& y);
/// y = x * w^T        x: n×k, w: m×k
void matmul_bt(const Matrix& x, const Matrix& w, Matrix& y);
/// y += s * x * w^T
void matmul_bt_acc(const Matrix& x, const Matrix& w, real s, Matrix& y);
/// y += x * w
void matmul_acc(const Matrix& x, const Matrix& w, Matrix& y);
/// out += s * a^T * b    a: n×p, b: n×q, out: p×q
void matmul_at_acc(const Matrix& a, const Matrix& b, real s, Matrix& out);

real dot(const real* a, const real* b, int n) noexcept;
void axpy(real alpha, const real* x, real* y, int n) noexcept;

}  // namespace kernels

}  // namespace tempad

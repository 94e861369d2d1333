#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "coner/errors.hpp"

namespace coner {

// Dense row-major matrix. Row vectors are 1xN tensors; that covers every
// shape the pipeline needs.
template <class T>
struct Tensor {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> data;

    Tensor() = default;
    Tensor(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, T(0)) {}

    T& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    std::size_t size() const { return data.size(); }

    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

    bool all_finite() const {
        for (T v : data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }

    Tensor<T>& operator+=(const Tensor<T>& o) {
        require_same(o, "operator+=");
        for (std::size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
        return *this;
    }

    void require_same(const Tensor& o, const char* where) const {
        if (!same_shape(o))
            throw ShapeError(std::string(where) + ": shape mismatch " + shape_str() +
                             " vs " + o.shape_str());
    }

    std::string shape_str() const {
        return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
    }

    template <class U>
    Tensor<U> cast() const {
        Tensor<U> out(rows, cols);
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

// C = A * B
template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.cols != b.rows)
        throw ShapeError("matmul: inner dims " + a.shape_str() + " * " + b.shape_str());
    Tensor<T> c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t k = 0; k < a.cols; ++k) {
            T aik = a(i, k);
            if (aik == T(0)) continue;
            const T* brow = &b.data[k * b.cols];
            T* crow = &c.data[i * c.cols];
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    return c;
}

// C += A * B
template <class T>
void matmul_acc(Tensor<T>& c, const Tensor<T>& a, const Tensor<T>& b) {
    if (a.cols != b.rows || c.rows != a.rows || c.cols != b.cols)
        throw ShapeError("matmul_acc: shape mismatch");
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t k = 0; k < a.cols; ++k) {
            T aik = a(i, k);
            if (aik == T(0)) continue;
            const T* brow = &b.data[k * b.cols];
            T* crow = &c.data[i * c.cols];
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
}

// C += A * B^T
template <class T>
void matmul_nt_acc(Tensor<T>& c, const Tensor<T>& a, const Tensor<T>& b) {
    if (a.cols != b.cols || c.rows != a.rows || c.cols != b.rows)
        throw ShapeError("matmul_nt_acc: shape mismatch");
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < b.rows; ++j) {
            T s = 0;
            const T* arow = &a.data[i * a.cols];
            const T* brow = &b.data[j * b.cols];
            for (std::size_t k = 0; k < a.cols; ++k) s += arow[k] * brow[k];
            c(i, j) += s;
        }
}

// C += A^T * B
template <class T>
void matmul_tn_acc(Tensor<T>& c, const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rows != b.rows || c.rows != a.cols || c.cols != b.cols)
        throw ShapeError("matmul_tn_acc: shape mismatch");
    for (std::size_t k = 0; k < a.rows; ++k)
        for (std::size_t i = 0; i < a.cols; ++i) {
            T aki = a(k, i);
            if (aki == T(0)) continue;
            const T* brow = &b.data[k * b.cols];
            T* crow = &c.data[i * c.cols];
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aki * brow[j];
        }
}

template <class T>
Tensor<T> concat_cols(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rows != b.rows) throw ShapeError("concat_cols: row mismatch");
    Tensor<T> out(a.rows, a.cols + b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t j = 0; j < a.cols; ++j) out(i, j) = a(i, j);
        for (std::size_t j = 0; j < b.cols; ++j) out(i, a.cols + j) = b(i, j);
    }
    return out;
}

template <class T>
Tensor<T> row(const Tensor<T>& a, std::size_t i) {
    Tensor<T> out(1, a.cols);
    for (std::size_t j = 0; j < a.cols; ++j) out(0, j) = a(i, j);
    return out;
}

}  // namespace coner

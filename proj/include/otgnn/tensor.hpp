#pragma once

#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "otgnn/errors.hpp"

namespace otgnn {

/// Dense row-major matrix of doubles. Vectors are 1×d or d×1 by convention.
/// 64-bit precision throughout: the OT solver pivoting and the
/// finite-difference gradient checks are precision-sensitive.
class Tensor {
public:
    Tensor() = default;
    Tensor(int rows, int cols)
        : rows_(rows), cols_(cols),
          data_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0.0) {
        if (rows < 0 || cols < 0) throw ShapeError("Tensor: negative dimension");
    }

    static Tensor zeros(int rows, int cols) { return Tensor(rows, cols); }

    static Tensor full(int rows, int cols, double v) {
        Tensor t(rows, cols);
        for (double& x : t.data_) x = v;
        return t;
    }

    static Tensor identity(int n) {
        Tensor t(n, n);
        for (int i = 0; i < n; ++i) t.at(i, i) = 1.0;
        return t;
    }

    static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);

    /// 1×d row vector.
    static Tensor row(std::initializer_list<double> vals);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& at(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    double at(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* row_ptr(int r) { return data_.data() + static_cast<std::size_t>(r) * cols_; }
    const double* row_ptr(int r) const { return data_.data() + static_cast<std::size_t>(r) * cols_; }

    std::span<const double> values() const { return data_; }
    std::span<double> values() { return data_; }

    bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
    std::string shape_str() const { return std::to_string(rows_) + "x" + std::to_string(cols_); }

    bool all_finite() const;
    Tensor transposed() const;

    double max_abs() const;

private:
    int rows_ = 0, cols_ = 0;
    std::vector<double> data_;
};

/// out (+)= a·b ; shapes (n×k)·(k×m) → n×m.
void matmul_into(Tensor& out, const Tensor& a, const Tensor& b, bool accumulate);
/// out (+)= aᵀ·b ; shapes (k×n)ᵀ·(k×m) → n×m.
void matmul_ta_into(Tensor& out, const Tensor& a, const Tensor& b, bool accumulate);
/// out (+)= a·bᵀ ; shapes (n×k)·(m×k)ᵀ → n×m.
void matmul_tb_into(Tensor& out, const Tensor& a, const Tensor& b, bool accumulate);

Tensor matmul(const Tensor& a, const Tensor& b);

/// y += alpha·x (same shape).
void axpy(Tensor& y, double alpha, const Tensor& x);

}  // namespace otgnn

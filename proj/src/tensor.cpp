#include "otgnn/tensor.hpp"

#include <cmath>

namespace otgnn {

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const int r = static_cast<int>(rows.size());
    const int c = r == 0 ? 0 : static_cast<int>(rows.begin()->size());
    Tensor t(r, c);
    int i = 0;
    for (const auto& row : rows) {
        if (static_cast<int>(row.size()) != c)
            throw ShapeError("from_rows: ragged rows");
        int j = 0;
        for (double v : row) t.at(i, j++) = v;
        ++i;
    }
    return t;
}

Tensor Tensor::row(std::initializer_list<double> vals) {
    Tensor t(1, static_cast<int>(vals.size()));
    int j = 0;
    for (double v : vals) t.at(0, j++) = v;
    return t;
}

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

Tensor Tensor::transposed() const {
    Tensor t(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
        for (int j = 0; j < cols_; ++j) t.at(j, i) = at(i, j);
    return t;
}

double Tensor::max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::fabs(v));
    return m;
}

namespace {

void require(bool cond, const std::string& what, const Tensor& a, const Tensor& b) {
    if (!cond)
        throw ShapeError(what + ": incompatible shapes " + a.shape_str() + " and " + b.shape_str());
}

}  // namespace

void matmul_into(Tensor& out, const Tensor& a, const Tensor& b, bool accumulate) {
    require(a.cols() == b.rows(), "matmul", a, b);
    const int n = a.rows(), k = a.cols(), m = b.cols();
    if (out.rows() != n || out.cols() != m)
        throw ShapeError("matmul: bad output shape " + out.shape_str());
    if (!accumulate)
        for (double& v : out.values()) v = 0.0;
    // i-p-j order: the inner loop runs contiguously over rows of b and out.
    for (int i = 0; i < n; ++i) {
        const double* arow = a.row_ptr(i);
        double* orow = out.row_ptr(i);
        for (int p = 0; p < k; ++p) {
            const double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = b.row_ptr(p);
            for (int j = 0; j < m; ++j) orow[j] += av * brow[j];
        }
    }
}

void matmul_ta_into(Tensor& out, const Tensor& a, const Tensor& b, bool accumulate) {
    require(a.rows() == b.rows(), "matmul_ta", a, b);
    const int k = a.rows(), n = a.cols(), m = b.cols();
    if (out.rows() != n || out.cols() != m)
        throw ShapeError("matmul_ta: bad output shape " + out.shape_str());
    if (!accumulate)
        for (double& v : out.values()) v = 0.0;
    for (int p = 0; p < k; ++p) {
        const double* arow = a.row_ptr(p);
        const double* brow = b.row_ptr(p);
        for (int i = 0; i < n; ++i) {
            const double av = arow[i];
            if (av == 0.0) continue;
            double* orow = out.row_ptr(i);
            for (int j = 0; j < m; ++j) orow[j] += av * brow[j];
        }
    }
}

void matmul_tb_into(Tensor& out, const Tensor& a, const Tensor& b, bool accumulate) {
    require(a.cols() == b.cols(), "matmul_tb", a, b);
    const int n = a.rows(), k = a.cols(), m = b.rows();
    if (out.rows() != n || out.cols() != m)
        throw ShapeError("matmul_tb: bad output shape " + out.shape_str());
    for (int i = 0; i < n; ++i) {
        const double* arow = a.row_ptr(i);
        double* orow = out.row_ptr(i);
        for (int j = 0; j < m; ++j) {
            const double* brow = b.row_ptr(j);
            double acc = 0.0;
            for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
            if (accumulate)
                orow[j] += acc;
            else
                orow[j] = acc;
        }
    }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    require(a.cols() == b.rows(), "matmul", a, b);
    Tensor out(a.rows(), b.cols());
    matmul_into(out, a, b, false);
    return out;
}

void axpy(Tensor& y, double alpha, const Tensor& x) {
    if (!y.same_shape(x))
        throw ShapeError("axpy: incompatible shapes " + y.shape_str() + " and " + x.shape_str());
    double* yd = y.data();
    const double* xd = x.data();
    const std::size_t n = y.size();
    for (std::size_t i = 0; i < n; ++i) yd[i] += alpha * xd[i];
}

}  // namespace otgnn

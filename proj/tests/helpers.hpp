#pragma once

#include <cmath>
#include <functional>

#include "otgnn/rng.hpp"
#include "otgnn/tensor.hpp"

namespace otgnn::testing {

inline double rel_err(double got, double want, double floor = 1e-8) {
    return std::fabs(got - want) / std::max({std::fabs(got), std::fabs(want), floor});
}

/// Relative error between gradient tensors in the Euclidean norm.
inline double grad_rel_err(const Tensor& got, const Tensor& want) {
    double num = 0.0, ga = 0.0, gb = 0.0;
    for (std::size_t k = 0; k < got.size(); ++k) {
        const double d = got.values()[k] - want.values()[k];
        num += d * d;
        ga += got.values()[k] * got.values()[k];
        gb += want.values()[k] * want.values()[k];
    }
    return std::sqrt(num) / std::max({std::sqrt(ga), std::sqrt(gb), 1e-10});
}

/// Central finite differences of `f` w.r.t. every entry of `x`. `f` must
/// re-run the full forward computation from the current contents of `x`.
inline Tensor finite_diff(Tensor& x, const std::function<double()>& f, double eps = 1e-5) {
    Tensor g(x.rows(), x.cols());
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double orig = x.values()[k];
        x.values()[k] = orig + eps;
        const double fp = f();
        x.values()[k] = orig - eps;
        const double fm = f();
        x.values()[k] = orig;
        g.values()[k] = (fp - fm) / (2.0 * eps);
    }
    return g;
}

inline Tensor random_tensor(int rows, int cols, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(rows, cols);
    for (double& v : t.values()) v = rng.uniform(lo, hi);
    return t;
}

/// Determinant by Gaussian elimination with partial pivoting.
inline double determinant(Tensor a) {
    const int n = a.rows();
    double det = 1.0;
    for (int k = 0; k < n; ++k) {
        int pivot = k;
        for (int i = k + 1; i < n; ++i)
            if (std::fabs(a.at(i, k)) > std::fabs(a.at(pivot, k))) pivot = i;
        if (a.at(pivot, k) == 0.0) return 0.0;
        if (pivot != k) {
            for (int j = 0; j < n; ++j) std::swap(a.at(pivot, j), a.at(k, j));
            det = -det;
        }
        det *= a.at(k, k);
        for (int i = k + 1; i < n; ++i) {
            const double f = a.at(i, k) / a.at(k, k);
            for (int j = k; j < n; ++j) a.at(i, j) -= f * a.at(k, j);
        }
    }
    return det;
}

/// Smallest eigenvalue of a symmetric matrix by cyclic Jacobi rotations.
inline double symmetric_min_eigenvalue(Tensor a) {
    const int n = a.rows();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += a.at(p, q) * a.at(p, q);
        if (off < 1e-24) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (std::fabs(a.at(p, q)) < 1e-18) continue;
                const double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * a.at(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a.at(k, p), akq = a.at(k, q);
                    a.at(k, p) = c * akp - s * akq;
                    a.at(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a.at(p, k), aqk = a.at(q, k);
                    a.at(p, k) = c * apk - s * aqk;
                    a.at(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    double mn = a.at(0, 0);
    for (int i = 1; i < n; ++i) mn = std::min(mn, a.at(i, i));
    return mn;
}

}  // namespace otgnn::testing

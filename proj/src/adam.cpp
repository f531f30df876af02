#include "otgnn/adam.hpp"

#include <cmath>

#include "otgnn/errors.hpp"

namespace otgnn {

Adam::Adam(const ParamStore& params, AdamConfig cfg) : cfg_(cfg) {
    m_.reserve(params.size());
    v_.reserve(params.size());
    for (const auto& p : params) {
        m_.emplace_back(p.value.rows(), p.value.cols());
        v_.emplace_back(p.value.rows(), p.value.cols());
    }
}

void Adam::step(ParamStore& params) {
    if (params.size() != m_.size())
        throw TrainError("adam: parameter count changed since construction");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Param& p = params[i];
        if (!p.grad.same_shape(p.value))
            throw TrainError("adam: gradient shape mismatch for parameter " + p.name);
        if (!p.grad.all_finite())
            throw TrainError("adam: non-finite gradient for parameter " + p.name);
        const double lr = p.group == ParamGroup::Prototype ? cfg_.lr_pc : cfg_.lr;
        double* val = p.value.data();
        const double* g = p.grad.data();
        double* m = m_[i].data();
        double* v = v_[i].data();
        const std::size_t n = p.value.size();
        for (std::size_t k = 0; k < n; ++k) {
            m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * g[k];
            v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * g[k] * g[k];
            const double mhat = m[k] / bc1;
            const double vhat = v[k] / bc2;
            val[k] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

}  // namespace otgnn

#pragma once

#include <cstdint>
#include <vector>

#include "otgnn/params.hpp"

namespace otgnn {

struct AdamConfig {
    double lr = 5e-4;      // Main group
    double lr_pc = 5e-3;   // Prototype group
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Adam with bias correction and per-group learning rates. Moment tensors
/// mirror the parameter shapes; the step counter advances once per step()
/// call across all parameters.
class Adam {
public:
    Adam(const ParamStore& params, AdamConfig cfg);

    /// Applies one update from the gradients currently stored in `params`.
    void step(ParamStore& params);

    std::int64_t step_count() const { return t_; }

private:
    AdamConfig cfg_;
    std::vector<Tensor> m_, v_;
    std::int64_t t_ = 0;
};

}  // namespace otgnn

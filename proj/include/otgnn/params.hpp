#pragma once

#include <string>
#include <vector>

#include "otgnn/tensor.hpp"

namespace otgnn {

/// Learning-rate group: the encoder/MLP/projection parameters train at `lr`,
/// the prototype point clouds at `lr_pc`.
enum class ParamGroup { Main, Prototype };

struct Param {
    std::string name;
    Tensor value;
    Tensor grad;
    ParamGroup group = ParamGroup::Main;
};

/// Named trainable tensors with externally accumulated gradients. Order is
/// insertion order and is part of the determinism contract.
class ParamStore {
public:
    int add(std::string name, Tensor value, ParamGroup group) {
        Param p;
        p.name = std::move(name);
        p.grad = Tensor(value.rows(), value.cols());
        p.value = std::move(value);
        p.group = group;
        items_.push_back(std::move(p));
        return static_cast<int>(items_.size()) - 1;
    }

    std::size_t size() const { return items_.size(); }
    Param& operator[](std::size_t i) { return items_[i]; }
    const Param& operator[](std::size_t i) const { return items_[i]; }

    Param* find(const std::string& name) {
        for (auto& p : items_)
            if (p.name == name) return &p;
        return nullptr;
    }
    const Param* find(const std::string& name) const {
        for (const auto& p : items_)
            if (p.name == name) return &p;
        return nullptr;
    }

    void zero_grads() {
        for (auto& p : items_)
            for (double& g : p.grad.values()) g = 0.0;
    }

    auto begin() { return items_.begin(); }
    auto end() { return items_.end(); }
    auto begin() const { return items_.begin(); }
    auto end() const { return items_.end(); }

private:
    std::vector<Param> items_;
};

}  // namespace otgnn

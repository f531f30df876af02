#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <span>
#include <vector>

#include "otgnn/cost.hpp"
#include "otgnn/rng.hpp"
#include "otgnn/tensor.hpp"

namespace otgnn {

using NodeId = std::int32_t;

/// Row-gather lists in CSR form: output row i sums input rows
/// indices[offsets[i] .. offsets[i+1]). Shared between tapes since the
/// gather pattern of a graph never changes.
struct GatherPlan {
    std::vector<std::int32_t> offsets;
    std::vector<std::int32_t> indices;
    int num_out() const { return static_cast<int>(offsets.size()) - 1; }
};

/// Recorded computation graph for reverse-mode differentiation.
///
/// Nodes are appended in topological order (inputs always precede their
/// consumers) and hold the forward values needed by the backward sweep.
/// A tape is single-owner while recording; disjoint tapes may run
/// concurrently. Leaf nodes either own their value or borrow a pointer to an
/// externally owned tensor (model parameters), which must outlive the tape.
class Tape {
public:
    /// Leaf owning its value.
    NodeId leaf(Tensor value, bool requires_grad = false);
    /// Leaf borrowing an external value (not copied; must outlive the tape).
    NodeId borrow(const Tensor* value, bool requires_grad);
    NodeId constant(Tensor value) { return leaf(std::move(value), false); }

    NodeId matmul(NodeId a, NodeId b);
    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);  // elementwise
    NodeId scale(NodeId a, double s);
    NodeId relu(NodeId a);
    NodeId sigmoid(NodeId a);
    NodeId concat_cols(NodeId a, NodeId b);
    NodeId sum(NodeId a);   // 1×1
    NodeId mean(NodeId a);  // 1×1
    /// n×d → 1×d; each column is accumulated in ascending value order, so the
    /// result is invariant under row permutations bit-for-bit.
    NodeId sum_rows(NodeId a);
    /// log Σ exp over all entries, max-subtracted for stability; 1×1.
    NodeId log_sum_exp(NodeId a);
    /// k scalar nodes → 1×k row vector.
    NodeId stack_scalars(std::span<const NodeId> parts);
    /// Train mode zeroes entries with probability p and rescales survivors by
    /// 1/(1−p); eval mode is the identity. Requires 0 ≤ p < 1.
    NodeId dropout(NodeId a, double p, bool train_mode, Rng& rng);
    /// Output row i = Σ input rows listed in plan row i (empty list → zeros).
    NodeId gather_sum(NodeId a, std::shared_ptr<const GatherPlan> plan);
    /// Fixed-plan transport cost: scale·Σ_ij T_ij c(x_i, y_j) as a scalar
    /// node. The plan is a constant; gradients flow through the cost terms
    /// only (envelope-theorem backward).
    NodeId transport_cost(NodeId cloud_x, NodeId cloud_y, Tensor plan, CostKind kind,
                          double scale);
    NodeId squared_error(NodeId pred, double target);
    NodeId bce_with_logits(NodeId logit, double label);

    const Tensor& value(NodeId id) const;
    bool requires_grad(NodeId id) const;
    int num_nodes() const { return static_cast<int>(nodes_.size()); }

    /// Reverse sweep from a scalar loss. Gradients of all reachable nodes
    /// that require them are accumulated; leaves never reached keep zeros.
    void backward(NodeId loss);

    /// Gradient of the last backward() w.r.t. this node (zeros if unreached).
    const Tensor& grad(NodeId id);

private:
    enum class Op : std::uint8_t {
        Leaf, MatMul, Add, Sub, Mul, Scale, Relu, Sigmoid, ConcatCols, Sum, Mean,
        SumRows, LogSumExp, StackScalars, Dropout, GatherSum, TransportCost,
        SquaredError, BceWithLogits,
    };

    struct Node {
        Op op = Op::Leaf;
        NodeId a = -1, b = -1;
        double scalar = 0.0;  // scale factor / regression target / BCE label
        Tensor val;
        const Tensor* ext = nullptr;  // set for borrowed leaves
        Tensor aux;                   // dropout mask / transport plan
        std::vector<NodeId> parts;    // StackScalars inputs
        std::shared_ptr<const GatherPlan> gather;
        CostKind cost_kind = CostKind::SquaredL2;
        double cost_scale = 1.0;
        bool needs_grad = false;
    };

    const Tensor& val_of(const Node& n) const { return n.ext ? *n.ext : n.val; }
    NodeId push(Node n);
    Node& node(NodeId id);
    const Node& node(NodeId id) const;
    void check_id(NodeId id) const;
    Tensor& grad_buf(NodeId id);
    void backward_node(NodeId id);

    std::deque<Node> nodes_;  // deque: value() references stay valid as nodes are appended
    std::vector<Tensor> grads_;
    bool ran_backward_ = false;
};

}  // namespace otgnn

#pragma once

#include <span>
#include <vector>

#include "otgnn/cost.hpp"
#include "otgnn/tape.hpp"

namespace otgnn {

/// Linear map from encoder space into prototype space: cloud (n×hidden) ·
/// proj (hidden×d_pc).
NodeId project_nodes(Tape& tape, NodeId cloud, NodeId proj);

struct ReadoutResult {
    NodeId vector = -1;        // 1×M of size-scaled Wasserstein distances
    std::vector<Tensor> plans; // optimal plan per prototype, cached for reuse
};

/// Entry i = n·N·W(cloud, Q_i) under `kind`, where W uses normalized
/// marginals and the n·N factor restores extensivity in the cloud size. The
/// plan is solved exactly per prototype and held fixed for gradients.
ReadoutResult proto_readout(Tape& tape, NodeId projected_cloud,
                            std::span<const NodeId> protos, CostKind kind);

/// ProtoS-L2: entry i = ‖Σ_v h'_v − q_i‖² against single-point prototypes.
NodeId proto_s_readout(Tape& tape, NodeId projected_cloud, std::span<const NodeId> protos);

/// One hidden layer with ReLU and dropout, then a scalar output.
NodeId mlp_head(Tape& tape, NodeId rep, NodeId w1, NodeId b1, NodeId w2, NodeId b2,
                double dropout, bool train_mode, Rng* rng);

}  // namespace otgnn

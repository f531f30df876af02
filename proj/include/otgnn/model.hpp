#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "otgnn/cost.hpp"
#include "otgnn/graph.hpp"
#include "otgnn/params.hpp"
#include "otgnn/protohead.hpp"
#include "otgnn/smiles.hpp"
#include "otgnn/tape.hpp"

namespace otgnn {

enum class HeadKind { ProtoW_L2, ProtoW_Dot, ProtoS_L2, BaselineSum };

std::string head_name(HeadKind head);
HeadKind head_from_name(const std::string& name);
bool head_uses_ot(HeadKind head);
bool head_uses_protos(HeadKind head);

struct ModelConfig {
    HeadKind head = HeadKind::ProtoW_L2;
    CostKind cost = CostKind::SquaredL2;
    int n_layers = 5;
    int n_hidden = 200;
    int n_ffn_hidden = 100;
    double dropout_gnn = 0.0;
    double dropout_fnn = 0.0;
    int n_pc = 10;      // M prototypes
    int pc_size = 10;   // N points each (forced to 1 for ProtoS-L2)
    int pc_hidden = 10; // prototype-space dimension
    int node_feat_dim = kNodeFeatureDim;
    int edge_feat_dim = kEdgeFeatureDim;

    void validate() const;  // throws ConfigError naming the offending field
};

struct ForwardResult {
    NodeId prediction = -1;       // 1×1 raw score (sigmoid applied in the loss)
    NodeId representation = -1;   // readout vector / aggregated embedding
    NodeId projected_cloud = -1;  // proto heads only
    std::vector<NodeId> proto_leafs;
    std::vector<Tensor> plans;                      // ProtoW heads only
    std::vector<std::pair<int, NodeId>> param_nodes;  // (param index, leaf id)
};

/// The full network: D-MPNN encoder, one of the four readout heads, and the
/// output MLP. Parameters live here; forward passes borrow them onto
/// per-graph tapes, so disjoint graphs may run concurrently.
class Model {
public:
    ModelConfig config;
    ParamStore params;

    static Model init(const ModelConfig& config, std::uint64_t seed);

    ForwardResult forward(Tape& tape, const Graph& g, bool train_mode, Rng* rng) const;

    /// Representation fed to the final MLP (eval mode): the readout vector
    /// for prototype heads, the aggregated embedding for BaselineSum.
    Tensor representation(const Graph& g) const;

    /// Raw scalar prediction in eval mode (standardized scale for regression).
    double predict(const Graph& g) const;

    /// Per-prototype optimal transport plans for one graph (ProtoW heads).
    std::vector<Tensor> transport_plans(const Graph& g) const;
};

}  // namespace otgnn

#pragma once

#include "otgnn/graph.hpp"
#include "otgnn/tape.hpp"

namespace otgnn {

/// Tape leaf ids of the three D-MPNN weight matrices, stored in row-operand
/// layout: w_in is (F_v+F_e)×hidden, w_msg hidden×hidden, w_out
/// (F_v+hidden)×hidden. Hidden states live on directed edges, one row each.
struct EncoderLeafs {
    NodeId w_in = -1;
    NodeId w_msg = -1;
    NodeId w_out = -1;
};

struct EncoderHooks {
    double dropout = 0.0;  // applied after each ReLU when training
    bool train_mode = false;
    Rng* rng = nullptr;
};

/// h⁰_{vw} = ReLU(cat(x_v, e_vw)·W_in), one row per directed edge.
NodeId init_edge_states(Tape& tape, const Graph& g, NodeId w_in);

/// One step: m_{vw} = Σ_{k∈N(v)∖{w}} h_{kv} (reverse edge excluded, empty
/// neighborhood gives a zero message), then ReLU(h⁰ + m·W_msg).
NodeId message_pass(Tape& tape, const Graph& g, NodeId h0, NodeId states, NodeId w_msg);

/// Full encoder: init, `steps` message-passing rounds, then per node
/// m_v = Σ_{w∈N(v)} h_{vw} and h_v = ReLU(cat(x_v, m_v)·W_out).
/// Returns the node-embedding point cloud, |V|×hidden.
NodeId node_embeddings(Tape& tape, const Graph& g, const EncoderLeafs& weights, int steps,
                       const EncoderHooks& hooks = {});

/// Column sums of the cloud (the baseline graph embedding); permutation
/// invariant bit-for-bit. Errors on an empty cloud.
NodeId aggregate(Tape& tape, NodeId cloud);

}  // namespace otgnn

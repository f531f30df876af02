#pragma once

#include <memory>
#include <string>
#include <vector>

#include "otgnn/tape.hpp"
#include "otgnn/tensor.hpp"

namespace otgnn {

struct DirectedEdge {
    int src = 0;
    int dst = 0;
};

/// A featurized molecular graph ready for message passing. Every bond is
/// stored as two directed edges; edges are sorted by (src, dst) so that all
/// per-node summations run in sorted neighbor order and runs are
/// bit-reproducible.
struct Graph {
    std::string id;
    Tensor node_features;             // V × F_v, entries in {0,1}
    std::vector<DirectedEdge> edges;  // 2 × bond count, sorted
    Tensor edge_features;             // E × F_e
    double label = 0.0;
    bool has_label = false;

    // Derived message-passing structure, built once by finalize().
    std::shared_ptr<const GatherPlan> msg_gather;   // per edge (v,w): edges (k,v), k ≠ w
    std::shared_ptr<const GatherPlan> node_gather;  // per node v: edges (v, ·)
    Tensor edge_inputs;                             // E × (F_v+F_e): cat(x_src, e_feat)

    int num_nodes() const { return node_features.rows(); }
    int num_edges() const { return static_cast<int>(edges.size()); }

    /// Sorts edges, precomputes gather plans and the per-edge input rows.
    void finalize();
};

}  // namespace otgnn

#include "otgnn/model.hpp"

#include <cmath>

#include "otgnn/encoder.hpp"
#include "otgnn/errors.hpp"
#include "otgnn/ot.hpp"

namespace otgnn {

NodeId project_nodes(Tape& tape, NodeId cloud, NodeId proj) {
    return tape.matmul(cloud, proj);
}

ReadoutResult proto_readout(Tape& tape, NodeId projected_cloud, std::span<const NodeId> protos,
                            CostKind kind) {
    const Tensor& cloud = tape.value(projected_cloud);
    if (cloud.rows() < 1) throw ShapeError("proto_readout: empty point cloud");
    ReadoutResult result;
    result.plans.reserve(protos.size());
    std::vector<NodeId> entries;
    entries.reserve(protos.size());
    for (const NodeId proto : protos) {
        const Tensor& q = tape.value(proto);
        const Tensor costs = cost_matrix(cloud, q, kind);
        TransportPlan plan = emd_exact(costs);
        const double scale = static_cast<double>(cloud.rows()) * static_cast<double>(q.rows());
        entries.push_back(tape.transport_cost(projected_cloud, proto, plan.matrix, kind, scale));
        result.plans.push_back(std::move(plan.matrix));
    }
    result.vector = tape.stack_scalars(entries);
    return result;
}

NodeId proto_s_readout(Tape& tape, NodeId projected_cloud, std::span<const NodeId> protos) {
    const NodeId aggregated = tape.sum_rows(projected_cloud);
    std::vector<NodeId> entries;
    entries.reserve(protos.size());
    for (const NodeId proto : protos) {
        if (tape.value(proto).rows() != 1)
            throw ShapeError("proto_s_readout: prototypes must be single points");
        const NodeId diff = tape.sub(aggregated, proto);
        entries.push_back(tape.sum(tape.mul(diff, diff)));
    }
    return tape.stack_scalars(entries);
}

NodeId mlp_head(Tape& tape, NodeId rep, NodeId w1, NodeId b1, NodeId w2, NodeId b2,
                double dropout, bool train_mode, Rng* rng) {
    NodeId hidden = tape.relu(tape.add(tape.matmul(rep, w1), b1));
    if (dropout > 0.0 && train_mode && rng != nullptr)
        hidden = tape.dropout(hidden, dropout, true, *rng);
    return tape.add(tape.matmul(hidden, w2), b2);
}

std::string head_name(HeadKind head) {
    switch (head) {
        case HeadKind::ProtoW_L2: return "ProtoW-L2";
        case HeadKind::ProtoW_Dot: return "ProtoW-Dot";
        case HeadKind::ProtoS_L2: return "ProtoS-L2";
        case HeadKind::BaselineSum: return "BaselineSum";
    }
    return "?";
}

HeadKind head_from_name(const std::string& name) {
    if (name == "ProtoW-L2") return HeadKind::ProtoW_L2;
    if (name == "ProtoW-Dot") return HeadKind::ProtoW_Dot;
    if (name == "ProtoS-L2") return HeadKind::ProtoS_L2;
    if (name == "BaselineSum") return HeadKind::BaselineSum;
    throw ConfigError("unknown head '" + name +
                      "' (expected ProtoW-L2|ProtoW-Dot|ProtoS-L2|BaselineSum)");
}

bool head_uses_ot(HeadKind head) {
    return head == HeadKind::ProtoW_L2 || head == HeadKind::ProtoW_Dot;
}

bool head_uses_protos(HeadKind head) { return head != HeadKind::BaselineSum; }

void ModelConfig::validate() const {
    const auto positive = [](int v, const char* field) {
        if (v < 1) throw ConfigError(std::string("config field ") + field + " must be >= 1");
    };
    positive(n_layers, "n_layers");
    positive(n_hidden, "n_hidden");
    positive(n_ffn_hidden, "n_ffn_hidden");
    positive(n_pc, "n_pc");
    positive(pc_size, "pc_size");
    positive(pc_hidden, "pc_hidden");
    positive(node_feat_dim, "node_feat_dim");
    positive(edge_feat_dim, "edge_feat_dim");
    if (dropout_gnn < 0.0 || dropout_gnn >= 1.0)
        throw ConfigError("config field dropout_gnn must be in [0,1)");
    if (dropout_fnn < 0.0 || dropout_fnn >= 1.0)
        throw ConfigError("config field dropout_fnn must be in [0,1)");
    if (head == HeadKind::ProtoW_L2 && cost != CostKind::SquaredL2)
        throw ConfigError("config field cost must be SquaredL2 for head ProtoW-L2");
    if (head == HeadKind::ProtoW_Dot && cost != CostKind::NegativeDot)
        throw ConfigError("config field cost must be NegativeDot for head ProtoW-Dot");
}

namespace {

Tensor glorot(int rows, int cols, Rng& rng) {
    const double bound = std::sqrt(6.0 / (rows + cols));
    Tensor t(rows, cols);
    for (double& v : t.values()) v = rng.uniform(-bound, bound);
    return t;
}

}  // namespace

Model Model::init(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    Model model;
    model.config = config;
    if (model.config.head == HeadKind::ProtoS_L2) model.config.pc_size = 1;
    const ModelConfig& cfg = model.config;

    Rng rng(seed);
    const int edge_in = cfg.node_feat_dim + cfg.edge_feat_dim;
    model.params.add("encoder.w_in", glorot(edge_in, cfg.n_hidden, rng), ParamGroup::Main);
    model.params.add("encoder.w_msg", glorot(cfg.n_hidden, cfg.n_hidden, rng), ParamGroup::Main);
    model.params.add("encoder.w_out", glorot(cfg.node_feat_dim + cfg.n_hidden, cfg.n_hidden, rng),
                     ParamGroup::Main);

    int mlp_in = cfg.n_hidden;
    if (head_uses_protos(cfg.head)) {
        model.params.add("proj", glorot(cfg.n_hidden, cfg.pc_hidden, rng), ParamGroup::Main);
        for (int i = 0; i < cfg.n_pc; ++i) {
            Tensor proto(cfg.pc_size, cfg.pc_hidden);
            for (double& v : proto.values()) v = rng.uniform(-1.0, 1.0);
            model.params.add("proto." + std::to_string(i), std::move(proto),
                             ParamGroup::Prototype);
        }
        mlp_in = cfg.n_pc;
    }
    model.params.add("mlp.w1", glorot(mlp_in, cfg.n_ffn_hidden, rng), ParamGroup::Main);
    model.params.add("mlp.b1", Tensor(1, cfg.n_ffn_hidden), ParamGroup::Main);
    model.params.add("mlp.w2", glorot(cfg.n_ffn_hidden, 1, rng), ParamGroup::Main);
    model.params.add("mlp.b2", Tensor(1, 1), ParamGroup::Main);
    return model;
}

ForwardResult Model::forward(Tape& tape, const Graph& g, bool train_mode, Rng* rng) const {
    if (g.num_nodes() < 1) throw ShapeError("forward: graph has no nodes");
    if (g.node_features.cols() != config.node_feat_dim)
        throw ShapeError("forward: node feature width " +
                         std::to_string(g.node_features.cols()) + " != configured " +
                         std::to_string(config.node_feat_dim));

    ForwardResult out;
    const auto leaf_of = [&](const char* name) {
        const Param* p = params.find(name);
        if (p == nullptr) throw Error(std::string("forward: missing parameter ") + name);
        const int index = static_cast<int>(p - &params[0]);
        const NodeId id = tape.borrow(&p->value, true);
        out.param_nodes.emplace_back(index, id);
        return id;
    };

    EncoderLeafs enc;
    enc.w_in = leaf_of("encoder.w_in");
    enc.w_msg = leaf_of("encoder.w_msg");
    enc.w_out = leaf_of("encoder.w_out");
    EncoderHooks hooks;
    hooks.dropout = config.dropout_gnn;
    hooks.train_mode = train_mode;
    hooks.rng = rng;
    const NodeId cloud = node_embeddings(tape, g, enc, config.n_layers, hooks);

    if (head_uses_protos(config.head)) {
        const NodeId proj = leaf_of("proj");
        out.projected_cloud = project_nodes(tape, cloud, proj);
        out.proto_leafs.reserve(static_cast<std::size_t>(config.n_pc));
        for (int i = 0; i < config.n_pc; ++i)
            out.proto_leafs.push_back(leaf_of(("proto." + std::to_string(i)).c_str()));
        if (head_uses_ot(config.head)) {
            ReadoutResult readout =
                proto_readout(tape, out.projected_cloud, out.proto_leafs, config.cost);
            out.representation = readout.vector;
            out.plans = std::move(readout.plans);
        } else {
            out.representation = proto_s_readout(tape, out.projected_cloud, out.proto_leafs);
        }
    } else {
        out.representation = aggregate(tape, cloud);
    }

    out.prediction = mlp_head(tape, out.representation, leaf_of("mlp.w1"), leaf_of("mlp.b1"),
                              leaf_of("mlp.w2"), leaf_of("mlp.b2"), config.dropout_fnn,
                              train_mode, rng);
    return out;
}

Tensor Model::representation(const Graph& g) const {
    Tape tape;
    return tape.value(forward(tape, g, false, nullptr).representation);
}

double Model::predict(const Graph& g) const {
    Tape tape;
    return tape.value(forward(tape, g, false, nullptr).prediction).at(0, 0);
}

std::vector<Tensor> Model::transport_plans(const Graph& g) const {
    if (!head_uses_ot(config.head))
        throw ConfigError("transport plans are only defined for ProtoW heads");
    Tape tape;
    return forward(tape, g, false, nullptr).plans;
}

}  // namespace otgnn

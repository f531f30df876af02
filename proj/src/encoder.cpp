#include "otgnn/encoder.hpp"

#include "otgnn/errors.hpp"

namespace otgnn {

NodeId init_edge_states(Tape& tape, const Graph& g, NodeId w_in) {
    const NodeId inputs = tape.borrow(&g.edge_inputs, false);
    return tape.relu(tape.matmul(inputs, w_in));
}

NodeId message_pass(Tape& tape, const Graph& g, NodeId h0, NodeId states, NodeId w_msg) {
    const NodeId messages = tape.gather_sum(states, g.msg_gather);
    return tape.relu(tape.add(h0, tape.matmul(messages, w_msg)));
}

NodeId node_embeddings(Tape& tape, const Graph& g, const EncoderLeafs& weights, int steps,
                       const EncoderHooks& hooks) {
    if (steps < 1) throw ConfigError("node_embeddings: steps must be >= 1");
    const auto maybe_dropout = [&](NodeId x) {
        if (hooks.dropout > 0.0 && hooks.train_mode && hooks.rng != nullptr)
            return tape.dropout(x, hooks.dropout, true, *hooks.rng);
        return x;
    };

    const NodeId h0 = init_edge_states(tape, g, weights.w_in);
    NodeId states = h0;
    for (int t = 0; t < steps; ++t)
        states = maybe_dropout(message_pass(tape, g, h0, states, weights.w_msg));

    const NodeId node_msgs = tape.gather_sum(states, g.node_gather);
    const NodeId node_feats = tape.borrow(&g.node_features, false);
    const NodeId cloud =
        tape.relu(tape.matmul(tape.concat_cols(node_feats, node_msgs), weights.w_out));
    return maybe_dropout(cloud);
}

NodeId aggregate(Tape& tape, NodeId cloud) {
    if (tape.value(cloud).rows() < 1)
        throw ShapeError("aggregate: empty node-embedding cloud");
    return tape.sum_rows(cloud);
}

}  // namespace otgnn

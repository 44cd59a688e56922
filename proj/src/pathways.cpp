#include "duet/pathways.hpp"

#include <cmath>

namespace duet {

NodeId apply_activation(Tape& tape, NodeId x, Activation act) {
    switch (act) {
        case Activation::relu: return tape.relu(x);
        case Activation::tanh: return tape.tanh_act(x);
    }
    throw ContractError("unknown activation");
}

EncoderState encode_input(Tape& tape, const KnowledgeGraph& g, Parameter& rel_emb, int head,
                          int rel, int encoder_layers, const Triple* excluded) {
    if (head < 0 || static_cast<size_t>(head) >= g.n_entities())
        throw ContractError("encode_input: head id out of range");
    if (rel < 0 || static_cast<size_t>(rel) >= g.n_relations_total())
        throw ContractError("encode_input: relation id out of range");
    EncoderState state;
    state.rel_emb = tape.watch(rel_emb);
    state.x0 = tape.seed_row(state.rel_emb, static_cast<size_t>(rel), static_cast<size_t>(head),
                             g.n_entities());
    for (int l = 0; l < encoder_layers; ++l)
        state.x0 = tape.neighbor_average(state.x0, g, excluded);
    return state;
}

NodeId local_forward(Tape& tape, const EncoderState& state, const KnowledgeGraph& g,
                     LocalPathway& pathway, const Triple* excluded) {
    NodeId x = state.x0;
    for (auto& layer : pathway.layers) {
        const NodeId agg = tape.relational_mean_pass(x, state.rel_emb, g, excluded);
        const NodeId mixed = tape.add(tape.matmul(agg, tape.watch(layer.weight)),
                                      tape.matmul(x, tape.watch(layer.self_weight)));
        x = apply_activation(tape, tape.add_row_bias(mixed, tape.watch(layer.bias)),
                             pathway.activation);
    }
    return x;
}

GlobalOut global_forward(Tape& tape, const EncoderState& state, GlobalPathway& pathway,
                         bool want_attention, size_t dense_cap) {
    GlobalOut out;
    NodeId x = state.x0;
    const size_t n = tape.value(x).rows();
    const size_t d = tape.value(x).cols();
    if (want_attention && n > dense_cap)
        throw ContractError("global_forward: dense attention requested for " + std::to_string(n) +
                            " entities, cap is " + std::to_string(dense_cap));
    const bool dense = want_attention || pathway.kernel == AttentionKernel::softmax;

    for (auto& layer : pathway.layers) {
        const NodeId q_in = tape.matmul(x, tape.watch(layer.w_query));
        const NodeId k_in = tape.matmul(x, tape.watch(layer.w_key));
        const NodeId v = tape.matmul(x, tape.watch(layer.w_value));
        if (pathway.kernel == AttentionKernel::softmax) {
            const NodeId scores =
                tape.scale(tape.matmul(q_in, tape.transpose(k_in)), 1.0 / std::sqrt(double(d)));
            const NodeId p = tape.softmax_rows(scores);
            out.attention = p;
            x = tape.matmul(p, v);
            continue;
        }
        // Linear kernel: positive feature map, row-normalized. The dense
        // route forms P explicitly; the streaming route computes the same
        // quantity as φ(Q)(φ(K)ᵀV) / φ(Q)(φ(K)ᵀ1).
        const NodeId qf = tape.softplus(q_in);
        const NodeId kf = tape.softplus(k_in);
        if (dense) {
            const NodeId raw = tape.matmul(qf, tape.transpose(kf));
            const NodeId p = tape.rows_scale(raw, tape.reciprocal(tape.row_sums(raw)));
            out.attention = p;
            x = tape.matmul(p, v);
        } else {
            const NodeId kv = tape.matmul(tape.transpose(kf), v);   // d x d
            const NodeId numer = tape.matmul(qf, kv);               // n x d
            const NodeId denom = tape.matvec(qf, tape.col_sums(kf));  // n
            x = tape.rows_scale(numer, tape.reciprocal(denom));
        }
    }
    out.z = x;
    if (!want_attention) out.attention = -1;
    return out;
}

}  // namespace duet

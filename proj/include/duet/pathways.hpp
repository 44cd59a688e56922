#pragma once

#include <optional>
#include <vector>

#include "duet/autodiff.hpp"
#include "duet/kg.hpp"

namespace duet {

enum class Activation { relu, tanh };
enum class AttentionKernel { softmax, linear };

NodeId apply_activation(Tape& tape, NodeId x, Activation act);

// Query-conditioned encoder state: X0 seeded with the query relation's
// embedding at the head row, every other row zero.
struct EncoderState {
    NodeId x0 = -1;      // |V| x d
    NodeId rel_emb = -1; // 2|R| x d, watched parameter node
};

// X0[h] = W_r[r], optionally refined by `encoder_layers` rounds of
// neighborhood averaging over the fact graph.
EncoderState encode_input(Tape& tape, const KnowledgeGraph& g, Parameter& rel_emb, int head,
                          int rel, int encoder_layers, const Triple* excluded = nullptr);

// One linear update per message-passing layer: aggregated messages and the
// node's previous state each get a matrix, plus a bias.
struct LocalLayer {
    Parameter weight;       // d x d, applied to aggregated messages
    Parameter self_weight;  // d x d, applied to the node's own state
    Parameter bias;         // d
};

struct LocalPathway {
    std::vector<LocalLayer> layers;
    Activation activation = Activation::relu;
};

// Per layer: relation-gated mean aggregation of neighbor features followed by
// a linear map and activation. Zero layers returns X0 unchanged.
NodeId local_forward(Tape& tape, const EncoderState& state, const KnowledgeGraph& g,
                     LocalPathway& pathway, const Triple* excluded = nullptr);

struct GlobalLayer {
    Parameter w_query, w_key, w_value;  // d x d each
};

struct GlobalPathway {
    std::vector<GlobalLayer> layers;
    AttentionKernel kernel = AttentionKernel::softmax;
};

struct GlobalOut {
    NodeId z = -1;
    NodeId attention = -1;  // dense row-stochastic P of the last layer, if requested
};

// Attention mixing over all entities. The softmax kernel materializes the
// |V|x|V| attention matrix; the linear kernel (softplus feature map) has a
// streaming route that never forms it. `want_attention` forces the dense
// route and returns P; it refuses graphs larger than `dense_cap`.
GlobalOut global_forward(Tape& tape, const EncoderState& state, GlobalPathway& pathway,
                         bool want_attention = false, size_t dense_cap = 10000);

}  // namespace duet

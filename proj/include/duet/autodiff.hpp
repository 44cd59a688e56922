#pragma once

#include <functional>
#include <string>
#include <vector>

#include "duet/tensor.hpp"

namespace duet {

// A named trainable tensor. Gradients accumulate across Tape::backward calls
// until zero_grad().
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;

    Parameter() = default;
    Parameter(std::string n, Tensor v)
        : name(std::move(n)), value(std::move(v)), grad(Tensor::zeros(value.shape)) {}

    void zero_grad() { std::fill(grad.data.begin(), grad.data.end(), 0.0); }
};

using NodeId = int;

enum class OpKind {
    constant,
    param,
    matmul,
    matvec,
    transpose,
    add,
    sub,
    mul,
    scale,
    neg,
    add_row_bias,
    relu,
    tanh_act,
    softplus,
    logistic,
    reciprocal,
    softmax_rows,
    row_sums,
    col_sums,
    sum_all,
    rows_scale,
    rows_mul,
    gather_rows,
    gather,
    lerp,
    seed_row,
    reshape,
    relational_mean_pass,
    neighbor_average,
};

class KnowledgeGraph;
struct Triple;

// Reverse-mode differentiation tape. Nodes are appended in topological order
// by construction; backward() walks them in reverse and adds each parent's
// contribution into its inputs' gradients, so reuse of a node accumulates.
//
// A tape is single-writer: build and differentiate it from one thread.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    NodeId constant(Tensor v);
    NodeId watch(Parameter& p);

    NodeId matmul(NodeId a, NodeId b);
    NodeId matvec(NodeId m, NodeId v);
    NodeId transpose(NodeId a);
    NodeId add(NodeId a, NodeId b);
    NodeId sub(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    NodeId scale(NodeId a, double c);
    NodeId neg(NodeId a);
    // m: r×c, bias: c; adds bias to every row.
    NodeId add_row_bias(NodeId m, NodeId bias);
    NodeId relu(NodeId a);
    NodeId tanh_act(NodeId a);
    NodeId softplus(NodeId a);
    NodeId logistic(NodeId a);
    NodeId reciprocal(NodeId a);
    NodeId softmax_rows(NodeId m);
    NodeId row_sums(NodeId m);   // r×c -> r
    NodeId col_sums(NodeId m);   // r×c -> c
    NodeId sum_all(NodeId a);    // -> scalar
    // out[i,:] = m[i,:] * s[i]
    NodeId rows_scale(NodeId m, NodeId s);
    // out[i,:] = m[i,:] ⊙ v  (v has length c)
    NodeId rows_mul(NodeId m, NodeId v);
    NodeId gather_rows(NodeId m, std::vector<size_t> rows);
    NodeId gather(NodeId v, std::vector<size_t> idx);
    // alpha·x + (1−alpha)·y with scalar node alpha
    NodeId lerp(NodeId alpha, NodeId x, NodeId y);
    // n×d matrix, all zero except row `target` which is emb[row].
    NodeId seed_row(NodeId emb, size_t emb_row, size_t target, size_t n_rows);
    NodeId reshape(NodeId a, Shape s);

    // Relation-aware mean aggregation: for every edge (u,r,v) of g not equal
    // to an excluded fact, out[v] += x[u] ⊙ rel[r] / indeg(v).
    NodeId relational_mean_pass(NodeId x, NodeId rel, const KnowledgeGraph& g,
                                const Triple* excluded);
    // out[v] = (x[v] + Σ_{(u,r,v)} x[u]) / (1 + indeg(v)), same edge exclusion.
    NodeId neighbor_average(NodeId x, const KnowledgeGraph& g, const Triple* excluded);

    const Tensor& value(NodeId id) const { return nodes_[static_cast<size_t>(id)].value; }
    OpKind kind(NodeId id) const { return nodes_[static_cast<size_t>(id)].kind; }
    size_t size() const { return nodes_.size(); }
    const std::vector<NodeId>& inputs_of(NodeId id) const {
        return nodes_[static_cast<size_t>(id)].inputs;
    }

    // Seeds d(loss)/d(loss)=1 and propagates to every watched Parameter's
    // grad. The loss must be scalar. Node gradients remain inspectable via
    // grad_of() until the next backward().
    void backward(NodeId loss);
    const Tensor& grad_of(NodeId id) const { return nodes_[static_cast<size_t>(id)].grad; }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        OpKind kind;
        std::vector<NodeId> inputs;
        std::function<void(Tape&, Node&)> back;  // null for leaves
        Parameter* param = nullptr;
    };

    NodeId push(OpKind kind, Tensor value, std::vector<NodeId> inputs,
                std::function<void(Tape&, Node&)> back);
    Node& node(NodeId id) { return nodes_[static_cast<size_t>(id)]; }
    Tensor& grad(NodeId id) { return nodes_[static_cast<size_t>(id)].grad; }

    std::vector<Node> nodes_;
};

}  // namespace duet

#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "duet/pathways.hpp"
#include "duet/spectral.hpp"

namespace duet {

struct ModelConfig {
    size_t hidden_dim = 32;
    int encoder_layers = 1;
    int local_layers = 2;   // message-passing depth
    int global_layers = 1;  // attention depth
    AttentionKernel kernel = AttentionKernel::softmax;
    Activation activation = Activation::relu;
};

// Row-wise scoring head: d -> d -> 1 with a 1-Lipschitz activation, so the
// product of layer spectral norms upper-bounds its Lipschitz constant.
struct ScoreMlp {
    Parameter w1, b1, w2, b2;
    Activation activation = Activation::relu;

    NodeId forward_rows(Tape& tape, NodeId z);  // m x d -> m
    double forward_row(const double* x, size_t d) const;
};

struct LipschitzEstimate {
    double l_f = 0.0;
    std::string method;
};

// Upper bound on the scoring head's Lipschitz constant: product of per-layer
// spectral norms (activations are 1-Lipschitz).
LipschitzEstimate estimate_lipschitz(const ScoreMlp& mlp);

// Convex combination alpha*local + (1-alpha)*global on the tape; alpha is the
// logistic image of an unconstrained parameter so it stays in (0,1).
NodeId fuse(Tape& tape, NodeId alpha, NodeId z_local, NodeId z_global);

// The dual-pathway scoring model. Entity-free: all parameters are relation
// embeddings, layer weights, the fusion logit and the scoring head, so a
// trained model transfers to graphs over unseen entities.
class DuetModel {
public:
    DuetModel(const ModelConfig& cfg, size_t n_relations_base, Rng& init);

    const ModelConfig& config() const { return cfg_; }
    size_t n_relations_base() const { return n_relations_base_; }
    // Pointers into this object; rebuild after copying or moving the model.
    std::vector<Parameter*> parameters();
    double alpha() const;
    Parameter& fusion_logit() { return fusion_logit_; }
    const ScoreMlp& mlp() const { return mlp_; }
    ScoreMlp& mlp() { return mlp_; }
    Parameter& relation_embeddings() { return rel_emb_; }

    struct ForwardOut {
        NodeId z = -1;          // |V| x d fused representation
        NodeId z_local = -1;
        NodeId z_global = -1;
        NodeId attention = -1;  // dense attention matrix when requested
    };
    // Runs encoder + both pathways + fusion for a query (head, rel).
    ForwardOut forward(Tape& tape, const KnowledgeGraph& g, int head, int rel,
                       bool want_attention = false, const Triple* excluded = nullptr,
                       size_t dense_cap = 10000);

    // Scores of selected entity rows of z (training path scores only the
    // answer and its negatives).
    NodeId score_rows(Tape& tape, NodeId z, std::vector<size_t> rows);
    // Scores for every entity.
    NodeId score_entities(Tape& tape, NodeId z);

    // Non-tape convenience: full score vector for a query.
    std::vector<double> score_all(const KnowledgeGraph& g, int head, int rel,
                                  const Triple* excluded = nullptr);

    void save(const std::filesystem::path& path) const;
    static DuetModel load(const std::filesystem::path& path);

private:
    DuetModel() = default;

    ModelConfig cfg_;
    size_t n_relations_base_ = 0;
    Parameter rel_emb_;
    LocalPathway local_;
    GlobalPathway global_;
    Parameter fusion_logit_;  // alpha = logistic(value)
    ScoreMlp mlp_;
};

// Negative-sampling loss over a score vector node: position `answer_idx`
// holds the answer score, `negative_idxs` the negatives. Stabilized as
// softplus(-s_ans) + sum softplus(s_neg).
NodeId negative_sampling_loss(Tape& tape, NodeId scores, size_t answer_idx,
                              const std::vector<size_t>& negative_idxs);

}  // namespace duet

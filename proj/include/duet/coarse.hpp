#pragma once

#include <filesystem>
#include <memory>

#include "duet/model.hpp"
#include "duet/table.hpp"
#include "duet/train.hpp"

namespace duet {

struct CoarseConfig {
    size_t dim = 32;
    int local_layers = 1;  // structural scorer only
    TrainConfig train;
};

// Stage-1 scorer behind a pluggable interface. Implementations must return a
// finite score for every candidate entity of the graph.
class CoarseScorer {
public:
    virtual ~CoarseScorer() = default;
    virtual std::string kind() const = 0;
    virtual std::vector<double> score_all(const KnowledgeGraph& g, int head, int rel) const = 0;
    virtual void train(const DatasetSplit& split, const KnowledgeGraph& train_graph_aug,
                       Rng& rng) = 0;
    virtual void save(const std::filesystem::path& path) const = 0;
};

ScoreTable coarse_score_all(const CoarseScorer& scorer, const KnowledgeGraph& g, int head,
                            int rel);

// Multiplicative triplet scorer over learned entity and relation embeddings:
// score(h,r,t) = Σ_d E[h]_d R[r]_d E[t]_d. Transductive only — it has one
// embedding per training entity.
class TripletCoarse : public CoarseScorer {
public:
    TripletCoarse(size_t n_entities, size_t n_relations_base, const CoarseConfig& cfg, Rng& init);

    std::string kind() const override { return "triplet"; }
    double score(int h, int r, int t) const;
    std::vector<double> score_all(const KnowledgeGraph& g, int head, int rel) const override;
    void train(const DatasetSplit& split, const KnowledgeGraph& train_graph_aug,
               Rng& rng) override;
    void save(const std::filesystem::path& path) const override;

    Parameter& entity_embeddings() { return entities_; }
    Parameter& relation_embeddings() { return relations_; }

private:
    friend std::unique_ptr<CoarseScorer> load_coarse(const std::filesystem::path&);
    CoarseConfig cfg_;
    Parameter entities_;   // |V| x d
    Parameter relations_;  // 2|R| x d
};

// Entity-free fallback for inductive splits: a shallow query-conditioned
// message-passing scorer (local pathway only, linear head).
class StructuralCoarse : public CoarseScorer {
public:
    StructuralCoarse(size_t n_relations_base, const CoarseConfig& cfg, Rng& init);

    std::string kind() const override { return "structural"; }
    std::vector<double> score_all(const KnowledgeGraph& g, int head, int rel) const override;
    void train(const DatasetSplit& split, const KnowledgeGraph& train_graph_aug,
               Rng& rng) override;
    void save(const std::filesystem::path& path) const override;

private:
    friend std::unique_ptr<CoarseScorer> load_coarse(const std::filesystem::path&);
    std::vector<Parameter*> parameters();
    std::vector<double> score_all_impl(const KnowledgeGraph& g, int head, int rel,
                                       const Triple* excluded) const;
    NodeId forward_scores(Tape& tape, const KnowledgeGraph& g, int head, int rel,
                          const Triple* excluded);

    CoarseConfig cfg_;
    size_t n_relations_base_ = 0;
    Parameter rel_emb_;
    LocalPathway pathway_;
    Parameter head_w_, head_b_;
};

std::unique_ptr<CoarseScorer> make_coarse(const std::string& kind, const DatasetSplit& split,
                                          const CoarseConfig& cfg, Rng& init);
std::unique_ptr<CoarseScorer> load_coarse(const std::filesystem::path& path);

}  // namespace duet

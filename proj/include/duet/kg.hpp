#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "duet/errors.hpp"
#include "duet/rng.hpp"
#include "duet/tensor.hpp"

namespace duet {

// Dense id maps for entity and relation names. Ids are assigned in first-seen
// order, so a vocabulary built from the same files is always identical.
class Vocab {
public:
    int add_entity(const std::string& name);
    int add_relation(const std::string& name);
    int entity(const std::string& name) const;    // -1 when unknown
    int relation(const std::string& name) const;  // -1 when unknown
    const std::string& entity_name(int id) const { return entity_names_.at(static_cast<size_t>(id)); }
    const std::string& relation_name(int id) const {
        return relation_names_.at(static_cast<size_t>(id));
    }
    size_t n_entities() const { return entity_names_.size(); }
    size_t n_relations() const { return relation_names_.size(); }
    const std::vector<std::string>& entity_names() const { return entity_names_; }
    const std::vector<std::string>& relation_names() const { return relation_names_; }

private:
    std::unordered_map<std::string, int> entity_ids_, relation_ids_;
    std::vector<std::string> entity_names_, relation_names_;
};

struct Triple {
    int head = -1;
    int rel = -1;
    int tail = -1;
    friend bool operator==(const Triple&, const Triple&) = default;
};

// Directed labeled multigraph over a vocabulary. Triples are deduplicated at
// construction; the edge list keeps insertion order, which downstream
// aggregation relies on for reproducibility.
class KnowledgeGraph {
public:
    KnowledgeGraph() = default;
    KnowledgeGraph(Vocab vocab, std::vector<Triple> triples, size_t n_relations_base);

    const Vocab& vocab() const { return vocab_; }
    const std::vector<Triple>& triples() const { return triples_; }
    size_t n_entities() const { return vocab_.n_entities(); }
    // Relation count before inverse augmentation.
    size_t n_relations_base() const { return n_relations_base_; }
    // Relation id space actually used by the edge list (2x base when augmented).
    size_t n_relations_total() const { return inverses_added_ ? 2 * n_relations_base_ : n_relations_base_; }
    bool inverses_added() const { return inverses_added_; }
    int in_degree(int entity) const { return indeg_[static_cast<size_t>(entity)]; }
    bool has_triple(const Triple& t) const;

private:
    friend KnowledgeGraph add_inverse_relations(const KnowledgeGraph& kg);

    void rebuild_index();

    Vocab vocab_;
    std::vector<Triple> triples_;
    std::vector<int> indeg_;
    std::unordered_set<uint64_t> triple_set_;
    size_t n_relations_base_ = 0;
    bool inverses_added_ = false;
};

// Packs a triple into one key; entity and relation ids must fit in 21 bits,
// which covers every benchmark this tool targets.
uint64_t pack_triple(int h, int r, int t);

// Adds (t, r+|R|, h) for every (h, r, t). Relation names gain a "^-1" twin.
// Applying it twice is an error.
KnowledgeGraph add_inverse_relations(const KnowledgeGraph& kg);

enum class SplitMode { transductive, inductive };

// A benchmark split. `train_graph` carries the message-passing facts for
// training and validation queries; `test_graph` is the same graph in
// transductive mode and a disjoint-entity graph (shared relations) in
// inductive mode.
struct DatasetSplit {
    SplitMode mode = SplitMode::transductive;
    KnowledgeGraph train_graph;
    KnowledgeGraph test_graph;
    std::vector<Triple> train_queries;  // train-vocab ids
    std::vector<Triple> valid_queries;  // train-vocab ids
    std::vector<Triple> test_queries;   // test-vocab ids
};

// Reads train.txt / valid.txt / test.txt (3-field TSV) from `dir`. Inductive
// mode additionally reads facts.txt as the disjoint test fact graph, and
// test.txt queries are resolved against that graph's entities. Graphs are
// returned without inverse augmentation.
DatasetSplit load_split(const std::filesystem::path& dir, SplitMode mode);

// Symmetrically normalized dense adjacency D̂^{-1/2} Â D̂^{-1/2} of the
// undirected entity co-occurrence graph, optionally with self-loops. Intended
// for diagnostics at small |V|; a zero-degree vertex without self-loops is an
// error.
Tensor build_normalized_adjacency(const KnowledgeGraph& kg, bool add_self_loops);

// `count` entity ids drawn uniformly with replacement from V \ {answer}.
std::vector<int> sample_negatives(size_t n_entities, int answer, size_t count, Rng& rng);

// Hash index over known triples for filtered ranking.
class TripleIndex {
public:
    void insert(const Triple& t) { keys_.insert(pack_triple(t.head, t.rel, t.tail)); }
    void insert_all(const std::vector<Triple>& ts) {
        for (const auto& t : ts) insert(t);
    }
    bool contains(int h, int r, int t) const { return keys_.count(pack_triple(h, r, t)) > 0; }
    size_t size() const { return keys_.size(); }

private:
    std::unordered_set<uint64_t> keys_;
};

// mask[v] is true for the answer and for every v with (h,r,v) unknown; other
// known answers are masked out.
std::vector<uint8_t> filtered_candidates(int h, int r, int answer, size_t n_entities,
                                         const TripleIndex& known);

}  // namespace duet

#include "duet/kg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>

namespace duet {

int Vocab::add_entity(const std::string& name) {
    auto it = entity_ids_.find(name);
    if (it != entity_ids_.end()) return it->second;
    const int id = static_cast<int>(entity_names_.size());
    entity_ids_.emplace(name, id);
    entity_names_.push_back(name);
    return id;
}

int Vocab::add_relation(const std::string& name) {
    auto it = relation_ids_.find(name);
    if (it != relation_ids_.end()) return it->second;
    const int id = static_cast<int>(relation_names_.size());
    relation_ids_.emplace(name, id);
    relation_names_.push_back(name);
    return id;
}

int Vocab::entity(const std::string& name) const {
    auto it = entity_ids_.find(name);
    return it == entity_ids_.end() ? -1 : it->second;
}

int Vocab::relation(const std::string& name) const {
    auto it = relation_ids_.find(name);
    return it == relation_ids_.end() ? -1 : it->second;
}

uint64_t pack_triple(int h, int r, int t) {
    constexpr uint64_t cap = 1ULL << 21;
    const auto hu = static_cast<uint64_t>(h), ru = static_cast<uint64_t>(r),
               tu = static_cast<uint64_t>(t);
    if (hu >= cap || ru >= cap || tu >= cap)
        throw ContractError("pack_triple: id exceeds 21-bit capacity");
    return (hu << 42) | (ru << 21) | tu;
}

KnowledgeGraph::KnowledgeGraph(Vocab vocab, std::vector<Triple> triples, size_t n_relations_base)
    : vocab_(std::move(vocab)), n_relations_base_(n_relations_base) {
    triples_.reserve(triples.size());
    for (const auto& t : triples) {
        if (t.head < 0 || t.tail < 0 || static_cast<size_t>(t.head) >= vocab_.n_entities() ||
            static_cast<size_t>(t.tail) >= vocab_.n_entities())
            throw ContractError("triple entity id out of vocab bounds");
        if (t.rel < 0 || static_cast<size_t>(t.rel) >= n_relations_base_)
            throw ContractError("triple relation id out of vocab bounds");
        if (triple_set_.insert(pack_triple(t.head, t.rel, t.tail)).second) triples_.push_back(t);
    }
    rebuild_index();
}

void KnowledgeGraph::rebuild_index() {
    indeg_.assign(vocab_.n_entities(), 0);
    for (const auto& t : triples_) indeg_[static_cast<size_t>(t.tail)] += 1;
}

bool KnowledgeGraph::has_triple(const Triple& t) const {
    return triple_set_.count(pack_triple(t.head, t.rel, t.tail)) > 0;
}

KnowledgeGraph add_inverse_relations(const KnowledgeGraph& kg) {
    if (kg.inverses_added_)
        throw ContractError("add_inverse_relations: inverses already present");
    KnowledgeGraph out;
    out.vocab_ = kg.vocab_;
    const int base = static_cast<int>(kg.n_relations_base_);
    for (int r = 0; r < base; ++r)
        out.vocab_.add_relation(kg.vocab_.relation_name(r) + "^-1");
    out.n_relations_base_ = kg.n_relations_base_;
    out.inverses_added_ = true;
    out.triples_ = kg.triples_;
    out.triples_.reserve(kg.triples_.size() * 2);
    for (const auto& t : kg.triples_) out.triples_.push_back({t.tail, t.rel + base, t.head});
    out.triple_set_ = kg.triple_set_;
    for (const auto& t : kg.triples_)
        out.triple_set_.insert(pack_triple(t.tail, t.rel + base, t.head));
    out.rebuild_index();
    return out;
}

namespace {

struct RawFile {
    std::vector<std::array<std::string, 3>> rows;
};

RawFile read_tsv(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open " + file.string());
    RawFile out;
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const size_t tab1 = line.find('\t');
        const size_t tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
        if (tab1 == std::string::npos || tab2 == std::string::npos ||
            line.find('\t', tab2 + 1) != std::string::npos)
            throw ParseError("expected 3 tab-separated fields in " + file.filename().string(),
                             line_no);
        std::array<std::string, 3> row = {line.substr(0, tab1),
                                          line.substr(tab1 + 1, tab2 - tab1 - 1),
                                          line.substr(tab2 + 1)};
        if (row[0].empty() || row[1].empty() || row[2].empty())
            throw ParseError("empty field in " + file.filename().string(), line_no);
        out.rows.push_back(std::move(row));
    }
    return out;
}

std::vector<Triple> resolve_strict(const RawFile& raw, const Vocab& vocab, const char* what) {
    std::vector<Triple> out;
    out.reserve(raw.rows.size());
    for (const auto& row : raw.rows) {
        const int h = vocab.entity(row[0]);
        const int r = vocab.relation(row[1]);
        const int t = vocab.entity(row[2]);
        if (h < 0 || t < 0)
            throw DataError(std::string(what) + ": entity not in training vocabulary: " +
                            (h < 0 ? row[0] : row[2]));
        if (r < 0)
            throw DataError(std::string(what) + ": relation not in training vocabulary: " + row[1]);
        out.push_back({h, r, t});
    }
    return out;
}

std::vector<Triple> dedup(std::vector<Triple> ts) {
    std::unordered_set<uint64_t> seen;
    std::vector<Triple> out;
    out.reserve(ts.size());
    for (const auto& t : ts)
        if (seen.insert(pack_triple(t.head, t.rel, t.tail)).second) out.push_back(t);
    return out;
}

}  // namespace

DatasetSplit load_split(const std::filesystem::path& dir, SplitMode mode) {
    const RawFile train_raw = read_tsv(dir / "train.txt");
    const RawFile valid_raw = read_tsv(dir / "valid.txt");
    const RawFile test_raw = read_tsv(dir / "test.txt");

    Vocab vocab;
    std::vector<Triple> train_triples;
    train_triples.reserve(train_raw.rows.size());
    for (const auto& row : train_raw.rows)
        train_triples.push_back(
            {vocab.add_entity(row[0]), vocab.add_relation(row[1]), vocab.add_entity(row[2])});

    DatasetSplit split;
    split.mode = mode;
    const size_t n_rel = vocab.n_relations();
    split.train_graph = KnowledgeGraph(vocab, std::move(train_triples), n_rel);
    split.train_queries = split.train_graph.triples();
    split.valid_queries = dedup(resolve_strict(valid_raw, split.train_graph.vocab(), "valid.txt"));

    if (mode == SplitMode::transductive) {
        split.test_queries = dedup(resolve_strict(test_raw, split.train_graph.vocab(), "test.txt"));
        split.test_graph = split.train_graph;
        return split;
    }

    // Inductive: facts.txt is the message-passing graph of the held-out
    // entity universe; relations must already exist in the training vocab.
    const RawFile facts_raw = read_tsv(dir / "facts.txt");
    Vocab test_vocab;
    for (size_t r = 0; r < n_rel; ++r) test_vocab.add_relation(vocab.relation_name(static_cast<int>(r)));
    std::vector<Triple> fact_triples;
    fact_triples.reserve(facts_raw.rows.size());
    for (const auto& row : facts_raw.rows) {
        const int r = test_vocab.relation(row[1]);
        if (r < 0) throw DataError("facts.txt: relation not in training vocabulary: " + row[1]);
        fact_triples.push_back({test_vocab.add_entity(row[0]), r, test_vocab.add_entity(row[2])});
    }
    std::vector<Triple> test_triples;
    test_triples.reserve(test_raw.rows.size());
    for (const auto& row : test_raw.rows) {
        const int r = test_vocab.relation(row[1]);
        if (r < 0) throw DataError("test.txt: relation not in training vocabulary: " + row[1]);
        test_triples.push_back({test_vocab.add_entity(row[0]), r, test_vocab.add_entity(row[2])});
    }
    split.test_graph = KnowledgeGraph(test_vocab, std::move(fact_triples), n_rel);
    split.test_queries = dedup(test_triples);
    return split;
}

Tensor build_normalized_adjacency(const KnowledgeGraph& kg, bool add_self_loops) {
    const size_t n = kg.n_entities();
    Tensor a_hat = Tensor::zeros({n, n});
    for (const auto& t : kg.triples()) {
        if (t.head == t.tail) continue;
        a_hat.at(static_cast<size_t>(t.head), static_cast<size_t>(t.tail)) = 1.0;
        a_hat.at(static_cast<size_t>(t.tail), static_cast<size_t>(t.head)) = 1.0;
    }
    if (add_self_loops)
        for (size_t i = 0; i < n; ++i) a_hat.at(i, i) = 1.0;

    std::vector<double> inv_sqrt_deg(n);
    for (size_t i = 0; i < n; ++i) {
        double deg = 0.0;
        for (size_t j = 0; j < n; ++j) deg += a_hat.at(i, j);
        if (deg == 0.0)
            throw DataError("build_normalized_adjacency: zero-degree vertex " +
                            kg.vocab().entity_name(static_cast<int>(i)) +
                            " (enable self-loops or drop isolated vertices)");
        inv_sqrt_deg[i] = 1.0 / std::sqrt(deg);
    }
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j) a_hat.at(i, j) *= inv_sqrt_deg[i] * inv_sqrt_deg[j];
    return a_hat;
}

std::vector<int> sample_negatives(size_t n_entities, int answer, size_t count, Rng& rng) {
    if (n_entities < 2) throw ContractError("sample_negatives: need at least 2 entities");
    if (count < 1) throw ContractError("sample_negatives: count must be positive");
    std::vector<int> out(count);
    for (size_t i = 0; i < count; ++i) {
        auto v = static_cast<int>(rng.below(n_entities - 1));
        if (v >= answer) ++v;
        out[i] = v;
    }
    return out;
}

std::vector<uint8_t> filtered_candidates(int h, int r, int answer, size_t n_entities,
                                         const TripleIndex& known) {
    std::vector<uint8_t> mask(n_entities, 1);
    for (size_t v = 0; v < n_entities; ++v) {
        const int vi = static_cast<int>(v);
        if (vi == answer) continue;
        if (known.contains(h, r, vi)) mask[v] = 0;
    }
    return mask;
}

}  // namespace duet

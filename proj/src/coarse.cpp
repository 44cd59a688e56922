#include "duet/coarse.hpp"

#include <cmath>

#include "duet/checkpoint.hpp"

namespace duet {

ScoreTable coarse_score_all(const CoarseScorer& scorer, const KnowledgeGraph& g, int head,
                            int rel) {
    return ScoreTable::from_scores(scorer.score_all(g, head, rel));
}

// ---------------------------------------------------------------- triplet --

TripletCoarse::TripletCoarse(size_t n_entities, size_t n_relations_base, const CoarseConfig& cfg,
                             Rng& init)
    : cfg_(cfg) {
    const double std = 1.0 / std::sqrt(static_cast<double>(cfg.dim));
    entities_ = Parameter("entity_emb", Tensor::random_normal({n_entities, cfg.dim}, init, std));
    relations_ =
        Parameter("relation_emb", Tensor::random_normal({2 * n_relations_base, cfg.dim}, init, std));
}

double TripletCoarse::score(int h, int r, int t) const {
    const size_t d = cfg_.dim;
    const double* eh = &entities_.value.data[static_cast<size_t>(h) * d];
    const double* rr = &relations_.value.data[static_cast<size_t>(r) * d];
    const double* et = &entities_.value.data[static_cast<size_t>(t) * d];
    double acc = 0.0;
    for (size_t i = 0; i < d; ++i) acc += eh[i] * rr[i] * et[i];
    return acc;
}

std::vector<double> TripletCoarse::score_all(const KnowledgeGraph& g, int head, int rel) const {
    if (g.n_entities() != entities_.value.rows())
        throw ContractError("triplet coarse scorer was trained on a different entity set");
    const size_t n = g.n_entities(), d = cfg_.dim;
    std::vector<double> q(d);
    const double* eh = &entities_.value.data[static_cast<size_t>(head) * d];
    const double* rr = &relations_.value.data[static_cast<size_t>(rel) * d];
    for (size_t i = 0; i < d; ++i) q[i] = eh[i] * rr[i];
    std::vector<double> out(n, 0.0);
    for (size_t v = 0; v < n; ++v) {
        const double* ev = &entities_.value.data[v * d];
        double acc = 0.0;
        for (size_t i = 0; i < d; ++i) acc += ev[i] * q[i];
        out[v] = acc;
    }
    return out;
}

void TripletCoarse::train(const DatasetSplit& split, const KnowledgeGraph& graph, Rng& rng) {
    if (split.mode != SplitMode::inductive && split.mode != SplitMode::transductive)
        throw ContractError("unknown split mode");
    if (split.mode == SplitMode::inductive)
        throw ContractError(
            "triplet coarse scorer cannot train on inductive splits (unseen test entities have "
            "no embedding); use the structural scorer");
    const int base = static_cast<int>(graph.n_relations_base());
    const size_t n = graph.n_entities(), d = cfg_.dim;

    std::vector<Parameter*> params = {&entities_, &relations_};
    AdamState opt(params, cfg_.train.lr, cfg_.train.weight_decay);
    for (int epoch = 0; epoch < cfg_.train.epochs; ++epoch) {
        struct Q {
            int head, rel, answer;
        };
        std::vector<Q> queries;
        queries.reserve(split.train_queries.size() * 2);
        for (const auto& f : split.train_queries) {
            queries.push_back({f.head, f.rel, f.tail});
            queries.push_back({f.tail, f.rel + base, f.head});
        }
        rng.shuffle(queries);
        for (const auto& q : queries) {
            const std::vector<int> negs = sample_negatives(n, q.answer, cfg_.train.negatives, rng);
            Tape tape;
            const NodeId e = tape.watch(entities_);
            const NodeId r = tape.watch(relations_);
            const NodeId eh = tape.reshape(tape.gather_rows(e, {static_cast<size_t>(q.head)}), {d});
            const NodeId rr = tape.reshape(tape.gather_rows(r, {static_cast<size_t>(q.rel)}), {d});
            const NodeId query_vec = tape.mul(eh, rr);
            std::vector<size_t> rows;
            rows.reserve(1 + negs.size());
            rows.push_back(static_cast<size_t>(q.answer));
            for (int v : negs) rows.push_back(static_cast<size_t>(v));
            const NodeId cand = tape.gather_rows(e, rows);
            const NodeId scores = tape.row_sums(tape.rows_mul(cand, query_vec));
            std::vector<size_t> neg_idx(negs.size());
            for (size_t i = 0; i < negs.size(); ++i) neg_idx[i] = i + 1;
            const NodeId loss = negative_sampling_loss(tape, scores, 0, neg_idx);
            if (!std::isfinite(tape.value(loss).data[0]))
                throw TrainingError("coarse training diverged at epoch " + std::to_string(epoch));
            for (Parameter* p : params) p->zero_grad();
            tape.backward(loss);
            adam_step(params, opt);
        }
    }
}

void TripletCoarse::save(const std::filesystem::path& path) const {
    std::map<std::string, std::string> hyper;
    hyper["kind"] = "triplet";
    hyper["dim"] = std::to_string(cfg_.dim);
    hyper["n_entities"] = std::to_string(entities_.value.rows());
    hyper["n_relations_base"] = std::to_string(relations_.value.rows() / 2);
    save_checkpoint_file(path, kCoarseMagic, hyper, {&entities_, &relations_});
}

// ------------------------------------------------------------- structural --

StructuralCoarse::StructuralCoarse(size_t n_relations_base, const CoarseConfig& cfg, Rng& init)
    : cfg_(cfg), n_relations_base_(n_relations_base) {
    const size_t d = cfg.dim;
    const double std = 1.0 / std::sqrt(static_cast<double>(d));
    rel_emb_ = Parameter("rel_emb", Tensor::random_normal({2 * n_relations_base, d}, init, 1.0));
    for (int l = 0; l < cfg.local_layers; ++l) {
        LocalLayer layer;
        layer.weight = Parameter("local." + std::to_string(l) + ".weight",
                                 Tensor::random_normal({d, d}, init, std));
        layer.self_weight = Parameter("local." + std::to_string(l) + ".self_weight",
                                      Tensor::random_normal({d, d}, init, std));
        layer.bias = Parameter("local." + std::to_string(l) + ".bias", Tensor::zeros({d}));
        pathway_.layers.push_back(std::move(layer));
    }
    head_w_ = Parameter("head.weight", Tensor::random_normal({d}, init, std));
    head_b_ = Parameter("head.bias", Tensor::zeros({1}));
}

std::vector<Parameter*> StructuralCoarse::parameters() {
    std::vector<Parameter*> out = {&rel_emb_};
    for (auto& l : pathway_.layers) {
        out.push_back(&l.weight);
        out.push_back(&l.self_weight);
        out.push_back(&l.bias);
    }
    out.push_back(&head_w_);
    out.push_back(&head_b_);
    return out;
}

NodeId StructuralCoarse::forward_scores(Tape& tape, const KnowledgeGraph& g, int head, int rel,
                                        const Triple* excluded) {
    const EncoderState enc = encode_input(tape, g, rel_emb_, head, rel, 0, excluded);
    const NodeId z = local_forward(tape, enc, g, pathway_, excluded);
    const NodeId raw = tape.matvec(z, tape.watch(head_w_));
    const NodeId as_col = tape.reshape(raw, {tape.value(raw).shape[0], 1});
    return tape.reshape(tape.add_row_bias(as_col, tape.watch(head_b_)),
                        {tape.value(raw).shape[0]});
}

std::vector<double> StructuralCoarse::score_all_impl(const KnowledgeGraph& g, int head, int rel,
                                                     const Triple* excluded) const {
    auto& self = const_cast<StructuralCoarse&>(*this);
    Tape tape;
    const NodeId s = self.forward_scores(tape, g, head, rel, excluded);
    return tape.value(s).data;
}

std::vector<double> StructuralCoarse::score_all(const KnowledgeGraph& g, int head,
                                                int rel) const {
    return score_all_impl(g, head, rel, nullptr);
}

void StructuralCoarse::train(const DatasetSplit& split, const KnowledgeGraph& graph, Rng& rng) {
    const int base = static_cast<int>(graph.n_relations_base());
    std::vector<Parameter*> params = parameters();
    AdamState opt(params, cfg_.train.lr, cfg_.train.weight_decay);
    for (int epoch = 0; epoch < cfg_.train.epochs; ++epoch) {
        struct Q {
            int head, rel, answer;
            Triple fact;
        };
        std::vector<Q> queries;
        queries.reserve(split.train_queries.size() * 2);
        for (const auto& f : split.train_queries) {
            queries.push_back({f.head, f.rel, f.tail, f});
            queries.push_back({f.tail, f.rel + base, f.head, f});
        }
        rng.shuffle(queries);
        for (const auto& q : queries) {
            const std::vector<int> negs =
                sample_negatives(graph.n_entities(), q.answer, cfg_.train.negatives, rng);
            Tape tape;
            const NodeId all = forward_scores(tape, graph, q.head, q.rel, &q.fact);
            std::vector<size_t> rows;
            rows.reserve(1 + negs.size());
            rows.push_back(static_cast<size_t>(q.answer));
            for (int v : negs) rows.push_back(static_cast<size_t>(v));
            const NodeId picked = tape.gather(all, rows);
            std::vector<size_t> neg_idx(negs.size());
            for (size_t i = 0; i < negs.size(); ++i) neg_idx[i] = i + 1;
            const NodeId loss = negative_sampling_loss(tape, picked, 0, neg_idx);
            if (!std::isfinite(tape.value(loss).data[0]))
                throw TrainingError("coarse training diverged at epoch " + std::to_string(epoch));
            for (Parameter* p : params) p->zero_grad();
            tape.backward(loss);
            adam_step(params, opt);
        }
    }
}

void StructuralCoarse::save(const std::filesystem::path& path) const {
    std::map<std::string, std::string> hyper;
    hyper["kind"] = "structural";
    hyper["dim"] = std::to_string(cfg_.dim);
    hyper["local_layers"] = std::to_string(cfg_.local_layers);
    hyper["n_relations_base"] = std::to_string(n_relations_base_);
    std::vector<const Parameter*> ps;
    for (Parameter* p : const_cast<StructuralCoarse*>(this)->parameters()) ps.push_back(p);
    save_checkpoint_file(path, kCoarseMagic, hyper, ps);
}

// -------------------------------------------------------------- factories --

std::unique_ptr<CoarseScorer> make_coarse(const std::string& kind, const DatasetSplit& split,
                                          const CoarseConfig& cfg, Rng& init) {
    if (kind == "triplet") {
        if (split.mode == SplitMode::inductive)
            throw ContractError(
                "coarse kind 'triplet' is incompatible with inductive splits; use 'structural'");
        return std::make_unique<TripletCoarse>(split.train_graph.n_entities(),
                                               split.train_graph.n_relations_base(), cfg, init);
    }
    if (kind == "structural")
        return std::make_unique<StructuralCoarse>(split.train_graph.n_relations_base(), cfg, init);
    throw ContractError("unknown coarse scorer kind: " + kind);
}

std::unique_ptr<CoarseScorer> load_coarse(const std::filesystem::path& path) {
    CheckpointData data = load_checkpoint_file(path, kCoarseMagic);
    const std::string kind = data.hyper.at("kind");
    Rng dummy(0);
    CoarseConfig cfg;
    cfg.dim = std::stoul(data.hyper.at("dim"));
    if (kind == "triplet") {
        auto out = std::make_unique<TripletCoarse>(std::stoul(data.hyper.at("n_entities")),
                                                   std::stoul(data.hyper.at("n_relations_base")),
                                                   cfg, dummy);
        if (data.params.size() != 2)
            throw CheckpointError(CheckpointError::Kind::corrupt,
                                  "triplet checkpoint must hold 2 parameters");
        out->entities_.value = data.params[0].value;
        out->relations_.value = data.params[1].value;
        return out;
    }
    if (kind == "structural") {
        cfg.local_layers = std::stoi(data.hyper.at("local_layers"));
        auto out = std::make_unique<StructuralCoarse>(std::stoul(data.hyper.at("n_relations_base")),
                                                      cfg, dummy);
        auto params = out->parameters();
        if (params.size() != data.params.size())
            throw CheckpointError(CheckpointError::Kind::corrupt,
                                  "structural checkpoint parameter count mismatch");
        for (size_t i = 0; i < params.size(); ++i) {
            if (params[i]->name != data.params[i].name ||
                params[i]->value.shape != data.params[i].value.shape)
                throw CheckpointError(CheckpointError::Kind::corrupt,
                                      "parameter layout mismatch at " + data.params[i].name);
            params[i]->value = data.params[i].value;
        }
        return out;
    }
    throw CheckpointError(CheckpointError::Kind::corrupt, "unknown coarse kind in checkpoint");
}

}  // namespace duet

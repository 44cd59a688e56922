#include "duet/train.hpp"

#include <cmath>
#include <sstream>

namespace duet {

namespace {

struct DirectedQuery {
    int head, rel, answer;
    Triple fact;  // original orientation, for edge exclusion
};

std::vector<DirectedQuery> both_directions(const std::vector<Triple>& facts, int base_relations) {
    std::vector<DirectedQuery> qs;
    qs.reserve(facts.size() * 2);
    for (const auto& f : facts) {
        qs.push_back({f.head, f.rel, f.tail, f});
        qs.push_back({f.tail, f.rel + base_relations, f.head, f});
    }
    return qs;
}

}  // namespace

EpochStats train_epoch(DuetModel& model, const KnowledgeGraph& graph,
                       const std::vector<Triple>& train_queries, const TrainConfig& cfg,
                       AdamState& opt, Rng& rng, int epoch_index) {
    if (train_queries.empty()) throw ContractError("train_epoch: no training queries");
    if (!graph.inverses_added())
        throw ContractError("train_epoch: graph must carry inverse relations");

    auto params = model.parameters();
    const int base = static_cast<int>(graph.n_relations_base());
    for (const auto& q : train_queries)
        if (q.rel >= base)
            throw ContractError(
                "train_epoch: queries must use base relation ids; inverse directions are "
                "generated internally");
    std::vector<DirectedQuery> queries = both_directions(train_queries, base);
    rng.shuffle(queries);

    double loss_sum = 0.0;
    for (size_t qi = 0; qi < queries.size(); ++qi) {
        const DirectedQuery& q = queries[qi];
        const std::vector<int> negs =
            sample_negatives(graph.n_entities(), q.answer, cfg.negatives, rng);

        Tape tape;
        const auto fwd = model.forward(tape, graph, q.head, q.rel, false, &q.fact);
        std::vector<size_t> rows;
        rows.reserve(1 + negs.size());
        rows.push_back(static_cast<size_t>(q.answer));
        for (int v : negs) rows.push_back(static_cast<size_t>(v));
        const NodeId scores = model.score_rows(tape, fwd.z, rows);
        std::vector<size_t> neg_idx(negs.size());
        for (size_t i = 0; i < negs.size(); ++i) neg_idx[i] = i + 1;
        const NodeId loss = negative_sampling_loss(tape, scores, 0, neg_idx);

        const double loss_value = tape.value(loss).data[0];
        auto diverged = [&](const std::string& what) {
            std::ostringstream dump;
            dump << "training diverged: " << what << " epoch=" << epoch_index
                 << " query_index=" << qi << " query=(" << q.head << "," << q.rel << ","
                 << q.answer << ") alpha=" << model.alpha() << " lr=" << opt.lr;
            return TrainingError(dump.str());
        };
        if (!std::isfinite(loss_value))
            throw diverged("loss=" + std::to_string(loss_value));
        loss_sum += loss_value;

        for (Parameter* p : params) p->zero_grad();
        tape.backward(loss);
        adam_step(params, opt);
        for (Parameter* p : params)
            if (!p->value.all_finite()) throw diverged("non-finite parameter " + p->name);
    }

    EpochStats stats;
    stats.epoch = epoch_index;
    stats.mean_loss = loss_sum / static_cast<double>(queries.size());
    stats.alpha = model.alpha();
    return stats;
}

void train_model(DuetModel& model, const KnowledgeGraph& graph,
                 const std::vector<Triple>& train_queries, const TrainConfig& cfg,
                 const std::function<void(const EpochStats&)>& on_epoch) {
    auto params = model.parameters();
    AdamState opt(params, cfg.lr, cfg.weight_decay);
    Rng rng(cfg.seed);
    for (int e = 0; e < cfg.epochs; ++e) {
        const EpochStats stats = train_epoch(model, graph, train_queries, cfg, opt, rng, e);
        if (on_epoch) on_epoch(stats);
    }
}

}  // namespace duet

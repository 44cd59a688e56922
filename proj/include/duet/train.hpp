#pragma once

#include <functional>
#include <string>

#include "duet/model.hpp"
#include "duet/optim.hpp"

namespace duet {

struct TrainConfig {
    double lr = 5e-4;
    double weight_decay = 1e-5;
    size_t negatives = 128;
    int epochs = 10;
    uint64_t seed = 42;
};

struct EpochStats {
    int epoch = 0;
    double mean_loss = 0.0;
    double alpha = 0.0;
};

// One pass over the shuffled training queries (each fact is asked in both
// directions via its inverse relation). Per query: encode, both pathways,
// fuse, score the answer and its sampled negatives, backprop, Adam step.
// The query's own fact edge is excluded from message passing so the model
// cannot read the answer off the graph. Non-finite loss aborts with a
// diagnostic dump.
EpochStats train_epoch(DuetModel& model, const KnowledgeGraph& graph,
                       const std::vector<Triple>& train_queries, const TrainConfig& cfg,
                       AdamState& opt, Rng& rng, int epoch_index);

// Full training driver: builds the optimizer, runs `cfg.epochs` epochs and
// reports one EpochStats per epoch through `on_epoch` (may be null).
void train_model(DuetModel& model, const KnowledgeGraph& graph,
                 const std::vector<Triple>& train_queries, const TrainConfig& cfg,
                 const std::function<void(const EpochStats&)>& on_epoch);

}  // namespace duet

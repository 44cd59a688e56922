#pragma once

#include <array>
#include <filesystem>

#include "duet/kg.hpp"

namespace duet {

// Synthetic family-tree benchmark. Each family contributes a grandparent
// couple, two married children and their kids, with explicit parent/spouse
// facts plus derived sibling / grandparent / aunt-uncle facts that follow
// two-hop composition rules. Held-out queries are sampled from the derived
// relations only, so their supporting base facts always stay in the training
// graph and the split is answerable by multi-hop reasoning.
struct KinshipOptions {
    size_t families = 20;
    uint64_t seed = 7;
    double test_fraction = 0.10;   // of derived triples
    double valid_fraction = 0.05;  // of derived triples
};

struct KinshipData {
    std::vector<std::array<std::string, 3>> train, valid, test;
};

KinshipData make_kinship(const KinshipOptions& opts);

// Writes train.txt / valid.txt / test.txt (transductive layout).
void write_kinship_dataset(const std::filesystem::path& dir, const KinshipOptions& opts);

// Writes an inductive layout: train/valid from one set of families, and
// facts.txt / test.txt from a disjoint set of families (entities disjoint,
// relations shared).
void write_kinship_inductive(const std::filesystem::path& dir, const KinshipOptions& train_opts,
                             const KinshipOptions& test_opts);

}  // namespace duet

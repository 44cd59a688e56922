#pragma once

#include <cstddef>
#include <vector>

#include "duet/errors.hpp"

namespace duet {

// Entity-to-score table as parallel arrays.
struct ScoreTable {
    std::vector<int> entities;
    std::vector<double> scores;

    size_t size() const { return entities.size(); }
    static ScoreTable from_scores(const std::vector<double>& all_scores);
};

struct SplitTable {
    ScoreTable high, low;
    size_t k = 0;
};

// Partitions by rank: descending score, ties broken by ascending entity id.
// high holds ranks 1..min(k,|V|); low holds the rest (possibly empty).
SplitTable split_table(const ScoreTable& table, size_t k);

// Index of the best entry (max score, ties by ascending entity id).
size_t argmax_entry(const ScoreTable& table);

}  // namespace duet

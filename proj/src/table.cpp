#include "duet/table.hpp"

#include <algorithm>
#include <numeric>

namespace duet {

ScoreTable ScoreTable::from_scores(const std::vector<double>& all_scores) {
    ScoreTable t;
    t.entities.resize(all_scores.size());
    std::iota(t.entities.begin(), t.entities.end(), 0);
    t.scores = all_scores;
    return t;
}

SplitTable split_table(const ScoreTable& table, size_t k) {
    if (k < 1) throw ContractError("split_table: k must be at least 1");
    if (table.entities.size() != table.scores.size())
        throw ContractError("split_table: ragged score table");
    std::vector<size_t> order(table.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (table.scores[a] != table.scores[b]) return table.scores[a] > table.scores[b];
        return table.entities[a] < table.entities[b];
    });
    SplitTable out;
    out.k = k;
    const size_t cut = std::min(k, table.size());
    for (size_t i = 0; i < order.size(); ++i) {
        ScoreTable& dst = i < cut ? out.high : out.low;
        dst.entities.push_back(table.entities[order[i]]);
        dst.scores.push_back(table.scores[order[i]]);
    }
    return out;
}

size_t argmax_entry(const ScoreTable& table) {
    if (table.size() == 0) throw ContractError("argmax_entry: empty table");
    size_t best = 0;
    for (size_t i = 1; i < table.size(); ++i) {
        if (table.scores[i] > table.scores[best] ||
            (table.scores[i] == table.scores[best] && table.entities[i] < table.entities[best]))
            best = i;
    }
    return best;
}

}  // namespace duet

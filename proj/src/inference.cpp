#include "duet/inference.hpp"

#include <algorithm>
#include <limits>

namespace duet {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

SplitTable refine_tables(const SplitTable& split, const std::vector<double>& fine_scores) {
    SplitTable out = split;
    for (ScoreTable* table : {&out.high, &out.low}) {
        for (size_t i = 0; i < table->size(); ++i) {
            const int v = table->entities[i];
            if (v < 0 || static_cast<size_t>(v) >= fine_scores.size())
                throw ContractError("refine_tables: entity " + std::to_string(v) +
                                    " missing from fine scores");
            table->scores[i] = fine_scores[static_cast<size_t>(v)];
        }
    }
    return out;
}

Decision decide(const SplitTable& split, double delta) {
    if (split.high.size() == 0) throw ContractError("decide: high subtable is empty");
    Decision d;
    d.delta = delta;
    const size_t hi = argmax_entry(split.high);
    d.e_high = split.high.entities[hi];
    d.s_high = split.high.scores[hi];
    if (split.low.size() == 0) {
        d.e_low = -1;
        d.s_low = kNegInf;
        d.gamma = kNegInf;
    } else {
        const size_t lo = argmax_entry(split.low);
        d.e_low = split.low.entities[lo];
        d.s_low = split.low.scores[lo];
        d.gamma = d.s_low - d.s_high;
    }
    // Strict comparison: gamma equal to delta keeps the high-table winner.
    if (split.low.size() > 0 && d.gamma > delta) {
        d.chosen = d.e_low;
        d.source = Decision::Source::low;
    } else {
        d.chosen = d.e_high;
        d.source = Decision::Source::high;
    }
    return d;
}

std::vector<int> final_ranking(const SplitTable& split, const Decision& decision) {
    struct Entry {
        int entity;
        double score;
    };
    std::vector<Entry> entries;
    entries.reserve(split.high.size() + split.low.size());
    for (const ScoreTable* table : {&split.high, &split.low})
        for (size_t i = 0; i < table->size(); ++i)
            entries.push_back({table->entities[i], table->scores[i]});
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.entity < b.entity;
    });
    // The chosen entity is the pipeline's answer, so it leads the ranking
    // even when an unpromoted low-table entity carries a higher fine score
    // (gamma positive but at most delta). Everything else keeps fine-score
    // order.
    std::vector<int> ranking;
    ranking.reserve(entries.size());
    ranking.push_back(decision.chosen);
    for (const Entry& e : entries)
        if (e.entity != decision.chosen) ranking.push_back(e.entity);
    return ranking;
}

Prediction predict(DuetModel& fine, const CoarseScorer& coarse, const KnowledgeGraph& g,
                   int head, int rel, size_t k, double delta,
                   const std::vector<uint8_t>& mask) {
    if (k < 1) throw ContractError("predict: k must be at least 1");
    if (!mask.empty() && mask.size() != g.n_entities())
        throw ContractError("predict: mask length must equal |V|");

    std::vector<double> coarse_scores = coarse.score_all(g, head, rel);
    if (!mask.empty())
        for (size_t v = 0; v < coarse_scores.size(); ++v)
            if (!mask[v]) coarse_scores[v] = kNegInf;

    const SplitTable coarse_split = split_table(ScoreTable::from_scores(coarse_scores), k);

    Prediction out;
    out.fine_scores = fine.score_all(g, head, rel);
    out.masked_scores = out.fine_scores;
    if (!mask.empty())
        for (size_t v = 0; v < out.masked_scores.size(); ++v)
            if (!mask[v]) out.masked_scores[v] = kNegInf;

    const SplitTable refined = refine_tables(coarse_split, out.masked_scores);
    out.decision = decide(refined, delta);
    out.ranking = final_ranking(refined, out.decision);
    return out;
}

}  // namespace duet

#pragma once

#include "duet/coarse.hpp"

namespace duet {

// Outcome of the two-subtable comparison. `chosen` is the argmax of the low
// subtable exactly when its lead gamma = s_el - s_eh strictly exceeds delta;
// an empty low subtable yields gamma = -inf.
struct Decision {
    int e_high = -1;
    double s_high = 0.0;
    int e_low = -1;  // -1 when low is empty
    double s_low = 0.0;
    double gamma = 0.0;
    double delta = 0.0;
    int chosen = -1;
    enum class Source { high, low } source = Source::high;
};

// Replaces every score by the fine model's score; membership is unchanged.
SplitTable refine_tables(const SplitTable& split, const std::vector<double>& fine_scores);

Decision decide(const SplitTable& split, double delta);

// Full candidate ordering. When the decision keeps the high subtable this is
// the plain fine-score sort (ties by ascending id); when it promotes the low
// winner, that entity moves to rank 1 and everything else keeps fine-score
// order.
std::vector<int> final_ranking(const SplitTable& split, const Decision& decision);

struct Prediction {
    Decision decision;
    std::vector<int> ranking;
    std::vector<double> fine_scores;    // unmasked, one per entity
    std::vector<double> masked_scores;  // -inf where filtered out
};

// Steps: coarse scores -> mask filtered entities to -inf -> split at k ->
// fine forward -> refine subtables (masked) -> decide -> full ranking.
// `mask` may be empty for unfiltered prediction.
Prediction predict(DuetModel& fine, const CoarseScorer& coarse, const KnowledgeGraph& g,
                   int head, int rel, size_t k, double delta,
                   const std::vector<uint8_t>& mask);

}  // namespace duet

#pragma once

#include <map>
#include <string>

#include "duet/inference.hpp"

namespace duet {

// Tie-averaged ("realistic") rank of the answer among unmasked candidates:
// 1 + #better + #ties/2. A constant score vector therefore yields the mean
// rank instead of rank 1, which is what makes score collapse visible in the
// metrics. Throws if the answer itself is masked out.
double rank_of(const std::vector<double>& scores, int answer, const std::vector<uint8_t>& mask);

double mrr(const std::vector<double>& ranks);
double hits_at_k(const std::vector<double>& ranks, int k);

struct GapHistogram {
    std::vector<double> bin_edges;  // ascending, size bins+1
    std::vector<long> counts;       // size bins
    double score_std = 0.0;
    bool degenerate = false;

    long total() const;
    void merge(const GapHistogram& other);
    std::string to_csv() const;  // rows: bin_lo,bin_hi,count
};

// Normalized score gaps |s_answer - s_v| / std(scores) of every incorrect
// candidate, binned. A standard deviation below 1e-12 sets the degenerate
// flag and puts all mass in the first bin.
GapHistogram score_gap_histogram(const std::vector<double>& scores, int answer,
                                 const std::vector<double>& bin_edges);

enum class EvalScope { pipeline, fine_only, coarse_only };

struct EvalConfig {
    size_t k = 4;
    double delta = 8.0;
    bool filtered = true;
    EvalScope scope = EvalScope::pipeline;
    bool on_valid = false;                  // evaluate valid queries instead of test
    std::vector<int> hits_ks = {1, 10};
    std::vector<double> histogram_edges;    // empty: no histogram
    int threads = 1;
};

struct EvalReport {
    double mrr = 0.0;
    std::map<int, double> hits;
    size_t n_queries = 0;
    std::string protocol;  // "filtered" | "raw"
    std::string scope;
    size_t k = 0;
    double delta = 0.0;
    GapHistogram histogram;  // pooled over queries when requested

    // hits@k nondecreasing in k, everything in [0,1], and the reciprocal-rank
    // sandwich mrr in [hits@1, hits@1 + (1-hits@1)/2].
    void validate() const;
    // Sorted keys, 6-decimal floats; byte-stable across runs.
    std::string to_canonical_json() const;
};

// Evaluation universe for one split: the inverse-augmented graph, the query
// triples, and the known-triple index (both directions) for filtering.
struct EvalUniverse {
    KnowledgeGraph graph;
    std::vector<Triple> query_triples;
    TripleIndex known;
};

EvalUniverse build_eval_universe(const DatasetSplit& split, bool on_valid);

// Both-direction filtered evaluation: every (h,r,t) is queried as (h,r,?)->t
// and (t,r^-1,?)->h over the inverse-augmented graph.
EvalReport evaluate(DuetModel& fine, const CoarseScorer* coarse, const DatasetSplit& split,
                    const EvalConfig& cfg);

}  // namespace duet

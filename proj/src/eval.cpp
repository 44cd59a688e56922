#include "duet/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <thread>

namespace duet {

double rank_of(const std::vector<double>& scores, int answer, const std::vector<uint8_t>& mask) {
    if (answer < 0 || static_cast<size_t>(answer) >= scores.size())
        throw ContractError("rank_of: answer id out of range");
    if (!mask.empty() && mask.size() != scores.size())
        throw ContractError("rank_of: mask length mismatch");
    if (!mask.empty() && !mask[static_cast<size_t>(answer)])
        throw ContractError("rank_of: answer is masked out");
    const double s_ans = scores[static_cast<size_t>(answer)];
    long better = 0, ties = 0;
    for (size_t v = 0; v < scores.size(); ++v) {
        if (static_cast<int>(v) == answer) continue;
        if (!mask.empty() && !mask[v]) continue;
        if (scores[v] > s_ans)
            ++better;
        else if (scores[v] == s_ans)
            ++ties;
    }
    return 1.0 + static_cast<double>(better) + static_cast<double>(ties) / 2.0;
}

double mrr(const std::vector<double>& ranks) {
    if (ranks.empty()) throw ContractError("mrr: empty rank list");
    // Summed in sorted order so the result is bit-identical under any
    // permutation of the queries.
    std::vector<double> sorted = ranks;
    std::sort(sorted.begin(), sorted.end());
    double acc = 0.0;
    for (double r : sorted) {
        if (r < 1.0) throw ContractError("mrr: rank below 1");
        acc += 1.0 / r;
    }
    return acc / static_cast<double>(sorted.size());
}

double hits_at_k(const std::vector<double>& ranks, int k) {
    if (ranks.empty()) throw ContractError("hits_at_k: empty rank list");
    if (k < 1) throw ContractError("hits_at_k: k must be at least 1");
    long hits = 0;
    for (double r : ranks)
        if (r <= static_cast<double>(k)) ++hits;
    return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

long GapHistogram::total() const {
    long t = 0;
    for (long c : counts) t += c;
    return t;
}

void GapHistogram::merge(const GapHistogram& other) {
    if (other.counts.empty()) return;
    if (counts.empty()) {
        *this = other;
        return;
    }
    if (other.bin_edges != bin_edges) throw ContractError("GapHistogram::merge: edge mismatch");
    for (size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
    degenerate = degenerate || other.degenerate;
}

std::string GapHistogram::to_csv() const {
    std::string out;
    char buf[96];
    for (size_t i = 0; i < counts.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%ld\n", bin_edges[i], bin_edges[i + 1],
                      counts[i]);
        out += buf;
    }
    return out;
}

GapHistogram score_gap_histogram(const std::vector<double>& scores, int answer,
                                 const std::vector<double>& bin_edges) {
    if (scores.size() < 2) throw ContractError("score_gap_histogram: need at least 2 candidates");
    if (bin_edges.size() < 2) throw ContractError("score_gap_histogram: need at least one bin");
    if (answer < 0 || static_cast<size_t>(answer) >= scores.size())
        throw ContractError("score_gap_histogram: answer id out of range");

    GapHistogram h;
    h.bin_edges = bin_edges;
    h.counts.assign(bin_edges.size() - 1, 0);

    const double n = static_cast<double>(scores.size());
    double mean = 0.0;
    for (double s : scores) mean += s;
    mean /= n;
    double var = 0.0;
    for (double s : scores) var += (s - mean) * (s - mean);
    h.score_std = std::sqrt(var / n);

    if (h.score_std < 1e-12) {
        h.degenerate = true;
        h.counts[0] = static_cast<long>(scores.size()) - 1;
        return h;
    }
    const double s_ans = scores[static_cast<size_t>(answer)];
    for (size_t v = 0; v < scores.size(); ++v) {
        if (static_cast<int>(v) == answer) continue;
        const double gap = std::fabs(s_ans - scores[v]) / h.score_std;
        size_t bin = h.counts.size() - 1;
        for (size_t b = 0; b + 1 < bin_edges.size(); ++b) {
            if (gap < bin_edges[b + 1]) {
                bin = b;
                break;
            }
        }
        h.counts[bin] += 1;
    }
    return h;
}

void EvalReport::validate() const {
    const double eps = 1e-12;
    auto in01 = [&](double x) { return x >= -eps && x <= 1.0 + eps; };
    if (!in01(mrr)) throw ContractError("EvalReport: mrr outside [0,1]");
    double prev = -1.0;
    int prev_k = 0;
    for (const auto& [k, v] : hits) {
        if (!in01(v)) throw ContractError("EvalReport: hits@" + std::to_string(k) + " outside [0,1]");
        if (k > prev_k && v + eps < prev)
            throw ContractError("EvalReport: hits must be nondecreasing in k");
        prev = v;
        prev_k = k;
    }
    const auto it = hits.find(1);
    if (it != hits.end()) {
        const double h1 = it->second;
        if (mrr + eps < h1) throw ContractError("EvalReport: mrr below hits@1");
        if (mrr > h1 + (1.0 - h1) / 2.0 + eps)
            throw ContractError("EvalReport: mrr above hits@1 + (1-hits@1)/2");
    }
}

namespace {

std::string fmt6(double x) {
    if (std::isinf(x)) return x > 0 ? "\"inf\"" : "\"-inf\"";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", x);
    return buf;
}

}  // namespace

std::string EvalReport::to_canonical_json() const {
    // Keys emitted in sorted order by hand; never touches unordered containers.
    std::ostringstream os;
    os << "{";
    os << "\"delta\":" << fmt6(delta) << ",";
    for (const auto& [k, v] : hits) os << "\"hits@" << k << "\":" << fmt6(v) << ",";
    os << "\"k\":" << k << ",";
    os << "\"mrr\":" << fmt6(mrr) << ",";
    os << "\"n_queries\":" << n_queries << ",";
    os << "\"protocol\":\"" << protocol << "\",";
    os << "\"scope\":\"" << scope << "\"";
    os << "}";
    return os.str();
}

namespace {

struct DirectedQuery {
    int head, rel, answer;
};

struct QueryResult {
    double rank = 0.0;
    GapHistogram hist;
};

}  // namespace

EvalUniverse build_eval_universe(const DatasetSplit& split, bool on_valid) {
    const bool transductive = split.mode == SplitMode::transductive;
    const KnowledgeGraph& raw_graph = on_valid ? split.train_graph : split.test_graph;

    EvalUniverse u;
    u.graph = add_inverse_relations(raw_graph);
    u.query_triples = on_valid ? split.valid_queries : split.test_queries;
    const int base = static_cast<int>(u.graph.n_relations_base());

    auto insert_both = [&](const std::vector<Triple>& ts) {
        for (const auto& t : ts) {
            u.known.insert(t);
            u.known.insert({t.tail, t.rel + base, t.head});
        }
    };
    if (transductive) {
        insert_both(split.train_queries);
        insert_both(split.valid_queries);
        insert_both(split.test_queries);
    } else if (on_valid) {
        insert_both(split.train_queries);
        insert_both(split.valid_queries);
    } else {
        insert_both(raw_graph.triples());
        insert_both(split.test_queries);
    }
    return u;
}

EvalReport evaluate(DuetModel& fine, const CoarseScorer* coarse, const DatasetSplit& split,
                    const EvalConfig& cfg) {
    if (cfg.scope != EvalScope::fine_only && coarse == nullptr)
        throw ContractError("evaluate: this scope needs a coarse scorer");
    const EvalUniverse universe = build_eval_universe(split, cfg.on_valid);
    if (universe.query_triples.empty())
        throw ContractError("evaluate: no queries in the requested split");
    const KnowledgeGraph& graph = universe.graph;
    const TripleIndex& known = universe.known;
    const int base = static_cast<int>(graph.n_relations_base());

    std::vector<DirectedQuery> queries;
    queries.reserve(universe.query_triples.size() * 2);
    for (const auto& t : universe.query_triples) {
        queries.push_back({t.head, t.rel, t.tail});
        queries.push_back({t.tail, t.rel + base, t.head});
    }

    const size_t n_entities = graph.n_entities();
    std::vector<QueryResult> results(queries.size());

    auto run_query = [&](size_t qi) {
        const DirectedQuery& q = queries[qi];
        std::vector<uint8_t> mask;
        if (cfg.filtered)
            mask = filtered_candidates(q.head, q.rel, q.answer, n_entities, known);

        std::vector<double> scope_scores;
        double rank = 0.0;
        if (cfg.scope == EvalScope::coarse_only) {
            scope_scores = coarse->score_all(graph, q.head, q.rel);
            rank = rank_of(scope_scores, q.answer, mask);
        } else if (cfg.scope == EvalScope::fine_only) {
            scope_scores = fine.score_all(graph, q.head, q.rel);
            rank = rank_of(scope_scores, q.answer, mask);
        } else {
            Prediction pred =
                predict(fine, *coarse, graph, q.head, q.rel, cfg.k, cfg.delta, mask);
            // Implied scores of the final ranking: the chosen entity sits at
            // rank 1, everyone else keeps the fine score and its tie rule.
            std::vector<double> implied = pred.masked_scores;
            implied[static_cast<size_t>(pred.decision.chosen)] =
                std::numeric_limits<double>::infinity();
            rank = rank_of(implied, q.answer, mask);
            scope_scores = std::move(pred.fine_scores);
        }
        results[qi].rank = rank;

        if (!cfg.histogram_edges.empty()) {
            // Pooled Figure-style histogram over unmasked candidates.
            std::vector<double> cand;
            cand.reserve(scope_scores.size());
            int answer_pos = -1;
            for (size_t v = 0; v < scope_scores.size(); ++v) {
                if (!mask.empty() && !mask[v]) continue;
                if (static_cast<int>(v) == q.answer) answer_pos = static_cast<int>(cand.size());
                cand.push_back(scope_scores[v]);
            }
            if (cand.size() >= 2)
                results[qi].hist = score_gap_histogram(cand, answer_pos, cfg.histogram_edges);
        }
    };

    const int threads = std::max(1, cfg.threads);
    if (threads == 1 || queries.size() < 2) {
        for (size_t qi = 0; qi < queries.size(); ++qi) run_query(qi);
    } else {
        std::vector<std::thread> pool;
        std::atomic<size_t> next{0};
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&] {
                for (;;) {
                    const size_t qi = next.fetch_add(1);
                    if (qi >= queries.size()) return;
                    run_query(qi);
                }
            });
        for (auto& th : pool) th.join();
    }

    std::vector<double> ranks(queries.size());
    for (size_t i = 0; i < queries.size(); ++i) ranks[i] = results[i].rank;

    EvalReport report;
    report.mrr = mrr(ranks);
    for (int k : cfg.hits_ks) report.hits[k] = hits_at_k(ranks, k);
    report.n_queries = queries.size();
    report.protocol = cfg.filtered ? "filtered" : "raw";
    report.scope = cfg.scope == EvalScope::pipeline
                       ? "pipeline"
                       : (cfg.scope == EvalScope::fine_only ? "fine_only" : "coarse_only");
    report.k = cfg.k;
    report.delta = cfg.delta;
    if (!cfg.histogram_edges.empty())
        for (const auto& r : results) report.histogram.merge(r.hist);
    report.validate();
    return report;
}

}  // namespace duet

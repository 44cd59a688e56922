#include "duet/cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <queue>

#include "CLI11.hpp"
#include "json.hpp"

#include "duet/config.hpp"
#include "duet/eval.hpp"
#include "duet/kinship.hpp"
#include "duet/theory.hpp"

namespace duet {

namespace {

constexpr const char* kVersion = "duetgraph 0.1.0";

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt6(double x) {
    if (std::isinf(x)) return x > 0 ? "\"inf\"" : "\"-inf\"";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", x);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
}

void write_manifest(const fs::path& artifact, const RunConfig& cfg, const std::string& command) {
    json m;
    m["command"] = command;
    m["config"] = json::parse(cfg.to_json());
    m["seed"] = cfg.seed;
    m["version"] = kVersion;
    write_text(artifact.string() + ".manifest.json", m.dump() + "\n");
}

fs::path default_out(const RunConfig& cfg, const std::string& name) {
    return fs::path(cfg.output_dir) / name;
}

std::string stats_line(const EpochStats& s) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "{\"alpha\":%.6f,\"epoch\":%d,\"mean_loss\":%.6f}", s.alpha,
                  s.epoch, s.mean_loss);
    return buf;
}

// Connected diagnostic subgraph: BFS over undirected edges from the first
// entity until `cap` vertices are collected, then the induced triples.
KnowledgeGraph diagnostic_subgraph(const KnowledgeGraph& kg, size_t cap) {
    if (kg.n_entities() <= cap) return kg;
    std::vector<std::vector<int>> adj(kg.n_entities());
    for (const auto& t : kg.triples()) {
        adj[static_cast<size_t>(t.head)].push_back(t.tail);
        adj[static_cast<size_t>(t.tail)].push_back(t.head);
    }
    std::vector<uint8_t> keep(kg.n_entities(), 0);
    std::queue<int> frontier;
    frontier.push(0);
    keep[0] = 1;
    size_t kept = 1;
    while (!frontier.empty() && kept < cap) {
        const int u = frontier.front();
        frontier.pop();
        for (int v : adj[static_cast<size_t>(u)]) {
            if (keep[static_cast<size_t>(v)] || kept >= cap) continue;
            keep[static_cast<size_t>(v)] = 1;
            ++kept;
            frontier.push(v);
        }
    }
    Vocab vocab;
    for (size_t r = 0; r < kg.n_relations_base(); ++r)
        vocab.add_relation(kg.vocab().relation_name(static_cast<int>(r)));
    std::vector<int> remap(kg.n_entities(), -1);
    for (size_t v = 0; v < kg.n_entities(); ++v)
        if (keep[v]) remap[v] = vocab.add_entity(kg.vocab().entity_name(static_cast<int>(v)));
    std::vector<Triple> triples;
    for (const auto& t : kg.triples())
        if (keep[static_cast<size_t>(t.head)] && keep[static_cast<size_t>(t.tail)])
            triples.push_back({remap[static_cast<size_t>(t.head)], t.rel,
                               remap[static_cast<size_t>(t.tail)]});
    return KnowledgeGraph(vocab, std::move(triples), kg.n_relations_base());
}

int cmd_train_fine(const RunConfig& cfg, const std::string& out_arg) {
    const fs::path out = out_arg.empty() ? default_out(cfg, "fine.ckpt") : fs::path(out_arg);
    const DatasetSplit split = load_split(cfg.dataset_dir, cfg.split_mode());
    const KnowledgeGraph graph = add_inverse_relations(split.train_graph);

    Rng init(cfg.seed);
    DuetModel model(cfg.model_config(), graph.n_relations_base(), init);

    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    const fs::path log_path = out.string() + ".train.jsonl";
    std::ofstream log(log_path, std::ios::trunc);
    train_model(model, graph, split.train_queries, cfg.train_config(),
                [&](const EpochStats& s) {
                    const std::string line = stats_line(s);
                    log << line << "\n";
                    std::cout << line << "\n";
                });
    log.close();
    model.save(out);
    write_manifest(out, cfg, "train-fine");
    write_manifest(log_path, cfg, "train-fine");
    std::cout << "saved fine model to " << out.string() << "\n";
    return 0;
}

int cmd_train_coarse(const RunConfig& cfg, const std::string& out_arg) {
    const fs::path out = out_arg.empty() ? default_out(cfg, "coarse.ckpt") : fs::path(out_arg);
    const DatasetSplit split = load_split(cfg.dataset_dir, cfg.split_mode());
    const KnowledgeGraph graph = add_inverse_relations(split.train_graph);

    CoarseConfig cc;
    cc.dim = cfg.coarse_dim;
    cc.local_layers = cfg.coarse_local_layers;
    cc.train.lr = cfg.coarse_lr;
    cc.train.weight_decay = cfg.weight_decay;
    cc.train.negatives = cfg.negatives;
    cc.train.epochs = cfg.coarse_epochs;
    cc.train.seed = cfg.seed + 1;

    // Coarse and fine stages train independently, on separate seeds.
    Rng init(cfg.seed + 1);
    auto scorer = make_coarse(cfg.coarse, split, cc, init);
    Rng train_rng(cfg.seed + 2);
    scorer->train(split, graph, train_rng);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    scorer->save(out);
    write_manifest(out, cfg, "train-coarse");
    std::cout << "saved coarse model (" << scorer->kind() << ") to " << out.string() << "\n";
    return 0;
}

EvalConfig eval_config(const RunConfig& cfg, const std::string& split_sel,
                       const std::string& scope, int threads) {
    EvalConfig ec;
    ec.k = cfg.k;
    ec.delta = cfg.delta;
    ec.filtered = cfg.eval_protocol == "filtered";
    ec.on_valid = split_sel == "valid";
    ec.threads = threads;
    if (scope == "pipeline")
        ec.scope = EvalScope::pipeline;
    else if (scope == "fine-only")
        ec.scope = EvalScope::fine_only;
    else if (scope == "coarse-only")
        ec.scope = EvalScope::coarse_only;
    else
        throw ContractError("unknown scope: " + scope);
    return ec;
}

int cmd_eval(const RunConfig& cfg, const std::string& coarse_path, const std::string& fine_path,
             const std::string& out_arg, const std::string& split_sel, const std::string& scope,
             int threads) {
    const fs::path out = out_arg.empty() ? default_out(cfg, "metrics.json") : fs::path(out_arg);
    const DatasetSplit split = load_split(cfg.dataset_dir, cfg.split_mode());
    DuetModel fine = DuetModel::load(fine_path);
    std::unique_ptr<CoarseScorer> coarse;
    if (!coarse_path.empty()) coarse = load_coarse(coarse_path);

    const EvalConfig ec = eval_config(cfg, split_sel, scope, threads);
    const EvalReport report = evaluate(fine, coarse.get(), split, ec);
    write_text(out, report.to_canonical_json() + "\n");
    write_manifest(out, cfg, "eval");
    std::cout << report.to_canonical_json() << "\n";
    return 0;
}

int cmd_predict(const RunConfig& cfg, const std::string& coarse_path,
                const std::string& fine_path, const std::string& out_arg) {
    const fs::path out = out_arg.empty() ? default_out(cfg, "predictions.jsonl") : fs::path(out_arg);
    const DatasetSplit split = load_split(cfg.dataset_dir, cfg.split_mode());
    DuetModel fine = DuetModel::load(fine_path);
    auto coarse = load_coarse(coarse_path);

    const EvalUniverse u = build_eval_universe(split, false);
    const int base = static_cast<int>(u.graph.n_relations_base());
    const bool filtered = cfg.eval_protocol == "filtered";

    std::string lines;
    auto emit = [&](int head, int rel, int answer) {
        std::vector<uint8_t> mask;
        if (filtered)
            mask = filtered_candidates(head, rel, answer, u.graph.n_entities(), u.known);
        const Prediction pred =
            predict(fine, *coarse, u.graph, head, rel, cfg.k, cfg.delta, mask);
        std::string top10;
        for (size_t i = 0; i < pred.ranking.size() && i < 10; ++i)
            top10 += (i ? "," : "") + json(u.graph.vocab().entity_name(pred.ranking[i])).dump();
        lines += "{\"chosen\":" + json(u.graph.vocab().entity_name(pred.decision.chosen)).dump() +
                 ",\"gamma\":" + fmt6(pred.decision.gamma) +
                 ",\"head\":" + json(u.graph.vocab().entity_name(head)).dump() +
                 ",\"relation\":" + json(u.graph.vocab().relation_name(rel)).dump() +
                 ",\"source\":" +
                 (pred.decision.source == Decision::Source::low ? "\"low\"" : "\"high\"") +
                 ",\"top10\":[" + top10 + "]}\n";
    };
    for (const auto& t : u.query_triples) {
        emit(t.head, t.rel, t.tail);
        emit(t.tail, t.rel + base, t.head);
    }
    write_text(out, lines);
    write_manifest(out, cfg, "predict");
    std::cout << "wrote " << 2 * u.query_triples.size() << " predictions to " << out.string()
              << "\n";
    return 0;
}

int cmd_diagnose(const RunConfig& cfg, const std::string& fine_path, const std::string& out_arg) {
    const fs::path out = out_arg.empty() ? default_out(cfg, "diagnostics.json") : fs::path(out_arg);
    const DatasetSplit split = load_split(cfg.dataset_dir, cfg.split_mode());
    const KnowledgeGraph sub = diagnostic_subgraph(split.train_graph, cfg.diagnostics_cap);
    const KnowledgeGraph graph = add_inverse_relations(sub);

    DuetModel model = [&] {
        if (!fine_path.empty()) return DuetModel::load(fine_path);
        Rng init(cfg.seed);
        return DuetModel(cfg.model_config(), graph.n_relations_base(), init);
    }();
    if (model.n_relations_base() != graph.n_relations_base())
        throw DataError("model relation vocabulary does not match the dataset");
    if (model.config().global_layers < 1)
        throw ContractError("diagnose requires at least one attention layer");

    Tensor attention;
    {
        Tape tape;
        const auto fwd = model.forward(tape, graph, 0, 0, true, nullptr, cfg.diagnostics_cap + 1);
        attention = tape.value(fwd.attention);
    }
    PathwayMatrices pm;
    pm.adjacency = build_normalized_adjacency(sub, true);
    pm.attention = std::move(attention);
    pm.layers = model.config().local_layers;
    pm.alpha = model.alpha();
    const SpectralReport rep = singular_report(pm);

    Rng rng(cfg.seed);
    const GapBoundReport gaps =
        empirical_gap_vs_bound(model, graph, 0, 0, 100, 8, rng);
    const size_t n_high = std::min(cfg.k, graph.n_entities() - 1);
    Rng mc_rng(cfg.seed + 3);
    const MonteCarloReport mc = verify_subtable_gap_montecarlo(
        n_high, graph.n_entities() - n_high, 10000, mc_rng);

    for (const auto& c : rep.asserted)
        std::cout << (c.passed ? "ok:      " : "FAILED:  ") << c.name << "  (lhs=" << c.lhs
                  << ", rhs=" << c.rhs << ")\n";
    for (const auto& c : rep.reported)
        if (!c.passed)
            std::cout << "warning: " << c.name << " does not hold here (lhs=" << c.lhs << ")\n";
    std::cout << "gap bound violations: " << gaps.total_violations() << " over "
              << gaps.layers.size() << " depths x " << gaps.pairs_per_layer << " pairs\n";
    std::cout << "subtable gap: empirical mean " << mc.empirical_mean << " vs lower bound "
              << mc.bound << (mc.exceeds_bound ? " (exceeds)" : " (VIOLATED)") << "\n";
    std::cout << "alpha=" << rep.alpha << " threshold=" << rep.alpha_threshold
              << (rep.alpha_below_threshold ? " (below)" : " (not below)") << "\n";

    json j = json::parse(rep.to_canonical_json());
    j["gap_bound_violations"] = gaps.total_violations();
    j["gap_bound_pairs_per_layer"] = gaps.pairs_per_layer;
    j["subtable_gap_empirical_mean"] = mc.empirical_mean;
    j["subtable_gap_lower_bound"] = mc.bound;
    j["subtable_gap_exceeds_bound"] = mc.exceeds_bound;
    write_text(out, j.dump() + "\n");
    write_manifest(out, cfg, "diagnose");
    const fs::path curves = out.string() + ".curves.csv";
    write_text(curves, bound_curves_csv(gaps.l_f, rep.sigma_single, rep.sigma_dual, gaps.x0_norm,
                                        64));
    write_manifest(curves, cfg, "diagnose");

    const bool sound = rep.all_asserted_pass() && gaps.total_violations() == 0 && mc.exceeds_bound;
    return sound ? 0 : 1;
}

int cmd_gap_hist(const RunConfig& cfg, const std::string& coarse_path,
                 const std::string& fine_path, const std::string& out_arg,
                 const std::string& source, int threads) {
    const fs::path out = out_arg.empty() ? default_out(cfg, "gap_hist.csv") : fs::path(out_arg);
    const DatasetSplit split = load_split(cfg.dataset_dir, cfg.split_mode());
    DuetModel fine = DuetModel::load(fine_path);
    auto coarse = load_coarse(coarse_path);

    EvalConfig ec = eval_config(cfg, "test", source == "coarse" ? "coarse-only" : "pipeline",
                                threads);
    ec.histogram_edges = {0.0, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0};
    const EvalReport report = evaluate(fine, coarse.get(), split, ec);
    write_text(out, report.histogram.to_csv());
    write_manifest(out, cfg, "gap-hist");
    const long total = report.histogram.total();
    std::cout << "histogram over " << total << " incorrect candidates ("
              << (source == "coarse" ? "coarse" : "fine") << " scores); near-zero bin: "
              << (total ? static_cast<double>(report.histogram.counts[0]) / total : 0.0) << "\n";
    return 0;
}

}  // namespace

int run_command(const std::vector<std::string>& argv) {
    CLI::App app{"knowledge-graph completion with dual-pathway scoring and coarse-to-fine "
                 "inference"};
    app.require_subcommand(1);
    int threads = 1;
    bool deterministic = true;
    app.add_option("--threads", threads, "worker threads for evaluation")->capture_default_str();
    app.add_flag("--deterministic,!--no-deterministic", deterministic,
                 "ordered reductions (always honored; flag kept for run manifests)");
    app.fallthrough();

    std::string config_path, out, coarse_path, fine_path;
    std::string split_sel = "test", scope = "pipeline", source = "fine";

    auto add_config = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON run configuration")->required();
        cmd->add_option("--out", out, "output artifact path");
    };
    CLI::App* tc = app.add_subcommand("train-coarse", "train the stage-1 scorer");
    add_config(tc);
    CLI::App* tf = app.add_subcommand("train-fine", "train the dual-pathway model");
    add_config(tf);
    CLI::App* ev = app.add_subcommand("eval", "ranking metrics on a data split");
    add_config(ev);
    ev->add_option("--coarse", coarse_path, "coarse checkpoint");
    ev->add_option("--fine", fine_path, "fine checkpoint")->required();
    ev->add_option("--split", split_sel, "test|valid")->check(CLI::IsMember({"test", "valid"}));
    ev->add_option("--scope", scope, "pipeline|fine-only|coarse-only")
        ->check(CLI::IsMember({"pipeline", "fine-only", "coarse-only"}));
    CLI::App* pr = app.add_subcommand("predict", "per-query decisions and top-10 rankings");
    add_config(pr);
    pr->add_option("--coarse", coarse_path, "coarse checkpoint")->required();
    pr->add_option("--fine", fine_path, "fine checkpoint")->required();
    CLI::App* dg = app.add_subcommand("diagnose", "spectral theory checks on a dataset subgraph");
    add_config(dg);
    dg->add_option("--fine", fine_path, "fine checkpoint (random-initialized model when absent)");
    CLI::App* gh = app.add_subcommand("gap-hist", "normalized score-gap histogram");
    add_config(gh);
    gh->add_option("--coarse", coarse_path, "coarse checkpoint")->required();
    gh->add_option("--fine", fine_path, "fine checkpoint")->required();
    gh->add_option("--source", source, "fine|coarse")->check(CLI::IsMember({"fine", "coarse"}));

    std::vector<const char*> cargv;
    cargv.push_back("duetgraph");
    for (const auto& a : argv) cargv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(cargv.size()), cargv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        const RunConfig cfg = parse_config(config_path);
        if (tc->parsed()) return cmd_train_coarse(cfg, out);
        if (tf->parsed()) return cmd_train_fine(cfg, out);
        if (ev->parsed()) {
            if (scope != "fine-only" && coarse_path.empty())
                throw ContractError("eval: --coarse is required unless --scope fine-only");
            return cmd_eval(cfg, coarse_path, fine_path, out, split_sel, scope, threads);
        }
        if (pr->parsed()) return cmd_predict(cfg, coarse_path, fine_path, out);
        if (dg->parsed()) return cmd_diagnose(cfg, fine_path, out);
        if (gh->parsed()) return cmd_gap_hist(cfg, coarse_path, fine_path, out, source, threads);
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace duet

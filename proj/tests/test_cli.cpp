#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstring>
#include <fstream>
#include <sstream>

#include "duet/cli.hpp"
#include "duet/config.hpp"
#include "duet/kinship.hpp"

using namespace duet;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("duet_cli_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::trunc);
    out << text;
}

}  // namespace

TEST_CASE("parse_config: defaults, overrides, and rejection of bad input") {
    const RunConfig defaults = parse_config_text("{}");
    CHECK(defaults.lr == 5e-4);
    CHECK(defaults.weight_decay == 1e-5);
    CHECK(defaults.hidden_dim == 32);
    CHECK(defaults.negatives == 128);
    CHECK(defaults.k == 4);
    CHECK(defaults.delta == 8.0);
    CHECK(defaults.seed == 42);
    CHECK(defaults.mode == "transductive");
    CHECK(defaults.eval_protocol == "filtered");

    const RunConfig overridden = parse_config_text("{\"hidden_dim\": 64}");
    CHECK(overridden.hidden_dim == 64);
    CHECK(overridden.lr == 5e-4);

    CHECK_THROWS_AS(parse_config_text("{\"k\": 0}"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("{\"lr\": -1.0}"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("not json"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[1,2]"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("{\"mode\": \"sideways\"}"), ConfigError);

    try {
        parse_config_text("{\"mystery_knob\": 1, \"other\": 2}");
        FAIL("expected unknown-key rejection");
    } catch (const ConfigError& e) {
        const std::string what = e.what();
        CHECK(what.find("mystery_knob") != std::string::npos);
        CHECK(what.find("other") != std::string::npos);
    }

    const RunConfig inf_delta = parse_config_text("{\"delta\": \"inf\"}");
    CHECK(std::isinf(inf_delta.delta));
    CHECK(inf_delta.delta > 0);
    CHECK(parse_config_text(inf_delta.to_json()).delta == inf_delta.delta);
}

TEST_CASE("config echo round-trips through JSON") {
    const std::string text =
        "{\"hidden_dim\": 16, \"epochs\": 3, \"coarse\": \"structural\", \"seed\": 7}";
    const RunConfig cfg = parse_config_text(text);
    const RunConfig again = parse_config_text(cfg.to_json());
    CHECK(again.hidden_dim == cfg.hidden_dim);
    CHECK(again.epochs == cfg.epochs);
    CHECK(again.coarse == cfg.coarse);
    CHECK(again.seed == cfg.seed);
    CHECK(again.to_json() == cfg.to_json());
}

TEST_CASE("usage errors exit with code 2") {
    CHECK(run_command({"frobnicate"}) == 2);
    CHECK(run_command({}) == 2);
    CHECK(run_command({"eval", "--config"}) == 2);
    CHECK(run_command({"train-fine", "--no-such-flag"}) == 2);
    CHECK(run_command({"--help"}) == 0);
}

TEST_CASE("runtime errors exit with code 1") {
    CHECK(run_command({"train-fine", "--config", "/nonexistent/config.json"}) == 1);

    const fs::path dir = fresh_dir("badcfg");
    write_file(dir / "bad.json", "{\"k\": 0}");
    CHECK(run_command({"train-fine", "--config", (dir / "bad.json").string()}) == 1);
}

TEST_CASE("full command pipeline on a small kinship dataset") {
    const fs::path dir = fresh_dir("pipeline");
    const fs::path data = dir / "data";
    KinshipOptions opts;
    opts.families = 4;
    opts.seed = 160;
    write_kinship_dataset(data, opts);

    const fs::path out = dir / "out";
    std::ostringstream cfg;
    cfg << "{\"dataset_dir\": \"" << data.string() << "\", \"output_dir\": \"" << out.string()
        << "\", \"hidden_dim\": 8, \"encoder_layers\": 1, \"local_layers\": 2, "
           "\"global_layers\": 1, \"negatives\": 4, \"epochs\": 2, \"coarse_epochs\": 5, "
           "\"coarse_dim\": 8, \"k\": 3, \"delta\": 2.0, \"seed\": 11, "
           "\"diagnostics_cap\": 64}";
    const fs::path cfg_path = dir / "run.json";
    write_file(cfg_path, cfg.str());

    const std::string c = cfg_path.string();
    REQUIRE(run_command({"train-coarse", "--config", c}) == 0);
    REQUIRE(fs::exists(out / "coarse.ckpt"));
    CHECK(fs::exists(out / "coarse.ckpt.manifest.json"));

    REQUIRE(run_command({"train-fine", "--config", c}) == 0);
    REQUIRE(fs::exists(out / "fine.ckpt"));
    CHECK(fs::exists(out / "fine.ckpt.manifest.json"));
    CHECK(fs::exists(out / "fine.ckpt.train.jsonl"));

    // the stats stream is one JSON record per epoch
    {
        std::ifstream log(out / "fine.ckpt.train.jsonl");
        std::string line;
        int lines = 0;
        while (std::getline(log, line)) {
            ++lines;
            CHECK(line.find("\"alpha\":") != std::string::npos);
            CHECK(line.find("\"epoch\":") != std::string::npos);
            CHECK(line.find("\"mean_loss\":") != std::string::npos);
        }
        CHECK(lines == 2);
    }

    REQUIRE(run_command({"eval", "--config", c, "--coarse", (out / "coarse.ckpt").string(),
                         "--fine", (out / "fine.ckpt").string(), "--out",
                         (out / "m.json").string()}) == 0);
    REQUIRE(fs::exists(out / "m.json"));
    CHECK(fs::exists(out / "m.json.manifest.json"));
    const std::string metrics = slurp(out / "m.json");
    CHECK(metrics.find("\"mrr\":") != std::string::npos);
    CHECK(metrics.find("\"hits@1\":") != std::string::npos);
    CHECK(metrics.find("\"protocol\":\"filtered\"") != std::string::npos);

    // the manifest echoes the fully-defaulted config and the seed
    const std::string manifest = slurp(out / "m.json.manifest.json");
    CHECK(manifest.find("\"seed\":11") != std::string::npos);
    CHECK(manifest.find("\"command\":\"eval\"") != std::string::npos);
    CHECK(manifest.find("\"lr\":0.0005") != std::string::npos);

    REQUIRE(run_command({"predict", "--config", c, "--coarse", (out / "coarse.ckpt").string(),
                         "--fine", (out / "fine.ckpt").string(), "--out",
                         (out / "p.jsonl").string()}) == 0);
    const std::string preds = slurp(out / "p.jsonl");
    CHECK(preds.find("\"chosen\":") != std::string::npos);
    CHECK(preds.find("\"top10\":[") != std::string::npos);
    CHECK(preds.find("\"source\":") != std::string::npos);

    REQUIRE(run_command({"gap-hist", "--config", c, "--coarse", (out / "coarse.ckpt").string(),
                         "--fine", (out / "fine.ckpt").string(), "--out",
                         (out / "hist.csv").string()}) == 0);
    const std::string hist = slurp(out / "hist.csv");
    CHECK(hist.find("0.000000,0.020000,") != std::string::npos);

    const int diag = run_command({"diagnose", "--config", c, "--fine",
                                  (out / "fine.ckpt").string(), "--out",
                                  (out / "diag.json").string()});
    CHECK(diag == 0);  // sound inequalities must hold on this graph
    const std::string diag_json = slurp(out / "diag.json");
    CHECK(diag_json.find("sigma_dual") != std::string::npos);
    CHECK(fs::exists(out / "diag.json.curves.csv"));

    // a cap below |V| forces diagnosis onto a BFS-connected subgraph
    std::string capped_cfg = cfg.str();
    capped_cfg.replace(capped_cfg.find("\"diagnostics_cap\": 64"),
                       std::strlen("\"diagnostics_cap\": 64"), "\"diagnostics_cap\": 12");
    write_file(dir / "run_capped.json", capped_cfg);
    CHECK(run_command({"diagnose", "--config", (dir / "run_capped.json").string(), "--fine",
                       (out / "fine.ckpt").string(), "--out",
                       (out / "diag_capped.json").string()}) == 0);
    CHECK(fs::exists(out / "diag_capped.json"));
}

TEST_CASE("identical config and seed reproduce checkpoints and metrics byte for byte") {
    const fs::path dir = fresh_dir("determinism");
    const fs::path data = dir / "data";
    KinshipOptions opts;
    opts.families = 3;
    opts.seed = 161;
    write_kinship_dataset(data, opts);

    auto run_once = [&](const std::string& tag) {
        const fs::path out = dir / tag;
        std::ostringstream cfg;
        cfg << "{\"dataset_dir\": \"" << data.string() << "\", \"output_dir\": \""
            << out.string()
            << "\", \"hidden_dim\": 6, \"negatives\": 3, \"epochs\": 2, \"coarse_epochs\": 3, "
               "\"coarse_dim\": 6, \"seed\": 77}";
        const fs::path cfg_path = dir / (tag + ".json");
        write_file(cfg_path, cfg.str());
        const std::string c = cfg_path.string();
        REQUIRE(run_command({"train-coarse", "--config", c}) == 0);
        REQUIRE(run_command({"train-fine", "--config", c}) == 0);
        REQUIRE(run_command({"eval", "--config", c, "--coarse", (out / "coarse.ckpt").string(),
                             "--fine", (out / "fine.ckpt").string()}) == 0);
        return std::make_tuple(slurp(out / "coarse.ckpt"), slurp(out / "fine.ckpt"),
                               slurp(out / "metrics.json"));
    };
    const auto a = run_once("runA");
    const auto b = run_once("runB");
    CHECK(std::get<0>(a) == std::get<0>(b));
    CHECK(std::get<1>(a) == std::get<1>(b));
    CHECK(std::get<2>(a) == std::get<2>(b));
}

TEST_CASE("raw (unfiltered) evaluation protocol is selectable") {
    const fs::path dir = fresh_dir("raw");
    const fs::path data = dir / "data";
    KinshipOptions opts;
    opts.families = 3;
    opts.seed = 163;
    write_kinship_dataset(data, opts);
    const fs::path out = dir / "out";
    std::ostringstream cfg;
    cfg << "{\"dataset_dir\": \"" << data.string() << "\", \"output_dir\": \"" << out.string()
        << "\", \"hidden_dim\": 6, \"negatives\": 3, \"epochs\": 1, \"seed\": 5, "
           "\"eval_protocol\": \"raw\"}";
    const fs::path cfg_path = dir / "run.json";
    write_file(cfg_path, cfg.str());
    const std::string c = cfg_path.string();
    REQUIRE(run_command({"train-fine", "--config", c}) == 0);
    REQUIRE(run_command({"eval", "--config", c, "--fine", (out / "fine.ckpt").string(),
                         "--scope", "fine-only", "--out", (out / "m.json").string()}) == 0);
    CHECK(slurp(out / "m.json").find("\"protocol\":\"raw\"") != std::string::npos);
}

TEST_CASE("eval --scope fine-only works without a coarse checkpoint") {
    const fs::path dir = fresh_dir("fineonly");
    const fs::path data = dir / "data";
    KinshipOptions opts;
    opts.families = 3;
    opts.seed = 162;
    write_kinship_dataset(data, opts);
    const fs::path out = dir / "out";
    std::ostringstream cfg;
    cfg << "{\"dataset_dir\": \"" << data.string() << "\", \"output_dir\": \"" << out.string()
        << "\", \"hidden_dim\": 6, \"negatives\": 3, \"epochs\": 1, \"seed\": 5}";
    const fs::path cfg_path = dir / "run.json";
    write_file(cfg_path, cfg.str());
    const std::string c = cfg_path.string();
    REQUIRE(run_command({"train-fine", "--config", c}) == 0);
    CHECK(run_command({"eval", "--config", c, "--fine", (out / "fine.ckpt").string(),
                       "--scope", "fine-only"}) == 0);
    // pipeline scope without --coarse is a runtime error, not a crash
    CHECK(run_command({"eval", "--config", c, "--fine", (out / "fine.ckpt").string()}) == 1);
}

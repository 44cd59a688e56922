#include "duet/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

namespace duet {

using nlohmann::json;

namespace {

const std::set<std::string> kKnownKeys = {
    "dataset_dir",    "mode",          "hidden_dim",     "encoder_layers",
    "local_layers",   "global_layers", "attention_kernel", "activation",
    "lr",             "weight_decay",  "negatives",      "epochs",
    "k",              "delta",         "seed",           "coarse",
    "coarse_dim",     "coarse_local_layers", "coarse_lr", "coarse_epochs",
    "eval_protocol",  "output_dir",    "diagnostics_cap"};

void require_range(bool ok, const std::string& key, const std::string& expect) {
    if (!ok) throw ConfigError("config key \"" + key + "\" out of range: expected " + expect);
}

template <class T>
T get_int(const json& j, const std::string& key, T fallback, long long lo, long long hi) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number_integer())
        throw ConfigError("config key \"" + key + "\" must be an integer");
    const long long x = v.get<long long>();
    require_range(x >= lo && x <= hi, key,
                  "[" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return static_cast<T>(x);
}

double get_real(const json& j, const std::string& key, double fallback, double lo, double hi) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_number()) throw ConfigError("config key \"" + key + "\" must be a number");
    const double x = v.get<double>();
    require_range(x >= lo && x <= hi, key,
                  "[" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return x;
}

std::string get_choice(const json& j, const std::string& key, std::string fallback,
                       const std::set<std::string>& allowed) {
    if (!j.contains(key)) return fallback;
    const json& v = j.at(key);
    if (!v.is_string()) throw ConfigError("config key \"" + key + "\" must be a string");
    const std::string s = v.get<std::string>();
    if (!allowed.count(s)) {
        std::string opts;
        for (const auto& a : allowed) opts += (opts.empty() ? "" : ", ") + a;
        throw ConfigError("config key \"" + key + "\" must be one of: " + opts);
    }
    return s;
}

}  // namespace

SplitMode RunConfig::split_mode() const {
    return mode == "inductive" ? SplitMode::inductive : SplitMode::transductive;
}

ModelConfig RunConfig::model_config() const {
    ModelConfig mc;
    mc.hidden_dim = hidden_dim;
    mc.encoder_layers = encoder_layers;
    mc.local_layers = local_layers;
    mc.global_layers = global_layers;
    mc.kernel = attention_kernel == "softmax" ? AttentionKernel::softmax : AttentionKernel::linear;
    mc.activation = activation == "relu" ? Activation::relu : Activation::tanh;
    return mc;
}

TrainConfig RunConfig::train_config() const {
    TrainConfig tc;
    tc.lr = lr;
    tc.weight_decay = weight_decay;
    tc.negatives = negatives;
    tc.epochs = epochs;
    tc.seed = seed;
    return tc;
}

std::string RunConfig::to_json() const {
    json j;
    j["dataset_dir"] = dataset_dir;
    j["mode"] = mode;
    j["hidden_dim"] = hidden_dim;
    j["encoder_layers"] = encoder_layers;
    j["local_layers"] = local_layers;
    j["global_layers"] = global_layers;
    j["attention_kernel"] = attention_kernel;
    j["activation"] = activation;
    j["lr"] = lr;
    j["weight_decay"] = weight_decay;
    j["negatives"] = negatives;
    j["epochs"] = epochs;
    j["k"] = k;
    if (std::isinf(delta))
        j["delta"] = delta > 0 ? "inf" : "-inf";
    else
        j["delta"] = delta;
    j["seed"] = seed;
    j["coarse"] = coarse;
    j["coarse_dim"] = coarse_dim;
    j["coarse_local_layers"] = coarse_local_layers;
    j["coarse_lr"] = coarse_lr;
    j["coarse_epochs"] = coarse_epochs;
    j["eval_protocol"] = eval_protocol;
    j["output_dir"] = output_dir;
    j["diagnostics_cap"] = diagnostics_cap;
    return j.dump();  // nlohmann::json orders keys
}

RunConfig parse_config_text(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");

    std::string unknown;
    for (const auto& [key, _] : j.items())
        if (!kKnownKeys.count(key)) unknown += (unknown.empty() ? "" : ", ") + key;
    if (!unknown.empty()) throw ConfigError("unknown config keys: " + unknown);

    RunConfig c;
    if (j.contains("dataset_dir")) {
        if (!j.at("dataset_dir").is_string())
            throw ConfigError("config key \"dataset_dir\" must be a string");
        c.dataset_dir = j.at("dataset_dir").get<std::string>();
    }
    c.mode = get_choice(j, "mode", c.mode, {"transductive", "inductive"});
    c.hidden_dim = get_int<size_t>(j, "hidden_dim", c.hidden_dim, 1, 4096);
    c.encoder_layers = get_int<int>(j, "encoder_layers", c.encoder_layers, 0, 8);
    c.local_layers = get_int<int>(j, "local_layers", c.local_layers, 0, 8);
    c.global_layers = get_int<int>(j, "global_layers", c.global_layers, 0, 8);
    c.attention_kernel =
        get_choice(j, "attention_kernel", c.attention_kernel, {"softmax", "linear"});
    c.activation = get_choice(j, "activation", c.activation, {"relu", "tanh"});
    c.lr = get_real(j, "lr", c.lr, 1e-12, 1.0);
    c.weight_decay = get_real(j, "weight_decay", c.weight_decay, 0.0, 1.0);
    c.negatives = get_int<size_t>(j, "negatives", c.negatives, 1, 1000000);
    c.epochs = get_int<int>(j, "epochs", c.epochs, 0, 1000000);
    c.k = get_int<size_t>(j, "k", c.k, 1, 1000000000);
    if (j.contains("delta")) {
        const json& v = j.at("delta");
        if (v.is_string()) {
            const std::string s = v.get<std::string>();
            if (s == "inf" || s == "+inf")
                c.delta = std::numeric_limits<double>::infinity();
            else if (s == "-inf")
                c.delta = -std::numeric_limits<double>::infinity();
            else
                throw ConfigError("config key \"delta\" must be a number, \"inf\" or \"-inf\"");
        } else if (v.is_number()) {
            c.delta = v.get<double>();
        } else {
            throw ConfigError("config key \"delta\" must be a number, \"inf\" or \"-inf\"");
        }
    }
    if (j.contains("seed")) {
        const json& v = j.at("seed");
        if (!v.is_number_unsigned() && !v.is_number_integer())
            throw ConfigError("config key \"seed\" must be a nonnegative integer");
        const long long s = v.get<long long>();
        require_range(s >= 0, "seed", "a nonnegative integer");
        c.seed = static_cast<uint64_t>(s);
    }
    c.coarse = get_choice(j, "coarse", c.coarse, {"triplet", "structural"});
    c.coarse_dim = get_int<size_t>(j, "coarse_dim", c.coarse_dim, 1, 4096);
    c.coarse_local_layers = get_int<int>(j, "coarse_local_layers", c.coarse_local_layers, 1, 4);
    c.coarse_lr = get_real(j, "coarse_lr", c.coarse_lr, 1e-12, 1.0);
    c.coarse_epochs = get_int<int>(j, "coarse_epochs", c.coarse_epochs, 0, 1000000);
    c.eval_protocol = get_choice(j, "eval_protocol", c.eval_protocol, {"filtered", "raw"});
    if (j.contains("output_dir")) {
        if (!j.at("output_dir").is_string())
            throw ConfigError("config key \"output_dir\" must be a string");
        c.output_dir = j.at("output_dir").get<std::string>();
    }
    c.diagnostics_cap = get_int<size_t>(j, "diagnostics_cap", c.diagnostics_cap, 2, 5000);
    return c;
}

RunConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

}  // namespace duet

#pragma once

#include <filesystem>
#include <string>

#include "duet/model.hpp"
#include "duet/train.hpp"

namespace duet {

// Run configuration, parsed from a JSON object. Absent keys take the
// defaults below; unknown keys and out-of-range values are rejected so a
// typo cannot silently change a run.
struct RunConfig {
    std::string dataset_dir;
    std::string mode = "transductive";  // or "inductive"
    size_t hidden_dim = 32;
    int encoder_layers = 1;
    int local_layers = 2;
    int global_layers = 1;
    std::string attention_kernel = "softmax";  // "linear" streams without the dense matrix
    std::string activation = "relu";          // "relu" | "tanh"
    double lr = 5e-4;
    double weight_decay = 1e-5;
    size_t negatives = 128;
    int epochs = 10;
    size_t k = 4;
    double delta = 8.0;
    uint64_t seed = 42;
    std::string coarse = "triplet";  // "triplet" | "structural"
    size_t coarse_dim = 32;
    int coarse_local_layers = 1;
    double coarse_lr = 1e-2;
    int coarse_epochs = 50;
    std::string eval_protocol = "filtered";  // "filtered" | "raw"
    std::string output_dir = "out";
    size_t diagnostics_cap = 2000;

    SplitMode split_mode() const;
    ModelConfig model_config() const;
    TrainConfig train_config() const;
    // Canonical JSON echo with every default applied (sorted keys).
    std::string to_json() const;
};

RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_text(const std::string& json_text);

}  // namespace duet

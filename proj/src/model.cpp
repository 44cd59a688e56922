#include "duet/model.hpp"

#include <cmath>

#include "duet/checkpoint.hpp"

namespace duet {

NodeId ScoreMlp::forward_rows(Tape& tape, NodeId z) {
    NodeId h = tape.add_row_bias(tape.matmul(z, tape.watch(w1)), tape.watch(b1));
    h = apply_activation(tape, h, activation);
    NodeId s = tape.add_row_bias(tape.matmul(h, tape.watch(w2)), tape.watch(b2));
    return tape.reshape(s, {tape.value(s).rows()});
}

double ScoreMlp::forward_row(const double* x, size_t d) const {
    const size_t hdim = w1.value.cols();
    std::vector<double> h(hdim);
    for (size_t j = 0; j < hdim; ++j) {
        double acc = b1.value.data[j];
        for (size_t i = 0; i < d; ++i) acc += x[i] * w1.value.data[i * hdim + j];
        if (activation == Activation::relu)
            h[j] = acc > 0.0 ? acc : 0.0;
        else
            h[j] = std::tanh(acc);
    }
    double s = b2.value.data[0];
    for (size_t j = 0; j < hdim; ++j) s += h[j] * w2.value.data[j];
    return s;
}

LipschitzEstimate estimate_lipschitz(const ScoreMlp& mlp) {
    LipschitzEstimate est;
    est.method = "per-layer spectral norm product";
    est.l_f = spectral_norm(mlp.w1.value, 50000, 1e-12).sigma *
              spectral_norm(mlp.w2.value, 50000, 1e-12).sigma;
    return est;
}

NodeId fuse(Tape& tape, NodeId alpha, NodeId z_local, NodeId z_global) {
    const double a = tape.value(alpha).data[0];
    if (!(a > 0.0 && a < 1.0))
        throw ContractError("fuse: alpha must lie strictly inside (0,1)");
    return tape.lerp(alpha, z_local, z_global);
}

DuetModel::DuetModel(const ModelConfig& cfg, size_t n_relations_base, Rng& init)
    : cfg_(cfg), n_relations_base_(n_relations_base) {
    const size_t d = cfg.hidden_dim;
    if (d == 0) throw ContractError("hidden_dim must be positive");
    const double w_std = 1.0 / std::sqrt(static_cast<double>(d));

    rel_emb_ = Parameter("rel_emb", Tensor::random_normal({2 * n_relations_base, d}, init, 1.0));
    for (int l = 0; l < cfg.local_layers; ++l) {
        LocalLayer layer;
        layer.weight = Parameter("local." + std::to_string(l) + ".weight",
                                 Tensor::random_normal({d, d}, init, w_std));
        layer.self_weight = Parameter("local." + std::to_string(l) + ".self_weight",
                                      Tensor::random_normal({d, d}, init, w_std));
        layer.bias = Parameter("local." + std::to_string(l) + ".bias", Tensor::zeros({d}));
        local_.layers.push_back(std::move(layer));
    }
    local_.activation = cfg.activation;
    for (int l = 0; l < cfg.global_layers; ++l) {
        GlobalLayer layer;
        const std::string prefix = "global." + std::to_string(l) + ".";
        layer.w_query = Parameter(prefix + "w_query", Tensor::random_normal({d, d}, init, w_std));
        layer.w_key = Parameter(prefix + "w_key", Tensor::random_normal({d, d}, init, w_std));
        layer.w_value = Parameter(prefix + "w_value", Tensor::random_normal({d, d}, init, w_std));
        global_.layers.push_back(std::move(layer));
    }
    global_.kernel = cfg.kernel;
    fusion_logit_ = Parameter("fusion_logit", Tensor::zeros({1}));  // alpha starts at 0.5
    mlp_.w1 = Parameter("mlp.w1", Tensor::random_normal({d, d}, init, w_std));
    mlp_.b1 = Parameter("mlp.b1", Tensor::zeros({d}));
    mlp_.w2 = Parameter("mlp.w2", Tensor::random_normal({d, 1}, init, w_std));
    mlp_.b2 = Parameter("mlp.b2", Tensor::zeros({1}));
    mlp_.activation = cfg.activation;
}

std::vector<Parameter*> DuetModel::parameters() {
    std::vector<Parameter*> out;
    out.push_back(&rel_emb_);
    for (auto& l : local_.layers) {
        out.push_back(&l.weight);
        out.push_back(&l.self_weight);
        out.push_back(&l.bias);
    }
    for (auto& l : global_.layers) {
        out.push_back(&l.w_query);
        out.push_back(&l.w_key);
        out.push_back(&l.w_value);
    }
    out.push_back(&fusion_logit_);
    out.push_back(&mlp_.w1);
    out.push_back(&mlp_.b1);
    out.push_back(&mlp_.w2);
    out.push_back(&mlp_.b2);
    return out;
}

double DuetModel::alpha() const {
    const double a = fusion_logit_.value.data[0];
    return 1.0 / (1.0 + std::exp(-a));
}

DuetModel::ForwardOut DuetModel::forward(Tape& tape, const KnowledgeGraph& g, int head, int rel,
                                         bool want_attention, const Triple* excluded,
                                         size_t dense_cap) {
    ForwardOut out;
    const EncoderState enc = encode_input(tape, g, rel_emb_, head, rel, cfg_.encoder_layers,
                                          excluded);
    out.z_local = local_forward(tape, enc, g, local_, excluded);
    const GlobalOut glob = global_forward(tape, enc, global_, want_attention, dense_cap);
    out.z_global = glob.z;
    out.attention = glob.attention;
    const NodeId alpha = tape.logistic(tape.watch(fusion_logit_));
    out.z = fuse(tape, alpha, out.z_local, out.z_global);
    return out;
}

NodeId DuetModel::score_rows(Tape& tape, NodeId z, std::vector<size_t> rows) {
    return mlp_.forward_rows(tape, tape.gather_rows(z, std::move(rows)));
}

NodeId DuetModel::score_entities(Tape& tape, NodeId z) {
    return mlp_.forward_rows(tape, z);
}

std::vector<double> DuetModel::score_all(const KnowledgeGraph& g, int head, int rel,
                                         const Triple* excluded) {
    Tape tape;
    const ForwardOut f = forward(tape, g, head, rel, false, excluded);
    const NodeId s = score_entities(tape, f.z);
    return tape.value(s).data;
}

NodeId negative_sampling_loss(Tape& tape, NodeId scores, size_t answer_idx,
                              const std::vector<size_t>& negative_idxs) {
    if (negative_idxs.empty())
        throw ContractError("negative_sampling_loss: negatives must be nonempty");
    for (size_t n : negative_idxs)
        if (n == answer_idx)
            throw ContractError("negative_sampling_loss: answer appears among negatives");
    const NodeId pos = tape.softplus(tape.neg(tape.gather(scores, {answer_idx})));
    const NodeId neg = tape.sum_all(tape.softplus(tape.gather(scores, negative_idxs)));
    return tape.add(tape.sum_all(pos), neg);
}

void DuetModel::save(const std::filesystem::path& path) const {
    std::map<std::string, std::string> hyper;
    hyper["hidden_dim"] = std::to_string(cfg_.hidden_dim);
    hyper["encoder_layers"] = std::to_string(cfg_.encoder_layers);
    hyper["local_layers"] = std::to_string(cfg_.local_layers);
    hyper["global_layers"] = std::to_string(cfg_.global_layers);
    hyper["kernel"] = cfg_.kernel == AttentionKernel::softmax ? "softmax" : "linear";
    hyper["activation"] = cfg_.activation == Activation::relu ? "relu" : "tanh";
    hyper["n_relations_base"] = std::to_string(n_relations_base_);
    std::vector<const Parameter*> ps;
    for (Parameter* p : const_cast<DuetModel*>(this)->parameters()) ps.push_back(p);
    save_checkpoint_file(path, kFineMagic, hyper, ps);
}

DuetModel DuetModel::load(const std::filesystem::path& path) {
    CheckpointData data = load_checkpoint_file(path, kFineMagic);
    ModelConfig cfg;
    cfg.hidden_dim = std::stoul(data.hyper.at("hidden_dim"));
    cfg.encoder_layers = std::stoi(data.hyper.at("encoder_layers"));
    cfg.local_layers = std::stoi(data.hyper.at("local_layers"));
    cfg.global_layers = std::stoi(data.hyper.at("global_layers"));
    cfg.kernel = data.hyper.at("kernel") == "softmax" ? AttentionKernel::softmax
                                                      : AttentionKernel::linear;
    cfg.activation = data.hyper.at("activation") == "relu" ? Activation::relu : Activation::tanh;
    const size_t n_rel = std::stoul(data.hyper.at("n_relations_base"));

    Rng dummy(0);
    DuetModel model(cfg, n_rel, dummy);
    auto params = model.parameters();
    if (params.size() != data.params.size())
        throw CheckpointError(CheckpointError::Kind::corrupt,
                              "parameter count disagrees with model architecture");
    for (size_t i = 0; i < params.size(); ++i) {
        if (params[i]->name != data.params[i].name ||
            params[i]->value.shape != data.params[i].value.shape)
            throw CheckpointError(CheckpointError::Kind::corrupt,
                                  "parameter layout mismatch at " + data.params[i].name);
        params[i]->value = data.params[i].value;
    }
    return model;
}

}  // namespace duet

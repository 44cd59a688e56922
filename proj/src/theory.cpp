#include "duet/theory.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace duet {

Tensor compose_single_pathway(const Tensor& attention, const Tensor& adjacency, int layers) {
    if (attention.rank() != 2 || attention.rows() != attention.cols())
        throw ShapeError("compose_single_pathway: attention must be square");
    if (!attention.same_shape(adjacency))
        throw ShapeError("compose_single_pathway: shape mismatch");
    if (layers < 0) throw ContractError("compose_single_pathway: negative layer count");
    return matmul(attention, matpow(adjacency, layers));
}

Tensor compose_dual_pathway(const Tensor& attention, const Tensor& adjacency, int layers,
                            double alpha) {
    if (!attention.same_shape(adjacency)) throw ShapeError("compose_dual_pathway: shape mismatch");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ContractError("compose_dual_pathway: alpha must lie strictly inside (0,1)");
    return add(scale(matpow(adjacency, layers), alpha), scale(attention, 1.0 - alpha));
}

void PathwayMatrices::validate() const {
    if (adjacency.rank() != 2 || adjacency.rows() != adjacency.cols())
        throw ShapeError("PathwayMatrices: adjacency must be square");
    if (!adjacency.same_shape(attention)) throw ShapeError("PathwayMatrices: shape mismatch");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ContractError("PathwayMatrices: alpha outside (0,1)");
    if (layers < 0) throw ContractError("PathwayMatrices: negative layer count");
    const size_t n = adjacency.rows();
    for (size_t i = 0; i < n; ++i) {
        double row_sum = 0.0;
        for (size_t j = 0; j < n; ++j) {
            if (std::fabs(adjacency.at(i, j) - adjacency.at(j, i)) > 1e-12)
                throw ContractError("PathwayMatrices: adjacency not symmetric within 1e-12");
            row_sum += attention.at(i, j);
        }
        if (std::fabs(row_sum - 1.0) > 1e-9)
            throw ContractError("PathwayMatrices: attention row does not sum to 1 within 1e-9");
    }
}

bool SpectralReport::all_asserted_pass() const {
    for (const auto& c : asserted)
        if (!c.passed) return false;
    return true;
}

namespace {

std::string fmt_sig(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

void append_checks(std::ostringstream& os, const std::vector<InequalityCheck>& checks) {
    os << "[";
    for (size_t i = 0; i < checks.size(); ++i) {
        const auto& c = checks[i];
        os << (i ? "," : "") << "{\"lhs\":" << fmt_sig(c.lhs) << ",\"name\":\"" << c.name
           << "\",\"passed\":" << (c.passed ? "true" : "false") << ",\"rhs\":" << fmt_sig(c.rhs)
           << "}";
    }
    os << "]";
}

double sigma_of(const Tensor& m) { return spectral_norm(m, 200000, 1e-11).sigma; }

}  // namespace

std::string SpectralReport::to_canonical_json() const {
    std::ostringstream os;
    os << "{\"alpha\":" << fmt_sig(alpha);
    os << ",\"alpha_below_threshold\":" << (alpha_below_threshold ? "true" : "false");
    os << ",\"alpha_threshold\":" << fmt_sig(alpha_threshold);
    os << ",\"asserted\":";
    append_checks(os, asserted);
    os << ",\"reported\":";
    append_checks(os, reported);
    os << ",\"sigma_adjacency_pow\":" << fmt_sig(sigma_adjacency_pow);
    os << ",\"sigma_attention\":" << fmt_sig(sigma_attention);
    os << ",\"sigma_dual\":" << fmt_sig(sigma_dual);
    os << ",\"sigma_single\":" << fmt_sig(sigma_single);
    os << "}";
    return os.str();
}

SpectralReport singular_report(const PathwayMatrices& matrices) {
    matrices.validate();
    const Tensor a_pow = matpow(matrices.adjacency, matrices.layers);
    const Tensor m_single = matmul(matrices.attention, a_pow);
    const Tensor m_dual =
        add(scale(a_pow, matrices.alpha), scale(matrices.attention, 1.0 - matrices.alpha));

    SpectralReport rep;
    rep.alpha = matrices.alpha;
    rep.sigma_adjacency_pow = sigma_of(a_pow);
    rep.sigma_attention = sigma_of(matrices.attention);
    rep.sigma_single = sigma_of(m_single);
    rep.sigma_dual = sigma_of(m_dual);

    const double tol = 1e-9;
    auto check = [&](std::vector<InequalityCheck>& dst, const std::string& name, double lhs,
                     double rhs, bool ok) { dst.push_back({name, lhs, rhs, ok}); };

    // Sound steps of the derivation, each with 1e-9 slack.
    check(rep.asserted, "sigma(A^L) == 1", rep.sigma_adjacency_pow, 1.0,
          std::fabs(rep.sigma_adjacency_pow - 1.0) <= tol);
    check(rep.asserted, "sigma(P A^L) <= sigma(P) sigma(A^L)", rep.sigma_single,
          rep.sigma_attention * rep.sigma_adjacency_pow,
          rep.sigma_single <= rep.sigma_attention * rep.sigma_adjacency_pow + tol);
    const double triangle =
        matrices.alpha * rep.sigma_adjacency_pow + (1.0 - matrices.alpha) * rep.sigma_attention;
    check(rep.asserted, "sigma(M_D) <= a sigma(A^L) + (1-a) sigma(P)", rep.sigma_dual, triangle,
          rep.sigma_dual <= triangle + tol);
    const double reverse = std::fabs(matrices.alpha - (1.0 - matrices.alpha) * rep.sigma_attention);
    check(rep.asserted, "sigma(M_D) >= |a - (1-a) sigma(P)|", rep.sigma_dual, reverse,
          rep.sigma_dual >= reverse - tol);

    // Strict-contraction observations; a row-stochastic P has sigma >= 1, so
    // these can legitimately fail and are only recorded.
    check(rep.reported, "sigma(P) < 1", rep.sigma_attention, 1.0, rep.sigma_attention < 1.0);
    check(rep.reported, "sigma(M_O) < 1", rep.sigma_single, 1.0, rep.sigma_single < 1.0);
    check(rep.reported, "sigma(M_D) < 1", rep.sigma_dual, 1.0, rep.sigma_dual < 1.0);

    rep.alpha_threshold = alpha_threshold(rep.sigma_single, rep.sigma_dual);
    rep.alpha_below_threshold = matrices.alpha < rep.alpha_threshold;
    return rep;
}

double alpha_threshold(double sigma_single, double sigma_dual) {
    if (sigma_single < 0.0 || sigma_dual < 0.0)
        throw ContractError("alpha_threshold: singular values must be nonnegative");
    return (sigma_dual + sigma_single) / (1.0 + sigma_single);
}

double gap_upper_bound(double l_f, double sigma_max, int layers, double x0_norm) {
    if (l_f < 0.0 || sigma_max < 0.0 || x0_norm < 0.0 || layers < 0)
        throw ContractError("gap_upper_bound: inputs must be nonnegative");
    return 2.0 * l_f * std::pow(sigma_max, layers) * x0_norm;
}

int GapBoundReport::total_violations() const {
    int v = 0;
    for (const auto& l : layers) v += l.violations;
    return v;
}

GapBoundReport empirical_gap_vs_bound(DuetModel& model, const KnowledgeGraph& g, int head,
                                      int rel, int pair_count, int max_layers, Rng& rng) {
    const size_t n = g.n_entities();
    const size_t d = model.config().hidden_dim;

    // Theory-side operator pieces, measured from the actual model: dense
    // attention at X0, the normalized adjacency, the learned alpha.
    Tensor x0 = Tensor::zeros({n, d});
    {
        const Tensor& emb = model.relation_embeddings().value;
        for (size_t j = 0; j < d; ++j)
            x0.at(static_cast<size_t>(head), j) = emb.at(static_cast<size_t>(rel), j);
    }
    Tensor attention;
    {
        Tape tape;
        const auto fwd = model.forward(tape, g, head, rel, /*want_attention=*/true);
        if (fwd.attention < 0)
            throw ContractError("empirical_gap_vs_bound: model has no attention layer");
        attention = tape.value(fwd.attention);
    }
    const Tensor adjacency = build_normalized_adjacency(g, true);
    const double alpha = model.alpha();
    const Tensor m_dual = compose_dual_pathway(attention, adjacency, model.config().local_layers,
                                               alpha);

    GapBoundReport rep;
    rep.alpha = alpha;
    rep.sigma_dual = sigma_of(m_dual);
    rep.l_f = estimate_lipschitz(model.mlp()).l_f;
    rep.x0_norm = sigma_of(x0);
    rep.pairs_per_layer = pair_count;

    Tensor x = x0;
    for (int layer = 0; layer <= max_layers; ++layer) {
        if (layer > 0) x = matmul(m_dual, x);
        std::vector<double> scores(n);
        for (size_t v = 0; v < n; ++v) scores[v] = model.mlp().forward_row(&x.data[v * d], d);
        GapBoundInstance inst;
        inst.layer = layer;
        inst.bound = gap_upper_bound(rep.l_f, rep.sigma_dual, layer, rep.x0_norm);
        for (int p = 0; p < pair_count; ++p) {
            const size_t u = static_cast<size_t>(rng.below(n));
            const size_t v = static_cast<size_t>(rng.below(n));
            const double gap = std::fabs(scores[u] - scores[v]);
            inst.max_gap = std::max(inst.max_gap, gap);
            if (gap > inst.bound + 1e-6) inst.violations += 1;
        }
        rep.layers.push_back(inst);
    }
    return rep;
}

double subtable_gap_lower_bound(double n_high, double n_low, double sigma) {
    if (n_high < 1.0 || n_low < 1.0)
        throw ContractError("subtable_gap_lower_bound: subtable sizes must be at least 1");
    if (sigma < 0.0) throw ContractError("subtable_gap_lower_bound: sigma must be nonnegative");
    return std::fabs((1.0 / (n_high * n_high + 1.0) - 1.0 / (n_low * n_low + 1.0)) * sigma);
}

MonteCarloReport verify_subtable_gap_montecarlo(size_t n_high, size_t n_low, size_t trials, Rng& rng,
                                            const ScoreSampler& sampler) {
    if (n_high < 1 || n_low < 1)
        throw ContractError("verify_subtable_gap_montecarlo: subtable sizes must be at least 1");
    if (trials < 1) throw ContractError("verify_subtable_gap_montecarlo: trials must be positive");

    MonteCarloReport rep;
    rep.n_high = n_high;
    rep.n_low = n_low;
    rep.trials = trials;
    rep.bound = subtable_gap_lower_bound(static_cast<double>(n_high), static_cast<double>(n_low),
                                         1.0);
    double sum = 0.0, sum_sq = 0.0;
    for (size_t t = 0; t < trials; ++t) {
        double max_high = -1e308, max_low = -1e308;
        for (size_t i = 0; i < n_high; ++i)
            max_high = std::max(max_high, sampler ? sampler(rng) : rng.normal());
        for (size_t i = 0; i < n_low; ++i)
            max_low = std::max(max_low, sampler ? sampler(rng) : rng.normal());
        const double gap = std::fabs(max_high - max_low);
        sum += gap;
        sum_sq += gap * gap;
    }
    const double n = static_cast<double>(trials);
    rep.empirical_mean = sum / n;
    const double var = std::max(0.0, sum_sq / n - rep.empirical_mean * rep.empirical_mean);
    rep.std_error = std::sqrt(var / n);
    rep.exceeds_bound = rep.empirical_mean > rep.bound;
    return rep;
}

std::string bound_curves_csv(double l_f, double sigma_single, double sigma_dual, double x0_norm,
                             int max_layers) {
    std::string out = "layer,single_bound,dual_bound\n";
    char buf[128];
    for (int l = 0; l <= max_layers; ++l) {
        std::snprintf(buf, sizeof(buf), "%d,%.12g,%.12g\n", l,
                      gap_upper_bound(l_f, sigma_single, l, x0_norm),
                      gap_upper_bound(l_f, sigma_dual, l, x0_norm));
        out += buf;
    }
    return out;
}

}  // namespace duet

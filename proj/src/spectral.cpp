#include "duet/spectral.hpp"

#include <cmath>

#include "duet/rng.hpp"

namespace duet {

namespace {

// y = M x
void apply(const Tensor& m, const std::vector<double>& x, std::vector<double>& y) {
    const size_t r = m.shape[0], c = m.shape[1];
    for (size_t i = 0; i < r; ++i) {
        const double* row = &m.data[i * c];
        double acc = 0.0;
        for (size_t j = 0; j < c; ++j) acc += row[j] * x[j];
        y[i] = acc;
    }
}

// y = Mᵀ x
void apply_t(const Tensor& m, const std::vector<double>& x, std::vector<double>& y) {
    const size_t r = m.shape[0], c = m.shape[1];
    for (size_t j = 0; j < c; ++j) y[j] = 0.0;
    for (size_t i = 0; i < r; ++i) {
        const double* row = &m.data[i * c];
        const double xi = x[i];
        if (xi == 0.0) continue;
        for (size_t j = 0; j < c; ++j) y[j] += row[j] * xi;
    }
}

double norm2(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

}  // namespace

SpectralEstimate spectral_norm(const Tensor& m, int max_iters, double tol, uint64_t seed) {
    if (m.rank() != 2) throw ShapeError("spectral_norm: matrix required, got " + m.shape_str());
    if (m.shape[0] == 0 || m.shape[1] == 0)
        throw ContractError("spectral_norm: empty matrix");
    if (tol <= 0.0) throw ContractError("spectral_norm: tol must be positive");

    const size_t rows = m.shape[0], cols = m.shape[1];
    Rng rng(seed);
    std::vector<double> v(cols), u(rows), w(cols);
    for (auto& x : v) x = rng.normal();
    double vn = norm2(v);
    for (auto& x : v) x /= vn;

    SpectralEstimate est;
    double lambda = 0.0;
    for (int it = 1; it <= max_iters; ++it) {
        est.iterations = it;
        apply(m, v, u);        // u = Mv
        apply_t(m, u, w);      // w = MᵀMv
        lambda = 0.0;          // Rayleigh quotient vᵀ(MᵀM)v, v unit
        for (size_t j = 0; j < cols; ++j) lambda += v[j] * w[j];
        if (lambda <= 1e-300) {
            // Numerically zero operator (or start vector in the null space of
            // a rank-deficient M; the latter is measure-zero for random starts).
            est.sigma = 0.0;
            est.converged = true;
            return est;
        }
        double res = 0.0;
        for (size_t j = 0; j < cols; ++j) {
            const double d = w[j] - lambda * v[j];
            res += d * d;
        }
        res = std::sqrt(res);
        if (res <= tol * lambda) {
            est.sigma = std::sqrt(lambda);
            est.converged = true;
            return est;
        }
        const double wn = norm2(w);
        for (size_t j = 0; j < cols; ++j) v[j] = w[j] / wn;
    }
    est.sigma = std::sqrt(lambda);
    est.converged = false;
    return est;
}

}  // namespace duet

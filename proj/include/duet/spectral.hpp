#pragma once

#include <cstdint>

#include "duet/tensor.hpp"

namespace duet {

struct SpectralEstimate {
    double sigma = 0.0;
    bool converged = false;
    int iterations = 0;
};

// Largest singular value of a (possibly non-square, possibly non-symmetric)
// matrix, by power iteration on MᵀM with a seeded start vector. `tol` is the
// target relative accuracy of sigma; the stopping rule is the eigen-residual
// ‖MᵀMv − λv‖ ≤ tol·λ, which bounds the relative eigenvalue error by tol for
// symmetric MᵀM. If max_iters is exhausted first the last estimate is
// returned with converged = false.
SpectralEstimate spectral_norm(const Tensor& m, int max_iters = 20000, double tol = 1e-10,
                               uint64_t seed = 0x7a31);

// Euclidean operator norm ‖X‖₂ (alias; X need not be square).
inline double operator_norm(const Tensor& m) { return spectral_norm(m).sigma; }

}  // namespace duet

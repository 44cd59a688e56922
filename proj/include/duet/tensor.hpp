#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "duet/errors.hpp"
#include "duet/rng.hpp"

namespace duet {

using Shape = std::vector<size_t>;

// Dense row-major tensor of 64-bit floats. Rank 1 and 2 cover everything
// this project needs; shape checks are explicit and fail fast.
struct Tensor {
    Shape shape;
    std::vector<double> data;

    Tensor() = default;
    Tensor(Shape s, std::vector<double> d);

    static Tensor zeros(const Shape& s);
    static Tensor full(const Shape& s, double v);
    static Tensor scalar(double v) { return Tensor({1}, {v}); }
    static Tensor identity(size_t n);
    static Tensor random_normal(const Shape& s, Rng& rng, double stddev = 1.0);
    // 2-D literal, e.g. Tensor::matrix({{1,2},{3,4}}).
    static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);
    static Tensor vector(std::initializer_list<double> xs);

    size_t numel() const { return data.size(); }
    size_t rank() const { return shape.size(); }
    bool is_scalar() const { return numel() == 1; }
    size_t rows() const;
    size_t cols() const;

    double& at(size_t r, size_t c) { return data[r * cols() + c]; }
    double at(size_t r, size_t c) const { return data[r * cols() + c]; }
    double& operator[](size_t i) { return data[i]; }
    double operator[](size_t i) const { return data[i]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
    bool all_finite() const;
    std::string shape_str() const;
};

size_t shape_numel(const Shape& s);

// ---- kernels (pure; throw ShapeError / NumericError on bad input) ----

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor matvec(const Tensor& m, const Tensor& v);
Tensor transpose(const Tensor& a);
Tensor matpow(const Tensor& a, int l);  // square a only, l >= 0

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);

// Row-wise softmax of a 2-D tensor; rows sum to 1 within 1e-9 and entries
// are strictly positive. NaN input is a NumericError.
Tensor softmax_rows(const Tensor& m);

double frobenius_norm(const Tensor& a);
double max_abs(const Tensor& a);

}  // namespace duet

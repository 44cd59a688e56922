#include "duet/tensor.hpp"

#include <cmath>
#include <sstream>

namespace duet {

size_t shape_numel(const Shape& s) {
    size_t n = 1;
    for (size_t d : s) n *= d;
    return n;
}

Tensor::Tensor(Shape s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != shape_numel(shape)) {
        throw ShapeError("tensor data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_str());
    }
}

Tensor Tensor::zeros(const Shape& s) { return Tensor(s, std::vector<double>(shape_numel(s), 0.0)); }

Tensor Tensor::full(const Shape& s, double v) {
    return Tensor(s, std::vector<double>(shape_numel(s), v));
}

Tensor Tensor::identity(size_t n) {
    Tensor t = zeros({n, n});
    for (size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
}

Tensor Tensor::random_normal(const Shape& s, Rng& rng, double stddev) {
    Tensor t = zeros(s);
    for (auto& x : t.data) x = rng.normal(0.0, stddev);
    return t;
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
    const size_t r = rows.size();
    const size_t c = r == 0 ? 0 : rows.begin()->size();
    Tensor t = zeros({r, c});
    size_t i = 0;
    for (const auto& row : rows) {
        if (row.size() != c) throw ShapeError("ragged matrix literal");
        size_t j = 0;
        for (double v : row) t.at(i, j++) = v;
        ++i;
    }
    return t;
}

Tensor Tensor::vector(std::initializer_list<double> xs) {
    return Tensor({xs.size()}, std::vector<double>(xs));
}

size_t Tensor::rows() const {
    if (rank() != 2) throw ShapeError("rows(): not a matrix, shape " + shape_str());
    return shape[0];
}

size_t Tensor::cols() const {
    if (rank() != 2) throw ShapeError("cols(): not a matrix, shape " + shape_str());
    return shape[1];
}

bool Tensor::all_finite() const {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
    os << "]";
    return os.str();
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2)
        throw ShapeError("matmul: operands must be matrices, got " + a.shape_str() + " and " +
                         b.shape_str());
    if (a.cols() != b.rows())
        throw ShapeError("matmul: inner dimensions disagree, " + a.shape_str() + " x " +
                         b.shape_str());
    const size_t m = a.rows(), k = a.cols(), n = b.cols();
    Tensor out = Tensor::zeros({m, n});
    // i-k-j order keeps both b and out row accesses contiguous.
    for (size_t i = 0; i < m; ++i) {
        const double* arow = &a.data[i * k];
        double* orow = &out.data[i * n];
        for (size_t kk = 0; kk < k; ++kk) {
            const double av = arow[kk];
            if (av == 0.0) continue;
            const double* brow = &b.data[kk * n];
            for (size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

Tensor matvec(const Tensor& m, const Tensor& v) {
    if (m.rank() != 2 || v.rank() != 1)
        throw ShapeError("matvec: expected matrix and vector, got " + m.shape_str() + " and " +
                         v.shape_str());
    if (m.cols() != v.shape[0])
        throw ShapeError("matvec: dimensions disagree, " + m.shape_str() + " x " + v.shape_str());
    const size_t r = m.rows(), c = m.cols();
    Tensor out = Tensor::zeros({r});
    for (size_t i = 0; i < r; ++i) {
        const double* row = &m.data[i * c];
        double acc = 0.0;
        for (size_t j = 0; j < c; ++j) acc += row[j] * v.data[j];
        out.data[i] = acc;
    }
    return out;
}

Tensor transpose(const Tensor& a) {
    const size_t r = a.rows(), c = a.cols();
    Tensor out = Tensor::zeros({c, r});
    for (size_t i = 0; i < r; ++i)
        for (size_t j = 0; j < c; ++j) out.at(j, i) = a.at(i, j);
    return out;
}

Tensor matpow(const Tensor& a, int l) {
    if (a.rank() != 2 || a.rows() != a.cols())
        throw ShapeError("matpow: square matrix required, got " + a.shape_str());
    if (l < 0) throw ContractError("matpow: negative exponent");
    Tensor out = Tensor::identity(a.rows());
    for (int i = 0; i < l; ++i) out = matmul(out, a);
    return out;
}

static void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b))
        throw ShapeError(std::string(op) + ": shape mismatch, " + a.shape_str() + " vs " +
                         b.shape_str());
}

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "add");
    Tensor out = a;
    for (size_t i = 0; i < out.numel(); ++i) out.data[i] += b.data[i];
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "sub");
    Tensor out = a;
    for (size_t i = 0; i < out.numel(); ++i) out.data[i] -= b.data[i];
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape(a, b, "mul");
    Tensor out = a;
    for (size_t i = 0; i < out.numel(); ++i) out.data[i] *= b.data[i];
    return out;
}

Tensor scale(const Tensor& a, double c) {
    Tensor out = a;
    for (auto& v : out.data) v *= c;
    return out;
}

Tensor softmax_rows(const Tensor& m) {
    const size_t r = m.rows(), c = m.cols();
    Tensor out = Tensor::zeros({r, c});
    for (size_t i = 0; i < r; ++i) {
        double mx = -1e308;
        for (size_t j = 0; j < c; ++j) {
            const double v = m.at(i, j);
            if (std::isnan(v)) throw NumericError("softmax_rows: NaN input");
            if (v > mx) mx = v;
        }
        double sum = 0.0;
        for (size_t j = 0; j < c; ++j) {
            const double e = std::exp(m.at(i, j) - mx);
            out.at(i, j) = e;
            sum += e;
        }
        for (size_t j = 0; j < c; ++j) out.at(i, j) /= sum;
    }
    return out;
}

double frobenius_norm(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data) s += v * v;
    return std::sqrt(s);
}

double max_abs(const Tensor& a) {
    double s = 0.0;
    for (double v : a.data) s = std::max(s, std::fabs(v));
    return s;
}

}  // namespace duet

#include "tadbench/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tadbench/error.hpp"

namespace tad {

namespace {
std::size_t product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t s : shape) {
        if (s == 0) throw NumericError("tensor dimensions must be positive");
        n *= s;
    }
    return n;
}
}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape) : shape_(std::move(shape)) {
    data_.assign(product(shape_), 0.0);
    cols_ = shape_.size() == 2 ? shape_[1] : 0;
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (product(shape_) != data_.size())
        throw NumericError("tensor shape does not match data length");
    cols_ = shape_.size() == 2 ? shape_[1] : 0;
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::zeros_like(const Tensor& t) { return Tensor(t.shape_); }

Tensor Tensor::filled(std::vector<std::size_t> shape, double v) {
    Tensor t(std::move(shape));
    t.fill(v);
    return t;
}

std::size_t Tensor::rows() const {
    if (shape_.size() != 2) throw NumericError("rows() requires a rank-2 tensor");
    return shape_[0];
}

std::size_t Tensor::cols() const {
    if (shape_.size() != 2) throw NumericError("cols() requires a rank-2 tensor");
    return shape_[1];
}

double Tensor::item() const {
    if (data_.size() != 1) throw NumericError("item() requires a scalar tensor");
    return data_[0];
}

double Tensor::l2_norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
}

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::add_in_place(const Tensor& other) {
    if (!same_shape(other)) throw NumericError("add_in_place: shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
}

void Tensor::add_scaled_in_place(const Tensor& other, double k) {
    if (!same_shape(other)) throw NumericError("add_scaled_in_place: shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += k * other.data_[i];
}

void Tensor::scale_in_place(double k) {
    for (double& v : data_) v *= k;
}

Tensor matmul_value(const Tensor& a, const Tensor& b) {
    if (a.shape().size() != 2 || b.shape().size() != 2)
        throw NumericError("matmul requires rank-2 tensors");
    if (a.cols() != b.rows()) throw NumericError("matmul: inner dimensions disagree");
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t l = 0; l < k; ++l) {
            const double av = a.at(i, l);
            if (av == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) out.at(i, j) += av * b.at(l, j);
        }
    }
    return out;
}

std::vector<double> softmax_value(const std::vector<double>& z) {
    if (z.size() < 2) throw NumericError("softmax requires at least two entries");
    for (double v : z)
        if (!std::isfinite(v)) throw NumericError("softmax: non-finite input");
    const double m = *std::max_element(z.begin(), z.end());
    std::vector<double> p(z.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        p[i] = std::exp(z[i] - m);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

double entropy_value(const std::vector<double>& p) {
    double h = 0.0;
    for (double v : p) {
        if (v < 0.0) throw NumericError("entropy: negative probability");
        if (v > 0.0) h -= v * std::log(v);
    }
    return h;
}

Tensor l2_project(const Tensor& delta, double max_norm) {
    if (max_norm <= 0.0) throw NumericError("l2_project: max_norm must be positive");
    const double n = delta.l2_norm();
    if (n <= max_norm) return delta;
    Tensor out = delta;
    out.scale_in_place(max_norm / n);
    return out;
}

Tensor random_sphere(std::vector<std::size_t> shape, double norm, Rng& rng) {
    Tensor t(std::move(shape));
    double n = 0.0;
    while (n == 0.0) {
        for (double& v : t.data()) v = rng.normal();
        n = t.l2_norm();
    }
    t.scale_in_place(norm / n);
    return t;
}

}  // namespace tad

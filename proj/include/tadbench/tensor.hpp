#pragma once

#include <cstddef>
#include <vector>

#include "tadbench/rng.hpp"

namespace tad {

// Dense row-major tensor of doubles. Rank 1 or 2 is all the model needs.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor scalar(double v);
    static Tensor zeros_like(const Tensor& t);
    static Tensor filled(std::vector<std::size_t> shape, double v);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t numel() const { return data_.size(); }
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    // 2-D accessors; rows()/cols() require rank 2.
    std::size_t rows() const;
    std::size_t cols() const;
    double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }
    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    double item() const;  // requires numel() == 1

    double l2_norm() const;
    bool all_finite() const;

    void fill(double v);
    void add_in_place(const Tensor& other);            // shapes must match
    void add_scaled_in_place(const Tensor& other, double k);
    void scale_in_place(double k);

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
    std::size_t cols_ = 0;  // cached for 2-D indexing; 0 when rank != 2
};

// Value-level helpers shared by the fast (tapeless) forward path.
Tensor matmul_value(const Tensor& a, const Tensor& b);
std::vector<double> softmax_value(const std::vector<double>& z);
double entropy_value(const std::vector<double>& p);

// Returns delta unchanged when its l2 norm is within max_norm, otherwise
// rescales it onto the max_norm sphere. The zero vector passes through.
Tensor l2_project(const Tensor& delta, double max_norm);

// Uniform direction on the unit sphere scaled to exactly `norm`.
Tensor random_sphere(std::vector<std::size_t> shape, double norm, Rng& rng);

}  // namespace tad

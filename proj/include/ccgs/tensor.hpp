#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace ccgs {

/// Dense row-major tensor of doubles. Everything in the model is rank 1 or 2;
/// scalars are 1x1. Shape checks in the ops throw ShapeError.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor zeros(std::size_t rows, std::size_t cols);
    static Tensor full(std::size_t rows, std::size_t cols, double value);
    static Tensor identity(std::size_t n);
    static Tensor scalar(double value);
    static Tensor row(std::vector<double> values);
    static Tensor from_rows(const std::vector<std::vector<double>>& rows);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t numel() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    std::size_t rows() const;
    std::size_t cols() const;
    bool is_matrix() const { return shape_.size() == 2; }
    bool is_scalar() const { return numel() == 1; }
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    double& at(std::size_t i, std::size_t j);
    double at(std::size_t i, std::size_t j) const;
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    double item() const; // scalar value; throws unless numel()==1

    Tensor reshaped(std::vector<std::size_t> shape) const;

    void fill(double value);
    bool all_finite() const;

    std::string shape_str() const; // e.g. "2x3"

    bool operator==(const Tensor& other) const {
        return shape_ == other.shape_ && data_ == other.data_;
    }

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

} // namespace ccgs

#include "ccgs/tensor.hpp"

#include <cmath>

#include "ccgs/error.hpp"

namespace ccgs {

namespace {
std::size_t shape_numel(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return shape.empty() ? 0 : n;
}
} // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(shape_numel(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_numel(shape_)) {
        throw ShapeError("tensor: data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_str());
    }
}

Tensor Tensor::zeros(std::size_t rows, std::size_t cols) { return Tensor({rows, cols}); }

Tensor Tensor::full(std::size_t rows, std::size_t cols, double value) {
    Tensor t({rows, cols});
    t.fill(value);
    return t;
}

Tensor Tensor::identity(std::size_t n) {
    Tensor t({n, n});
    for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
}

Tensor Tensor::scalar(double value) { return Tensor({1, 1}, {value}); }

Tensor Tensor::row(std::vector<double> values) {
    std::size_t n = values.size();
    return Tensor({1, n}, std::move(values));
}

Tensor Tensor::from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw ShapeError("from_rows: no rows");
    std::size_t cols = rows.front().size();
    Tensor t({rows.size(), cols});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != cols) throw ShapeError("from_rows: ragged rows");
        for (std::size_t j = 0; j < cols; ++j) t.at(i, j) = rows[i][j];
    }
    return t;
}

std::size_t Tensor::rows() const {
    if (shape_.size() != 2) throw ShapeError("rows(): tensor is not 2-D, shape " + shape_str());
    return shape_[0];
}

std::size_t Tensor::cols() const {
    if (shape_.size() != 2) throw ShapeError("cols(): tensor is not 2-D, shape " + shape_str());
    return shape_[1];
}

double& Tensor::at(std::size_t i, std::size_t j) { return data_[i * cols() + j]; }

double Tensor::at(std::size_t i, std::size_t j) const { return data_[i * cols() + j]; }

double Tensor::item() const {
    if (numel() != 1) throw ShapeError("item(): tensor has shape " + shape_str());
    return data_[0];
}

Tensor Tensor::reshaped(std::vector<std::size_t> shape) const {
    if (shape_numel(shape) != numel()) {
        throw ShapeError("reshape: cannot view " + shape_str() + " with a different element count");
    }
    return Tensor(std::move(shape), data_);
}

void Tensor::fill(double value) {
    for (double& v : data_) v = value;
}

bool Tensor::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::string Tensor::shape_str() const {
    std::string s;
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape_[i]);
    }
    return s.empty() ? "<empty>" : s;
}

} // namespace ccgs

#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <complex>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "ttcast/error.hpp"

namespace ttcast {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using Complex = std::complex<double>;
using Shape = std::vector<std::size_t>;

inline std::size_t shape_product(std::span<const std::size_t> extents) {
    return std::accumulate(extents.begin(), extents.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(std::span<const std::size_t> extents);

/// Dense d-way array. Storage order is first index fastest: the element at
/// (i1, ..., id) lives at i1 + n1*(i2 + n2*(i3 + ...)). Every matricization,
/// vectorization and file format in the library uses this order, which also
/// makes any split matricization a plain column-major reinterpretation of
/// the buffer.
template <typename Scalar>
class BasicTensor {
public:
    using value_type = Scalar;
    using MatrixType = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    BasicTensor() : shape_{1}, data_(1, Scalar{}) {}

    explicit BasicTensor(Shape shape) : shape_(std::move(shape)) {
        validate_shape();
        data_.assign(shape_product(shape_), Scalar{});
    }

    BasicTensor(Shape shape, std::vector<Scalar> data) : shape_(std::move(shape)), data_(std::move(data)) {
        validate_shape();
        if (data_.size() != shape_product(shape_)) {
            throw DataError("tensor data length " + std::to_string(data_.size()) +
                            " does not match shape " + shape_to_string(shape_));
        }
    }

    /// Copies a column-major matrix buffer into a tensor of the given shape.
    static BasicTensor from_matrix(const MatrixType& m, Shape shape) {
        return BasicTensor(std::move(shape), std::vector<Scalar>(m.data(), m.data() + m.size()));
    }

    [[nodiscard]] const Shape& shape() const noexcept { return shape_; }
    [[nodiscard]] std::size_t order() const noexcept { return shape_.size(); }
    [[nodiscard]] std::size_t extent(std::size_t mode) const { return shape_.at(mode); }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }

    [[nodiscard]] std::span<const Scalar> data() const noexcept { return data_; }
    [[nodiscard]] std::span<Scalar> data() noexcept { return data_; }
    [[nodiscard]] const std::vector<Scalar>& values() const noexcept { return data_; }

    [[nodiscard]] std::size_t linear_index(std::span<const std::size_t> index) const {
        if (index.size() != shape_.size()) {
            throw DataError("index order does not match tensor order");
        }
        std::size_t offset = 0;
        for (std::size_t l = shape_.size(); l-- > 0;) {
            if (index[l] >= shape_[l]) {
                throw DataError("tensor index out of range");
            }
            offset = offset * shape_[l] + index[l];
        }
        return offset;
    }

    Scalar& operator()(std::initializer_list<std::size_t> index) {
        return data_[linear_index({index.begin(), index.size()})];
    }
    const Scalar& operator()(std::initializer_list<std::size_t> index) const {
        return data_[linear_index({index.begin(), index.size()})];
    }
    Scalar& at(std::span<const std::size_t> index) { return data_[linear_index(index)]; }
    const Scalar& at(std::span<const std::size_t> index) const { return data_[linear_index(index)]; }

    /// Read-only column-major view with the given row count.
    [[nodiscard]] Eigen::Map<const MatrixType> as_matrix(std::size_t rows) const {
        return {data_.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(data_.size() / rows)};
    }
    [[nodiscard]] Eigen::Map<MatrixType> as_matrix(std::size_t rows) {
        return {data_.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(data_.size() / rows)};
    }

    [[nodiscard]] BasicTensor reshaped(Shape shape) const { return BasicTensor(std::move(shape), data_); }

    /// Slice `t` along the last mode; the result drops that mode (order >= 2).
    [[nodiscard]] BasicTensor last_mode_slice(std::size_t t) const {
        if (shape_.size() < 2 || t >= shape_.back()) {
            throw DataError("last-mode slice out of range");
        }
        Shape inner(shape_.begin(), shape_.end() - 1);
        const std::size_t stride = shape_product(inner);
        return BasicTensor(std::move(inner),
                           std::vector<Scalar>(data_.begin() + static_cast<std::ptrdiff_t>(t * stride),
                                               data_.begin() + static_cast<std::ptrdiff_t>((t + 1) * stride)));
    }

    /// Contiguous range [first, first+count) along the last mode.
    [[nodiscard]] BasicTensor last_mode_range(std::size_t first, std::size_t count) const {
        if (shape_.empty() || count == 0 || first + count > shape_.back()) {
            throw DataError("last-mode range out of bounds");
        }
        Shape out = shape_;
        out.back() = count;
        const std::size_t stride = data_.size() / shape_.back();
        return BasicTensor(std::move(out),
                           std::vector<Scalar>(data_.begin() + static_cast<std::ptrdiff_t>(first * stride),
                                               data_.begin() + static_cast<std::ptrdiff_t>((first + count) * stride)));
    }

    friend bool operator==(const BasicTensor&, const BasicTensor&) = default;

private:
    void validate_shape() const {
        if (shape_.empty()) {
            throw DataError("tensor order must be at least 1");
        }
        for (auto n : shape_) {
            if (n == 0) {
                throw DataError("tensor extents must be positive, got " + shape_to_string(shape_));
            }
        }
    }

    Shape shape_;
    std::vector<Scalar> data_;
};

using DenseTensor = BasicTensor<double>;
using ComplexTensor = BasicTensor<Complex>;

/// A tensor unfolded into (n1*...*nk) x (nk+1*...*nd).
struct SplitMatricization {
    Matrix matrix;
    std::size_t split = 1;
    Shape original_shape;
};

/// Unfold with the first `split` modes as rows. Requires 1 <= split <= d-1.
SplitMatricization matricize(const DenseTensor& t, std::size_t split);

/// Inverse of matricize; exact.
DenseTensor fold(const SplitMatricization& m);

/// Vector of length n1*...*nd in the global linearization order.
Vector vectorize(const DenseTensor& t);

DenseTensor fold_vector(const Vector& v, Shape shape);

double frobenius_norm(const DenseTensor& t);

bool all_finite(const DenseTensor& t);

}  // namespace ttcast

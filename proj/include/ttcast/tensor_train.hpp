#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ttcast/tensor.hpp"

namespace ttcast {

/// Tensor train: d cores, core l of shape (r_{l-1}, n_l, r_l), r_0 = r_d = 1.
///
/// The value at (i1, ..., id) is the matrix product
///   core1(:, i1, :) * core2(:, i2, :) * ... * cored(:, id, :).
class TensorTrain {
public:
    explicit TensorTrain(std::vector<DenseTensor> cores);

    [[nodiscard]] const std::vector<DenseTensor>& cores() const noexcept { return cores_; }
    [[nodiscard]] const DenseTensor& core(std::size_t l) const { return cores_.at(l); }
    [[nodiscard]] std::size_t order() const noexcept { return cores_.size(); }

    /// r_0 ... r_d.
    [[nodiscard]] std::vector<std::size_t> ranks() const;
    [[nodiscard]] Shape mode_extents() const;

    /// The first `count` cores, an open chain whose last rank may exceed 1.
    [[nodiscard]] std::span<const DenseTensor> leading(std::size_t count) const;

private:
    std::vector<DenseTensor> cores_;
};

struct TtSvdOptions {
    /// Relative accuracy: the result satisfies |T - TT|_F <= tol * |T|_F
    /// whenever no rank cap binds.
    double tol = 1e-12;
    /// Empty: unlimited. One entry: applies to every bond. d-1 entries: per bond.
    std::vector<std::size_t> rank_caps;
};

/// Checks that `cores` form a chain starting at rank 1. When `closed`, the
/// final rank must also be 1.
void validate_chain(std::span<const DenseTensor> cores, bool closed);

/// (r_{l-1} * n_l) x r_l unfolding of a core, column-major view of its data.
Eigen::Map<const Matrix> left_unfolding(const DenseTensor& core);

/// Sequential truncated-SVD decomposition, left to right. Interior cores are
/// left-orthogonal on return.
TensorTrain tt_decompose(const DenseTensor& t, const TtSvdOptions& options = {});

DenseTensor tt_reconstruct(const TensorTrain& tt);

/// Materializes a left-closed chain as the (n1*...*nk) x r_k matrix whose
/// column j is the vectorized tensor selected by the open last index.
Matrix chain_to_matrix(std::span<const DenseTensor> cores);

/// QR sweep from the left: cores 1..d-1 get orthonormal left unfoldings
/// (nonnegative R diagonal), the represented tensor is unchanged.
TensorTrain left_orthogonalize(const TensorTrain& tt);

/// M^T P for the matrices M, P represented by two left-closed chains over the
/// same mode extents. Sweeps core by core; the full vectors are never formed.
Matrix tt_contract_pair(std::span<const DenseTensor> x, std::span<const DenseTensor> y);

/// Inner product of two closed trains, as a 1x1 matrix.
Matrix tt_contract_pair(const TensorTrain& x, const TensorTrain& y);

}  // namespace ttcast

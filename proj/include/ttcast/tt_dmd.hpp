#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "ttcast/dmd.hpp"
#include "ttcast/tensor.hpp"
#include "ttcast/tensor_train.hpp"

namespace ttcast {

/// Snapshot histories n1 x ... x nd x m; y's slice i is x's slice i+1.
struct TtSnapshotTensors {
    DenseTensor x;
    DenseTensor y;
    double dt = 1.0;
};

/// Splits a series n1 x ... x nd x T (T >= 2) into shifted histories.
TtSnapshotTensors build_tt_snapshot_tensors(const DenseTensor& series, double dt = 1.0);

struct TtDmdOptions {
    /// Cap on every TT rank and on the retained singular values. When unset
    /// the retained rank is chosen by singular-value energy.
    std::optional<std::size_t> rank;
    double energy = 0.9999;
    /// Relative accuracy of the two TT decompositions.
    double tol = 1e-12;
};

/// Which training snapshot the forecast amplitudes are fitted to.
enum class Anchor { last, first };

struct TtDmdModel {
    ComplexTensor mode_tensor;  // n1 x ... x nd x p
    CVector eigenvalues;        // p, descending magnitude
    CVector omega;              // log(eigenvalue) / dt, principal branch
    std::size_t rank = 0;       // retained singular values (size of the reduced operator)
    std::size_t requested_rank = 0;  // 0 when chosen by energy
    double dt = 1.0;
    Vector singular_values;   // Sigma
    Matrix reduced_operator;  // M^T P Q N^T Sigma^-1
    Matrix mt_p;              // M^T P, computed core by core
    Matrix q_nt_sinv;         // Q N^T Sigma^-1
    CMatrix eigenvectors;     // W, rank x p
    std::vector<DenseTensor> p_cores;  // leading cores of the y train

    [[nodiscard]] Shape spatial_shape() const;
    [[nodiscard]] std::size_t mode_count() const { return static_cast<std::size_t>(eigenvalues.size()); }
    /// Columns are vectorized modes (prod n) x p.
    [[nodiscard]] CMatrix vectorized_modes() const;
};

/// Fits the reduced operator from TT representations of x and y without
/// forming the full state-space operator.
TtDmdModel ttdmd_fit(const TtSnapshotTensors& snapshots, const TtDmdOptions& options = {});

/// Least-squares amplitudes of the vectorized modes against `field`.
CVector ttdmd_amplitudes(const TtDmdModel& model, const DenseTensor& field);

struct TensorForecast {
    DenseTensor values;  // n1 x n2 x steps
    double imaginary_residual = 0.0;
};

/// Forecast of a 2-D field. Slice t-1 is
///   Re sum_j mode_j * b_j * exp(omega_j * (t + time_offset) * dt),  t = 1..steps,
/// with b fitted to `x0`.
TensorForecast ttdmd_forecast(const TtDmdModel& model, const DenseTensor& x0, std::size_t steps,
                              std::size_t time_offset = 0);

/// Continues a training series n1 x n2 x T past its last slice, anchoring the
/// amplitudes on the last (default) or first training slice.
TensorForecast ttdmd_forecast_series(const TtDmdModel& model, const DenseTensor& training, std::size_t steps,
                                     Anchor anchor = Anchor::last);

}  // namespace ttcast

#pragma once

#include <cstddef>
#include <vector>

#include "ttcast/tensor.hpp"

namespace ttcast {

/// Shifted snapshot matrices: y(:, j) is the successor of x(:, j).
struct SnapshotPair {
    Matrix x;
    Matrix y;
    double dt = 1.0;
};

/// Columns 0..m-2 and 1..m-1 of an n x m series.
SnapshotPair build_snapshot_pair(const Matrix& series, double dt = 1.0);

struct DmdModel {
    CMatrix modes;        // n x p, exact DMD modes
    CVector eigenvalues;  // p, descending magnitude
    std::size_t requested_rank = 0;
    std::size_t rank = 0;  // achieved after dropping near-zero singular values
    double dt = 1.0;
    Vector singular_values;  // of x, all of them
    Matrix reduced_operator;  // U^T Y V Sigma^-1, p x p
};

/// Singular values below this fraction of the largest are always discarded.
inline constexpr double kSingularValueFloor = 1e-12;

/// Exact DMD at truncation rank `rank` (1 <= rank <= min(n, m-1)).
DmdModel dmd_fit(const SnapshotPair& pair, std::size_t rank);

/// Permutation sorting eigenvalues by descending magnitude, then descending
/// real part, then descending imaginary part.
std::vector<Eigen::Index> spectral_order(const CVector& eigenvalues);

struct Forecast {
    Matrix values;                  // real part of the prediction
    double imaginary_residual = 0;  // |Im| / |Re|, Frobenius norms over all steps
};

/// Least-squares mode amplitudes b = Phi^+ z0.
CVector dmd_amplitudes(const DmdModel& model, const Vector& z0);

/// Column t-1 holds Re(Phi Lambda^t Phi^+ z0), t = 1..steps.
Forecast dmd_forecast(const DmdModel& model, const Vector& z0, std::size_t steps);

}  // namespace ttcast

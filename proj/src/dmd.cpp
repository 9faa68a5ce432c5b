#include "ttcast/dmd.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <numeric>
#include <tuple>

namespace ttcast {

SnapshotPair build_snapshot_pair(const Matrix& series, double dt) {
    if (series.cols() < 2) {
        throw DataError("DMD needs at least 2 snapshots, got " + std::to_string(series.cols()));
    }
    const auto m = series.cols();
    return {series.leftCols(m - 1), series.rightCols(m - 1), dt};
}

std::vector<Eigen::Index> spectral_order(const CVector& eigenvalues) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(eigenvalues.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        const Complex la = eigenvalues(a);
        const Complex lb = eigenvalues(b);
        return std::make_tuple(std::abs(la), la.real(), la.imag()) >
               std::make_tuple(std::abs(lb), lb.real(), lb.imag());
    });
    return order;
}

DmdModel dmd_fit(const SnapshotPair& pair, std::size_t rank) {
    const auto& x = pair.x;
    const auto& y = pair.y;
    if (x.rows() != y.rows() || x.cols() != y.cols()) {
        throw DataError("snapshot matrices differ in shape");
    }
    const auto bound = static_cast<std::size_t>(std::min(x.rows(), x.cols()));
    if (rank < 1 || rank > bound) {
        throw DataError("DMD rank " + std::to_string(rank) + " outside [1, " + std::to_string(bound) + "]");
    }
    if (!x.allFinite() || !y.allFinite()) {
        throw DataError("snapshot matrices contain non-finite values");
    }

    Eigen::BDCSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sigma = svd.singularValues();
    if (sigma(0) <= 0.0) {
        throw NumericError("snapshot matrix is identically zero");
    }
    std::size_t p = 0;
    while (p < rank && sigma(static_cast<Eigen::Index>(p)) >= kSingularValueFloor * sigma(0)) {
        ++p;
    }
    const auto pe = static_cast<Eigen::Index>(p);

    const Matrix u = svd.matrixU().leftCols(pe);
    const Matrix v_sinv = svd.matrixV().leftCols(pe) * sigma.head(pe).cwiseInverse().asDiagonal();
    const Matrix y_v_sinv = y * v_sinv;
    const Matrix reduced = u.transpose() * y_v_sinv;

    Eigen::EigenSolver<Matrix> eig(reduced, true);
    if (eig.info() != Eigen::Success) {
        throw NumericError("eigendecomposition of the reduced operator failed");
    }
    const CVector lambda_raw = eig.eigenvalues();
    const CMatrix w_raw = eig.eigenvectors();
    const auto order = spectral_order(lambda_raw);

    DmdModel model;
    model.requested_rank = rank;
    model.rank = p;
    model.dt = pair.dt;
    model.singular_values = sigma;
    model.reduced_operator = reduced;
    model.eigenvalues.resize(pe);
    model.modes.resize(x.rows(), pe);
    const CMatrix y_side = y_v_sinv.cast<Complex>();
    const CMatrix u_side = u.cast<Complex>();
    for (Eigen::Index j = 0; j < pe; ++j) {
        const auto src = order[static_cast<std::size_t>(j)];
        const Complex lambda = lambda_raw(src);
        model.eigenvalues(j) = lambda;
        if (std::abs(lambda) > kSingularValueFloor) {
            model.modes.col(j) = y_side * w_raw.col(src) / lambda;
        } else {
            // zero eigenvalue: exact mode undefined, fall back to the projected one
            model.modes.col(j) = u_side * w_raw.col(src);
        }
    }
    return model;
}

CVector dmd_amplitudes(const DmdModel& model, const Vector& z0) {
    if (z0.size() != model.modes.rows()) {
        throw DataError("initial state length does not match the model");
    }
    return model.modes.completeOrthogonalDecomposition().solve(z0.cast<Complex>());
}

Forecast dmd_forecast(const DmdModel& model, const Vector& z0, std::size_t steps) {
    if (steps < 1) {
        throw DataError("forecast needs at least one step");
    }
    const CVector b = dmd_amplitudes(model, z0);
    CVector weights = b;
    CMatrix out(model.modes.rows(), static_cast<Eigen::Index>(steps));
    for (Eigen::Index t = 0; t < out.cols(); ++t) {
        weights = weights.cwiseProduct(model.eigenvalues);
        out.col(t) = model.modes * weights;
    }
    Forecast f;
    f.values = out.real();
    const double re = f.values.norm();
    const double im = out.imag().norm();
    f.imaginary_residual = re > 0.0 ? im / re : im;
    return f;
}

}  // namespace ttcast

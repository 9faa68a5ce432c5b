#include "ttcast/tt_dmd.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>

namespace ttcast {

TtSnapshotTensors build_tt_snapshot_tensors(const DenseTensor& series, double dt) {
    if (series.order() < 2) {
        throw DataError("snapshot series needs a time mode");
    }
    const std::size_t steps = series.shape().back();
    if (steps < 2) {
        throw DataError("TT-DMD needs at least 2 time slices, got " + std::to_string(steps));
    }
    return {series.last_mode_range(0, steps - 1), series.last_mode_range(1, steps - 1), dt};
}

Shape TtDmdModel::spatial_shape() const {
    const auto& s = mode_tensor.shape();
    return {s.begin(), s.end() - 1};
}

CMatrix TtDmdModel::vectorized_modes() const {
    const auto rows = static_cast<Eigen::Index>(shape_product(spatial_shape()));
    return Eigen::Map<const CMatrix>(mode_tensor.data().data(), rows, static_cast<Eigen::Index>(mode_count()));
}

namespace {

std::size_t retained_rank(const Vector& sigma, const TtDmdOptions& options) {
    const auto count = static_cast<std::size_t>(sigma.size());
    std::size_t r = 0;
    while (r < count && sigma(static_cast<Eigen::Index>(r)) >= kSingularValueFloor * sigma(0)) {
        ++r;
    }
    if (options.rank) {
        return std::min(r, *options.rank);
    }
    const double total = sigma.squaredNorm();
    double kept = 0.0;
    std::size_t e = 0;
    while (e < r && kept < options.energy * total) {
        kept += sigma(static_cast<Eigen::Index>(e)) * sigma(static_cast<Eigen::Index>(e));
        ++e;
    }
    return std::max<std::size_t>(1, e);
}

}  // namespace

TtDmdModel ttdmd_fit(const TtSnapshotTensors& snapshots, const TtDmdOptions& options) {
    const auto& x = snapshots.x;
    const auto& y = snapshots.y;
    if (x.shape() != y.shape()) {
        throw DataError("x and y snapshot tensors differ in shape");
    }
    if (x.order() < 2) {
        throw DataError("snapshot tensors need at least one spatial mode");
    }
    if (options.rank && *options.rank < 1) {
        throw DataError("TT-DMD rank must be at least 1");
    }
    if (!(options.energy > 0.0 && options.energy <= 1.0)) {
        throw DataError("energy threshold must lie in (0, 1]");
    }
    const std::size_t d = x.order() - 1;  // spatial modes

    TtSvdOptions svd_options{options.tol, {}};
    if (options.rank) {
        svd_options.rank_caps = {*options.rank};
    }

    // x = M Sigma N: left-orthogonal leading cores, then an SVD of the last
    // spatial core merged with the time core.
    const TensorTrain x_tt = left_orthogonalize(tt_decompose(x, svd_options));
    const DenseTensor& spatial_last = x_tt.core(d - 1);
    const DenseTensor& time_core = x_tt.core(d);
    const Matrix merged = left_unfolding(spatial_last) * time_core.as_matrix(time_core.extent(0));
    Eigen::BDCSVD<Matrix> svd(merged, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sigma = svd.singularValues();
    if (!(sigma(0) > 0.0)) {
        throw NumericError("snapshot tensor is identically zero");
    }
    const std::size_t r = retained_rank(sigma, options);
    const auto re = static_cast<Eigen::Index>(r);

    std::vector<DenseTensor> m_cores(x_tt.cores().begin(), x_tt.cores().begin() + static_cast<std::ptrdiff_t>(d));
    {
        Matrix u = svd.matrixU().leftCols(re);
        m_cores.back() = DenseTensor({spatial_last.extent(0), spatial_last.extent(1), r},
                                     std::vector<double>(u.data(), u.data() + u.size()));
    }
    const Vector sigma_r = sigma.head(re);
    const Matrix n_t = svd.matrixV().leftCols(re);  // N^T, m x r

    // y = P Q
    const TensorTrain y_tt = tt_decompose(y, svd_options);
    const auto p_cores = y_tt.leading(d);
    const DenseTensor& q_core = y_tt.core(d);
    const auto q = q_core.as_matrix(q_core.extent(0));  // s_d x m

    TtDmdModel model;
    model.dt = snapshots.dt;
    model.rank = r;
    model.requested_rank = options.rank.value_or(0);
    model.singular_values = sigma_r;
    model.mt_p = tt_contract_pair(std::span<const DenseTensor>(m_cores), p_cores);
    model.q_nt_sinv = q * n_t * sigma_r.cwiseInverse().asDiagonal();
    model.reduced_operator = model.mt_p * model.q_nt_sinv;
    model.p_cores.assign(p_cores.begin(), p_cores.end());

    Eigen::EigenSolver<Matrix> eig(model.reduced_operator, true);
    if (eig.info() != Eigen::Success) {
        throw NumericError("eigendecomposition of the reduced operator failed");
    }
    const CVector lambda_raw = eig.eigenvalues();
    const CMatrix w_raw = eig.eigenvectors();
    std::vector<Eigen::Index> kept;
    for (auto j : spectral_order(lambda_raw)) {
        if (std::abs(lambda_raw(j)) >= kSingularValueFloor) {
            kept.push_back(j);
        }
    }
    const auto p = static_cast<Eigen::Index>(kept.size());
    model.eigenvalues.resize(p);
    model.omega.resize(p);
    model.eigenvectors.resize(re, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        const auto src = kept[static_cast<std::size_t>(j)];
        model.eigenvalues(j) = lambda_raw(src);
        model.omega(j) = std::log(lambda_raw(src)) / snapshots.dt;
        model.eigenvectors.col(j) = w_raw.col(src);
    }

    // Mode tensor: the y chain closed by Q N^T Sigma^-1 W Lambda^-1.
    Shape mode_shape(x.shape().begin(), x.shape().end() - 1);
    mode_shape.push_back(kept.size());
    if (p == 0) {
        // placeholder storage; mode_count() == 0 marks the model empty
        mode_shape.back() = 1;
        model.mode_tensor = ComplexTensor(std::move(mode_shape));
        return model;
    }
    const CMatrix closing = model.q_nt_sinv.cast<Complex>() * model.eigenvectors *
                            model.eigenvalues.cwiseInverse().asDiagonal();
    const CMatrix modes = chain_to_matrix(p_cores).cast<Complex>() * closing;
    model.mode_tensor = ComplexTensor::from_matrix(modes, std::move(mode_shape));
    return model;
}

CVector ttdmd_amplitudes(const TtDmdModel& model, const DenseTensor& field) {
    if (field.shape() != model.spatial_shape()) {
        throw DataError("field shape " + shape_to_string(field.shape()) + " does not match model " +
                        shape_to_string(model.spatial_shape()));
    }
    if (model.mode_count() == 0) {
        throw NumericError("TT-DMD model has no modes left after truncation");
    }
    return model.vectorized_modes().completeOrthogonalDecomposition().solve(vectorize(field).cast<Complex>());
}

TensorForecast ttdmd_forecast(const TtDmdModel& model, const DenseTensor& x0, std::size_t steps,
                              std::size_t time_offset) {
    if (steps < 1) {
        throw DataError("forecast needs at least one step");
    }
    if (model.spatial_shape().size() != 2 || x0.order() != 2) {
        throw DataError("TT-DMD forecasting is defined for 2-D fields");
    }
    const CVector b = ttdmd_amplitudes(model, x0);
    const CMatrix modes = model.vectorized_modes();
    CMatrix out(modes.rows(), static_cast<Eigen::Index>(steps));
    for (Eigen::Index t = 0; t < out.cols(); ++t) {
        const double time = static_cast<double>(static_cast<std::size_t>(t) + 1 + time_offset) * model.dt;
        CVector weights(b.size());
        for (Eigen::Index j = 0; j < b.size(); ++j) {
            weights(j) = b(j) * std::exp(model.omega(j) * time);
        }
        out.col(t) = modes * weights;
    }
    const Matrix real = out.real();
    const double re_norm = real.norm();
    const double im_norm = out.imag().norm();
    Shape shape = x0.shape();
    shape.push_back(steps);
    return {DenseTensor::from_matrix(real, std::move(shape)), re_norm > 0.0 ? im_norm / re_norm : im_norm};
}

TensorForecast ttdmd_forecast_series(const TtDmdModel& model, const DenseTensor& training, std::size_t steps,
                                     Anchor anchor) {
    if (training.order() != 3) {
        throw DataError("training series must be n1 x n2 x T");
    }
    const std::size_t slices = training.shape().back();
    if (anchor == Anchor::last) {
        return ttdmd_forecast(model, training.last_mode_slice(slices - 1), steps, 0);
    }
    return ttdmd_forecast(model, training.last_mode_slice(0), steps, slices - 1);
}

}  // namespace ttcast

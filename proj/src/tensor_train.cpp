#include "ttcast/tensor_train.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>

namespace ttcast {

namespace {

using StridedMap = Eigen::Map<const Matrix, 0, Eigen::OuterStride<>>;

// core(:, i, :) as an r_{l-1} x r_l matrix.
StridedMap core_slice(const DenseTensor& core, std::size_t i) {
    const auto r0 = static_cast<Eigen::Index>(core.extent(0));
    const auto n = static_cast<Eigen::Index>(core.extent(1));
    const auto r1 = static_cast<Eigen::Index>(core.extent(2));
    return {core.data().data() + static_cast<Eigen::Index>(i) * r0, r0, r1, Eigen::OuterStride<>(r0 * n)};
}

std::size_t bond_cap(const TtSvdOptions& options, std::size_t bond) {
    if (options.rank_caps.empty()) {
        return static_cast<std::size_t>(-1);
    }
    if (options.rank_caps.size() == 1) {
        return options.rank_caps.front();
    }
    return options.rank_caps.at(bond);
}

// Smallest rank whose discarded tail has Frobenius norm <= delta, then capped.
std::size_t truncation_rank(const Vector& sigma, double delta, std::size_t cap) {
    std::size_t rank = static_cast<std::size_t>(sigma.size());
    double tail = 0.0;
    while (rank > 1) {
        const double s = sigma(static_cast<Eigen::Index>(rank - 1));
        if (tail + s * s > delta * delta) {
            break;
        }
        tail += s * s;
        --rank;
    }
    return std::max<std::size_t>(1, std::min(rank, cap));
}

DenseTensor make_core(const double* data, std::size_t r0, std::size_t n, std::size_t r1) {
    return {{r0, n, r1}, std::vector<double>(data, data + r0 * n * r1)};
}

}  // namespace

TensorTrain::TensorTrain(std::vector<DenseTensor> cores) : cores_(std::move(cores)) {
    validate_chain(cores_, true);
}

std::vector<std::size_t> TensorTrain::ranks() const {
    std::vector<std::size_t> r{1};
    for (const auto& c : cores_) {
        r.push_back(c.extent(2));
    }
    return r;
}

Shape TensorTrain::mode_extents() const {
    Shape n;
    for (const auto& c : cores_) {
        n.push_back(c.extent(1));
    }
    return n;
}

std::span<const DenseTensor> TensorTrain::leading(std::size_t count) const {
    if (count == 0 || count > cores_.size()) {
        throw DataError("leading core count out of range");
    }
    return std::span(cores_).first(count);
}

void validate_chain(std::span<const DenseTensor> cores, bool closed) {
    if (cores.empty()) {
        throw DataError("tensor train needs at least one core");
    }
    for (std::size_t l = 0; l < cores.size(); ++l) {
        if (cores[l].order() != 3) {
            throw DataError("tensor train core " + std::to_string(l) + " is not 3-way");
        }
        if (l + 1 < cores.size() && cores[l].extent(2) != cores[l + 1].extent(0)) {
            throw DataError("tensor train ranks do not chain between cores " + std::to_string(l) + " and " +
                            std::to_string(l + 1));
        }
    }
    if (cores.front().extent(0) != 1) {
        throw DataError("tensor train must start with rank 1");
    }
    if (closed && cores.back().extent(2) != 1) {
        throw DataError("tensor train must end with rank 1");
    }
}

Eigen::Map<const Matrix> left_unfolding(const DenseTensor& core) {
    return core.as_matrix(core.extent(0) * core.extent(1));
}

TensorTrain tt_decompose(const DenseTensor& t, const TtSvdOptions& options) {
    if (!(options.tol >= 0.0)) {
        throw DataError("TT-SVD tolerance must be non-negative");
    }
    for (auto cap : options.rank_caps) {
        if (cap < 1) {
            throw DataError("TT rank caps must be at least 1");
        }
    }
    if (!all_finite(t)) {
        throw DataError("cannot decompose a tensor containing non-finite values");
    }
    const auto& n = t.shape();
    const std::size_t d = n.size();
    if (options.rank_caps.size() > 1 && options.rank_caps.size() != d - 1) {
        throw DataError("expected " + std::to_string(d - 1) + " per-bond rank caps");
    }
    if (d == 1) {
        return TensorTrain({t.reshaped({1, n[0], 1})});
    }

    const double delta = options.tol * frobenius_norm(t) / std::sqrt(static_cast<double>(d - 1));
    std::vector<DenseTensor> cores;
    cores.reserve(d);

    Matrix work = t.as_matrix(n[0]);
    std::size_t r_prev = 1;
    for (std::size_t l = 0; l + 1 < d; ++l) {
        Eigen::BDCSVD<Matrix> svd(work, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Vector& sigma = svd.singularValues();
        const std::size_t r = truncation_rank(sigma, delta, bond_cap(options, l));
        const auto re = static_cast<Eigen::Index>(r);

        Matrix u = svd.matrixU().leftCols(re);
        cores.push_back(make_core(u.data(), r_prev, n[l], r));

        Matrix rest = sigma.head(re).asDiagonal() * svd.matrixV().leftCols(re).transpose();
        const auto rows = static_cast<Eigen::Index>(r * n[l + 1]);
        work = Eigen::Map<Matrix>(rest.data(), rows, rest.size() / rows);
        r_prev = r;
    }
    cores.push_back(make_core(work.data(), r_prev, n[d - 1], 1));
    return TensorTrain(std::move(cores));
}

Matrix chain_to_matrix(std::span<const DenseTensor> cores) {
    validate_chain(cores, false);
    Matrix acc = left_unfolding(cores.front());
    for (std::size_t l = 1; l < cores.size(); ++l) {
        const auto& c = cores[l];
        const Matrix prod = acc * c.as_matrix(c.extent(0));
        const auto rows = acc.rows() * static_cast<Eigen::Index>(c.extent(1));
        acc = Eigen::Map<const Matrix>(prod.data(), rows, static_cast<Eigen::Index>(c.extent(2)));
    }
    return acc;
}

DenseTensor tt_reconstruct(const TensorTrain& tt) {
    const Matrix full = chain_to_matrix(tt.cores());
    return DenseTensor::from_matrix(full, tt.mode_extents());
}

TensorTrain left_orthogonalize(const TensorTrain& tt) {
    std::vector<DenseTensor> cores = tt.cores();
    for (std::size_t l = 0; l + 1 < cores.size(); ++l) {
        const Matrix unfolded = left_unfolding(cores[l]);
        const auto rows = unfolded.rows();
        const auto k = std::min(rows, unfolded.cols());

        Eigen::HouseholderQR<Matrix> qr(unfolded);
        Matrix q = qr.householderQ() * Matrix::Identity(rows, k);
        Matrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
        for (Eigen::Index j = 0; j < k; ++j) {
            if (r(j, j) < 0.0) {
                r.row(j) *= -1.0;
                q.col(j) *= -1.0;
            }
        }

        auto& next = cores[l + 1];
        const Matrix carried = r * next.as_matrix(next.extent(0));
        const auto kk = static_cast<std::size_t>(k);
        cores[l] = make_core(q.data(), cores[l].extent(0), cores[l].extent(1), kk);
        next = make_core(carried.data(), kk, next.extent(1), next.extent(2));
    }
    return TensorTrain(std::move(cores));
}

Matrix tt_contract_pair(std::span<const DenseTensor> x, std::span<const DenseTensor> y) {
    validate_chain(x, false);
    validate_chain(y, false);
    if (x.size() != y.size()) {
        throw DataError("contracted chains have different lengths");
    }
    Matrix acc = Matrix::Ones(1, 1);
    for (std::size_t l = 0; l < x.size(); ++l) {
        const std::size_t n = x[l].extent(1);
        if (y[l].extent(1) != n) {
            throw DataError("mode extent mismatch at core " + std::to_string(l));
        }
        Matrix next = Matrix::Zero(static_cast<Eigen::Index>(x[l].extent(2)),
                                   static_cast<Eigen::Index>(y[l].extent(2)));
        for (std::size_t i = 0; i < n; ++i) {
            next.noalias() += core_slice(x[l], i).transpose() * (acc * core_slice(y[l], i));
        }
        acc = std::move(next);
    }
    return acc;
}

Matrix tt_contract_pair(const TensorTrain& x, const TensorTrain& y) {
    return tt_contract_pair(std::span(x.cores()), std::span(y.cores()));
}

}  // namespace ttcast

#include "ttcast/mar.hpp"

#include <Eigen/QR>

#include <cmath>
#include <limits>
#include <random>

#include "ttcast/binary_io.hpp"

namespace ttcast {

namespace {

constexpr std::uint8_t kMarFormatVersion = 1;

std::vector<Matrix> frames(const DenseTensor& series) {
    if (series.order() != 3) {
        throw DataError("MAR expects an M x N x T series");
    }
    const auto& s = series.shape();
    if (s[2] < 2) {
        throw DataError("MAR needs at least 2 time slices, got " + std::to_string(s[2]));
    }
    std::vector<Matrix> out;
    out.reserve(s[2]);
    for (std::size_t t = 0; t < s[2]; ++t) {
        out.push_back(series.last_mode_slice(t).as_matrix(s[0]));
    }
    return out;
}

double loss_of(const Matrix& a, const Matrix& b, const std::vector<Matrix>& x) {
    double sum = 0.0;
    for (std::size_t t = 1; t < x.size(); ++t) {
        sum += (x[t] - a * x[t - 1] * b.transpose()).squaredNorm();
    }
    return 0.5 * sum;
}

// Solves coeff * gram = rhs for coeff (gram symmetric).
Matrix solve_right(const Matrix& rhs, Matrix gram, double ridge, std::size_t iteration, char factor) {
    gram.diagonal().array() += ridge;
    Eigen::ColPivHouseholderQR<Matrix> qr(gram);
    qr.setThreshold(1e-13);
    if (qr.rank() < gram.rows()) {
        throw SingularGramError(iteration, factor);
    }
    return qr.solve(rhs.transpose()).transpose();
}

Matrix random_matrix(Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(n)));
    Matrix m(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            m(i, j) = dist(rng);
        }
    }
    return m;
}

// Losses below this multiple of the data energy are rounding noise; ALS stops
// there instead of wandering.
constexpr double kResidualFloor = 1e3 * std::numeric_limits<double>::epsilon();
constexpr double kLossFloor = kResidualFloor * kResidualFloor;

MarModel run_als(const std::vector<Matrix>& x, Matrix a, Matrix b, const MarOptions& options, double floor) {
    const auto rows = x.front().rows();
    const auto cols = x.front().cols();
    MarModel model;
    model.a = std::move(a);
    model.b = std::move(b);

    double loss = loss_of(model.a, model.b, x);
    model.loss_history.push_back(loss);
    if (loss <= floor) {
        model.converged = true;
        return model;
    }

    for (std::size_t k = 1; k <= options.max_iters; ++k) {
        Matrix num = Matrix::Zero(rows, rows);
        Matrix gram = Matrix::Zero(rows, rows);
        const Matrix btb = model.b.transpose() * model.b;
        for (std::size_t t = 1; t < x.size(); ++t) {
            num.noalias() += x[t] * model.b * x[t - 1].transpose();
            gram.noalias() += x[t - 1] * btb * x[t - 1].transpose();
        }
        model.a = solve_right(num, gram, options.ridge, k, 'A');

        num = Matrix::Zero(cols, cols);
        gram = Matrix::Zero(cols, cols);
        const Matrix ata = model.a.transpose() * model.a;
        for (std::size_t t = 1; t < x.size(); ++t) {
            num.noalias() += x[t].transpose() * model.a * x[t - 1];
            gram.noalias() += x[t - 1].transpose() * ata * x[t - 1];
        }
        model.b = solve_right(num, gram, options.ridge, k, 'B');

        if (!model.a.allFinite() || !model.b.allFinite()) {
            throw NumericError("ALS produced non-finite coefficients at iteration " + std::to_string(k));
        }
        const double next = loss_of(model.a, model.b, x);
        model.loss_history.push_back(next);
        model.iterations_run = k;
        const double change = std::abs(loss - next) / std::max(loss, std::numeric_limits<double>::min());
        loss = next;
        if (change < options.rel_tol || next <= floor) {
            model.converged = true;
            break;
        }
    }
    return model;
}

}  // namespace

MarModel mar_fit_als(const DenseTensor& series, const MarOptions& options) {
    const auto x = frames(series);
    if (!all_finite(series)) {
        throw DataError("MAR input contains non-finite values");
    }
    if (options.ridge < 0.0) {
        throw DataError("ridge must be non-negative");
    }
    const auto rows = x.front().rows();
    const auto cols = x.front().cols();
    double energy = 0.0;
    for (std::size_t t = 1; t < x.size(); ++t) {
        energy += x[t].squaredNorm();
    }
    const double floor = 0.5 * kLossFloor * energy;

    MarModel best;
    for (std::size_t start = 0; start <= options.restarts; ++start) {
        MarModel fit;
        if (start == 0 && options.init == MarInit::identity) {
            fit = run_als(x, Matrix::Identity(rows, rows), Matrix::Identity(cols, cols), options, floor);
        } else {
            std::mt19937_64 rng(options.seed + start);
            Matrix a = random_matrix(rows, rng);
            Matrix b = random_matrix(cols, rng);
            fit = run_als(x, std::move(a), std::move(b), options, floor);
        }
        if (start == 0 || fit.loss_history.back() < best.loss_history.back()) {
            best = std::move(fit);
        }
    }
    return best;
}

double mar_loss(const Matrix& a, const Matrix& b, const DenseTensor& series) {
    const auto x = frames(series);
    if (a.rows() != x.front().rows() || a.cols() != a.rows() || b.rows() != x.front().cols() ||
        b.cols() != b.rows()) {
        throw DataError("MAR coefficient shapes do not match the series");
    }
    return loss_of(a, b, x);
}

double mar_loss(const MarModel& model, const DenseTensor& series) { return mar_loss(model.a, model.b, series); }

DenseTensor mar_predict(const MarModel& model, const Matrix& x_last, std::size_t steps) {
    if (x_last.rows() != model.a.rows() || x_last.cols() != model.b.rows()) {
        throw DataError("last observation shape does not match the MAR model");
    }
    if (steps < 1) {
        throw DataError("forecast needs at least one step");
    }
    const auto rows = static_cast<std::size_t>(x_last.rows());
    const auto cols = static_cast<std::size_t>(x_last.cols());
    DenseTensor out({rows, cols, steps});
    Matrix current = x_last;
    for (std::size_t t = 0; t < steps; ++t) {
        current = model.a * current * model.b.transpose();
        Eigen::Map<Matrix>(out.data().data() + t * rows * cols, x_last.rows(), x_last.cols()) = current;
    }
    return out;
}

void write_mar(std::ostream& os, const MarModel& model) {
    BinaryWriter w(os);
    w.raw("TTMR");
    w.u8(kMarFormatVersion);
    w.u64(static_cast<std::uint64_t>(model.a.rows()));
    w.u64(static_cast<std::uint64_t>(model.b.rows()));
    for (const Matrix* m : {&model.a, &model.b}) {
        for (Eigen::Index i = 0; i < m->rows(); ++i) {
            for (Eigen::Index j = 0; j < m->cols(); ++j) {
                w.f64((*m)(i, j));
            }
        }
    }
}

MarModel read_mar(std::istream& is) {
    BinaryReader r(is);
    r.expect_magic("TTMR", "MAR model");
    if (const auto v = r.u8(); v != kMarFormatVersion) {
        throw DataError("unsupported MAR format version " + std::to_string(v));
    }
    const auto rows = static_cast<Eigen::Index>(r.u64());
    const auto cols = static_cast<Eigen::Index>(r.u64());
    MarModel model;
    model.a.resize(rows, rows);
    model.b.resize(cols, cols);
    for (Matrix* m : {&model.a, &model.b}) {
        for (Eigen::Index i = 0; i < m->rows(); ++i) {
            for (Eigen::Index j = 0; j < m->cols(); ++j) {
                (*m)(i, j) = r.f64();
            }
        }
    }
    return model;
}

}  // namespace ttcast

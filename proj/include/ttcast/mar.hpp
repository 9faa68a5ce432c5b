#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <vector>

#include "ttcast/tensor.hpp"

namespace ttcast {

/// First-order matrix autoregression X_t = A X_{t-1} B^T + E_t.
struct MarModel {
    Matrix a;  // M x M
    Matrix b;  // N x N
    std::vector<double> loss_history;  // entry 0 is the initial loss, then one per sweep
    std::size_t iterations_run = 0;
    bool converged = false;

    [[nodiscard]] std::size_t parameter_count() const { return static_cast<std::size_t>(a.size() + b.size()); }
};

enum class MarInit { identity, random };

struct MarOptions {
    std::size_t max_iters = 500;
    double rel_tol = 1e-10;
    MarInit init = MarInit::identity;
    std::uint64_t seed = 0;
    /// Added to the diagonal of both Gram matrices before solving.
    double ridge = 0.0;
    /// Extra ALS runs from random starts (seeds seed + 1, seed + 2, ...); the
    /// run with the lowest final loss is kept. ALS can settle in a spurious
    /// local minimum even on noiseless data.
    std::size_t restarts = 0;
};

/// Raised when a Gram matrix in an ALS update cannot be solved.
class SingularGramError : public NumericError {
public:
    SingularGramError(std::size_t iteration, char factor)
        : NumericError(std::string("singular Gram matrix while updating ") + factor + " at ALS iteration " +
                       std::to_string(iteration) + "; consider a ridge term"),
          iteration_(iteration) {}

    [[nodiscard]] std::size_t iteration() const noexcept { return iteration_; }

private:
    std::size_t iteration_;
};

/// Alternating least squares on 1/2 sum_{t=2..T} |X_t - A X_{t-1} B^T|_F^2.
/// `series` is M x N x T with T >= 2.
MarModel mar_fit_als(const DenseTensor& series, const MarOptions& options = {});

double mar_loss(const Matrix& a, const Matrix& b, const DenseTensor& series);
double mar_loss(const MarModel& model, const DenseTensor& series);

/// Recursive forecast: slice 1 = A x_last B^T, slice t+1 = A slice_t B^T.
DenseTensor mar_predict(const MarModel& model, const Matrix& x_last, std::size_t steps);

/// "TTMR", version u8, M u64, N u64, then A and B row-major as f64.
void write_mar(std::ostream& os, const MarModel& model);
MarModel read_mar(std::istream& is);

}  // namespace ttcast

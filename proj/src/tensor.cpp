#include "ttcast/tensor.hpp"

#include <cmath>

namespace ttcast {

std::string shape_to_string(std::span<const std::size_t> extents) {
    std::string out = "(";
    for (std::size_t i = 0; i < extents.size(); ++i) {
        if (i > 0) {
            out += ",";
        }
        out += std::to_string(extents[i]);
    }
    return out + ")";
}

SplitMatricization matricize(const DenseTensor& t, std::size_t split) {
    if (split < 1 || split >= t.order()) {
        throw DataError("matricization split " + std::to_string(split) + " out of range for order " +
                        std::to_string(t.order()));
    }
    const auto& shape = t.shape();
    const std::size_t rows = shape_product(std::span(shape).first(split));
    return {t.as_matrix(rows), split, shape};
}

DenseTensor fold(const SplitMatricization& m) {
    if (static_cast<std::size_t>(m.matrix.size()) != shape_product(m.original_shape) ||
        static_cast<std::size_t>(m.matrix.rows()) != shape_product(std::span(m.original_shape).first(m.split))) {
        throw DataError("matricization does not match its recorded shape");
    }
    return DenseTensor::from_matrix(m.matrix, m.original_shape);
}

Vector vectorize(const DenseTensor& t) {
    return Eigen::Map<const Vector>(t.data().data(), static_cast<Eigen::Index>(t.size()));
}

DenseTensor fold_vector(const Vector& v, Shape shape) {
    return DenseTensor(std::move(shape), std::vector<double>(v.data(), v.data() + v.size()));
}

double frobenius_norm(const DenseTensor& t) {
    double sum = 0.0;
    for (double x : t.data()) {
        sum += x * x;
    }
    return std::sqrt(sum);
}

bool all_finite(const DenseTensor& t) {
    return std::all_of(t.data().begin(), t.data().end(), [](double x) { return std::isfinite(x); });
}

}  // namespace ttcast

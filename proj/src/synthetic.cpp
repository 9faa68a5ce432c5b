#include "ttcast/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace ttcast {

LinearFixture linear_fixture(std::size_t rows, std::size_t cols, std::size_t steps, std::size_t modes,
                             std::uint64_t seed) {
    const std::size_t n = rows * cols;
    if (modes < 1 || modes > n || modes + 1 > steps) {
        throw DataError("linear fixture needs 1 <= modes <= min(cells, steps - 1)");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> magnitude(0.85, 1.0);
    std::uniform_real_distribution<double> angle(0.1, 2.8);
    std::normal_distribution<double> normal;

    auto random_vector = [&] {
        Vector v(static_cast<Eigen::Index>(n));
        for (auto& x : v) {
            x = normal(rng);
        }
        return v;
    };

    LinearFixture fx{DenseTensor({rows, cols, steps}), CVector(static_cast<Eigen::Index>(modes))};
    auto values = fx.series.as_matrix(n);
    values.setZero();
    Eigen::Index e = 0;
    for (std::size_t k = 0; k + 1 < modes; k += 2) {
        const Complex lambda = std::polar(magnitude(rng), angle(rng));
        const Complex c(normal(rng), normal(rng));
        const CVector u = random_vector().cast<Complex>() + Complex(0, 1) * random_vector().cast<Complex>();
        Complex power(1.0, 0.0);
        for (std::size_t t = 0; t < steps; ++t) {
            values.col(static_cast<Eigen::Index>(t)) += 2.0 * (c * power * u).real();
            power *= lambda;
        }
        fx.eigenvalues(e++) = lambda;
        fx.eigenvalues(e++) = std::conj(lambda);
    }
    if (modes % 2 == 1) {
        const double lambda = magnitude(rng);
        const double a = normal(rng);
        const Vector u = random_vector();
        double power = 1.0;
        for (std::size_t t = 0; t < steps; ++t) {
            values.col(static_cast<Eigen::Index>(t)) += a * power * u;
            power *= lambda;
        }
        fx.eigenvalues(e++) = lambda;
    }
    return fx;
}

DenseTensor weather_fixture(const WeatherOptions& o) {
    if (o.rows < 1 || o.cols < 1 || o.steps < 2) {
        throw DataError("weather fixture needs a non-empty grid and at least 2 steps");
    }
    std::mt19937_64 rng(o.seed);
    std::normal_distribution<double> noise(0.0, o.noise > 0.0 ? o.noise : 1.0);
    constexpr double two_pi = 2.0 * std::numbers::pi;

    DenseTensor out({o.rows, o.cols, o.steps});
    for (std::size_t t = 0; t < o.steps; ++t) {
        const auto tt = static_cast<double>(t);
        const double season = two_pi * tt / 365.25;
        const double decay1 = std::pow(0.999, tt);
        const double decay2 = std::pow(0.997, tt);
        for (std::size_t j = 0; j < o.cols; ++j) {
            const auto jj = static_cast<double>(j);
            for (std::size_t i = 0; i < o.rows; ++i) {
                const auto ii = static_cast<double>(i);
                double v = 25.0 - 0.6 * ii + 0.05 * jj;
                v += (6.0 + 0.25 * ii) * std::sin(season + 0.25 * jj - 0.1 * ii);
                v += 3.0 * decay1 * std::cos(0.6 * jj + 0.3 * ii - 0.35 * tt);
                v += 2.0 * decay2 * std::cos(0.45 * jj - 0.2 * ii + 0.22 * tt + 1.0);
                if (o.noise > 0.0) {
                    v += noise(rng);
                }
                out({i, j, t}) = v;
            }
        }
    }
    return out;
}

GeoGrid synthetic_grid(std::size_t rows, std::size_t cols) {
    std::vector<double> lats(rows);
    std::vector<double> lons(cols);
    for (std::size_t i = 0; i < rows; ++i) {
        lats[i] = 30.0 + 0.5 * static_cast<double>(i);
    }
    for (std::size_t j = 0; j < cols; ++j) {
        lons[j] = 4.0 + 0.5 * static_cast<double>(j);
    }
    return {std::move(lats), std::move(lons)};
}

}  // namespace ttcast

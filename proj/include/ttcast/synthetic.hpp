#pragma once

#include <cstddef>
#include <cstdint>

#include "ttcast/field_series.hpp"
#include "ttcast/tensor.hpp"

namespace ttcast {

/// Noiseless field x_t = Re sum_k c_k lambda_k^t u_k with `modes` eigenvalues
/// (conjugate pairs plus at most one real) of magnitude in [0.85, 1].
struct LinearFixture {
    DenseTensor series;  // rows x cols x steps
    CVector eigenvalues;
};

LinearFixture linear_fixture(std::size_t rows, std::size_t cols, std::size_t steps, std::size_t modes,
                             std::uint64_t seed);

/// Weather-like field: a latitude-dependent mean, a yearly seasonal cycle
/// whose amplitude grows with latitude and whose phase drifts with longitude,
/// two slowly decaying waves travelling in opposite directions, and Gaussian
/// noise of standard deviation `noise`. Exactly 7 linear modes without the
/// noise. The seasonal phase drift keeps its spatial patterns well separated
/// from the mean; a latitude-only phase makes them nearly collinear, and
/// least-squares DMD then damps the seasonal and mean modes under noise.
struct WeatherOptions {
    std::size_t rows = 12;
    std::size_t cols = 16;
    std::size_t steps = 400;
    double noise = 0.05;
    std::uint64_t seed = 7;
};

DenseTensor weather_fixture(const WeatherOptions& options);

/// Regular 0.5 degree grid anchored at (30, 4), matching the corner of the
/// European study region.
GeoGrid synthetic_grid(std::size_t rows, std::size_t cols);

}  // namespace ttcast

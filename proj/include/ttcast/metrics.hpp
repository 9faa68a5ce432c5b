#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ttcast/tensor.hpp"

namespace ttcast {

double rmse(std::span<const double> obs, std::span<const double> pred);
double mae(std::span<const double> obs, std::span<const double> pred);

/// Percent, in [0, 200]. Terms with |obs| + |pred| = 0 contribute 0.
double smape(std::span<const double> obs, std::span<const double> pred);

/// Normalizer for frame-wise NRMSE.
enum class NrmseNorm { range, mean, std };

/// Windowed SSIM with a uniform square window and sample covariances,
/// averaged over window positions that fit inside the image. Images smaller
/// than the window use the largest odd window that fits.
struct SsimOptions {
    std::size_t window = 7;
    double k1 = 0.01;
    double k2 = 0.03;
};

double ssim(const Matrix& reference, const Matrix& test, double data_range, const SsimOptions& options = {});

struct FramewiseMetrics {
    std::vector<double> mse;
    std::vector<std::optional<double>> nrmse;  // empty when the target slice is flat
    std::vector<double> psnr;                  // +inf when the slice matches exactly
    std::vector<double> ssim;
};

/// Per-slice metrics of two M x N x k tensors. PSNR peak and the SSIM
/// dynamic range are the range of the whole target (1 if it is flat).
FramewiseMetrics framewise(const DenseTensor& pred, const DenseTensor& target, NrmseNorm norm = NrmseNorm::range,
                           const SsimOptions& options = {});

/// Means over grid cells of metrics computed on each cell's time fiber.
struct LocationMetrics {
    double rmse = 0.0;
    double mae = 0.0;
    double smape = 0.0;
};

LocationMetrics location_mean(const DenseTensor& pred, const DenseTensor& target);

struct MetricsReport {
    std::string model;
    double rmse = 0.0;
    double mae = 0.0;
    double smape = 0.0;
    std::optional<LocationMetrics> locations;
    std::optional<FramewiseMetrics> frames;
};

/// Full report for an M x N x k forecast against its target.
MetricsReport evaluate(const DenseTensor& pred, const DenseTensor& target, NrmseNorm norm = NrmseNorm::range);

inline constexpr int kReportSchemaVersion = 1;

/// Non-finite PSNR and undefined NRMSE entries serialize as null.
nlohmann::json report_to_json(const MetricsReport& report);
MetricsReport report_from_json(const nlohmann::json& j);

/// "step,metric,value" rows for plotting, steps counted from 1.
std::string framewise_csv(const FramewiseMetrics& frames);

double mean_of(std::span<const double> values);
std::optional<double> mean_defined(std::span<const std::optional<double>> values);
std::optional<double> mean_finite(std::span<const double> values);

}  // namespace ttcast

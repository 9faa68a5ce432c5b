#include "ttcast/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ttcast {

namespace {

void check_pair(std::span<const double> obs, std::span<const double> pred) {
    if (obs.size() != pred.size()) {
        throw DataError("observation and prediction lengths differ (" + std::to_string(obs.size()) + " vs " +
                        std::to_string(pred.size()) + ")");
    }
    if (obs.empty()) {
        throw DataError("metrics need at least one value");
    }
}

void check_tensors(const DenseTensor& pred, const DenseTensor& target) {
    if (pred.shape() != target.shape()) {
        throw DataError("prediction shape " + shape_to_string(pred.shape()) + " differs from target " +
                        shape_to_string(target.shape()));
    }
    if (target.order() != 3) {
        throw DataError("frame-wise metrics expect M x N x k tensors");
    }
}

double global_range(const DenseTensor& t) {
    const auto [lo, hi] = std::minmax_element(t.data().begin(), t.data().end());
    const double range = *hi - *lo;
    return range > 0.0 ? range : 1.0;
}

std::optional<double> json_number(const nlohmann::json& j) {
    if (j.is_null()) {
        return std::nullopt;
    }
    return j.get<double>();
}

}  // namespace

double rmse(std::span<const double> obs, std::span<const double> pred) {
    check_pair(obs, pred);
    double sum = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const double e = obs[i] - pred[i];
        sum += e * e;
    }
    return std::sqrt(sum / static_cast<double>(obs.size()));
}

double mae(std::span<const double> obs, std::span<const double> pred) {
    check_pair(obs, pred);
    double sum = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        sum += std::abs(obs[i] - pred[i]);
    }
    return sum / static_cast<double>(obs.size());
}

double smape(std::span<const double> obs, std::span<const double> pred) {
    check_pair(obs, pred);
    double sum = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const double denom = (std::abs(obs[i]) + std::abs(pred[i])) / 2.0;
        if (denom > 0.0) {
            sum += std::abs(pred[i] - obs[i]) / denom;
        }
    }
    return 100.0 * sum / static_cast<double>(obs.size());
}

double ssim(const Matrix& reference, const Matrix& test, double data_range, const SsimOptions& options) {
    if (reference.rows() != test.rows() || reference.cols() != test.cols()) {
        throw DataError("SSIM images differ in shape");
    }
    auto win = static_cast<Eigen::Index>(std::min<std::size_t>(
        options.window, static_cast<std::size_t>(std::min(reference.rows(), reference.cols()))));
    if (win % 2 == 0) {
        --win;
    }
    const double count = static_cast<double>(win * win);
    const double cov_norm = win > 1 ? count / (count - 1.0) : 1.0;
    const double c1 = (options.k1 * data_range) * (options.k1 * data_range);
    const double c2 = (options.k2 * data_range) * (options.k2 * data_range);

    double total = 0.0;
    std::size_t positions = 0;
    for (Eigen::Index j = 0; j + win <= reference.cols(); ++j) {
        for (Eigen::Index i = 0; i + win <= reference.rows(); ++i) {
            const auto x = reference.block(i, j, win, win);
            const auto y = test.block(i, j, win, win);
            const double mx = x.sum() / count;
            const double my = y.sum() / count;
            const double vx = cov_norm * (x.cwiseProduct(x).sum() / count - mx * mx);
            const double vy = cov_norm * (y.cwiseProduct(y).sum() / count - my * my);
            const double vxy = cov_norm * (x.cwiseProduct(y).sum() / count - mx * my);
            const double num = (2.0 * mx * my + c1) * (2.0 * vxy + c2);
            const double den = (mx * mx + my * my + c1) * (vx + vy + c2);
            total += num / den;
            ++positions;
        }
    }
    return total / static_cast<double>(positions);
}

FramewiseMetrics framewise(const DenseTensor& pred, const DenseTensor& target, NrmseNorm norm,
                           const SsimOptions& options) {
    check_tensors(pred, target);
    const auto rows = static_cast<Eigen::Index>(target.extent(0));
    const auto cols = static_cast<Eigen::Index>(target.extent(1));
    const std::size_t steps = target.extent(2);
    const double peak = global_range(target);

    FramewiseMetrics out;
    for (std::size_t t = 0; t < steps; ++t) {
        const Matrix y = target.last_mode_slice(t).as_matrix(static_cast<std::size_t>(rows));
        const Matrix p = pred.last_mode_slice(t).as_matrix(static_cast<std::size_t>(rows));
        const double mse = (y - p).squaredNorm() / static_cast<double>(rows * cols);
        out.mse.push_back(mse);

        double scale = 0.0;
        switch (norm) {
            case NrmseNorm::range:
                scale = y.maxCoeff() - y.minCoeff();
                break;
            case NrmseNorm::mean:
                scale = std::abs(y.mean());
                break;
            case NrmseNorm::std:
                scale = std::sqrt((y.array() - y.mean()).square().mean());
                break;
        }
        out.nrmse.push_back(scale > 0.0 ? std::optional(std::sqrt(mse) / scale) : std::nullopt);
        out.psnr.push_back(mse > 0.0 ? 10.0 * std::log10(peak * peak / mse)
                                     : std::numeric_limits<double>::infinity());
        out.ssim.push_back(ssim(y, p, peak, options));
    }
    return out;
}

LocationMetrics location_mean(const DenseTensor& pred, const DenseTensor& target) {
    check_tensors(pred, target);
    const std::size_t cells = target.extent(0) * target.extent(1);
    const std::size_t steps = target.extent(2);
    LocationMetrics out;
    std::vector<double> obs(steps);
    std::vector<double> pre(steps);
    for (std::size_t c = 0; c < cells; ++c) {
        for (std::size_t t = 0; t < steps; ++t) {
            obs[t] = target.data()[c + cells * t];
            pre[t] = pred.data()[c + cells * t];
        }
        out.rmse += rmse(obs, pre);
        out.mae += mae(obs, pre);
        out.smape += smape(obs, pre);
    }
    const auto n = static_cast<double>(cells);
    out.rmse /= n;
    out.mae /= n;
    out.smape /= n;
    return out;
}

MetricsReport evaluate(const DenseTensor& pred, const DenseTensor& target, NrmseNorm norm) {
    check_tensors(pred, target);
    MetricsReport report;
    report.rmse = rmse(target.data(), pred.data());
    report.mae = mae(target.data(), pred.data());
    report.smape = smape(target.data(), pred.data());
    report.locations = location_mean(pred, target);
    report.frames = framewise(pred, target, norm);
    return report;
}

double mean_of(std::span<const double> values) {
    double sum = 0.0;
    for (double v : values) {
        sum += v;
    }
    return values.empty() ? 0.0 : sum / static_cast<double>(values.size());
}

std::optional<double> mean_defined(std::span<const std::optional<double>> values) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& v : values) {
        if (v) {
            sum += *v;
            ++n;
        }
    }
    return n > 0 ? std::optional(sum / static_cast<double>(n)) : std::nullopt;
}

std::optional<double> mean_finite(std::span<const double> values) {
    double sum = 0.0;
    std::size_t n = 0;
    for (double v : values) {
        if (std::isfinite(v)) {
            sum += v;
            ++n;
        }
    }
    return n > 0 ? std::optional(sum / static_cast<double>(n)) : std::nullopt;
}

nlohmann::json report_to_json(const MetricsReport& report) {
    auto opt = [](std::optional<double> v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    nlohmann::json j{{"schema_version", kReportSchemaVersion},
                     {"model", report.model},
                     {"rmse", report.rmse},
                     {"mae", report.mae},
                     {"smape", report.smape}};
    if (report.locations) {
        j["location_mean"] = {
            {"rmse", report.locations->rmse}, {"mae", report.locations->mae}, {"smape", report.locations->smape}};
    }
    if (report.frames) {
        const auto& f = *report.frames;
        nlohmann::json nrmse = nlohmann::json::array();
        for (const auto& v : f.nrmse) {
            nrmse.push_back(opt(v));
        }
        nlohmann::json psnr = nlohmann::json::array();
        for (double v : f.psnr) {
            psnr.push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr));
        }
        j["framewise"] = {{"mse", f.mse},
                          {"nrmse", nrmse},
                          {"psnr", psnr},
                          {"ssim", f.ssim},
                          {"mean",
                           {{"mse", mean_of(f.mse)},
                            {"nrmse", opt(mean_defined(f.nrmse))},
                            {"psnr", opt(mean_finite(f.psnr))},
                            {"ssim", mean_of(f.ssim)}}}};
    }
    return j;
}

MetricsReport report_from_json(const nlohmann::json& j) {
    try {
        if (j.at("schema_version").get<int>() != kReportSchemaVersion) {
            throw DataError("unsupported report schema version");
        }
        MetricsReport report;
        report.model = j.value("model", "");
        report.rmse = j.at("rmse").get<double>();
        report.mae = j.at("mae").get<double>();
        report.smape = j.at("smape").get<double>();
        if (j.contains("location_mean")) {
            const auto& l = j.at("location_mean");
            report.locations = LocationMetrics{l.at("rmse").get<double>(), l.at("mae").get<double>(),
                                               l.at("smape").get<double>()};
        }
        if (j.contains("framewise")) {
            const auto& f = j.at("framewise");
            FramewiseMetrics frames;
            frames.mse = f.at("mse").get<std::vector<double>>();
            frames.ssim = f.at("ssim").get<std::vector<double>>();
            for (const auto& v : f.at("nrmse")) {
                frames.nrmse.push_back(json_number(v));
            }
            for (const auto& v : f.at("psnr")) {
                frames.psnr.push_back(json_number(v).value_or(std::numeric_limits<double>::infinity()));
            }
            report.frames = std::move(frames);
        }
        return report;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed metrics report: ") + e.what());
    }
}

std::string framewise_csv(const FramewiseMetrics& frames) {
    std::ostringstream os;
    os.precision(17);
    os << "step,metric,value\n";
    auto emit = [&](std::size_t step, const char* name, std::optional<double> v) {
        os << step << ',' << name << ',';
        if (v && std::isfinite(*v)) {
            os << *v;
        } else if (v && *v > 0) {
            os << "inf";
        }
        os << '\n';
    };
    for (std::size_t t = 0; t < frames.mse.size(); ++t) {
        emit(t + 1, "mse", frames.mse[t]);
        emit(t + 1, "nrmse", frames.nrmse[t]);
        emit(t + 1, "psnr", frames.psnr[t]);
        emit(t + 1, "ssim", frames.ssim[t]);
    }
    return os.str();
}

}  // namespace ttcast

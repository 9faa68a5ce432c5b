#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "ttcast/geo.hpp"
#include "ttcast/tensor.hpp"

namespace ttcast {

enum class ArStrategy { recursive, direct };

/// x_next = intercept + sum_i lags[i] * x_{t-1-i}. A persistence model
/// repeats the last observation.
struct ArCoefficients {
    double intercept = 0.0;
    std::vector<double> lags;
    bool persistence = false;
};

/// Linear autoregressive forecaster fitted on one cluster's centered series.
/// Recursive models hold one coefficient set; direct models hold one per
/// horizon step.
struct LocalArModel {
    std::size_t lookback = 5;
    std::size_t horizon = 7;
    ArStrategy strategy = ArStrategy::recursive;
    std::vector<ArCoefficients> steps;

    /// `history` must hold at least `lookback` values; returns `count` values.
    [[nodiscard]] std::vector<double> forecast(std::span<const double> history, std::size_t count) const;
};

/// Ordinary least squares on lagged values with an intercept. A series whose
/// lag columns are constant gets an intercept-only fit; too few rows or a
/// singular design falls back to persistence.
LocalArModel fit_local_ar(std::span<const double> series, std::size_t lookback, std::size_t horizon,
                          ArStrategy strategy = ArStrategy::recursive);

/// One model per cluster, trained on the cluster's centered series.
std::vector<LocalArModel> fit_cluster_models(const DenseTensor& series, const ClusterPlan& plan,
                                             std::size_t lookback, std::size_t horizon,
                                             ArStrategy strategy = ArStrategy::recursive);

/// Applies each cell's cluster model to that cell's own recent history.
/// Returns M x N x horizon.
DenseTensor local_forecast(const ClusterPlan& plan, std::span<const LocalArModel> models,
                           const DenseTensor& series, std::size_t horizon);

nlohmann::json models_to_json(std::span<const LocalArModel> models);
std::vector<LocalArModel> models_from_json(const nlohmann::json& j);

}  // namespace ttcast

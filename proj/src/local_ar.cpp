#include "ttcast/local_ar.hpp"

#include <Eigen/QR>

#include <cmath>

namespace ttcast {

namespace {

// Predicts series[t + offset] from the `lookback` values ending at t.
ArCoefficients fit_step(std::span<const double> series, std::size_t lookback, std::size_t offset) {
    const std::size_t rows = series.size() - lookback - offset + 1;
    ArCoefficients coef;
    if (rows < lookback + 1) {
        coef.persistence = true;
        return coef;
    }
    Matrix design(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(lookback + 1));
    Vector target(static_cast<Eigen::Index>(rows));
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t t = r + lookback - 1;  // last input index
        const auto re = static_cast<Eigen::Index>(r);
        design(re, 0) = 1.0;
        for (std::size_t i = 0; i < lookback; ++i) {
            design(re, static_cast<Eigen::Index>(i + 1)) = series[t - i];
        }
        target(re) = series[t + offset];
    }

    const auto lag_block = design.rightCols(static_cast<Eigen::Index>(lookback));
    const double scale = std::max(1.0, lag_block.cwiseAbs().maxCoeff());
    const bool flat = ((lag_block.rowwise() - lag_block.row(0)).cwiseAbs().maxCoeff() <= 1e-12 * scale);
    if (flat) {
        coef.intercept = target.mean();
        coef.lags.assign(lookback, 0.0);
        return coef;
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(design);
    if (qr.rank() < design.cols()) {
        coef.persistence = true;
        return coef;
    }
    const Vector beta = qr.solve(target);
    coef.intercept = beta(0);
    coef.lags.assign(beta.data() + 1, beta.data() + beta.size());
    return coef;
}

double apply_step(const ArCoefficients& coef, std::span<const double> window) {
    if (coef.persistence) {
        return window.back();
    }
    double value = coef.intercept;
    for (std::size_t i = 0; i < coef.lags.size(); ++i) {
        value += coef.lags[i] * window[window.size() - 1 - i];
    }
    return value;
}

}  // namespace

std::vector<double> LocalArModel::forecast(std::span<const double> history, std::size_t count) const {
    if (history.size() < lookback) {
        throw DataError("history shorter than the model lookback");
    }
    std::vector<double> window(history.end() - static_cast<std::ptrdiff_t>(lookback), history.end());
    std::vector<double> out;
    out.reserve(count);
    if (strategy == ArStrategy::direct) {
        if (count > steps.size()) {
            throw DataError("direct model was fitted for " + std::to_string(steps.size()) + " steps, asked for " +
                            std::to_string(count));
        }
        for (std::size_t s = 0; s < count; ++s) {
            out.push_back(apply_step(steps[s], window));
        }
        return out;
    }
    for (std::size_t s = 0; s < count; ++s) {
        const double next = apply_step(steps.front(), window);
        out.push_back(next);
        window.erase(window.begin());
        window.push_back(next);
    }
    return out;
}

LocalArModel fit_local_ar(std::span<const double> series, std::size_t lookback, std::size_t horizon,
                          ArStrategy strategy) {
    if (lookback < 1 || horizon < 1) {
        throw DataError("lookback and horizon must be at least 1");
    }
    if (series.size() <= lookback) {
        throw DataError("series of length " + std::to_string(series.size()) + " is too short for lookback " +
                        std::to_string(lookback));
    }
    LocalArModel model{lookback, horizon, strategy, {}};
    if (strategy == ArStrategy::recursive) {
        model.steps.push_back(fit_step(series, lookback, 1));
    } else {
        for (std::size_t s = 1; s <= horizon; ++s) {
            if (series.size() < lookback + s) {
                model.steps.push_back(ArCoefficients{0.0, {}, true});
            } else {
                model.steps.push_back(fit_step(series, lookback, s));
            }
        }
    }
    return model;
}

std::vector<LocalArModel> fit_cluster_models(const DenseTensor& series, const ClusterPlan& plan,
                                             std::size_t lookback, std::size_t horizon, ArStrategy strategy) {
    const Matrix centers = centered_series(series, plan);
    std::vector<LocalArModel> models;
    models.reserve(plan.k());
    for (Eigen::Index c = 0; c < centers.rows(); ++c) {
        const Vector row = centers.row(c);
        models.push_back(fit_local_ar(std::span(row.data(), static_cast<std::size_t>(row.size())), lookback,
                                      horizon, strategy));
    }
    return models;
}

DenseTensor local_forecast(const ClusterPlan& plan, std::span<const LocalArModel> models,
                           const DenseTensor& series, std::size_t horizon) {
    if (series.order() != 3 || series.extent(0) != plan.rows || series.extent(1) != plan.cols) {
        throw DataError("cluster plan does not cover the series grid");
    }
    if (models.size() != plan.k()) {
        throw DataError("need one local model per cluster");
    }
    if (horizon < 1) {
        throw DataError("forecast needs at least one step");
    }
    const std::size_t cells = plan.rows * plan.cols;
    const std::size_t steps = series.extent(2);
    const auto values = series.as_matrix(cells);
    DenseTensor out({plan.rows, plan.cols, horizon});
    std::vector<double> history(steps);
    for (std::size_t flat = 0; flat < cells; ++flat) {
        for (std::size_t t = 0; t < steps; ++t) {
            history[t] = values(static_cast<Eigen::Index>(flat), static_cast<Eigen::Index>(t));
        }
        const auto predicted = models[plan.assignment[flat]].forecast(history, horizon);
        for (std::size_t s = 0; s < horizon; ++s) {
            out.data()[flat + cells * s] = predicted[s];
        }
    }
    return out;
}

nlohmann::json models_to_json(std::span<const LocalArModel> models) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& m : models) {
        nlohmann::json steps = nlohmann::json::array();
        for (const auto& s : m.steps) {
            steps.push_back({{"intercept", s.intercept}, {"lags", s.lags}, {"persistence", s.persistence}});
        }
        out.push_back({{"lookback", m.lookback},
                       {"horizon", m.horizon},
                       {"strategy", m.strategy == ArStrategy::direct ? "direct" : "recursive"},
                       {"steps", steps}});
    }
    return out;
}

std::vector<LocalArModel> models_from_json(const nlohmann::json& j) {
    try {
        std::vector<LocalArModel> models;
        for (const auto& m : j) {
            LocalArModel model;
            model.lookback = m.at("lookback").get<std::size_t>();
            model.horizon = m.at("horizon").get<std::size_t>();
            model.strategy = m.at("strategy").get<std::string>() == "direct" ? ArStrategy::direct
                                                                             : ArStrategy::recursive;
            for (const auto& s : m.at("steps")) {
                model.steps.push_back({s.at("intercept").get<double>(), s.at("lags").get<std::vector<double>>(),
                                       s.at("persistence").get<bool>()});
            }
            if (model.steps.empty()) {
                throw DataError("local model without coefficients");
            }
            models.push_back(std::move(model));
        }
        return models;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed local model JSON: ") + e.what());
    }
}

}  // namespace ttcast

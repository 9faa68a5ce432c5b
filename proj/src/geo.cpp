#include "ttcast/geo.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace ttcast {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

using Unit = std::array<double, 3>;

Unit to_unit(const GeoPoint& p) {
    const double phi = p.lat * kDeg;
    const double lam = p.lon * kDeg;
    return {std::cos(phi) * std::cos(lam), std::cos(phi) * std::sin(lam), std::sin(phi)};
}

GeoPoint from_unit(const Unit& u) {
    const double lat = std::atan2(u[2], std::hypot(u[0], u[1])) / kDeg;
    return {lat, normalize_longitude(std::atan2(u[1], u[0]) / kDeg)};
}

// Nearest centroid per point, lowest index on ties. Returns total distance.
double assign_nearest(std::span<const GeoPoint> points, std::span<const GeoPoint> centroids,
                      std::vector<std::size_t>& assignment) {
    assignment.resize(points.size());
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t c = 0; c < centroids.size(); ++c) {
            const double dist = haversine(points[i], centroids[c]);
            if (dist < best) {
                best = dist;
                arg = c;
            }
        }
        assignment[i] = arg;
        total += best;
    }
    return total;
}

std::vector<GeoPoint> kmeans_pp_seed(std::span<const GeoPoint> points, std::size_t k, std::mt19937_64& rng) {
    std::vector<GeoPoint> centroids;
    std::vector<bool> chosen(points.size(), false);
    std::uniform_int_distribution<std::size_t> first(0, points.size() - 1);
    std::size_t pick = first(rng);
    centroids.push_back(points[pick]);
    chosen[pick] = true;

    std::vector<double> nearest(points.size(), std::numeric_limits<double>::infinity());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    while (centroids.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const double dist = haversine(points[i], centroids.back());
            nearest[i] = std::min(nearest[i], dist * dist);
            total += chosen[i] ? 0.0 : nearest[i];
        }
        pick = points.size();
        if (total > 0.0) {
            const double target = unit(rng) * total;
            double cumulative = 0.0;
            for (std::size_t i = 0; i < points.size(); ++i) {
                if (chosen[i] || nearest[i] == 0.0) {
                    continue;
                }
                cumulative += nearest[i];
                pick = i;
                if (cumulative >= target) {
                    break;
                }
            }
        }
        if (pick == points.size()) {
            // every remaining candidate coincides with a centroid
            pick = static_cast<std::size_t>(std::find(chosen.begin(), chosen.end(), false) - chosen.begin());
        }
        centroids.push_back(points[pick]);
        chosen[pick] = true;
    }
    return centroids;
}

}  // namespace

double haversine(const GeoPoint& p, const GeoPoint& q) {
    const double phi1 = p.lat * kDeg;
    const double phi2 = q.lat * kDeg;
    const double s_lat = std::sin((phi2 - phi1) / 2.0);
    const double s_lon = std::sin((q.lon - p.lon) * kDeg / 2.0);
    const double h = s_lat * s_lat + std::cos(phi1) * std::cos(phi2) * s_lon * s_lon;
    return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(h)));
}

double normalize_longitude(double lon) {
    double out = std::fmod(lon + 180.0, 360.0);
    if (out < 0.0) {
        out += 360.0;
    }
    return out - 180.0;
}

GeoGrid::GeoGrid(std::vector<double> lats, std::vector<double> lons) : lats_(std::move(lats)), lons_(std::move(lons)) {
    if (lats_.empty() || lons_.empty()) {
        throw DataError("grid needs at least one latitude and one longitude");
    }
    for (std::size_t i = 0; i < lats_.size(); ++i) {
        if (!(lats_[i] >= -90.0 && lats_[i] <= 90.0)) {
            throw DataError("latitude out of range: " + std::to_string(lats_[i]));
        }
        if (i > 0 && !(lats_[i] > lats_[i - 1])) {
            throw DataError("latitudes must be strictly ascending");
        }
    }
    for (std::size_t j = 0; j < lons_.size(); ++j) {
        if (!(lons_[j] >= -180.0 && lons_[j] < 360.0)) {
            throw DataError("longitude out of range: " + std::to_string(lons_[j]));
        }
        lons_[j] = normalize_longitude(lons_[j]);
        if (j > 0 && !(lons_[j] > lons_[j - 1])) {
            throw DataError("longitudes must be strictly ascending after normalization to [-180, 180)");
        }
    }
}

std::vector<GeoPoint> GeoGrid::points() const {
    std::vector<GeoPoint> out;
    out.reserve(size());
    for (std::size_t flat = 0; flat < size(); ++flat) {
        out.push_back(point(flat));
    }
    return out;
}

nlohmann::json plan_to_json(const ClusterPlan& plan) {
    nlohmann::json centroids = nlohmann::json::array();
    for (const auto& c : plan.centroids) {
        centroids.push_back({c.lat, c.lon});
    }
    std::vector<std::size_t> row_major(plan.assignment.size());
    for (std::size_t i = 0; i < plan.rows; ++i) {
        for (std::size_t j = 0; j < plan.cols; ++j) {
            row_major[i * plan.cols + j] = plan.assignment[i + plan.rows * j];
        }
    }
    return {{"k", plan.k()},          {"seed", plan.seed},           {"rows", plan.rows},
            {"cols", plan.cols},      {"inertia", plan.inertia},     {"centroids", centroids},
            {"assignment", row_major}};
}

ClusterPlan plan_from_json(const nlohmann::json& j) {
    try {
        ClusterPlan plan;
        plan.seed = j.at("seed").get<std::uint64_t>();
        plan.rows = j.at("rows").get<std::size_t>();
        plan.cols = j.at("cols").get<std::size_t>();
        plan.inertia = j.at("inertia").get<double>();
        for (const auto& c : j.at("centroids")) {
            plan.centroids.push_back({c.at(0).get<double>(), c.at(1).get<double>()});
        }
        const auto row_major = j.at("assignment").get<std::vector<std::size_t>>();
        if (row_major.size() != plan.rows * plan.cols || plan.k() != j.at("k").get<std::size_t>()) {
            throw DataError("cluster plan JSON is inconsistent");
        }
        plan.assignment.resize(row_major.size());
        for (std::size_t i = 0; i < plan.rows; ++i) {
            for (std::size_t c = 0; c < plan.cols; ++c) {
                const auto idx = row_major[i * plan.cols + c];
                if (idx >= plan.k()) {
                    throw DataError("cluster plan assignment refers to a missing centroid");
                }
                plan.assignment[i + plan.rows * c] = idx;
            }
        }
        return plan;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed cluster plan JSON: ") + e.what());
    }
}

std::vector<std::size_t> sample_latitude_weighted(const GeoGrid& grid, std::size_t n_models, double lat_weight,
                                                  std::uint64_t seed) {
    const std::size_t rows = grid.rows();
    const std::size_t cols = grid.cols();
    if (n_models < 1 || n_models > grid.size()) {
        throw DataError("cannot place " + std::to_string(n_models) + " models on a grid of " +
                        std::to_string(grid.size()) + " cells");
    }
    if (!(lat_weight >= 1.0)) {
        throw DataError("latitude weight must be at least 1");
    }
    const auto by_weight =
        static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n_models) * lat_weight) - 1e-9));
    std::size_t n_rows = std::min({rows, n_models, by_weight});
    n_rows = std::max(n_rows, (n_models + cols - 1) / cols);
    const std::size_t base = n_models / n_rows;
    const std::size_t extra = n_models % n_rows;
    const std::size_t n_cols = base + (extra > 0 ? 1 : 0);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(0.0, 1.0);
    const double row_phase = phase(rng);
    const double col_phase = phase(rng);
    auto spread = [](std::size_t q, double ph, std::size_t count, std::size_t extent) {
        return std::min(extent - 1, static_cast<std::size_t>(std::floor((static_cast<double>(q) + ph) *
                                                                        static_cast<double>(extent) /
                                                                        static_cast<double>(count))));
    };

    std::vector<std::size_t> col_set(n_cols);
    for (std::size_t q = 0; q < n_cols; ++q) {
        col_set[q] = spread(q, col_phase, n_cols, cols);
    }
    std::vector<std::size_t> cells;
    cells.reserve(n_models);
    for (std::size_t r = 0; r < n_rows; ++r) {
        const std::size_t row = spread(r, row_phase, n_rows, rows);
        const std::size_t in_row = base + (r < extra ? 1 : 0);
        const std::size_t skipped = in_row < n_cols ? r % n_cols : n_cols;
        for (std::size_t q = 0; q < n_cols; ++q) {
            if (q != skipped) {
                cells.push_back(row + rows * col_set[q]);
            }
        }
    }
    return cells;
}

ClusterPlan assign_to_samples(const GeoGrid& grid, std::span<const std::size_t> sample_cells, double lat_weight) {
    if (sample_cells.empty()) {
        throw DataError("no sample locations");
    }
    ClusterPlan plan;
    plan.rows = grid.rows();
    plan.cols = grid.cols();
    for (auto cell : sample_cells) {
        if (cell >= grid.size()) {
            throw DataError("sample cell outside the grid");
        }
        plan.centroids.push_back(grid.point(cell));
    }
    plan.assignment.resize(grid.size());
    for (std::size_t flat = 0; flat < grid.size(); ++flat) {
        const GeoPoint p = grid.point(flat);
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < plan.k(); ++c) {
            const double dlat = lat_weight * (p.lat - plan.centroids[c].lat);
            const double dlon = p.lon - plan.centroids[c].lon;
            const double dist = std::hypot(dlat, dlon);
            if (dist < best) {
                best = dist;
                plan.assignment[flat] = c;
            }
        }
        plan.inertia += haversine(p, plan.centroids[plan.assignment[flat]]);
    }
    plan.inertia_history = {plan.inertia};
    return plan;
}

ClusterPlan kmeans_haversine(std::span<const GeoPoint> points, std::size_t k, std::uint64_t seed,
                             std::size_t max_iters) {
    if (k < 1 || k > points.size()) {
        throw DataError("k = " + std::to_string(k) + " invalid for " + std::to_string(points.size()) + " points");
    }
    std::mt19937_64 rng(seed);
    ClusterPlan plan;
    plan.seed = seed;
    plan.rows = points.size();
    plan.cols = 1;
    plan.centroids = kmeans_pp_seed(points, k, rng);
    plan.inertia = assign_nearest(points, plan.centroids, plan.assignment);
    plan.inertia_history.push_back(plan.inertia);

    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        std::vector<Unit> sums(k, Unit{0.0, 0.0, 0.0});
        std::vector<double> cost_old(k, 0.0);
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < points.size(); ++i) {
            const auto c = plan.assignment[i];
            const Unit u = to_unit(points[i]);
            for (int a = 0; a < 3; ++a) {
                sums[c][a] += u[a];
            }
            cost_old[c] += haversine(points[i], plan.centroids[c]);
            ++counts[c];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                continue;
            }
            const double norm = std::hypot(sums[c][0], sums[c][1], sums[c][2]);
            if (norm < 1e-12) {
                continue;
            }
            const GeoPoint candidate = from_unit({sums[c][0] / norm, sums[c][1] / norm, sums[c][2] / norm});
            double cost_new = 0.0;
            for (std::size_t i = 0; i < points.size(); ++i) {
                if (plan.assignment[i] == c) {
                    cost_new += haversine(points[i], candidate);
                }
            }
            if (cost_new <= cost_old[c]) {
                plan.centroids[c] = candidate;
            }
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] != 0) {
                continue;
            }
            std::size_t far = 0;
            double far_dist = -1.0;
            for (std::size_t i = 0; i < points.size(); ++i) {
                const double dist = haversine(points[i], plan.centroids[plan.assignment[i]]);
                if (dist > far_dist) {
                    far_dist = dist;
                    far = i;
                }
            }
            plan.centroids[c] = points[far];
        }

        const auto previous = plan.assignment;
        plan.inertia = assign_nearest(points, plan.centroids, plan.assignment);
        plan.inertia_history.push_back(plan.inertia);
        if (plan.assignment == previous) {
            break;
        }
    }
    return plan;
}

ClusterPlan cluster_haversine_kmeans(const GeoGrid& grid, std::size_t k, std::uint64_t seed,
                                     std::size_t max_iters) {
    const auto points = grid.points();
    ClusterPlan plan = kmeans_haversine(points, k, seed, max_iters);
    plan.rows = grid.rows();
    plan.cols = grid.cols();
    return plan;
}

Matrix centered_series(const DenseTensor& series, const ClusterPlan& plan) {
    if (series.order() != 3 || series.extent(0) != plan.rows || series.extent(1) != plan.cols) {
        throw DataError("cluster plan does not cover the series grid");
    }
    const std::size_t cells = plan.rows * plan.cols;
    const std::size_t steps = series.extent(2);
    Matrix out = Matrix::Zero(static_cast<Eigen::Index>(plan.k()), static_cast<Eigen::Index>(steps));
    std::vector<std::size_t> counts(plan.k(), 0);
    for (auto c : plan.assignment) {
        ++counts[c];
    }
    for (std::size_t c = 0; c < plan.k(); ++c) {
        if (counts[c] == 0) {
            throw DataError("cluster " + std::to_string(c) + " has no members");
        }
    }
    const auto values = series.as_matrix(cells);  // cells x T
    for (std::size_t flat = 0; flat < cells; ++flat) {
        out.row(static_cast<Eigen::Index>(plan.assignment[flat])) += values.row(static_cast<Eigen::Index>(flat));
    }
    for (std::size_t c = 0; c < plan.k(); ++c) {
        out.row(static_cast<Eigen::Index>(c)) /= static_cast<double>(counts[c]);
    }
    return out;
}

}  // namespace ttcast

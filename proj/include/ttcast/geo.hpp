#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "ttcast/tensor.hpp"

namespace ttcast {

/// Earth radius used by every distance in the library, km.
inline constexpr double kEarthRadiusKm = 6367.0;

struct GeoPoint {
    double lat = 0.0;  // degrees
    double lon = 0.0;  // degrees

    friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Great-circle distance in km.
double haversine(const GeoPoint& p, const GeoPoint& q);

/// Regular latitude/longitude grid. Latitudes in [-90, 90]; longitudes are
/// normalized to [-180, 180). Both axes strictly ascending.
///
/// Flat cell indices follow the tensor convention: cell (i, j) is i + M*j.
class GeoGrid {
public:
    GeoGrid() = default;
    GeoGrid(std::vector<double> lats, std::vector<double> lons);

    [[nodiscard]] const std::vector<double>& lats() const noexcept { return lats_; }
    [[nodiscard]] const std::vector<double>& lons() const noexcept { return lons_; }
    [[nodiscard]] std::size_t rows() const noexcept { return lats_.size(); }
    [[nodiscard]] std::size_t cols() const noexcept { return lons_.size(); }
    [[nodiscard]] std::size_t size() const noexcept { return lats_.size() * lons_.size(); }

    [[nodiscard]] GeoPoint point(std::size_t flat) const { return {lats_.at(flat % rows()), lons_.at(flat / rows())}; }
    [[nodiscard]] std::vector<GeoPoint> points() const;

    friend bool operator==(const GeoGrid&, const GeoGrid&) = default;

private:
    std::vector<double> lats_;
    std::vector<double> lons_;
};

double normalize_longitude(double lon);

/// Model placement over a grid: one centroid per model and the model index of
/// every cell.
struct ClusterPlan {
    std::vector<GeoPoint> centroids;
    std::vector<std::size_t> assignment;  // per cell, flat (lat-fastest) order
    std::size_t rows = 0;
    std::size_t cols = 0;
    double inertia = 0.0;                 // sum of haversine distances to assigned centroid, km
    std::vector<double> inertia_history;  // one entry per assignment pass
    std::uint64_t seed = 0;

    [[nodiscard]] std::size_t k() const noexcept { return centroids.size(); }
};

/// JSON: {"k", "seed", "rows", "cols", "inertia", "centroids": [[lat, lon], ...],
/// "assignment": row-major array of centroid indices}.
nlohmann::json plan_to_json(const ClusterPlan& plan);
ClusterPlan plan_from_json(const nlohmann::json& j);

/// Grid cells chosen as model locations, denser along latitude. Rows are
/// spread evenly over the latitude axis; each row carries the same evenly
/// spaced set of columns. `seed` shifts the row and column phase.
std::vector<std::size_t> sample_latitude_weighted(const GeoGrid& grid, std::size_t n_models, double lat_weight,
                                                  std::uint64_t seed = 0);

/// Assigns every cell to the sample minimizing sqrt((w*dlat)^2 + dlon^2) in
/// degrees; ties go to the lowest sample index.
ClusterPlan assign_to_samples(const GeoGrid& grid, std::span<const std::size_t> sample_cells, double lat_weight);

/// Lloyd iterations under haversine distance with k-means++ seeding.
/// Centroids move to the renormalized mean of member unit vectors when that
/// does not raise the cluster's distance sum. Empty clusters are reseeded at
/// the point farthest from its centroid.
ClusterPlan cluster_haversine_kmeans(const GeoGrid& grid, std::size_t k, std::uint64_t seed,
                                     std::size_t max_iters = 100);

/// Same, over an arbitrary point set (rows = points, cols = 1 in the plan).
ClusterPlan kmeans_haversine(std::span<const GeoPoint> points, std::size_t k, std::uint64_t seed,
                             std::size_t max_iters = 100);

/// k x T matrix; row c is the mean over cells assigned to c at each step.
Matrix centered_series(const DenseTensor& series, const ClusterPlan& plan);

}  // namespace ttcast

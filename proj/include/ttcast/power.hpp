#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ttcast/calendar.hpp"
#include "ttcast/field_series.hpp"

namespace ttcast {

/// Client settings for the NASA POWER daily API. Every service-facing name
/// lives here so a renamed endpoint or parameter is a config change.
struct PowerConfig {
    std::string base_url = "https://power.larc.nasa.gov";
    std::string regional_path = "/api/temporal/daily/regional";
    std::string point_path = "/api/temporal/daily/point";
    std::string community = "AG";
    std::map<std::string, std::string> parameters = {{"TMAX", "T2M_MAX"}};
    double resolution = 0.5;           // degrees
    double min_regional_span = 2.0;    // smaller boxes are fetched point by point
    double max_regional_span = 10.0;   // larger boxes are tiled
    std::size_t max_in_flight = 4;
    int max_attempts = 4;
    std::chrono::milliseconds backoff{500};  // doubled after every failed attempt
    double fill_value = -999.0;
    bool forward_fill = false;  // fill missing runs of at most 2 days
    long timeout_seconds = 300;
};

/// Overrides the defaults with whatever keys `j` holds.
PowerConfig power_config_from_json(const nlohmann::json& j);

struct PowerRequest {
    double lat_min = 0.0;
    double lat_max = 0.0;
    double lon_min = 0.0;
    double lon_max = 0.0;
    Date start;
    Date end;  // inclusive
    std::string parameter = "TMAX";
};

struct HttpResponse {
    long status = 0;  // 0 = transport failure, body holds the reason
    std::string body;
};

class HttpTransport {
public:
    virtual ~HttpTransport() = default;
    /// Must be callable from several threads at once.
    virtual HttpResponse get(const std::string& url) = 0;
};

std::shared_ptr<HttpTransport> make_curl_transport(long timeout_seconds);

/// $TTCAST_CACHE_DIR, else $XDG_CACHE_HOME/ttcast, else $HOME/.cache/ttcast,
/// else ./.ttcast-cache.
std::filesystem::path default_cache_dir();

std::string sha256_hex(std::string_view data);

struct PointSeries {
    GeoPoint point;
    std::map<std::int64_t, double> values;  // days since epoch -> value
};

/// Parses a GeoJSON Feature or FeatureCollection from the service.
std::vector<PointSeries> parse_power_response(std::string_view body, const std::string& service_parameter);

class PowerClient {
public:
    PowerClient(PowerConfig config, std::shared_ptr<HttpTransport> transport, std::filesystem::path cache_dir);

    /// Request URLs in the order they are issued and stitched.
    [[nodiscard]] std::vector<std::string> request_urls(const PowerRequest& request) const;

    /// Fetches (or reads from cache) every tile and assembles the grid. The
    /// grid axes are the coordinates the service reports.
    FieldSeries fetch(const PowerRequest& request);

    [[nodiscard]] std::size_t network_requests() const noexcept { return network_requests_.load(); }
    [[nodiscard]] const std::filesystem::path& cache_dir() const noexcept { return cache_dir_; }

private:
    std::string fetch_cached(const std::string& url);

    PowerConfig config_;
    std::shared_ptr<HttpTransport> transport_;
    std::filesystem::path cache_dir_;
    std::atomic<std::size_t> network_requests_{0};
};

/// Assembles point series into a field over [start, end]. Missing or fill
/// values are an error unless `forward_fill` covers them.
FieldSeries assemble_field(const std::vector<PointSeries>& points, Date start, Date end, std::string variable,
                           double fill_value, bool forward_fill);

}  // namespace ttcast

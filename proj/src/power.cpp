#include "ttcast/power.hpp"

#include <curl/curl.h>
#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include "ttcast/binary_io.hpp"

namespace ttcast {

namespace {

std::string number(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, ptr};
}

double snap(double v) { return std::round(v * 1e6) / 1e6; }

// Axis points lo, lo + res, ..., hi (hi snapped onto the lattice).
std::vector<double> lattice(double lo, double hi, double res) {
    const auto count = static_cast<std::size_t>(std::llround((hi - lo) / res)) + 1;
    std::vector<double> axis(count);
    for (std::size_t k = 0; k < count; ++k) {
        axis[k] = snap(lo + res * static_cast<double>(k));
    }
    return axis;
}

// Contiguous index chunks of `axis`, each spanning at most `max_span`.
std::vector<std::pair<double, double>> chunks(const std::vector<double>& axis, double max_span) {
    const double span = axis.back() - axis.front();
    const auto pieces = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(span / max_span - 1e-9)));
    std::vector<std::pair<double, double>> out;
    const std::size_t n = axis.size();
    for (std::size_t p = 0; p < pieces; ++p) {
        const std::size_t a = p * n / pieces;
        const std::size_t b = (p + 1) * n / pieces;
        if (b > a) {
            out.emplace_back(axis[a], axis[b - 1]);
        }
    }
    return out;
}

class CurlTransport : public HttpTransport {
public:
    explicit CurlTransport(long timeout) : timeout_(timeout) {
        static std::once_flag once;
        std::call_once(once, [] { curl_global_init(CURL_GLOBAL_DEFAULT); });
    }

    HttpResponse get(const std::string& url) override {
        std::unique_ptr<CURL, decltype(&curl_easy_cleanup)> curl(curl_easy_init(), curl_easy_cleanup);
        if (!curl) {
            return {0, "curl_easy_init failed"};
        }
        std::string body;
        curl_easy_setopt(curl.get(), CURLOPT_URL, url.c_str());
        curl_easy_setopt(curl.get(), CURLOPT_FOLLOWLOCATION, 1L);
        curl_easy_setopt(curl.get(), CURLOPT_TIMEOUT, timeout_);
        curl_easy_setopt(curl.get(), CURLOPT_CONNECTTIMEOUT, 20L);
        curl_easy_setopt(curl.get(), CURLOPT_NOSIGNAL, 1L);
        curl_easy_setopt(curl.get(), CURLOPT_USERAGENT, "ttcast/0.1");
        curl_easy_setopt(curl.get(), CURLOPT_WRITEFUNCTION, +[](char* ptr, std::size_t size, std::size_t n, void* out) {
            static_cast<std::string*>(out)->append(ptr, size * n);
            return size * n;
        });
        curl_easy_setopt(curl.get(), CURLOPT_WRITEDATA, &body);
        const CURLcode rc = curl_easy_perform(curl.get());
        if (rc != CURLE_OK) {
            return {0, curl_easy_strerror(rc)};
        }
        long status = 0;
        curl_easy_getinfo(curl.get(), CURLINFO_RESPONSE_CODE, &status);
        return {status, std::move(body)};
    }

private:
    long timeout_;
};

}  // namespace

PowerConfig power_config_from_json(const nlohmann::json& j) {
    PowerConfig c;
    try {
        c.base_url = j.value("base_url", c.base_url);
        c.regional_path = j.value("regional_path", c.regional_path);
        c.point_path = j.value("point_path", c.point_path);
        c.community = j.value("community", c.community);
        if (j.contains("parameters")) {
            for (const auto& [name, service] : j.at("parameters").items()) {
                c.parameters[name] = service.get<std::string>();
            }
        }
        c.resolution = j.value("resolution", c.resolution);
        c.min_regional_span = j.value("min_regional_span", c.min_regional_span);
        c.max_regional_span = j.value("max_regional_span", c.max_regional_span);
        c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
        c.max_attempts = j.value("max_attempts", c.max_attempts);
        c.backoff = std::chrono::milliseconds(j.value("backoff_ms", c.backoff.count()));
        c.fill_value = j.value("fill_value", c.fill_value);
        c.forward_fill = j.value("forward_fill", c.forward_fill);
        c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("power settings: ") + e.what());
    }
    if (c.resolution <= 0.0 || c.max_in_flight == 0 || c.max_attempts < 1 ||
        c.max_regional_span < c.min_regional_span) {
        throw ConfigError("power settings out of range");
    }
    return c;
}

std::shared_ptr<HttpTransport> make_curl_transport(long timeout_seconds) {
    return std::make_shared<CurlTransport>(timeout_seconds);
}

std::filesystem::path default_cache_dir() {
    if (const char* dir = std::getenv("TTCAST_CACHE_DIR"); dir && *dir) {
        return dir;
    }
    if (const char* xdg = std::getenv("XDG_CACHE_HOME"); xdg && *xdg) {
        return std::filesystem::path(xdg) / "ttcast";
    }
    if (const char* home = std::getenv("HOME"); home && *home) {
        return std::filesystem::path(home) / ".cache" / "ttcast";
    }
    return ".ttcast-cache";
}

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw IoError("SHA-256 digest failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

std::vector<PointSeries> parse_power_response(std::string_view body, const std::string& service_parameter) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("POWER response is not JSON: ") + e.what());
    }
    try {
        std::vector<nlohmann::json> features;
        if (doc.contains("features")) {
            for (const auto& f : doc.at("features")) {
                features.push_back(f);
            }
        } else if (doc.value("type", "") == "Feature") {
            features.push_back(doc);
        } else {
            std::string detail = doc.contains("messages") ? doc.at("messages").dump() : doc.dump().substr(0, 200);
            throw DataError("unexpected POWER response: " + detail);
        }
        std::vector<PointSeries> out;
        for (const auto& f : features) {
            const auto& coords = f.at("geometry").at("coordinates");
            if (!coords.is_array() || coords.size() < 2) {
                throw DataError("POWER feature without coordinates");
            }
            PointSeries ps;
            ps.point = {snap(coords.at(1).get<double>()), snap(normalize_longitude(coords.at(0).get<double>()))};
            const auto& param = f.at("properties").at("parameter");
            if (!param.contains(service_parameter)) {
                throw DataError("POWER feature lacks parameter " + service_parameter);
            }
            for (const auto& [key, value] : param.at(service_parameter).items()) {
                ps.values[Date::parse(key).days_since_epoch()] = value.get<double>();
            }
            out.push_back(std::move(ps));
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("POWER response schema changed: ") + e.what());
    }
}

FieldSeries assemble_field(const std::vector<PointSeries>& points, Date start, Date end, std::string variable,
                           double fill_value, bool forward_fill) {
    if (points.empty()) {
        throw DataError("POWER returned no grid points");
    }
    if (end < start) {
        throw DataError("request ends before it starts");
    }
    std::vector<double> lats;
    std::vector<double> lons;
    for (const auto& p : points) {
        lats.push_back(p.point.lat);
        lons.push_back(p.point.lon);
    }
    std::sort(lats.begin(), lats.end());
    lats.erase(std::unique(lats.begin(), lats.end()), lats.end());
    std::sort(lons.begin(), lons.end());
    lons.erase(std::unique(lons.begin(), lons.end()), lons.end());

    const std::size_t m = lats.size();
    const std::size_t n = lons.size();
    const auto steps = static_cast<std::size_t>(end - start) + 1;
    DenseTensor values({m, n, steps});
    std::vector<bool> filled(m * n, false);
    for (const auto& p : points) {
        const auto i = static_cast<std::size_t>(std::lower_bound(lats.begin(), lats.end(), p.point.lat) - lats.begin());
        const auto j = static_cast<std::size_t>(std::lower_bound(lons.begin(), lons.end(), p.point.lon) - lons.begin());
        const std::size_t cell = i + m * j;
        if (filled[cell]) {
            continue;  // overlapping tiles report shared edge points twice
        }
        filled[cell] = true;
        std::size_t run = 0;
        for (std::size_t t = 0; t < steps; ++t) {
            const Date day = start.plus_days(static_cast<std::int64_t>(t));
            const auto it = p.values.find(day.days_since_epoch());
            const bool missing = it == p.values.end() || it->second == fill_value || !std::isfinite(it->second);
            double& slot = values.data()[cell + m * n * t];
            if (!missing) {
                slot = it->second;
                run = 0;
                continue;
            }
            ++run;
            if (!forward_fill || t == 0 || run > 2) {
                throw DataError("POWER data missing for (" + number(p.point.lat) + ", " + number(p.point.lon) +
                                ") on " + day.iso());
            }
            slot = values.data()[cell + m * n * (t - 1)];
        }
    }
    const auto hole = std::find(filled.begin(), filled.end(), false);
    if (hole != filled.end()) {
        const auto cell = static_cast<std::size_t>(hole - filled.begin());
        throw DataError("POWER grid is incomplete: no series for (" + number(lats[cell % m]) + ", " +
                        number(lons[cell / m]) + ")");
    }
    return make_field_series(GeoGrid(std::move(lats), std::move(lons)), start, std::move(values),
                             std::move(variable));
}

PowerClient::PowerClient(PowerConfig config, std::shared_ptr<HttpTransport> transport,
                         std::filesystem::path cache_dir)
    : config_(std::move(config)), transport_(std::move(transport)), cache_dir_(std::move(cache_dir)) {}

std::vector<std::string> PowerClient::request_urls(const PowerRequest& r) const {
    if (r.lat_min > r.lat_max || r.lon_min > r.lon_max || r.lat_min < -90.0 || r.lat_max > 90.0) {
        throw ConfigError("invalid bounding box");
    }
    if (r.end < r.start) {
        throw ConfigError("fetch end date precedes start date");
    }
    const auto mapped = config_.parameters.find(r.parameter);
    const std::string param = mapped == config_.parameters.end() ? r.parameter : mapped->second;
    const std::string common = "parameters=" + param + "&community=" + config_.community +
                               "&start=" + r.start.compact() + "&end=" + r.end.compact() + "&format=JSON";
    const auto lats = lattice(r.lat_min, r.lat_max, config_.resolution);
    const auto lons = lattice(r.lon_min, r.lon_max, config_.resolution);

    std::vector<std::string> urls;
    if (lats.back() - lats.front() < config_.min_regional_span ||
        lons.back() - lons.front() < config_.min_regional_span) {
        for (double lon : lons) {
            for (double lat : lats) {
                urls.push_back(config_.base_url + config_.point_path + "?" + common + "&latitude=" + number(lat) +
                               "&longitude=" + number(lon));
            }
        }
        return urls;
    }
    for (const auto& [lon_lo, lon_hi] : chunks(lons, config_.max_regional_span)) {
        for (const auto& [lat_lo, lat_hi] : chunks(lats, config_.max_regional_span)) {
            urls.push_back(config_.base_url + config_.regional_path + "?" + common +
                           "&latitude-min=" + number(lat_lo) + "&latitude-max=" + number(lat_hi) +
                           "&longitude-min=" + number(lon_lo) + "&longitude-max=" + number(lon_hi));
        }
    }
    return urls;
}

std::string PowerClient::fetch_cached(const std::string& url) {
    const auto path = cache_dir_ / (sha256_hex(url) + ".json");
    if (std::filesystem::exists(path)) {
        return read_file(path);
    }
    auto delay = config_.backoff;
    std::string last_error;
    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
        ++network_requests_;
        HttpResponse res = transport_->get(url);
        if (res.status == 200) {
            write_file_atomic(path, res.body);
            return res.body;
        }
        last_error = res.status == 0 ? res.body : "HTTP " + std::to_string(res.status);
        const bool retryable = res.status == 0 || res.status == 429 || res.status >= 500;
        if (!retryable) {
            break;
        }
        if (attempt < config_.max_attempts) {
            std::this_thread::sleep_for(delay);
            delay *= 2;
        }
    }
    throw IoError("POWER request failed (" + last_error + "): " + url);
}

FieldSeries PowerClient::fetch(const PowerRequest& request) {
    const auto urls = request_urls(request);
    const auto mapped = config_.parameters.find(request.parameter);
    const std::string param = mapped == config_.parameters.end() ? request.parameter : mapped->second;

    std::vector<std::string> bodies(urls.size());
    std::vector<std::exception_ptr> errors(urls.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < urls.size(); i = next++) {
            try {
                bodies[i] = fetch_cached(urls[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        const std::size_t threads = std::min(config_.max_in_flight, urls.size());
        for (std::size_t t = 1; t < threads; ++t) {
            pool.emplace_back(worker);
        }
        worker();
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }

    std::vector<PointSeries> points;
    for (const auto& body : bodies) {
        auto part = parse_power_response(body, param);
        points.insert(points.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    return assemble_field(points, request.start, request.end, request.parameter, config_.fill_value,
                          config_.forward_fill);
}

}  // namespace ttcast

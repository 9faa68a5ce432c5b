#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "ttcast/field_series.hpp"
#include "ttcast/geo.hpp"
#include "ttcast/local_ar.hpp"
#include "ttcast/mar.hpp"
#include "ttcast/metrics.hpp"
#include "ttcast/power.hpp"
#include "ttcast/tt_dmd.hpp"

namespace ttcast {

inline constexpr const char* kVersion = "0.1.0";

// Dataset sources.
struct FileSource {
    std::filesystem::path path;
};
struct SyntheticSource {
    std::string kind = "weather";  // "weather" or "linear"
    std::size_t rows = 12;
    std::size_t cols = 16;
    std::size_t steps = 400;
    std::size_t modes = 6;  // linear only
    double noise = 0.05;    // weather only
    std::uint64_t seed = 7;
    Date start = Date(2015, 10, 30);
};
struct PowerSource {
    PowerRequest request;
    PowerConfig settings;
};
using DatasetSource = std::variant<FileSource, SyntheticSource, PowerSource>;

// Model sections; a run holds exactly one.
struct TtDmdSection {
    std::optional<std::size_t> rank;
    double energy = 0.9999;
    Anchor anchor = Anchor::last;
};
struct DmdSection {
    std::optional<std::size_t> rank;
};
struct MarSection {
    std::size_t iters = 500;
    double rel_tol = 1e-10;
    double ridge = 0.0;
    MarInit init = MarInit::identity;
    std::optional<std::uint64_t> seed;
    std::size_t restarts = 0;
};
struct ClusterSection {
    std::size_t k = 10;
    std::size_t p = 5;
    std::size_t h = 7;
    ArStrategy strategy = ArStrategy::recursive;
    std::optional<std::uint64_t> seed;
    std::size_t max_iters = 100;
};
struct SampleSection {
    std::size_t n = 20;
    double lat_weight = 3.0;
    std::size_t p = 5;
    std::size_t h = 7;
    ArStrategy strategy = ArStrategy::recursive;
    std::optional<std::uint64_t> seed;
};
using ModelSection = std::variant<TtDmdSection, DmdSection, MarSection, ClusterSection, SampleSection>;

/// Everything a run needs. Parsed from JSON; command-line flags override the
/// file, which overrides the defaults here.
struct RunConfig {
    DatasetSource dataset;
    std::optional<ModelSection> model;  // required by fit/forecast
    std::optional<SplitSpec> split;     // default: last `horizon` days are the test range
    std::size_t horizon = 7;
    std::filesystem::path output_dir = "ttcast-out";
    std::uint64_t seed = 0;
    std::filesystem::path base_dir;  // relative dataset paths resolve against this
    nlohmann::json raw;              // the parsed file, for hashing
};

RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

std::string model_kind(const ModelSection& model);

/// Reads, generates or fetches the dataset. Fetches go through the cache in
/// `cache_dir`. Appends every consumed file to `inputs`.
FieldSeries acquire_dataset(const RunConfig& config, const std::filesystem::path& cache_dir,
                            std::vector<std::filesystem::path>* inputs = nullptr);

std::pair<FieldSeries, FieldSeries> split_for_run(const FieldSeries& fs, const RunConfig& config);

/// A fitted model of any kind.
struct ClusterModel {
    ClusterPlan plan;
    std::vector<LocalArModel> models;
};
using FittedModel = std::variant<TtDmdModel, DmdModel, MarModel, ClusterModel>;

FittedModel fit_model(const ModelSection& section, const FieldSeries& train, std::uint64_t seed);

/// `steps` slices continuing `train`.
DenseTensor forecast_model(const FittedModel& model, const ModelSection& section, const FieldSeries& train,
                           std::size_t steps);

/// File name used for a fitted model inside the output directory.
std::string model_filename(const FittedModel& model);
void save_model(const FittedModel& model, const std::filesystem::path& path);
FittedModel load_model(const std::filesystem::path& path);

/// Ranked comparison of metric reports (JSON objects as written by
/// evaluate). Sorted by RMSE, ties broken by name.
struct CompareResult {
    std::string table;
    nlohmann::json json;
};
CompareResult compare_reports(const std::vector<nlohmann::json>& reports);

std::string file_sha256(const std::filesystem::path& path);

}  // namespace ttcast

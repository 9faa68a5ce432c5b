#include "ttcast/run.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "ttcast/binary_io.hpp"
#include "ttcast/model_io.hpp"
#include "ttcast/synthetic.hpp"

namespace ttcast {

namespace {

using nlohmann::json;

void only_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) {
        throw ConfigError(where + " must be an object");
    }
    for (const auto& [key, value] : j.items()) {
        if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }) == allowed.end()) {
            throw ConfigError("unknown key '" + key + "' in " + where);
        }
    }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string("config key '") + key + "' has the wrong type");
    }
}

template <typename T>
std::optional<T> get_opt(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) {
        return std::nullopt;
    }
    return get_or<T>(j, key, T{});
}

Date get_date(const json& j, const char* key) {
    if (!j.contains(key)) {
        throw ConfigError(std::string("missing date '") + key + "'");
    }
    try {
        return Date::parse(j.at(key).get<std::string>());
    } catch (const Error& e) {
        throw ConfigError(std::string("bad date '") + key + "': " + e.what());
    } catch (const json::exception&) {
        throw ConfigError(std::string("date '") + key + "' must be a string");
    }
}

double get_number(const json& j, const char* key) {
    if (!j.contains(key)) {
        throw ConfigError(std::string("missing key '") + key + "'");
    }
    return get_or<double>(j, key, 0.0);
}

ArStrategy parse_strategy(const json& j) {
    const auto s = get_or<std::string>(j, "strategy", "recursive");
    if (s == "recursive") {
        return ArStrategy::recursive;
    }
    if (s == "direct") {
        return ArStrategy::direct;
    }
    throw ConfigError("strategy must be 'recursive' or 'direct'");
}

DatasetSource parse_dataset(const json& j) {
    only_keys(j, {"path", "synthetic", "power"}, "dataset");
    if (j.size() != 1) {
        throw ConfigError("dataset needs exactly one of 'path', 'synthetic', 'power'");
    }
    if (j.contains("path")) {
        return FileSource{get_or<std::string>(j, "path", "")};
    }
    if (j.contains("synthetic")) {
        const auto& s = j.at("synthetic");
        only_keys(s, {"kind", "rows", "cols", "steps", "modes", "noise", "seed", "start"}, "dataset.synthetic");
        SyntheticSource src;
        src.kind = get_or(s, "kind", src.kind);
        if (src.kind != "weather" && src.kind != "linear") {
            throw ConfigError("synthetic kind must be 'weather' or 'linear'");
        }
        src.rows = get_or(s, "rows", src.rows);
        src.cols = get_or(s, "cols", src.cols);
        src.steps = get_or(s, "steps", src.steps);
        src.modes = get_or(s, "modes", src.modes);
        src.noise = get_or(s, "noise", src.noise);
        src.seed = get_or(s, "seed", src.seed);
        if (s.contains("start")) {
            src.start = get_date(s, "start");
        }
        return src;
    }
    const auto& p = j.at("power");
    only_keys(p, {"lat_min", "lat_max", "lon_min", "lon_max", "start", "end", "parameter", "settings"},
              "dataset.power");
    PowerSource src;
    src.request.lat_min = get_number(p, "lat_min");
    src.request.lat_max = get_number(p, "lat_max");
    src.request.lon_min = get_number(p, "lon_min");
    src.request.lon_max = get_number(p, "lon_max");
    src.request.start = get_date(p, "start");
    src.request.end = get_date(p, "end");
    src.request.parameter = get_or<std::string>(p, "parameter", "TMAX");
    src.settings = power_config_from_json(p.value("settings", json::object()));
    return src;
}

ModelSection parse_model(const json& j) {
    if (!j.is_object() || j.size() != 1) {
        throw ConfigError("model needs exactly one section: ttdmd, dmd, mar, cluster or sample");
    }
    const auto& [kind, s] = *j.items().begin();
    if (kind == "ttdmd") {
        only_keys(s, {"rank", "energy", "anchor"}, "model.ttdmd");
        TtDmdSection m;
        m.rank = get_opt<std::size_t>(s, "rank");
        m.energy = get_or(s, "energy", m.energy);
        const auto anchor = get_or<std::string>(s, "anchor", "last");
        if (anchor != "last" && anchor != "first") {
            throw ConfigError("anchor must be 'last' or 'first'");
        }
        m.anchor = anchor == "first" ? Anchor::first : Anchor::last;
        if ((m.rank && *m.rank < 1) || m.energy <= 0.0 || m.energy > 1.0) {
            throw ConfigError("ttdmd rank must be >= 1 and energy in (0, 1]");
        }
        return m;
    }
    if (kind == "dmd") {
        only_keys(s, {"rank"}, "model.dmd");
        DmdSection m{get_opt<std::size_t>(s, "rank")};
        if (m.rank && *m.rank < 1) {
            throw ConfigError("dmd rank must be >= 1");
        }
        return m;
    }
    if (kind == "mar") {
        only_keys(s, {"iters", "rel_tol", "ridge", "init", "seed", "restarts"}, "model.mar");
        MarSection m;
        m.iters = get_or(s, "iters", m.iters);
        m.rel_tol = get_or(s, "rel_tol", m.rel_tol);
        m.ridge = get_or(s, "ridge", m.ridge);
        const auto init = get_or<std::string>(s, "init", "identity");
        if (init != "identity" && init != "random") {
            throw ConfigError("mar init must be 'identity' or 'random'");
        }
        m.init = init == "random" ? MarInit::random : MarInit::identity;
        m.seed = get_opt<std::uint64_t>(s, "seed");
        m.restarts = get_or(s, "restarts", m.restarts);
        if (m.iters < 1 || m.ridge < 0.0 || m.rel_tol < 0.0) {
            throw ConfigError("mar needs iters >= 1, ridge >= 0, rel_tol >= 0");
        }
        return m;
    }
    if (kind == "cluster") {
        only_keys(s, {"k", "p", "h", "strategy", "seed", "max_iters"}, "model.cluster");
        ClusterSection m;
        m.k = get_or(s, "k", m.k);
        m.p = get_or(s, "p", m.p);
        m.h = get_or(s, "h", m.h);
        m.strategy = parse_strategy(s);
        m.seed = get_opt<std::uint64_t>(s, "seed");
        m.max_iters = get_or(s, "max_iters", m.max_iters);
        if (m.k < 1 || m.p < 1 || m.h < 1) {
            throw ConfigError("cluster needs k, p, h >= 1");
        }
        return m;
    }
    if (kind == "sample") {
        only_keys(s, {"n", "lat_weight", "p", "h", "strategy", "seed"}, "model.sample");
        SampleSection m;
        m.n = get_or(s, "n", m.n);
        m.lat_weight = get_or(s, "lat_weight", m.lat_weight);
        m.p = get_or(s, "p", m.p);
        m.h = get_or(s, "h", m.h);
        m.strategy = parse_strategy(s);
        m.seed = get_opt<std::uint64_t>(s, "seed");
        if (m.n < 1 || m.p < 1 || m.h < 1 || m.lat_weight <= 0.0) {
            throw ConfigError("sample needs n, p, h >= 1 and lat_weight > 0");
        }
        return m;
    }
    throw ConfigError("unknown model section '" + kind + "'");
}

std::string magic_of(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw IoError("cannot open " + path.string());
    }
    std::string magic(4, '\0');
    is.read(magic.data(), 4);
    return is ? magic : std::string();
}

std::string fixed(double v, int precision) {
    if (!std::isfinite(v)) {
        return v > 0 ? "inf" : "n/a";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    return buf;
}

}  // namespace

RunConfig parse_run_config(const json& j, const std::filesystem::path& base_dir) {
    only_keys(j, {"dataset", "model", "split", "horizon", "output_dir", "seed"}, "config");
    RunConfig c;
    c.raw = j;
    c.base_dir = base_dir;
    if (!j.contains("dataset")) {
        throw ConfigError("config needs a 'dataset' section");
    }
    c.dataset = parse_dataset(j.at("dataset"));
    if (j.contains("model")) {
        c.model = parse_model(j.at("model"));
    }
    if (j.contains("split")) {
        const auto& s = j.at("split");
        only_keys(s, {"train_start", "train_end", "test_start", "test_end"}, "split");
        c.split = SplitSpec{get_date(s, "train_start"), get_date(s, "train_end"), get_date(s, "test_start"),
                            get_date(s, "test_end")};
    }
    const auto horizon = get_or<long long>(j, "horizon", 7);
    if (horizon < 1) {
        throw ConfigError("horizon must be at least 1");
    }
    c.horizon = static_cast<std::size_t>(horizon);
    c.output_dir = get_or<std::string>(j, "output_dir", c.output_dir.string());
    c.seed = get_or(j, "seed", c.seed);
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const Error&) {
        throw ConfigError("cannot read config " + path.string());
    }
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return parse_run_config(j, path.parent_path());
}

std::string model_kind(const ModelSection& model) {
    static constexpr const char* names[] = {"ttdmd", "dmd", "mar", "cluster", "sample"};
    return names[model.index()];
}

FieldSeries acquire_dataset(const RunConfig& config, const std::filesystem::path& cache_dir,
                            std::vector<std::filesystem::path>* inputs) {
    if (const auto* file = std::get_if<FileSource>(&config.dataset)) {
        const auto path = file->path.is_absolute() ? file->path : config.base_dir / file->path;
        if (!std::filesystem::exists(path)) {
            throw IoError("dataset file " + path.string() + " does not exist");
        }
        if (inputs) {
            inputs->push_back(path);
        }
        return load_field_series(path);
    }
    if (const auto* syn = std::get_if<SyntheticSource>(&config.dataset)) {
        DenseTensor values = syn->kind == "linear"
                                 ? linear_fixture(syn->rows, syn->cols, syn->steps, syn->modes, syn->seed).series
                                 : weather_fixture({syn->rows, syn->cols, syn->steps, syn->noise, syn->seed});
        return make_field_series(synthetic_grid(syn->rows, syn->cols), syn->start, std::move(values),
                                 syn->kind == "linear" ? "synthetic" : "TMAX");
    }
    const auto& power = std::get<PowerSource>(config.dataset);
    PowerClient client(power.settings, make_curl_transport(power.settings.timeout_seconds), cache_dir);
    FieldSeries fs = client.fetch(power.request);
    if (inputs) {
        for (const auto& url : client.request_urls(power.request)) {
            inputs->push_back(cache_dir / (sha256_hex(url) + ".json"));
        }
    }
    return fs;
}

std::pair<FieldSeries, FieldSeries> split_for_run(const FieldSeries& fs, const RunConfig& config) {
    if (config.split) {
        auto halves = split(fs, *config.split);
        if (halves.second.steps() < config.horizon) {
            throw ConfigError("test range holds " + std::to_string(halves.second.steps()) +
                              " days, fewer than the horizon " + std::to_string(config.horizon));
        }
        return halves;
    }
    if (fs.steps() < config.horizon + 2) {
        throw DataError("series of " + std::to_string(fs.steps()) + " days is too short for horizon " +
                        std::to_string(config.horizon));
    }
    const Date boundary = fs.dates[fs.steps() - config.horizon];
    return split(fs, {fs.dates.front(), boundary.plus_days(-1), boundary, fs.dates.back()});
}

FittedModel fit_model(const ModelSection& section, const FieldSeries& train, std::uint64_t seed) {
    const DenseTensor& values = train.values;
    const std::size_t cells = train.grid.size();
    return std::visit(
        [&](const auto& s) -> FittedModel {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, TtDmdSection>) {
                TtDmdOptions options;
                options.rank = s.rank;
                options.energy = s.energy;
                return ttdmd_fit(build_tt_snapshot_tensors(values), options);
            } else if constexpr (std::is_same_v<S, DmdSection>) {
                const Matrix series = values.as_matrix(cells);
                const std::size_t max_rank = std::min<std::size_t>(cells, values.extent(2) - 1);
                return dmd_fit(build_snapshot_pair(series), std::min(s.rank.value_or(max_rank), max_rank));
            } else if constexpr (std::is_same_v<S, MarSection>) {
                MarOptions options;
                options.max_iters = s.iters;
                options.rel_tol = s.rel_tol;
                options.ridge = s.ridge;
                options.init = s.init;
                options.seed = s.seed.value_or(seed);
                options.restarts = s.restarts;
                return mar_fit_als(values, options);
            } else if constexpr (std::is_same_v<S, ClusterSection>) {
                ClusterPlan plan = cluster_haversine_kmeans(train.grid, s.k, s.seed.value_or(seed), s.max_iters);
                auto models = fit_cluster_models(values, plan, s.p, s.h, s.strategy);
                return ClusterModel{std::move(plan), std::move(models)};
            } else {
                const auto used_seed = s.seed.value_or(seed);
                const auto cells_chosen = sample_latitude_weighted(train.grid, s.n, s.lat_weight, used_seed);
                ClusterPlan plan = assign_to_samples(train.grid, cells_chosen, s.lat_weight);
                plan.seed = used_seed;
                auto models = fit_cluster_models(values, plan, s.p, s.h, s.strategy);
                return ClusterModel{std::move(plan), std::move(models)};
            }
        },
        section);
}

DenseTensor forecast_model(const FittedModel& model, const ModelSection& section, const FieldSeries& train,
                           std::size_t steps) {
    const DenseTensor& values = train.values;
    const std::size_t m = train.grid.rows();
    const std::size_t n = train.grid.cols();
    const std::size_t last = values.extent(2) - 1;
    return std::visit(
        [&](const auto& fitted) -> DenseTensor {
            using F = std::decay_t<decltype(fitted)>;
            if constexpr (std::is_same_v<F, TtDmdModel>) {
                const auto* s = std::get_if<TtDmdSection>(&section);
                return ttdmd_forecast_series(fitted, values, steps, s ? s->anchor : Anchor::last).values;
            } else if constexpr (std::is_same_v<F, DmdModel>) {
                const Vector z0 = values.as_matrix(m * n).col(static_cast<Eigen::Index>(last));
                return DenseTensor::from_matrix(dmd_forecast(fitted, z0, steps).values, {m, n, steps});
            } else if constexpr (std::is_same_v<F, MarModel>) {
                return mar_predict(fitted, values.last_mode_slice(last).as_matrix(m), steps);
            } else {
                return local_forecast(fitted.plan, fitted.models, values, steps);
            }
        },
        model);
}

std::string model_filename(const FittedModel& model) {
    static constexpr const char* names[] = {"model.ttdm", "model.dmd", "model.ttmr", "model.json"};
    return names[model.index()];
}

void save_model(const FittedModel& model, const std::filesystem::path& path) {
    std::ostringstream os;
    std::visit(
        [&](const auto& fitted) {
            using F = std::decay_t<decltype(fitted)>;
            if constexpr (std::is_same_v<F, TtDmdModel>) {
                write_ttdmd(os, fitted);
            } else if constexpr (std::is_same_v<F, DmdModel>) {
                write_dmd(os, fitted);
            } else if constexpr (std::is_same_v<F, MarModel>) {
                write_mar(os, fitted);
            } else {
                os << json{{"kind", "local_ar"}, {"plan", plan_to_json(fitted.plan)},
                           {"models", models_to_json(fitted.models)}}
                          .dump(2)
                   << '\n';
            }
        },
        model);
    write_file_atomic(path, os.str());
}

FittedModel load_model(const std::filesystem::path& path) {
    const std::string magic = magic_of(path);
    std::ifstream is(path, std::ios::binary);
    if (magic == "TTDM") {
        return read_ttdmd(is);
    }
    if (magic == "TTDD") {
        return read_dmd(is);
    }
    if (magic == "TTMR") {
        return read_mar(is);
    }
    json j;
    try {
        j = json::parse(is);
    } catch (const json::exception&) {
        throw DataError(path.string() + " is not a model file");
    }
    if (j.value("kind", "") != "local_ar") {
        throw DataError(path.string() + " is not a model file");
    }
    ClusterModel cm{plan_from_json(j.at("plan")), models_from_json(j.at("models"))};
    if (cm.models.size() != cm.plan.k()) {
        throw DataError("model file holds " + std::to_string(cm.models.size()) + " local models for " +
                        std::to_string(cm.plan.k()) + " clusters");
    }
    return cm;
}

CompareResult compare_reports(const std::vector<json>& reports) {
    struct Row {
        std::string model;
        double rmse;
        double mae;
        double smape;
        std::optional<double> fit;
        std::optional<double> inference;
        json frames;
    };
    std::vector<Row> rows;
    for (const auto& r : reports) {
        MetricsReport parsed = report_from_json(r);
        Row row{parsed.model.empty() ? "model" + std::to_string(rows.size() + 1) : parsed.model,
                parsed.rmse, parsed.mae, parsed.smape, std::nullopt, std::nullopt, nullptr};
        if (r.contains("timing")) {
            const auto& t = r.at("timing");
            row.fit = get_opt<double>(t, "fit_seconds");
            row.inference = get_opt<double>(t, "inference_seconds");
        }
        if (r.contains("framewise")) {
            row.frames = r.at("framewise").at("mean");
        }
        rows.push_back(std::move(row));
    }
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        return a.rmse != b.rmse ? a.rmse < b.rmse : a.model < b.model;
    });

    std::ostringstream table;
    char line[256];
    std::snprintf(line, sizeof line, "%-4s %-16s %10s %10s %10s  %s\n", "Rank", "Model", "RMSE", "MAE", "SMAPE",
                  "Time (training+inference)");
    table << line;
    json ranking = json::array();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        const std::string time = r.fit && r.inference ? fixed(*r.fit, 3) + "+" + fixed(*r.inference, 3) + " s" : "-";
        std::snprintf(line, sizeof line, "%-4zu %-16s %10s %10s %10s  %s\n", i + 1, r.model.c_str(),
                      fixed(r.rmse, 4).c_str(), fixed(r.mae, 4).c_str(), fixed(r.smape, 4).c_str(), time.c_str());
        table << line;
        json entry{{"rank", i + 1}, {"model", r.model}, {"rmse", r.rmse}, {"mae", r.mae}, {"smape", r.smape}};
        entry["fit_seconds"] = r.fit ? json(*r.fit) : json(nullptr);
        entry["inference_seconds"] = r.inference ? json(*r.inference) : json(nullptr);
        if (!r.frames.is_null()) {
            entry["framewise_mean"] = r.frames;
        }
        ranking.push_back(std::move(entry));
    }

    const bool any_frames = std::any_of(rows.begin(), rows.end(), [](const Row& r) { return !r.frames.is_null(); });
    if (any_frames) {
        auto cell = [](const json& f, const char* key, int precision) {
            return f.contains(key) && f.at(key).is_number() ? fixed(f.at(key).get<double>(), precision)
                                                             : std::string("n/a");
        };
        table << '\n';
        std::snprintf(line, sizeof line, "%-16s %10s %10s %10s %10s\n", "Model", "MSE", "NRMSE", "PSNR", "SSIM");
        table << line;
        for (const auto& r : rows) {
            if (r.frames.is_null()) {
                continue;
            }
            std::snprintf(line, sizeof line, "%-16s %10s %10s %10s %10s\n", r.model.c_str(),
                          cell(r.frames, "mse", 4).c_str(), cell(r.frames, "nrmse", 4).c_str(),
                          cell(r.frames, "psnr", 2).c_str(), cell(r.frames, "ssim", 4).c_str());
            table << line;
        }
    }
    return {table.str(), json{{"schema_version", kReportSchemaVersion}, {"ranking", ranking}}};
}

std::string file_sha256(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

}  // namespace ttcast

// ttcast: fetch, fit, forecast, evaluate and compare gridded forecasts.
//
// Precedence for every setting: command-line flag > config file > default.

#include <CLI11.hpp>

#include <Eigen/Core>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ttcast/binary_io.hpp"
#include "ttcast/run.hpp"
#include "ttcast/tensor_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ttcast;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
};

struct Manifest {
    std::string command;
    std::optional<RunConfig> config;
    std::vector<fs::path> inputs;
    std::vector<fs::path> outputs;
    json timings = json::object();
    json extra = json::object();
};

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string compiler() {
#if defined(__clang__)
    return "clang " __clang_version__;
#elif defined(__GNUC__)
    return "gcc " __VERSION__;
#else
    return "unknown";
#endif
}

void write_manifest(const fs::path& dir, const Manifest& m) {
    json inputs = json::array();
    for (const auto& p : m.inputs) {
        inputs.push_back({{"path", p.string()}, {"sha256", file_sha256(p)}});
    }
    json outputs = json::array();
    for (const auto& p : m.outputs) {
        outputs.push_back({{"path", p.filename().string()}, {"sha256", file_sha256(p)}});
    }
    json j{{"command", m.command},
           {"versions",
            {{"ttcast", kVersion},
             {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                           std::to_string(EIGEN_MINOR_VERSION)},
             {"compiler", compiler()}}},
           {"inputs", inputs},
           {"outputs", outputs},
           {"timings", m.timings}};
    if (m.config) {
        json effective = m.config->raw;
        effective["seed"] = m.config->seed;
        effective["output_dir"] = m.config->output_dir.string();
        j["config"] = effective;
        j["config_sha256"] = sha256_hex(effective.dump());
    }
    for (const auto& [k, v] : m.extra.items()) {
        j[k] = v;
    }
    write_file_atomic(dir / (m.command + ".manifest.json"), j.dump(2) + "\n");
}

RunConfig resolve(const Common& c) {
    if (c.config.empty()) {
        throw ConfigError("--config is required");
    }
    RunConfig config = load_run_config(c.config);
    if (c.seed) {
        config.seed = *c.seed;
    }
    if (!c.out.empty()) {
        config.output_dir = c.out;
    }
    return config;
}

const ModelSection& require_model(const RunConfig& config) {
    if (!config.model) {
        throw ConfigError("config has no model section");
    }
    return *config.model;
}

int cmd_fetch(const Common& c) {
    const RunConfig config = resolve(c);
    Manifest m{"fetch", config};
    const FieldSeries series = acquire_dataset(config, default_cache_dir(), &m.inputs);
    const auto bin = config.output_dir / "dataset.ttds";
    const auto csv = config.output_dir / "dataset.csv";
    save_dataset(series, bin);
    save_grid_csv(series, csv);
    m.outputs = {bin, csv};
    m.extra["grid"] = {series.grid.rows(), series.grid.cols()};
    m.extra["dates"] = {series.dates.front().iso(), series.dates.back().iso(), series.steps()};
    write_manifest(config.output_dir, m);
    std::cout << "dataset " << series.grid.rows() << "x" << series.grid.cols() << "x" << series.steps() << " ("
              << series.dates.front().iso() << ".." << series.dates.back().iso() << ") -> " << bin.string() << "\n";
    return 0;
}

int cmd_fit(const Common& c) {
    const RunConfig config = resolve(c);
    const ModelSection& section = require_model(config);
    Manifest m{"fit", config};
    const FieldSeries series = acquire_dataset(config, default_cache_dir(), &m.inputs);
    const auto [train, test] = split_for_run(series, config);

    const auto start = std::chrono::steady_clock::now();
    const FittedModel model = fit_model(section, train, config.seed);
    m.timings["fit_seconds"] = seconds_since(start);

    const auto path = config.output_dir / model_filename(model);
    save_model(model, path);
    m.outputs = {path};
    m.extra["model"] = model_kind(section);
    m.extra["train"] = {train.dates.front().iso(), train.dates.back().iso(), train.steps()};
    write_manifest(config.output_dir, m);
    std::cout << model_kind(section) << " fitted on " << train.steps() << " days -> " << path.string() << "\n";
    return 0;
}

fs::path find_model(const fs::path& dir) {
    for (const char* name : {"model.ttdm", "model.dmd", "model.ttmr", "model.json"}) {
        if (fs::exists(dir / name)) {
            return dir / name;
        }
    }
    throw IoError("no model file in " + dir.string() + "; run fit first or pass --model");
}

int cmd_forecast(const Common& c, const std::string& model_path) {
    const RunConfig config = resolve(c);
    const ModelSection& section = require_model(config);
    Manifest m{"forecast", config};
    const fs::path path = model_path.empty() ? find_model(config.output_dir) : fs::path(model_path);
    const FieldSeries series = acquire_dataset(config, default_cache_dir(), &m.inputs);
    m.inputs.push_back(path);
    const auto [train, test] = split_for_run(series, config);
    const FittedModel model = load_model(path);

    const auto start = std::chrono::steady_clock::now();
    const DenseTensor forecast = forecast_model(model, section, train, config.horizon);
    m.timings["inference_seconds"] = seconds_since(start);

    const auto forecast_path = config.output_dir / "forecast.ttct";
    const auto target_path = config.output_dir / "target.ttct";
    save_tensor(forecast_path, forecast);
    save_tensor(target_path, test.values.last_mode_range(0, config.horizon));
    m.outputs = {forecast_path, target_path};
    m.extra["model"] = model_kind(section);
    m.extra["horizon"] = config.horizon;
    m.extra["target_dates"] = {test.dates.front().iso(), test.dates[config.horizon - 1].iso()};
    write_manifest(config.output_dir, m);
    std::cout << config.horizon << "-step forecast -> " << forecast_path.string() << "\n";
    return 0;
}

std::optional<json> read_json_if(const fs::path& path) {
    if (!fs::exists(path)) {
        return std::nullopt;
    }
    try {
        return json::parse(read_file(path));
    } catch (const json::exception&) {
        return std::nullopt;
    }
}

int cmd_evaluate(const Common& c, std::string forecast_path, std::string target_path, std::string name,
                 const std::string& norm_name) {
    std::optional<RunConfig> config;
    if (!c.config.empty()) {
        config = resolve(c);
    }
    const fs::path out_dir = !c.out.empty() ? fs::path(c.out) : config ? config->output_dir : fs::path(".");
    if (forecast_path.empty()) {
        forecast_path = (out_dir / "forecast.ttct").string();
    }
    if (target_path.empty()) {
        target_path = (out_dir / "target.ttct").string();
    }
    NrmseNorm norm = NrmseNorm::range;
    if (norm_name == "mean") {
        norm = NrmseNorm::mean;
    } else if (norm_name == "std") {
        norm = NrmseNorm::std;
    } else if (norm_name != "range") {
        throw ConfigError("--norm must be range, mean or std");
    }

    Manifest m{"evaluate", config};
    m.inputs = {forecast_path, target_path};
    const DenseTensor forecast = load_tensor(forecast_path);
    const DenseTensor target = load_tensor(target_path);
    MetricsReport report = evaluate(forecast, target, norm);

    // Pick up the model name and timings from the manifests written beside the forecast.
    const fs::path run_dir = fs::path(forecast_path).parent_path();
    const auto fit_manifest = read_json_if(run_dir / "fit.manifest.json");
    const auto forecast_manifest = read_json_if(run_dir / "forecast.manifest.json");
    if (name.empty() && forecast_manifest && forecast_manifest->contains("model")) {
        name = forecast_manifest->at("model").get<std::string>();
    }
    report.model = name.empty() ? "model" : name;
    json j = report_to_json(report);
    if (fit_manifest && forecast_manifest) {
        j["timing"] = {{"fit_seconds", fit_manifest->at("timings").value("fit_seconds", 0.0)},
                       {"inference_seconds", forecast_manifest->at("timings").value("inference_seconds", 0.0)}};
    }

    const auto report_path = out_dir / "report.json";
    const auto csv_path = out_dir / "framewise.csv";
    write_file_atomic(report_path, j.dump(2) + "\n");
    write_file_atomic(csv_path, framewise_csv(*report.frames));
    m.outputs = {report_path, csv_path};
    write_manifest(out_dir, m);
    std::cout << report.model << ": rmse " << report.rmse << ", mae " << report.mae << ", smape " << report.smape
              << " -> " << report_path.string() << "\n";
    return 0;
}

int cmd_compare(const Common& c, const std::vector<std::string>& paths) {
    std::vector<json> reports;
    Manifest m{"compare", std::nullopt};
    for (const auto& p : paths) {
        try {
            reports.push_back(json::parse(read_file(p)));
        } catch (const json::exception& e) {
            throw DataError(p + " is not a JSON report: " + e.what());
        }
        m.inputs.emplace_back(p);
    }
    const CompareResult result = compare_reports(reports);
    std::cout << result.table;
    if (!c.out.empty()) {
        const auto path = fs::path(c.out) / "compare.json";
        write_file_atomic(path, result.json.dump(2) + "\n");
        write_file_atomic(fs::path(c.out) / "compare.txt", result.table);
        m.outputs = {path, fs::path(c.out) / "compare.txt"};
        write_manifest(c.out, m);
    }
    return 0;
}

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::config:
            return 2;
        case ErrorKind::data:
            return 3;
        case ErrorKind::numeric:
            return 4;
        case ErrorKind::io:
            return 5;
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gridded spatiotemporal forecasting with TT-DMD, DMD, MAR and local AR models"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    Common common;
    auto add_common = [&common](CLI::App* sub, bool needs_config) {
        auto* opt = sub->add_option("--config", common.config, "JSON run configuration");
        if (needs_config) {
            opt->required();
        }
        sub->add_option("--seed", common.seed, "Seed for every randomized step (overrides the config)");
        sub->add_option("--out", common.out, "Output directory (overrides the config)");
    };

    auto* fetch = app.add_subcommand("fetch", "Acquire the dataset and store it as binary and CSV");
    add_common(fetch, true);

    auto* fit = app.add_subcommand("fit", "Fit the configured model on the training range");
    add_common(fit, true);

    std::string model_path;
    auto* forecast = app.add_subcommand("forecast", "Forecast `horizon` days past the training range");
    add_common(forecast, true);
    forecast->add_option("--model", model_path, "Model file (default: the one in the output directory)");

    std::string forecast_path;
    std::string target_path;
    std::string name;
    std::string norm = "range";
    auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a forecast against its target");
    add_common(evaluate_cmd, false);
    evaluate_cmd->add_option("--forecast", forecast_path, "Forecast tensor (default: <out>/forecast.ttct)");
    evaluate_cmd->add_option("--target", target_path, "Target tensor (default: <out>/target.ttct)");
    evaluate_cmd->add_option("--name", name, "Model name in the report");
    evaluate_cmd->add_option("--norm", norm, "NRMSE normalizer: range, mean or std");

    std::vector<std::string> reports;
    auto* compare = app.add_subcommand("compare", "Rank metric reports by RMSE");
    add_common(compare, false);
    compare->add_option("reports", reports, "report.json files")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*fetch) {
            return cmd_fetch(common);
        }
        if (*fit) {
            return cmd_fit(common);
        }
        if (*forecast) {
            return cmd_forecast(common, model_path);
        }
        if (*evaluate_cmd) {
            return cmd_evaluate(common, forecast_path, target_path, name, norm);
        }
        return cmd_compare(common, reports);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

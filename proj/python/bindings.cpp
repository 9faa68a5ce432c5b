#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>

#include "ttcast/dmd.hpp"
#include "ttcast/field_series.hpp"
#include "ttcast/geo.hpp"
#include "ttcast/mar.hpp"
#include "ttcast/metrics.hpp"
#include "ttcast/run.hpp"
#include "ttcast/synthetic.hpp"
#include "ttcast/tensor_train.hpp"
#include "ttcast/tt_dmd.hpp"

namespace py = pybind11;
using namespace ttcast;

namespace {

// Arrays cross the boundary in Fortran order, which is the library's
// first-index-fastest layout.
using FArray = py::array_t<double, py::array::f_style | py::array::forcecast>;

DenseTensor to_tensor(const FArray& a) {
    if (a.ndim() < 1) {
        throw DataError("expected an array with at least one dimension");
    }
    Shape shape(a.shape(), a.shape() + a.ndim());
    return {std::move(shape), std::vector<double>(a.data(), a.data() + a.size())};
}

py::array_t<double> to_numpy(const DenseTensor& t) {
    std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
    std::vector<py::ssize_t> strides(shape.size());
    py::ssize_t stride = sizeof(double);
    for (std::size_t k = 0; k < shape.size(); ++k) {
        strides[k] = stride;
        stride *= shape[k];
    }
    py::array_t<double> out(shape, strides);
    std::copy(t.data().begin(), t.data().end(), out.mutable_data());
    return out;
}

py::dict plan_dict(const ClusterPlan& plan) {
    std::vector<std::pair<double, double>> centroids;
    for (const auto& c : plan.centroids) {
        centroids.emplace_back(c.lat, c.lon);
    }
    py::dict d;
    d["centroids"] = centroids;
    d["assignment"] = plan.assignment;
    d["inertia"] = plan.inertia;
    d["inertia_history"] = plan.inertia_history;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Tensor-train DMD, DMD, matrix autoregression and forecast metrics for gridded fields";
    m.attr("__version__") = kVersion;

    static py::exception<Error> base(m, "TtcastError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) {
                std::rethrow_exception(p);
            }
        } catch (const ConfigError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const DataError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const Error& e) {
            py::set_error(base, e.what());
        }
    });

    // tensor train
    m.def(
        "tt_decompose",
        [](const FArray& a, double tol, std::vector<std::size_t> rank_caps) {
            const TensorTrain tt = tt_decompose(to_tensor(a), {tol, std::move(rank_caps)});
            py::list cores;
            for (const auto& c : tt.cores()) {
                cores.append(to_numpy(c));
            }
            return cores;
        },
        py::arg("tensor"), py::arg("tol") = 1e-12, py::arg("rank_caps") = std::vector<std::size_t>{},
        "TT-SVD. Returns the cores, core l shaped (r_{l-1}, n_l, r_l).");
    m.def(
        "tt_reconstruct",
        [](const std::vector<FArray>& cores) {
            std::vector<DenseTensor> ts;
            for (const auto& c : cores) {
                ts.push_back(to_tensor(c));
            }
            return to_numpy(tt_reconstruct(TensorTrain(std::move(ts))));
        },
        py::arg("cores"));

    // DMD
    py::class_<DmdModel>(m, "DmdModel")
        .def_readonly("modes", &DmdModel::modes)
        .def_readonly("eigenvalues", &DmdModel::eigenvalues)
        .def_readonly("rank", &DmdModel::rank)
        .def_readonly("singular_values", &DmdModel::singular_values);
    m.def(
        "dmd_fit", [](const Matrix& series, std::size_t rank, double dt) { return dmd_fit(build_snapshot_pair(series, dt), rank); },
        py::arg("series"), py::arg("rank"), py::arg("dt") = 1.0, "Exact DMD of an n x m snapshot matrix.");
    m.def(
        "dmd_forecast", [](const DmdModel& model, const Vector& z0, std::size_t steps) { return dmd_forecast(model, z0, steps).values; },
        py::arg("model"), py::arg("z0"), py::arg("steps"));

    // TT-DMD
    py::class_<TtDmdModel>(m, "TtDmdModel")
        .def_readonly("eigenvalues", &TtDmdModel::eigenvalues)
        .def_readonly("omega", &TtDmdModel::omega)
        .def_readonly("rank", &TtDmdModel::rank)
        .def_readonly("singular_values", &TtDmdModel::singular_values)
        .def_property_readonly("modes", &TtDmdModel::vectorized_modes);
    m.def(
        "ttdmd_fit",
        [](const FArray& series, std::optional<std::size_t> rank, double energy, double dt) {
            TtDmdOptions options;
            options.rank = rank;
            options.energy = energy;
            return ttdmd_fit(build_tt_snapshot_tensors(to_tensor(series), dt), options);
        },
        py::arg("series"), py::arg("rank") = py::none(), py::arg("energy") = 0.9999, py::arg("dt") = 1.0,
        "TT-DMD of an n1 x ... x nd x T series.");
    m.def(
        "ttdmd_forecast",
        [](const TtDmdModel& model, const FArray& training, std::size_t steps, const std::string& anchor) {
            if (anchor != "last" && anchor != "first") {
                throw ConfigError("anchor must be 'last' or 'first'");
            }
            return to_numpy(ttdmd_forecast_series(model, to_tensor(training), steps,
                                                  anchor == "first" ? Anchor::first : Anchor::last)
                                .values);
        },
        py::arg("model"), py::arg("training"), py::arg("steps"), py::arg("anchor") = "last");

    // MAR
    py::class_<MarModel>(m, "MarModel")
        .def_readonly("a", &MarModel::a)
        .def_readonly("b", &MarModel::b)
        .def_readonly("loss_history", &MarModel::loss_history)
        .def_readonly("converged", &MarModel::converged)
        .def_readonly("iterations_run", &MarModel::iterations_run);
    m.def(
        "mar_fit",
        [](const FArray& series, std::size_t max_iters, double rel_tol, double ridge, const std::string& init,
           std::uint64_t seed, std::size_t restarts) {
            if (init != "identity" && init != "random") {
                throw ConfigError("init must be 'identity' or 'random'");
            }
            MarOptions o;
            o.max_iters = max_iters;
            o.rel_tol = rel_tol;
            o.ridge = ridge;
            o.init = init == "random" ? MarInit::random : MarInit::identity;
            o.seed = seed;
            o.restarts = restarts;
            py::gil_scoped_release release;
            return mar_fit_als(to_tensor(series), o);
        },
        py::arg("series"), py::arg("max_iters") = 500, py::arg("rel_tol") = 1e-10, py::arg("ridge") = 0.0,
        py::arg("init") = "identity", py::arg("seed") = 0, py::arg("restarts") = 0);
    m.def(
        "mar_predict",
        [](const MarModel& model, const Matrix& x_last, std::size_t steps) {
            return to_numpy(mar_predict(model, x_last, steps));
        },
        py::arg("model"), py::arg("x_last"), py::arg("steps"));

    // geo
    m.def(
        "haversine", [](double lat1, double lon1, double lat2, double lon2) { return haversine({lat1, lon1}, {lat2, lon2}); },
        py::arg("lat1"), py::arg("lon1"), py::arg("lat2"), py::arg("lon2"), "Great-circle distance in km.");
    m.def(
        "kmeans_haversine",
        [](const std::vector<std::pair<double, double>>& points, std::size_t k, std::uint64_t seed) {
            std::vector<GeoPoint> pts;
            for (const auto& [lat, lon] : points) {
                pts.push_back({lat, lon});
            }
            return plan_dict(kmeans_haversine(pts, k, seed));
        },
        py::arg("points"), py::arg("k"), py::arg("seed") = 0);

    // metrics
    m.def("rmse", [](const FArray& o, const FArray& p) { return rmse(to_tensor(o).data(), to_tensor(p).data()); });
    m.def("mae", [](const FArray& o, const FArray& p) { return mae(to_tensor(o).data(), to_tensor(p).data()); });
    m.def("smape", [](const FArray& o, const FArray& p) { return smape(to_tensor(o).data(), to_tensor(p).data()); });
    m.def(
        "ssim", [](const Matrix& ref, const Matrix& test, double data_range) { return ssim(ref, test, data_range); },
        py::arg("reference"), py::arg("test"), py::arg("data_range"));
    m.def(
        "evaluate_json",
        [](const FArray& pred, const FArray& target) {
            return report_to_json(evaluate(to_tensor(pred), to_tensor(target))).dump();
        },
        py::arg("pred"), py::arg("target"));

    // datasets
    m.def(
        "load_grid_csv",
        [](const std::string& path) {
            const FieldSeries fs = load_grid_csv(path);
            std::vector<std::string> dates;
            for (const auto& d : fs.dates) {
                dates.push_back(d.iso());
            }
            return py::make_tuple(to_numpy(fs.values), fs.grid.lats(), fs.grid.lons(), dates);
        },
        py::arg("path"), "Returns (values M x N x T, lats, lons, ISO dates).");
    m.def(
        "save_grid_csv",
        [](const FArray& values, std::vector<double> lats, std::vector<double> lons, const std::string& start,
           const std::string& path) {
            save_grid_csv(make_field_series(GeoGrid(std::move(lats), std::move(lons)), Date::parse(start),
                                            to_tensor(values), "TMAX"),
                          path);
        },
        py::arg("values"), py::arg("lats"), py::arg("lons"), py::arg("start"), py::arg("path"));
    m.def(
        "weather_fixture",
        [](std::size_t rows, std::size_t cols, std::size_t steps, double noise, std::uint64_t seed) {
            return to_numpy(weather_fixture({rows, cols, steps, noise, seed}));
        },
        py::arg("rows") = 12, py::arg("cols") = 16, py::arg("steps") = 400, py::arg("noise") = 0.05,
        py::arg("seed") = 7);
    m.def(
        "linear_fixture",
        [](std::size_t rows, std::size_t cols, std::size_t steps, std::size_t modes, std::uint64_t seed) {
            auto fx = linear_fixture(rows, cols, steps, modes, seed);
            return py::make_tuple(to_numpy(fx.series), fx.eigenvalues);
        },
        py::arg("rows"), py::arg("cols"), py::arg("steps"), py::arg("modes"), py::arg("seed") = 0);
}

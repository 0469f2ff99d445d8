#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "sceneloc/commands.hpp"
#include "sceneloc/dataset.hpp"
#include "sceneloc/errors.hpp"
#include "sceneloc/fusion_filter.hpp"
#include "sceneloc/scene_grid.hpp"
#include "sceneloc/se2.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace sceneloc;

namespace {

// Values may be str, int, float or bool; everything is stored as text.
Config to_config(const py::dict& d) {
    Config c;
    for (const auto& [k, v] : d) {
        std::string text;
        if (py::isinstance<py::bool_>(v)) {
            text = v.cast<bool>() ? "true" : "false";
        } else if (py::isinstance<py::float_>(v)) {
            text = format_double(v.cast<double>());
        } else {
            text = py::str(v).cast<std::string>();
        }
        c.set(py::str(k).cast<std::string>(), text);
    }
    return c;
}

Eigen::MatrixX3d poses_to_array(const std::vector<Pose2>& poses) {
    Eigen::MatrixX3d a(poses.size(), 3);
    for (std::size_t i = 0; i < poses.size(); ++i) a.row(i) = poses[i].vector().transpose();
    return a;
}

py::dict epoch_dict(const EpochStats& s) {
    py::dict d;
    d["epoch"] = s.epoch;
    d["mean_loss"] = s.mean_loss;
    d["mean_dist_err"] = s.mean_dist_err;
    d["mean_heading_err"] = s.mean_heading_err;
    d["segments"] = s.segments;
    d["skipped"] = s.skipped;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Relative pose fusion with learned scene-dependent odometry uncertainty";

    auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<InvalidArgument>(m, "InvalidArgument", error);
    py::register_exception<DataError>(m, "DataError", error);
    auto numerical = py::register_exception<NumericalError>(m, "NumericalError", error);
    py::register_exception<SingularStateError>(m, "SingularStateError", numerical);

    py::class_<Pose2>(m, "Pose2")
        .def(py::init<>())
        .def(py::init([](double x, double y, double theta) { return Pose2{x, y, theta}; }), py::arg("x"),
             py::arg("y"), py::arg("theta"))
        .def_readwrite("x", &Pose2::x)
        .def_readwrite("y", &Pose2::y)
        .def_readwrite("theta", &Pose2::theta)
        .def("vector", &Pose2::vector)
        .def(py::self == py::self)
        .def("__repr__", [](const Pose2& p) {
            return "Pose2(" + format_double(p.x) + ", " + format_double(p.y) + ", " + format_double(p.theta) + ")";
        });

    m.def("normalize_angle", &normalize_angle);
    m.def("angle_diff", &angle_diff);
    m.def("to_matrix", &to_matrix);
    m.def("from_matrix", &from_matrix);
    m.def("compose", &compose);
    m.def("inverse", &inverse);
    m.def("between", &between);

    py::class_<InfoState>(m, "InfoState")
        .def(py::init<>())
        .def_readwrite("xi", &InfoState::xi)
        .def_readwrite("omega", &InfoState::omega);

    m.def("initial_info_state", &initial_info_state, py::arg("sigma0") = kDefaultInitialSigma);
    m.def("rotate_information", &rotate_information);
    m.def(
        "rpf_step",
        [](const InfoState& s, const Pose2& mu_prev, const Pose2& u, const NoiseCov& r, const Pose2& z,
           const InfoMatrix& q) {
            const FuseResult f = rpf_step(s, mu_prev, u, r, z, q);
            return py::make_tuple(f.mean, f.state);
        },
        "Returns (mean, state).");

    py::class_<RelativePoseFuser>(m, "RelativePoseFuser")
        .def(py::init<double>(), py::arg("sigma0") = kDefaultInitialSigma)
        .def("reset", &RelativePoseFuser::reset)
        .def("step", &RelativePoseFuser::step)
        .def_property_readonly("state", &RelativePoseFuser::state)
        .def_property_readonly("last_mean", &RelativePoseFuser::last_mean);

    m.def("info_to_descriptor", [](const InfoMatrix& q) { return Eigen::Matrix<double, 6, 1>(info_to_descriptor(q).a); });
    m.def("descriptor_to_info", [](const Eigen::Matrix<double, 6, 1>& a) {
        InfoDescriptor d;
        d.a = a;
        return descriptor_to_info(d);
    });

    m.def(
        "simulate",
        [](const py::dict& config, const fs::path& out) {
            Config c = to_config(config);
            py::gil_scoped_release release;
            return static_cast<int>(run_simulate(c, out).frames.size());
        },
        py::arg("config"), py::arg("out"), "Writes a dataset directory and returns its frame count.");

    m.def(
        "load_dataset",
        [](const fs::path& dir) {
            const Dataset ds = load_dataset(dir);
            std::vector<Pose2> u, z;
            for (const Frame& f : ds.frames) {
                u.push_back(f.u);
                z.push_back(f.z);
            }
            py::dict d;
            d["truth"] = poses_to_array(ds.truth_global());
            d["u"] = poses_to_array(u);
            d["z"] = poses_to_array(z);
            d["meta"] = ds.meta.entries();
            return d;
        },
        py::arg("dir"));

    m.def(
        "train",
        [](const py::dict& config, const fs::path& data, const fs::path& out) {
            Config c = to_config(config);
            TrainResult r;
            {
                py::gil_scoped_release release;
                r = run_train(c, data, out);
            }
            py::list trace;
            for (const EpochStats& s : r.trace) trace.append(epoch_dict(s));
            return trace;
        },
        py::arg("config"), py::arg("data"), py::arg("out"), "Returns one dict per epoch, entry 0 before training.");

    m.def(
        "evaluate",
        [](const py::dict& config, const fs::path& data, const fs::path& model, const fs::path& out) {
            Config c = to_config(config);
            py::gil_scoped_release release;
            return format_metrics(run_eval(c, data, model, out));
        },
        py::arg("config"), py::arg("data"), py::arg("model"), py::arg("out"), "Returns the metrics CSV text.");

    m.def(
        "compare",
        [](const py::dict& config, const fs::path& data, const fs::path& out, const std::optional<fs::path>& calib,
           const std::optional<fs::path>& model) {
            Config c = to_config(config);
            py::gil_scoped_release release;
            return format_metrics(run_compare(c, data, calib, model, out));
        },
        py::arg("config"), py::arg("data"), py::arg("out"), py::arg("calib") = py::none(),
        py::arg("model") = py::none(), "Returns the metrics CSV text.");
}

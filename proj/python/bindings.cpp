#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pcmm/cloud_io.hpp"
#include "pcmm/error.hpp"
#include "pcmm/model_io.hpp"
#include "pcmm/pipeline.hpp"

namespace py = pybind11;

namespace {

using RowPoints = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;

pcmm::PointMatrix to_points(const Eigen::Ref<const RowPoints>& array) {
  pcmm::PointMatrix out(static_cast<std::size_t>(array.rows()));
  for (Eigen::Index k = 0; k < array.rows(); ++k) out[k] = array.row(k).transpose();
  return out;
}

RowPoints to_array(const pcmm::PointMatrix& points) {
  RowPoints out(static_cast<Eigen::Index>(points.size()), 3);
  for (std::size_t k = 0; k < points.size(); ++k) out.row(k) = points[k].transpose();
  return out;
}

pcmm::PipelineConfig make_config(const py::kwargs& kwargs) {
  pcmm::ConfigSettings settings;
  for (const auto& [key, value] : kwargs) {
    settings.set(py::str(key).cast<std::string>(), py::str(value).cast<std::string>());
  }
  return settings.resolve();
}

py::dict stats_dict(const pcmm::RunStats& s) {
  py::dict d;
  d["filter_ms"] = s.filter_ms;
  d["clustering_ms"] = s.clustering_ms;
  d["detection_ms"] = s.detection_ms;
  d["plane_fit_ms"] = s.plane_fit_ms;
  d["surface_fit_ms"] = s.surface_fit_ms;
  d["total_ms"] = s.total_ms;
  d["input_points"] = s.input_points;
  d["filtered_points"] = s.filtered_points;
  d["cluster_count"] = s.cluster_count;
  d["flat_cluster_count"] = s.flat_cluster_count;
  d["merge_edges"] = s.merge_edges;
  d["demoted_components"] = s.demoted_components;
  return d;
}

py::dict report_dict(const pcmm::EvalReport& r) {
  py::dict d;
  d["precision_rmse"] = r.precision_rmse;
  d["completeness_rmse"] = r.completeness_rmse;
  d["precision_rmse_filtered"] = r.precision_rmse_filtered;
  d["completeness_rmse_filtered"] = r.completeness_rmse_filtered;
  d["generated_points"] = r.generated_points;
  d["original_points"] = r.original_points;
  d["filtered_points"] = r.filtered_points;
  d["parameter_count"] = r.parameter_count;
  d["compression_ratio"] = r.compression_ratio;
  d["gaussians"] = r.gaussians;
  d["planes"] = r.planes;
  d["surfaces"] = r.surfaces;
  return d;
}

}  // namespace

PYBIND11_MODULE(_pcmm, m) {
  m.doc() = "Hybrid parametric point-cloud models";

  static py::exception<pcmm::Error> error(m, "Error", PyExc_RuntimeError);
  static py::exception<pcmm::ParseError> parse_error(m, "ParseError", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const pcmm::ParseError& e) {
      PyErr_SetString(parse_error.ptr(), e.what());
    } catch (const pcmm::Error& e) {
      if (e.kind() == pcmm::ErrorKind::kInvalidArgument) {
        PyErr_SetString(PyExc_ValueError, e.what());
      } else {
        PyErr_SetString(error.ptr(), e.what());
      }
    }
  });

  py::class_<pcmm::PipelineConfig>(m, "Config")
      .def(py::init([](const py::kwargs& kwargs) { return make_config(kwargs); }))
      .def_readonly("voxel_size", &pcmm::PipelineConfig::a_voxel)
      .def_readonly("n_em", &pcmm::PipelineConfig::n_em)
      .def_readonly("r_min", &pcmm::PipelineConfig::r_min)
      .def_readonly("n_min", &pcmm::PipelineConfig::n_min)
      .def_readonly("theta_min", &pcmm::PipelineConfig::theta_min)
      .def_readonly("l_min", &pcmm::PipelineConfig::l_min)
      .def_readonly("plane_boundary_voxel", &pcmm::PipelineConfig::plane_boundary_voxel)
      .def_readonly("surface_boundary_voxel", &pcmm::PipelineConfig::surface_boundary_voxel)
      .def_readonly("seed", &pcmm::PipelineConfig::rng_seed)
      .def("__eq__", [](const pcmm::PipelineConfig& a, const pcmm::PipelineConfig& b) { return a == b; })
      .def("__repr__", [](const pcmm::PipelineConfig& c) { return pcmm::format_config(c); });

  py::class_<pcmm::SceneModel>(m, "Model")
      .def_property_readonly("gaussian_count", [](const pcmm::SceneModel& s) { return s.gaussians.size(); })
      .def_property_readonly("plane_count", [](const pcmm::SceneModel& s) { return s.planes.size(); })
      .def_property_readonly("surface_count", [](const pcmm::SceneModel& s) { return s.surfaces.size(); })
      .def_property_readonly("config", [](const pcmm::SceneModel& s) { return s.config; })
      .def_property_readonly("parameter_count", &pcmm::parameter_count)
      .def("to_bytes", [](const pcmm::SceneModel& s) { return py::bytes(pcmm::serialize_model(s)); })
      .def_static("from_bytes", [](const py::bytes& b) { return pcmm::deserialize_model(b); })
      .def("__eq__", [](const pcmm::SceneModel& a, const pcmm::SceneModel& b) { return a == b; });

  m.def("voxel_filter", [](const Eigen::Ref<const RowPoints>& points, double voxel_size) {
    return to_array(pcmm::voxel_filter(to_points(points), voxel_size));
  }, py::arg("points"), py::arg("voxel_size"));

  m.def("fit", [](const Eigen::Ref<const RowPoints>& points, const pcmm::PipelineConfig* config) {
    const pcmm::PointMatrix cloud = to_points(points);
    py::gil_scoped_release release;
    pcmm::PipelineResult result = pcmm::run_pipeline(cloud, config ? *config : pcmm::PipelineConfig{});
    py::gil_scoped_acquire acquire;
    return py::make_tuple(std::move(result.model), stats_dict(result.stats));
  }, py::arg("points"), py::arg("config") = nullptr,
     "Runs the full pipeline; returns (Model, stats dict).");

  m.def("resample", [](const pcmm::SceneModel& model) { return to_array(pcmm::resample(model)); });

  m.def("rmse", [](const Eigen::Ref<const RowPoints>& from, const Eigen::Ref<const RowPoints>& to) {
    return pcmm::rmse(to_points(from), to_points(to));
  }, py::arg("source"), py::arg("target"));

  m.def("evaluate", [](const pcmm::SceneModel& model, const Eigen::Ref<const RowPoints>& points) {
    return report_dict(pcmm::evaluate(model, to_points(points)));
  });

  m.def("save_model", [](const pcmm::SceneModel& model, const std::string& path) {
    pcmm::save_model(model, path);
  });
  m.def("load_model", [](const std::string& path) { return pcmm::load_model(path); });
  m.def("read_cloud", [](const std::string& path) { return to_array(pcmm::read_cloud(path)); });
  m.def("write_cloud", [](const std::string& path, const Eigen::Ref<const RowPoints>& points) {
    pcmm::write_cloud(path, to_points(points));
  });
}

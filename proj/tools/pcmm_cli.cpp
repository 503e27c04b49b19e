// pcmm: fit, resample, evaluate and inspect parametric point-cloud models.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "pcmm/cloud_io.hpp"
#include "pcmm/error.hpp"
#include "pcmm/model_io.hpp"
#include "pcmm/pipeline.hpp"

namespace {

using json = nlohmann::ordered_json;

enum ExitCode { kOk = 0, kUsage = 1, kInput = 2, kNumerical = 3 };

int exit_code(pcmm::ErrorKind kind) {
  switch (kind) {
    case pcmm::ErrorKind::kInvalidArgument:
      return kUsage;
    case pcmm::ErrorKind::kInput:
      return kInput;
    case pcmm::ErrorKind::kNumerical:
      return kNumerical;
  }
  return kNumerical;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw pcmm::Error(pcmm::ErrorKind::kInput, "cannot write " + path.string());
    out << text;
    if (!out) throw pcmm::Error(pcmm::ErrorKind::kInput, "write failed for " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

json config_json(const pcmm::PipelineConfig& c) {
  return {{"voxel_size", c.a_voxel},
          {"nem", c.n_em},
          {"rmin", c.r_min},
          {"nmin", c.n_min},
          {"theta_min_rad", c.theta_min},
          {"lmin", c.l_min},
          {"plane_boundary_voxel", c.plane_boundary_voxel},
          {"surface_boundary_voxel", c.surface_boundary_voxel},
          {"seed", c.rng_seed}};
}

json stats_json(const pcmm::PipelineResult& r) {
  const auto& s = r.stats;
  const auto& m = r.model;
  return {{"timings_ms",
           {{"filter", s.filter_ms},
            {"clustering", s.clustering_ms},
            {"detection", s.detection_ms},
            {"plane_fit", s.plane_fit_ms},
            {"surface_fit", s.surface_fit_ms},
            {"total", s.total_ms}}},
          {"points", {{"input", s.input_points}, {"filtered", s.filtered_points}}},
          {"clusters",
           {{"total", s.cluster_count},
            {"flat", s.flat_cluster_count},
            {"merge_edges", s.merge_edges},
            {"demoted_components", s.demoted_components}}},
          {"primitives",
           {{"gaussians", m.gaussians.size()},
            {"planes", m.planes.size()},
            {"surfaces", m.surfaces.size()}}},
          {"config", config_json(m.config)}};
}

json report_json(const pcmm::EvalReport& r, bool against_filtered) {
  return {{"reference", against_filtered ? "filtered" : "raw"},
          {"precision_rmse", against_filtered ? r.precision_rmse_filtered : r.precision_rmse},
          {"completeness_rmse",
           against_filtered ? r.completeness_rmse_filtered : r.completeness_rmse},
          {"precision_rmse_raw", r.precision_rmse},
          {"completeness_rmse_raw", r.completeness_rmse},
          {"precision_rmse_filtered", r.precision_rmse_filtered},
          {"completeness_rmse_filtered", r.completeness_rmse_filtered},
          {"generated_points", r.generated_points},
          {"original_points", r.original_points},
          {"filtered_points", r.filtered_points},
          {"parameter_count", r.parameter_count},
          {"compression_ratio", r.compression_ratio},
          {"gaussians", r.gaussians},
          {"planes", r.planes},
          {"surfaces", r.surfaces}};
}

// Flattens a json object into "a.b = value" lines.
void print_flat(const json& j, const std::string& prefix = "") {
  for (const auto& [key, value] : j.items()) {
    const std::string name = prefix.empty() ? key : prefix + "." + key;
    if (value.is_object()) {
      print_flat(value, name);
    } else if (value.is_string()) {
      std::cout << name << " = " << value.get<std::string>() << '\n';
    } else {
      std::cout << name << " = " << value.dump() << '\n';
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parametric point-cloud models: Gaussians, bounded planes and B-spline surfaces"};
  app.require_subcommand(1);

  // fit
  auto* fit = app.add_subcommand("fit", "Fit a model to a point cloud");
  std::string fit_cloud, fit_out, fit_config, fit_stats;
  pcmm::ConfigSettings flags;
  double voxel_size = 0, rmin = 0, theta = 0, lmin = 0, plane_mult = 0, surf_mult = 0;
  std::size_t nem = 0, nmin = 0;
  std::uint64_t seed = 0;
  fit->add_option("cloud", fit_cloud, "Input cloud (.ply or .xyz)")->required();
  fit->add_option("-o,--output", fit_out, "Output model file")->required();
  auto* o_voxel = fit->add_option("--voxel-size", voxel_size, "Voxel filter edge (m)");
  auto* o_nem = fit->add_option("--nem", nem, "K-means/EM switch size");
  auto* o_rmin = fit->add_option("--rmin", rmin, "Density radius factor");
  auto* o_nmin = fit->add_option("--nmin", nmin, "Minimum cluster size");
  auto* o_theta = fit->add_option("--theta-min-deg", theta, "Merge angle tolerance (deg)");
  auto* o_lmin = fit->add_option("--lmin", lmin, "Normal-distance tolerance (m)");
  auto* o_pmult = fit->add_option("--plane-bnd-mult", plane_mult, "Plane boundary cell / voxel");
  auto* o_smult = fit->add_option("--surf-bnd-mult", surf_mult, "Surface boundary cell / voxel");
  auto* o_seed = fit->add_option("--seed", seed, "Resampling seed");
  fit->add_option("--config", fit_config, "key = value config file");
  fit->add_option("--stats", fit_stats, "Write run statistics as JSON");

  // resample
  auto* resample = app.add_subcommand("resample", "Generate a point cloud from a model");
  std::string rs_model, rs_out;
  resample->add_option("model", rs_model, "Model file")->required();
  resample->add_option("-o,--output", rs_out, "Output cloud (.ply or .xyz)")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Precision/completeness RMSE of a model");
  std::string ev_model, ev_cloud, ev_json;
  bool against_filtered = false;
  eval->add_option("model", ev_model, "Model file")->required();
  eval->add_option("cloud", ev_cloud, "Reference cloud")->required();
  eval->add_flag("--against-filtered", against_filtered,
                 "Report the voxel-filtered reference as the headline");
  eval->add_option("--json", ev_json, "Also write the report as JSON");

  // info
  auto* info = app.add_subcommand("info", "Summarize a model file");
  std::string info_model;
  info->add_option("model", info_model, "Model file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*fit) {
      pcmm::ConfigSettings settings;
      if (!fit_config.empty()) settings = pcmm::read_config_file(fit_config);
      if (*o_voxel) flags.voxel_size = voxel_size;
      if (*o_nem) flags.n_em = nem;
      if (*o_rmin) flags.r_min = rmin;
      if (*o_nmin) flags.n_min = nmin;
      if (*o_theta) flags.theta_min_deg = theta;
      if (*o_lmin) flags.l_min = lmin;
      if (*o_pmult) flags.plane_bnd_mult = plane_mult;
      if (*o_smult) flags.surf_bnd_mult = surf_mult;
      if (*o_seed) flags.seed = seed;
      settings.merge(flags);
      const pcmm::PipelineConfig config = settings.resolve();

      const pcmm::PointMatrix cloud = pcmm::read_cloud(fit_cloud);
      const pcmm::PipelineResult result = pcmm::run_pipeline(cloud, config);
      pcmm::save_model(result.model, fit_out);

      const json stats = stats_json(result);
      print_flat(stats);
      if (!fit_stats.empty()) write_text_atomic(fit_stats, stats.dump(2) + "\n");
    } else if (*resample) {
      const pcmm::SceneModel model = pcmm::load_model(rs_model);
      const pcmm::PointMatrix points = pcmm::resample(model);
      pcmm::write_cloud(rs_out, points);
      std::cout << "generated_points = " << points.size() << '\n';
    } else if (*eval) {
      const pcmm::SceneModel model = pcmm::load_model(ev_model);
      const pcmm::PointMatrix cloud = pcmm::read_cloud(ev_cloud);
      const json report = report_json(pcmm::evaluate(model, cloud), against_filtered);
      print_flat(report);
      if (!ev_json.empty()) write_text_atomic(ev_json, report.dump(2) + "\n");
    } else if (*info) {
      const pcmm::SceneModel model = pcmm::load_model(info_model);
      std::cout << "format = PCMM1 v" << pcmm::kModelFormatVersion << '\n'
                << "gaussians = " << model.gaussians.size() << '\n'
                << "planes = " << model.planes.size() << '\n'
                << "surfaces = " << model.surfaces.size() << '\n'
                << "input_points = " << model.stats.input_points << '\n'
                << "filtered_points = " << model.stats.filtered_points << '\n'
                << "parameter_count = " << pcmm::parameter_count(model) << '\n'
                << pcmm::format_config(model.config);
    }
  } catch (const pcmm::Error& e) {
    std::cerr << "pcmm: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "pcmm: " << e.what() << '\n';
    return kInput;
  } catch (const std::exception& e) {
    std::cerr << "pcmm: " << e.what() << '\n';
    return kNumerical;
  }
  return kOk;
}

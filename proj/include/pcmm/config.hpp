#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

namespace pcmm {

/// Tunables of the fitting pipeline. Lengths are in meters, angles in radians.
struct PipelineConfig {
  double a_voxel = 0.03;               // voxel filter edge
  std::size_t n_em = 200;              // clusters at or below this size use EM
  double r_min = 2.0;                  // density radius factor, in [2, 3]
  std::size_t n_min = 40;              // minimum cluster size
  double theta_min = 15.0 * std::numbers::pi / 180.0;
  double l_min = 0.045;                // normal-distance merge tolerance
  double plane_boundary_voxel = 0.15;  // 2D boundary cell for planes
  double surface_boundary_voxel = 0.09;  // 2D boundary cell for surfaces
  std::uint64_t rng_seed = 0;

  /// Defaults scaled to a filter size: l_min = 1.5a, plane cells 5a,
  /// surface cells 3a.
  static PipelineConfig for_voxel_size(double a_voxel);

  /// Throws Error(kInvalidArgument) when an invariant is violated.
  void validate() const;

  bool operator==(const PipelineConfig&) const = default;
};

/// Partially specified configuration, as read from a config file or the
/// command line. Unset lengths are derived from the voxel size on resolve().
struct ConfigSettings {
  std::optional<double> voxel_size;
  std::optional<std::size_t> n_em;
  std::optional<double> r_min;
  std::optional<std::size_t> n_min;
  std::optional<double> theta_min_deg;
  std::optional<double> l_min;
  std::optional<double> plane_bnd_mult;
  std::optional<double> surf_bnd_mult;
  std::optional<std::uint64_t> seed;

  /// Parses one entry. Keys: voxel-size, nem, rmin, nmin, theta-min-deg,
  /// lmin, plane-bnd-mult, surf-bnd-mult, seed; underscores may replace
  /// dashes. Throws Error(kInvalidArgument) on unknown keys or bad values.
  void set(std::string_view key, std::string_view value);

  /// Fields set in `higher` win.
  void merge(const ConfigSettings& higher);

  PipelineConfig resolve() const;
};

/// Reads a flat `key = value` file; `#` starts a comment.
ConfigSettings read_config_file(const std::filesystem::path& path);

/// Human-readable `key = value` dump, the same syntax read_config_file accepts.
std::string format_config(const PipelineConfig& config);

}  // namespace pcmm

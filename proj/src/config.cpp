#include "pcmm/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pcmm/error.hpp"

namespace pcmm {
namespace {

std::string normalize_key(std::string_view key) {
  std::string out(key);
  for (char& c : out) {
    if (c == '_') c = '-';
  }
  return out;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view key, std::string_view value) {
  double out = 0.0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end || !std::isfinite(out)) {
    throw Error(ErrorKind::kInvalidArgument,
                "bad value for " + std::string(key) + ": '" + std::string(value) + "'");
  }
  return out;
}

std::uint64_t parse_unsigned(std::string_view key, std::string_view value) {
  std::uint64_t out = 0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorKind::kInvalidArgument,
                "bad value for " + std::string(key) + ": '" + std::string(value) + "'");
  }
  return out;
}

void require(bool condition, const char* message) {
  if (!condition) throw Error(ErrorKind::kInvalidArgument, message);
}

}  // namespace

PipelineConfig PipelineConfig::for_voxel_size(double a_voxel) {
  PipelineConfig c;
  c.a_voxel = a_voxel;
  c.l_min = 1.5 * a_voxel;
  c.plane_boundary_voxel = 5.0 * a_voxel;
  c.surface_boundary_voxel = 3.0 * a_voxel;
  return c;
}

void PipelineConfig::validate() const {
  require(a_voxel > 0.0 && l_min > 0.0 && plane_boundary_voxel > 0.0 &&
              surface_boundary_voxel > 0.0,
          "all lengths must be positive");
  require(n_min >= 4, "n_min must be at least 4");
  require(n_em > n_min, "n_em must exceed n_min");
  require(r_min >= 2.0 && r_min <= 3.0, "r_min must lie in [2, 3]");
  // tolerate the rounding of 1.5 * a style derivations
  const double slack = 1e-12 * a_voxel;
  require(l_min >= a_voxel - slack && l_min <= 2.0 * a_voxel + slack,
          "l_min must lie in [a_voxel, 2 a_voxel]");
  require(theta_min > 0.0 && theta_min < std::numbers::pi / 2.0,
          "theta_min must lie in (0, 90) degrees");
}

void ConfigSettings::set(std::string_view raw_key, std::string_view raw_value) {
  const std::string key = normalize_key(trim(raw_key));
  const std::string_view value = trim(raw_value);
  if (key == "voxel-size") {
    voxel_size = parse_double(key, value);
  } else if (key == "nem") {
    n_em = parse_unsigned(key, value);
  } else if (key == "rmin") {
    r_min = parse_double(key, value);
  } else if (key == "nmin") {
    n_min = parse_unsigned(key, value);
  } else if (key == "theta-min-deg") {
    theta_min_deg = parse_double(key, value);
  } else if (key == "lmin") {
    l_min = parse_double(key, value);
  } else if (key == "plane-bnd-mult") {
    plane_bnd_mult = parse_double(key, value);
  } else if (key == "surf-bnd-mult") {
    surf_bnd_mult = parse_double(key, value);
  } else if (key == "seed") {
    seed = parse_unsigned(key, value);
  } else {
    throw Error(ErrorKind::kInvalidArgument, "unknown config key '" + key + "'");
  }
}

void ConfigSettings::merge(const ConfigSettings& higher) {
  auto take = [](auto& mine, const auto& theirs) {
    if (theirs) mine = theirs;
  };
  take(voxel_size, higher.voxel_size);
  take(n_em, higher.n_em);
  take(r_min, higher.r_min);
  take(n_min, higher.n_min);
  take(theta_min_deg, higher.theta_min_deg);
  take(l_min, higher.l_min);
  take(plane_bnd_mult, higher.plane_bnd_mult);
  take(surf_bnd_mult, higher.surf_bnd_mult);
  take(seed, higher.seed);
}

PipelineConfig ConfigSettings::resolve() const {
  PipelineConfig c = PipelineConfig::for_voxel_size(voxel_size.value_or(0.03));
  if (n_em) c.n_em = *n_em;
  if (r_min) c.r_min = *r_min;
  if (n_min) c.n_min = *n_min;
  if (theta_min_deg) c.theta_min = *theta_min_deg * std::numbers::pi / 180.0;
  if (l_min) c.l_min = *l_min;
  if (plane_bnd_mult) c.plane_boundary_voxel = *plane_bnd_mult * c.a_voxel;
  if (surf_bnd_mult) c.surface_boundary_voxel = *surf_bnd_mult * c.a_voxel;
  if (seed) c.rng_seed = *seed;
  c.validate();
  return c;
}

ConfigSettings read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kInput, "cannot open config file " + path.string());
  ConfigSettings settings;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) {
      view = view.substr(0, hash);
    }
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::kInput, path.string() + ":" + std::to_string(line_number) +
                                         ": expected 'key = value'");
    }
    try {
      settings.set(view.substr(0, eq), view.substr(eq + 1));
    } catch (const Error& e) {
      throw Error(ErrorKind::kInput,
                  path.string() + ":" + std::to_string(line_number) + ": " + e.what());
    }
  }
  return settings;
}

std::string format_config(const PipelineConfig& c) {
  std::ostringstream out;
  out.precision(17);
  out << "voxel-size = " << c.a_voxel << '\n'
      << "nem = " << c.n_em << '\n'
      << "rmin = " << c.r_min << '\n'
      << "nmin = " << c.n_min << '\n'
      << "theta-min-deg = " << c.theta_min * 180.0 / std::numbers::pi << '\n'
      << "lmin = " << c.l_min << '\n'
      << "plane-bnd-mult = " << c.plane_boundary_voxel / c.a_voxel << '\n'
      << "surf-bnd-mult = " << c.surface_boundary_voxel / c.a_voxel << '\n'
      << "seed = " << c.rng_seed << '\n';
  return out.str();
}

}  // namespace pcmm

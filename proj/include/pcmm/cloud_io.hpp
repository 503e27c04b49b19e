#pragma once

#include <filesystem>

#include "pcmm/cloud.hpp"

namespace pcmm {

/// Loads a cloud by extension: `.ply` (ascii or binary_little_endian) or
/// anything else as whitespace-separated `x y z` lines. Only vertex x/y/z are
/// read; other properties and elements are skipped. Non-finite coordinates
/// are rejected.
PointMatrix read_cloud(const std::filesystem::path& path);

PointMatrix read_ply(const std::filesystem::path& path);
PointMatrix read_xyz(const std::filesystem::path& path);

/// Writes `.ply` as ascii PLY with double vertex coordinates, anything else as
/// xyz lines. Digits are sufficient for an exact round trip.
void write_cloud(const std::filesystem::path& path, std::span<const Point> cloud);

}  // namespace pcmm

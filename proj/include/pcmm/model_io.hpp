#pragma once

#include <filesystem>
#include <string>

#include "pcmm/scene.hpp"

namespace pcmm {

inline constexpr int kModelFormatVersion = 1;

/// PCMM1 container: an ASCII header ("PCMM1", format version, config echo,
/// primitive counts, "end-header") followed by a little-endian binary body
/// with 64-bit IEEE floats and row-major LSB-first bitmaps. Round trips are
/// bit-exact.
std::string serialize_model(const SceneModel& model);

/// Throws ParseError (with byte offset) on malformed input and Error on a
/// version mismatch.
SceneModel deserialize_model(const std::string& bytes);

/// Atomic write: temp file then rename.
void save_model(const SceneModel& model, const std::filesystem::path& path);
SceneModel load_model(const std::filesystem::path& path);

}  // namespace pcmm

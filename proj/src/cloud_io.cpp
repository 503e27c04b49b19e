#include "pcmm/cloud_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "pcmm/error.hpp"

namespace pcmm {
namespace {

enum class PlyFormat { kAscii, kBinaryLittleEndian };

struct PlyProperty {
  std::string name;
  std::string type;
  bool is_list = false;
  std::string count_type;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

std::size_t type_size(const std::string& type, std::size_t offset) {
  if (type == "char" || type == "uchar" || type == "int8" || type == "uint8") return 1;
  if (type == "short" || type == "ushort" || type == "int16" || type == "uint16") return 2;
  if (type == "int" || type == "uint" || type == "float" || type == "int32" ||
      type == "uint32" || type == "float32")
    return 4;
  if (type == "double" || type == "float64") return 8;
  throw ParseError("unknown PLY property type '" + type + "'", offset);
}

template <typename T>
T load_le(const unsigned char* bytes) {
  std::array<unsigned char, sizeof(T)> buf{};
  std::memcpy(buf.data(), bytes, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(buf.begin(), buf.end());
  }
  T out;
  std::memcpy(&out, buf.data(), sizeof(T));
  return out;
}

double decode_binary(const std::string& type, const unsigned char* bytes) {
  if (type == "char" || type == "int8") return load_le<std::int8_t>(bytes);
  if (type == "uchar" || type == "uint8") return load_le<std::uint8_t>(bytes);
  if (type == "short" || type == "int16") return load_le<std::int16_t>(bytes);
  if (type == "ushort" || type == "uint16") return load_le<std::uint16_t>(bytes);
  if (type == "int" || type == "int32") return load_le<std::int32_t>(bytes);
  if (type == "uint" || type == "uint32") return load_le<std::uint32_t>(bytes);
  if (type == "float" || type == "float32") return load_le<float>(bytes);
  return load_le<double>(bytes);
}

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kInput, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool parse_number(std::string_view token, double& out) {
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size();
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

}  // namespace

PointMatrix read_cloud(const std::filesystem::path& path) {
  if (path.extension() == ".ply" || path.extension() == ".PLY") return read_ply(path);
  return read_xyz(path);
}

PointMatrix read_xyz(const std::filesystem::path& path) {
  const std::string data = read_all(path);
  PointMatrix cloud;
  std::size_t pos = 0;
  while (pos < data.size()) {
    std::size_t eol = data.find('\n', pos);
    if (eol == std::string::npos) eol = data.size();
    std::string_view line(data.data() + pos, eol - pos);
    const auto tokens = split_ws(line);
    if (!tokens.empty() && tokens.front().front() != '#') {
      Point p;
      if (tokens.size() < 3 || !parse_number(tokens[0], p.x()) ||
          !parse_number(tokens[1], p.y()) || !parse_number(tokens[2], p.z())) {
        throw ParseError("expected 'x y z' in " + path.string(), pos);
      }
      if (!p.allFinite()) throw ParseError("non-finite coordinate in " + path.string(), pos);
      cloud.push_back(p);
    }
    pos = eol + 1;
  }
  if (cloud.empty()) throw Error(ErrorKind::kInput, "no points in " + path.string());
  return cloud;
}

PointMatrix read_ply(const std::filesystem::path& path) {
  const std::string data = read_all(path);
  std::size_t pos = 0;
  auto next_line = [&]() -> std::string_view {
    if (pos >= data.size()) throw ParseError("unexpected end of PLY header", pos);
    std::size_t eol = data.find('\n', pos);
    if (eol == std::string::npos) eol = data.size();
    std::string_view line(data.data() + pos, eol - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = eol + 1;
    return line;
  };

  if (next_line() != "ply") throw ParseError("missing 'ply' magic", 0);
  PlyFormat format = PlyFormat::kAscii;
  bool have_format = false;
  std::vector<PlyElement> elements;
  for (;;) {
    const std::size_t line_start = pos;
    const auto tokens = split_ws(next_line());
    if (tokens.empty() || tokens[0] == "comment" || tokens[0] == "obj_info") continue;
    if (tokens[0] == "end_header") break;
    if (tokens[0] == "format" && tokens.size() >= 2) {
      if (tokens[1] == "ascii") {
        format = PlyFormat::kAscii;
      } else if (tokens[1] == "binary_little_endian") {
        format = PlyFormat::kBinaryLittleEndian;
      } else {
        throw ParseError("unsupported PLY format '" + std::string(tokens[1]) + "'", line_start);
      }
      have_format = true;
    } else if (tokens[0] == "element" && tokens.size() == 3) {
      PlyElement e;
      e.name = tokens[1];
      double count = 0;
      if (!parse_number(tokens[2], count) || count < 0) {
        throw ParseError("bad element count", line_start);
      }
      e.count = static_cast<std::size_t>(count);
      elements.push_back(std::move(e));
    } else if (tokens[0] == "property" && !elements.empty()) {
      PlyProperty prop;
      if (tokens.size() == 5 && tokens[1] == "list") {
        prop.is_list = true;
        prop.count_type = tokens[2];
        prop.type = tokens[3];
        prop.name = tokens[4];
      } else if (tokens.size() == 3) {
        prop.type = tokens[1];
        prop.name = tokens[2];
      } else {
        throw ParseError("malformed property line", line_start);
      }
      elements.back().properties.push_back(std::move(prop));
    } else {
      throw ParseError("unrecognized PLY header line", line_start);
    }
  }
  if (!have_format) throw ParseError("missing PLY format line", pos);

  PointMatrix cloud;
  for (const PlyElement& element : elements) {
    const bool is_vertex = element.name == "vertex";
    std::array<int, 3> axis_of_property{-1, -1, -1};
    std::vector<int> axis(element.properties.size(), -1);
    for (std::size_t k = 0; k < element.properties.size(); ++k) {
      const auto& name = element.properties[k].name;
      if (is_vertex && !element.properties[k].is_list) {
        if (name == "x") axis[k] = 0;
        if (name == "y") axis[k] = 1;
        if (name == "z") axis[k] = 2;
      }
      if (axis[k] >= 0) axis_of_property[static_cast<std::size_t>(axis[k])] = static_cast<int>(k);
    }
    if (is_vertex) {
      for (int a : axis_of_property) {
        if (a < 0) throw ParseError("vertex element lacks x/y/z", pos);
      }
      cloud.reserve(element.count);
    }

    for (std::size_t row = 0; row < element.count; ++row) {
      const std::size_t row_start = pos;
      Point p = Point::Zero();
      if (format == PlyFormat::kAscii) {
        std::size_t eol = data.find('\n', pos);
        if (eol == std::string::npos) eol = data.size();
        if (pos >= data.size()) throw ParseError("truncated PLY body", pos);
        const auto tokens = split_ws(std::string_view(data.data() + pos, eol - pos));
        pos = eol + 1;
        std::size_t t = 0;
        for (std::size_t k = 0; k < element.properties.size(); ++k) {
          const auto& prop = element.properties[k];
          std::size_t n_values = 1;
          if (prop.is_list) {
            double n = 0;
            if (t >= tokens.size() || !parse_number(tokens[t], n)) {
              throw ParseError("bad list count", row_start);
            }
            ++t;
            n_values = static_cast<std::size_t>(n);
          }
          for (std::size_t v = 0; v < n_values; ++v, ++t) {
            double value = 0;
            if (t >= tokens.size() || !parse_number(tokens[t], value)) {
              throw ParseError("bad PLY value", row_start);
            }
            if (axis[k] >= 0) p[axis[k]] = value;
          }
        }
      } else {
        for (std::size_t k = 0; k < element.properties.size(); ++k) {
          const auto& prop = element.properties[k];
          std::size_t n_values = 1;
          if (prop.is_list) {
            const std::size_t w = type_size(prop.count_type, pos);
            if (pos + w > data.size()) throw ParseError("truncated PLY body", pos);
            n_values = static_cast<std::size_t>(decode_binary(
                prop.count_type, reinterpret_cast<const unsigned char*>(data.data() + pos)));
            pos += w;
          }
          const std::size_t w = type_size(prop.type, pos);
          if (pos + w * n_values > data.size()) throw ParseError("truncated PLY body", pos);
          if (axis[k] >= 0) {
            p[axis[k]] = decode_binary(prop.type,
                                       reinterpret_cast<const unsigned char*>(data.data() + pos));
          }
          pos += w * n_values;
        }
      }
      if (is_vertex) {
        if (!p.allFinite()) throw ParseError("non-finite vertex coordinate", row_start);
        cloud.push_back(p);
      }
    }
    if (is_vertex) break;
  }
  if (cloud.empty()) throw Error(ErrorKind::kInput, "no vertices in " + path.string());
  return cloud;
}

void write_cloud(const std::filesystem::path& path, std::span<const Point> cloud) {
  std::ostringstream out;
  out.precision(17);
  if (path.extension() == ".ply" || path.extension() == ".PLY") {
    out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size()
        << "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
  }
  for (const Point& p : cloud) out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';

  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream file(tmp, std::ios::binary | std::ios::trunc);
    if (!file) throw Error(ErrorKind::kInput, "cannot write " + path.string());
    const std::string text = out.str();
    file.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!file) throw Error(ErrorKind::kInput, "write failed for " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace pcmm

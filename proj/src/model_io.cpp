#include "pcmm/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "pcmm/error.hpp"

namespace pcmm {
namespace {

constexpr std::string_view kMagic = "PCMM1";
constexpr std::string_view kEndHeader = "end-header";
constexpr std::uint64_t kMaxCount = 1ULL << 40;

class Writer {
 public:
  void raw(std::string_view s) { out_.append(s); }

  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) { le(v); }
  void u64(std::uint64_t v) { le(v); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v)); }

  void vec(const Eigen::Ref<const Eigen::VectorXd>& v) {
    for (Eigen::Index k = 0; k < v.size(); ++k) f64(v[k]);
  }
  void mat3(const Eigen::Matrix3d& m) {
    for (int c = 0; c < 3; ++c) {
      for (int r = 0; r < 3; ++r) f64(m(r, c));
    }
  }
  void bitmap(const std::vector<std::uint8_t>& bits) {
    std::vector<std::uint8_t> packed((bits.size() + 7) / 8, 0);
    for (std::size_t k = 0; k < bits.size(); ++k) {
      if (bits[k]) packed[k / 8] |= static_cast<std::uint8_t>(1u << (k % 8));
    }
    for (auto b : packed) u8(b);
  }

  std::string take() { return std::move(out_); }

 private:
  template <typename T>
  void le(T v) {
    for (std::size_t k = 0; k < sizeof(T); ++k) {
      out_.push_back(static_cast<char>((v >> (8 * k)) & 0xFF));
    }
  }

  std::string out_;
};

class Reader {
 public:
  Reader(const std::string& data, std::size_t pos) : data_(data), pos_(pos) {}

  std::size_t offset() const { return pos_; }
  bool at_end() const { return pos_ == data_.size(); }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(what, pos_); }

  void expect(std::string_view tag) {
    need(tag.size());
    if (std::string_view(data_).substr(pos_, tag.size()) != tag) {
      fail("expected section '" + std::string(tag) + "'");
    }
    pos_ += tag.size();
  }

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data_[pos_++]);
  }
  std::uint32_t u32() { return le<std::uint32_t>(); }
  std::uint64_t u64() { return le<std::uint64_t>(); }
  double f64() { return std::bit_cast<double>(le<std::uint64_t>()); }

  std::uint64_t count(std::uint64_t limit = kMaxCount) {
    const std::uint64_t n = u64();
    if (n > limit) fail("implausible element count");
    return n;
  }

  Eigen::Vector3d vec3() {
    Eigen::Vector3d v;
    for (int k = 0; k < 3; ++k) v[k] = f64();
    return v;
  }
  Eigen::Matrix3d mat3() {
    Eigen::Matrix3d m;
    for (int c = 0; c < 3; ++c) {
      for (int r = 0; r < 3; ++r) m(r, c) = f64();
    }
    return m;
  }
  std::vector<std::uint8_t> bitmap(std::size_t bits) {
    const std::size_t bytes = (bits + 7) / 8;
    need(bytes);
    std::vector<std::uint8_t> out(bits, 0);
    for (std::size_t k = 0; k < bits; ++k) {
      out[k] = (static_cast<std::uint8_t>(data_[pos_ + k / 8]) >> (k % 8)) & 1u;
    }
    pos_ += bytes;
    return out;
  }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) fail("unexpected end of model file");
  }

  template <typename T>
  T le() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t k = 0; k < sizeof(T); ++k) {
      v |= static_cast<T>(static_cast<unsigned char>(data_[pos_ + k])) << (8 * k);
    }
    pos_ += sizeof(T);
    return v;
  }

  const std::string& data_;
  std::size_t pos_;
};

void write_grid(Writer& w, const BoundaryGrid& g) {
  w.f64(g.cell_size);
  w.f64(g.origin.x());
  w.f64(g.origin.y());
  w.u32(static_cast<std::uint32_t>(g.nx));
  w.u32(static_cast<std::uint32_t>(g.ny));
  w.bitmap(g.occupied);
  w.bitmap(g.boundary);
  std::uint64_t clip_count = 0;
  for (auto b : g.boundary) clip_count += b ? 1 : 0;
  w.u64(clip_count);
  for (int i = 0; i < g.nx; ++i) {
    for (int j = 0; j < g.ny; ++j) {
      if (!g.is_boundary(i, j)) continue;
      const ClipLines& c = g.clips[g.index(i, j)];
      w.u32(static_cast<std::uint32_t>(i));
      w.u32(static_cast<std::uint32_t>(j));
      w.u8(static_cast<std::uint8_t>(c.corner));
      w.f64(c.lx);
      w.f64(c.ly);
      w.f64(c.lxy);
    }
  }
}

BoundaryGrid read_grid(Reader& r) {
  BoundaryGrid g;
  g.cell_size = r.f64();
  g.origin.x() = r.f64();
  g.origin.y() = r.f64();
  const std::uint32_t nx = r.u32();
  const std::uint32_t ny = r.u32();
  if (nx == 0 || ny == 0 || static_cast<std::uint64_t>(nx) * ny > kMaxCount) {
    r.fail("bad boundary grid dimensions");
  }
  if (!(g.cell_size > 0.0)) r.fail("bad boundary cell size");
  g.nx = static_cast<int>(nx);
  g.ny = static_cast<int>(ny);
  const std::size_t cells = static_cast<std::size_t>(nx) * ny;
  g.occupied = r.bitmap(cells);
  g.boundary = r.bitmap(cells);
  g.clips.assign(cells, ClipLines{});
  const std::uint64_t clip_count = r.count(cells);
  for (std::uint64_t k = 0; k < clip_count; ++k) {
    const std::uint32_t i = r.u32();
    const std::uint32_t j = r.u32();
    const std::uint8_t corner = r.u8();
    if (i >= nx || j >= ny || corner > 3) r.fail("bad clip tuple");
    ClipLines& c = g.clips[g.index(static_cast<int>(i), static_cast<int>(j))];
    c.corner = static_cast<Corner>(corner);
    c.lx = r.f64();
    c.ly = r.f64();
    c.lxy = r.f64();
  }
  return g;
}

void write_pose(Writer& w, const Eigen::Vector3d& origin, const Eigen::Matrix3d& basis) {
  w.vec(origin);
  w.mat3(basis);
}

void write_patch(Writer& w, const SplinePatch& p) {
  w.u32(static_cast<std::uint32_t>(p.degree_x));
  w.u32(static_cast<std::uint32_t>(p.degree_y));
  w.u64(p.knots_x.size());
  for (double k : p.knots_x) w.f64(k);
  w.u64(p.knots_y.size());
  for (double k : p.knots_y) w.f64(k);
  for (Eigen::Index a = 0; a < p.ctrl_z.rows(); ++a) {
    for (Eigen::Index b = 0; b < p.ctrl_z.cols(); ++b) w.f64(p.ctrl_z(a, b));
  }
}

SplinePatch read_patch(Reader& r, const BoundaryGrid& g) {
  SplinePatch p;
  p.degree_x = static_cast<int>(r.u32());
  p.degree_y = static_cast<int>(r.u32());
  if (p.degree_x < 1 || p.degree_y < 1 || p.degree_x > 3 || p.degree_y > 3) {
    r.fail("bad spline degree");
  }
  auto read_knots = [&](std::vector<double>& knots, int n, int degree) {
    const std::uint64_t len = r.count();
    if (len != static_cast<std::uint64_t>(n + degree + 3)) r.fail("knot vector length mismatch");
    knots.resize(len);
    for (auto& k : knots) k = r.f64();
  };
  read_knots(p.knots_x, g.nx, p.degree_x);
  read_knots(p.knots_y, g.ny, p.degree_y);
  assign_control_positions(p, g);
  p.ctrl_z.resize(g.nx + 2, g.ny + 2);
  for (Eigen::Index a = 0; a < p.ctrl_z.rows(); ++a) {
    for (Eigen::Index b = 0; b < p.ctrl_z.cols(); ++b) p.ctrl_z(a, b) = r.f64();
  }
  return p;
}

void write_config(Writer& w, const PipelineConfig& c) {
  w.f64(c.a_voxel);
  w.u64(c.n_em);
  w.f64(c.r_min);
  w.u64(c.n_min);
  w.f64(c.theta_min);
  w.f64(c.l_min);
  w.f64(c.plane_boundary_voxel);
  w.f64(c.surface_boundary_voxel);
  w.u64(c.rng_seed);
}

PipelineConfig read_config(Reader& r) {
  PipelineConfig c;
  c.a_voxel = r.f64();
  c.n_em = r.u64();
  c.r_min = r.f64();
  c.n_min = r.u64();
  c.theta_min = r.f64();
  c.l_min = r.f64();
  c.plane_boundary_voxel = r.f64();
  c.surface_boundary_voxel = r.f64();
  c.rng_seed = r.u64();
  return c;
}

}  // namespace

std::string serialize_model(const SceneModel& model) {
  Writer w;
  std::ostringstream header;
  header << kMagic << '\n'
         << "format-version " << kModelFormatVersion << '\n'
         << format_config(model.config)
         << "gaussians = " << model.gaussians.size() << '\n'
         << "planes = " << model.planes.size() << '\n'
         << "surfaces = " << model.surfaces.size() << '\n'
         << kEndHeader << '\n';
  w.raw(header.str());

  w.raw("CONF");
  write_config(w, model.config);
  w.raw("STAT");
  w.u64(model.stats.input_points);
  w.u64(model.stats.filtered_points);

  w.raw("GAUS");
  w.u64(model.gaussians.size());
  for (const auto& g : model.gaussians) {
    w.vec(g.mean);
    const Eigen::Matrix3d& c = g.covariance;
    for (double v : {c(0, 0), c(0, 1), c(0, 2), c(1, 1), c(1, 2), c(2, 2)}) w.f64(v);
    w.u64(g.point_count);
  }
  w.raw("PLAN");
  w.u64(model.planes.size());
  for (const auto& p : model.planes) {
    write_pose(w, p.origin, p.basis);
    w.u64(p.point_count);
    write_grid(w, p.grid);
  }
  w.raw("SURF");
  w.u64(model.surfaces.size());
  for (const auto& s : model.surfaces) {
    write_pose(w, s.origin, s.basis);
    w.u64(s.point_count);
    write_grid(w, s.grid);
    write_patch(w, s.patch);
  }
  w.raw("END!");
  return w.take();
}

SceneModel deserialize_model(const std::string& bytes) {
  // Header: line-oriented text; only the magic and version are binding.
  std::size_t pos = 0;
  auto next_line = [&]() -> std::string_view {
    const std::size_t eol = bytes.find('\n', pos);
    if (eol == std::string::npos) throw ParseError("unterminated model header", pos);
    std::string_view line(bytes.data() + pos, eol - pos);
    pos = eol + 1;
    return line;
  };
  if (bytes.size() < kMagic.size() || std::string_view(bytes).substr(0, kMagic.size()) != kMagic) {
    throw ParseError("not a PCMM1 model file", 0);
  }
  if (next_line() != kMagic) throw ParseError("not a PCMM1 model file", 0);
  const std::size_t version_pos = pos;
  const std::string_view version_line = next_line();
  constexpr std::string_view kVersionKey = "format-version ";
  if (version_line.substr(0, kVersionKey.size()) != kVersionKey) {
    throw ParseError("missing format-version line", version_pos);
  }
  const std::string version(version_line.substr(kVersionKey.size()));
  if (version != std::to_string(kModelFormatVersion)) {
    throw Error(ErrorKind::kInput, "unsupported model format version " + version +
                                       " (expected " + std::to_string(kModelFormatVersion) + ")");
  }
  while (next_line() != kEndHeader) {
  }

  Reader r(bytes, pos);
  SceneModel model;
  r.expect("CONF");
  model.config = read_config(r);
  r.expect("STAT");
  model.stats.input_points = r.u64();
  model.stats.filtered_points = r.u64();

  r.expect("GAUS");
  const std::uint64_t n_gauss = r.count();
  for (std::uint64_t k = 0; k < n_gauss; ++k) {
    GaussianPrimitive g;
    g.mean = r.vec3();
    double c[6];
    for (double& v : c) v = r.f64();
    g.covariance << c[0], c[1], c[2], c[1], c[3], c[4], c[2], c[4], c[5];
    g.point_count = r.u64();
    model.gaussians.push_back(g);
  }
  r.expect("PLAN");
  const std::uint64_t n_planes = r.count();
  for (std::uint64_t k = 0; k < n_planes; ++k) {
    PlanePrimitive p;
    p.origin = r.vec3();
    p.basis = r.mat3();
    p.point_count = r.u64();
    p.grid = read_grid(r);
    model.planes.push_back(std::move(p));
  }
  r.expect("SURF");
  const std::uint64_t n_surfaces = r.count();
  for (std::uint64_t k = 0; k < n_surfaces; ++k) {
    SurfacePrimitive s;
    s.origin = r.vec3();
    s.basis = r.mat3();
    s.point_count = r.u64();
    s.grid = read_grid(r);
    s.patch = read_patch(r, s.grid);
    model.surfaces.push_back(std::move(s));
  }
  r.expect("END!");
  if (!r.at_end()) r.fail("trailing bytes after model");
  return model;
}

void save_model(const SceneModel& model, const std::filesystem::path& path) {
  const std::string bytes = serialize_model(model);
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kInput, "cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::kInput, "write failed for " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

SceneModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kInput, "cannot open " + path.string());
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return deserialize_model(bytes);
}

}  // namespace pcmm

#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "pcmm/error.hpp"
#include "pcmm/model_io.hpp"
#include "pcmm/pipeline.hpp"
#include "support/fixtures.hpp"

namespace pcmm {
namespace {

namespace fs = std::filesystem;

// Hand-built model touching every field, with awkward doubles.
SceneModel sample_model() {
  SceneModel m;
  m.config = PipelineConfig::for_voxel_size(0.037);
  m.config.rng_seed = 0xDEADBEEFCAFEULL;
  m.config.theta_min = 0.1234567890123;
  m.stats = {123456789, 4321};

  Eigen::Matrix3d cov;
  cov << 1.0 / 3, 1e-300, -2.5, 1e-300, 7.0, 0.125, -2.5, 0.125, 5e-324;
  m.gaussians.push_back({Point(-0.0, 1e308, 0.1), cov, 17});
  m.gaussians.push_back({Point(1, 2, 3), Eigen::Matrix3d::Zero(), 0});

  PlanePrimitive p;
  p.origin = Point(0.1, 0.2, 0.3);
  p.basis = Eigen::AngleAxisd(0.3, Eigen::Vector3d(1, 1, 0).normalized()).toRotationMatrix();
  p.point_count = 999;
  p.grid.cell_size = 0.15;
  p.grid.origin = Eigen::Vector2d(-0.7, 1.0 / 7);
  p.grid.nx = 3;
  p.grid.ny = 5;
  p.grid.occupied = {1, 1, 0, 1, 1, 1, 1, 1, 1, 0, 0, 1, 1, 1, 1};
  p.grid.boundary = {1, 1, 0, 1, 1, 1, 0, 0, 1, 0, 0, 1, 1, 1, 1};
  p.grid.clips.assign(15, ClipLines{});
  p.grid.clips[0] = {Corner::kMaxMin, 0.01, 0.02, 1.0 / 3};
  p.grid.clips[14] = {Corner::kMaxMax, 0.0, 0.05, 0.0};
  m.planes.push_back(p);

  SurfacePrimitive s;
  s.origin = Point(5, 6, 7);
  s.point_count = 4;
  s.grid.cell_size = 0.09;
  s.grid.origin = Eigen::Vector2d(0.01, -0.02);
  s.grid.nx = 2;
  s.grid.ny = 1;
  s.grid.occupied = {1, 1};
  s.grid.boundary = {1, 1};
  s.grid.clips = {ClipLines{Corner::kMinMax, 0.001, 0.002, 0.003}, ClipLines{}};
  s.patch.degree_x = patch_degree(2);
  s.patch.degree_y = patch_degree(1);
  s.patch.knots_x = build_knots(2, s.patch.degree_x);
  s.patch.knots_y = build_knots(1, s.patch.degree_y);
  assign_control_positions(s.patch, s.grid);
  s.patch.ctrl_z = Eigen::MatrixXd::Random(4, 3);
  m.surfaces.push_back(s);
  return m;
}

class ModelIo : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("pcmm_model_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

TEST(ModelFormat, EmptySceneRoundTrips) {
  const SceneModel empty;
  const std::string bytes = serialize_model(empty);
  EXPECT_EQ(bytes.substr(0, 6), "PCMM1\n");
  EXPECT_EQ(deserialize_model(bytes), empty);
}

TEST(ModelFormat, AllPrimitiveTypesRoundTripBitExact) {
  const SceneModel m = sample_model();
  const std::string bytes = serialize_model(m);
  const SceneModel back = deserialize_model(bytes);
  EXPECT_EQ(back, m);
  EXPECT_EQ(serialize_model(back), bytes);
  // Field-level checks on the values operator== could conflate.
  EXPECT_TRUE(std::signbit(back.gaussians[0].mean.x()));
  EXPECT_EQ(back.gaussians[0].covariance(2, 2), 5e-324);
  EXPECT_EQ(std::memcmp(back.surfaces[0].patch.ctrl_z.data(), m.surfaces[0].patch.ctrl_z.data(),
                        sizeof(double) * 12),
            0);
}

TEST(ModelFormat, PipelineModelRoundTrips) {
  const PointMatrix cloud = testing::mixed_scene();
  const SceneModel m = run_pipeline(cloud, PipelineConfig{}).model;
  ASSERT_FALSE(m.surfaces.empty());
  const std::string bytes = serialize_model(m);
  EXPECT_EQ(deserialize_model(bytes), m);
  EXPECT_EQ(serialize_model(deserialize_model(bytes)), bytes);
}

TEST(ModelFormat, EveryTruncationIsAParseError) {
  const std::string bytes = serialize_model(sample_model());
  for (std::size_t n = 0; n < bytes.size(); ++n) {
    try {
      deserialize_model(bytes.substr(0, n));
      FAIL() << "prefix of " << n << " bytes parsed";
    } catch (const ParseError& e) {
      EXPECT_LE(e.offset(), n);
    }
  }
}

TEST(ModelFormat, TrailingBytesAreRejected) {
  EXPECT_THROW(deserialize_model(serialize_model(SceneModel{}) + "x"), ParseError);
}

TEST(ModelFormat, BadMagicReportsOffsetZero) {
  std::string bytes = serialize_model(SceneModel{});
  bytes[0] = 'X';
  try {
    deserialize_model(bytes);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }
}

TEST(ModelFormat, VersionMismatchIsExplicit) {
  std::string bytes = serialize_model(SceneModel{});
  const auto at = bytes.find("format-version 1");
  ASSERT_NE(at, std::string::npos);
  bytes.replace(at, 16, "format-version 2");
  try {
    deserialize_model(bytes);
    FAIL();
  } catch (const ParseError&) {
    FAIL() << "version mismatch reported as a parse error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInput);
    EXPECT_NE(std::string(e.what()).find("version 2"), std::string::npos);
  }
}

TEST(ModelFormat, CorruptSectionTagIsAParseError) {
  std::string bytes = serialize_model(sample_model());
  const auto at = bytes.find("PLAN");
  bytes[at] = 'Q';
  try {
    deserialize_model(bytes);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), at);
  }
}

TEST_F(ModelIo, SaveIsAtomicAndLoadable) {
  const fs::path path = dir_ / "m.pcmm";
  std::ofstream(path) << "old contents";
  const SceneModel m = sample_model();
  save_model(m, path);
  EXPECT_FALSE(fs::exists(path.string() + ".tmp"));
  EXPECT_EQ(load_model(path), m);
}

TEST_F(ModelIo, MissingFileIsInputError) {
  try {
    load_model(dir_ / "nope.pcmm");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInput);
  }
}

}  // namespace
}  // namespace pcmm

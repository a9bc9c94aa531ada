#include "gazekit/error.hpp"
#include "gazekit/recording.hpp"
#include "gazekit/synth.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <sstream>

namespace gk = gazekit;
using gk::testing::TempDir;
using gk::testing::write_file;

namespace {

const char* kManifest =
    "eye_width=192\neye_height=192\nscene_width=1088\nscene_height=1080\neye_fps=200\nscene_fps=30\n";

void write_minimal(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / gk::kManifestFile, kManifest);
  const std::string header = std::string(gk::kLandmarkHeader) + "\n";
  write_file(dir / gk::kLeftEyeFile, header + "0,1000,pupil,0.9,1,10;10;20;10;15;20\n");
  write_file(dir / gk::kRightEyeFile, header + "0,1000,pupil,0.9,1,10;10;20;10;15;20\n");
  write_file(dir / gk::kSceneFile, header + "0,2000,marker,1,1,0;0;10;0;10;10;0;10\n");
}

gk::ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const gk::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return gk::ErrorCode::IoFailure;
}

}  // namespace

TEST(Recording, MinimalRecordingHasOneFramePerStream) {
  TempDir tmp;
  write_minimal(tmp / "rec");
  const auto rec = gk::load_recording(tmp.path(), "rec");
  EXPECT_EQ(rec.left.size(), 1u);
  EXPECT_EQ(rec.right.size(), 1u);
  EXPECT_EQ(rec.scene.size(), 1u);
  EXPECT_TRUE(rec.warnings.empty());
  EXPECT_EQ(rec.manifest.scene_resolution.width, 1088);
  ASSERT_NE(rec.scene.frames[0].find_valid(gk::LandmarkKind::Marker), nullptr);
  EXPECT_EQ(rec.scene.frames[0].find_valid(gk::LandmarkKind::Marker)->points.size(), 4u);
}

TEST(Recording, ValidRowWithoutPointsIsDemoted) {
  std::istringstream in(std::string(gk::kLandmarkHeader) + "\n0,5,pupil,0.8,1,\n1,10,pupil,0.8,1,1;2;3;4;5;7\n");
  std::vector<gk::LoadWarning> warnings;
  const auto stream = gk::read_landmark_stream(in, gk::Source::LeftEye, {192, 192}, warnings);
  ASSERT_EQ(stream.size(), 2u);
  ASSERT_EQ(stream.frames[0].detections.size(), 1u);
  EXPECT_FALSE(stream.frames[0].detections[0].valid);
  EXPECT_TRUE(stream.frames[1].detections[0].valid);
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(Recording, MalformedRowsAreCollectedNotFatal) {
  std::istringstream in(std::string(gk::kLandmarkHeader) +
                        "\n0,5,pupil,0.8,1,1;2;3\n1,10,bogus,0.8,1,1;2\n2,15,pupil,0.8,1,500;2\nxx,20,pupil\n");
  std::vector<gk::LoadWarning> warnings;
  const auto stream = gk::read_landmark_stream(in, gk::Source::LeftEye, {192, 192}, warnings);
  EXPECT_EQ(stream.size(), 3u);
  for (const auto& f : stream.frames) {
    for (const auto& d : f.detections) EXPECT_FALSE(d.valid);
  }
  EXPECT_EQ(warnings.size(), 4u);
}

TEST(Recording, NonMonotoneTimestampIsFatal) {
  std::istringstream in(std::string(gk::kLandmarkHeader) + "\n0,10,pupil,1,1,1;1\n1,10,pupil,1,1,1;1\n");
  std::vector<gk::LoadWarning> warnings;
  EXPECT_EQ(code_of([&] { gk::read_landmark_stream(in, gk::Source::LeftEye, {192, 192}, warnings); }),
            gk::ErrorCode::NonMonotoneTimestamp);
}

TEST(Recording, MissingManifest) {
  TempDir tmp;
  write_minimal(tmp / "rec");
  std::filesystem::remove(tmp / "rec" / gk::kManifestFile);
  EXPECT_EQ(code_of([&] { gk::load_recording(tmp.path(), "rec"); }), gk::ErrorCode::MissingManifest);
}

TEST(Recording, ManifestRoundTrip) {
  TempDir tmp;
  gk::RecordingManifest m;
  m.scene_resolution = {640, 480};
  m.eye_fps = 120.0;
  m.scene_fps = 25.0;
  m.calibration_range = std::make_pair<std::int64_t, std::int64_t>(3, 40);
  gk::write_manifest(tmp / "m.txt", m);
  const auto back = gk::read_manifest(tmp / "m.txt");
  EXPECT_EQ(back.scene_resolution.width, 640);
  EXPECT_EQ(back.scene_resolution.height, 480);
  EXPECT_EQ(back.eye_fps, 120.0);
  EXPECT_EQ(back.scene_fps, 25.0);
  ASSERT_TRUE(back.calibration_range);
  EXPECT_EQ(back.calibration_range->first, 3);
  EXPECT_EQ(back.calibration_range->second, 40);
}

TEST(Recording, TenSecondSyntheticStreamLengths) {
  TempDir tmp;
  const auto synth = gk::generate(gk::default_scene_script());
  gk::write_synthetic_recording(tmp / "rec", synth);
  const auto rec = gk::load_recording(tmp.path(), "rec");
  EXPECT_EQ(rec.left.size(), 2000u);
  EXPECT_EQ(rec.right.size(), 2000u);
  EXPECT_EQ(rec.scene.size(), 300u);
  EXPECT_TRUE(rec.warnings.empty());
}

TEST(Recording, LoadingPreservesFileOrderAndFrameIds) {
  TempDir tmp;
  const auto synth = gk::generate(gk::default_scene_script());
  gk::write_synthetic_recording(tmp / "rec", synth);
  const auto rec = gk::load_recording(tmp.path(), "rec");
  ASSERT_EQ(rec.left.size(), synth.recording.left.size());
  for (std::size_t i = 0; i < rec.left.size(); ++i) {
    EXPECT_EQ(rec.left.frames[i].frame_id, static_cast<std::int64_t>(i));
    EXPECT_EQ(rec.left.frames[i].timestamp_ns, synth.recording.left.frames[i].timestamp_ns);
  }
}

#include "gazekit/error.hpp"
#include "gazekit/features.hpp"
#include "gazekit/synth.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

namespace gk = gazekit;
using gk::Point2;

namespace {

gk::SceneScript one_second_fixation() {
  gk::SceneScript s;
  s.duration_s = 1.0;
  s.start_yaw_deg = 10.0;
  s.start_pitch_deg = -5.0;
  s.regimes = {{0.0, 1.0, gk::RegimeType::Fixation, std::nullopt, std::nullopt}};
  return s;
}

double angle_diff(double a, double b) {
  double d = std::fmod(std::abs(a - b), std::numbers::pi);
  return std::min(d, std::numbers::pi - d);
}

gk::ErrorCode parse_error(const std::string& text) {
  try {
    gk::parse_scene_script(text);
  } catch (const gk::Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "accepted: " << text;
  return gk::ErrorCode::IoFailure;
}

}  // namespace

TEST(Synth, FixationKeepsPupilCentreFixed) {
  const auto synth = gk::generate(one_second_fixation());
  ASSERT_EQ(synth.recording.left.size(), 200u);
  const auto first = gk::frame_geometry(synth.recording.left.frames[0]);
  ASSERT_TRUE(first.pupil);
  for (const auto& frame : synth.recording.left.frames) {
    const auto f = gk::frame_geometry(frame);
    ASSERT_TRUE(f.pupil);
    EXPECT_EQ(f.pupil->center, first.pupil->center);
  }
}

TEST(Synth, BlinkMidpointIsClosed) {
  const auto script = gk::default_scene_script();
  const auto synth = gk::generate(script);
  const auto it = std::find_if(script.regimes.begin(), script.regimes.end(),
                               [](const gk::Regime& r) { return r.type == gk::RegimeType::Blink; });
  ASSERT_NE(it, script.regimes.end());
  const auto mid = static_cast<std::size_t>(std::llround(0.5 * (it->start_s + it->end_s) * script.eye_fps));
  EXPECT_EQ(synth.truth.eye[mid].left_opening_px, 0.0);
  EXPECT_EQ(synth.truth.eye[mid].left_label, gk::MovementLabel::Blink);
  const auto f = gk::frame_geometry(synth.recording.left.frames[mid]);
  ASSERT_TRUE(f.opening_px);
  EXPECT_NEAR(*f.opening_px, 0.0, 1e-9);
  EXPECT_FALSE(f.pupil);
  const auto open = gk::frame_geometry(synth.recording.left.frames[mid - 40]);
  EXPECT_GT(*open.opening_px, 40.0);
}

TEST(Synth, FrameCounts) {
  const auto synth = gk::generate(gk::default_scene_script());
  EXPECT_EQ(synth.recording.left.size(), 2000u);
  EXPECT_EQ(synth.recording.right.size(), 2000u);
  EXPECT_EQ(synth.recording.scene.size(), 300u);
  EXPECT_EQ(synth.truth.eye.size(), 2000u);
  EXPECT_EQ(synth.truth.scene.size(), 300u);
  EXPECT_EQ(synth.recording.manifest.scene_resolution.width, 1088);
}

TEST(Synth, BitReproducible) {
  auto script = gk::default_scene_script();
  script.noise_px = 0.5;
  script.dropout = 0.02;
  gk::testing::TempDir tmp;
  gk::write_synthetic_recording(tmp / "a", gk::generate(script));
  gk::write_synthetic_recording(tmp / "b", gk::generate(script));
  for (const char* name : {gk::kLeftEyeFile, gk::kRightEyeFile, gk::kSceneFile, gk::kManifestFile,
                           gk::kTruthEyeFile, gk::kTruthSceneFile, gk::kTruthEyeballFile, gk::kDepthSamplesFile}) {
    EXPECT_EQ(gk::testing::read_file(tmp / "a" / name), gk::testing::read_file(tmp / "b" / name)) << name;
  }
  script.seed = 2;
  gk::write_synthetic_recording(tmp / "c", gk::generate(script));
  EXPECT_NE(gk::testing::read_file(tmp / "a" / gk::kLeftEyeFile), gk::testing::read_file(tmp / "c" / gk::kLeftEyeFile));
}

TEST(Synth, RefittedEllipsesMatchGenerator) {
  const auto script = gk::default_scene_script();
  const auto synth = gk::generate(script);
  std::size_t checked = 0;
  for (std::size_t k = 0; k < synth.recording.left.size(); k += 7) {
    const auto* det = synth.recording.left.frames[k].find_valid(gk::LandmarkKind::Pupil);
    if (!det) continue;
    const auto& row = synth.truth.eye[k];
    const double gx = std::sin(row.yaw_rad) * std::cos(row.pitch_rad), gy = std::sin(row.pitch_rad);
    const auto truth = gk::projected_disc(script.left, script.pupil_radius, gx, gy);
    const auto fit = gk::fit_ellipse(det->points);
    EXPECT_LT((fit.center - truth.center).norm(), 1e-6);
    EXPECT_NEAR(fit.semi_major, truth.semi_major, 1e-6);
    EXPECT_NEAR(fit.semi_minor, truth.semi_minor, 1e-6);
    if (truth.semi_major - truth.semi_minor > 1e-3) EXPECT_LT(angle_diff(fit.angle, truth.angle), 1e-6);
    ++checked;
  }
  EXPECT_GT(checked, 250u);
}

TEST(Synth, MarkerAreasFollowPowerLaw) {
  const auto script = gk::default_scene_script();
  const auto synth = gk::generate(script);
  for (std::size_t j = 0; j < synth.truth.scene.size(); ++j) {
    const auto& row = synth.truth.scene[j];
    EXPECT_LT(std::abs(gk::depth_powerlaw(script.depth_model, row.area_px2) - row.depth_cm), 1e-9);
    const auto* det = synth.recording.scene.frames[j].find_valid(gk::LandmarkKind::Marker);
    ASSERT_NE(det, nullptr);
    const auto obs = gk::marker_from_landmarks(det->points, 0, 0);
    EXPECT_NEAR(obs.area, row.area_px2, 1e-6 * row.area_px2);
    EXPECT_LT((obs.center - row.marker).norm(), 1e-9);
  }
  for (const auto& s : synth.depth_samples) {
    EXPECT_LT(std::abs(gk::depth_powerlaw(script.depth_model, s.area) - s.depth), 1e-9);
  }
}

TEST(Synth, TrueGazeMapIsQuadratic) {
  const auto script = gk::default_scene_script();
  const Point2 c = gk::true_gaze_point(script, 0.0, 0.0);
  EXPECT_EQ(c, Point2(544.0, 540.0));
  auto hard = script;
  hard.hard_mode = true;
  EXPECT_NE(gk::true_gaze_point(hard, 0.3, 0.1), gk::true_gaze_point(script, 0.3, 0.1));
}

TEST(Synth, ScriptRoundTrip) {
  auto script = gk::default_scene_script();
  script.noise_px = 0.25;
  script.seed = 77;
  const auto text = gk::format_scene_script(script);
  const auto back = gk::parse_scene_script(text);
  EXPECT_EQ(gk::format_scene_script(back), text);
  EXPECT_EQ(back.regimes.size(), script.regimes.size());
  EXPECT_EQ(back.seed, 77u);
}

TEST(Synth, InvalidScripts) {
  const std::string base = "duration=1\n";
  EXPECT_EQ(parse_error(base + "0,0.5,fixation\n0.6,1,fixation\n"), gk::ErrorCode::InvalidScript);
  EXPECT_EQ(parse_error(base + "0,0.6,fixation\n0.5,1,fixation\n"), gk::ErrorCode::InvalidScript);
  EXPECT_EQ(parse_error(base + "bogus_key=3\n0,1,fixation\n"), gk::ErrorCode::InvalidScript);
  EXPECT_EQ(parse_error(base + "eye_fps=-5\n0,1,fixation\n"), gk::ErrorCode::InvalidScript);
  EXPECT_EQ(parse_error(base + "0,1,wobble\n"), gk::ErrorCode::InvalidScript);
  EXPECT_EQ(parse_error(base + "0,1,saccade\n"), gk::ErrorCode::InvalidScript);
  EXPECT_EQ(parse_error(base), gk::ErrorCode::InvalidScript);
  EXPECT_NO_THROW(gk::parse_scene_script(base + "0,0.5,fixation\n0.5,1,saccade,10,5\n"));
}

TEST(Synth, GroundTruthRoundTrip) {
  gk::testing::TempDir tmp;
  const auto synth = gk::generate(gk::default_scene_script());
  gk::write_synthetic_recording(tmp.path(), synth);
  const auto back = gk::read_ground_truth(tmp.path());
  ASSERT_EQ(back.eye.size(), synth.truth.eye.size());
  ASSERT_EQ(back.scene.size(), synth.truth.scene.size());
  EXPECT_EQ(back.eye[123].left_label, synth.truth.eye[123].left_label);
  EXPECT_EQ(back.eye[123].gaze, synth.truth.eye[123].gaze);
  EXPECT_EQ(back.left_eyeball.center, synth.truth.left_eyeball.center);
  EXPECT_EQ(back.right_eyeball.radius, synth.truth.right_eyeball.radius);
  EXPECT_EQ(back.calibration_range, synth.truth.calibration_range);
}

TEST(Synth, EyeballTrainingSet) {
  const auto set = gk::make_eyeball_training_set(5, {192, 192}, 3);
  ASSERT_EQ(set.size(), 5u);
  for (const auto& p : set) {
    EXPECT_EQ(p.ellipses.size(), 100u);
    EXPECT_GT(p.truth.radius, 0.0);
  }
}

#include "gazekit/error.hpp"
#include "gazekit/score.hpp"
#include "gazekit/synth.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace gk = gazekit;
using gk::Point2;

namespace {

/// Outputs equal to the ground truth of a generated recording.
gk::PipelineOutputs perfect_outputs(const gk::SyntheticRecording& synth) {
  gk::PipelineOutputs out;
  const auto& truth = synth.truth;
  for (const auto& row : truth.eye) {
    gk::GazeRecord r;
    std::size_t best = 0;
    for (std::size_t j = 0; j < truth.scene.size(); ++j) {
      if (std::llabs(truth.scene[j].timestamp_ns - row.timestamp_ns) <
          std::llabs(truth.scene[best].timestamp_ns - row.timestamp_ns)) {
        best = j;
      }
    }
    r.scene_frame_id = truth.scene[best].scene_frame_id;
    r.left_frame_id = row.frame_id;
    r.left_timestamp_ns = row.timestamp_ns;
    r.right_frame_id = row.frame_id;
    r.right_timestamp_ns = row.timestamp_ns;
    for (auto& e : r.estimates) e = row.gaze;
    out.gaze.push_back(r);
  }
  for (const auto eye : {gk::Eye::Left, gk::Eye::Right}) {
    for (const auto& row : truth.eye) {
      out.movements.push_back({eye, row.timestamp_ns, eye == gk::Eye::Left ? row.left_label : row.right_label});
    }
  }
  for (const auto& row : truth.scene) {
    out.depth.push_back({row.scene_frame_id, row.area_px2, row.depth_cm, row.depth_cm});
  }
  for (const auto eye : {gk::Eye::Left, gk::Eye::Right}) {
    const auto& ball = eye == gk::Eye::Left ? truth.left_eyeball : truth.right_eyeball;
    auto& feats = eye == gk::Eye::Left ? out.left_features : out.right_features;
    gk::EyeFeatures f;
    f.eyeball = ball;
    feats.push_back(f);
  }
  return out;
}

}  // namespace

TEST(Score, PerfectOutputsScoreZero) {
  auto script = gk::default_scene_script();
  script.dropout = 0.01;
  const auto synth = gk::generate(script);
  const auto report = gk::score_pipeline(perfect_outputs(synth), synth.truth);
  for (const auto& g : report.gaze) {
    EXPECT_EQ(g.rows_all, 2000u);
    EXPECT_EQ(g.mean_all, 0.0);
    EXPECT_GT(g.rows_held_out, 0u);
    EXPECT_EQ(g.mean_held_out, 0.0);
  }
  EXPECT_TRUE(report.left_movements.diagonal());
  EXPECT_TRUE(report.right_movements.diagonal());
  EXPECT_GT(report.left_movements.total(gk::MovementLabel::Error), 0u);
  EXPECT_EQ(*report.depth_powerlaw_mae_cm, 0.0);
  EXPECT_EQ(*report.depth_knn_mae_cm, 0.0);
  EXPECT_EQ(report.left_eyeball->center_error_px, 0.0);
  EXPECT_EQ(report.right_eyeball->radius_relative_error, 0.0);
  EXPECT_FALSE(report.to_text().empty());
}

TEST(Score, ShiftedEstimatesScoreExactlyThree) {
  const auto synth = gk::generate(gk::default_scene_script());
  auto out = perfect_outputs(synth);
  for (auto& r : out.gaze) {
    for (auto& e : r.estimates) *e += Point2(3.0, 0.0);
  }
  const auto report = gk::score_pipeline(out, synth.truth);
  for (const auto& g : report.gaze) EXPECT_NEAR(g.mean_all, 3.0, 1e-9);
}

TEST(Score, MisalignedOutputs) {
  const auto synth = gk::generate(gk::default_scene_script());
  const auto good = perfect_outputs(synth);
  const auto expect_misaligned = [&](const gk::PipelineOutputs& out) {
    try {
      gk::score_pipeline(out, synth.truth);
      FAIL();
    } catch (const gk::Error& e) {
      EXPECT_EQ(e.code(), gk::ErrorCode::Misaligned);
    }
  };
  auto short_gaze = good;
  short_gaze.gaze.pop_back();
  expect_misaligned(short_gaze);
  auto bad_id = good;
  bad_id.gaze[10].left_frame_id = 11;
  expect_misaligned(bad_id);
  auto short_moves = good;
  short_moves.movements.pop_back();
  expect_misaligned(short_moves);
  auto short_depth = good;
  short_depth.depth.pop_back();
  expect_misaligned(short_depth);
}

TEST(ConfusionMatrix, Accuracy) {
  gk::ConfusionMatrix cm;
  EXPECT_TRUE(std::isnan(cm.class_accuracy(gk::MovementLabel::Saccade)));
  cm.add(gk::MovementLabel::Saccade, gk::MovementLabel::Saccade);
  cm.add(gk::MovementLabel::Saccade, gk::MovementLabel::Fixation);
  EXPECT_EQ(cm.total(gk::MovementLabel::Saccade), 2u);
  EXPECT_EQ(cm.class_accuracy(gk::MovementLabel::Saccade), 0.5);
  EXPECT_FALSE(cm.diagonal());
}

#include "gazekit/csv_io.hpp"
#include "gazekit/error.hpp"
#include "gazekit/model_io.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

namespace gk = gazekit;
using gk::testing::read_file;
using gk::testing::TempDir;

namespace {

double r9(double v) { return std::stod(gk::format_csv(v)); }

std::size_t line_count(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

gk::GazeEstimates full_estimates(double base) {
  gk::GazeEstimates est;
  for (std::size_t i = 0; i < est.size(); ++i) est[i] = gk::Point2(base + 1.5 * i, base - 0.25 * i);
  return est;
}

}  // namespace

TEST(CsvIo, EmptyRecordListsWriteHeaderOnly) {
  TempDir tmp;
  EXPECT_EQ(gk::write_gaze_csv(tmp / "g.csv", {}), 0u);
  EXPECT_EQ(gk::write_features_csv(tmp / "f.csv", {}), 0u);
  EXPECT_EQ(gk::write_movements_csv(tmp / "m.csv", {}), 0u);
  EXPECT_EQ(gk::write_depth_csv(tmp / "d.csv", {}), 0u);
  EXPECT_EQ(read_file(tmp / "g.csv"), gk::gaze_csv_header() + "\n");
  EXPECT_EQ(read_file(tmp / "f.csv"), gk::features_csv_header() + "\n");
  EXPECT_EQ(read_file(tmp / "m.csv"), std::string(gk::kMovementsHeader) + "\n");
  EXPECT_EQ(read_file(tmp / "d.csv"), std::string(gk::kDepthHeader) + "\n");
  EXPECT_TRUE(gk::read_gaze_csv(tmp / "g.csv").empty());
}

TEST(CsvIo, GazeHeaderNamesAllEstimators) {
  const auto cols = gk::split_fields(gk::gaze_csv_header());
  ASSERT_EQ(cols.size(), 5u + 48u);
  EXPECT_EQ(cols[5], "LM_PC_Left_x");
  EXPECT_EQ(cols[6], "LM_PC_Left_y");
  EXPECT_EQ(cols.back(), "NN_IV_Binocular_y");
}

TEST(CsvIo, FullGazeRecordPopulatesEveryPair) {
  TempDir tmp;
  gk::GazeRecord r;
  r.scene_frame_id = 7;
  r.left_frame_id = 44;
  r.left_timestamp_ns = 220000000;
  r.right_frame_id = 44;
  r.right_timestamp_ns = 220000001;
  r.estimates = full_estimates(100.0);
  const std::vector<gk::GazeRecord> rows{r};
  EXPECT_EQ(gk::write_gaze_csv(tmp / "g.csv", rows), 1u);
  const auto text = read_file(tmp / "g.csv");
  EXPECT_EQ(line_count(text), 2u);
  const auto data = gk::split_fields(text.substr(text.find('\n') + 1, text.size() - text.find('\n') - 2));
  ASSERT_EQ(data.size(), 53u);
  for (const auto& cell : data) EXPECT_FALSE(cell.empty());
}

TEST(CsvIo, InvalidRightEyeLeavesRightColumnsEmpty) {
  TempDir tmp;
  gk::GazeRecord r;
  r.scene_frame_id = 3;
  r.left_frame_id = 20;
  r.left_timestamp_ns = 100000000;
  for (std::size_t i = 0; i < gk::EstimatorKey::kCount; ++i) {
    if (gk::EstimatorKey::from_index(i).combo == gk::Combo::Left) r.estimates[i] = gk::Point2(10.0 + i, 20.0 - i);
  }
  const std::vector<gk::GazeRecord> rows{r};
  gk::write_gaze_csv(tmp / "g.csv", rows);
  const auto back = gk::read_gaze_csv(tmp / "g.csv");
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].left_frame_id, r.left_frame_id);
  EXPECT_EQ(back[0].left_timestamp_ns, r.left_timestamp_ns);
  EXPECT_FALSE(back[0].right_frame_id);
  EXPECT_FALSE(back[0].right_timestamp_ns);
  for (std::size_t i = 0; i < gk::EstimatorKey::kCount; ++i) {
    const auto key = gk::EstimatorKey::from_index(i);
    if (key.combo == gk::Combo::Left) {
      ASSERT_TRUE(back[0].estimates[i]);
      EXPECT_EQ(back[0].estimates[i]->x(), r.estimates[i]->x());
    } else {
      EXPECT_FALSE(back[0].estimates[i]) << key.name();
    }
  }
}

TEST(CsvIo, GazeRoundTripAtNineDigits) {
  TempDir tmp;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2000.0, 2000.0);
  std::bernoulli_distribution present(0.7);
  std::vector<gk::GazeRecord> rows;
  for (int i = 0; i < 50; ++i) {
    gk::GazeRecord r;
    r.scene_frame_id = i / 7;
    if (present(rng)) {
      r.left_frame_id = i;
      r.left_timestamp_ns = 5000000LL * i;
    }
    if (present(rng)) {
      r.right_frame_id = i;
      r.right_timestamp_ns = 5000000LL * i + 3;
    }
    for (auto& e : r.estimates) {
      if (present(rng)) e = gk::Point2(u(rng) / 3.0, u(rng) / 7.0);
    }
    rows.push_back(r);
  }
  EXPECT_EQ(gk::write_gaze_csv(tmp / "g.csv", rows), rows.size());
  const auto back = gk::read_gaze_csv(tmp / "g.csv");
  ASSERT_EQ(back.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].scene_frame_id, rows[i].scene_frame_id);
    EXPECT_EQ(back[i].left_frame_id, rows[i].left_frame_id);
    EXPECT_EQ(back[i].left_timestamp_ns, rows[i].left_timestamp_ns);
    EXPECT_EQ(back[i].right_frame_id, rows[i].right_frame_id);
    EXPECT_EQ(back[i].right_timestamp_ns, rows[i].right_timestamp_ns);
    for (std::size_t k = 0; k < gk::EstimatorKey::kCount; ++k) {
      ASSERT_EQ(back[i].estimates[k].has_value(), rows[i].estimates[k].has_value());
      if (!rows[i].estimates[k]) continue;
      EXPECT_EQ(back[i].estimates[k]->x(), r9(rows[i].estimates[k]->x()));
      EXPECT_EQ(back[i].estimates[k]->y(), r9(rows[i].estimates[k]->y()));
    }
  }
}

TEST(CsvIo, FeaturesRoundTrip) {
  TempDir tmp;
  gk::EyeFeatures a;
  a.frame_id = 4;
  a.timestamp_ns = 20000000;
  a.pupil = gk::Ellipse{{95.123456789, 97.5}, 8.0, 6.25, 0.3};
  a.iris = gk::Ellipse{{95.0, 97.0}, 20.0, 15.0, 1.1};
  a.opening_px = 41.0 / 3.0;
  a.eyeball = gk::EyeballModel{{96.0, 96.0}, 60.0};
  a.pupil_vector = Eigen::Vector3d(0.6, 0.0, 0.8);
  a.iris_vector = Eigen::Vector3d(0.0, 0.6, 0.8);
  a.refresh_validity();
  gk::EyeFeatures b;
  b.frame_id = 5;
  b.timestamp_ns = 25000000;
  b.opening_px = 0.0;
  b.refresh_validity();
  const std::vector<gk::EyeFeatures> rows{a, b};
  EXPECT_EQ(gk::write_features_csv(tmp / "f.csv", rows), 2u);
  const auto back = gk::read_features_csv(tmp / "f.csv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].frame_id, 4);
  ASSERT_TRUE(back[0].pupil);
  EXPECT_EQ(back[0].pupil->center.x(), r9(95.123456789));
  EXPECT_EQ(back[0].pupil->semi_minor, 6.25);
  ASSERT_TRUE(back[0].iris);
  EXPECT_EQ(back[0].iris->angle, 1.1);
  EXPECT_EQ(*back[0].opening_px, r9(41.0 / 3.0));
  ASSERT_TRUE(back[0].eyeball);
  EXPECT_EQ(back[0].eyeball->radius, 60.0);
  EXPECT_EQ(*back[0].pupil_vector, Eigen::Vector3d(0.6, 0.0, 0.8));
  EXPECT_EQ(back[0].validity, a.validity);
  EXPECT_FALSE(back[1].pupil);
  EXPECT_FALSE(back[1].iris);
  EXPECT_FALSE(back[1].eyeball);
  EXPECT_FALSE(back[1].pupil_vector);
  EXPECT_EQ(*back[1].opening_px, 0.0);
  EXPECT_EQ(back[1].validity, b.validity);
}

TEST(CsvIo, MovementsAndDepthRoundTrip) {
  TempDir tmp;
  const std::vector<gk::MovementRecord> moves{{gk::Eye::Left, 0, gk::MovementLabel::Fixation},
                                              {gk::Eye::Left, 5000000, gk::MovementLabel::Error},
                                              {gk::Eye::Right, 0, gk::MovementLabel::SmoothPursuit},
                                              {gk::Eye::Right, 5000000, gk::MovementLabel::Blink}};
  EXPECT_EQ(gk::write_movements_csv(tmp / "m.csv", moves), 4u);
  const auto mback = gk::read_movements_csv(tmp / "m.csv");
  ASSERT_EQ(mback.size(), 4u);
  for (std::size_t i = 0; i < moves.size(); ++i) {
    EXPECT_EQ(mback[i].eye, moves[i].eye);
    EXPECT_EQ(mback[i].timestamp_ns, moves[i].timestamp_ns);
    EXPECT_EQ(mback[i].label, moves[i].label);
  }
  const std::vector<gk::DepthRecord> depth{{0, 1234.5678901, 180.25, 181.0}, {1, std::nullopt, std::nullopt, std::nullopt}};
  EXPECT_EQ(gk::write_depth_csv(tmp / "d.csv", depth), 2u);
  const auto dback = gk::read_depth_csv(tmp / "d.csv");
  ASSERT_EQ(dback.size(), 2u);
  EXPECT_EQ(*dback[0].marker_area_px2, r9(1234.5678901));
  EXPECT_EQ(*dback[0].depth_cm_powerlaw, 180.25);
  EXPECT_FALSE(dback[1].marker_area_px2);
  EXPECT_FALSE(dback[1].depth_cm_knn);
}

TEST(CsvIo, ReadersRejectBadRows) {
  TempDir tmp;
  gk::testing::write_file(tmp / "d.csv", std::string(gk::kDepthHeader) + "\n1,2,3\n");
  try {
    gk::read_depth_csv(tmp / "d.csv");
    FAIL();
  } catch (const gk::Error& e) {
    EXPECT_EQ(e.code(), gk::ErrorCode::MalformedRow);
  }
  try {
    gk::read_depth_csv(tmp / "missing.csv");
    FAIL();
  } catch (const gk::Error& e) {
    EXPECT_EQ(e.code(), gk::ErrorCode::IoFailure);
  }
}

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "tendonsense/error.hpp"
#include "tendonsense/geometry.hpp"

using namespace tendonsense;

namespace {

Mat3 rot_z(double a) {
  Mat3 m;
  m << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return m;
}

Mat3 rot_y(double a) {
  Mat3 m;
  m << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
  return m;
}

std::vector<JointPose> random_poses(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> az(-180.0, 180.0), el(0.0, 180.0);
  std::vector<JointPose> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({az(rng), el(rng)});
  return out;
}

}  // namespace

TEST(ArmAxis, NeutralHangsDown) {
  EXPECT_TRUE(arm_axis({0, 0}).isApprox(Vec3(0, 0, -1), 1e-15));
}

TEST(ArmAxis, AbductionAndFlexionReachHorizontal) {
  EXPECT_NEAR((arm_axis({0, 90}) - Vec3(1, 0, 0)).norm(), 0.0, 1e-15);
  EXPECT_NEAR((arm_axis({90, 90}) - Vec3(0, 1, 0)).norm(), 0.0, 1e-15);
}

TEST(ArmAxis, UnitNorm) {
  for (const auto& p : random_poses(500, 1)) EXPECT_NEAR(arm_axis(p).norm(), 1.0, 1e-12);
}

TEST(HumerusRotation, IdentityAtZeroElevation) {
  for (double az : {-170.0, -40.0, 0.0, 33.3, 90.0, 179.0})
    EXPECT_TRUE(humerus_rotation({az, 0}).isApprox(Mat3::Identity(), 1e-15)) << az;
}

TEST(HumerusRotation, CarriesNeutralToArmAxis) {
  EXPECT_NEAR((humerus_rotation({0, 90}) * Vec3(0, 0, -1) - Vec3(1, 0, 0)).norm(), 0.0, 1e-12);
  EXPECT_NEAR((humerus_rotation({45, 30}) * Vec3(0, 0, -1) - arm_axis({45, 30})).norm(), 0.0, 1e-12);
  for (const auto& p : random_poses(500, 2))
    EXPECT_NEAR((humerus_rotation(p) * Vec3(0, 0, -1) - arm_axis(p)).norm(), 0.0, 1e-12);
}

TEST(HumerusRotation, MatchesExplicitSwingComposition) {
  for (const auto& p : random_poses(200, 3)) {
    const double th = deg2rad(p.azimuth_deg), ph = deg2rad(p.elevation_deg);
    const Mat3 expected = rot_z(th) * rot_y(-ph) * rot_z(-th);
    EXPECT_LT((humerus_rotation(p) - expected).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(HumerusRotation, IsProperOrthogonal) {
  for (const auto& p : random_poses(500, 4)) {
    const Mat3 r = humerus_rotation(p);
    EXPECT_NEAR(r.determinant(), 1.0, 1e-9);
    EXPECT_LT((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(HumerusRotation, ConvergesToIdentityUniformlyInAzimuth) {
  double prev = 1e9;
  for (double el : {1.0, 1e-1, 1e-2, 1e-3, 1e-4}) {
    double worst = 0.0;
    for (int k = 0; k < 360; ++k)
      worst = std::max(worst, (humerus_rotation({k - 180.0, el}) - Mat3::Identity()).norm());
    EXPECT_LT(worst, prev);
    EXPECT_LT(worst, 2.0 * deg2rad(el));
    prev = worst;
  }
}

TEST(TransformPoint, TorsoPointsPassThrough) {
  EXPECT_EQ(transform_point(Vec3(10, 0, 0), Frame::Torso, {30, 60}), Vec3(10, 0, 0));
}

TEST(TransformPoint, HumerusPointFollowsArm) {
  EXPECT_NEAR((transform_point(Vec3(0, 0, -100), Frame::Humerus, {0, 90}) - Vec3(100, 0, 0)).norm(), 0.0,
              1e-12);
}

TEST(TransformPoint, MatchesRodriguesRotation) {
  // Rotation by 45 deg about (sin 30, -cos 30, 0), written out by hand.
  const Vec3 p(20, 5, -80);
  const Vec3 k(0.5, -std::sqrt(3.0) / 2.0, 0.0);
  const double a = deg2rad(45.0);
  const Vec3 expected = p * std::cos(a) + k.cross(p) * std::sin(a) + k * k.dot(p) * (1 - std::cos(a));
  EXPECT_NEAR((transform_point(p, Frame::Humerus, {30, 45}) - expected).norm(), 0.0, 1e-12);
}

TEST(TransformPoint, PreservesHumerusDistances) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> c(-300, 300);
  for (const auto& pose : random_poses(200, 6)) {
    const Vec3 a(c(rng), c(rng), c(rng)), b(c(rng), c(rng), c(rng));
    const double d = (transform_point(a, Frame::Humerus, pose) - transform_point(b, Frame::Humerus, pose)).norm();
    EXPECT_NEAR(d, (a - b).norm(), 1e-9);
  }
}

TEST(JointPose, WorkspaceFlag) {
  EXPECT_TRUE((JointPose{-40, 0}).in_workspace());
  EXPECT_TRUE((JointPose{90, 90}).in_workspace());
  EXPECT_FALSE((JointPose{-90, 45}).in_workspace());
  EXPECT_FALSE((JointPose{0, -1}).in_workspace());
}

TEST(ShoulderModel, ValidationRejectsBadGeometry) {
  ShoulderModel m;
  EXPECT_NO_THROW(m.validate());
  m.sphere_radius_mm = 0;
  EXPECT_THROW(m.validate(), ValidationError);
  m = {};
  m.arm_length_mm = 50;
  EXPECT_THROW(m.validate(), ValidationError);
  m = {};
  m.neutral_axis = Vec3(0, 0, -1.001);
  EXPECT_THROW(m.validate(), ValidationError);
  m.neutral_axis = Vec3(1, 0, 0);
  EXPECT_THROW(m.validate(), ValidationError);
}

TEST(Frame, StringRoundTrip) {
  EXPECT_EQ(frame_from_string(to_string(Frame::Torso)), Frame::Torso);
  EXPECT_EQ(frame_from_string(to_string(Frame::Humerus)), Frame::Humerus);
  EXPECT_THROW(frame_from_string("scapula"), ConfigError);
}

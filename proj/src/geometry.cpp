#include "tendonsense/geometry.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "tendonsense/error.hpp"

namespace tendonsense {

double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

bool JointPose::in_workspace() const {
  return azimuth_deg >= kAzimuthMinDeg && azimuth_deg <= kAzimuthMaxDeg &&
         elevation_deg >= kElevationMinDeg && elevation_deg <= kElevationMaxDeg;
}

const char* to_string(Frame frame) {
  return frame == Frame::Torso ? "torso" : "humerus";
}

Frame frame_from_string(const std::string& name) {
  if (name == "torso") return Frame::Torso;
  if (name == "humerus") return Frame::Humerus;
  throw ConfigError("unknown frame '" + name + "' (expected torso or humerus)");
}

void ShoulderModel::validate() const {
  if (!(sphere_radius_mm > 0.0))
    throw ValidationError("sphere_radius_mm must be positive");
  if (!(arm_length_mm > sphere_radius_mm))
    throw ValidationError("arm_length_mm must exceed sphere_radius_mm");
  if (!center.allFinite()) throw ValidationError("center must be finite");
  if (std::abs(neutral_axis.norm() - 1.0) > 1e-12)
    throw ValidationError("neutral_axis must have unit norm");
  // Angles are defined against the hanging arm along -z.
  if ((neutral_axis - Vec3(0.0, 0.0, -1.0)).norm() > 1e-12)
    throw ValidationError("neutral_axis must be (0, 0, -1)");
}

Vec3 arm_axis(const JointPose& pose) {
  const double th = deg2rad(pose.azimuth_deg);
  const double ph = deg2rad(pose.elevation_deg);
  return {std::sin(ph) * std::cos(th), std::sin(ph) * std::sin(th), -std::cos(ph)};
}

Mat3 humerus_rotation(const JointPose& pose) {
  const double th = deg2rad(pose.azimuth_deg);
  const double ph = deg2rad(pose.elevation_deg);
  const Vec3 swing_axis(std::sin(th), -std::cos(th), 0.0);
  return Eigen::AngleAxisd(ph, swing_axis).toRotationMatrix();
}

Vec3 transform_point(const Vec3& point, Frame frame, const JointPose& pose) {
  if (frame == Frame::Torso) return point;
  return humerus_rotation(pose) * point;
}

}  // namespace tendonsense

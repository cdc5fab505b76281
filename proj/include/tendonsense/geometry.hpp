#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace tendonsense {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Workspace bounds of the random-movement protocol row, degrees.
inline constexpr double kAzimuthMinDeg = -40.0;
inline constexpr double kAzimuthMaxDeg = 90.0;
inline constexpr double kElevationMinDeg = 0.0;
inline constexpr double kElevationMaxDeg = 90.0;

double deg2rad(double deg);
double rad2deg(double rad);

/// Shoulder pose in degrees.
///
/// Azimuth rotates about the torso vertical (+z); elevation is measured from
/// the hanging-arm axis (-z) inside the plane selected by the azimuth.
/// Torso frame: +x lateral, +y anterior, +z superior, origin at the
/// glenohumeral center. With this convention (theta=0, phi=90) is full
/// abduction and (theta=90, phi=90) is forward flexion to the horizontal.
struct JointPose {
  double azimuth_deg = 0.0;
  double elevation_deg = 0.0;

  /// True when the pose lies inside the random-movement workspace.
  bool in_workspace() const;

  friend bool operator==(const JointPose&, const JointPose&) = default;
};

enum class Frame { Torso, Humerus };

const char* to_string(Frame frame);
Frame frame_from_string(const std::string& name);

/// The torso and humerus frames share their origin at the glenohumeral
/// center; `center` locates the wrap sphere in that frame.
struct ShoulderModel {
  Vec3 center = Vec3::Zero();
  double sphere_radius_mm = 60.0;
  double arm_length_mm = 300.0;
  Vec3 neutral_axis = Vec3(0.0, 0.0, -1.0);

  /// Throws ValidationError when radii are invalid or the neutral axis is not
  /// the downward unit vector the angle convention is defined against.
  void validate() const;
};

/// Unit arm direction in the torso frame:
/// (sin(phi)cos(theta), sin(phi)sin(theta), -cos(phi)).
Vec3 arm_axis(const JointPose& pose);

/// Swing-only rotation taking the neutral axis to arm_axis(pose).
///
/// Equals Rz(theta) * Ry(-phi) * Rz(-theta), i.e. a rotation by phi about the
/// horizontal axis (sin(theta), -cos(theta), 0) perpendicular to the
/// elevation plane. Identity at phi = 0 for every theta.
Mat3 humerus_rotation(const JointPose& pose);

/// Torso points pass through; humerus points are rotated with the arm.
Vec3 transform_point(const Vec3& point, Frame frame, const JointPose& pose);

}  // namespace tendonsense

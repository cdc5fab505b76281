#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tendonsense/geometry.hpp"

namespace tendonsense {

/// The four sensing tendons, each routed parallel to a muscle group:
/// F (pectoralis major + anterior deltoid), SF (anterior + lateral deltoid),
/// SR (lateral + posterior deltoid), R (posterior deltoid, teres major,
/// latissimus dorsi).
enum class TendonName { F = 0, SF = 1, SR = 2, R = 3 };

inline constexpr std::array<TendonName, 4> kAllTendons = {
    TendonName::F, TendonName::SF, TendonName::SR, TendonName::R};

constexpr std::size_t index(TendonName name) { return static_cast<std::size_t>(name); }
const char* to_string(TendonName name);
/// Throws UnknownTendonError.
TendonName tendon_from_string(std::string_view name);

enum class PathPolicy { Polyline, Spline, SphereWrap };

const char* to_string(PathPolicy policy);
PathPolicy path_policy_from_string(std::string_view name);

struct RoutingElement {
  std::string id;
  Frame frame = Frame::Torso;
  Vec3 local_position_mm = Vec3::Zero();
};

struct TendonPath {
  TendonName name = TendonName::F;
  std::vector<RoutingElement> elements;
  PathPolicy policy = PathPolicy::Spline;

  /// At least two elements, unique ids, humerus elements within the arm.
  void validate(const ShoulderModel& model) const;
};

struct ArcLengthOptions {
  /// Relative tolerance of the adaptive spline quadrature.
  double rel_tol = 1e-8;
  /// Wrap obstacle used by PathPolicy::SphereWrap.
  Vec3 wrap_center = Vec3::Zero();
  double wrap_radius_mm = 60.0;
};

struct TendonLayout {
  ShoulderModel model;
  std::vector<TendonPath> tendons;
  double arc_length_rel_tol = 1e-8;

  /// Exactly F, SF, SR and R, once each; every path valid.
  void validate() const;
  /// Throws UnknownTendonError when absent.
  const TendonPath& path(TendonName name) const;
  ArcLengthOptions arc_options() const;
};

/// Routing elements of `path` expressed in the torso frame at `pose`.
std::vector<Vec3> path_points(const TendonPath& path, const JointPose& pose);

/// Length of the curve through `points` under `policy`.
///
/// Polyline sums chords. Spline integrates a natural cubic spline with
/// chord-length parametrization by adaptive Simpson bisection. SphereWrap
/// replaces every chord that passes closer than the wrap radius to the wrap
/// center by the tangent-arc-tangent geodesic around that sphere; chords with
/// an endpoint inside the sphere are kept straight. Throws InvalidPathError
/// for fewer than two points.
double arc_length(std::span<const Vec3> points, PathPolicy policy,
                  const ArcLengthOptions& options = {});

/// Shortest path length from a to b that stays outside the sphere.
/// Both endpoints must lie on or outside it.
double sphere_wrap_length(const Vec3& a, const Vec3& b, const Vec3& center, double radius);

double tendon_length(const TendonLayout& layout, TendonName name, const JointPose& pose);

}  // namespace tendonsense

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tendonsense/geometry.hpp"

namespace tendonsense {

/// The five movement rows of the motion-capture protocol.
enum class MovementKind { FlexExt, AbAd, FixedAzimuthSweep, FixedElevationSweep, Random };

inline constexpr std::array<MovementKind, 5> kAllMovements = {
    MovementKind::FlexExt, MovementKind::AbAd, MovementKind::FixedAzimuthSweep,
    MovementKind::FixedElevationSweep, MovementKind::Random};

const char* to_string(MovementKind kind);
MovementKind movement_from_string(const std::string& name);

struct Workspace {
  double azimuth_min_deg = kAzimuthMinDeg;
  double azimuth_max_deg = kAzimuthMaxDeg;
  double elevation_min_deg = kElevationMinDeg;
  double elevation_max_deg = kElevationMaxDeg;

  bool contains(const JointPose& pose) const;
};

struct TrajectorySpec {
  MovementKind kind = MovementKind::AbAd;
  int reps = 4;
  double frame_rate_hz = 120.0;
  std::uint64_t seed = 0;
  /// Total trial length. When unset, reps times the per-rep duration of the
  /// protocol row (so default reps reproduce the recorded frame counts).
  std::optional<double> duration_s;
  Workspace workspace;
  /// Raised-cosine velocity blend at every turnaround.
  double blend_time_s = 0.15;
  /// RMS chart speed of the random walk, deg/s.
  double random_speed_deg_s = 60.0;
  /// Low-pass time constant of the random walk noise, s.
  double random_time_constant_s = 0.4;

  /// Defaults for one protocol row: reps and per-rep duration of the recorded
  /// trials (F/E 4 reps over 25.31 s, Ab/Ad 4 over 30.25 s, fixed azimuth
  /// 2 over 48.45 s, fixed elevation 2 over 56.31 s, random 85.94 s).
  static TrajectorySpec protocol_row(MovementKind kind);

  double duration() const;
  std::size_t frame_count() const;
  /// Throws ValidationError for a non-positive rate, reps < 1, or a workspace
  /// that is empty or reaches outside the protocol limits.
  void validate() const;
};

struct TrajectoryFrame {
  double time_s = 0.0;
  JointPose pose;
};

struct Trajectory {
  std::vector<TrajectoryFrame> frames;
  /// Start time of each repetition (structured kinds only).
  std::vector<double> rep_start_times_s;
};

/// Generates a trajectory at frame_rate_hz. Azimuth is carried over from the
/// last commanded value whenever elevation is zero.
Trajectory generate(const TrajectorySpec& spec);

/// Five evenly spaced sweep constants: azimuth over [min, max], elevation over
/// (min, max].
std::vector<double> sweep_azimuths(const Workspace& ws);
std::vector<double> sweep_elevations(const Workspace& ws);

struct NamedTrajectory {
  std::string name;
  Trajectory trajectory;
};

/// All five protocol rows with their recorded repetition counts.
std::vector<NamedTrajectory> protocol_suite(std::uint64_t seed, double frame_rate_hz = 120.0);
std::vector<NamedTrajectory> protocol_suite(const std::vector<TrajectorySpec>& rows);

}  // namespace tendonsense

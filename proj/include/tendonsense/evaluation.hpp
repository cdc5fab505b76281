#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tendonsense/mapping.hpp"
#include "tendonsense/motion.hpp"
#include "tendonsense/sensor.hpp"
#include "tendonsense/tendon.hpp"

namespace tendonsense {

/// Regular azimuth x elevation lattice. Node i of n over [lo, hi] is
/// (lo*(n-1-i) + hi*i)/(n-1), so refining 2n-1 reproduces every node of n
/// bit for bit.
struct Grid {
  double azimuth_min_deg = kAzimuthMinDeg;
  double azimuth_max_deg = kAzimuthMaxDeg;
  double elevation_min_deg = kElevationMinDeg;
  double elevation_max_deg = kElevationMaxDeg;
  std::size_t azimuth_count = 27;
  std::size_t elevation_count = 19;

  static Grid square(std::size_t n);
  double azimuth(std::size_t i) const;
  double elevation(std::size_t j) const;
  /// Counts >= 2 and bounds inside the workspace; throws ValidationError.
  void validate() const;
};

/// Delta-length per tendon on a grid; entry (j, i) is elevation j, azimuth i.
struct ForwardSurface {
  Grid grid;
  std::array<Eigen::MatrixXd, 4> dl_mm;
};

ForwardSurface forward_surface(const TendonLayout& layout, const Grid& grid);

/// Single-parameter pose sweep.
struct Sweep {
  std::string name;
  std::vector<JointPose> poses;
};

/// Flexion (azimuth 90), extension (azimuth -90) and abduction (azimuth 0)
/// raise elevation 0 -> 90; horizontal abduction holds elevation 90 while
/// azimuth goes 90 -> -40.
std::vector<Sweep> canonical_sweeps(std::size_t samples = 181);

struct MonotonicityEntry {
  TendonName tendon = TendonName::F;
  std::string sweep;
  /// Direction of the first move beyond the dead-band: -1, +1, or 0 when the
  /// signal never leaves it.
  int trend = 0;
  std::size_t reversals = 0;
  /// Largest retreat from a running extreme, mm.
  double max_reversal_mm = 0.0;
  double net_change_mm = 0.0;
  bool monotone = true;
};

struct MonotonicityReport {
  double dead_band_mm = 0.0;
  std::vector<MonotonicityEntry> entries;

  /// Throws ValidationError when the pair is absent.
  const MonotonicityEntry& at(TendonName tendon, const std::string& sweep) const;
};

/// A reversal is counted when the signal retreats from its running extreme
/// by more than `dead_band_mm`.
MonotonicityReport monotonicity_screen(const TendonLayout& layout, const std::vector<Sweep>& sweeps,
                                       double dead_band_mm);

struct AblationEntry {
  SensorSubset subset;
  double rmse_theta_deg = 0.0;
  double rmse_phi_deg = 0.0;
  std::uint64_t train_seed = 0;
  std::size_t epochs_run = 0;

  double mean_rmse() const { return 0.5 * (rmse_theta_deg + rmse_phi_deg); }
};

struct AblationReport {
  std::vector<AblationEntry> entries;

  /// Mean of mean_rmse over subsets with `size` tendons.
  double group_mean(std::size_t size) const;
  const AblationEntry& best() const;
  const AblationEntry& worst_pair() const;
};

/// Trains one inverse model per ablation subset with identical settings and
/// shares the test split. Runs on `threads` workers (1 when 0); the report is
/// independent of the thread count. Training errors are rethrown with the
/// subset label prefixed.
AblationReport ablate(const Dataset& data, const TrainConfig& cfg, std::size_t threads = 1);

struct ChannelMetrics {
  /// Largest gap between mean emulated-minus-ideal offsets of elevation-rising
  /// and elevation-falling crossings of the loop elevation, taken per azimuth.
  double loop_width_mm = 0.0;
  /// Emulated minus ideal at the last frame.
  double residual_offset_mm = 0.0;
  double rms_gap_mm = 0.0;
};

struct HysteresisMetrics {
  double loop_elevation_deg = 45.0;
  std::array<ChannelMetrics, 4> channels;

  const ChannelMetrics& operator[](TendonName t) const { return channels[index(t)]; }
};

/// Throws DimensionError unless the three streams have equal nonzero length.
HysteresisMetrics compare_channels(std::span<const SensorFrame> ideal,
                                   std::span<const SensorFrame> emulated,
                                   std::span<const JointPose> joints,
                                   double loop_elevation_deg = 45.0);

struct HysteresisRun {
  Trajectory trajectory;
  std::vector<SensorFrame> ideal;
  std::vector<SensorFrame> emulated;
  HysteresisMetrics metrics;
};

/// Drives the emulator along `spec` from the neutral state and compares the
/// emulated channel with the ideal one.
HysteresisRun run_hysteresis(const TendonLayout& layout, const SensorEmulation& emu,
                             const TrajectorySpec& spec, double loop_elevation_deg = 45.0);

}  // namespace tendonsense

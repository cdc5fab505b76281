#include "tendonsense/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

#include "tendonsense/error.hpp"

namespace tendonsense {

namespace {

double lattice(double lo, double hi, std::size_t n, std::size_t i) {
  const auto last = static_cast<double>(n - 1);
  const auto k = static_cast<double>(i);
  return (lo * (last - k) + hi * k) / last;
}

}  // namespace

Grid Grid::square(std::size_t n) {
  Grid g;
  g.azimuth_count = n;
  g.elevation_count = n;
  return g;
}

double Grid::azimuth(std::size_t i) const {
  return lattice(azimuth_min_deg, azimuth_max_deg, azimuth_count, i);
}

double Grid::elevation(std::size_t j) const {
  return lattice(elevation_min_deg, elevation_max_deg, elevation_count, j);
}

void Grid::validate() const {
  if (azimuth_count < 2 || elevation_count < 2)
    throw ValidationError("grid needs at least 2 nodes per axis");
  if (!(azimuth_min_deg >= kAzimuthMinDeg && azimuth_max_deg <= kAzimuthMaxDeg &&
        azimuth_min_deg < azimuth_max_deg && elevation_min_deg >= kElevationMinDeg &&
        elevation_max_deg <= kElevationMaxDeg && elevation_min_deg < elevation_max_deg))
    throw ValidationError("grid must lie inside the workspace");
}

ForwardSurface forward_surface(const TendonLayout& layout, const Grid& grid) {
  grid.validate();
  const NeutralReference neutral = NeutralReference::compute(layout);
  ForwardSurface s;
  s.grid = grid;
  const auto rows = static_cast<Eigen::Index>(grid.elevation_count);
  const auto cols = static_cast<Eigen::Index>(grid.azimuth_count);
  for (auto& m : s.dl_mm) m.resize(rows, cols);
  for (Eigen::Index j = 0; j < rows; ++j)
    for (Eigen::Index i = 0; i < cols; ++i) {
      const JointPose pose{grid.azimuth(static_cast<std::size_t>(i)),
                           grid.elevation(static_cast<std::size_t>(j))};
      const SensorFrame f = delta_length(layout, neutral, pose);
      for (TendonName t : kAllTendons) s.dl_mm[index(t)](j, i) = f[t];
    }
  return s;
}

std::vector<Sweep> canonical_sweeps(std::size_t samples) {
  if (samples < 2) throw ValidationError("a sweep needs at least 2 samples");
  std::vector<Sweep> out;
  const auto elevation_sweep = [&](const char* name, double az) {
    Sweep s{name, {}};
    for (std::size_t k = 0; k < samples; ++k) s.poses.push_back({az, lattice(0.0, 90.0, samples, k)});
    out.push_back(std::move(s));
  };
  elevation_sweep("flexion", 90.0);
  elevation_sweep("extension", -90.0);
  elevation_sweep("abduction", 0.0);
  Sweep hab{"horizontal_abduction", {}};
  for (std::size_t k = 0; k < samples; ++k)
    hab.poses.push_back({lattice(kAzimuthMaxDeg, kAzimuthMinDeg, samples, k), 90.0});
  out.push_back(std::move(hab));
  return out;
}

const MonotonicityEntry& MonotonicityReport::at(TendonName tendon, const std::string& sweep) const {
  for (const auto& e : entries)
    if (e.tendon == tendon && e.sweep == sweep) return e;
  throw ValidationError(std::string("no monotonicity entry for ") + to_string(tendon) + " on '" +
                        sweep + "'");
}

MonotonicityReport monotonicity_screen(const TendonLayout& layout, const std::vector<Sweep>& sweeps,
                                       double dead_band_mm) {
  if (!(dead_band_mm >= 0.0)) throw ValidationError("dead-band must be non-negative");
  const NeutralReference neutral = NeutralReference::compute(layout);
  MonotonicityReport report;
  report.dead_band_mm = dead_band_mm;
  for (const Sweep& sweep : sweeps) {
    if (sweep.poses.size() < 2) throw ValidationError("sweep '" + sweep.name + "' has fewer than 2 poses");
    std::vector<SensorFrame> signal;
    signal.reserve(sweep.poses.size());
    for (const JointPose& p : sweep.poses) signal.push_back(delta_length(layout, neutral, p));
    for (TendonName t : kAllTendons) {
      MonotonicityEntry e;
      e.tendon = t;
      e.sweep = sweep.name;
      const double start = signal.front()[t];
      double extreme = start;
      int dir = 0;
      for (const SensorFrame& f : signal) {
        const double v = f[t];
        if (dir == 0) {
          if (std::abs(v - start) > dead_band_mm) {
            dir = v > start ? 1 : -1;
            e.trend = dir;
            extreme = v;
          }
          continue;
        }
        if ((v - extreme) * dir >= 0.0) {
          extreme = v;
          continue;
        }
        const double retreat = std::abs(v - extreme);
        e.max_reversal_mm = std::max(e.max_reversal_mm, retreat);
        if (retreat > dead_band_mm) {
          ++e.reversals;
          dir = -dir;
          extreme = v;
        }
      }
      e.net_change_mm = signal.back()[t] - start;
      e.monotone = e.reversals == 0;
      report.entries.push_back(e);
    }
  }
  return report;
}

double AblationReport::group_mean(std::size_t size) const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& e : entries)
    if (e.subset.size() == size) {
      sum += e.mean_rmse();
      ++n;
    }
  if (n == 0) throw ValidationError("no ablation entries with " + std::to_string(size) + " sensors");
  return sum / static_cast<double>(n);
}

const AblationEntry& AblationReport::best() const {
  if (entries.empty()) throw ValidationError("empty ablation report");
  return *std::min_element(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return a.mean_rmse() < b.mean_rmse();
  });
}

const AblationEntry& AblationReport::worst_pair() const {
  const AblationEntry* worst = nullptr;
  for (const auto& e : entries)
    if (e.subset.size() == 2 && (!worst || e.mean_rmse() > worst->mean_rmse())) worst = &e;
  if (!worst) throw ValidationError("no pairs in ablation report");
  return *worst;
}

AblationReport ablate(const Dataset& data, const TrainConfig& cfg, std::size_t threads) {
  const std::vector<SensorSubset> subsets = SensorSubset::ablation_subsets();
  AblationReport report;
  report.entries.resize(subsets.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  const auto worker = [&] {
    for (std::size_t k = next++; k < subsets.size(); k = next++) {
      try {
        const TrainResult r = train(data, Direction::Inverse, subsets[k], cfg);
        AblationEntry& e = report.entries[k];
        e.subset = subsets[k];
        e.rmse_theta_deg = r.report.test_rmse.at(0);
        e.rmse_phi_deg = r.report.test_rmse.at(1);
        e.train_seed = cfg.init_seed;
        e.epochs_run = r.report.epochs_run;
      } catch (const TrainingDivergedError& ex) {
        std::lock_guard lock(failure_mutex);
        if (!failure)
          failure = std::make_exception_ptr(
              TrainingDivergedError(ex.epoch(), "subset " + subsets[k].label() + ": " + ex.what()));
      } catch (const std::exception& ex) {
        std::lock_guard lock(failure_mutex);
        if (!failure)
          failure = std::make_exception_ptr(Error("subset " + subsets[k].label() + ": " + ex.what()));
      }
    }
  };

  const std::size_t n = std::clamp<std::size_t>(threads, 1, subsets.size());
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return report;
}

HysteresisMetrics compare_channels(std::span<const SensorFrame> ideal,
                                   std::span<const SensorFrame> emulated,
                                   std::span<const JointPose> joints, double loop_elevation_deg) {
  if (ideal.empty() || ideal.size() != emulated.size() || ideal.size() != joints.size())
    throw DimensionError("ideal, emulated and joint streams must have equal nonzero length");
  HysteresisMetrics m;
  m.loop_elevation_deg = loop_elevation_deg;
  const double level = loop_elevation_deg;
  for (TendonName t : kAllTendons) {
    ChannelMetrics& c = m.channels[index(t)];
    const auto offset = [&](std::size_t k) { return emulated[k][t] - ideal[k][t]; };
    // Per rounded azimuth: sums and counts of rising and falling crossings.
    std::map<long, std::array<double, 4>> groups;
    double sq = 0.0;
    for (std::size_t k = 0; k < ideal.size(); ++k) {
      sq += offset(k) * offset(k);
      if (k == 0) continue;
      const double e0 = joints[k - 1].elevation_deg;
      const double e1 = joints[k].elevation_deg;
      const bool rising = e0 < level && e1 >= level;
      const bool falling = e0 > level && e1 <= level;
      if (!rising && !falling) continue;
      if (std::lround(joints[k - 1].azimuth_deg) != std::lround(joints[k].azimuth_deg)) continue;
      const double w = (level - e0) / (e1 - e0);
      const double off = offset(k - 1) + w * (offset(k) - offset(k - 1));
      auto& g = groups[std::lround(joints[k].azimuth_deg)];
      const std::size_t slot = rising ? 0 : 2;
      g[slot] += off;
      g[slot + 1] += 1.0;
    }
    for (const auto& [az, g] : groups)
      if (g[1] > 0.0 && g[3] > 0.0)
        c.loop_width_mm = std::max(c.loop_width_mm, std::abs(g[0] / g[1] - g[2] / g[3]));
    c.residual_offset_mm = offset(ideal.size() - 1);
    c.rms_gap_mm = std::sqrt(sq / static_cast<double>(ideal.size()));
  }
  return m;
}

HysteresisRun run_hysteresis(const TendonLayout& layout, const SensorEmulation& emu,
                             const TrajectorySpec& spec, double loop_elevation_deg) {
  layout.validate();
  emu.validate();
  HysteresisRun run;
  run.trajectory = generate(spec);
  const NeutralReference neutral = NeutralReference::compute(layout);
  SensorEmulator emulator(emu);
  std::vector<JointPose> joints;
  joints.reserve(run.trajectory.frames.size());
  for (const TrajectoryFrame& f : run.trajectory.frames) {
    const SensorFrame ideal = delta_length(layout, neutral, f.pose);
    run.ideal.push_back(ideal);
    run.emulated.push_back(emulator.step(ideal));
    joints.push_back(f.pose);
  }
  run.metrics = compare_channels(run.ideal, run.emulated, joints, loop_elevation_deg);
  return run;
}

}  // namespace tendonsense

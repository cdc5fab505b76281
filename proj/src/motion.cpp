#include "tendonsense/motion.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "tendonsense/error.hpp"

namespace tendonsense {

const char* to_string(MovementKind kind) {
  switch (kind) {
    case MovementKind::FlexExt: return "FlexExt";
    case MovementKind::AbAd: return "AbAd";
    case MovementKind::FixedAzimuthSweep: return "FixedAzimuthSweep";
    case MovementKind::FixedElevationSweep: return "FixedElevationSweep";
    case MovementKind::Random: return "Random";
  }
  return "?";
}

MovementKind movement_from_string(const std::string& name) {
  for (MovementKind k : kAllMovements)
    if (name == to_string(k)) return k;
  throw ConfigError("unknown movement kind '" + name + "'");
}

bool Workspace::contains(const JointPose& pose) const {
  return pose.azimuth_deg >= azimuth_min_deg && pose.azimuth_deg <= azimuth_max_deg &&
         pose.elevation_deg >= elevation_min_deg && pose.elevation_deg <= elevation_max_deg;
}

namespace {

struct RowDefaults {
  int reps;
  double rep_duration_s;
};

RowDefaults row_defaults(MovementKind kind) {
  switch (kind) {
    case MovementKind::FlexExt: return {4, 25.31 / 4};
    case MovementKind::AbAd: return {4, 30.25 / 4};
    case MovementKind::FixedAzimuthSweep: return {2, 48.45 / 2};
    case MovementKind::FixedElevationSweep: return {2, 56.31 / 2};
    case MovementKind::Random: return {1, 85.94};
  }
  return {1, 1.0};
}

/// Straight move in (azimuth, signed elevation). Negative elevation stands
/// for the opposite half-plane, which lets a swing pass through neutral.
struct Leg {
  double az0, el0, az1, el1;
  bool starts_rep = false;
  double length() const { return std::hypot(az1 - az0, el1 - el0); }
};

/// Normalized progress of a trapezoidal velocity profile whose ramps are
/// raised-cosine blends covering a fraction `beta` of the leg at each end.
double blended_progress(double tau, double beta) {
  const double v = 1.0 / (1.0 - beta);
  const auto ramp = [&](double t) {
    return v * (t / 2.0 - beta / (2.0 * std::numbers::pi) * std::sin(std::numbers::pi * t / beta));
  };
  if (tau <= 0.0) return 0.0;
  if (tau >= 1.0) return 1.0;
  if (tau < beta) return ramp(tau);
  if (tau > 1.0 - beta) return 1.0 - ramp(1.0 - tau);
  return v * beta / 2.0 + v * (tau - beta);
}

double wrap_deg(double a) {
  while (a > 180.0) a -= 360.0;
  while (a <= -180.0) a += 360.0;
  return a;
}

JointPose unfold(double az, double signed_el) {
  if (signed_el < 0.0) return {wrap_deg(az - 180.0), -signed_el};
  return {az, signed_el};
}

Trajectory sample_legs(const std::vector<Leg>& legs, const TrajectorySpec& spec) {
  const std::size_t n = spec.frame_count();
  const double dt = 1.0 / spec.frame_rate_hz;
  const double total = static_cast<double>(n - 1) * dt;
  double travel = 0.0;
  for (const auto& l : legs) travel += l.length();
  const double tb = spec.blend_time_s;
  const double cruise_time = total - tb * static_cast<double>(legs.size());
  if (!(cruise_time > 0.0))
    throw ValidationError("trajectory duration is too short for its blend time");
  const double speed = travel / cruise_time;

  std::vector<double> start(legs.size() + 1, 0.0);
  for (std::size_t i = 0; i < legs.size(); ++i)
    start[i + 1] = start[i] + legs[i].length() / speed + tb;
  start.back() = total;

  Trajectory traj;
  traj.frames.reserve(n);
  for (std::size_t i = 0; i < legs.size(); ++i) {
    if (!legs[i].starts_rep) continue;
    // A rep that starts mid-swing begins where the swing crosses neutral.
    const bool swing = legs[i].el0 * legs[i].el1 < 0.0;
    traj.rep_start_times_s.push_back(swing ? 0.5 * (start[i] + start[i + 1]) : start[i]);
  }
  std::size_t leg = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * dt;
    while (leg + 1 < legs.size() && t >= start[leg + 1]) ++leg;
    const Leg& l = legs[leg];
    const double span = start[leg + 1] - start[leg];
    const double beta = std::min(0.5, tb / span);
    const double s = blended_progress((t - start[leg]) / span, beta);
    const double az = l.az0 + s * (l.az1 - l.az0);
    const double el = l.el0 + s * (l.el1 - l.el0);
    traj.frames.push_back({t, unfold(az, el)});
  }
  return traj;
}

std::vector<Leg> flex_ext_legs(int reps) {
  // Swing front (az +90) and back (az -90) through neutral without stopping.
  std::vector<Leg> legs;
  legs.push_back({90.0, 0.0, 90.0, 90.0, true});
  double el = 90.0;
  for (int i = 0; i < 2 * reps - 1; ++i) {
    const bool rep_boundary = el < 0.0;
    legs.push_back({90.0, el, 90.0, -el, rep_boundary});
    el = -el;
  }
  legs.push_back({90.0, el, 90.0, 0.0});
  return legs;
}

std::vector<Leg> ab_ad_legs(int reps) {
  std::vector<Leg> legs;
  for (int r = 0; r < reps; ++r) {
    legs.push_back({0.0, 0.0, 0.0, 90.0, true});
    legs.push_back({0.0, 90.0, 0.0, 0.0});
  }
  return legs;
}

std::vector<Leg> fixed_azimuth_legs(const TrajectorySpec& spec) {
  const Workspace& ws = spec.workspace;
  std::vector<Leg> legs;
  for (double az : sweep_azimuths(ws))
    for (int r = 0; r < spec.reps; ++r) {
      legs.push_back({az, ws.elevation_min_deg, az, ws.elevation_max_deg, true});
      legs.push_back({az, ws.elevation_max_deg, az, ws.elevation_min_deg});
    }
  return legs;
}

std::vector<Leg> fixed_elevation_legs(const TrajectorySpec& spec) {
  const Workspace& ws = spec.workspace;
  const double lo = ws.azimuth_min_deg;
  const double hi = ws.azimuth_max_deg;
  std::vector<Leg> legs;
  std::optional<double> prev;
  for (double el : sweep_elevations(ws)) {
    if (prev) legs.push_back({lo, *prev, lo, el});
    for (int r = 0; r < spec.reps; ++r) {
      legs.push_back({lo, el, hi, el, true});
      legs.push_back({hi, el, lo, el});
    }
    prev = el;
  }
  return legs;
}

/// Smooth random walk in the azimuthal-equidistant chart
/// (phi cos(theta), phi sin(theta)), reflected at the workspace boundary.
/// Uniform chart coverage keeps few frames near the gimbal-locked neutral.
Trajectory random_walk(const TrajectorySpec& spec) {
  const Workspace& ws = spec.workspace;
  const std::size_t n = spec.frame_count();
  const double dt = 1.0 / spec.frame_rate_hz;
  const double a = std::min(1.0, dt / spec.random_time_constant_s);
  const double sigma = spec.random_speed_deg_s;
  const double az_lo = deg2rad(ws.azimuth_min_deg);
  const double az_hi = deg2rad(ws.azimuth_max_deg);

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  using Vec2 = Eigen::Vector2d;
  const auto violated = [&](const Vec2& x) -> std::optional<Vec2> {
    const double r = x.norm();
    if (r > ws.elevation_max_deg) return Vec2(x / r);
    if (r < ws.elevation_min_deg) return Vec2(-x / std::max(r, 1e-12));
    if (r > 1e-9) {
      const double th = std::atan2(x.y(), x.x());
      if (th > az_hi) return Vec2(-std::sin(az_hi), std::cos(az_hi));
      if (th < az_lo) return Vec2(std::sin(az_lo), -std::cos(az_lo));
    }
    return std::nullopt;
  };

  Vec2 x;
  do {
    const double r = ws.elevation_max_deg * std::sqrt(unit(rng));
    const double th = az_lo + (az_hi - az_lo) * unit(rng);
    x = Vec2(r * std::cos(th), r * std::sin(th));
  } while (violated(x));

  Vec2 f = Vec2::Zero();
  Vec2 v = Vec2::Zero();
  double last_az = rad2deg(std::atan2(x.y(), x.x()));
  Trajectory traj;
  traj.frames.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double r = x.norm();
    if (r > 1e-9) last_az = rad2deg(std::atan2(x.y(), x.x()));
    traj.frames.push_back({static_cast<double>(k) * dt, {last_az, r}});

    const Vec2 xi(gauss(rng), gauss(rng));
    f += -a * f + sigma * std::sqrt(2.0 * a) * xi;
    v += a * (f - v);
    Vec2 next = x + v * dt;
    for (int bounce = 0; bounce < 2; ++bounce) {
      const auto normal = violated(next);
      if (!normal) break;
      if (v.dot(*normal) > 0.0) v -= 2.0 * v.dot(*normal) * *normal;
      if (f.dot(*normal) > 0.0) f -= 2.0 * f.dot(*normal) * *normal;
      next = x + v * dt;
    }
    if (violated(next)) {
      v = -v;
      f = -f;
      next = x;
    }
    x = next;
  }
  return traj;
}

}  // namespace

TrajectorySpec TrajectorySpec::protocol_row(MovementKind kind) {
  TrajectorySpec s;
  s.kind = kind;
  s.reps = row_defaults(kind).reps;
  return s;
}

double TrajectorySpec::duration() const {
  if (duration_s) return *duration_s;
  return static_cast<double>(reps) * row_defaults(kind).rep_duration_s;
}

std::size_t TrajectorySpec::frame_count() const {
  return static_cast<std::size_t>(std::lround(duration() * frame_rate_hz));
}

void TrajectorySpec::validate() const {
  if (!(frame_rate_hz > 0.0)) throw ValidationError("frame_rate_hz must be positive");
  if (reps < 1) throw ValidationError("reps must be at least 1");
  if (!(duration() > 0.0)) throw ValidationError("duration must be positive");
  if (frame_count() < 2) throw ValidationError("trajectory needs at least 2 frames");
  if (!(blend_time_s > 0.0)) throw ValidationError("blend_time_s must be positive");
  if (!(random_speed_deg_s > 0.0) || !(random_time_constant_s > 0.0))
    throw ValidationError("random walk speed and time constant must be positive");
  const Workspace& w = workspace;
  if (!(w.azimuth_min_deg >= kAzimuthMinDeg && w.azimuth_max_deg <= kAzimuthMaxDeg &&
        w.azimuth_min_deg < w.azimuth_max_deg))
    throw ValidationError("workspace azimuth range must lie within [-40, 90] deg");
  if (!(w.elevation_min_deg >= kElevationMinDeg && w.elevation_max_deg <= kElevationMaxDeg &&
        w.elevation_min_deg < w.elevation_max_deg))
    throw ValidationError("workspace elevation range must lie within [0, 90] deg");
}

std::vector<double> sweep_azimuths(const Workspace& ws) {
  std::vector<double> out;
  for (int i = 0; i < 5; ++i)
    out.push_back((ws.azimuth_min_deg * (4 - i) + ws.azimuth_max_deg * i) / 4.0);
  return out;
}

std::vector<double> sweep_elevations(const Workspace& ws) {
  std::vector<double> out;
  for (int i = 1; i <= 5; ++i)
    out.push_back((ws.elevation_min_deg * (5 - i) + ws.elevation_max_deg * i) / 5.0);
  return out;
}

Trajectory generate(const TrajectorySpec& spec) {
  spec.validate();
  switch (spec.kind) {
    case MovementKind::FlexExt: return sample_legs(flex_ext_legs(spec.reps), spec);
    case MovementKind::AbAd: return sample_legs(ab_ad_legs(spec.reps), spec);
    case MovementKind::FixedAzimuthSweep: return sample_legs(fixed_azimuth_legs(spec), spec);
    case MovementKind::FixedElevationSweep:
      return sample_legs(fixed_elevation_legs(spec), spec);
    case MovementKind::Random: return random_walk(spec);
  }
  throw ValidationError("unknown movement kind");
}

std::vector<NamedTrajectory> protocol_suite(const std::vector<TrajectorySpec>& rows) {
  std::vector<NamedTrajectory> out;
  out.reserve(rows.size());
  for (const auto& spec : rows) out.push_back({to_string(spec.kind), generate(spec)});
  return out;
}

std::vector<NamedTrajectory> protocol_suite(std::uint64_t seed, double frame_rate_hz) {
  std::vector<TrajectorySpec> rows;
  for (MovementKind k : kAllMovements) {
    auto spec = TrajectorySpec::protocol_row(k);
    spec.seed = seed;
    spec.frame_rate_hz = frame_rate_hz;
    rows.push_back(spec);
  }
  return protocol_suite(rows);
}

}  // namespace tendonsense

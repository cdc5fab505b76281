#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tendonsense/mapping.hpp"
#include "tendonsense/motion.hpp"
#include "tendonsense/sensor.hpp"
#include "tendonsense/tendon.hpp"

namespace tendonsense {

struct RowOverride {
  std::optional<int> reps;
  std::optional<double> duration_s;
};

struct ProtocolConfig {
  std::uint64_t seed = 0;
  double frame_rate_hz = 120.0;
  double blend_time_s = 0.15;
  double random_speed_deg_s = 60.0;
  double random_time_constant_s = 0.4;
  Workspace workspace;
  std::map<MovementKind, RowOverride> rows;

  /// The five protocol rows in table order with overrides applied.
  std::vector<TrajectorySpec> specs() const;
};

struct EvaluationConfig {
  /// Elevation at which hysteresis loop widths are read.
  double loop_elevation_deg = 45.0;
  double hysteresis_backlash_mm = 1.0;
  int hysteresis_reps = 4;
  std::size_t monotonicity_samples = 181;
  /// Worker threads for ablation; TENDONSENSE_THREADS overrides it in the CLI.
  std::size_t threads = 1;
};

/// One experiment, loadable from a single JSON file with the sections
/// model, layout, sensor, train, protocol and evaluation. Missing keys keep
/// their defaults; unknown keys are errors.
struct Config {
  TendonLayout layout;
  SensorEmulation sensor;
  /// Write emulated rather than ideal sensor values in `generate`.
  bool emulate = false;
  Direction direction = Direction::Inverse;
  SensorSubset sensors;
  TrainConfig train;
  ProtocolConfig protocol;
  EvaluationConfig evaluation;

  /// Validates every section.
  void validate() const;
};

/// The shipped configuration, including the default tendon layout.
std::string_view default_config_text();
Config default_config();
TendonLayout default_layout();

/// Starts from built-in defaults for keys that are absent; a file without a
/// layout section uses the default layout. Throws ConfigError naming the
/// offending JSON pointer, e.g. "/sensor/adc_bits".
Config parse_config(std::string_view json_text);
Config load_config(const std::filesystem::path& path);
/// Canonical JSON rendering of a config, accepted by parse_config.
std::string config_to_json(const Config& cfg);

inline constexpr std::string_view kDatasetHeader =
    "frame,time_s,theta_deg,phi_deg,dl_F_mm,dl_SF_mm,dl_SR_mm,dl_R_mm";

/// CSV with an optional leading "# provenance=<tag>" line and the fixed
/// header. Numbers are written in shortest round-trip form.
void write_dataset(std::ostream& out, const Dataset& data);
void write_dataset(const std::filesystem::path& path, const Dataset& data);
/// Throws ParseError carrying the 1-based line number.
Dataset read_dataset(std::istream& in);
Dataset read_dataset(const std::filesystem::path& path);

/// Binary model file, all fields little-endian:
///   char[8] "TSMLP\0\0\0", u32 version (1),
///   u8 direction (0 fwd, 1 inv), u8 activation (0 tanh, 1 sigmoid, 2 relu,
///   3 linear), u8 sensor mask (bit i = F, SF, SR, R), u8 reserved (0),
///   u32 inputs, u32 hidden, u32 outputs,
///   f64 input lo[inputs], input hi[inputs], output lo[outputs],
///   output hi[outputs], W1[hidden][inputs], b1[hidden], W2[outputs][hidden],
///   b2[outputs]  (matrices row-major).
std::string serialize_model(const MlpModel& model);
/// Throws ParseError for a bad magic, version, size or truncation.
MlpModel deserialize_model(std::string_view bytes);
void save_model(const std::filesystem::path& path, const MlpModel& model);
MlpModel load_model(const std::filesystem::path& path);

}  // namespace tendonsense

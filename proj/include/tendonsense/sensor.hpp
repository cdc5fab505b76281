#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <random>

#include "tendonsense/geometry.hpp"
#include "tendonsense/tendon.hpp"

namespace tendonsense {

/// Signed tendon length changes relative to the neutral pose, one per tendon.
/// Shortening is negative.
struct SensorFrame {
  std::array<double, 4> dl_mm{};

  double& operator[](TendonName name) { return dl_mm[index(name)]; }
  double operator[](TendonName name) const { return dl_mm[index(name)]; }
  bool all_finite() const;

  friend bool operator==(const SensorFrame&, const SensorFrame&) = default;
};

/// Tendon lengths at the rest pose (arm hanging by the side).
struct NeutralReference {
  JointPose pose;
  std::map<TendonName, double> lengths;

  static NeutralReference compute(const TendonLayout& layout, const JointPose& pose = {});
};

/// Throws ConfigError when the reference and the layout name different tendons.
SensorFrame delta_length(const TendonLayout& layout, const NeutralReference& neutral,
                         const JointPose& pose);

/// Draw-wire potentiometer read by an ADC: 12 bits over 12 inches at 3.3 V by
/// default, giving a step of about 0.0744 mm.
struct SensorEmulation {
  double supply_voltage_V = 3.3;
  int adc_bits = 12;
  double travel_mm = 304.8;
  double noise_std_mm = 0.0;
  double limit_min_mm = -152.4;
  double limit_max_mm = 152.4;
  /// Full width of the play dead-band; 0 disables it.
  double hysteresis_backlash_mm = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

double quantization_step(const SensorEmulation& emu);

/// Per-stream emulation state: last backlash output per tendon and the noise
/// generator. Not safe to share between threads.
struct EmulationState {
  std::array<double, 4> backlash_out{};
  std::mt19937_64 rng;

  explicit EmulationState(std::uint64_t seed = 0, const SensorFrame& initial = {});
};

/// One emulation step. Per tendon, in order: additive Gaussian noise, play
/// (output moves once the input leaves the band of half-width b/2 around it),
/// clamp to the limits, round to the nearest quantization step.
SensorFrame emulate(const SensorEmulation& emu, const SensorFrame& ideal,
                    EmulationState& state);

/// Convenience owner of an emulation config plus its state.
class SensorEmulator {
 public:
  explicit SensorEmulator(SensorEmulation emu);

  SensorFrame step(const SensorFrame& ideal) { return emulate(emu_, ideal, state_); }
  void reset();
  const SensorEmulation& config() const { return emu_; }

 private:
  SensorEmulation emu_;
  EmulationState state_;
};

}  // namespace tendonsense

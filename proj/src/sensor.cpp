#include "tendonsense/sensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tendonsense/error.hpp"

namespace tendonsense {

bool SensorFrame::all_finite() const {
  return std::all_of(dl_mm.begin(), dl_mm.end(), [](double v) { return std::isfinite(v); });
}

NeutralReference NeutralReference::compute(const TendonLayout& layout, const JointPose& pose) {
  NeutralReference ref;
  ref.pose = pose;
  for (const auto& p : layout.tendons) ref.lengths[p.name] = tendon_length(layout, p.name, pose);
  return ref;
}

SensorFrame delta_length(const TendonLayout& layout, const NeutralReference& neutral,
                         const JointPose& pose) {
  if (neutral.lengths.size() != layout.tendons.size())
    throw ConfigError("neutral reference and layout have different tendon sets");
  SensorFrame out;
  for (const auto& p : layout.tendons) {
    const auto it = neutral.lengths.find(p.name);
    if (it == neutral.lengths.end())
      throw ConfigError(std::string("neutral reference lacks tendon ") + to_string(p.name));
    out[p.name] = tendon_length(layout, p.name, pose) - it->second;
  }
  return out;
}

void SensorEmulation::validate() const {
  if (adc_bits < 1 || adc_bits > 32) throw ValidationError("adc_bits must be in [1, 32]");
  if (!(travel_mm > 0.0)) throw ValidationError("travel_mm must be positive");
  if (!(supply_voltage_V > 0.0)) throw ValidationError("supply_voltage_V must be positive");
  if (!(noise_std_mm >= 0.0)) throw ValidationError("noise_std_mm must be >= 0");
  if (!(hysteresis_backlash_mm >= 0.0))
    throw ValidationError("hysteresis_backlash_mm must be >= 0");
  if (!(limit_min_mm < limit_max_mm))
    throw ValidationError("limit_min_mm must be below limit_max_mm");
}

double quantization_step(const SensorEmulation& emu) {
  return emu.travel_mm / std::ldexp(1.0, emu.adc_bits);
}

EmulationState::EmulationState(std::uint64_t seed, const SensorFrame& initial)
    : backlash_out(initial.dl_mm), rng(seed) {}

SensorFrame emulate(const SensorEmulation& emu, const SensorFrame& ideal,
                    EmulationState& state) {
  const double step = quantization_step(emu);
  const double half_play = 0.5 * emu.hysteresis_backlash_mm;
  std::normal_distribution<double> noise(0.0, emu.noise_std_mm);
  SensorFrame out;
  for (std::size_t i = 0; i < 4; ++i) {
    double x = ideal.dl_mm[i];
    if (emu.noise_std_mm > 0.0) x += noise(state.rng);
    double& y = state.backlash_out[i];
    if (x > y + half_play)
      y = x - half_play;
    else if (x < y - half_play)
      y = x + half_play;
    const double clamped = std::clamp(y, emu.limit_min_mm, emu.limit_max_mm);
    // Saturated readings sit exactly on the limit even when it is off-grid.
    out.dl_mm[i] = std::clamp(std::round(clamped / step) * step, emu.limit_min_mm,
                              emu.limit_max_mm);
  }
  return out;
}

SensorEmulator::SensorEmulator(SensorEmulation emu) : emu_(emu), state_(emu.seed) {
  emu_.validate();
}

void SensorEmulator::reset() { state_ = EmulationState(emu_.seed); }

}  // namespace tendonsense

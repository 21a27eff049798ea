#pragma once

// Context-manager and adaptation-manager variants, one per sensor/effector
// availability combination, plus the records the blackboard stores about
// failures and the current ensemble configuration.

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

#include "microctl/afsm.hpp"
#include "microctl/phone_sim.hpp"

namespace microctl {

enum class CMVariant : std::uint8_t { AllSensors, NoGPS, NoBluetooth, NoGPSNoBluetooth };
enum class AMVariant : std::uint8_t { AllEffectors, NoRingtone, NoVibration, NoRingtoneNoVibration };

inline constexpr std::array<CMVariant, 4> kAllCMVariants = {
    CMVariant::AllSensors, CMVariant::NoGPS, CMVariant::NoBluetooth, CMVariant::NoGPSNoBluetooth};
inline constexpr std::array<AMVariant, 4> kAllAMVariants = {
    AMVariant::AllEffectors, AMVariant::NoRingtone, AMVariant::NoVibration,
    AMVariant::NoRingtoneNoVibration};

inline const char* to_string(CMVariant v) {
  switch (v) {
    case CMVariant::AllSensors: return "AllSensors";
    case CMVariant::NoGPS: return "NoGPS";
    case CMVariant::NoBluetooth: return "NoBluetooth";
    case CMVariant::NoGPSNoBluetooth: return "NoGPSNoBluetooth";
  }
  return "unknown";
}

inline const char* to_string(AMVariant v) {
  switch (v) {
    case AMVariant::AllEffectors: return "AllEffectors";
    case AMVariant::NoRingtone: return "NoRingtone";
    case AMVariant::NoVibration: return "NoVibration";
    case AMVariant::NoRingtoneNoVibration: return "NoRingtoneNoVibration";
  }
  return "unknown";
}

inline std::optional<CMVariant> cm_variant_from_string(std::string_view s) {
  for (CMVariant v : kAllCMVariants) {
    if (s == to_string(v)) return v;
  }
  return std::nullopt;
}

inline std::optional<AMVariant> am_variant_from_string(std::string_view s) {
  for (AMVariant v : kAllAMVariants) {
    if (s == to_string(v)) return v;
  }
  return std::nullopt;
}

// Micro-controller identifiers as registered on the bus.
inline std::string cm_id(CMVariant v) { return std::string("ContextManager") + to_string(v); }
inline std::string am_id(AMVariant v) { return std::string("AdaptationManager") + to_string(v); }

// The calendar probe is available to every context manager variant.
inline SensorMask cm_sensor_mask(CMVariant v) {
  switch (v) {
    case CMVariant::AllSensors: return {true, true, true};
    case CMVariant::NoGPS: return {false, true, true};
    case CMVariant::NoBluetooth: return {true, false, true};
    case CMVariant::NoGPSNoBluetooth: return {false, false, true};
  }
  return {};
}

struct EffectorMask {
  bool ringtone = false;
  bool vibration = false;
};

inline EffectorMask am_effector_mask(AMVariant v) {
  switch (v) {
    case AMVariant::AllEffectors: return {true, true};
    case AMVariant::NoRingtone: return {false, true};
    case AMVariant::NoVibration: return {true, false};
    case AMVariant::NoRingtoneNoVibration: return {false, false};
  }
  return {};
}

// Compiled rule machine of a context-manager variant; built once and shared.
inline const Afsm& cm_afsm(CMVariant v) {
  static const std::array<Afsm, 4> machines = {
      Afsm(build_variant(true, true)),
      Afsm(build_variant(false, true)),
      Afsm(build_variant(true, false)),
      Afsm(build_variant(false, false)),
  };
  switch (v) {
    case CMVariant::AllSensors: return machines[0];
    case CMVariant::NoGPS: return machines[1];
    case CMVariant::NoBluetooth: return machines[2];
    case CMVariant::NoGPSNoBluetooth: return machines[3];
  }
  return machines[0];
}

enum class FailureStatus : std::uint8_t { failed, restored };

inline const char* to_string(FailureStatus s) {
  return s == FailureStatus::failed ? "failed" : "restored";
}

// One detected health transition of a device.
struct FailureRecord {
  DeviceId device = DeviceId::gps;
  FailureStatus status = FailureStatus::failed;
  std::uint64_t tick = 0;

  bool operator==(const FailureRecord&) const = default;
};

// Which variants are live right now.
struct EnsembleConfig {
  CMVariant active_cm = CMVariant::AllSensors;
  AMVariant active_am = AMVariant::AllEffectors;
  std::uint64_t since_tick = 0;

  bool operator==(const EnsembleConfig&) const = default;
};

}  // namespace microctl

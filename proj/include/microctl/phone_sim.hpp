#pragma once

// Simulated target system: GPS / Bluetooth / calendar sensors, volume and
// vibration effectors, per-device health flags, and fault injection.
//
// The simulator is the only component with device state. Reads go through a
// sensor mask so a caller can declare which sensors it actually uses; the
// simulator counts accesses per sensor, which makes "this variant never
// touches GPS" testable.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "microctl/error.hpp"

namespace microctl {

// Logical time. Owned by the scenario runner; everything else reads it.
struct LogicalClock {
  std::uint64_t now = 0;
};

enum class Place : std::uint8_t { home, office, other, unknown };
enum class Vibration : std::uint8_t { on, off };
enum class DeviceId : std::uint8_t { gps, bluetooth, ringtone, vibration };

inline const char* to_string(Place p) {
  switch (p) {
    case Place::home: return "home";
    case Place::office: return "office";
    case Place::other: return "other";
    case Place::unknown: return "unknown";
  }
  return "unknown";
}

inline const char* to_string(Vibration v) {
  return v == Vibration::on ? "ON" : "OFF";
}

inline const char* to_string(DeviceId d) {
  switch (d) {
    case DeviceId::gps: return "gps";
    case DeviceId::bluetooth: return "bluetooth";
    case DeviceId::ringtone: return "ringtone";
    case DeviceId::vibration: return "vibration";
  }
  return "unknown";
}

inline std::optional<Place> place_from_string(std::string_view s) {
  if (s == "home") return Place::home;
  if (s == "office") return Place::office;
  if (s == "other") return Place::other;
  if (s == "unknown") return Place::unknown;
  return std::nullopt;
}

inline std::optional<Vibration> vibration_from_string(std::string_view s) {
  if (s == "ON") return Vibration::on;
  if (s == "OFF") return Vibration::off;
  return std::nullopt;
}

inline std::optional<DeviceId> device_from_string(std::string_view s) {
  if (s == "gps") return DeviceId::gps;
  if (s == "bluetooth") return DeviceId::bluetooth;
  if (s == "ringtone") return DeviceId::ringtone;
  if (s == "vibration") return DeviceId::vibration;
  return std::nullopt;
}

// A failed GPS reads as an invalid fix at latitude/longitude 0.
struct GpsReading {
  bool valid = false;
  Place location = Place::unknown;
  double speed_kmh = 0.0;
  double lat = 0.0;
  double lon = 0.0;

  bool operator==(const GpsReading&) const = default;
};

// Times are minutes of day, 0..1439. A calendar that was never set reports a
// meeting window at end of day so time-based rules stay quiet.
struct SensorSnapshot {
  GpsReading gps;
  std::set<std::string> bluetooth;
  int time = 0;
  int meeting_start = 1439;
  int meeting_end = 1439;

  int bt_count() const { return static_cast<int>(bluetooth.size()); }

  bool operator==(const SensorSnapshot&) const = default;
};

struct EffectorState {
  int volume = 50;
  Vibration vibration = Vibration::off;

  bool operator==(const EffectorState&) const = default;
};

struct HealthState {
  bool gps_ok = true;
  bool bt_ok = true;
  bool ringtone_ok = true;
  bool vibration_ok = true;

  bool operator==(const HealthState&) const = default;
};

// Scenario-injected events.
struct GpsFixEvent {
  GpsReading fix;
};
struct BtConnectEvent {
  std::string device;
};
struct BtDisconnectEvent {
  std::string device;
};
struct ClockSetEvent {
  int time = 0;
};
struct CalendarSetEvent {
  int meeting_start = 0;
  int meeting_end = 0;
};
struct FailEvent {
  DeviceId device;
};
struct RestoreEvent {
  DeviceId device;
};

using InjectedEvent = std::variant<GpsFixEvent, BtConnectEvent, BtDisconnectEvent,
                                   ClockSetEvent, CalendarSetEvent, FailEvent, RestoreEvent>;

// Which sensors a reader actually activates. Sensors outside the mask come
// back as sentinel values and do not bump the access counters.
struct SensorMask {
  bool gps = false;
  bool bluetooth = false;
  bool calendar = false;

  static SensorMask all() { return {true, true, true}; }
  static SensorMask none() { return {}; }
};

enum class ActuationResult : std::uint8_t { applied, effector_failed };

// One attempted effector write, successful or not.
struct ActuationRecord {
  std::uint64_t tick = 0;
  DeviceId device = DeviceId::ringtone;
  int volume = 0;             // meaningful for ringtone
  Vibration vibration = Vibration::off;  // meaningful for vibration
  ActuationResult result = ActuationResult::applied;
};

class PhoneSimulator {
 public:
  explicit PhoneSimulator(const LogicalClock& clock) : clock_(&clock) {}

  void apply_event(const InjectedEvent& e) {
    std::visit([this](const auto& ev) { apply(ev); }, e);
  }

  SensorSnapshot read_sensors(const SensorMask& mask) {
    SensorSnapshot s;
    if (mask.gps) {
      ++gps_reads_;
      if (health_.gps_ok) s.gps = gps_;
    }
    if (mask.bluetooth) {
      ++bt_reads_;
      if (health_.bt_ok) s.bluetooth = bt_;
    }
    if (mask.calendar) {
      ++calendar_reads_;
      s.time = time_;
      s.meeting_start = meeting_start_;
      s.meeting_end = meeting_end_;
    } else {
      s.time = 0;
      s.meeting_start = 1439;
      s.meeting_end = 1439;
    }
    return s;
  }

  ActuationResult set_volume(int v) {
    if (v < 0 || v > 100) raise(Errc::volume_out_of_range, "volume " + std::to_string(v));
    ActuationRecord rec{clock_->now, DeviceId::ringtone, v, Vibration::off,
                        ActuationResult::applied};
    if (!health_.ringtone_ok) {
      rec.result = ActuationResult::effector_failed;
      log_.push_back(rec);
      return ActuationResult::effector_failed;
    }
    effectors_.volume = v;
    log_.push_back(rec);
    return ActuationResult::applied;
  }

  ActuationResult set_vibration(Vibration x) {
    ActuationRecord rec{clock_->now, DeviceId::vibration, 0, x, ActuationResult::applied};
    if (!health_.vibration_ok) {
      rec.result = ActuationResult::effector_failed;
      log_.push_back(rec);
      return ActuationResult::effector_failed;
    }
    effectors_.vibration = x;
    log_.push_back(rec);
    return ActuationResult::applied;
  }

  HealthState probe_health() const { return health_; }
  EffectorState effector_state() const { return effectors_; }

  std::uint64_t gps_read_count() const { return gps_reads_; }
  std::uint64_t bluetooth_read_count() const { return bt_reads_; }
  std::uint64_t calendar_read_count() const { return calendar_reads_; }

  const std::vector<ActuationRecord>& actuation_log() const { return log_; }

 private:
  void apply(const GpsFixEvent& e) {
    if (e.fix.speed_kmh < 0.0) raise(Errc::invalid_value, "negative speed");
    gps_ = e.fix;
  }

  void apply(const BtConnectEvent& e) { bt_.insert(e.device); }

  void apply(const BtDisconnectEvent& e) {
    if (bt_.erase(e.device) == 0) {
      raise(Errc::disconnect_not_connected, "device '" + e.device + "' is not connected");
    }
  }

  void apply(const ClockSetEvent& e) {
    check_minutes(e.time);
    time_ = e.time;
  }

  void apply(const CalendarSetEvent& e) {
    check_minutes(e.meeting_start);
    check_minutes(e.meeting_end);
    meeting_start_ = e.meeting_start;
    meeting_end_ = e.meeting_end;
  }

  void apply(const FailEvent& e) { set_health(e.device, false); }
  void apply(const RestoreEvent& e) { set_health(e.device, true); }

  void set_health(DeviceId d, bool ok) {
    switch (d) {
      case DeviceId::gps: health_.gps_ok = ok; break;
      case DeviceId::bluetooth: health_.bt_ok = ok; break;
      case DeviceId::ringtone: health_.ringtone_ok = ok; break;
      case DeviceId::vibration: health_.vibration_ok = ok; break;
    }
  }

  static void check_minutes(int m) {
    if (m < 0 || m > 1439) raise(Errc::invalid_value, "minutes-of-day " + std::to_string(m));
  }

  const LogicalClock* clock_;
  GpsReading gps_;  // last fix; masked while the GPS is failed
  std::set<std::string> bt_;
  int time_ = 0;
  int meeting_start_ = 1439;
  int meeting_end_ = 1439;
  HealthState health_;
  EffectorState effectors_;
  std::uint64_t gps_reads_ = 0;
  std::uint64_t bt_reads_ = 0;
  std::uint64_t calendar_reads_ = 0;
  std::vector<ActuationRecord> log_;
};

}  // namespace microctl

#pragma once

// The PhoneAdapter micro-controllers: context-manager variants, adaptation-
// manager variants, and the failure manager. Each is stateless — everything
// it needs lives in the knowledge store, the simulator, or its immutable
// variant binding — so an instance can be destroyed and recreated between
// ticks without changing behavior.

#include <memory>
#include <set>
#include <string>
#include <utility>

#include "microctl/afsm.hpp"
#include "microctl/bus.hpp"
#include "microctl/error.hpp"
#include "microctl/knowledge.hpp"
#include "microctl/phone_sim.hpp"
#include "microctl/trace.hpp"
#include "microctl/variants.hpp"

namespace microctl {

// Shared infrastructure handed to every micro-controller.
struct Services {
  PhoneSimulator& sim;
  KnowledgeStore& knowledge;
  Bus& bus;
  TraceRecorder& trace;
  const LogicalClock& clock;
};

class ContextManager {
 public:
  ContextManager(CMVariant variant, Services services)
      : variant_(variant), s_(services) {}

  CMVariant variant() const { return variant_; }
  std::string id() const { return cm_id(variant_); }

  MicroControllerDescriptor descriptor() const {
    MicroControllerDescriptor d;
    d.id = id();
    d.role = Role::ContextManager;
    d.operations = {"generateContext"};
    SensorMask mask = cm_sensor_mask(variant_);
    if (mask.bluetooth) d.operations.insert("sensingBluetooth");
    if (mask.gps) d.operations.insert("locationListener");
    return d;
  }

  // One monitoring pass: read the masked sensors, store the snapshot, step
  // the machine from the stored context state, and announce a fired rule.
  void generate_context() {
    SensorSnapshot snap = s_.sim.read_sensors(cm_sensor_mask(variant_));
    s_.knowledge.put(keys::sensors_snapshot(), snap, s_.clock.now);

    ContextState state =
        s_.knowledge.get_value<ContextState>(keys::context_state()).value_or(ContextState::General);
    StepResult res = cm_afsm(variant_).step(state, snap);
    if (!res.fired) return;

    s_.knowledge.put(keys::context_state(), res.new_state, s_.clock.now);
    s_.trace.context_change(*res.fired, state, res.new_state, *res.output);
    if (!res.conflicts.empty()) s_.trace.conflict(state, *res.fired, res.conflicts);
    s_.bus.publish(topics::new_context,
                   NewContextPayload{res.new_state, *res.output, res.conflicts}, id());
  }

  std::set<std::string> sensing_bluetooth() {
    if (!cm_sensor_mask(variant_).bluetooth) {
      raise(Errc::operation_unsupported, id() + " has no sensingBluetooth");
    }
    SensorMask mask;
    mask.bluetooth = true;
    return s_.sim.read_sensors(mask).bluetooth;
  }

  std::pair<double, double> location_listener() {
    if (!cm_sensor_mask(variant_).gps) {
      raise(Errc::operation_unsupported, id() + " has no locationListener");
    }
    SensorMask mask;
    mask.gps = true;
    GpsReading gps = s_.sim.read_sensors(mask).gps;
    return {gps.lat, gps.lon};
  }

 private:
  const CMVariant variant_;
  Services s_;
};

class AdaptationManager {
 public:
  AdaptationManager(AMVariant variant, Services services)
      : variant_(variant), s_(services) {}

  AMVariant variant() const { return variant_; }
  std::string id() const { return am_id(variant_); }

  MicroControllerDescriptor descriptor() const {
    MicroControllerDescriptor d;
    d.id = id();
    d.role = Role::AdaptationManager;
    d.subscriptions = {topics::new_context, topics::rule_change};
    d.operations = {"processNewContext", "processRuleChange"};
    return d;
  }

  void on_message(const Message& m) {
    if (m.topic == topics::new_context) {
      if (const auto* p = std::get_if<NewContextPayload>(&m.payload)) process_new_context(*p);
    } else if (m.topic == topics::rule_change) {
      process_rule_change();
    }
  }

  // Applies the fired rule's settings through the variant's effector mask;
  // masked-out settings are skipped, not errored.
  void process_new_context(const NewContextPayload& payload) {
    apply_output(payload.output);
    EffectorState state = s_.sim.effector_state();
    s_.knowledge.put(keys::effectors_state(), state, s_.clock.now);
    s_.trace.effector_set(state);
  }

  // Resets the context to General and applies the General defaults.
  void process_rule_change() {
    ContextState old_state =
        s_.knowledge.get_value<ContextState>(keys::context_state()).value_or(ContextState::General);
    s_.knowledge.put(keys::context_state(), ContextState::General, s_.clock.now);
    apply_output(Output{50, Vibration::off});
    EffectorState state = s_.sim.effector_state();
    s_.knowledge.put(keys::effectors_state(), state, s_.clock.now);
    s_.trace.rule_change(old_state, state);
  }

 private:
  void apply_output(const Output& output) {
    EffectorMask mask = am_effector_mask(variant_);
    if (mask.ringtone) s_.sim.set_volume(output.volume);
    if (mask.vibration) s_.sim.set_vibration(output.vibration);
  }

  const AMVariant variant_;
  Services s_;
};

class FailureManager {
 public:
  explicit FailureManager(Services services) : s_(services) {}

  static std::string id() { return "FailureManager"; }

  MicroControllerDescriptor descriptor() const {
    MicroControllerDescriptor d;
    d.id = id();
    d.role = Role::FailureManager;
    d.operations = {"verifySensors", "verifyEffectors"};
    return d;
  }

  // Edge-triggered: compares ground truth against the health stored in the
  // knowledge and reports only deltas, one failure record per device plus one
  // message per category per pass.
  void verify_sensors() {
    HealthState truth = s_.sim.probe_health();
    HealthState last = stored_health();
    if (truth.gps_ok == last.gps_ok && truth.bt_ok == last.bt_ok) return;

    HealthState updated = last;
    updated.gps_ok = truth.gps_ok;
    updated.bt_ok = truth.bt_ok;
    s_.knowledge.put(keys::health(), updated, s_.clock.now);
    if (truth.gps_ok != last.gps_ok) record_delta(DeviceId::gps, truth.gps_ok);
    if (truth.bt_ok != last.bt_ok) record_delta(DeviceId::bluetooth, truth.bt_ok);
    s_.bus.publish(topics::sensors_failure, updated, id());
  }

  void verify_effectors() {
    HealthState truth = s_.sim.probe_health();
    HealthState last = stored_health();
    if (truth.ringtone_ok == last.ringtone_ok && truth.vibration_ok == last.vibration_ok) return;

    HealthState updated = last;
    updated.ringtone_ok = truth.ringtone_ok;
    updated.vibration_ok = truth.vibration_ok;
    s_.knowledge.put(keys::health(), updated, s_.clock.now);
    if (truth.ringtone_ok != last.ringtone_ok) record_delta(DeviceId::ringtone, truth.ringtone_ok);
    if (truth.vibration_ok != last.vibration_ok) {
      record_delta(DeviceId::vibration, truth.vibration_ok);
    }
    s_.bus.publish(topics::effectors_failure, updated, id());
  }

 private:
  HealthState stored_health() const {
    return s_.knowledge.get_value<HealthState>(keys::health()).value_or(HealthState{});
  }

  void record_delta(DeviceId device, bool ok) {
    FailureStatus status = ok ? FailureStatus::restored : FailureStatus::failed;
    s_.knowledge.put(keys::failures_latest(), FailureRecord{device, status, s_.clock.now},
                     s_.clock.now);
    s_.trace.failure(device, status);
  }

  Services s_;
};

// The live variant instances. Owned here, rebound by the meta-controller on
// swap and by the runner when it churns instances to prove statelessness.
struct ActiveEnsemble {
  std::shared_ptr<ContextManager> cm;
  std::shared_ptr<AdaptationManager> am;
};

inline MessageHandler make_handler(std::shared_ptr<AdaptationManager> am) {
  return [am = std::move(am)](const Message& m) { am->on_message(m); };
}

inline MessageHandler make_noop_handler() {
  return [](const Message&) {};
}

}  // namespace microctl

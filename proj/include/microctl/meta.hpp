#pragma once

// The meta-controller. Its target system is the ensemble itself: it listens
// for failure messages, maps the reported health to the variant that should
// be active, and atomically swaps micro-controllers on the bus. Sensor health
// selects the context manager, effector health selects the adaptation
// manager, and the two selections are independent.

#include <array>
#include <string>
#include <vector>

#include "microctl/bus.hpp"
#include "microctl/ensemble.hpp"
#include "microctl/error.hpp"
#include "microctl/knowledge.hpp"
#include "microctl/variants.hpp"

namespace microctl {

// One adaptation rule of the meta-controller. Rules a..d pick the context
// manager from (gps_ok, bt_ok); rules e..h pick the adaptation manager from
// (vibration_ok, ringtone_ok). Within each group the triggers are mutually
// exclusive and cover all four combinations.
struct MetaRule {
  char id;
  const char* name;
  const char* trigger_expr;
  bool cm_group;  // true: a..d, false: e..h
  bool first_ok;  // gps_ok (a..d) or vibration_ok (e..h)
  bool second_ok; // bt_ok  (a..d) or ringtone_ok  (e..h)
  CMVariant cm_target;
  AMVariant am_target;
};

inline const std::array<MetaRule, 8>& meta_rules() {
  static const std::array<MetaRule, 8> rules = {{
      {'a', "ActivateAllSensors", "gps_ok && bt_ok", true, true, true,
       CMVariant::AllSensors, AMVariant::AllEffectors},
      {'b', "ActivateNoGPS", "!gps_ok && bt_ok", true, false, true,
       CMVariant::NoGPS, AMVariant::AllEffectors},
      {'c', "ActivateNoBluetooth", "gps_ok && !bt_ok", true, true, false,
       CMVariant::NoBluetooth, AMVariant::AllEffectors},
      {'d', "ActivateNoBluetoothNoGPS", "!gps_ok && !bt_ok", true, false, false,
       CMVariant::NoGPSNoBluetooth, AMVariant::AllEffectors},
      {'e', "ActivateAllEffectors", "vibration_ok && ringtone_ok", false, true, true,
       CMVariant::AllSensors, AMVariant::AllEffectors},
      {'f', "ActivateNoRingtone", "vibration_ok && !ringtone_ok", false, true, false,
       CMVariant::AllSensors, AMVariant::NoRingtone},
      {'g', "ActivateNoVibration", "!vibration_ok && ringtone_ok", false, false, true,
       CMVariant::AllSensors, AMVariant::NoVibration},
      {'h', "ActivateNoRingtoneNoVibration", "!vibration_ok && !ringtone_ok", false, false, false,
       CMVariant::AllSensors, AMVariant::NoRingtoneNoVibration},
  }};
  return rules;
}

inline const MetaRule& context_manager_rule(const HealthState& h) {
  for (const MetaRule& r : meta_rules()) {
    if (r.cm_group && r.first_ok == h.gps_ok && r.second_ok == h.bt_ok) return r;
  }
  return meta_rules()[0];  // unreachable: the group is exhaustive
}

inline const MetaRule& adaptation_manager_rule(const HealthState& h) {
  for (const MetaRule& r : meta_rules()) {
    if (!r.cm_group && r.first_ok == h.vibration_ok && r.second_ok == h.ringtone_ok) return r;
  }
  return meta_rules()[4];  // unreachable: the group is exhaustive
}

inline CMVariant select_context_manager(const HealthState& h) {
  return context_manager_rule(h).cm_target;
}

inline AMVariant select_adaptation_manager(const HealthState& h) {
  return adaptation_manager_rule(h).am_target;
}

struct ConfigMapEntry {
  HealthState health;
  CMVariant cm;
  AMVariant am;
  char cm_rule;
  char am_rule;
};

// The full health-to-configuration mapping: sixteen health combinations,
// each resolved to exactly one (context manager, adaptation manager) pair.
inline std::vector<ConfigMapEntry> config_map() {
  std::vector<ConfigMapEntry> rows;
  rows.reserve(16);
  for (bool gps_ok : {true, false}) {
    for (bool bt_ok : {true, false}) {
      for (bool ringtone_ok : {true, false}) {
        for (bool vibration_ok : {true, false}) {
          HealthState h{gps_ok, bt_ok, ringtone_ok, vibration_ok};
          rows.push_back({h, select_context_manager(h), select_adaptation_manager(h),
                          context_manager_rule(h).id, adaptation_manager_rule(h).id});
        }
      }
    }
  }
  return rows;
}

class MetaController {
 public:
  MetaController(Services services, ActiveEnsemble& active) : s_(services), active_(active) {}

  static std::string id() { return "MetaController"; }

  MicroControllerDescriptor descriptor() const {
    MicroControllerDescriptor d;
    d.id = id();
    d.role = Role::MetaController;
    d.subscriptions = {topics::sensors_failure, topics::effectors_failure};
    d.operations = {"sensorsFailure", "effectorsFailure"};
    return d;
  }

  void on_message(const Message& m) {
    const auto* health = std::get_if<HealthState>(&m.payload);
    if (!health) return;
    if (m.topic == topics::sensors_failure) {
      reconfigure_cm(*health);
    } else if (m.topic == topics::effectors_failure) {
      reconfigure_am(*health);
    }
  }

 private:
  EnsembleConfig current_config() const {
    auto cfg = s_.knowledge.get_value<EnsembleConfig>(keys::ensemble_config());
    if (!cfg) raise(Errc::missing_config, "'ensemble/config' was never written");
    return *cfg;
  }

  void reconfigure_cm(const HealthState& h) {
    EnsembleConfig cfg = current_config();
    CMVariant target = select_context_manager(h);
    if (cfg.active_cm == target) return;

    auto next = std::make_shared<ContextManager>(target, s_);
    s_.bus.swap(cm_id(cfg.active_cm), next->descriptor(), make_noop_handler());
    active_.cm = next;
    s_.knowledge.put(keys::ensemble_config(),
                     EnsembleConfig{target, cfg.active_am, s_.clock.now}, s_.clock.now);
    s_.trace.reconfig(context_manager_rule(h).id, cm_id(cfg.active_cm), cm_id(target));

    // State projection: a stored context outside the new machine's reachable
    // set is reset to General through a ruleChange message.
    ContextState state =
        s_.knowledge.get_value<ContextState>(keys::context_state()).value_or(ContextState::General);
    if (cm_afsm(target).reachable_states().count(state) == 0) {
      s_.bus.publish(topics::rule_change, RuleChangePayload{}, id());
    }
  }

  void reconfigure_am(const HealthState& h) {
    EnsembleConfig cfg = current_config();
    AMVariant target = select_adaptation_manager(h);
    if (cfg.active_am == target) return;

    auto next = std::make_shared<AdaptationManager>(target, s_);
    s_.bus.swap(am_id(cfg.active_am), next->descriptor(), make_handler(next));
    active_.am = next;
    s_.knowledge.put(keys::ensemble_config(),
                     EnsembleConfig{cfg.active_cm, target, s_.clock.now}, s_.clock.now);
    s_.trace.reconfig(adaptation_manager_rule(h).id, am_id(cfg.active_am), am_id(target));
  }

  Services s_;
  ActiveEnsemble& active_;
};

}  // namespace microctl

#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <memory>

#include "microctl/meta.hpp"
#include "support/afsm_oracle.hpp"

using namespace microctl;

namespace {

HealthState health(bool gps, bool bt, bool ringtone, bool vibration) {
  return HealthState{gps, bt, ringtone, vibration};
}

// A wired mini-ensemble with the meta-controller registered.
struct World {
  LogicalClock clock;
  PhoneSimulator sim{clock};
  KnowledgeStore knowledge;
  Bus bus;
  TraceRecorder trace{clock};
  ActiveEnsemble active;
  std::shared_ptr<MetaController> meta;
  std::shared_ptr<FailureManager> fm;

  World() {
    Services s{sim, knowledge, bus, trace, clock};
    fm = std::make_shared<FailureManager>(s);
    bus.register_controller(fm->descriptor(), make_noop_handler());
    meta = std::make_shared<MetaController>(s, active);
    auto m = meta;
    bus.register_controller(meta->descriptor(), [m](const Message& msg) { m->on_message(msg); });
    active.cm = std::make_shared<ContextManager>(CMVariant::AllSensors, s);
    bus.register_controller(active.cm->descriptor(), make_noop_handler());
    active.am = std::make_shared<AdaptationManager>(AMVariant::AllEffectors, s);
    bus.register_controller(active.am->descriptor(), make_handler(active.am));
    knowledge.put(keys::ensemble_config(),
                  EnsembleConfig{CMVariant::AllSensors, AMVariant::AllEffectors, 0}, 0);
  }

  EnsembleConfig config() {
    return *knowledge.get_value<EnsembleConfig>(keys::ensemble_config());
  }

  std::size_t reconfig_count() {
    std::size_t n = 0;
    for (const TraceRecord& r : trace.records()) {
      if (r.kind() == TraceKind::reconfig) ++n;
    }
    return n;
  }
};

}  // namespace

TEST_CASE("context manager selection covers every sensor combination", "[meta]") {
  CHECK(select_context_manager(health(true, true, true, true)) == CMVariant::AllSensors);
  CHECK(select_context_manager(health(false, true, true, true)) == CMVariant::NoGPS);
  CHECK(select_context_manager(health(true, false, true, true)) == CMVariant::NoBluetooth);
  CHECK(select_context_manager(health(false, false, true, true)) == CMVariant::NoGPSNoBluetooth);
  // Effector health is irrelevant to the sensor-side selector.
  CHECK(select_context_manager(health(false, true, false, false)) == CMVariant::NoGPS);
}

TEST_CASE("adaptation manager selection covers every effector combination", "[meta]") {
  CHECK(select_adaptation_manager(health(true, true, true, true)) == AMVariant::AllEffectors);
  CHECK(select_adaptation_manager(health(true, true, false, true)) == AMVariant::NoRingtone);
  CHECK(select_adaptation_manager(health(true, true, true, false)) == AMVariant::NoVibration);
  CHECK(select_adaptation_manager(health(true, true, false, false)) ==
        AMVariant::NoRingtoneNoVibration);
  CHECK(select_adaptation_manager(health(false, false, false, false)) ==
        AMVariant::NoRingtoneNoVibration);
}

TEST_CASE("rule groups are mutually exclusive and exhaustive", "[meta]") {
  for (bool gps : {true, false}) {
    for (bool bt : {true, false}) {
      for (bool ringtone : {true, false}) {
        for (bool vibration : {true, false}) {
          HealthState h = health(gps, bt, ringtone, vibration);
          int cm_hits = 0;
          int am_hits = 0;
          for (const MetaRule& r : meta_rules()) {
            if (r.cm_group && r.first_ok == h.gps_ok && r.second_ok == h.bt_ok) ++cm_hits;
            if (!r.cm_group && r.first_ok == h.vibration_ok && r.second_ok == h.ringtone_ok) {
              ++am_hits;
            }
          }
          CHECK(cm_hits == 1);
          CHECK(am_hits == 1);
        }
      }
    }
  }
}

TEST_CASE("config map enumerates all sixteen configurations", "[meta]") {
  auto rows = config_map();
  REQUIRE(rows.size() == 16);

  std::set<std::pair<CMVariant, AMVariant>> pairs;
  for (const ConfigMapEntry& row : rows) {
    CHECK(row.cm == select_context_manager(row.health));
    CHECK(row.am == select_adaptation_manager(row.health));
    pairs.insert({row.cm, row.am});
  }
  CHECK(pairs.size() == 16);  // the full 4x4 product

  CHECK(rows.front().cm == CMVariant::AllSensors);
  CHECK(rows.front().am == AMVariant::AllEffectors);
  CHECK(rows.back().cm == CMVariant::NoGPSNoBluetooth);
  CHECK(rows.back().am == AMVariant::NoRingtoneNoVibration);
}

TEST_CASE("a sensor failure swaps the context manager", "[meta]") {
  World w;
  w.knowledge.put(keys::context_state(), ContextState::DrivingFast, 0);

  w.sim.apply_event(FailEvent{DeviceId::gps});
  w.fm->verify_sensors();

  CHECK(w.config().active_cm == CMVariant::NoGPS);
  CHECK(w.config().active_am == AMVariant::AllEffectors);
  CHECK(w.active.cm->variant() == CMVariant::NoGPS);
  CHECK(w.bus.active_id(Role::ContextManager) == cm_id(CMVariant::NoGPS));
  CHECK(w.reconfig_count() == 1);

  // The reconfig trace names meta rule b and both variant ids.
  const ReconfigDetail* reconfig = nullptr;
  for (const TraceRecord& r : w.trace.records()) {
    if (auto* d = std::get_if<ReconfigDetail>(&r.detail)) reconfig = d;
  }
  REQUIRE(reconfig);
  CHECK(reconfig->meta_rule == 'b');
  CHECK(reconfig->old_id == cm_id(CMVariant::AllSensors));
  CHECK(reconfig->new_id == cm_id(CMVariant::NoGPS));

  SECTION("the stale DrivingFast state was projected back to General") {
    // Independently confirm DrivingFast is unreachable for the new machine.
    CHECK(oracle::reachable(no_gps_table()).count(ContextState::DrivingFast) == 0);
    CHECK(w.knowledge.get_value<ContextState>(keys::context_state()) == ContextState::General);
    bool saw_rule_change = false;
    for (const TraceRecord& r : w.trace.records()) {
      saw_rule_change |= r.kind() == TraceKind::rule_change;
    }
    CHECK(saw_rule_change);
  }

  SECTION("replaying the same failure is a no-op") {
    w.bus.publish(topics::sensors_failure, health(false, true, true, true), FailureManager::id());
    CHECK(w.reconfig_count() == 1);
  }
}

TEST_CASE("a reachable state survives a swap", "[meta]") {
  World w;
  w.knowledge.put(keys::context_state(), ContextState::Driving, 0);
  w.sim.apply_event(FailEvent{DeviceId::gps});
  w.fm->verify_sensors();

  CHECK(w.knowledge.get_value<ContextState>(keys::context_state()) == ContextState::Driving);
  for (const TraceRecord& r : w.trace.records()) CHECK(r.kind() != TraceKind::rule_change);
}

TEST_CASE("an effector failure swaps only the adaptation manager", "[meta]") {
  World w;
  w.sim.apply_event(FailEvent{DeviceId::ringtone});
  w.fm->verify_effectors();

  CHECK(w.config().active_cm == CMVariant::AllSensors);
  CHECK(w.config().active_am == AMVariant::NoRingtone);
  CHECK(w.active.am->variant() == AMVariant::NoRingtone);
  CHECK(w.reconfig_count() == 1);

  SECTION("restoration swaps back") {
    w.sim.apply_event(RestoreEvent{DeviceId::ringtone});
    w.fm->verify_effectors();
    CHECK(w.config().active_am == AMVariant::AllEffectors);
    CHECK(w.reconfig_count() == 2);
  }
}

TEST_CASE("simultaneous failures swap the context manager first", "[meta]") {
  World w;
  w.sim.apply_event(FailEvent{DeviceId::gps});
  w.sim.apply_event(FailEvent{DeviceId::vibration});
  w.fm->verify_sensors();
  w.fm->verify_effectors();

  CHECK(w.config().active_cm == CMVariant::NoGPS);
  CHECK(w.config().active_am == AMVariant::NoVibration);

  std::vector<char> reconfig_rules;
  for (const TraceRecord& r : w.trace.records()) {
    if (auto* d = std::get_if<ReconfigDetail>(&r.detail)) reconfig_rules.push_back(d->meta_rule);
  }
  CHECK(reconfig_rules == std::vector<char>{'b', 'g'});
}

TEST_CASE("the new adaptation manager handles subsequent messages", "[meta]") {
  World w;
  w.sim.apply_event(FailEvent{DeviceId::ringtone});
  w.fm->verify_effectors();
  REQUIRE(w.config().active_am == AMVariant::NoRingtone);

  // A context switch after the swap must be applied through the new mask:
  // the ringtone is never touched.
  w.sim.apply_event(BtConnectEvent{"office_pc"});
  w.active.cm->generate_context();
  CHECK(w.knowledge.get_value<ContextState>(keys::context_state()) == ContextState::Office);
  for (const ActuationRecord& rec : w.sim.actuation_log()) {
    CHECK(rec.device != DeviceId::ringtone);
  }
  CHECK(w.sim.effector_state().vibration == Vibration::on);
}

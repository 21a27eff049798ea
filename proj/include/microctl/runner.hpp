#pragma once

// Deterministic scenario runner. Per tick, in fixed order:
//   1. apply this tick's injected events to the simulator,
//   2. failure manager: verifySensors, then verifyEffectors — any failure
//      messages are dispatched synchronously, so meta-controller swaps and
//      the resulting ruleChange reset complete here,
//   3. the active context manager runs generateContext — a fired rule's
//      newContext message is applied by the adaptation manager in the same
//      dispatch.
// Identical scenario and tables produce a byte-identical trace.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "microctl/bus.hpp"
#include "microctl/ensemble.hpp"
#include "microctl/error.hpp"
#include "microctl/knowledge.hpp"
#include "microctl/meta.hpp"
#include "microctl/phone_sim.hpp"
#include "microctl/scenario.hpp"
#include "microctl/trace.hpp"

namespace microctl {

struct RunOptions {
  std::optional<std::uint64_t> ticks_override;
  // Destroy and recreate the active context and adaptation managers at every
  // tick boundary. With all state in the knowledge store this must not change
  // the trace.
  bool churn_controllers = false;
  // Called after each completed tick; used by tests to observe mid-run state.
  std::function<void(std::uint64_t)> on_tick_end;
};

struct RunResult {
  int exit_code = 0;
  std::string trace;
  std::vector<TraceRecord> records;
  std::string fault;  // non-empty when exit_code == 2
};

// One wired ensemble: simulator, knowledge, bus, the permanent
// micro-controllers, and the initially active variant pair.
class Runtime {
 public:
  Runtime() : sim_(clock_), trace_(clock_) {
    Services s = services();

    bus_.register_controller(knowledge_descriptor(), make_noop_handler());

    fm_ = std::make_shared<FailureManager>(s);
    bus_.register_controller(fm_->descriptor(), make_noop_handler());

    meta_ = std::make_shared<MetaController>(s, active_);
    auto meta = meta_;
    bus_.register_controller(meta_->descriptor(),
                             [meta](const Message& m) { meta->on_message(m); });

    active_.cm = std::make_shared<ContextManager>(CMVariant::AllSensors, s);
    bus_.register_controller(active_.cm->descriptor(), make_noop_handler());

    active_.am = std::make_shared<AdaptationManager>(AMVariant::AllEffectors, s);
    bus_.register_controller(active_.am->descriptor(), make_handler(active_.am));

    knowledge_.put(keys::ensemble_config(),
                   EnsembleConfig{CMVariant::AllSensors, AMVariant::AllEffectors, 0}, 0);
  }

  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  RunResult run(const Scenario& scenario, const RunOptions& options = {}) {
    std::uint64_t ticks = options.ticks_override.value_or(scenario.ticks);
    std::size_t next_event = 0;
    RunResult result;
    try {
      for (std::uint64_t tick = 0; tick < ticks; ++tick) {
        clock_.now = tick;
        if (options.churn_controllers) churn();

        while (next_event < scenario.events.size() &&
               scenario.events[next_event].tick == tick) {
          sim_.apply_event(scenario.events[next_event].event);
          ++next_event;
        }

        fm_->verify_sensors();
        fm_->verify_effectors();
        active_.cm->generate_context();

        if (options.on_tick_end) options.on_tick_end(tick);
      }
    } catch (const Error& e) {
      result.exit_code = 2;
      result.fault = e.what();
    }
    result.trace = trace_.text();
    if (!result.fault.empty()) result.trace += "# fault: " + result.fault + "\n";
    result.records = trace_.records();
    return result;
  }

  Services services() { return Services{sim_, knowledge_, bus_, trace_, clock_}; }

  PhoneSimulator& simulator() { return sim_; }
  KnowledgeStore& knowledge() { return knowledge_; }
  Bus& bus() { return bus_; }
  TraceRecorder& recorder() { return trace_; }
  ActiveEnsemble& active() { return active_; }
  FailureManager& failure_manager() { return *fm_; }
  LogicalClock& clock() { return clock_; }

 private:
  static MicroControllerDescriptor knowledge_descriptor() {
    MicroControllerDescriptor d;
    d.id = "Knowledge";
    d.role = Role::Knowledge;
    d.operations = {"NewSensorContext", "NewEffectorData"};
    return d;
  }

  // Replace the active variant instances with fresh ones of the same variant.
  void churn() {
    auto cm = std::make_shared<ContextManager>(active_.cm->variant(), services());
    bus_.swap(cm->id(), cm->descriptor(), make_noop_handler());
    active_.cm = cm;

    auto am = std::make_shared<AdaptationManager>(active_.am->variant(), services());
    bus_.swap(am->id(), am->descriptor(), make_handler(am));
    active_.am = am;
  }

  LogicalClock clock_;
  PhoneSimulator sim_;
  KnowledgeStore knowledge_;
  Bus bus_;
  TraceRecorder trace_;
  ActiveEnsemble active_;
  std::shared_ptr<FailureManager> fm_;
  std::shared_ptr<MetaController> meta_;
};

// Convenience for tests: run a scenario on a fresh runtime.
inline RunResult run_scenario(const Scenario& scenario, const RunOptions& options = {}) {
  Runtime runtime;
  return runtime.run(scenario, options);
}

}  // namespace microctl

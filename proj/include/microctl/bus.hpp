#pragma once

// In-process choreography runtime. Topic-based delivery between registered
// micro-controllers plus the lifecycle operations the meta-controller uses:
// register, unregister, and atomic swap of one handler binding for another.
//
// Dispatch is a single logical loop: a publish outside dispatch delivers
// immediately; a publish from inside a handler is queued and delivered after
// the current handler returns. A swap takes effect between handler
// invocations, so every message reaches exactly one of the old/new handlers.

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "microctl/afsm.hpp"
#include "microctl/error.hpp"
#include "microctl/phone_sim.hpp"

namespace microctl {

enum class Role : std::uint8_t {
  ContextManager,
  AdaptationManager,
  FailureManager,
  MetaController,
  Knowledge,
};

inline const char* to_string(Role r) {
  switch (r) {
    case Role::ContextManager: return "ContextManager";
    case Role::AdaptationManager: return "AdaptationManager";
    case Role::FailureManager: return "FailureManager";
    case Role::MetaController: return "MetaController";
    case Role::Knowledge: return "Knowledge";
  }
  return "unknown";
}

namespace topics {
inline constexpr const char* new_context = "newContext";
inline constexpr const char* rule_change = "ruleChange";
inline constexpr const char* sensors_failure = "sensorsFailure";
inline constexpr const char* effectors_failure = "effectorsFailure";
inline constexpr const char* tick = "tick";
}  // namespace topics

inline bool is_known_topic(const std::string& topic) {
  return topic == topics::new_context || topic == topics::rule_change ||
         topic == topics::sensors_failure || topic == topics::effectors_failure ||
         topic == topics::tick;
}

struct MicroControllerDescriptor {
  std::string id;
  Role role = Role::Knowledge;
  std::set<std::string> subscriptions;  // topics
  std::set<std::string> operations;     // non-empty
};

// Payload of a context switch: the state entered, the settings to apply, and
// any rules that were enabled but lost the tie-break.
struct NewContextPayload {
  ContextState new_state = ContextState::General;
  Output output;
  std::vector<char> conflicts;

  bool operator==(const NewContextPayload&) const = default;
};

struct RuleChangePayload {
  bool operator==(const RuleChangePayload&) const = default;
};

using MessagePayload =
    std::variant<std::monostate, NewContextPayload, RuleChangePayload, HealthState, std::uint64_t>;

struct Message {
  std::string topic;
  MessagePayload payload;
  std::string sender;
  std::uint64_t seq = 0;  // strictly increasing across all publishes
};

using MessageHandler = std::function<void(const Message&)>;

class Bus {
 public:
  void register_controller(const MicroControllerDescriptor& desc, MessageHandler handler) {
    validate_descriptor(desc);
    if (by_id_.count(desc.id)) raise(Errc::duplicate_id, "'" + desc.id + "'");
    check_role_free(desc.role);
    slots_.push_back(Slot{desc, std::move(handler), true});
    by_id_[desc.id] = slots_.size() - 1;
  }

  void unregister_controller(const std::string& id) {
    std::size_t slot = find_slot(id);
    slots_[slot].live = false;
    slots_[slot].handler = nullptr;
    by_id_.erase(id);
  }

  // Atomically rebinds one registration to a new descriptor and handler of
  // the same role. Messages already queued are delivered to the new handler.
  void swap(const std::string& old_id, const MicroControllerDescriptor& next,
            MessageHandler handler) {
    validate_descriptor(next);
    std::size_t slot = find_slot(old_id);
    if (slots_[slot].desc.role != next.role) {
      raise(Errc::role_mismatch, "'" + old_id + "' is a " + to_string(slots_[slot].desc.role) +
                                     ", '" + next.id + "' is a " + to_string(next.role));
    }
    if (next.id != old_id && by_id_.count(next.id)) raise(Errc::duplicate_id, "'" + next.id + "'");
    by_id_.erase(old_id);
    slots_[slot].desc = next;
    slots_[slot].handler = std::move(handler);
    by_id_[next.id] = slot;
  }

  // Queues a message for every current subscriber of the topic and assigns
  // it a global sequence number (subscribers or not). Returns the number.
  std::uint64_t publish(const std::string& topic, MessagePayload payload,
                        const std::string& sender) {
    if (!is_known_topic(topic)) raise(Errc::invalid_topic, "'" + topic + "'");
    if (!by_id_.count(sender)) raise(Errc::unknown_sender, "'" + sender + "'");
    Message m{topic, std::move(payload), sender, next_seq_++};
    std::uint64_t seq = m.seq;
    pending_.push_back(std::move(m));
    if (!dispatching_) drain();
    return seq;
  }

  bool is_registered(const std::string& id) const { return by_id_.count(id) > 0; }

  std::optional<std::string> active_id(Role role) const {
    for (const Slot& s : slots_) {
      if (s.live && s.desc.role == role) return s.desc.id;
    }
    return std::nullopt;
  }

  std::size_t active_count(Role role) const {
    std::size_t n = 0;
    for (const Slot& s : slots_) {
      if (s.live && s.desc.role == role) ++n;
    }
    return n;
  }

 private:
  struct Slot {
    MicroControllerDescriptor desc;
    MessageHandler handler;
    bool live = false;
  };

  static void validate_descriptor(const MicroControllerDescriptor& desc) {
    if (desc.id.empty()) raise(Errc::invalid_descriptor, "empty id");
    if (desc.operations.empty()) {
      raise(Errc::invalid_descriptor, "'" + desc.id + "' declares no operations");
    }
    for (const std::string& topic : desc.subscriptions) {
      if (!is_known_topic(topic)) {
        raise(Errc::invalid_topic, "'" + topic + "' in subscriptions of '" + desc.id + "'");
      }
    }
  }

  // A second context manager or adaptation manager may not become active.
  void check_role_free(Role role) const {
    if (role != Role::ContextManager && role != Role::AdaptationManager) return;
    if (active_count(role) > 0) {
      raise(Errc::role_occupied, std::string(to_string(role)) + " already active");
    }
  }

  std::size_t find_slot(const std::string& id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) raise(Errc::unknown_id, "'" + id + "'");
    return it->second;
  }

  void drain() {
    dispatching_ = true;
    try {
      while (!pending_.empty()) {
        Message m = std::move(pending_.front());
        pending_.pop_front();
        deliver(m);
      }
    } catch (...) {
      dispatching_ = false;
      throw;
    }
    dispatching_ = false;
  }

  void deliver(const Message& m) {
    // Snapshot the receiving slots, then re-check at invocation time so a
    // swap or unregister performed by an earlier handler is honored.
    std::vector<std::size_t> targets;
    for (std::size_t i = 0; i < slots_.size(); ++i) {
      if (slots_[i].live && slots_[i].desc.subscriptions.count(m.topic)) targets.push_back(i);
    }
    for (std::size_t i : targets) {
      if (slots_[i].live && slots_[i].desc.subscriptions.count(m.topic)) slots_[i].handler(m);
    }
  }

  std::vector<Slot> slots_;  // stable slot indexes; unregistered slots stay tombstoned
  std::map<std::string, std::size_t> by_id_;
  std::deque<Message> pending_;
  bool dispatching_ = false;
  std::uint64_t next_seq_ = 1;
};

}  // namespace microctl

#pragma once

// Deterministic run log. Every record renders as one line with a fixed field
// order so identical runs produce byte-identical trace files:
//
//   <tick> context_change <rule> <from> <to> <volume> <vibration>
//   <tick> conflict <state> <fired> <also-enabled,csv>
//   <tick> effector_set <volume> <vibration>
//   <tick> failure <device> <failed|restored>
//   <tick> reconfig <meta-rule> <old-id> <new-id>
//   <tick> rule_change <from> General <volume> <vibration>

#include <cstdint>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "microctl/afsm.hpp"
#include "microctl/phone_sim.hpp"
#include "microctl/variants.hpp"

namespace microctl {

enum class TraceKind : std::uint8_t {
  context_change,
  effector_set,
  failure,
  reconfig,
  conflict,
  rule_change,
};

inline const char* to_string(TraceKind k) {
  switch (k) {
    case TraceKind::context_change: return "context_change";
    case TraceKind::effector_set: return "effector_set";
    case TraceKind::failure: return "failure";
    case TraceKind::reconfig: return "reconfig";
    case TraceKind::conflict: return "conflict";
    case TraceKind::rule_change: return "rule_change";
  }
  return "unknown";
}

struct ContextChangeDetail {
  char rule;
  ContextState from;
  ContextState to;
  Output output;
};

struct ConflictDetail {
  ContextState state;
  char fired;
  std::vector<char> also_enabled;
};

struct EffectorSetDetail {
  EffectorState state;
};

struct FailureDetail {
  DeviceId device;
  FailureStatus status;
};

struct ReconfigDetail {
  char meta_rule;  // a..h
  std::string old_id;
  std::string new_id;
};

struct RuleChangeDetail {
  ContextState from;
  EffectorState applied;  // effector state after the reset, through the mask
};

using TraceDetail = std::variant<ContextChangeDetail, ConflictDetail, EffectorSetDetail,
                                 FailureDetail, ReconfigDetail, RuleChangeDetail>;

struct TraceRecord {
  std::uint64_t tick = 0;
  TraceDetail detail;

  TraceKind kind() const {
    struct Visitor {
      TraceKind operator()(const ContextChangeDetail&) const { return TraceKind::context_change; }
      TraceKind operator()(const ConflictDetail&) const { return TraceKind::conflict; }
      TraceKind operator()(const EffectorSetDetail&) const { return TraceKind::effector_set; }
      TraceKind operator()(const FailureDetail&) const { return TraceKind::failure; }
      TraceKind operator()(const ReconfigDetail&) const { return TraceKind::reconfig; }
      TraceKind operator()(const RuleChangeDetail&) const { return TraceKind::rule_change; }
    };
    return std::visit(Visitor{}, detail);
  }
};

inline std::string to_line(const TraceRecord& r) {
  std::ostringstream os;
  os << r.tick << " " << to_string(r.kind());
  struct Visitor {
    std::ostream& os;
    void operator()(const ContextChangeDetail& d) const {
      os << " " << d.rule << " " << to_string(d.from) << " " << to_string(d.to) << " "
         << d.output.volume << " " << to_string(d.output.vibration);
    }
    void operator()(const ConflictDetail& d) const {
      os << " " << to_string(d.state) << " " << d.fired << " ";
      for (std::size_t i = 0; i < d.also_enabled.size(); ++i) {
        if (i) os << ",";
        os << d.also_enabled[i];
      }
    }
    void operator()(const EffectorSetDetail& d) const {
      os << " " << d.state.volume << " " << to_string(d.state.vibration);
    }
    void operator()(const FailureDetail& d) const {
      os << " " << to_string(d.device) << " " << to_string(d.status);
    }
    void operator()(const ReconfigDetail& d) const {
      os << " " << d.meta_rule << " " << d.old_id << " " << d.new_id;
    }
    void operator()(const RuleChangeDetail& d) const {
      os << " " << to_string(d.from) << " General " << d.applied.volume << " "
         << to_string(d.applied.vibration);
    }
  };
  std::visit(Visitor{os}, r.detail);
  return os.str();
}

class TraceRecorder {
 public:
  explicit TraceRecorder(const LogicalClock& clock) : clock_(&clock) {}

  void context_change(char rule, ContextState from, ContextState to, const Output& output) {
    push(ContextChangeDetail{rule, from, to, output});
  }
  void conflict(ContextState state, char fired, std::vector<char> also_enabled) {
    push(ConflictDetail{state, fired, std::move(also_enabled)});
  }
  void effector_set(const EffectorState& state) { push(EffectorSetDetail{state}); }
  void failure(DeviceId device, FailureStatus status) { push(FailureDetail{device, status}); }
  void reconfig(char meta_rule, std::string old_id, std::string new_id) {
    push(ReconfigDetail{meta_rule, std::move(old_id), std::move(new_id)});
  }
  void rule_change(ContextState from, const EffectorState& applied) {
    push(RuleChangeDetail{from, applied});
  }

  const std::vector<TraceRecord>& records() const { return records_; }

  std::string text() const {
    std::string out;
    for (const TraceRecord& r : records_) {
      out += to_line(r);
      out += "\n";
    }
    return out;
  }

 private:
  void push(TraceDetail detail) { records_.push_back({clock_->now, std::move(detail)}); }

  const LogicalClock* clock_;
  std::vector<TraceRecord> records_;
};

}  // namespace microctl

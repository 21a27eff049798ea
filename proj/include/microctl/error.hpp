#pragma once

#include <stdexcept>
#include <string>

namespace microctl {

// Error codes surfaced by the runtime. Contract violations and parse
// failures throw Error; expected domain conditions (a failed effector
// rejecting an actuation) are reported through return values instead.
enum class Errc {
  malformed_key,
  tick_regression,
  duplicate_id,
  role_occupied,
  unknown_id,
  role_mismatch,
  unknown_sender,
  invalid_topic,
  invalid_descriptor,
  unresolved_rule_ref,
  cyclic_rule_ref,
  disconnect_not_connected,
  volume_out_of_range,
  invalid_value,
  operation_unsupported,
  missing_config,
  scenario_parse_error,
  rules_parse_error,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::malformed_key: return "malformed_key";
    case Errc::tick_regression: return "tick_regression";
    case Errc::duplicate_id: return "duplicate_id";
    case Errc::role_occupied: return "role_occupied";
    case Errc::unknown_id: return "unknown_id";
    case Errc::role_mismatch: return "role_mismatch";
    case Errc::unknown_sender: return "unknown_sender";
    case Errc::invalid_topic: return "invalid_topic";
    case Errc::invalid_descriptor: return "invalid_descriptor";
    case Errc::unresolved_rule_ref: return "unresolved_rule_ref";
    case Errc::cyclic_rule_ref: return "cyclic_rule_ref";
    case Errc::disconnect_not_connected: return "disconnect_not_connected";
    case Errc::volume_out_of_range: return "volume_out_of_range";
    case Errc::invalid_value: return "invalid_value";
    case Errc::operation_unsupported: return "operation_unsupported";
    case Errc::missing_config: return "missing_config";
    case Errc::scenario_parse_error: return "scenario_parse_error";
    case Errc::rules_parse_error: return "rules_parse_error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace microctl

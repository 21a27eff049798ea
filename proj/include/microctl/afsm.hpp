#pragma once

// Adaptation finite-state machine engine.
//
// An A-FSM is a set of contextual states plus guarded transition rules, each
// rule carrying the effector settings to apply when it fires. This header
// provides:
//   - the predicate AST over sensor atoms and rule negations,
//   - the compiled machine (negations inlined) with enabled-rule computation,
//     deterministic stepping and reachability,
//   - the embedded rule tables for the all-sensors machine and its
//     sensor-failure variants, derived by predicate pruning,
//   - exhaustive conflict detection over a finite snapshot grid.
//
// Stepping is deterministic: when several rules are enabled the first one in
// table order fires and the rest are reported as conflicts.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "microctl/error.hpp"
#include "microctl/phone_sim.hpp"

namespace microctl {

enum class ContextState : std::uint8_t {
  General,
  Outdoor,
  Jogging,
  Driving,
  DrivingFast,
  Home,
  Office,
  Meeting,
  Sync,
};

inline constexpr std::array<ContextState, 9> kAllContextStates = {
    ContextState::General, ContextState::Outdoor,  ContextState::Jogging,
    ContextState::Driving, ContextState::DrivingFast, ContextState::Home,
    ContextState::Office,  ContextState::Meeting,  ContextState::Sync,
};

inline const char* to_string(ContextState s) {
  switch (s) {
    case ContextState::General: return "General";
    case ContextState::Outdoor: return "Outdoor";
    case ContextState::Jogging: return "Jogging";
    case ContextState::Driving: return "Driving";
    case ContextState::DrivingFast: return "DrivingFast";
    case ContextState::Home: return "Home";
    case ContextState::Office: return "Office";
    case ContextState::Meeting: return "Meeting";
    case ContextState::Sync: return "Sync";
  }
  return "unknown";
}

inline std::optional<ContextState> context_state_from_string(std::string_view s) {
  for (ContextState c : kAllContextStates) {
    if (s == to_string(c)) return c;
  }
  return std::nullopt;
}

enum class TimeRef : std::uint8_t { meeting_start, meeting_end };

inline const char* to_string(TimeRef r) {
  return r == TimeRef::meeting_start ? "meeting_start" : "meeting_end";
}

// ---------------------------------------------------------------------------
// Predicate AST
// ---------------------------------------------------------------------------

struct GpsIsValid {
  bool operator==(const GpsIsValid&) const = default;
};
struct GpsLocationIs {
  Place place;
  bool operator==(const GpsLocationIs&) const = default;
};
struct GpsSpeedGt {
  int threshold_kmh;  // strict comparison
  bool operator==(const GpsSpeedGt&) const = default;
};
struct BtConnected {
  std::string device;
  bool operator==(const BtConnected&) const = default;
};
struct BtCountGte {
  int count;
  bool operator==(const BtCountGte&) const = default;
};
struct TimeGte {
  TimeRef ref;
  bool operator==(const TimeGte&) const = default;
};
// Negated reference to another rule of the same machine ("!ActivateOutdoor").
// Resolved by inlining when the machine is compiled.
struct RuleNegation {
  std::string rule_name;
  bool operator==(const RuleNegation&) const = default;
};

// Immutable predicate tree with value semantics; copies share nodes.
class Predicate {
 public:
  struct Not;
  struct And;
  struct Or;
  struct Node;

  explicit Predicate(Node node);

  const Node& node() const { return *node_; }

  friend bool operator==(const Predicate& a, const Predicate& b);

 private:
  std::shared_ptr<const Node> node_;
};

struct Predicate::Not {
  Predicate child;
  bool operator==(const Not&) const = default;
};
struct Predicate::And {
  std::vector<Predicate> terms;  // two or more
  bool operator==(const And&) const = default;
};
struct Predicate::Or {
  std::vector<Predicate> terms;  // two or more
  bool operator==(const Or&) const = default;
};

struct Predicate::Node {
  std::variant<GpsIsValid, GpsLocationIs, GpsSpeedGt, BtConnected, BtCountGte, TimeGte,
               RuleNegation, Not, And, Or>
      v;
};

inline Predicate::Predicate(Node node)
    : node_(std::make_shared<const Node>(std::move(node))) {}

inline bool operator==(const Predicate& a, const Predicate& b) {
  if (a.node_ == b.node_) return true;
  return a.node_->v == b.node_->v;
}

namespace pred {

inline Predicate gps_valid() { return Predicate({GpsIsValid{}}); }
inline Predicate location_is(Place p) { return Predicate({GpsLocationIs{p}}); }
inline Predicate speed_gt(int kmh) { return Predicate({GpsSpeedGt{kmh}}); }
inline Predicate bt(std::string device) { return Predicate({BtConnected{std::move(device)}}); }
inline Predicate bt_count_gte(int n) { return Predicate({BtCountGte{n}}); }
inline Predicate time_gte(TimeRef r) { return Predicate({TimeGte{r}}); }
inline Predicate rule_negation(std::string name) {
  return Predicate({RuleNegation{std::move(name)}});
}
inline Predicate not_(Predicate p) { return Predicate({Predicate::Not{std::move(p)}}); }
inline Predicate all_of(std::vector<Predicate> terms) {
  return Predicate({Predicate::And{std::move(terms)}});
}
inline Predicate any_of(std::vector<Predicate> terms) {
  return Predicate({Predicate::Or{std::move(terms)}});
}

}  // namespace pred

// Evaluate a predicate with no unresolved rule references against a snapshot.
inline bool eval_predicate(const Predicate& p, const SensorSnapshot& s) {
  struct Visitor {
    const SensorSnapshot& s;
    bool operator()(const GpsIsValid&) const { return s.gps.valid; }
    bool operator()(const GpsLocationIs& a) const { return s.gps.location == a.place; }
    bool operator()(const GpsSpeedGt& a) const { return s.gps.speed_kmh > a.threshold_kmh; }
    bool operator()(const BtConnected& a) const { return s.bluetooth.count(a.device) > 0; }
    bool operator()(const BtCountGte& a) const { return s.bt_count() >= a.count; }
    bool operator()(const TimeGte& a) const {
      return s.time >= (a.ref == TimeRef::meeting_start ? s.meeting_start : s.meeting_end);
    }
    [[noreturn]] bool operator()(const RuleNegation& a) const {
      raise(Errc::unresolved_rule_ref, "'" + a.rule_name + "' in an evaluated predicate");
    }
    bool operator()(const Predicate::Not& a) const { return !eval_predicate(a.child, s); }
    bool operator()(const Predicate::And& a) const {
      for (const Predicate& t : a.terms) {
        if (!eval_predicate(t, s)) return false;
      }
      return true;
    }
    bool operator()(const Predicate::Or& a) const {
      for (const Predicate& t : a.terms) {
        if (eval_predicate(t, s)) return true;
      }
      return false;
    }
  };
  return std::visit(Visitor{s}, p.node().v);
}

// ---------------------------------------------------------------------------
// Rules and machine definitions
// ---------------------------------------------------------------------------

struct Output {
  int volume = 50;
  Vibration vibration = Vibration::off;

  bool operator==(const Output&) const = default;
};

struct Rule {
  char id;           // single letter, unique within a machine
  std::string name;  // unique within a machine
  std::vector<ContextState> from;
  ContextState to;
  Predicate predicate;
  Output output;

  bool operator==(const Rule&) const = default;
};

struct AfsmDef {
  std::string name;
  ContextState initial = ContextState::General;
  std::vector<Rule> rules;  // table order; earlier rules win ties

  bool operator==(const AfsmDef&) const = default;
};

struct StepResult {
  ContextState new_state;
  std::optional<char> fired;
  std::optional<Output> output;
  std::vector<char> conflicts;  // enabled but not fired, table order
};

// A machine definition with every RuleNegation inlined, ready to evaluate.
class Afsm {
 public:
  explicit Afsm(AfsmDef def) : def_(std::move(def)) { resolve_all(); }

  const AfsmDef& def() const { return def_; }
  const Predicate& resolved_predicate(std::size_t rule_index) const {
    return resolved_.at(rule_index);
  }

  // Every rule applicable in `state` whose guard holds, in table order.
  std::vector<const Rule*> enabled_rules(ContextState state, const SensorSnapshot& s) const {
    std::vector<const Rule*> out;
    for (std::size_t i = 0; i < def_.rules.size(); ++i) {
      const Rule& r = def_.rules[i];
      bool applicable = std::find(r.from.begin(), r.from.end(), state) != r.from.end();
      if (applicable && eval_predicate(resolved_[i], s)) out.push_back(&r);
    }
    return out;
  }

  StepResult step(ContextState state, const SensorSnapshot& s) const {
    std::vector<const Rule*> enabled = enabled_rules(state, s);
    if (enabled.empty()) return StepResult{state, std::nullopt, std::nullopt, {}};
    const Rule* winner = enabled.front();
    StepResult res{winner->to, winner->id, winner->output, {}};
    for (std::size_t i = 1; i < enabled.size(); ++i) res.conflicts.push_back(enabled[i]->id);
    return res;
  }

  // States reachable from the initial state treating rules as plain edges
  // (guards ignored).
  std::set<ContextState> reachable_states() const {
    std::set<ContextState> seen{def_.initial};
    std::vector<ContextState> frontier{def_.initial};
    while (!frontier.empty()) {
      ContextState cur = frontier.back();
      frontier.pop_back();
      for (const Rule& r : def_.rules) {
        if (std::find(r.from.begin(), r.from.end(), cur) == r.from.end()) continue;
        if (seen.insert(r.to).second) frontier.push_back(r.to);
      }
    }
    return seen;
  }

 private:
  void resolve_all() {
    std::map<std::string, std::size_t> by_name;
    for (std::size_t i = 0; i < def_.rules.size(); ++i) by_name[def_.rules[i].name] = i;

    std::vector<int> state(def_.rules.size(), 0);  // 0 new, 1 visiting, 2 done
    std::vector<std::optional<Predicate>> memo(def_.rules.size());

    // Inline rule negations depth-first, detecting reference cycles.
    auto resolve_rule = [&](auto&& self, std::size_t i) -> Predicate {
      if (memo[i]) return *memo[i];
      if (state[i] == 1) {
        raise(Errc::cyclic_rule_ref, "cycle through rule '" + def_.rules[i].name + "'");
      }
      state[i] = 1;
      Predicate resolved = resolve_pred(self, by_name, def_.rules[i].predicate);
      state[i] = 2;
      memo[i] = resolved;
      return resolved;
    };

    resolved_.reserve(def_.rules.size());
    for (std::size_t i = 0; i < def_.rules.size(); ++i) resolved_.push_back(resolve_rule(resolve_rule, i));
  }

  template <typename Self>
  Predicate resolve_pred(Self&& resolve_rule, const std::map<std::string, std::size_t>& by_name,
                         const Predicate& p) {
    const auto& v = p.node().v;
    if (const auto* ref = std::get_if<RuleNegation>(&v)) {
      auto it = by_name.find(ref->rule_name);
      if (it == by_name.end()) {
        raise(Errc::unresolved_rule_ref,
              "rule '" + ref->rule_name + "' referenced by a negation does not exist");
      }
      return pred::not_(resolve_rule(resolve_rule, it->second));
    }
    if (const auto* n = std::get_if<Predicate::Not>(&v)) {
      return pred::not_(resolve_pred(resolve_rule, by_name, n->child));
    }
    if (const auto* a = std::get_if<Predicate::And>(&v)) {
      std::vector<Predicate> terms;
      terms.reserve(a->terms.size());
      for (const Predicate& t : a->terms) terms.push_back(resolve_pred(resolve_rule, by_name, t));
      return pred::all_of(std::move(terms));
    }
    if (const auto* o = std::get_if<Predicate::Or>(&v)) {
      std::vector<Predicate> terms;
      terms.reserve(o->terms.size());
      for (const Predicate& t : o->terms) terms.push_back(resolve_pred(resolve_rule, by_name, t));
      return pred::any_of(std::move(terms));
    }
    return p;  // sensor atom
  }

  AfsmDef def_;
  std::vector<Predicate> resolved_;
};

// ---------------------------------------------------------------------------
// Embedded rule tables
// ---------------------------------------------------------------------------

inline constexpr const char* kDeviceCarHandsfree = "car_handsfree";
inline constexpr const char* kDeviceHomePc = "home_pc";
inline constexpr const char* kDeviceOfficePc = "office_pc";

// Rule table of the full-sensor context manager: sixteen rules, a..p.
inline const AfsmDef& all_sensors_table() {
  using namespace pred;
  using CS = ContextState;
  static const AfsmDef def = [] {
    AfsmDef d;
    d.name = "ContextManagerAllSensors";
    d.initial = CS::General;
    d.rules = {
        {'a', "ActivateOutdoor", {CS::General}, CS::Outdoor,
         all_of({gps_valid(), not_(location_is(Place::home)), not_(location_is(Place::office))}),
         {100, Vibration::off}},
        {'b', "DesactivateOutdoor", {CS::Outdoor}, CS::General,
         rule_negation("ActivateOutdoor"), {50, Vibration::off}},
        {'c', "ActivateJogging", {CS::Outdoor}, CS::Jogging,
         all_of({gps_valid(), speed_gt(5)}), {25, Vibration::off}},
        {'d', "DesactivateJogging", {CS::Jogging}, CS::Outdoor,
         rule_negation("ActivateJogging"), {100, Vibration::off}},
        {'e', "ActivateDriving", {CS::General, CS::Home, CS::Office, CS::Outdoor}, CS::Driving,
         bt(kDeviceCarHandsfree), {75, Vibration::off}},
        {'f', "DesactivateDriving", {CS::Driving}, CS::General,
         rule_negation("ActivateDriving"), {50, Vibration::off}},
        {'g', "ActivateDrivingFast", {CS::Driving}, CS::DrivingFast,
         all_of({gps_valid(), speed_gt(70)}), {0, Vibration::off}},
        {'h', "DesactivateDrivingFast", {CS::DrivingFast}, CS::Driving,
         rule_negation("ActivateDrivingFast"), {75, Vibration::off}},
        {'i', "ActivateHome", {CS::General}, CS::Home,
         any_of({bt(kDeviceHomePc), all_of({gps_valid(), location_is(Place::home)})}),
         {100, Vibration::off}},
        {'j', "DesactivateHome", {CS::Home}, CS::General,
         rule_negation("ActivateHome"), {50, Vibration::off}},
        {'k', "ActivateOffice", {CS::General}, CS::Office,
         any_of({bt(kDeviceOfficePc), all_of({gps_valid(), location_is(Place::office)})}),
         {0, Vibration::on}},
        {'l', "DesactivateOffice", {CS::Office}, CS::General,
         rule_negation("ActivateOffice"), {50, Vibration::off}},
        {'m', "ActivateMeeting", {CS::Office}, CS::Meeting,
         all_of({time_gte(TimeRef::meeting_start), bt_count_gte(3)}), {0, Vibration::off}},
        {'n', "DesactivateMeeting", {CS::Meeting}, CS::Office,
         time_gte(TimeRef::meeting_end), {0, Vibration::on}},
        {'o', "ActivateSync", {CS::General}, CS::Sync,
         any_of({bt(kDeviceHomePc), bt(kDeviceOfficePc)}), {100, Vibration::off}},
        {'p', "DesactivateSync", {CS::Sync}, CS::General,
         rule_negation("ActivateSync"), {50, Vibration::off}},
    };
    return d;
  }();
  return def;
}

// Rule table of the GPS-failure context manager: ten rules. Relative to the
// full table, the purely GPS-guarded rules are gone and the GPS disjuncts of
// the home/office rules are removed, which is also reflected in their names.
inline const AfsmDef& no_gps_table() {
  using namespace pred;
  using CS = ContextState;
  static const AfsmDef def = [] {
    AfsmDef d;
    d.name = "ContextManagerNoGPS";
    d.initial = CS::General;
    d.rules = {
        {'e', "ActivateDriving", {CS::General, CS::Home, CS::Office, CS::Outdoor}, CS::Driving,
         bt(kDeviceCarHandsfree), {75, Vibration::off}},
        {'f', "DesactivateDriving", {CS::Driving}, CS::General,
         rule_negation("ActivateDriving"), {50, Vibration::off}},
        {'i', "ActivateHomeBT", {CS::General}, CS::Home, bt(kDeviceHomePc), {100, Vibration::off}},
        {'j', "DesactivateHomeBT", {CS::Home}, CS::General,
         rule_negation("ActivateHomeBT"), {50, Vibration::off}},
        {'k', "ActivateOfficeBT", {CS::General}, CS::Office, bt(kDeviceOfficePc),
         {0, Vibration::on}},
        {'l', "DesactivateOfficeBT", {CS::Office}, CS::General,
         rule_negation("ActivateOfficeBT"), {50, Vibration::off}},
        {'m', "ActivateMeeting", {CS::Office}, CS::Meeting,
         all_of({time_gte(TimeRef::meeting_start), bt_count_gte(3)}), {0, Vibration::off}},
        {'n', "DesactivateMeeting", {CS::Meeting}, CS::Office,
         time_gte(TimeRef::meeting_end), {0, Vibration::on}},
        {'o', "ActivateSync", {CS::General}, CS::Sync,
         any_of({bt(kDeviceHomePc), bt(kDeviceOfficePc)}), {100, Vibration::off}},
        {'p', "DesactivateSync", {CS::Sync}, CS::General,
         rule_negation("ActivateSync"), {50, Vibration::off}},
    };
    return d;
  }();
  return def;
}

// ---------------------------------------------------------------------------
// Variant derivation by predicate pruning
// ---------------------------------------------------------------------------

namespace detail {

enum class AtomFamily { gps, bluetooth, time, rule_ref };

inline AtomFamily atom_family(const Predicate::Node& n) {
  if (std::holds_alternative<GpsIsValid>(n.v) || std::holds_alternative<GpsLocationIs>(n.v) ||
      std::holds_alternative<GpsSpeedGt>(n.v)) {
    return AtomFamily::gps;
  }
  if (std::holds_alternative<BtConnected>(n.v) || std::holds_alternative<BtCountGte>(n.v)) {
    return AtomFamily::bluetooth;
  }
  if (std::holds_alternative<TimeGte>(n.v)) return AtomFamily::time;
  return AtomFamily::rule_ref;
}

inline void collect_atom_families(const Predicate& p, std::set<AtomFamily>& out) {
  const auto& v = p.node().v;
  if (const auto* n = std::get_if<Predicate::Not>(&v)) {
    collect_atom_families(n->child, out);
  } else if (const auto* a = std::get_if<Predicate::And>(&v)) {
    for (const Predicate& t : a->terms) collect_atom_families(t, out);
  } else if (const auto* o = std::get_if<Predicate::Or>(&v)) {
    for (const Predicate& t : o->terms) collect_atom_families(t, out);
  } else {
    out.insert(atom_family(p.node()));
  }
}

// Remove every use of a failed sensor from a predicate. An AND that needs a
// failed atom dies with the atom; an OR merely loses the failed disjuncts.
// Rule negations are kept when the referenced rule survives (the caller
// supplies that set) and fixed up to the referenced rule's new name later.
inline std::optional<Predicate> prune_predicate(const Predicate& p, bool gps_ok, bool bt_ok,
                                                const std::set<std::string>& surviving_rules) {
  const auto& v = p.node().v;
  if (const auto* ref = std::get_if<RuleNegation>(&v)) {
    if (surviving_rules.count(ref->rule_name) == 0) return std::nullopt;
    return p;
  }
  if (const auto* n = std::get_if<Predicate::Not>(&v)) {
    auto child = prune_predicate(n->child, gps_ok, bt_ok, surviving_rules);
    if (!child) return std::nullopt;
    return pred::not_(std::move(*child));
  }
  if (const auto* a = std::get_if<Predicate::And>(&v)) {
    std::vector<Predicate> terms;
    for (const Predicate& t : a->terms) {
      auto kept = prune_predicate(t, gps_ok, bt_ok, surviving_rules);
      if (!kept) return std::nullopt;
      terms.push_back(std::move(*kept));
    }
    if (terms.size() == 1) return terms.front();
    return pred::all_of(std::move(terms));
  }
  if (const auto* o = std::get_if<Predicate::Or>(&v)) {
    std::vector<Predicate> terms;
    for (const Predicate& t : o->terms) {
      auto kept = prune_predicate(t, gps_ok, bt_ok, surviving_rules);
      if (kept) terms.push_back(std::move(*kept));
    }
    if (terms.empty()) return std::nullopt;
    if (terms.size() == 1) return terms.front();
    return pred::any_of(std::move(terms));
  }
  AtomFamily fam = atom_family(p.node());
  if (fam == AtomFamily::gps && !gps_ok) return std::nullopt;
  if (fam == AtomFamily::bluetooth && !bt_ok) return std::nullopt;
  return p;
}

// Name suffix for a rule whose predicate was reduced: tag it with the sensor
// family that remains, the way the degraded tables name their rules.
inline std::string remaining_family_suffix(const Predicate& p) {
  std::set<AtomFamily> fams;
  collect_atom_families(p, fams);
  if (fams == std::set<AtomFamily>{AtomFamily::bluetooth}) return "BT";
  if (fams == std::set<AtomFamily>{AtomFamily::gps}) return "GPS";
  if (fams == std::set<AtomFamily>{AtomFamily::time}) return "Time";
  return "";
}

inline Predicate rename_rule_refs(const Predicate& p,
                                  const std::map<std::string, std::string>& renames) {
  const auto& v = p.node().v;
  if (const auto* ref = std::get_if<RuleNegation>(&v)) {
    auto it = renames.find(ref->rule_name);
    return it == renames.end() ? p : pred::rule_negation(it->second);
  }
  if (const auto* n = std::get_if<Predicate::Not>(&v)) {
    return pred::not_(rename_rule_refs(n->child, renames));
  }
  if (const auto* a = std::get_if<Predicate::And>(&v)) {
    std::vector<Predicate> terms;
    for (const Predicate& t : a->terms) terms.push_back(rename_rule_refs(t, renames));
    return pred::all_of(std::move(terms));
  }
  if (const auto* o = std::get_if<Predicate::Or>(&v)) {
    std::vector<Predicate> terms;
    for (const Predicate& t : o->terms) terms.push_back(rename_rule_refs(t, renames));
    return pred::any_of(std::move(terms));
  }
  return p;
}

}  // namespace detail

// Derive the rule table for a given sensor-health combination from the full
// table. A rule is dropped when firing it would need a failed sensor; OR
// predicates lose their failed disjuncts instead. Rules that reference a
// dropped rule are dropped too (to a fixpoint), and reduced rules are renamed
// after the sensor family that remains, together with their negation partners.
inline AfsmDef build_variant(bool gps_ok, bool bt_ok) {
  const AfsmDef& base = all_sensors_table();
  if (gps_ok && bt_ok) return base;

  // Fixpoint over the survivor set: a rule survives iff its predicate prunes
  // to something non-empty given the other survivors.
  std::set<std::string> survivors;
  for (const Rule& r : base.rules) survivors.insert(r.name);
  for (bool changed = true; changed;) {
    changed = false;
    for (const Rule& r : base.rules) {
      if (survivors.count(r.name) == 0) continue;
      if (!detail::prune_predicate(r.predicate, gps_ok, bt_ok, survivors)) {
        survivors.erase(r.name);
        changed = true;
      }
    }
  }

  // Prune predicates and decide new names for rules that were reduced.
  struct Pruned {
    Rule rule;
    bool reduced;
  };
  std::vector<Pruned> kept;
  std::map<std::string, std::string> renames;
  for (const Rule& r : base.rules) {
    if (survivors.count(r.name) == 0) continue;
    auto pruned = detail::prune_predicate(r.predicate, gps_ok, bt_ok, survivors);
    Rule out = r;
    out.predicate = *pruned;
    bool reduced = !(out.predicate == r.predicate);
    if (reduced) {
      std::string suffix = detail::remaining_family_suffix(out.predicate);
      if (!suffix.empty()) {
        renames[r.name] = r.name + suffix;
        out.name = r.name + suffix;
      }
    }
    kept.push_back({std::move(out), reduced});
  }

  // Mirror each rename onto the Desactivate partner and fix up references.
  for (Pruned& p : kept) {
    const auto& v = p.rule.predicate.node().v;
    if (const auto* ref = std::get_if<RuleNegation>(&v)) {
      auto it = renames.find(ref->rule_name);
      if (it != renames.end() && p.rule.name.rfind("Desactivate", 0) == 0 &&
          it->first.rfind("Activate", 0) == 0) {
        std::string stem = it->first.substr(std::string("Activate").size());
        std::string suffix = it->second.substr(it->first.size());
        if (p.rule.name == "Desactivate" + stem) p.rule.name = "Desactivate" + stem + suffix;
      }
    }
    p.rule.predicate = detail::rename_rule_refs(p.rule.predicate, renames);
  }

  AfsmDef out;
  if (!gps_ok && bt_ok) {
    out.name = "ContextManagerNoGPS";
  } else if (gps_ok && !bt_ok) {
    out.name = "ContextManagerNoBluetooth";
  } else {
    out.name = "ContextManagerNoGPSNoBluetooth";
  }
  out.initial = base.initial;
  for (Pruned& p : kept) out.rules.push_back(std::move(p.rule));
  return out;
}

// ---------------------------------------------------------------------------
// Conflict detection
// ---------------------------------------------------------------------------

struct ConflictFinding {
  ContextState state;
  std::vector<char> rules;  // enabled together, table order
  SensorSnapshot witness;
};

// Snapshot grid covering one value on each side of every threshold used by
// the rule tables.
inline std::vector<SensorSnapshot> conflict_grid() {
  constexpr int kMeetingStart = 540;
  constexpr int kMeetingEnd = 600;
  const std::array<Place, 3> places = {Place::home, Place::office, Place::other};
  const std::array<bool, 2> valids = {true, false};
  const std::array<int, 3> speeds = {0, 6, 71};
  const std::array<const char*, 3> devices = {kDeviceCarHandsfree, kDeviceHomePc, kDeviceOfficePc};
  const std::array<int, 2> pads = {0, 3};
  const std::array<int, 3> times = {539, 540, 600};

  std::vector<SensorSnapshot> grid;
  for (Place place : places) {
    for (bool valid : valids) {
      for (int speed : speeds) {
        for (unsigned mask = 0; mask < 8; ++mask) {
          for (int pad : pads) {
            for (int time : times) {
              SensorSnapshot s;
              s.gps = GpsReading{valid, place, static_cast<double>(speed), 0.0, 0.0};
              for (unsigned bit = 0; bit < devices.size(); ++bit) {
                if (mask & (1u << bit)) s.bluetooth.insert(devices[bit]);
              }
              for (int aux = 0; s.bt_count() < pad; ++aux) {
                s.bluetooth.insert("aux_" + std::to_string(aux));
              }
              s.time = time;
              s.meeting_start = kMeetingStart;
              s.meeting_end = kMeetingEnd;
              grid.push_back(std::move(s));
            }
          }
        }
      }
    }
  }
  return grid;
}

// Enumerate every (state, enabled-rule set) with two or more enabled rules
// over the grid, keeping the first witness snapshot found for each set.
inline std::vector<ConflictFinding> detect_conflicts(const Afsm& machine) {
  std::vector<ConflictFinding> findings;
  std::set<std::pair<ContextState, std::vector<char>>> seen;
  for (const SensorSnapshot& s : conflict_grid()) {
    for (ContextState state : kAllContextStates) {
      std::vector<const Rule*> enabled = machine.enabled_rules(state, s);
      if (enabled.size() < 2) continue;
      std::vector<char> ids;
      ids.reserve(enabled.size());
      for (const Rule* r : enabled) ids.push_back(r->id);
      if (seen.insert({state, ids}).second) findings.push_back({state, std::move(ids), s});
    }
  }
  return findings;
}

}  // namespace microctl

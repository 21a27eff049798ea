#pragma once

// Text form of a rule table, one record per rule:
//
//   afsm ContextManagerAllSensors
//   rule a ActivateOutdoor General -> Outdoor | GPS.isValid() && !GPS.location()=home | 100 OFF
//
// Predicates use the surface syntax of the tables: atoms GPS.isValid(),
// GPS.location()=<place>, GPS.speed()><n>, BT=<device>, BT.count()>=<n>,
// Time>=<meeting_start|meeting_end>, a negated rule name (!ActivateOutdoor),
// and the connectives !, &&, || with parentheses. '#' starts a comment.

#include <cctype>
#include <cstddef>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "microctl/afsm.hpp"
#include "microctl/error.hpp"

namespace microctl {

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

namespace detail {

inline void print_predicate(std::ostream& os, const Predicate& p);

// Any nested connective is parenthesized, the way the tables print them.
inline void print_child(std::ostream& os, const Predicate& p) {
  const auto& v = p.node().v;
  bool parens = std::holds_alternative<Predicate::And>(v) ||
                std::holds_alternative<Predicate::Or>(v);
  if (parens) os << "(";
  print_predicate(os, p);
  if (parens) os << ")";
}

inline void print_predicate(std::ostream& os, const Predicate& p) {
  const auto& v = p.node().v;
  if (std::holds_alternative<GpsIsValid>(v)) {
    os << "GPS.isValid()";
  } else if (const auto* loc = std::get_if<GpsLocationIs>(&v)) {
    os << "GPS.location()=" << to_string(loc->place);
  } else if (const auto* sp = std::get_if<GpsSpeedGt>(&v)) {
    os << "GPS.speed()>" << sp->threshold_kmh;
  } else if (const auto* bt = std::get_if<BtConnected>(&v)) {
    os << "BT=" << bt->device;
  } else if (const auto* bc = std::get_if<BtCountGte>(&v)) {
    os << "BT.count()>=" << bc->count;
  } else if (const auto* tg = std::get_if<TimeGte>(&v)) {
    os << "Time>=" << to_string(tg->ref);
  } else if (const auto* ref = std::get_if<RuleNegation>(&v)) {
    os << "!" << ref->rule_name;
  } else if (const auto* n = std::get_if<Predicate::Not>(&v)) {
    os << "!";
    print_child(os, n->child);
  } else if (const auto* a = std::get_if<Predicate::And>(&v)) {
    for (std::size_t i = 0; i < a->terms.size(); ++i) {
      if (i) os << " && ";
      print_child(os, a->terms[i]);
    }
  } else if (const auto* o = std::get_if<Predicate::Or>(&v)) {
    for (std::size_t i = 0; i < o->terms.size(); ++i) {
      if (i) os << " || ";
      print_child(os, o->terms[i]);
    }
  }
}

}  // namespace detail

inline std::string predicate_to_string(const Predicate& p) {
  std::ostringstream os;
  detail::print_predicate(os, p);
  return os.str();
}

inline std::string rule_to_line(const Rule& r) {
  std::ostringstream os;
  os << "rule " << r.id << " " << r.name << " ";
  for (std::size_t i = 0; i < r.from.size(); ++i) {
    if (i) os << ",";
    os << to_string(r.from[i]);
  }
  os << " -> " << to_string(r.to) << " | " << predicate_to_string(r.predicate) << " | "
     << r.output.volume << " " << to_string(r.output.vibration);
  return os.str();
}

inline std::string to_text(const AfsmDef& def) {
  std::ostringstream os;
  os << "afsm " << def.name << "\n";
  for (const Rule& r : def.rules) os << rule_to_line(r) << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace detail {

class PredicateScanner {
 public:
  explicit PredicateScanner(std::string_view text) : text_(text) {}

  Predicate parse() {
    Predicate p = parse_or();
    skip_ws();
    if (pos_ != text_.size()) fail("trailing input after predicate");
    return p;
  }

 private:
  Predicate parse_or() {
    std::vector<Predicate> terms;
    terms.push_back(parse_and());
    while (try_consume("||")) terms.push_back(parse_and());
    if (terms.size() == 1) return terms.front();
    return pred::any_of(std::move(terms));
  }

  Predicate parse_and() {
    std::vector<Predicate> terms;
    terms.push_back(parse_unary());
    while (try_consume("&&")) terms.push_back(parse_unary());
    if (terms.size() == 1) return terms.front();
    return pred::all_of(std::move(terms));
  }

  Predicate parse_unary() {
    skip_ws();
    if (try_consume("!")) {
      skip_ws();
      // "!Name" negates a rule; any other operand is plain negation.
      if (pos_ < text_.size() && (std::isalpha(ch()) || ch() == '_') && !atom_ahead()) {
        return pred::rule_negation(parse_ident());
      }
      return pred::not_(parse_unary());
    }
    return parse_primary();
  }

  Predicate parse_primary() {
    skip_ws();
    if (try_consume("(")) {
      Predicate p = parse_or();
      skip_ws();
      if (!try_consume(")")) fail("expected ')'");
      return p;
    }
    return parse_atom();
  }

  Predicate parse_atom() {
    skip_ws();
    if (try_consume("GPS.")) {
      if (try_consume("isValid()")) return pred::gps_valid();
      if (try_consume("location()")) {
        expect("=");
        std::string place = parse_ident();
        auto p = place_from_string(place);
        if (!p) fail("unknown place '" + place + "'");
        return pred::location_is(*p);
      }
      if (try_consume("speed()")) {
        expect(">");
        return pred::speed_gt(parse_int());
      }
      fail("unknown GPS atom");
    }
    if (try_consume("BT.")) {
      if (try_consume("count()")) {
        expect(">=");
        return pred::bt_count_gte(parse_int());
      }
      fail("unknown BT atom");
    }
    if (try_consume("BT")) {
      expect("=");
      return pred::bt(parse_ident());
    }
    if (try_consume("Time")) {
      expect(">=");
      std::string ref = parse_ident();
      if (ref == "meeting_start") return pred::time_gte(TimeRef::meeting_start);
      if (ref == "meeting_end") return pred::time_gte(TimeRef::meeting_end);
      fail("unknown time reference '" + ref + "'");
    }
    fail("expected a predicate atom");
  }

  // True when the upcoming identifier-ish text is a sensor atom, not a rule
  // name. Sensor atoms all start with one of these prefixes.
  bool atom_ahead() const {
    std::string_view rest = text_.substr(pos_);
    return rest.rfind("GPS.", 0) == 0 || rest.rfind("BT=", 0) == 0 ||
           rest.rfind("BT.", 0) == 0 || rest.rfind("BT ", 0) == 0 ||
           rest.rfind("Time", 0) == 0;
  }

  std::string parse_ident() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalnum(ch()) || ch() == '_')) ++pos_;
    if (pos_ == start) fail("expected an identifier");
    return std::string(text_.substr(start, pos_ - start));
  }

  int parse_int() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(ch())) ++pos_;
    if (pos_ == start) fail("expected a number");
    return std::stoi(std::string(text_.substr(start, pos_ - start)));
  }

  void expect(std::string_view tok) {
    if (!try_consume(tok)) fail("expected '" + std::string(tok) + "'");
  }

  bool try_consume(std::string_view tok) {
    skip_ws();
    if (text_.substr(pos_).rfind(tok, 0) == 0) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(ch())) ++pos_;
  }

  unsigned char ch() const { return static_cast<unsigned char>(text_[pos_]); }

  [[noreturn]] void fail(const std::string& what) const {
    raise(Errc::rules_parse_error,
          what + " at offset " + std::to_string(pos_) + " in \"" + std::string(text_) + "\"");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

inline std::vector<std::string> split_fields(std::string_view line, std::string_view sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t at = line.find(sep, start);
    if (at == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      return out;
    }
    out.emplace_back(line.substr(start, at - start));
    start = at + sep.size();
  }
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace detail

inline Predicate parse_predicate(std::string_view text) {
  return detail::PredicateScanner(text).parse();
}

inline AfsmDef parse_rules_text(const std::string& text) {
  AfsmDef def;
  def.initial = ContextState::General;
  bool have_name = false;

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  auto fail = [&](const std::string& what) -> void {
    raise(Errc::rules_parse_error, "line " + std::to_string(line_no) + ": " + what);
  };

  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;

    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "afsm") {
      if (have_name) fail("duplicate 'afsm' header");
      ls >> def.name;
      if (def.name.empty()) fail("missing machine name");
      have_name = true;
      continue;
    }
    if (word != "rule") fail("expected 'rule' or 'afsm', got '" + word + "'");
    if (!have_name) fail("'rule' before 'afsm' header");

    // rule <id> <name> <from,csv> -> <to> | <predicate> | <volume> <ON|OFF>
    // Fields split on " | "; a predicate's "||" never matches that.
    auto pipes = detail::split_fields(line, " | ");
    if (pipes.size() != 3) fail("expected two ' | ' separators");

    std::istringstream head(pipes[0]);
    std::string kw, id_str, name, from_csv, arrow, to_str;
    head >> kw >> id_str >> name >> from_csv >> arrow >> to_str;
    if (id_str.size() != 1) fail("rule id must be a single letter");
    if (arrow != "->") fail("expected '->'");
    auto to = context_state_from_string(to_str);
    if (!to) fail("unknown state '" + to_str + "'");

    std::vector<ContextState> from;
    for (const std::string& f : detail::split_fields(from_csv, ",")) {
      auto st = context_state_from_string(detail::trim(f));
      if (!st) fail("unknown state '" + f + "'");
      from.push_back(*st);
    }
    if (from.empty()) fail("empty from-state list");

    Predicate predicate = [&]() -> Predicate {
      try {
        return parse_predicate(pipes[1]);
      } catch (const Error& e) {
        raise(Errc::rules_parse_error, "line " + std::to_string(line_no) + ": " + e.what());
      }
    }();

    std::istringstream tail(pipes[2]);
    int volume = -1;
    std::string vib_str;
    tail >> volume >> vib_str;
    if (volume < 0 || volume > 100) fail("volume out of range");
    auto vib = vibration_from_string(vib_str);
    if (!vib) fail("vibration must be ON or OFF");

    def.rules.push_back(Rule{id_str[0], name, std::move(from), *to, std::move(predicate),
                             Output{volume, *vib}});
  }
  if (!have_name) fail("missing 'afsm' header");
  return def;
}

// ---------------------------------------------------------------------------
// Diff against an embedded table
// ---------------------------------------------------------------------------

struct TableDiff {
  int matched = 0;
  int expected_total = 0;
  std::vector<std::string> problems;  // one line per mismatch / missing / extra

  bool clean() const { return problems.empty(); }
};

inline TableDiff diff_tables(const AfsmDef& file, const AfsmDef& embedded) {
  TableDiff diff;
  diff.expected_total = static_cast<int>(embedded.rules.size());

  std::map<char, const Rule*> file_by_id;
  for (const Rule& r : file.rules) file_by_id[r.id] = &r;

  for (const Rule& want : embedded.rules) {
    auto it = file_by_id.find(want.id);
    if (it == file_by_id.end()) {
      diff.problems.push_back(std::string("missing rule ") + want.id + " (" + want.name + ")");
      continue;
    }
    const Rule& got = *it->second;
    std::vector<std::string> fields;
    if (got.name != want.name) fields.push_back("name");
    if (got.from != want.from) fields.push_back("from");
    if (got.to != want.to) fields.push_back("to");
    if (!(got.predicate == want.predicate)) fields.push_back("predicate");
    if (!(got.output == want.output)) fields.push_back("output");
    if (fields.empty()) {
      ++diff.matched;
    } else {
      std::string line = std::string("rule ") + want.id + " differs in";
      for (const std::string& f : fields) line += " " + f;
      diff.problems.push_back(line);
    }
    file_by_id.erase(it);
  }
  for (const auto& [id, rule] : file_by_id) {
    diff.problems.push_back(std::string("unexpected extra rule ") + id + " (" + rule->name + ")");
  }
  return diff;
}

}  // namespace microctl

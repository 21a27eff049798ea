#pragma once

// Scenario files: a tick count plus timed injected events, one per line.
//
//   # comment
//   ticks 8
//   0 calendar 540 600
//   1 bt_connect car_handsfree
//   2 gps_fix valid other 80 51.5 -0.1
//   3 fail gps
//   4 restore gps
//   5 clock 545
//   6 bt_disconnect car_handsfree
//
// Events must be sorted by tick (stable within a tick, file order preserved)
// and lie inside [0, ticks).

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "microctl/error.hpp"
#include "microctl/phone_sim.hpp"

namespace microctl {

struct ScenarioEvent {
  std::uint64_t tick = 0;
  InjectedEvent event;
};

struct Scenario {
  std::string name;
  std::uint64_t ticks = 0;
  std::vector<ScenarioEvent> events;  // sorted by tick
};

namespace detail {

inline std::vector<std::string> tokenize(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

}  // namespace detail

inline Scenario parse_scenario(const std::string& text, const std::string& name) {
  Scenario sc;
  sc.name = name;
  bool have_ticks = false;

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  auto fail = [&](const std::string& what) -> void {
    raise(Errc::scenario_parse_error, "line " + std::to_string(line_no) + ": " + what);
  };
  auto parse_int = [&](const std::string& tok, int lo, int hi, const char* what) -> int {
    try {
      std::size_t used = 0;
      int v = std::stoi(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      if (v < lo || v > hi) fail(std::string(what) + " out of range: " + tok);
      return v;
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      fail(std::string("bad ") + what + ": '" + tok + "'");
    }
    return 0;
  };
  auto parse_double = [&](const std::string& tok, const char* what) -> double {
    try {
      std::size_t used = 0;
      double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      fail(std::string("bad ") + what + ": '" + tok + "'");
    }
    return 0.0;
  };

  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::vector<std::string> tok = detail::tokenize(line);
    if (tok.empty()) continue;

    if (tok[0] == "ticks") {
      if (have_ticks) fail("duplicate 'ticks' header");
      if (tok.size() != 2) fail("usage: ticks <N>");
      sc.ticks = static_cast<std::uint64_t>(parse_int(tok[1], 1, 1000000, "tick count"));
      have_ticks = true;
      continue;
    }
    if (!have_ticks) fail("event before the 'ticks' header");
    if (tok.size() < 2) fail("expected '<tick> <event> <args...>'");

    std::uint64_t tick = static_cast<std::uint64_t>(parse_int(tok[0], 0, 1000000, "tick"));
    if (tick >= sc.ticks) fail("tick " + tok[0] + " outside [0, " + std::to_string(sc.ticks) + ")");
    if (!sc.events.empty() && tick < sc.events.back().tick) {
      fail("events must be sorted by tick");
    }

    const std::string& kind = tok[1];
    auto args = [&](std::size_t n) {
      if (tok.size() != 2 + n) {
        fail("'" + kind + "' takes " + std::to_string(n) + " argument(s)");
      }
    };

    if (kind == "gps_fix") {
      args(5);
      GpsReading fix;
      if (tok[2] == "valid") {
        fix.valid = true;
      } else if (tok[2] == "invalid") {
        fix.valid = false;
      } else {
        fail("gps_fix validity must be 'valid' or 'invalid'");
      }
      auto place = place_from_string(tok[3]);
      if (!place) fail("unknown place '" + tok[3] + "'");
      fix.location = *place;
      fix.speed_kmh = parse_double(tok[4], "speed");
      if (fix.speed_kmh < 0) fail("speed must be >= 0");
      fix.lat = parse_double(tok[5], "latitude");
      fix.lon = parse_double(tok[6], "longitude");
      sc.events.push_back({tick, GpsFixEvent{fix}});
    } else if (kind == "bt_connect") {
      args(1);
      sc.events.push_back({tick, BtConnectEvent{tok[2]}});
    } else if (kind == "bt_disconnect") {
      args(1);
      sc.events.push_back({tick, BtDisconnectEvent{tok[2]}});
    } else if (kind == "clock") {
      args(1);
      sc.events.push_back({tick, ClockSetEvent{parse_int(tok[2], 0, 1439, "time")}});
    } else if (kind == "calendar") {
      args(2);
      sc.events.push_back({tick, CalendarSetEvent{parse_int(tok[2], 0, 1439, "meeting_start"),
                                                  parse_int(tok[3], 0, 1439, "meeting_end")}});
    } else if (kind == "fail" || kind == "restore") {
      args(1);
      auto device = device_from_string(tok[2]);
      if (!device) fail("unknown device '" + tok[2] + "'");
      if (kind == "fail") {
        sc.events.push_back({tick, FailEvent{*device}});
      } else {
        sc.events.push_back({tick, RestoreEvent{*device}});
      }
    } else {
      fail("unknown event '" + kind + "'");
    }
  }
  if (!have_ticks) {
    line_no = 0;
    fail("missing 'ticks' header");
  }
  return sc;
}

inline Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::scenario_parse_error, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path);
}

}  // namespace microctl

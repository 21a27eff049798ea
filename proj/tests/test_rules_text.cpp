#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <random>
#include <sstream>

#include "microctl/rules_text.hpp"

using namespace microctl;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Predicate random_predicate(std::mt19937& rng, int depth) {
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  if (depth <= 0 || pick(0, 2) == 0) {
    switch (pick(0, 6)) {
      case 0: return pred::gps_valid();
      case 1: return pred::location_is(static_cast<Place>(pick(0, 2)));
      case 2: return pred::speed_gt(pick(0, 120));
      case 3: return pred::bt(pick(0, 1) ? "home_pc" : "car_handsfree");
      case 4: return pred::bt_count_gte(pick(0, 5));
      case 5: return pred::time_gte(pick(0, 1) ? TimeRef::meeting_start : TimeRef::meeting_end);
      default: return pred::rule_negation(pick(0, 1) ? "ActivateHome" : "DesactivateSync");
    }
  }
  switch (pick(0, 2)) {
    case 0: return pred::not_(random_predicate(rng, depth - 1));
    case 1:
      return pred::all_of({random_predicate(rng, depth - 1), random_predicate(rng, depth - 1)});
    default:
      return pred::any_of({random_predicate(rng, depth - 1), random_predicate(rng, depth - 1)});
  }
}

}  // namespace

TEST_CASE("predicate grammar round-trips", "[rules_text]") {
  SECTION("table predicates") {
    const char* samples[] = {
        "GPS.isValid() && !GPS.location()=home && !GPS.location()=office",
        "BT=car_handsfree",
        "GPS.isValid() && GPS.speed()>70",
        "BT=home_pc || (GPS.isValid() && GPS.location()=home)",
        "Time>=meeting_start && BT.count()>=3",
        "Time>=meeting_end",
        "BT=home_pc || BT=office_pc",
        "!ActivateOutdoor",
    };
    for (const char* text : samples) {
      Predicate p = parse_predicate(text);
      CHECK(predicate_to_string(p) == text);
      CHECK(parse_predicate(predicate_to_string(p)) == p);
    }
  }

  SECTION("random predicates survive print/parse") {
    std::mt19937 rng(424242);
    for (int i = 0; i < 300; ++i) {
      Predicate p = random_predicate(rng, 3);
      CHECK(parse_predicate(predicate_to_string(p)) == p);
    }
  }

  SECTION("bad inputs are rejected") {
    CHECK_THROWS_AS(parse_predicate(""), Error);
    CHECK_THROWS_AS(parse_predicate("GPS.isValid() &&"), Error);
    CHECK_THROWS_AS(parse_predicate("GPS.altitude()>3"), Error);
    CHECK_THROWS_AS(parse_predicate("(BT=home_pc"), Error);
    CHECK_THROWS_AS(parse_predicate("ActivateOutdoor"), Error);  // bare rule reference
    CHECK_THROWS_AS(parse_predicate("Time>=lunch"), Error);
  }
}

TEST_CASE("rule tables round-trip through text", "[rules_text]") {
  for (const AfsmDef* def : {&all_sensors_table(), &no_gps_table()}) {
    AfsmDef parsed = parse_rules_text(to_text(*def));
    CHECK(parsed == *def);
  }
}

TEST_CASE("checked-in transcriptions parse and match", "[rules_text]") {
  SECTION("full table") {
    AfsmDef file = parse_rules_text(read_file(std::string(MICROCTL_TEST_DATA_DIR) + "/table1.rules"));
    TableDiff diff = diff_tables(file, all_sensors_table());
    CAPTURE(diff.problems);
    CHECK(diff.clean());
    CHECK(diff.matched == 16);
  }

  SECTION("GPS-failure table") {
    AfsmDef file = parse_rules_text(read_file(std::string(MICROCTL_TEST_DATA_DIR) + "/table2.rules"));
    TableDiff diff = diff_tables(file, no_gps_table());
    CAPTURE(diff.problems);
    CHECK(diff.clean());
    CHECK(diff.matched == 10);
  }
}

TEST_CASE("diff pinpoints injected mismatches", "[rules_text]") {
  SECTION("an altered threshold is one mismatch") {
    std::string text = to_text(all_sensors_table());
    auto at = text.find("GPS.speed()>70");
    REQUIRE(at != std::string::npos);
    text.replace(at, std::string("GPS.speed()>70").size(), "GPS.speed()>60");
    TableDiff diff = diff_tables(parse_rules_text(text), all_sensors_table());
    REQUIRE(diff.problems.size() == 1);
    CHECK(diff.problems[0] == "rule g differs in predicate");
    CHECK(diff.matched == 15);
  }

  SECTION("an empty table is sixteen missing rules") {
    TableDiff diff = diff_tables(parse_rules_text("afsm ContextManagerAllSensors\n"),
                                 all_sensors_table());
    CHECK(diff.problems.size() == 16);
    CHECK(diff.matched == 0);
  }

  SECTION("an extra rule is flagged") {
    std::string text = to_text(no_gps_table());
    text += "rule z Extra General -> Sync | BT=home_pc | 10 OFF\n";
    TableDiff diff = diff_tables(parse_rules_text(text), no_gps_table());
    REQUIRE(diff.problems.size() == 1);
    CHECK(diff.problems[0].find("extra rule z") != std::string::npos);
  }
}

TEST_CASE("rules file parse errors carry line numbers", "[rules_text]") {
  auto check_throws_with = [](const std::string& text, const std::string& needle) {
    try {
      parse_rules_text(text);
      FAIL("expected a parse error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::rules_parse_error);
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  check_throws_with("rule a X General -> Sync | BT=x | 10 OFF\n", "line 1");
  check_throws_with("afsm T\nrule a X General -> Nowhere | BT=x | 10 OFF\n", "line 2");
  check_throws_with("afsm T\nrule a X General -> Sync | BT=x | 101 OFF\n", "volume");
  check_throws_with("afsm T\nrule a X General -> Sync | BT=x | 10 MAYBE\n", "vibration");
  check_throws_with("afsm T\nrule aa X General -> Sync | BT=x | 10 OFF\n", "single letter");
}

// Command-line front end: scenario runs, rule-table validation, conflict
// analysis, and table listings.
//
// Exit codes: 0 success, 1 input error, 2 runtime fault or table mismatch,
// 3 conflicts found (check-conflicts).

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "microctl/afsm.hpp"
#include "microctl/meta.hpp"
#include "microctl/rules_text.hpp"
#include "microctl/runner.hpp"
#include "microctl/scenario.hpp"

namespace {

using namespace microctl;

std::string describe_snapshot(const SensorSnapshot& s) {
  std::ostringstream os;
  os << "gps=" << (s.gps.valid ? "valid" : "invalid") << "/" << to_string(s.gps.location)
     << "/speed=" << s.gps.speed_kmh << " bt={";
  bool first = true;
  for (const std::string& d : s.bluetooth) {
    if (!first) os << ",";
    os << d;
    first = false;
  }
  os << "} time=" << s.time << " meeting=" << s.meeting_start << ".." << s.meeting_end;
  return os.str();
}

int cmd_run(const std::string& scenario_path, int ticks_override, const std::string& trace_path,
            bool churn) {
  Scenario scenario;
  try {
    scenario = load_scenario_file(scenario_path);
  } catch (const Error& e) {
    std::cerr << "scenario error: " << e.what() << "\n";
    return 1;
  }

  RunOptions options;
  if (ticks_override > 0) options.ticks_override = static_cast<std::uint64_t>(ticks_override);
  options.churn_controllers = churn;

  Runtime runtime;
  RunResult result = runtime.run(scenario, options);

  if (trace_path.empty()) {
    std::cout << result.trace;
  } else {
    std::ofstream out(trace_path, std::ios::binary);
    if (!out) {
      std::cerr << "cannot write '" << trace_path << "'\n";
      return 1;
    }
    out << result.trace;
  }
  if (result.exit_code != 0) std::cerr << "runtime fault: " << result.fault << "\n";
  return result.exit_code;
}

int cmd_validate(const std::string& tables_path) {
  std::ifstream in(tables_path);
  if (!in) {
    std::cerr << "cannot open '" << tables_path << "'\n";
    return 1;
  }
  std::ostringstream buf;
  buf << in.rdbuf();

  AfsmDef file_def;
  try {
    file_def = parse_rules_text(buf.str());
  } catch (const Error& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 1;
  }

  const AfsmDef* embedded = nullptr;
  if (file_def.name == all_sensors_table().name) embedded = &all_sensors_table();
  if (file_def.name == no_gps_table().name) embedded = &no_gps_table();
  if (!embedded) {
    std::cerr << "no embedded table named '" << file_def.name << "'\n";
    return 1;
  }

  TableDiff diff = diff_tables(file_def, *embedded);
  for (const std::string& line : diff.problems) std::cout << line << "\n";
  std::cout << diff.matched << "/" << diff.expected_total << " rules match\n";
  return diff.clean() ? 0 : 2;
}

int cmd_check_conflicts(const std::string& variant_name) {
  auto variant = cm_variant_from_string(variant_name);
  if (!variant) {
    std::cerr << "unknown variant '" << variant_name << "'\n";
    return 1;
  }
  const Afsm& machine = cm_afsm(*variant);
  std::vector<ConflictFinding> findings = detect_conflicts(machine);
  std::cout << machine.def().name << ": " << findings.size() << " conflicting rule set(s)\n";
  for (const ConflictFinding& f : findings) {
    std::cout << "  state=" << to_string(f.state) << " rules={";
    for (std::size_t i = 0; i < f.rules.size(); ++i) {
      if (i) std::cout << ",";
      std::cout << f.rules[i];
    }
    std::cout << "} witness: " << describe_snapshot(f.witness) << "\n";
  }
  return findings.empty() ? 0 : 3;
}

int cmd_list_rules(const std::string& variant_name) {
  auto variant = cm_variant_from_string(variant_name);
  if (!variant) {
    std::cerr << "unknown variant '" << variant_name << "'\n";
    return 1;
  }
  std::cout << to_text(cm_afsm(*variant).def());
  return 0;
}

int cmd_config_map() {
  for (const ConfigMapEntry& row : config_map()) {
    std::cout << "gps=" << (row.health.gps_ok ? "ok" : "failed")
              << " bt=" << (row.health.bt_ok ? "ok" : "failed")
              << " ringtone=" << (row.health.ringtone_ok ? "ok" : "failed")
              << " vibration=" << (row.health.vibration_ok ? "ok" : "failed") << " -> "
              << cm_id(row.cm) << " + " << am_id(row.am) << " (rules " << row.cm_rule << ","
              << row.am_rule << ")\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"micro-controller ensemble runtime for the PhoneAdapter target system"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string trace_path;
  int ticks_override = 0;
  bool churn = false;
  CLI::App* run = app.add_subcommand("run", "run a scenario and emit the trace");
  run->add_option("scenario", scenario_path, "scenario file")->required();
  run->add_option("--ticks", ticks_override, "override the scenario's tick count");
  run->add_option("--trace", trace_path, "write the trace to this file instead of stdout");
  run->add_flag("--churn", churn, "recreate the active managers every tick");

  std::string tables_path;
  CLI::App* validate = app.add_subcommand("validate", "diff a rule-table file against the embedded tables");
  validate->add_option("tables", tables_path, "rule-table file")->required();

  std::string conflicts_variant;
  CLI::App* check = app.add_subcommand("check-conflicts", "enumerate rule conflicts of a variant");
  check->add_option("variant", conflicts_variant,
                    "AllSensors|NoGPS|NoBluetooth|NoGPSNoBluetooth")->required();

  std::string list_variant;
  CLI::App* list = app.add_subcommand("list-rules", "print a variant's rule table");
  list->add_option("variant", list_variant, "AllSensors|NoGPS|NoBluetooth|NoGPSNoBluetooth")
      ->required();

  app.add_subcommand("config-map", "print the 16-row health-to-configuration table");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(scenario_path, ticks_override, trace_path, churn);
    if (validate->parsed()) return cmd_validate(tables_path);
    if (check->parsed()) return cmd_check_conflicts(conflicts_variant);
    if (list->parsed()) return cmd_list_rules(list_variant);
    return cmd_config_map();
  } catch (const microctl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

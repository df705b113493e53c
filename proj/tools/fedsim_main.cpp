#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fedsim/coversion.hpp"
#include "fedsim/scenario.hpp"
#include "fedsim/sim.hpp"

namespace {

enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };

LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("FEDSIM_LOG");
    if (env == nullptr) return LogLevel::kError;
    const std::string v = env;
    if (v == "debug") return LogLevel::kDebug;
    if (v == "info") return LogLevel::kInfo;
    if (v == "error") return LogLevel::kError;
    std::cerr << "fedsim: ignoring unknown FEDSIM_LOG value '" << v
              << "' (expected error, info, or debug)\n";
    return LogLevel::kError;
  }();
  return level;
}

void log_info(const std::string& msg) {
  if (log_level() >= LogLevel::kInfo) std::cerr << "fedsim: " << msg << "\n";
}

void log_debug(const std::string& msg) {
  if (log_level() >= LogLevel::kDebug) std::cerr << "fedsim: " << msg << "\n";
}

int exit_code_for(const fedsim::Error& e) {
  switch (e.code()) {
    case fedsim::ErrorCode::kParse: return 1;
    case fedsim::ErrorCode::kValidation: return 2;
    default: return 3;
  }
}

int cmd_run(const std::string& scenario_path,
            const std::optional<std::uint64_t>& seed,
            const std::string& out_dir) {
  fedsim::Scenario s = fedsim::load_scenario(scenario_path);
  if (seed) s.seed = *seed;
  log_info("running scenario '" + s.name + "' (seed " +
           std::to_string(s.seed) + ")");
  const fedsim::RunResult result = fedsim::run_scenario(s, out_dir);
  log_info("wrote " + out_dir + "/metrics.jsonl, coversion.log, summary.json");
  log_debug(fedsim::summary_to_json(result.summary));
  std::cout << "run complete: " << result.summary.rounds_completed
            << " rounds";
  if (result.summary.final_loss) {
    std::cout << ", final loss " << *result.summary.final_loss;
  }
  std::cout << ", outputs in " << out_dir << "\n";
  return 0;
}

int cmd_validate(const std::string& scenario_path) {
  const fedsim::Scenario s = fedsim::load_scenario(scenario_path);
  std::cout << "scenario ok: " << (s.name.empty() ? "(unnamed)" : s.name)
            << ", " << s.n_clients << " clients, " << s.rounds
            << " rounds, aggregator " << fedsim::aggregator_kind_name(s.aggregator)
            << "\n";
  return 0;
}

nlohmann::json summary_json(const fedsim::RunSummary& s) {
  return nlohmann::json::parse(fedsim::summary_to_json(s));
}

std::string cell(const nlohmann::json& v) {
  if (v.is_null()) return "-";
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

int cmd_compare(const std::vector<std::string>& run_dirs, bool as_json) {
  if (run_dirs.size() < 2) {
    fedsim::raise(fedsim::ErrorCode::kValidation,
                  "compare needs at least two run directories");
  }
  std::vector<nlohmann::json> sums;
  for (const std::string& dir : run_dirs) {
    const std::filesystem::path p = std::filesystem::path(dir) / "summary.json";
    if (!std::filesystem::exists(p)) {
      fedsim::raise(fedsim::ErrorCode::kValidation,
                    "missing summary.json in " + dir);
    }
    sums.push_back(summary_json(fedsim::load_summary(p)));
  }

  if (as_json) {
    nlohmann::json out;
    out["runs"] = nlohmann::json::array();
    for (std::size_t i = 0; i < run_dirs.size(); ++i) {
      nlohmann::json entry = sums[i];
      entry["dir"] = run_dirs[i];
      out["runs"].push_back(std::move(entry));
    }
    std::cout << out.dump(2) << "\n";
    return 0;
  }

  // One column per run, in argument order.
  const std::vector<std::string> rows = {
      "scenario",       "aggregator",        "task",
      "rounds_completed", "converged",       "rounds_to_convergence",
      "final_loss",     "final_accuracy",    "bytes_up_total",
      "bytes_down_total", "virtual_time_ms", "trigger_fired"};
  std::vector<std::size_t> width(run_dirs.size());
  std::size_t label_width = 0;
  for (const std::string& r : rows) label_width = std::max(label_width, r.size());
  for (std::size_t i = 0; i < run_dirs.size(); ++i) {
    width[i] = run_dirs[i].size();
    for (const std::string& r : rows) {
      width[i] = std::max(width[i], cell(sums[i][r]).size());
    }
  }
  std::cout << std::string(label_width, ' ');
  for (std::size_t i = 0; i < run_dirs.size(); ++i) {
    std::cout << "  " << run_dirs[i]
              << std::string(width[i] - run_dirs[i].size(), ' ');
  }
  std::cout << "\n";
  for (const std::string& r : rows) {
    std::cout << r << std::string(label_width - r.size(), ' ');
    for (std::size_t i = 0; i < run_dirs.size(); ++i) {
      const std::string v = cell(sums[i][r]);
      std::cout << "  " << v << std::string(width[i] - v.size(), ' ');
    }
    std::cout << "\n";
  }
  return 0;
}

int cmd_lineage(const std::string& out_dir, std::uint32_t version) {
  const std::filesystem::path log =
      std::filesystem::path(out_dir) / "coversion.log";
  if (!std::filesystem::exists(log)) {
    fedsim::raise(fedsim::ErrorCode::kValidation,
                  "coversion.log not found in " + out_dir);
  }
  // load() verifies the whole chain before answering anything.
  const fedsim::CoVersionRegistry registry = fedsim::CoVersionRegistry::load(log);
  log_info("chain ok: " + std::to_string(registry.chain().size()) +
           " records, " + std::to_string(registry.global_records()) +
           " global versions");
  if (!registry.has_version(version)) {
    fedsim::raise(fedsim::ErrorCode::kValidation,
                  "version not found: " + std::to_string(version));
  }
  const fedsim::CoVersionRecord& rec = registry.record_for(version);
  std::cout << "global version " << rec.global_version << "  digest "
            << fedsim::digest_hex(rec.global_digest) << "\n";
  for (const fedsim::Contribution& c : rec.contributing) {
    std::cout << c.client_id << "  v" << c.local_version << "  "
              << fedsim::digest_hex(c.update_digest) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"federated learning pattern simulator"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::vector<std::string> run_dirs;
  bool as_json = false;
  std::uint32_t version = 0;

  CLI::App* run = app.add_subcommand("run", "execute a scenario");
  run->add_option("--scenario", scenario_path, "scenario JSON file")
      ->required();
  run->add_option("--seed", seed, "override the scenario's seed");
  run->add_option("--out", out_dir,
                  "directory for metrics.jsonl, coversion.log, summary.json")
      ->required();

  CLI::App* validate =
      app.add_subcommand("validate", "parse and validate a scenario");
  validate->add_option("--scenario", scenario_path, "scenario JSON file")
      ->required();

  CLI::App* compare =
      app.add_subcommand("compare", "compare completed runs side by side");
  compare->add_option("--runs", run_dirs, "two or more run directories")
      ->required()
      ->expected(-1);
  compare->add_flag("--json", as_json, "emit JSON instead of a table");

  CLI::App* lineage =
      app.add_subcommand("lineage", "list the contributors of a global model");
  lineage->add_option("--out", out_dir, "run directory holding coversion.log")
      ->required();
  lineage->add_option("--version", version, "global model version")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(scenario_path, seed, out_dir);
    if (validate->parsed()) return cmd_validate(scenario_path);
    if (compare->parsed()) return cmd_compare(run_dirs, as_json);
    if (lineage->parsed()) return cmd_lineage(out_dir, version);
  } catch (const fedsim::Error& e) {
    std::cerr << "fedsim: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "fedsim: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

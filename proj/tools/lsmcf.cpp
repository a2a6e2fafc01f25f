#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "lsmcf/errors.hpp"
#include "lsmcf/experiment.hpp"
#include "lsmcf/parallel.hpp"

namespace {

constexpr int kPass = 0;
constexpr int kUnexpected = 1;
constexpr int kToleranceFailure = 2;
constexpr int kValidation = 3;
constexpr int kBlowup = 4;

void write_failure(const std::filesystem::path& dir, const std::string& kind,
                   const std::string& message, std::optional<double> time = std::nullopt) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  nlohmann::json j{{"status", "error"}, {"kind", kind}, {"message", message}};
  if (time) j["time"] = *time;
  std::ofstream(dir / "failure.json") << j.dump(2) << '\n';
}

void print_result(const lsmcf::ExperimentResult& r) {
  for (const auto& [key, clause] : r.clauses)
    std::cout << (clause.pass ? "PASS " : "FAIL ") << key << '\n';
  std::cout << r.name << ": " << (r.passed() ? "pass" : "fail") << " in " << r.runtime_s
            << " s\n";
}

// Runs an experiment and maps the outcome to an exit code.
int execute(const lsmcf::ExperimentConfig& config) {
  try {
    const auto result = lsmcf::run_experiment(config);
    print_result(result);
    return result.passed() ? kPass : kToleranceFailure;
  } catch (const lsmcf::BlowupError& e) {
    write_failure(config.output_directory, "blowup", e.what(), e.time());
    std::cerr << "blowup: " << e.what() << '\n';
    return kBlowup;
  } catch (const lsmcf::CertificationFailure& e) {
    write_failure(config.output_directory, "certification", e.what());
    std::cerr << "certification failed: " << e.what() << '\n';
    return kValidation;
  } catch (const lsmcf::ValidationError& e) {
    write_failure(config.output_directory, "validation", e.what());
    std::cerr << "invalid: " << e.what() << '\n';
    return kValidation;
  } catch (const lsmcf::SpecError& e) {
    write_failure(config.output_directory, "spec", e.what());
    std::cerr << "invalid: " << e.what() << '\n';
    return kValidation;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regularized level-set mean curvature flow with weak-solution diagnostics"};
  app.require_subcommand(1);
  app.footer("LSMCF_THREADS caps the number of worker threads (now " +
             std::to_string(lsmcf::thread_limit()) + ").");

  std::string config_path;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment from a JSON config");
  run_cmd->add_option("--config", config_path, "Path to the config")->required();

  std::string preset_name;
  std::string out_dir;
  bool config_only = false;
  auto* preset_cmd = app.add_subcommand("preset", "Run a named preset");
  preset_cmd->add_option("name", preset_name, "Preset name")
      ->required()
      ->check(CLI::IsMember(lsmcf::preset_names()));
  preset_cmd->add_option("--out", out_dir, "Output directory");
  preset_cmd->add_flag("--config-only", config_only, "Print the preset config and exit");

  std::string snapshot_dir;
  auto* verify_cmd = app.add_subcommand("verify", "Re-verify persisted snapshots");
  verify_cmd->add_option("--snapshots", snapshot_dir, "Snapshot directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kPass : kValidation;
  }

  try {
    if (*run_cmd) {
      lsmcf::ExperimentConfig config;
      try {
        config = lsmcf::load_config(config_path);
      } catch (const lsmcf::Error& e) {
        std::cerr << "invalid config: " << e.what() << '\n';
        return kValidation;
      }
      return execute(config);
    }
    if (*preset_cmd) {
      auto config = lsmcf::preset(preset_name);
      if (!out_dir.empty()) config.output_directory = out_dir;
      if (config_only) {
        std::cout << lsmcf::to_json(config).dump(2) << '\n';
        return kPass;
      }
      return execute(config);
    }
    if (*verify_cmd) {
      try {
        const auto result = lsmcf::verify_snapshots(snapshot_dir);
        print_result(result);
        return result.passed() ? kPass : kToleranceFailure;
      } catch (const lsmcf::Error& e) {
        std::cerr << "invalid: " << e.what() << '\n';
        return kValidation;
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUnexpected;
  }
  return kUnexpected;
}

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "geoinfer/common.hpp"

namespace geoinfer {

/// Fully resolved run configuration (flag > config file > environment >
/// default). Stored verbatim in the run manifest so a run can be replayed.
struct CliConfig {
  std::uint64_t seed = 0;
  int iterations = 10;
  int bins = 128;
  std::optional<double> bandwidth;
  std::optional<int> k_neighbors;
  double alpha = 0.5;
  std::string shap_mode = "exact";
  int shap_permutations = 200;
  int background_size = 32;
  int grid_resolution = 100;
  std::vector<std::string> target_order;
};

struct SoilDemoOptions {
  CliConfig config;
  std::string out_dir;
  bool json_summary = false;
};

struct ImputeOptions {
  CliConfig config;
  std::string train_csv;
  std::string test_csv;
  std::string schema_json;
  std::optional<std::string> truth_csv;
  std::string out_dir;
  bool json_summary = false;
};

struct ExplainOptions {
  CliConfig config;
  std::string run_dir;                // out_dir of a previous impute run
  std::vector<std::string> targets;   // empty = every target
  std::vector<int> rows;              // empty = rows with the target missing
  std::string out_dir;
  bool json_summary = false;
};

struct GenerateOptions {
  std::uint64_t seed = 0;
  int n_train = 500;
  int n_test = 40;
  double missing_rate = 0.5;
  std::string out_dir;
  bool json_summary = false;
};

int cmd_soil_demo(const SoilDemoOptions& options);
int cmd_impute(const ImputeOptions& options);
int cmd_explain(const ExplainOptions& options);
int cmd_generate(const GenerateOptions& options);

/// Re-run the command recorded in a manifest into `out_dir` and verify that
/// every artifact checksum matches the manifest. Nonzero on any mismatch.
int cmd_replay(const std::string& manifest_path, const std::string& out_dir);

/// Full argv entry point (CLI11 subcommands).
int run_cli(int argc, const char* const* argv);

}  // namespace geoinfer

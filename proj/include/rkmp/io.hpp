#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rkmp/baselines.hpp"
#include "rkmp/datagen.hpp"
#include "rkmp/dense.hpp"
#include "rkmp/factors.hpp"
#include "rkmp/mappings.hpp"
#include "rkmp/metrics.hpp"
#include "rkmp/swe.hpp"

namespace rkmp {

inline constexpr const char* kLibraryVersion = "0.1.0";

// Binary matrix container: magic "RKMP1", element kind byte (1 = IEEE f64
// little-endian), u64le rows, u64le cols, column-major payload. Write→read
// round trips are bitwise identities; parse errors carry the byte offset.
void write_matrix_binary(const std::string& path, const DenseMatrix& m);
DenseMatrix read_matrix_binary(const std::string& path);

// Plain CSV, one line per matrix row, '.' decimal separator, LF endings.
void write_matrix_csv(const std::string& path, const DenseMatrix& m);
DenseMatrix read_matrix_csv(const std::string& path);

// Local returns table: header row of tickers, then T rows × A columns.
struct ReturnsCsv {
  DenseMatrix returns;
  std::vector<std::string> tickers;
};
ReturnsCsv read_returns_csv(const std::string& path);

struct TrainSettings {
  std::size_t epochs = 200;
  double learning_rate = 1e-3;
  Optimizer optimizer = Optimizer::adam_style;
  std::size_t batch_size = 0;
};

struct ImagingSettings {
  std::size_t image_side = 28;
  std::size_t kernel_side = 5;
  double kernel_std = 1.5;
  double noise_std = 0.05;
  std::size_t samples = 160;
};

struct FinanceSettings {
  SyntheticMarketSpec market;
  std::size_t runs = 20;  // trained-baseline repetitions
  std::optional<std::string> returns_csv;
};

struct SweSettings {
  std::size_t grid = 16;
  std::size_t final_step = 500;
  std::size_t train_per_family = 50;
  std::size_t test_in_distribution = 100;
  std::size_t test_out_of_distribution = 50;
  double noise_std = 0.01;
  std::size_t rank = 64;
  double ridge = 1e-2;
};

// Parsed experiment description. Unknown keys are rejected at parse time
// with the offending field path.
struct ExperimentConfig {
  std::string experiment;  // "sweep" | "imaging" | "finance" | "swe"
  std::uint64_t seed = 1;
  MapKind kind{Task::forward, Form::linear};
  std::vector<std::size_t> ranks{25, 50, 100};
  std::optional<double> ridge;
  TrainSettings train;
  ImagingSettings imaging;
  FinanceSettings finance;
  SweSettings swe;
  std::string echo_json;  // canonical config echo for the manifest
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

// paper-imaging, paper-swe, desk-swe, paper-finance.
ExperimentConfig preset_config(const std::string& name);

// $RKMP_OUT_DIR when set, otherwise ./rkmp_out.
std::string default_out_root();

enum class Stage { generate, fit, evaluate, sweep, run };
Stage stage_from_verb(const std::string& verb);

// Runs the configured experiment up to the requested stage, writing dataset
// files, fitted maps, CSV tables and manifest.json under out_dir. Outputs
// are bit-identical across reruns with the same config.
void run_experiment(const ExperimentConfig& cfg, const std::string& out_dir, Stage stage);

// Pure compute entry points shared by run_experiment and the test suites.

struct SweepExperimentResult {
  std::vector<SweepRow> rows;
  DataSet data;
  DenseMatrix forward_op;
};
SweepExperimentResult run_sweep_experiment(const ExperimentConfig& cfg, Task direction);

struct FinanceMethodReport {
  std::string method;
  double mse_value = 0.0;
  Vector cev;
  double total_cev = 0.0;
  double balance = 0.0;
  Vector correlations;  // post-alignment, empty when no ground truth exists
};
struct FinanceExperimentResult {
  std::vector<FinanceMethodReport> methods;  // optimal, pca, trained medians
  bool has_ground_truth = false;
};
FinanceExperimentResult run_finance_experiment(const ExperimentConfig& cfg);

struct SweExperimentResult {
  ErrorReport optimal_train, optimal_id, optimal_ood;
  ErrorReport learned_train, learned_id, learned_ood;
  DenseMatrix optimal_map;
};
SweExperimentResult run_swe_experiment(const ExperimentConfig& cfg);

}  // namespace rkmp

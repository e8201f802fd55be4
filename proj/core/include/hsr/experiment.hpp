#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "hsr/classifier.hpp"
#include "hsr/dataset.hpp"

namespace hsr {

struct DatasetConfig {
  enum class Source { kSynth, kPath };
  Source source = Source::kSynth;
  SynthSpec synth;
  std::optional<std::uint64_t> seed;  // synthetic data seed; defaults to the experiment seed
  std::string path;
  std::string test_path;  // optional separate test directory
  int train_per_class = 10;
};

// Flat `key = value` configuration with dotted section keys; see README for
// the full grammar. Unknown keys are rejected.
struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 1;
  DatasetConfig dataset;
  PipelineOptions pipeline;
  std::optional<OcclusionSpec> occlusion;  // applied to test images; seeds derive from `seed`
  std::optional<PartitionConfig> partition;

  static ExperimentConfig parse(std::string_view text);
  static ExperimentConfig load(const std::filesystem::path& path);

  // Canonical dump; parse(echo()) reproduces the configuration exactly.
  std::string echo() const;
  void validate() const;
};

struct SampleRecord {
  int sample_id = 0;
  int true_label = 0;
  int predicted = 0;
  double time_s = 0.0;
  int iterations = 0;
  Eigen::Index nnz = 0;
  bool converged = false;
  Vector residuals;
};

struct MetricsReport {
  std::string name;
  int num_classes = 0;
  double recognition_rate = 0.0;  // NaN for an empty test set
  double total_coding_time = 0.0;
  std::vector<double> per_sample_times;
  Eigen::MatrixXi confusion;  // rows: true class, cols: predicted class
  double mean_iterations = 0.0;
  double mean_nonzeros = 0.0;
  double feature_seconds = 0.0;
  double training_seconds = 0.0;
  std::vector<SampleRecord> samples;
  std::string config_echo;

  // Fills rate, confusion, timing and solver aggregates from `samples`.
  void recompute_summary();
};

// Synthesizes or loads the dataset and splits it. A separate test directory,
// when given, is used as-is instead of splitting.
TrainTestSplit load_experiment_data(const ExperimentConfig& config);

// Executes the train-side pipeline, then classifies every test sample. Only
// the coding step is counted in per-sample times. Errors are rethrown as
// StageError naming the failing stage.
MetricsReport run_experiment(const ExperimentConfig& config);

enum class ReportFormat { kCsv, kJson, kTable };

ReportFormat parse_report_format(std::string_view name);

// Writes one file per requested format (samples.csv + residuals.csv,
// report.json, report.dat) plus summary.txt and config.txt. Returns the paths
// written.
std::vector<std::filesystem::path> emit_report(const MetricsReport& report,
                                               const std::filesystem::path& out_dir,
                                               const std::set<ReportFormat>& formats);

// Rebuilds a report from samples.csv. The class count is inferred from the
// labels unless given.
MetricsReport load_samples_csv(const std::filesystem::path& path, int num_classes = 0);

std::string summary_text(const MetricsReport& report);

}  // namespace hsr

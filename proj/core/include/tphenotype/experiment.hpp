#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tphenotype/checkpoint.hpp"
#include "tphenotype/clustering.hpp"
#include "tphenotype/data.hpp"
#include "tphenotype/encoder.hpp"
#include "tphenotype/metrics.hpp"
#include "tphenotype/predictor.hpp"
#include "tphenotype/similarity.hpp"

namespace tphenotype {

/// Invalid or unknown configuration input (maps to the usage exit code).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Resolved experiment description: dataset source, per-stage hyperparameters
/// and the evaluation protocol. Serialises to a canonical JSON document whose
/// hash identifies the run.
struct ExperimentConfig {
  // data source
  std::string generator = "synthetic";  // "synthetic" | "toy" | "file"
  int data_n = 1200;
  std::string data_path;  // when generator == "file"
  SyntheticParams synthetic;
  ToyParams toy;

  // encoder stage
  EncoderSpec encoder;
  EncoderHyper encoder_hyper;

  // predictor stage
  int predictor_hidden = 10;
  PredictorHyper predictor_hyper;

  // similarity + clustering
  int similarity_steps = 25;
  ClusterConfig cluster;
  std::vector<int> k_candidates = {2, 3, 4, 5};
  int kmeans_restarts = 10;

  // protocol
  std::array<double, 3> fractions = {0.64, 0.16, 0.20};
  std::vector<std::uint64_t> seeds = {7, 8, 9, 10, 11};
  std::string output_dir = "out";
};

/// Parse a JSON config; unknown keys are rejected with their path.
ExperimentConfig parse_config_json(const std::string& json_text);
/// Load a config file; manifest files are accepted (their embedded config is
/// extracted), so any run can be reproduced from its manifest.
ExperimentConfig load_config_file(const std::string& path);
std::string config_to_json_string(const ExperimentConfig& cfg, int indent = 2);
/// FNV-1a hash of the canonical serialisation, as fixed-width hex.
std::string config_hash(const ExperimentConfig& cfg);

/// Dataset named by the config: a seeded generator run or a file load.
Dataset make_dataset(const ExperimentConfig& cfg, Rng& rng);

// --- pipeline ----------------------------------------------------------------

struct PipelineLogs {
  std::vector<EncoderTrainLog> encoder_logs;
  PredictorTrainLog predictor_log;
};

/// Three-stage fit: per-feature Laplace encoders first (validation-selected),
/// then the predictor over frozen encoders.
Checkpoint fit_pipeline(const Dataset& train, const Dataset& val, const ExperimentConfig& cfg,
                        Rng& rng, PipelineLogs* logs = nullptr);

// --- evaluation ----------------------------------------------------------------

/// Ordered key/value metric report with flat text and CSV emission.
struct MetricReport {
  std::vector<std::pair<std::string, double>> values;

  void set(const std::string& key, double v);
  double get(const std::string& key) const;
  bool has(const std::string& key) const;
  std::string to_kv_text() const;
  void save_kv(const std::string& path) const;
};

/// Write one CSV (header + one row per report).
void save_csv(const std::vector<MetricReport>& rows, const std::string& path);

struct SplitEvaluation {
  std::vector<std::vector<double>> latents;
  std::vector<LabelDistribution> preds;
  DistanceMatrix S;
  TPhenotypeTrace trace;
  MetricReport report;
};

/// Cluster the given (held-out) dataset with the trained model and compute
/// the metric suite: purity/RAND/NMI against truth clusters when present,
/// AUROC/AUPRC/accuracy when labels are present, the latent-space
/// AUSIL and the composite H scores, plus run diagnostics.
SplitEvaluation evaluate_split(const Checkpoint& model, const Dataset& eval_set,
                               const ExperimentConfig& cfg, Rng& rng);

/// Mean and standard deviation over per-seed reports (keys of the first).
MetricReport aggregate_reports(const std::vector<MetricReport>& reports);

/// Full protocol: generate data once, then per seed split/fit/evaluate.
struct ExperimentOutcome {
  std::vector<MetricReport> per_seed;
  MetricReport aggregate;
};
ExperimentOutcome run_full_experiment(const ExperimentConfig& cfg);

/// K selection by cross-validated composite metric: 3 folds, encoders and
/// predictor trained once per fold, candidates scored by mean H_PRC on the
/// held-out fold; ties to the smaller K.
struct SelectKOutcome {
  int chosen = 0;
  std::vector<std::pair<int, double>> per_k;  // (K, mean H_PRC)
};
SelectKOutcome run_select_k(const ExperimentConfig& cfg, const Dataset& data,
                            const std::vector<int>& candidates);

/// Run manifest: command, original arguments, resolved config, config hash,
/// library version and wall time. A manifest file is itself a valid --config
/// input, and `tphen rerun` replays the recorded command from it.
void write_manifest(const std::string& path, const std::string& command,
                    const std::string& args_json, const ExperimentConfig& cfg,
                    double wall_seconds, const std::vector<std::string>& outputs);

}  // namespace tphenotype

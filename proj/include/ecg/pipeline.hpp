#pragma once

// End-to-end wiring used by the ecgdetect command line tool.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ecg/baselines.hpp"
#include "ecg/dataset.hpp"
#include "ecg/dsp.hpp"
#include "ecg/error.hpp"
#include "ecg/eval.hpp"
#include "ecg/nn/model.hpp"
#include "ecg/nn/train.hpp"
#include "ecg/wfdb.hpp"

namespace ecg::pipeline {

enum class Errc { InvalidConfig, ParseFailure, NoRecords, MissingShards, CheckpointMismatch, VerifyFailed };
using PipelineError = Error<Errc>;

/// Process exit code for each failure kind.
int exit_code(Errc e);

struct TrainingConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  std::size_t patience = 3;
  double lr_factor = 0.1;
  bool balance = true;
  double balance_ratio = 1.0;
};

struct BaselineConfig {
  baselines::LogRegOptions logreg;
  baselines::ForestOptions forest;
  baselines::GbmOptions gbm;
};

struct PipelineConfig {
  std::filesystem::path data_root;
  wfdb::Protocol protocol = wfdb::Protocol::B;
  std::map<wfdb::Protocol, std::string> annotators{
      {wfdb::Protocol::A, "sta"}, {wfdb::Protocol::B, "stb"}, {wfdb::Protocol::C, "stc"}};
  std::vector<std::string> records;  // empty: everything discovered under data_root
  double resample_to = 200.0;
  std::size_t window_len = dataset::kDefaultWindowLen;
  std::size_t stride = dataset::kDefaultWindowLen;
  std::size_t eval_stride = dataset::kDefaultWindowLen / 2;
  dsp::FilterSpec baseline = dsp::FilterSpec::median_baseline();
  dsp::FilterSpec lowpass = dsp::FilterSpec::lowpass();
  dsp::NormalizeOptions normalize;
  dataset::LabelRule label_rule;
  dataset::SplitFractions fractions;
  std::size_t max_normal_windows_per_record = 200;  // 0 keeps all
  nn::ModelConfig model;
  TrainingConfig training;
  BaselineConfig baselines;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "ecg_out";
  int jobs = 1;

  std::filesystem::path shard_dir() const { return output_dir / "shards"; }
  std::filesystem::path checkpoint_path() const { return output_dir / "model.ckpt"; }
  std::filesystem::path history_path() const { return output_dir / "history.csv"; }
};

nlohmann::ordered_json to_json(const PipelineConfig& c);
/// Keys absent from `j` keep their defaults. Throws PipelineError{InvalidConfig}.
PipelineConfig config_from_json(const nlohmann::json& j);

/// Applies one "a.b.c=value" override; the value is parsed as JSON when it
/// is valid JSON and taken as a string otherwise.
void apply_override(nlohmann::json& j, const std::string& assignment);

/// Reads the optional JSON file, applies overrides, then falls back to the
/// ECG_DATA_ROOT environment variable for an unset data_root.
PipelineConfig load_config(const std::optional<std::filesystem::path>& file, const std::vector<std::string>& overrides);

struct RecordSummary {
  std::string name;
  double sampling_rate;
  std::uint64_t n_samples;
  double duration_hours;
  std::vector<std::string> leads;
  std::map<std::string, std::optional<std::size_t>> episodes;  // per protocol; empty when no annotation file
  std::vector<std::string> diagnostics;
};

nlohmann::ordered_json to_json(const RecordSummary& s);
std::string to_text(const RecordSummary& s);

/// `path` names a record, with or without extension.
RecordSummary inspect_record(const std::filesystem::path& path, const PipelineConfig& config);

/// Windows of one record after preprocessing and labeling. Excluded windows are
/// dropped; normal windows are subsampled to the configured cap.
struct RecordWindows {
  std::vector<dataset::EcgWindow> train_stride;
  std::vector<dataset::EcgWindow> eval_stride;
  std::vector<wfdb::StEpisode> episodes;
  std::vector<std::string> diagnostics;
};

RecordWindows process_record(const std::filesystem::path& dir, const std::string& name, const PipelineConfig& config);

/// Per-lead preprocessing: resample, baseline removal, low-pass.
std::vector<double> preprocess_lead(std::span<const double> signal, double rate, const PipelineConfig& config);

struct BuildResult {
  dataset::DatasetSplit split;
  nlohmann::ordered_json manifest;
};

BuildResult cmd_build(const PipelineConfig& config);

struct TrainOutcome {
  nn::TrainResult result;
  std::filesystem::path checkpoint;
  std::filesystem::path history;
};

TrainOutcome cmd_train(const PipelineConfig& config, const std::function<void(const nn::EpochRecord&)>& on_epoch = {});

eval::EvalReport cmd_eval(const PipelineConfig& config, const std::filesystem::path& checkpoint,
                          dataset::SplitName split = dataset::SplitName::Test);

/// One report per classical model keyed logreg / random_forest / gbm.
std::map<std::string, eval::EvalReport> cmd_baselines(const PipelineConfig& config,
                                                       dataset::SplitName split = dataset::SplitName::Test);

dataset::SplitName split_from_string(const std::string& s);

}  // namespace ecg::pipeline

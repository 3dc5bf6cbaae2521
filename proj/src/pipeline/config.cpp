#include <cstdlib>
#include <fstream>

#include "ecg/nn/checkpoint.hpp"
#include "ecg/pipeline.hpp"

namespace ecg::pipeline {
namespace {

[[noreturn]] void invalid(const std::string& m) { throw PipelineError(Errc::InvalidConfig, "config: " + m); }

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    invalid(std::string("bad value for '") + key + "': " + e.what());
  }
}

const nlohmann::json& section(const nlohmann::json& j, const char* key) {
  static const nlohmann::json empty = nlohmann::json::object();
  if (!j.contains(key)) return empty;
  if (!j.at(key).is_object()) invalid(std::string("'") + key + "' must be an object");
  return j.at(key);
}

}  // namespace

int exit_code(Errc e) {
  switch (e) {
    case Errc::ParseFailure: return 2;
    case Errc::NoRecords: return 3;
    case Errc::MissingShards: return 4;
    case Errc::CheckpointMismatch: return 5;
    case Errc::VerifyFailed: return 1;
    case Errc::InvalidConfig: break;
  }
  return 64;
}

nlohmann::ordered_json to_json(const PipelineConfig& c) {
  nlohmann::ordered_json ann = nlohmann::ordered_json::object();
  for (const auto& [p, ext] : c.annotators) ann[std::string(wfdb::to_string(p))] = ext;
  return {
      {"data_root", c.data_root.string()},
      {"protocol", std::string(wfdb::to_string(c.protocol))},
      {"annotators", ann},
      {"records", c.records},
      {"resample_to", c.resample_to},
      {"window_len", c.window_len},
      {"stride", c.stride},
      {"eval_stride", c.eval_stride},
      {"filters",
       {{"baseline_ms", {c.baseline.window_ms.first, c.baseline.window_ms.second}},
        {"lowpass_hz", c.lowpass.cutoff_hz},
        {"lowpass_taps", c.lowpass.taps}}},
      {"normalize", {{"epsilon", c.normalize.epsilon}, {"clamp", c.normalize.clamp}}},
      {"label", {{"ischemic_min_overlap", c.label_rule.ischemic_min_overlap}}},
      {"split", {{"train", c.fractions.train}, {"validation", c.fractions.validation}, {"test", c.fractions.test}}},
      {"max_normal_windows_per_record", c.max_normal_windows_per_record},
      {"model", nn::config_to_json(c.model)},
      {"training",
       {{"epochs", c.training.epochs},
        {"batch_size", c.training.batch_size},
        {"lr", c.training.lr},
        {"patience", c.training.patience},
        {"lr_factor", c.training.lr_factor},
        {"balance", c.training.balance},
        {"balance_ratio", c.training.balance_ratio}}},
      {"baselines",
       {{"logreg", {{"l2", c.baselines.logreg.l2}, {"epochs", c.baselines.logreg.epochs}, {"lr", c.baselines.logreg.lr}}},
        {"random_forest",
         {{"n_trees", c.baselines.forest.n_trees},
          {"max_depth", c.baselines.forest.max_depth},
          {"min_samples_leaf", c.baselines.forest.min_samples_leaf},
          {"feature_subsample", c.baselines.forest.feature_subsample},
          {"bootstrap", c.baselines.forest.bootstrap}}},
        {"gbm",
         {{"n_rounds", c.baselines.gbm.n_rounds},
          {"max_depth", c.baselines.gbm.max_depth},
          {"shrinkage", c.baselines.gbm.shrinkage},
          {"min_samples_leaf", c.baselines.gbm.min_samples_leaf}}}}},
      {"seed", c.seed},
      {"output_dir", c.output_dir.string()},
      {"jobs", c.jobs},
  };
}

PipelineConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) invalid("top level must be an object");
  PipelineConfig c;
  std::string s;
  if (j.contains("data_root")) {
    read(j, "data_root", s);
    c.data_root = s;
  }
  if (j.contains("protocol")) {
    read(j, "protocol", s);
    try {
      c.protocol = wfdb::protocol_from_string(s);
    } catch (const std::exception& e) {
      invalid(e.what());
    }
  }
  for (const auto& [k, v] : section(j, "annotators").items()) {
    try {
      c.annotators[wfdb::protocol_from_string(k)] = v.get<std::string>();
    } catch (const std::exception& e) {
      invalid(std::string("annotators: ") + e.what());
    }
  }
  read(j, "records", c.records);
  read(j, "resample_to", c.resample_to);
  read(j, "window_len", c.window_len);
  read(j, "stride", c.stride);
  read(j, "eval_stride", c.eval_stride);
  const auto& f = section(j, "filters");
  if (f.contains("baseline_ms")) {
    std::vector<double> ms;
    read(f, "baseline_ms", ms);
    if (ms.size() != 2) invalid("filters.baseline_ms must hold two window lengths");
    c.baseline = dsp::FilterSpec::median_baseline(ms[0], ms[1]);
  }
  read(f, "lowpass_hz", c.lowpass.cutoff_hz);
  read(f, "lowpass_taps", c.lowpass.taps);
  read(section(j, "normalize"), "epsilon", c.normalize.epsilon);
  read(section(j, "normalize"), "clamp", c.normalize.clamp);
  read(section(j, "label"), "ischemic_min_overlap", c.label_rule.ischemic_min_overlap);
  const auto& sp = section(j, "split");
  read(sp, "train", c.fractions.train);
  read(sp, "validation", c.fractions.validation);
  read(sp, "test", c.fractions.test);
  read(j, "max_normal_windows_per_record", c.max_normal_windows_per_record);
  try {
    c.model = nn::config_from_json(section(j, "model"));
  } catch (const std::exception& e) {
    invalid(e.what());
  }
  const auto& t = section(j, "training");
  read(t, "epochs", c.training.epochs);
  read(t, "batch_size", c.training.batch_size);
  read(t, "lr", c.training.lr);
  read(t, "patience", c.training.patience);
  read(t, "lr_factor", c.training.lr_factor);
  read(t, "balance", c.training.balance);
  read(t, "balance_ratio", c.training.balance_ratio);
  const auto& b = section(j, "baselines");
  const auto& lr = section(b, "logreg");
  read(lr, "l2", c.baselines.logreg.l2);
  read(lr, "epochs", c.baselines.logreg.epochs);
  read(lr, "lr", c.baselines.logreg.lr);
  const auto& rf = section(b, "random_forest");
  read(rf, "n_trees", c.baselines.forest.n_trees);
  read(rf, "max_depth", c.baselines.forest.max_depth);
  read(rf, "min_samples_leaf", c.baselines.forest.min_samples_leaf);
  read(rf, "feature_subsample", c.baselines.forest.feature_subsample);
  read(rf, "bootstrap", c.baselines.forest.bootstrap);
  const auto& gb = section(b, "gbm");
  read(gb, "n_rounds", c.baselines.gbm.n_rounds);
  read(gb, "max_depth", c.baselines.gbm.max_depth);
  read(gb, "shrinkage", c.baselines.gbm.shrinkage);
  read(gb, "min_samples_leaf", c.baselines.gbm.min_samples_leaf);
  read(j, "seed", c.seed);
  if (j.contains("output_dir")) {
    read(j, "output_dir", s);
    c.output_dir = s;
  }
  read(j, "jobs", c.jobs);

  c.baselines.logreg.seed = c.baselines.forest.seed = c.baselines.gbm.seed = c.seed;
  if (!(c.resample_to > 0.0)) invalid("resample_to must be > 0");
  if (c.window_len == 0 || c.window_len % c.model.segment_len() != 0) {
    invalid("window_len must be a positive multiple of " + std::to_string(c.model.segment_len()));
  }
  if (c.stride == 0 || c.eval_stride == 0) invalid("strides must be >= 1");
  if (c.training.batch_size == 0) invalid("training.batch_size must be >= 1");
  if (!(c.training.lr > 0.0)) invalid("training.lr must be > 0");
  if (c.jobs < 1) invalid("jobs must be >= 1");
  try {
    c.baseline.validate(c.resample_to);
    c.lowpass.validate(c.resample_to);
  } catch (const std::exception& e) {
    invalid(e.what());
  }
  return c;
}

void apply_override(nlohmann::json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) invalid("override '" + assignment + "' is not of the form a.b.c=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  nlohmann::json value;
  try {
    value = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception&) {
    value = text;
  }
  nlohmann::json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) invalid("override path '" + path + "' has an empty component");
    if (!node->is_object()) *node = nlohmann::json::object();
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

PipelineConfig load_config(const std::optional<std::filesystem::path>& file, const std::vector<std::string>& overrides) {
  nlohmann::json j = nlohmann::json::object();
  if (file) {
    std::ifstream in(*file);
    if (!in) invalid("cannot open " + file->string());
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      invalid(file->string() + ": " + e.what());
    }
  }
  for (const auto& o : overrides) apply_override(j, o);
  const bool has_root = j.contains("data_root") && j["data_root"].is_string() && !j["data_root"].get<std::string>().empty();
  if (!has_root) {
    if (const char* env = std::getenv("ECG_DATA_ROOT"); env && *env) j["data_root"] = env;
  }
  return config_from_json(j);
}

dataset::SplitName split_from_string(const std::string& s) {
  if (s == "train") return dataset::SplitName::Train;
  if (s == "validation" || s == "val") return dataset::SplitName::Validation;
  if (s == "test") return dataset::SplitName::Test;
  invalid("unknown split '" + s + "'");
}

}  // namespace ecg::pipeline

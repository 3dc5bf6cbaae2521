#include "ecg/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ecg/nn/checkpoint.hpp"
#include "ecg/rng.hpp"

namespace ecg::pipeline {
namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<std::string> diag_strings(const std::vector<wfdb::WfdbDiagnostic>& d) {
  std::vector<std::string> out;
  for (const auto& x : d) out.push_back(x.message);
  return out;
}

dataset::DatasetSplit load_split(const PipelineConfig& config) {
  try {
    return dataset::import_shards(config.shard_dir());
  } catch (const dataset::DatasetError& e) {
    throw PipelineError(Errc::MissingShards, std::string(e.what()) + " (run `build` first)");
  }
}

std::vector<eval::ScoredWindow> scored(std::span<const dataset::EcgWindow> windows, std::span<const double> scores) {
  std::vector<eval::ScoredWindow> out;
  out.reserve(windows.size());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    out.push_back({windows[i].record_id, scores[i], static_cast<std::uint8_t>(windows[i].label)});
  }
  return out;
}

eval::EvalReport report_for(const std::string& model, const std::string& split,
                            std::span<const eval::ScoredWindow> windows) {
  try {
    return eval::make_report(model, split, windows);
  } catch (const eval::EvalError& e) {
    throw std::runtime_error("cannot evaluate " + model + " on the " + split + " split: " + e.what());
  }
}

}  // namespace

std::vector<double> preprocess_lead(std::span<const double> signal, double rate, const PipelineConfig& config) {
  std::vector<double> x = rate == config.resample_to ? std::vector<double>(signal.begin(), signal.end())
                                                     : dsp::resample(signal, rate, config.resample_to);
  x = dsp::remove_baseline(x, config.resample_to, config.baseline);
  return dsp::lowpass(x, config.resample_to, config.lowpass);
}

RecordWindows process_record(const std::filesystem::path& dir, const std::string& name, const PipelineConfig& config) {
  RecordWindows out;
  auto loaded = wfdb::load_record(dir, name);
  out.diagnostics = diag_strings(loaded.diagnostics);
  const auto& rec = loaded.record;
  const double rate = rec.header.sampling_rate;

  const auto ann_path = dir / (name + "." + config.annotators.at(config.protocol));
  if (std::filesystem::exists(ann_path)) {
    const auto events = wfdb::read_annotations(wfdb::read_file_bytes(ann_path));
    auto ex = wfdb::extract_st_episodes(events, config.protocol, rate);
    out.episodes = std::move(ex.episodes);
    for (auto& d : diag_strings(ex.diagnostics)) out.diagnostics.push_back(std::move(d));
  } else {
    out.diagnostics.push_back("no annotation file " + ann_path.filename().string() + "; every window is normal");
  }

  const std::size_t len = config.window_len;
  for (std::size_t lead = 0; lead < rec.signals.size(); ++lead) {
    const auto x = preprocess_lead(rec.signals[lead], rate, config);
    if (x.size() < len) {
      out.diagnostics.push_back("lead " + std::to_string(lead) + " is shorter than one window");
      continue;
    }
    std::vector<dataset::Interval> eps;
    for (const auto& ep : out.episodes) {
      if (ep.lead == static_cast<int>(lead)) eps.push_back(dataset::rescale_episode(ep, rate, config.resample_to));
    }
    for (int pass = 0; pass < 2; ++pass) {
      const std::size_t stride = pass == 0 ? config.stride : config.eval_stride;
      std::vector<std::pair<std::size_t, dataset::Label>> picks;
      std::vector<std::size_t> normals;
      for (std::size_t start = 0; start + len <= x.size(); start += stride) {
        const auto wl = dataset::label_window(start, len, eps, config.label_rule);
        if (wl == dataset::WindowLabel::Excluded) continue;
        const auto label = wl == dataset::WindowLabel::Ischemic ? dataset::Label::Ischemic : dataset::Label::Normal;
        if (label == dataset::Label::Normal) normals.push_back(picks.size());
        picks.emplace_back(start, label);
      }
      const std::size_t cap = config.max_normal_windows_per_record;
      std::vector<bool> keep(picks.size(), true);
      if (cap > 0 && normals.size() > cap) {
        Rng rng(mix_seed(config.seed, mix_seed(fnv1a(name), lead * 2 + static_cast<std::size_t>(pass))));
        rng.shuffle(normals.begin(), normals.end());
        for (std::size_t k = cap; k < normals.size(); ++k) keep[normals[k]] = false;
      }
      auto& dest = pass == 0 ? out.train_stride : out.eval_stride;
      for (std::size_t i = 0; i < picks.size(); ++i) {
        if (!keep[i]) continue;
        const auto [start, label] = picks[i];
        const auto norm = dsp::robust_normalize(std::span<const double>(x).subspan(start, len), config.normalize);
        dest.push_back({name, static_cast<std::uint8_t>(lead), start, std::vector<float>(norm.begin(), norm.end()),
                        label});
      }
    }
  }
  return out;
}

RecordSummary inspect_record(const std::filesystem::path& path, const PipelineConfig& config) {
  const auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  const std::string name = path.has_extension() ? path.stem().string() : path.filename().string();
  RecordSummary s;
  try {
    auto loaded = wfdb::load_record(dir, name);
    const auto& h = loaded.record.header;
    s.name = h.record_name;
    s.sampling_rate = h.sampling_rate;
    s.n_samples = h.n_samples;
    s.duration_hours = h.duration_seconds() / 3600.0;
    for (const auto& sig : h.signals) s.leads.push_back(sig.description.empty() ? sig.file_name : sig.description);
    s.diagnostics = diag_strings(loaded.diagnostics);
    for (auto p : {wfdb::Protocol::A, wfdb::Protocol::B, wfdb::Protocol::C}) {
      const auto ann = dir / (name + "." + config.annotators.at(p));
      const std::string key(wfdb::to_string(p));
      if (!std::filesystem::exists(ann)) {
        s.episodes[key] = std::nullopt;
        continue;
      }
      const auto events = wfdb::read_annotations(wfdb::read_file_bytes(ann));
      s.episodes[key] = wfdb::extract_st_episodes(events, p, h.sampling_rate).episodes.size();
    }
  } catch (const std::exception& e) {
    throw PipelineError(Errc::ParseFailure, e.what());
  }
  return s;
}

nlohmann::ordered_json to_json(const RecordSummary& s) {
  nlohmann::ordered_json eps = nlohmann::ordered_json::object();
  for (const auto& [k, v] : s.episodes) eps[k] = v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
  return {{"record", s.name},
          {"sampling_rate", s.sampling_rate},
          {"n_samples", s.n_samples},
          {"duration_hours", s.duration_hours},
          {"leads", s.leads},
          {"episodes", eps},
          {"diagnostics", s.diagnostics}};
}

std::string to_text(const RecordSummary& s) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << "record " << s.name << ": " << s.leads.size() << " leads @ " << s.sampling_rate << " Hz, " << s.n_samples
     << " samples (" << s.duration_hours << " h)\n";
  for (std::size_t i = 0; i < s.leads.size(); ++i) os << "  lead " << i << ": " << s.leads[i] << '\n';
  for (const auto& [p, n] : s.episodes) {
    os << "  protocol " << p << " episodes: " << (n ? std::to_string(*n) : std::string("n/a (no annotation file)"))
       << '\n';
  }
  for (const auto& d : s.diagnostics) os << "  warning: " << d << '\n';
  return os.str();
}

BuildResult cmd_build(const PipelineConfig& config) {
  if (config.data_root.empty() || !std::filesystem::is_directory(config.data_root)) {
    throw PipelineError(Errc::NoRecords, "data_root '" + config.data_root.string() + "' is not a directory");
  }
  const auto names = config.records.empty() ? wfdb::discover_records(config.data_root) : config.records;
  if (names.empty()) throw PipelineError(Errc::NoRecords, "no records under " + config.data_root.string());

  std::vector<RecordWindows> results(names.size());
  std::vector<std::string> errors(names.size());
  const auto n = static_cast<std::ptrdiff_t>(names.size());
#pragma omp parallel for schedule(dynamic) num_threads(config.jobs)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      results[k] = process_record(config.data_root, names[k], config);
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  }

  std::vector<dataset::EcgWindow> train_windows;
  nlohmann::ordered_json records = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < names.size(); ++k) {
    nlohmann::ordered_json r{{"name", names[k]}};
    if (!errors[k].empty()) {
      r["error"] = errors[k];
    } else {
      r["episodes"] = results[k].episodes.size();
      r["windows"] = results[k].train_stride.size();
      r["diagnostics"] = results[k].diagnostics;
      train_windows.insert(train_windows.end(), results[k].train_stride.begin(), results[k].train_stride.end());
    }
    records.push_back(std::move(r));
  }
  if (train_windows.empty()) throw PipelineError(Errc::NoRecords, "no usable windows in any record");

  dataset::DatasetSplit split;
  try {
    split = dataset::split_by_record(std::move(train_windows), config.fractions, config.seed);
  } catch (const dataset::DatasetError& e) {
    throw PipelineError(Errc::NoRecords, e.what());
  }
  // Held-out splits use the denser evaluation stride.
  split.validation.clear();
  split.test.clear();
  for (std::size_t k = 0; k < names.size(); ++k) {
    const auto it = split.provenance.find(names[k]);
    if (!errors[k].empty() || it == split.provenance.end() || it->second == dataset::SplitName::Train) continue;
    auto& dest = split.part(it->second);
    dest.insert(dest.end(), results[k].eval_stride.begin(), results[k].eval_stride.end());
  }
  for (auto& r : records) {
    const auto it = split.provenance.find(r["name"].get<std::string>());
    if (it != split.provenance.end()) r["split"] = std::string(dataset::to_string(it->second));
  }

  dataset::export_shards(split, config.shard_dir());
  nlohmann::ordered_json counts = nlohmann::ordered_json::object();
  for (auto s : {dataset::SplitName::Train, dataset::SplitName::Validation, dataset::SplitName::Test}) {
    const auto c = dataset::count_classes(split.part(s));
    counts[std::string(dataset::to_string(s))] = {{"normal", c.normal}, {"ischemic", c.ischemic}};
  }
  nlohmann::ordered_json manifest{{"format", "ECGWIN01"},
                                  {"protocol", std::string(wfdb::to_string(config.protocol))},
                                  {"window_len", config.window_len},
                                  {"class_counts", counts},
                                  {"records", records},
                                  {"config", to_json(config)}};
  write_text(config.shard_dir() / "manifest.json", manifest.dump(2) + "\n");
  return {std::move(split), std::move(manifest)};
}

TrainOutcome cmd_train(const PipelineConfig& config, const std::function<void(const nn::EpochRecord&)>& on_epoch) {
  auto split = load_split(config);
  auto train_set = std::move(split.train);
  const auto counts = dataset::count_classes(train_set);
  if (config.training.balance && counts.normal > 0 && counts.ischemic > 0) {
    train_set = dataset::balance_classes(std::move(train_set), mix_seed(config.seed, 0xba1a), config.training.balance_ratio);
  }
  nn::TrainOptions opts;
  opts.epochs = config.training.epochs;
  opts.batch_size = config.training.batch_size;
  opts.lr = config.training.lr;
  opts.plateau.patience = config.training.patience;
  opts.plateau.factor = config.training.lr_factor;
  opts.seed = config.seed;
  opts.on_epoch = on_epoch;
  TrainOutcome out{[&] {
                     try {
                       return nn::train(train_set, split.validation, config.model, opts);
                     } catch (const nn::NnError& e) {
                       if (e.kind() == nn::Errc::EmptySplit) throw PipelineError(Errc::MissingShards, e.what());
                       throw;
                     }
                   }(),
                   config.checkpoint_path(), config.history_path()};
  std::filesystem::create_directories(config.output_dir);
  nn::save_checkpoint(out.result.best, out.checkpoint);
  write_text(out.history, nn::history_csv(out.result.history));
  return out;
}

eval::EvalReport cmd_eval(const PipelineConfig& config, const std::filesystem::path& checkpoint,
                          dataset::SplitName split_name) {
  std::optional<nn::ResidualNet<float>> net;
  try {
    net.emplace(nn::load_checkpoint(checkpoint));
  } catch (const nn::NnError& e) {
    throw PipelineError(Errc::CheckpointMismatch, e.what());
  }
  if (!(net->config() == config.model)) {
    throw PipelineError(Errc::CheckpointMismatch, "checkpoint model config differs from the configured model: " +
                                                      nn::config_to_json(net->config()).dump() + " vs " +
                                                      nn::config_to_json(config.model).dump());
  }
  const auto split = load_split(config);
  const auto& part = split.part(split_name);
  nn::SplitScores s;
  try {
    s = nn::score_windows(*net, part, config.training.batch_size);
  } catch (const nn::NnError& e) {
    throw PipelineError(Errc::CheckpointMismatch, e.what());
  }
  const auto sw = scored(part, s.scores);
  auto report = report_for("cnn", std::string(dataset::to_string(split_name)), sw);
  const std::string tag(dataset::to_string(split_name));
  write_text(config.output_dir / ("eval_" + tag + ".json"), eval::to_json(report).dump(2) + "\n");
  write_text(config.output_dir / ("roc_cnn_" + tag + ".csv"), eval::roc_csv(report.roc));
  return report;
}

std::map<std::string, eval::EvalReport> cmd_baselines(const PipelineConfig& config, dataset::SplitName split_name) {
  const auto split = load_split(config);
  const double rate = config.resample_to;
  const auto X = baselines::feature_matrix(split.train, rate);
  const auto y = baselines::labels_of(split.train);
  const auto& part = split.part(split_name);
  const auto Xe = baselines::feature_matrix(part, rate);
  const std::string tag(dataset::to_string(split_name));

  const auto lr = baselines::fit_logreg(X, y, config.baselines.logreg);
  const auto rf = baselines::fit_random_forest(X, y, config.baselines.forest);
  const auto gb = baselines::fit_gbm(X, y, config.baselines.gbm);
  const auto mdir = config.output_dir / "baselines";
  write_text(mdir / "logreg.json", baselines::to_json(lr).dump() + "\n");
  write_text(mdir / "random_forest.json", baselines::to_json(rf).dump() + "\n");
  write_text(mdir / "gbm.json", baselines::to_json(gb).dump() + "\n");

  std::map<std::string, eval::EvalReport> reports;
  reports["logreg"] = report_for("logreg", tag, scored(part, baselines::predict_all(lr, Xe)));
  reports["random_forest"] = report_for("random_forest", tag, scored(part, baselines::predict_all(rf, Xe)));
  reports["gbm"] = report_for("gbm", tag, scored(part, baselines::predict_all(gb, Xe)));

  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [k, r] : reports) {
    j[k] = eval::to_json(r, false);
    write_text(config.output_dir / ("roc_" + k + "_" + tag + ".csv"), eval::roc_csv(r.roc));
  }
  write_text(config.output_dir / ("baselines_" + tag + ".json"), j.dump(2) + "\n");
  return reports;
}

}  // namespace ecg::pipeline

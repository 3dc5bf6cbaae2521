#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>

#include <gtest/gtest.h>

#include "ecg/nn/checkpoint.hpp"
#include "ecg/pipeline.hpp"
#include "ecg/testing/wfdb_writer.hpp"

using namespace ecg;
using namespace ecg::pipeline;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& tag) {
  const auto p = fs::temp_directory_path() / ("ecg_pipeline_" + std::to_string(::getpid()) + "_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

nn::ModelConfig tiny_model() {
  nn::ModelConfig m;
  m.n_residual_blocks = 2;
  m.kernel_len = 4;
  m.base_filters = 4;
  return m;
}

PipelineConfig small_config(const fs::path& data, const fs::path& out) {
  PipelineConfig c;
  c.data_root = data;
  c.output_dir = out;
  c.model = tiny_model();
  c.training.epochs = 2;
  c.training.batch_size = 16;
  c.baselines.forest.n_trees = 5;
  c.baselines.gbm.n_rounds = 5;
  c.baselines.logreg.epochs = 50;
  c.seed = 4;
  return c;
}

Errc kind_of(auto&& f) {
  try {
    f();
  } catch (const PipelineError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no PipelineError";
  return Errc::InvalidConfig;
}

struct Run {
  int code;
  std::string out;
};

Run run_cli(const std::string& args, bool with_stderr = false) {
  const std::string cmd = std::string(ECG_CLI_PATH) + " " + args + (with_stderr ? " 2>&1" : " 2>/dev/null");
  FILE* p = ::popen(cmd.c_str(), "r");
  Run r{-1, {}};
  if (!p) return r;
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

// One corpus, built and trained once for the whole suite.
class PipelineRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = scratch("corpus");
    ecg::testing::write_synthetic_corpus(root_ / "data", 20, 300.0, 21);
    config_ = small_config(root_ / "data", root_ / "out");
    build_ = cmd_build(config_);
    train_.emplace(cmd_train(config_));
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  static inline fs::path root_;
  static inline PipelineConfig config_;
  static inline BuildResult build_;
  static inline std::optional<TrainOutcome> train_;
};

}  // namespace

TEST(Config, DefaultsRoundTripThroughJson) {
  const PipelineConfig c;
  const auto back = config_from_json(nlohmann::json::parse(to_json(c).dump()));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(back.protocol, wfdb::Protocol::B);
  EXPECT_EQ(back.window_len, 6144u);
}

TEST(Config, OverridesSetNestedPaths) {
  nlohmann::json j = nlohmann::json::object();
  apply_override(j, "training.epochs=3");
  apply_override(j, "model.base_filters=8");
  apply_override(j, "protocol=C");
  apply_override(j, "output_dir=some/where");
  const auto c = config_from_json(j);
  EXPECT_EQ(c.training.epochs, 3u);
  EXPECT_EQ(c.model.base_filters, 8u);
  EXPECT_EQ(c.protocol, wfdb::Protocol::C);
  EXPECT_EQ(c.output_dir, fs::path("some/where"));
}

TEST(Config, InvalidValuesRejected) {
  for (const char* o : {"training.lr=0", "window_len=1000", "jobs=0", "protocol=Z", "training.epochs=\"x\""}) {
    nlohmann::json j = nlohmann::json::object();
    apply_override(j, o);
    EXPECT_EQ(kind_of([&] { config_from_json(j); }), Errc::InvalidConfig) << o;
  }
  nlohmann::json j;
  EXPECT_EQ(kind_of([&] { apply_override(j, "no_equals_sign"); }), Errc::InvalidConfig);
}

TEST(Config, LoadReadsFileThenOverrides) {
  const auto dir = scratch("cfg");
  std::ofstream(dir / "c.json") << R"({"training": {"epochs": 7, "batch_size": 8}, "seed": 5})";
  const auto c = load_config(dir / "c.json", {"training.epochs=2"});
  EXPECT_EQ(c.training.epochs, 2u);
  EXPECT_EQ(c.training.batch_size, 8u);
  EXPECT_EQ(c.seed, 5u);
  fs::remove_all(dir);
}

TEST(ExitCodes, FixedMapping) {
  EXPECT_EQ(exit_code(Errc::VerifyFailed), 1);
  EXPECT_EQ(exit_code(Errc::ParseFailure), 2);
  EXPECT_EQ(exit_code(Errc::NoRecords), 3);
  EXPECT_EQ(exit_code(Errc::MissingShards), 4);
  EXPECT_EQ(exit_code(Errc::CheckpointMismatch), 5);
}

TEST(Build, EmptyDataRootIsNoRecords) {
  const auto dir = scratch("empty");
  EXPECT_EQ(kind_of([&] { cmd_build(small_config(dir, dir / "out")); }), Errc::NoRecords);
  EXPECT_EQ(kind_of([&] { cmd_build(small_config(dir / "absent", dir / "out")); }), Errc::NoRecords);
  fs::remove_all(dir);
}

TEST(Train, MissingShardsIsReported) {
  const auto dir = scratch("noshards");
  const auto c = small_config(dir, dir / "out");
  EXPECT_EQ(kind_of([&] { cmd_train(c); }), Errc::MissingShards);
  EXPECT_EQ(kind_of([&] { cmd_baselines(c); }), Errc::MissingShards);
  fs::remove_all(dir);
}

TEST(ProcessRecord, ProtocolBLabelsOnlyQualifyingEpisodes) {
  const auto dir = scratch("protob");
  ecg::testing::SyntheticRecordOptions o;
  o.name = "r1";
  o.seconds = 240.0;
  o.rate = 250.0;
  // 60 s at 150 uV qualifies; 60 s at 60 uV is below the protocol-B depth.
  o.episodes = {{0, 250 * 20, 250 * 80, -150.0}, {0, 250 * 150, 250 * 210, -60.0}};
  ecg::testing::write_synthetic_record(dir, o);
  auto c = small_config(dir, dir / "out");
  c.max_normal_windows_per_record = 0;
  const auto w = process_record(dir, "r1", c);
  ASSERT_EQ(w.episodes.size(), 1u);
  EXPECT_EQ(w.episodes[0].lead, 0);
  std::size_t ischemic = 0;
  for (const auto& x : w.eval_stride) {
    EXPECT_EQ(x.samples.size(), c.window_len);
    if (x.label != dataset::Label::Ischemic) continue;
    ++ischemic;
    EXPECT_EQ(x.lead, 0);
    // Episode spans 4000..16000 samples at 200 Hz.
    EXPECT_LT(x.start_sample, 16000u);
    EXPECT_GT(x.start_sample + c.window_len, 4000u);
  }
  EXPECT_GT(ischemic, 0u);
  fs::remove_all(dir);
}

TEST_F(PipelineRun, BuildWritesShardsAndManifest) {
  EXPECT_TRUE(fs::exists(config_.shard_dir() / "manifest.json"));
  EXPECT_EQ(build_.manifest["format"], "ECGWIN01");
  EXPECT_EQ(build_.manifest["records"].size(), 20u);
  const auto reloaded = dataset::import_shards(config_.shard_dir());
  EXPECT_EQ(reloaded.train, build_.split.train);
  EXPECT_EQ(reloaded.test, build_.split.test);
  for (const auto& [rec, part] : build_.split.provenance) {
    for (auto s : {dataset::SplitName::Train, dataset::SplitName::Validation, dataset::SplitName::Test}) {
      if (s == part) continue;
      for (const auto& w : build_.split.part(s)) EXPECT_NE(w.record_id, rec);
    }
  }
}

TEST_F(PipelineRun, TrainWritesCheckpointAndHistory) {
  EXPECT_TRUE(fs::exists(train_->checkpoint));
  ASSERT_EQ(train_->result.history.size(), config_.training.epochs);
  std::ifstream in(train_->history);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "epoch,train_loss,val_loss,val_auc,lr");
}

TEST_F(PipelineRun, EvalOnValidationMatchesBestEpoch) {
  ASSERT_TRUE(train_->result.best_epoch.has_value());
  const auto& row = train_->result.history.at(*train_->result.best_epoch - 1);
  ASSERT_TRUE(std::isfinite(row.val_auc)) << "validation holds a single class";
  const auto r = cmd_eval(config_, train_->checkpoint, dataset::SplitName::Validation);
  EXPECT_NEAR(r.auc, row.val_auc, 1e-9);
  EXPECT_TRUE(fs::exists(config_.output_dir / "eval_validation.json"));
  EXPECT_TRUE(fs::exists(config_.output_dir / "roc_cnn_validation.csv"));
}

TEST_F(PipelineRun, EvalWithWrongCheckpointIsMismatch) {
  auto other = config_;
  other.model.base_filters = 8;
  EXPECT_EQ(kind_of([&] { cmd_eval(other, train_->checkpoint); }), Errc::CheckpointMismatch);
  const auto bogus = root_ / "bogus.ckpt";
  std::ofstream(bogus) << "not a checkpoint";
  EXPECT_EQ(kind_of([&] { cmd_eval(config_, bogus); }), Errc::CheckpointMismatch);
}

TEST_F(PipelineRun, BaselinesReportThreeModels) {
  const auto reports = cmd_baselines(config_, dataset::SplitName::Test);
  ASSERT_EQ(reports.size(), 3u);
  for (const char* k : {"logreg", "random_forest", "gbm"}) {
    ASSERT_TRUE(reports.contains(k)) << k;
    EXPECT_EQ(reports.at(k).n_windows, build_.split.test.size());
    EXPECT_TRUE(fs::exists(config_.output_dir / "baselines" / (std::string(k) + ".json")));
  }
}

TEST_F(PipelineRun, InspectSummarizesRecord) {
  const auto s = inspect_record(config_.data_root / "s20000", config_);
  EXPECT_EQ(s.leads.size(), 2u);
  EXPECT_DOUBLE_EQ(s.sampling_rate, 250.0);
  EXPECT_TRUE(s.episodes.at("B").has_value());
  EXPECT_FALSE(s.episodes.at("A").has_value());
  EXPECT_NE(to_text(s).find("protocol B episodes"), std::string::npos);
}

TEST(Cli, MissingDatExitsTwoNamingFile) {
  const auto dir = scratch("cli");
  ecg::testing::SyntheticRecordOptions o;
  o.name = "lonely";
  o.seconds = 20.0;
  ecg::testing::write_synthetic_record(dir, o);
  const auto ok = run_cli("inspect --json " + (dir / "lonely").string());
  EXPECT_EQ(ok.code, 0);
  const auto j = nlohmann::json::parse(ok.out);
  EXPECT_EQ(j["record"], "lonely");
  EXPECT_EQ(j["leads"].size(), 2u);

  fs::remove(dir / "lonely.dat");
  const auto bad = run_cli("inspect " + (dir / "lonely").string(), true);
  EXPECT_EQ(bad.code, 2);
  EXPECT_NE(bad.out.find("lonely.dat"), std::string::npos) << bad.out;
  fs::remove_all(dir);
}

TEST(Cli, EmptyDataRootExitsThree) {
  const auto dir = scratch("cli_empty");
  const auto r = run_cli("build --set data_root=" + dir.string() + " --set output_dir=" + (dir / "o").string());
  EXPECT_EQ(r.code, 3);
  fs::remove_all(dir);
}

#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "ecg/nn/layers.hpp"
#include "ecg/pipeline.hpp"
#include "ecg/testing/verify.hpp"

namespace {

using ecg::pipeline::PipelineConfig;
using nlohmann::ordered_json;

struct Common {
  std::optional<std::string> config;
  std::vector<std::string> overrides;
  int jobs = 0;
  bool json = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "JSON configuration file");
  cmd->add_option("--set", c.overrides, "Override one config path, e.g. --set training.epochs=5")->take_all();
  cmd->add_option("-j,--jobs", c.jobs, "Worker threads (0 keeps the config value)");
  cmd->add_flag("--json", c.json, "Machine-readable output on stdout");
}

PipelineConfig load(const Common& c) {
  std::optional<std::filesystem::path> file;
  if (c.config) file = *c.config;
  auto cfg = ecg::pipeline::load_config(file, c.overrides);
  if (c.jobs > 0) cfg.jobs = c.jobs;
  return cfg;
}

void print(const ordered_json& j) { std::cout << j.dump(2) << "\n"; }

void print_report(const ecg::eval::EvalReport& r) {
  std::printf("%-14s %-5s windows=%zu positive=%zu auc=%.4f", r.model.c_str(),
              r.split.c_str(), r.n_windows, r.n_positive, r.auc);
  if (r.at_default.sensitivity) std::printf(" sens@0.5=%.4f", *r.at_default.sensitivity);
  if (r.at_default.specificity) std::printf(" spec@0.5=%.4f", *r.at_default.specificity);
  std::printf("\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ST-segment ischemia detection from long-term ECG"};
  app.require_subcommand(1);

  Common common;
  std::string record;
  auto* inspect = app.add_subcommand("inspect", "Summarize one WFDB record");
  inspect->add_option("record", record, "Record path, with or without extension")->required();
  add_common(inspect, common);

  auto* build = app.add_subcommand("build", "Preprocess records into window shards");
  add_common(build, common);

  auto* train = app.add_subcommand("train", "Train the residual network on built shards");
  add_common(train, common);

  std::optional<std::string> checkpoint;
  std::string split = "test";
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on one split");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint file (default: <output_dir>/model.ckpt)");
  eval->add_option("--split", split, "train, val or test")->check(CLI::IsMember({"train", "val", "test"}));
  add_common(eval, common);

  auto* base = app.add_subcommand("baselines", "Fit and evaluate the classical baselines");
  base->add_option("--split", split, "train, val or test")->check(CLI::IsMember({"train", "val", "test"}));
  add_common(base, common);

  std::uint64_t verify_seed = 1;
  std::string fault;
  auto* verify = app.add_subcommand("verify", "Self-contained gradient, oracle and round-trip checks");
  verify->add_option("--seed", verify_seed, "Seed for the synthetic inputs");
  verify->add_option("--inject-fault", fault, "Deliberately break a kernel")->check(CLI::IsMember({"conv-backward"}));
  verify->add_flag("--json", common.json, "Machine-readable output on stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*inspect) {
      const auto s = ecg::pipeline::inspect_record(record, load(common));
      if (common.json) print(ecg::pipeline::to_json(s));
      else std::cout << ecg::pipeline::to_text(s);
    } else if (*build) {
      const auto r = ecg::pipeline::cmd_build(load(common));
      if (common.json) print(r.manifest);
      else std::cout << "shards written; manifest:\n" << r.manifest.dump(2) << "\n";
    } else if (*train) {
      const bool json = common.json;
      const auto out = ecg::pipeline::cmd_train(load(common), [json](const ecg::nn::EpochRecord& e) {
        std::fprintf(json ? stderr : stdout, "epoch %zu train_loss=%.5f val_loss=%.5f val_auc=%.4f lr=%g\n", e.epoch,
                     e.train_loss, e.val_loss, e.val_auc, e.lr);
      });
      const long best = out.result.best_epoch ? static_cast<long>(*out.result.best_epoch) : -1;
      ordered_json j{{"best_epoch", best},
                     {"checkpoint", out.checkpoint.string()},
                     {"history", out.history.string()}};
      if (common.json) print(j);
      else std::cout << "best epoch " << best << "; checkpoint " << out.checkpoint.string() << "\n";
    } else if (*eval) {
      const auto cfg = load(common);
      const auto r =
          ecg::pipeline::cmd_eval(cfg, checkpoint ? std::filesystem::path(*checkpoint) : cfg.checkpoint_path(), ecg::pipeline::split_from_string(split));
      if (common.json) print(ecg::eval::to_json(r, false));
      else print_report(r);
    } else if (*base) {
      const auto reports = ecg::pipeline::cmd_baselines(load(common), ecg::pipeline::split_from_string(split));
      if (common.json) {
        ordered_json j = ordered_json::object();
        for (const auto& [name, r] : reports) j[name] = ecg::eval::to_json(r, false);
        print(j);
      } else {
        for (const auto& [name, r] : reports) print_report(r);
      }
    } else if (*verify) {
      if (fault == "conv-backward") ecg::nn::testing_hooks::set_conv_backward_fault(true);
      const auto checks = ecg::testing::run_verify_suite(verify_seed);
      bool ok = true;
      ordered_json j = ordered_json::array();
      for (const auto& c : checks) {
        ok = ok && c.passed;
        j.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}, {"seconds", c.seconds}});
        if (!common.json) {
          std::printf("[%s] %s (%.2f s): %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.seconds, c.detail.c_str());
        }
      }
      if (common.json) print(j);
      return ok ? 0 : ecg::pipeline::exit_code(ecg::pipeline::Errc::VerifyFailed);
    }
  } catch (const ecg::pipeline::PipelineError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ecg::pipeline::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return ecg::pipeline::exit_code(ecg::pipeline::Errc::InvalidConfig);
  }
  return 0;
}

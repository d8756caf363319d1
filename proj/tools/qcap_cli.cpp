#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qcap/errors.hpp"
#include "qcap/pipeline.hpp"

namespace {

qcap::RunProfile parse_profile(const std::string& name) {
  if (name == "desk") return qcap::RunProfile::Desk;
  if (name == "smoke") return qcap::RunProfile::Smoke;
  throw qcap::ConfigError("profile must be desk or smoke");
}

void print_outcome(const qcap::PresetOutcome& outcome) {
  for (const auto& [key, value] : outcome.values) std::cout << key << " = " << value << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learn and evaluate quantum-processor capability models"};
  app.require_subcommand(1);

  std::string config_path, out_dir, format = "csv";
  uint64_t seed = 1;
  int jobs = 1;
  std::string model_path, dataset_path, split = "test";
  std::string pass1_path, pass2_path;
  std::string profile_name = "desk", variant = "growing-pains", reuse_dir;
  bool ood_flag = false;

  const auto add_common = [&](CLI::App* cmd, bool with_config) {
    if (with_config)
      cmd->add_option("--config", config_path, "experiment config file")->required();
    cmd->add_option("--out", out_dir, "output directory (overrides the config)");
    cmd->add_option("--seed", seed, "master seed (overrides the config)");
    cmd->add_option("--jobs", jobs, "worker threads");
  };

  CLI::App* sample = app.add_subcommand("sample", "draw a circuit set");
  add_common(sample, true);
  CLI::App* simulate = app.add_subcommand("simulate", "label circuits with an error model");
  add_common(simulate, true);
  CLI::App* train = app.add_subcommand("train", "select and train a capability model");
  add_common(train, true);

  CLI::App* evaluate = app.add_subcommand("evaluate", "score a model against a dataset");
  evaluate->add_option("--model", model_path, "cnn .model file or erm .json file")->required();
  evaluate->add_option("--dataset", dataset_path, "dataset .jsonl file")->required();
  evaluate->add_option("--out", out_dir, "output directory")->required();
  evaluate->add_option("--split", split, "dataset split to score (default test)");
  evaluate->add_option("--jobs", jobs, "worker threads");
  evaluate->add_option("--format", format, "row format: csv or jsonl");
  evaluate->add_flag("--out-of-distribution", ood_flag, "tag the report as a transfer evaluation");

  CLI::App* sbm = app.add_subcommand("sbm", "stability baseline between two measurement passes");
  sbm->add_option("--pass1", pass1_path, "first-pass dataset")->required();
  sbm->add_option("--pass2", pass2_path, "second-pass dataset")->required();
  sbm->add_option("--out", out_dir, "output directory")->required();
  sbm->add_option("--format", format, "row format: csv or jsonl");

  const auto add_preset = [&](const std::string& name, const std::string& help) {
    CLI::App* cmd = app.add_subcommand(name, help);
    cmd->add_option("--out", out_dir, "output directory")->required();
    cmd->add_option("--seed", seed, "master seed (default 1)");
    cmd->add_option("--jobs", jobs, "worker threads");
    cmd->add_option("--profile", profile_name, "desk (full study) or smoke (fast pipeline check)");
    return cmd;
  };
  CLI::App* p5q = add_preset("preset-5q-lps", "five-qubit stochastic-noise learning study");
  CLI::App* pnm =
      add_preset("preset-nonmarkovian", "depth- and context-dependent noise study (3x3 grid)");
  pnm->add_option("--variant", variant, "growing-pains or double-trouble");
  CLI::App* pco = add_preset("preset-coherent", "coherent-noise failure-mode study");
  CLI::App* pab = add_preset("preset-ablation", "sensitivity-channel ablation study");
  pab->add_option("--reuse", reuse_dir, "finished preset-5q-lps directory to reuse");
  CLI::App* pod = add_preset("preset-ood", "periodic-circuit transfer study");
  pod->add_option("--reuse", reuse_dir, "finished preset-5q-lps directory to reuse");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const auto make_cfg = [&](CLI::App* cmd) {
      qcap::ExperimentConfig cfg = qcap::load_config(config_path);
      if (!out_dir.empty()) cfg.out_dir = out_dir;
      if (cmd->count("--seed") > 0) cfg.master_seed = seed;
      if (cmd->count("--jobs") > 0) cfg.jobs = jobs;
      if (cfg.out_dir.empty())
        throw qcap::ConfigError("an output directory is required (--out or config out_dir)");
      return cfg;
    };
    if (app.got_subcommand(sample)) {
      qcap::cmd_sample(make_cfg(sample));
    } else if (app.got_subcommand(simulate)) {
      qcap::cmd_simulate(make_cfg(simulate));
    } else if (app.got_subcommand(train)) {
      qcap::cmd_train(make_cfg(train));
    } else if (app.got_subcommand(evaluate)) {
      qcap::cmd_evaluate(model_path, dataset_path, out_dir, split, jobs, ood_flag, format);
    } else if (app.got_subcommand(sbm)) {
      qcap::cmd_sbm(pass1_path, pass2_path, out_dir, format);
    } else if (app.got_subcommand(p5q)) {
      print_outcome(qcap::preset_5q_lps(out_dir, seed, parse_profile(profile_name), jobs));
    } else if (app.got_subcommand(pnm)) {
      print_outcome(
          qcap::preset_nonmarkovian(out_dir, seed, variant, parse_profile(profile_name), jobs));
    } else if (app.got_subcommand(pco)) {
      print_outcome(qcap::preset_coherent(out_dir, seed, parse_profile(profile_name), jobs));
    } else if (app.got_subcommand(pab)) {
      print_outcome(
          qcap::preset_ablation(out_dir, seed, parse_profile(profile_name), jobs, reuse_dir));
    } else if (app.got_subcommand(pod)) {
      print_outcome(qcap::preset_ood(out_dir, seed, parse_profile(profile_name), jobs, reuse_dir));
    }
  } catch (const qcap::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const qcap::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const qcap::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}

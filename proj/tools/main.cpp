/*
 * Copyright 2026 The textpose Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line front end: dataset generation, training, evaluation, ablation,
// prompt-noise suites and gradient checks.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "textpose.hpp"

namespace fs = std::filesystem;
using namespace textpose;

namespace {

std::vector<double> parse_thresholds(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || !(v > 0.0)) throw InputError("bad threshold '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw InputError("no thresholds given");
  return out;
}

Dataset dataset_for(const ExperimentConfig& cfg, const std::string& override_dir = "") {
  const std::string dir = override_dir.empty() ? cfg.data : override_dir;
  if (dir.empty()) return synth_dataset(cfg);
  Dataset d = read_dataset(dir);
  if (d.categories.size() != cfg.n_categories)
    throw ConfigError("dataset at " + dir + " has " + std::to_string(d.categories.size()) +
                      " categories, config expects " + std::to_string(cfg.n_categories));
  return d;
}

void emit_csv(const std::vector<MetricsRow>& rows, const std::string& out) {
  if (out.empty()) {
    write_csv(std::cout, rows);
    return;
  }
  if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
  std::ofstream f(out);
  if (!f) throw InputError("cannot write " + out);
  write_csv(f, rows);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"textpose: text-prompted keypoint localization on synthetic scenes"};
  app.require_subcommand(1);

  // gen-data
  std::uint64_t gen_seed = 7;
  std::string gen_out, gen_config;
  std::size_t gen_categories = 0, gen_instances = 0;
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset on disk");
  gen->add_option("--seed", gen_seed, "Generator seed")->required();
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--config", gen_config, "Take category/instance counts from a config file");
  gen->add_option("--categories", gen_categories, "Number of categories");
  gen->add_option("--instances", gen_instances, "Instances per category");

  // train
  std::string train_config, train_out;
  auto* tr = app.add_subcommand("train", "Train a model; writes checkpoint.bin and train_metrics.csv");
  tr->add_option("--config", train_config, "Config file (key=value)")->required()->check(CLI::ExistingFile);
  tr->add_option("--out", train_out, "Output directory")->required();

  // eval
  std::string eval_ckpt, eval_data, eval_split = "test", eval_out;
  std::string eval_thr = "0.05,0.1,0.15,0.2,0.25";
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint; prints metrics CSV");
  ev->add_option("--ckpt", eval_ckpt, "Checkpoint file")->required()->check(CLI::ExistingFile);
  ev->add_option("--data", eval_data, "Dataset directory (default: regenerate from the checkpoint config)");
  ev->add_option("--thresholds", eval_thr, "Comma-separated PCK thresholds");
  ev->add_option("--split", eval_split, "train | holdout | val | test | all");
  ev->add_option("--out", eval_out, "Write CSV here instead of stdout");

  // ablate
  std::string abl_config, abl_split = "holdout", abl_out;
  auto* ab = app.add_subcommand("ablate", "Train and evaluate full, no-hcmi, no-dsfr and no-lw variants");
  ab->add_option("--config", abl_config, "Base config file")->required()->check(CLI::ExistingFile);
  ab->add_option("--split", abl_split, "Evaluation split");
  ab->add_option("--out", abl_out, "Write CSV here instead of stdout");

  // noise
  std::string noise_ckpt, noise_kind, noise_data, noise_split = "test", noise_out;
  double noise_rate = 0.0;
  std::uint64_t noise_seed = 1;
  auto* no = app.add_subcommand("noise", "Evaluate under class-substitution or typo prompt noise");
  no->add_option("--ckpt", noise_ckpt, "Checkpoint file")->required()->check(CLI::ExistingFile);
  no->add_option("--kind", noise_kind, "class | typo")->required()->check(CLI::IsMember({"class", "typo"}));
  no->add_option("--rate", noise_rate, "Perturbation probability in [0,1]")->required();
  no->add_option("--data", noise_data, "Dataset directory");
  no->add_option("--split", noise_split, "Evaluation split");
  no->add_option("--seed", noise_seed, "Noise seed");
  no->add_option("--out", noise_out, "Write CSV here instead of stdout");

  // gradcheck
  std::string gc_module;
  double gc_tol = 1e-5;
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference gradient checks per module");
  gc->add_option("--module", gc_module, "One module (default: all)");
  gc->add_option("--tol", gc_tol, "Maximum relative error");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      ExperimentConfig cfg = gen_config.empty() ? ExperimentConfig{} : ExperimentConfig::load(gen_config);
      if (gen_categories) cfg.n_categories = gen_categories;
      if (gen_instances) cfg.instances_per_category = gen_instances;
      cfg.seed = gen_seed;
      Dataset d = synth_dataset(cfg);
      write_dataset(gen_out, d);
      std::printf("wrote %zu samples from %zu categories to %s\n", d.samples.size(), d.categories.size(),
                  gen_out.c_str());
    } else if (*tr) {
      ExperimentConfig cfg = ExperimentConfig::load(train_config);
      Dataset d = dataset_for(cfg);
      auto samples = select_split(d, cfg, Split::train);
      TrainResult r = train(cfg, samples);
      fs::create_directories(train_out);
      save_checkpoint((fs::path(train_out) / "checkpoint.bin").string(), cfg, r.model.params(), r.optim);
      std::ofstream hist(fs::path(train_out) / "train_metrics.csv");
      hist << train_history_csv(r.history);
      if (!hist) throw InputError("cannot write train_metrics.csv");
      const auto& first = r.history.empty() ? StepRecord{} : r.history.front();
      const auto& last = r.history.empty() ? StepRecord{} : r.history.back();
      std::printf("trained %s: %zu steps, %zu samples, loss %.6f -> %.6f\n", cfg.name.c_str(), cfg.steps,
                  samples.size(), first.total, last.total);
    } else if (*ev) {
      Checkpoint ck = load_checkpoint(eval_ckpt);
      Model model = Model::from_params(ck.config, std::move(ck.params));
      Dataset d = dataset_for(model.config(), eval_data);
      const Split split = parse_split(eval_split);
      auto row = evaluate(model, select_split(d, model.config(), split), parse_thresholds(eval_thr),
                          split_name(split));
      emit_csv({row}, eval_out);
    } else if (*ab) {
      ExperimentConfig cfg = ExperimentConfig::load(abl_config);
      Dataset d = dataset_for(cfg);
      std::vector<MetricsRow> rows;
      for (auto& run : run_ablation(cfg, d, parse_split(abl_split))) rows.push_back(run.row);
      emit_csv(rows, abl_out);
    } else if (*no) {
      Checkpoint ck = load_checkpoint(noise_ckpt);
      Model model = Model::from_params(ck.config, std::move(ck.params));
      Dataset d = dataset_for(model.config(), noise_data);
      const Split split = parse_split(noise_split);
      auto res = run_noise_suite(model, d, select_split(d, model.config(), split), parse_noise_kind(noise_kind),
                                 noise_rate, noise_seed, split_name(split));
      emit_csv({res.clean, res.noisy, res.delta}, noise_out);
    } else if (*gc) {
      std::vector<std::string> modules =
          gc_module.empty() ? gradcheck_modules() : std::vector<std::string>{gc_module};
      bool ok = true;
      for (const auto& m : modules) {
        ModuleGradCheck r = run_gradcheck(m, gc_tol);
        std::printf("%-16s %s max_rel_error=%.3e params=%zu time=%.2fs\n", m.c_str(),
                    r.report.pass ? "PASS" : "FAIL", r.report.max_rel_error(), r.report.params.size(),
                    r.seconds);
        ok = ok && r.report.pass;
      }
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "textpose: error: %s\n", e.what());
    return 1;
  }
  return 0;
}

// semfusion: command-line front end for the semantic mapping pipeline.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "semfusion/dataset.h"
#include "semfusion/error.h"
#include "semfusion/pipeline.h"
#include "semfusion/scene.h"

namespace {

using semfusion::Errc;
using semfusion::Error;
using semfusion::PipelineConfig;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

// Collects config overrides from the command line and applies them on top of
// an optional config file.
struct ConfigOptions {
  std::string config_file;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  bool strict_sequential = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "key = value configuration file");
    for (const auto& key : PipelineConfig::keys()) {
      options[key] = app->add_option("--" + key, values[key])->group("Configuration keys");
    }
    alias(app, "--sequence", "input.sequence", "Sequence directory (rgb/, depth/, labels/)");
    alias(app, "--trajectory", "input.trajectory", "TUM-format trajectory");
    alias(app, "--intrinsics", "input.intrinsics", "Intrinsics file");
    alias(app, "--scene", "input.scene", "Synthetic scene: 'office' or a JSON file");
    alias(app, "--predictions", "prediction.dir", "Directory of <stem>.sfpm predictions");
    alias(app, "--oracle-diag", "prediction.oracle_diag", "Oracle confusion diagonal");
    alias(app, "--oracle-mode", "prediction.oracle_mode", "soft | sampled");
    alias(app, "--seed", "run.seed", "Random seed");
    alias(app, "--cnn-every", "schedule.cnn_every", "Fuse a prediction every N frames");
    alias(app, "--crf-every", "schedule.crf_every", "Run the CRF every M frames (0 = off)");
    alias(app, "--crf-iters", "crf.iterations", "Mean-field iterations");
    alias(app, "--depth-max", "map.depth_max", "Depth cutoff in metres");
    alias(app, "--export-ply", "output.ply", "Write the final map as PLY");
    alias(app, "--metrics-out", "output.metrics", "Write metrics JSON");
    alias(app, "--report-out", "output.report", "Write the stage timing table");
    alias(app, "--eval-res", "eval.res", "Evaluation resolution WxH");
    app->add_flag("--strict-sequential", strict_sequential,
                  "Disable frame prefetching");
  }

  void alias(CLI::App* app, const std::string& flag, const std::string& key,
             const std::string& help) {
    aliases.push_back({flag, key});
    alias_opts.push_back(app->add_option(flag, alias_values[flag], help));
  }

  PipelineConfig build() const {
    PipelineConfig c;
    if (!config_file.empty()) c.load(config_file);
    for (const auto& [key, opt] : options) {
      if (opt->count() > 0) c.set(key, values.at(key));
    }
    for (std::size_t i = 0; i < aliases.size(); ++i) {
      if (alias_opts[i]->count() > 0) c.set(aliases[i].second, alias_values.at(aliases[i].first));
    }
    if (strict_sequential) c.strict_sequential = true;
    return c;
  }

  std::vector<std::pair<std::string, std::string>> aliases;
  std::vector<CLI::Option*> alias_opts;
  std::map<std::string, std::string> alias_values;
};

std::vector<int> parse_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t pos = 0;
      out.push_back(std::stoi(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(Errc::kConfig, "bad list entry '" + item + "'");
    }
  }
  return out;
}

void print_run(const semfusion::RunReport& r) {
  std::printf("frames: %zu processed, %zu without pose\n", r.frames_processed,
              r.frames_without_pose);
  std::printf("events: %zu fusion, %zu crf (event when (k+1) %% period == 0)\n",
              r.fusion_events, r.crf_events);
  std::printf("map: %zu surfels, %zu removed\n", r.surfels_final, r.surfels_removed);
  if (r.fused) {
    std::printf("class avg: fused %.4f, baseline %.4f\n", r.fused_class_avg(),
                r.baseline_class_avg());
    std::printf("pixel avg: fused %.4f, baseline %.4f\n",
                semfusion::pixel_average_accuracy(*r.fused),
                semfusion::pixel_average_accuracy(*r.baseline));
  }
  for (const auto& c : r.crf_reports) {
    std::printf("crf: %zu nodes, %.3f s, energy %.4g -> %.4g\n", c.nodes, c.seconds,
                c.energy_before, c.energy_after);
  }
  std::printf("\n%s", r.timing_table().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semantic surfel mapping with Bayesian label fusion and a dense CRF"};
  app.require_subcommand(1);

  ConfigOptions run_opts, freq_opts, crf_opts, eval_opts;

  auto* run_cmd = app.add_subcommand("run", "Process a sequence or synthetic scene");
  run_opts.attach(run_cmd);

  auto* freq_cmd = app.add_subcommand("freq-exp", "Accuracy and frame rate against prediction skip");
  freq_opts.attach(freq_cmd);
  std::string skips = "1,2,4,8,16,32,64,128";
  freq_cmd->add_option("--skips", skips, "Comma-separated skip values");

  auto* crf_cmd = app.add_subcommand("crf-exp", "Accuracy against CRF period");
  crf_opts.attach(crf_cmd);
  std::string periods = "0,5,10,20";
  crf_cmd->add_option("--periods", periods, "Comma-separated CRF periods (0 = off)");

  auto* render_cmd = app.add_subcommand("render-scene", "Write a synthetic sequence to disk");
  std::string scene = "office";
  std::string out_dir;
  int frames = 36;
  render_cmd->add_option("--scene", scene, "'office' or a JSON scene file");
  render_cmd->add_option("--frames", frames, "Number of frames")->check(CLI::PositiveNumber);
  render_cmd->add_option("--out", out_dir, "Output directory")->required();

  auto* eval_cmd = app.add_subcommand("eval", "Single-frame accuracy of a prediction source");
  eval_opts.attach(eval_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run_cmd) {
      const auto r = semfusion::run(run_opts.build());
      print_run(r);
    } else if (*freq_cmd) {
      const auto rows = semfusion::frequency_experiment(freq_opts.build(), parse_list(skips));
      std::printf("skip  class_avg  baseline  est_fps  fusions\n");
      for (const auto& r : rows) {
        std::printf("%4d  %9.4f  %8.4f  %7.2f  %7zu\n", r.skip, r.class_avg,
                    r.baseline_class_avg, r.est_fps, r.fusion_events);
      }
    } else if (*crf_cmd) {
      const auto rows =
          semfusion::crf_frequency_experiment(crf_opts.build(), parse_list(periods));
      std::printf("period  class_avg  crf_events\n");
      for (const auto& r : rows) {
        std::printf("%6d  %9.4f  %10zu\n", r.period, r.class_avg, r.crf_events);
      }
    } else if (*render_cmd) {
      const auto spec = scene == "office" ? semfusion::SceneSpec::Office()
                                          : semfusion::SceneSpec::FromJson(scene);
      const auto intr = semfusion::synthetic_intrinsics();
      const auto seq = semfusion::render_scene(spec, intr, frames);
      semfusion::write_sequence(out_dir, seq.frames, seq.trajectory, intr);
      std::ofstream labels(std::filesystem::path(out_dir) / "labels.txt");
      for (const auto& name : spec.class_names) labels << name << '\n';
      std::printf("wrote %d frames to %s\n", frames, out_dir.c_str());
    } else if (*eval_cmd) {
      const auto cfg = eval_opts.build();
      const auto acc = semfusion::evaluate_predictions(cfg);
      std::printf("frames %zu, class avg %.4f, pixel avg %.4f, ignored %llu\n", acc.frames(),
                  semfusion::class_average_accuracy(acc), semfusion::pixel_average_accuracy(acc),
                  static_cast<unsigned long long>(acc.ignored()));
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "semfusion: %s\n", e.what());
    return e.code() == Errc::kConfig ? kExitConfig : kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "semfusion: %s\n", e.what());
    return kExitData;
  }
  return 0;
}

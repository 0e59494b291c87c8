// SPDX-FileCopyrightText: © 2026 The zsvad Authors
//
// SPDX-License-Identifier: Apache-2.0

// zsvad command-line interface.
//
// Exit codes: 0 success, 2 configuration error, 3 data error,
// 4 semantic provider error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "zsvad/config.h"
#include "zsvad/errors.h"
#include "zsvad/pipeline.h"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

void print_metrics(const zsvad::MetricsReport& report) {
  auto show = [](const char* name, const std::optional<double>& v) {
    if (v) std::printf("%s %.6f\n", name, *v);
    else std::printf("%s undefined\n", name);
  };
  std::printf("videos %zu\nframes %zu\n", report.videos, report.frames);
  show("frame_auc", report.frame_auc);
  show("frame_ap", report.frame_ap);
  show("pixel_auc", report.pixel_auc);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zero-shot video anomaly detection pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("-c,--config", config_path, "configuration file");
  app.add_option("--set", overrides, "override a key, e.g. --set compression.ratio=0.5")
      ->allow_extra_args(false);

  std::string sources, sample_out;
  auto* sample = app.add_subcommand("sample", "build the exposure manifest from a source manifest");
  sample->add_option("--sources", sources, "source manifest (JSON-lines)")->required();
  sample->add_option("-o,--out", sample_out, "output exposure manifest")->required();

  std::string tokens_path, compress_out;
  auto* compress = app.add_subcommand("compress", "compress a token dump");
  compress->add_option("--tokens", tokens_path, "binary token matrix")->required();
  compress->add_option("-o,--out", compress_out, "output matrix; a .json sidecar is written next to it")
      ->required();

  std::string detect_manifest, detect_out;
  std::size_t jobs = 0;
  auto* detect = app.add_subcommand("detect", "score every video in a manifest");
  detect->add_option("--manifest", detect_manifest, "detect manifest (JSON-lines)")->required();
  detect->add_option("-o,--out", detect_out, "output directory")->required();
  detect->add_option("-j,--jobs", jobs, "worker threads (overrides pipeline.jobs)");

  std::string eval_manifest, eval_scores, eval_out;
  auto* eval = app.add_subcommand("eval", "recompute metrics from detect output");
  eval->add_option("--manifest", eval_manifest, "detect manifest with labels")->required();
  eval->add_option("--scores", eval_scores, "scores directory written by detect")->required();
  eval->add_option("-o,--out", eval_out, "output directory")->required();

  std::string synth_out;
  zsvad::SynthOptions synth_options;
  auto* synth = app.add_subcommand("synth", "write a synthetic benchmark suite");
  synth->add_option("-o,--out", synth_out, "output directory")->required();
  synth->add_option("--count", synth_options.count, "number of scenes");
  synth->add_option("--frames", synth_options.frames, "frames per scene");
  synth->add_option("--height", synth_options.height, "frame height");
  synth->add_option("--width", synth_options.width, "frame width");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    zsvad::PipelineConfig config =
        config_path.empty() ? zsvad::PipelineConfig{} : zsvad::load_config(config_path);
    for (const auto& o : overrides) zsvad::apply_override(config, o);
    if (jobs) config.jobs = jobs;
    config.validate();

    if (*sample) {
      const auto samples = zsvad::run_sampler(config, sources, sample_out);
      std::printf("wrote %zu samples to %s\n", samples.size(), sample_out.c_str());
    } else if (*compress) {
      const auto r = zsvad::run_compress(config, tokens_path, compress_out);
      std::printf("compressed %zu tokens to %zu\n", r.assignment.size(), r.compressed.rows());
    } else if (*detect) {
      const auto summary = zsvad::run_detect(config, detect_manifest, detect_out,
                                             [](const std::string& m) { std::fprintf(stderr, "%s\n", m.c_str()); });
      print_metrics(summary.report);
    } else if (*eval) {
      print_metrics(zsvad::run_eval(config, eval_manifest, eval_scores, eval_out));
    } else if (*synth) {
      const auto scenes = zsvad::run_synth(config, synth_options, synth_out);
      std::printf("wrote %zu scenes to %s\n", scenes.size(), synth_out.c_str());
    }
  } catch (const zsvad::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return 0;
}

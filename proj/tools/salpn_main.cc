// Copyright 2026 The salpn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "salpn/io.h"
#include "salpn/pipeline.h"

namespace fs = std::filesystem;
using namespace salpn;

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  bool no_haas = false;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("-c,--config", o.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "Override the configured seed");
  cmd->add_option("--alpha", o.alpha, "Override the partition adjustment factor");
  cmd->add_flag("--no-haas", o.no_haas, "Force theta = 0 for every view");
}

RunConfig resolve_config(const CommonOptions& o) {
  RunConfig c = o.config_path.empty() ? RunConfig{} : load_run_config(o.config_path);
  apply_environment(c);
  if (o.seed) c.seed = *o.seed;
  if (o.alpha) c.alpha = *o.alpha;
  if (o.no_haas) c.use_haas = false;
  c.validate();
  return c;
}

void write_json(const std::string& path, const nlohmann::json& j) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << "\n";
  } else {
    write_text_file(path, j.dump(2) + "\n");
  }
}

ViewSource stream_or_fail(const std::string& manifest) {
  ViewSource source = manifest_views(manifest);
  std::fprintf(stderr, "streaming %zu views from %s\n", source.size(), manifest.c_str());
  return source;
}

std::vector<LoadedView> load_test_split(const std::string& manifest) {
  const ViewSource all = manifest_views(manifest);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all.records[i].split == Split::kTest) keep.push_back(i);
  }
  ViewSource test;
  for (std::size_t i : keep) test.records.push_back(all.records[i]);
  test.load = [&](std::size_t i) { return all.load(keep[i]); };
  auto views = materialize(test);
  std::fprintf(stderr, "loaded %zu test views from %s\n", views.size(), manifest.c_str());
  return views;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scale-adaptive part partitioning for drone-to-satellite retrieval"};
  app.require_subcommand(1);

  // plan
  CommonOptions plan_opts;
  double plan_h = 0.0;
  auto* plan = app.add_subcommand("plan", "Print partition plans for a drone height");
  add_common(plan, plan_opts);
  plan->add_option("--h-drone", plan_h, "Drone height in meters")->required();

  // synth
  DatasetSpec synth_spec;
  synth_spec.drone_heights = {80.0, 120.0, 160.0, 189.75, 220.0, 260.0, 300.0};
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Render a synthetic dataset");
  synth->add_option("-o,--out", synth_out, "Output directory")->required();
  synth->add_option("--classes", synth_spec.num_classes, "Number of scenes")->check(CLI::Range(2, 100000));
  synth->add_option("--heights", synth_spec.drone_heights, "Drone heights in meters");
  synth->add_option("--sat-height", synth_spec.sat_height, "Satellite height in meters");
  synth->add_option("--resolution", synth_spec.resolution, "Image side in pixels");
  synth->add_option("--train-fraction", synth_spec.train_fraction, "Fraction of classes for training");
  synth->add_option("--seed", synth_spec.seed, "Scene seed");

  // augment
  std::string aug_manifest, aug_out;
  std::vector<int> aug_dps;
  double aug_lambda = 0.7;
  auto* augment = app.add_subcommand("augment", "Write height-augmented test sets");
  augment->add_option("-m,--manifest", aug_manifest, "Input manifest.jsonl")->required()->check(CLI::ExistingFile);
  augment->add_option("-o,--out", aug_out, "Output directory")->required();
  augment->add_option("--delta-p", aug_dps, "Padding (+) or cropping (-) in pixels")->required();
  augment->add_option("--lambda", aug_lambda, "Meters per pixel of delta P");

  // train
  CommonOptions train_opts;
  std::string train_manifest, train_ckpt, train_report;
  auto* train = app.add_subcommand("train", "Train the classifier heads");
  add_common(train, train_opts);
  train->add_option("-m,--manifest", train_manifest, "Dataset manifest.jsonl")->required()->check(CLI::ExistingFile);
  train->add_option("--checkpoint", train_ckpt, "Output checkpoint")->required();
  train->add_option("--report", train_report, "Training report JSON (stdout when omitted)");

  // eval
  CommonOptions eval_opts;
  std::string eval_manifest, eval_ckpt, eval_report, eval_embeddings;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  add_common(eval, eval_opts);
  eval->add_option("-m,--manifest", eval_manifest, "Dataset manifest.jsonl")->required()->check(CLI::ExistingFile);
  eval->add_option("--checkpoint", eval_ckpt, "Trained checkpoint")->required()->check(CLI::ExistingFile);
  eval->add_option("--report", eval_report, "Metrics JSON (stdout when omitted)");
  eval->add_option("--embeddings", eval_embeddings, "Directory for query and gallery embeddings");

  // pipeline
  CommonOptions pipe_opts;
  std::string pipe_manifest, pipe_report, pipe_svg;
  std::vector<int> pipe_dps;
  auto* pipeline = app.add_subcommand("pipeline", "Train and evaluate end to end");
  add_common(pipeline, pipe_opts);
  pipeline->add_option("-m,--manifest", pipe_manifest, "Dataset manifest.jsonl")->required()->check(CLI::ExistingFile);
  pipeline->add_option("--report", pipe_report, "Report JSON (stdout when omitted)");
  pipeline->add_option("--svg", pipe_svg, "R@1 versus |delta P| plot");
  pipeline->add_option("--delta-p", pipe_dps, "Augmented evaluation sets");

  // sweep-alpha
  CommonOptions sweep_opts;
  std::string sweep_manifest, sweep_csv_path;
  std::vector<double> sweep_alphas;
  std::vector<int> sweep_dps;
  auto* sweep = app.add_subcommand("sweep-alpha", "Grid of R@1 over alpha and delta P");
  add_common(sweep, sweep_opts);
  sweep->add_option("-m,--manifest", sweep_manifest, "Dataset manifest.jsonl")->required()->check(CLI::ExistingFile);
  sweep->add_option("--alphas", sweep_alphas, "Alpha values")->required();
  sweep->add_option("--delta-p", sweep_dps, "Delta P values (0 is the unshifted set)")->required();
  sweep->add_option("-o,--out", sweep_csv_path, "CSV output (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*plan) {
      const RunConfig c = resolve_config(plan_opts);
      write_json("-", to_json(make_plan_report(c, plan_h)));
    } else if (*synth) {
      const DatasetManifest m = make_dataset(synth_spec);
      write_dataset(m, rendered_views(m), synth_out);
      std::fprintf(stderr, "wrote %zu views to %s\n", m.views.size(), synth_out.c_str());
    } else if (*augment) {
      write_augmented_sets(load_test_split(aug_manifest), aug_dps, aug_lambda, aug_out);
    } else if (*train) {
      const RunConfig c = resolve_config(train_opts);
      const TrainedModel m = train_model(c, prepare_data(c, stream_or_fail(train_manifest), {}).train);
      nlohmann::json classes = nlohmann::json::object();
      for (const auto& [cls, label] : m.label_of_class) classes[std::to_string(cls)] = label;
      save_checkpoint(train_ckpt, m.bank, {{"config", to_json(c)}, {"classes", classes}});
      write_json(train_report, {{"config", to_json(c)},
                                {"epoch_loss", m.report.epoch_loss},
                                {"train_accuracy", m.report.train_accuracy},
                                {"checkpoint", train_ckpt}});
    } else if (*eval) {
      const RunConfig c = resolve_config(eval_opts);
      nlohmann::json meta;
      const HeadBank bank = load_checkpoint(eval_ckpt, &meta);
      if (bank.n_parts() != c.n_parts || bank.d_in() != c.feature_channels) {
        throw ConfigError("checkpoint has " + std::to_string(bank.n_parts()) + " parts and " +
                          std::to_string(bank.d_in()) + " input channels; config expects " +
                          std::to_string(c.n_parts) + " and " + std::to_string(c.feature_channels));
      }
      const PreparedData data = prepare_data(c, stream_or_fail(eval_manifest), {});
      const auto g = embed(c, bank, data.gallery);
      const auto q = embed(c, bank, data.queries);
      if (!eval_embeddings.empty()) {
        const fs::path dir(eval_embeddings);
        fs::create_directories(dir);
        write_embeddings(dir / "gallery.fmap", dir / "gallery.jsonl", g);
        write_embeddings(dir / "queries.fmap", dir / "queries.jsonl", q);
      }
      nlohmann::json report = to_json(evaluate(q, g, c.k_list));
      report["config"] = to_json(c);
      report["seed"] = c.seed;
      write_json(eval_report, report);
    } else if (*pipeline) {
      RunConfig c = resolve_config(pipe_opts);
      if (!pipe_dps.empty()) c.delta_p_list = pipe_dps;
      const PipelineResult r = run_pipeline(c, stream_or_fail(pipe_manifest));
      write_json(pipe_report, r.report);
      if (!pipe_svg.empty()) {
        write_text_file(pipe_svg, degradation_svg({{c.use_haas ? "HAAS" : "theta = 0",
                                                   r.degradation_curve()}}));
      }
      std::fprintf(stderr, "mean R@1 %.4f  mean AP %.4f\n", r.mean_r1, r.mean_ap);
    } else if (*sweep) {
      RunConfig c = resolve_config(sweep_opts);
      c.delta_p_list = sweep_dps;
      const PreparedData data = prepare_data(c, stream_or_fail(sweep_manifest), sweep_dps);
      const std::string csv = sweep_csv(sweep_alpha(c, data, sweep_alphas));
      if (sweep_csv_path.empty()) {
        std::cout << csv;
      } else {
        write_text_file(sweep_csv_path, csv);
      }
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

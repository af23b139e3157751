/*
 * Copyright 2026 The cfprobe Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cctype>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cfprobe/errors.hpp"
#include "cfprobe/pipeline.hpp"

namespace {

namespace pl = cfprobe::pipeline;

// Every flag `--some-flag` can also be set through CFPROBE_SOME_FLAG.
template <typename T>
CLI::Option* flag(CLI::App* app, const std::string& name, T& target, const std::string& help) {
  std::string env = "CFPROBE_";
  for (char c : name.substr(2)) {
    env += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return app->add_option(name, target, help)->envname(env);
}

void add_run_flags(CLI::App* app, pl::RunOptions& run) {
  flag(app, "--config", run.config, "configuration file");
  flag(app, "--out", run.out, "run directory")->required();
  flag(app, "--seed", run.seed, "master seed");
  flag(app, "--workers", run.workers, "worker threads")->check(CLI::PositiveNumber);
}

void print(const pl::StageReport& report) {
  std::cout << report.stage << ": " << (report.up_to_date ? "up to date" : "wrote") << " "
            << report.outputs.size() << " file(s)\n";
  for (const auto& p : report.outputs) std::cout << "  " << p.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Counterfactual image-text bias probe"};
  app.require_subcommand(1);

  pl::CaptionsOptions captions;
  auto* captions_cmd = app.add_subcommand("captions", "enumerate counterfactual captions");
  add_run_flags(captions_cmd, captions.run);
  flag(captions_cmd, "--samples", captions.samples_per_set, "images per caption");
  flag(captions_cmd, "--male-query", captions.male_query, "gender probe text");
  flag(captions_cmd, "--female-query", captions.female_query, "gender probe text");

  pl::PlanOptions plan;
  auto* plan_cmd = app.add_subcommand("plan", "write the generation job manifest");
  add_run_flags(plan_cmd, plan.run);
  flag(plan_cmd, "--samples", plan.samples_per_set, "samples per set");

  pl::IngestOptions ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "validate embeddings and asset metadata");
  add_run_flags(ingest_cmd, ingest.run);
  flag(ingest_cmd, "--text-embeddings", ingest.text_embeddings, "text embedding file")->required();
  flag(ingest_cmd, "--image-embeddings", ingest.image_embeddings, "image embedding file")
      ->required();
  flag(ingest_cmd, "--assets", ingest.assets, "asset metadata CSV")->required();

  pl::FilterStageOptions filter;
  auto* filter_cmd = app.add_subcommand("filter", "score and filter generated samples");
  add_run_flags(filter_cmd, filter.run);
  flag(filter_cmd, "--text-embeddings", filter.text_embeddings, "text embedding file")->required();
  flag(filter_cmd, "--image-embeddings", filter.image_embeddings, "image embedding file")
      ->required();
  flag(filter_cmd, "--assets", filter.assets, "asset metadata CSV")->required();
  flag(filter_cmd, "--min-cosine", filter.min_cosine, "per-member caption-image threshold");
  flag(filter_cmd, "--keep", filter.keep, "samples kept per group");
  flag(filter_cmd, "--group-by", filter.group_by, "set or subject")
      ->check(CLI::IsMember({"set", "subject"}));

  pl::EvaluateOptions evaluate;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "retrieve and measure skew");
  add_run_flags(evaluate_cmd, evaluate.run);
  flag(evaluate_cmd, "--text-embeddings", evaluate.text_embeddings, "text embedding file")
      ->required();
  flag(evaluate_cmd, "--image-embeddings", evaluate.image_embeddings, "image embedding file")
      ->required();
  flag(evaluate_cmd, "--assets", evaluate.assets, "asset metadata CSV")->required();
  flag(evaluate_cmd, "--retention", evaluate.retention, "retention report")->required();
  flag(evaluate_cmd, "--k", evaluate.k, "retrieval depth override");
  flag(evaluate_cmd, "--conditional-k", evaluate.conditional_k, "depth for conditional skew");
  flag(evaluate_cmd, "--desired", evaluate.desired, "desired distribution overrides");

  pl::AuditOptions audit;
  auto* audit_cmd = app.add_subcommand("audit", "score gender predictions against annotations");
  add_run_flags(audit_cmd, audit.run);
  flag(audit_cmd, "--annotations", audit.annotations, "annotation CSV")->required();
  flag(audit_cmd, "--image-embeddings", audit.image_embeddings, "image embedding file")
      ->required();
  flag(audit_cmd, "--text-embeddings", audit.text_embeddings, "text embedding file")->required();
  flag(audit_cmd, "--assets", audit.assets, "asset metadata CSV (enables group census)");
  flag(audit_cmd, "--male-query", audit.male_query, "gender probe text");
  flag(audit_cmd, "--female-query", audit.female_query, "gender probe text");

  pl::MockAdapterOptions mock;
  auto* mock_cmd =
      app.add_subcommand("mock-adapter", "deterministic stand-in for the model adapter");
  add_run_flags(mock_cmd, mock.run);
  flag(mock_cmd, "--jobs", mock.jobs, "job manifest")->required();
  flag(mock_cmd, "--dimension", mock.dimension, "embedding dimension");
  flag(mock_cmd, "--noise", mock.noise, "image noise scale");
  flag(mock_cmd, "--male-query", mock.male_query, "gender probe text");
  flag(mock_cmd, "--female-query", mock.female_query, "gender probe text");

  CLI11_PARSE(app, argc, argv);

  const std::string stage = app.get_subcommands().front()->get_name();
  try {
    if (captions_cmd->parsed()) {
      const auto report = pl::run_captions(captions);
      print(report);
      std::cout << "captions " << report.captions << ", sets " << report.sets << ", images "
                << report.census.total_images << "\n";
    } else if (plan_cmd->parsed()) {
      print(pl::run_plan(plan));
    } else if (ingest_cmd->parsed()) {
      print(pl::run_ingest(ingest));
    } else if (filter_cmd->parsed()) {
      print(pl::run_filter(filter));
    } else if (evaluate_cmd->parsed()) {
      print(pl::run_evaluate(evaluate));
    } else if (audit_cmd->parsed()) {
      print(pl::run_audit(audit));
    } else if (mock_cmd->parsed()) {
      print(pl::run_mock_adapter(mock));
    }
  } catch (const cfprobe::StageError& e) {
    std::cerr << "cfprobe " << e.stage() << ": error: " << e.what() << "\n";
    return EXIT_FAILURE;
  } catch (const std::exception& e) {
    std::cerr << "cfprobe " << stage << ": error: " << e.what() << "\n";
    return EXIT_FAILURE;
  }
  return EXIT_SUCCESS;
}

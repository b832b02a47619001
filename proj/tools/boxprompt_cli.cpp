/*
 * boxprompt
 *
 * Copyright 2026 The boxprompt Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// boxprompt command-line tool. Builds a flat JSON configuration from an
// optional --config file plus flag overrides and hands it to the C API.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "boxprompt/boxprompt.h"

namespace {

struct Flags {
  std::string config_file;
  nlohmann::json overrides = nlohmann::json::object();
};

template <typename T>
void flag(CLI::App* cmd, Flags& flags, const std::string& name, const std::string& key, const std::string& help) {
  cmd->add_option_function<T>(name, [&flags, key](const T& v) { flags.overrides[key] = v; }, help);
}

void common_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config_file, "JSON configuration file")->check(CLI::ExistingFile);
  flag<std::string>(cmd, f, "--out", "out", "output directory");
  flag<std::string>(cmd, f, "--backbone", "backbone", "backbone id (toy or medsam)");
  flag<std::string>(cmd, f, "--weights", "backbone_weights", "backbone weight file");
  flag<std::string>(cmd, f, "--cache", "cache", "embedding cache directory");
  flag<std::uint64_t>(cmd, f, "--seed", "seed", "seed for initialization, shuffling and synthesis");
}

void train_flags(CLI::App* cmd, Flags& f) {
  flag<std::uint64_t>(cmd, f, "--subset-seed", "subset_seed", "few-shot subset seed");
  flag<int>(cmd, f, "--k", "k", "few-shot training set size");
  flag<std::string>(cmd, f, "--penalty", "penalty", "constraint penalty (relu or logbarrier)");
  flag<double>(cmd, f, "--t", "t", "penalty sharpness");
  flag<double>(cmd, f, "--lambda-tight", "lambda_tight", "tightness loss weight");
  flag<double>(cmd, f, "--lambda-size", "lambda_size", "size loss weight");
  flag<double>(cmd, f, "--eps-lo", "eps_lo", "lower size bound as a fraction of the box");
  flag<double>(cmd, f, "--eps-hi", "eps_hi", "upper size bound as a fraction of the box");
  flag<int>(cmd, f, "--epochs", "epochs", "training epochs");
  flag<int>(cmd, f, "--batch-size", "batch_size", "batch size");
  flag<double>(cmd, f, "--lr", "lr", "learning rate");
  flag<int>(cmd, f, "--patience", "patience", "early-stopping patience in epochs (0 disables)");
}

std::optional<nlohmann::json> build_config(const Flags& f) {
  nlohmann::json cfg = nlohmann::json::object();
  if (!f.config_file.empty()) {
    std::ifstream is(f.config_file);
    if (!is) {
      std::cerr << "error: cannot read config file " << f.config_file << '\n';
      return std::nullopt;
    }
    try {
      cfg = nlohmann::json::parse(is);
    } catch (const nlohmann::json::exception& e) {
      std::cerr << "error: " << f.config_file << ": " << e.what() << '\n';
      return std::nullopt;
    }
    if (!cfg.is_object()) {
      std::cerr << "error: " << f.config_file << " must hold a JSON object\n";
      return std::nullopt;
    }
  }
  for (const auto& [k, v] : f.overrides.items()) cfg[k] = v;
  return cfg;
}

int run(const std::string& command, const Flags& f) {
  const auto cfg = build_config(f);
  if (!cfg) return BP_ERR_CONFIG;
  char* result = nullptr;
  const bp_status st = bp_run_command(command.c_str(), cfg->dump().c_str(), &result);
  if (st != BP_OK) {
    std::cerr << "error: " << bp_last_error_kind() << ": " << bp_last_error() << '\n';
    return st;
  }
  std::cout << result << '\n';
  bp_string_free(result);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Box-supervised prompt module for a frozen promptable segmenter"};
  app.require_subcommand(1);
  app.set_version_flag("--version", bp_version());

  Flags flags;

  auto* synth = app.add_subcommand("synth", "generate a synthetic ellipse dataset and manifest");
  common_flags(synth, flags);
  flag<int>(synth, flags, "--n", "n", "number of samples");
  flag<int>(synth, flags, "--canvas", "canvas", "square image side in pixels");

  auto* preprocess = app.add_subcommand("preprocess", "normalize, crop/pad and filter a dataset");
  common_flags(preprocess, flags);
  flag<std::string>(preprocess, flags, "--manifest", "manifest", "input manifest (JSON lines)");
  flag<long>(preprocess, flags, "--min-foreground", "min_foreground", "drop samples with fewer foreground pixels");

  auto* cache = app.add_subcommand("cache-embeddings", "encode every image once into the embedding cache");
  common_flags(cache, flags);
  flag<std::string>(cache, flags, "--manifest", "manifest", "dataset manifest");

  auto* train = app.add_subcommand("train", "train the prompt module from box labels");
  common_flags(train, flags);
  train_flags(train, flags);
  flag<std::string>(train, flags, "--manifest", "manifest", "dataset manifest");

  auto* evaluate = app.add_subcommand("evaluate", "Dice of a checkpoint on a dataset split");
  common_flags(evaluate, flags);
  flag<std::string>(evaluate, flags, "--manifest", "manifest", "dataset manifest");
  flag<std::string>(evaluate, flags, "--checkpoint", "checkpoint", "prompt-module checkpoint");
  flag<std::string>(evaluate, flags, "--split", "eval_split", "train, val, test or all");
  evaluate->add_flag_callback("--baseline", [&flags] { flags.overrides["prompted_baseline"] = true; },
                              "also score the tight-box prompted baseline");

  auto* predict = app.add_subcommand("predict", "probability map and mask for one image");
  common_flags(predict, flags);
  flag<std::string>(predict, flags, "--checkpoint", "checkpoint", "prompt-module checkpoint");
  flag<std::string>(predict, flags, "--image", "image", "preprocessed image (PNG or NIfTI)");

  auto* experiment = app.add_subcommand("experiment", "repeated few-shot protocol over subset and init seeds");
  common_flags(experiment, flags);
  train_flags(experiment, flags);
  flag<std::string>(experiment, flags, "--manifest", "manifest", "dataset manifest");
  flag<unsigned>(experiment, flags, "--threads", "threads", "parallel runs (0 = all cores)");

  auto* config = app.add_subcommand("config", "print the default configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return BP_ERR_CONFIG;
  }

  if (config->parsed()) {
    char* out = nullptr;
    if (bp_default_config(&out) != BP_OK) {
      std::cerr << "error: " << bp_last_error() << '\n';
      return BP_ERR_INTERNAL;
    }
    std::cout << out << '\n';
    bp_string_free(out);
    return 0;
  }
  for (auto* sub : app.get_subcommands()) return run(sub->get_name(), flags);
  return BP_ERR_CONFIG;
}

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

#include "boxprompt/boxprompt.h"

#include <cstring>
#include <memory>
#include <string>

#include "boxprompt/backbone.hpp"
#include "boxprompt/checkpoint.hpp"
#include "boxprompt/imageops.hpp"
#include "boxprompt/pipeline.hpp"

struct bp_backbone {
  std::unique_ptr<boxprompt::Backbone> impl;
};

struct bp_module {
  boxprompt::PromptModule impl;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_kind;

bp_status status_of(boxprompt::ErrorCategory c) {
  switch (c) {
    case boxprompt::ErrorCategory::Config:
      return BP_ERR_CONFIG;
    case boxprompt::ErrorCategory::Data:
      return BP_ERR_DATA;
    case boxprompt::ErrorCategory::Backbone:
      return BP_ERR_BACKBONE;
    case boxprompt::ErrorCategory::Internal:
      return BP_ERR_INTERNAL;
  }
  return BP_ERR_INTERNAL;
}

template <typename F>
bp_status guarded(F&& body) {
  g_error.clear();
  g_kind.clear();
  try {
    body();
    return BP_OK;
  } catch (const boxprompt::Error& e) {
    g_error = e.what();
    g_kind = boxprompt::to_string(e.kind());
    return status_of(boxprompt::category_of(e.kind()));
  } catch (const nlohmann::json::exception& e) {
    g_error = std::string("invalid JSON: ") + e.what();
    g_kind = "InvalidConfig";
    return BP_ERR_CONFIG;
  } catch (const std::filesystem::filesystem_error& e) {
    g_error = e.what();
    g_kind = "IOFailure";
    return BP_ERR_DATA;
  } catch (const std::exception& e) {
    g_error = e.what();
    g_kind = "InternalInvariant";
    return BP_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) boxprompt::fail(boxprompt::ErrorKind::InvalidConfig, what);
}

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (p == nullptr) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

nlohmann::json parse_config(const char* config_json) {
  if (config_json == nullptr || *config_json == '\0') return nlohmann::json::object();
  return nlohmann::json::parse(config_json);
}

}  // namespace

extern "C" {

const char* bp_version(void) { return "0.1.0"; }

const char* bp_last_error(void) { return g_error.c_str(); }

const char* bp_last_error_kind(void) { return g_kind.c_str(); }

void bp_string_free(char* s) { std::free(s); }

bp_status bp_backbone_create(const char* id, const char* weights, bp_backbone** out) {
  return guarded([&] {
    require(id != nullptr && out != nullptr, "bp_backbone_create: null argument");
    *out = nullptr;
    auto impl = boxprompt::make_backbone(id, weights != nullptr ? weights : "");
    *out = new bp_backbone{std::move(impl)};
  });
}

void bp_backbone_free(bp_backbone* backbone) { delete backbone; }

bp_status bp_backbone_fingerprint(const bp_backbone* backbone, char** out) {
  return guarded([&] {
    require(backbone != nullptr && out != nullptr, "bp_backbone_fingerprint: null argument");
    *out = dup_string(backbone->impl->fingerprint());
  });
}

bp_status bp_backbone_input_size(const bp_backbone* backbone, int* rows, int* cols) {
  return guarded([&] {
    require(backbone != nullptr && rows != nullptr && cols != nullptr, "bp_backbone_input_size: null argument");
    *rows = backbone->impl->shape_spec().input_size.rows;
    *cols = backbone->impl->shape_spec().input_size.cols;
  });
}

bp_status bp_module_create(const bp_backbone* backbone, uint64_t seed, bp_module** out) {
  return guarded([&] {
    require(backbone != nullptr && out != nullptr, "bp_module_create: null argument");
    *out = nullptr;
    *out = new bp_module{boxprompt::PromptModule(
        boxprompt::PromptModuleConfig::defaults_for(backbone->impl->shape_spec(), seed))};
  });
}

bp_status bp_module_load(const char* path, bp_module** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "bp_module_load: null argument");
    *out = nullptr;
    *out = new bp_module{boxprompt::load_checkpoint(path).module};
  });
}

bp_status bp_module_save(const bp_module* module, const char* path) {
  return guarded([&] {
    require(module != nullptr && path != nullptr, "bp_module_save: null argument");
    boxprompt::save_checkpoint(path, module->impl, nlohmann::json::object());
  });
}

void bp_module_free(bp_module* module) { delete module; }

bp_status bp_module_parameter_count(const bp_module* module, size_t* out) {
  return guarded([&] {
    require(module != nullptr && out != nullptr, "bp_module_parameter_count: null argument");
    *out = module->impl.parameter_count();
  });
}

bp_status bp_predict(const bp_module* module, const bp_backbone* backbone, const float* image, int rows, int cols,
                     double* prob_out) {
  return guarded([&] {
    require(module != nullptr && backbone != nullptr && image != nullptr && prob_out != nullptr,
            "bp_predict: null argument");
    require(rows > 0 && cols > 0, "bp_predict: image must be non-empty");
    const boxprompt::Backbone& bb = *backbone->impl;
    module->impl.config().validate_against(bb.shape_spec());
    boxprompt::Grid<float> img({rows, cols});
    std::memcpy(img.values().data(), image, img.size() * sizeof(float));
    const boxprompt::PreprocessConfig pre;
    const boxprompt::ModelInput in = boxprompt::to_model_input(img, bb.shape_spec().input_size, pre.input_scale);
    const boxprompt::ProbabilityMap f =
        boxprompt::resize_bilinear(boxprompt::predict(module->impl, bb, bb.encode_image(in, "c-api")), img.shape());
    std::memcpy(prob_out, f.values().data(), f.size() * sizeof(double));
  });
}

bp_status bp_penalty(const char* kind, double t, double z, double* value, double* derivative) {
  return guarded([&] {
    require(kind != nullptr, "bp_penalty: null kind");
    boxprompt::PenaltyConfig cfg{boxprompt::penalty_kind_from_string(kind), t};
    cfg.validate();
    if (value != nullptr) *value = boxprompt::penalty(z, cfg);
    if (derivative != nullptr) *derivative = boxprompt::penalty_derivative(z, cfg);
  });
}

bp_status bp_box_loss(const double* f, int rows, int cols, int rmin, int cmin, int rmax, int cmax,
                      const char* config_json, double out[4], double* grad_out) {
  return guarded([&] {
    require(f != nullptr && out != nullptr, "bp_box_loss: null argument");
    require(rows > 0 && cols > 0, "bp_box_loss: grid must be non-empty");
    const boxprompt::PipelineConfig cfg = boxprompt::config_from_json(parse_config(config_json));
    boxprompt::ProbabilityMap map({rows, cols});
    std::memcpy(map.values().data(), f, map.size() * sizeof(double));
    boxprompt::validate_probability_map(map);
    const boxprompt::TightBox box{rmin, cmin, rmax, cmax};
    const auto bc = boxprompt::make_box_constraints(box, map.shape(), cfg.train.band_width);
    boxprompt::Grid<double> grad(map.shape(), 0.0);
    const auto lb = boxprompt::total_loss(map, bc.partition, bc.segments, cfg.train.weights, cfg.train.prior,
                                          cfg.train.penalty, grad_out != nullptr ? &grad : nullptr);
    out[0] = lb.empty;
    out[1] = lb.tight;
    out[2] = lb.size;
    out[3] = lb.total;
    if (grad_out != nullptr) std::memcpy(grad_out, grad.values().data(), grad.size() * sizeof(double));
  });
}

bp_status bp_dice(const uint8_t* a, const uint8_t* b, size_t n, double* out) {
  return guarded([&] {
    require(a != nullptr && b != nullptr && out != nullptr, "bp_dice: null argument");
    require(n > 0, "bp_dice: masks must be non-empty");
    boxprompt::Mask ma({1, static_cast<int>(n)}), mb({1, static_cast<int>(n)});
    std::memcpy(ma.values().data(), a, n);
    std::memcpy(mb.values().data(), b, n);
    *out = boxprompt::dice(ma, mb);
  });
}

bp_status bp_default_config(char** out_json) {
  return guarded([&] {
    require(out_json != nullptr, "bp_default_config: null argument");
    *out_json = dup_string(boxprompt::config_to_json(boxprompt::PipelineConfig{}).dump(2));
  });
}

bp_status bp_run_command(const char* name, const char* config_json, char** result_json) {
  return guarded([&] {
    require(name != nullptr, "bp_run_command: null command name");
    if (result_json != nullptr) *result_json = nullptr;
    const boxprompt::PipelineConfig cfg = boxprompt::config_from_json(parse_config(config_json));
    const std::string cmd = name;
    nlohmann::json result;
    if (cmd == "synth") {
      result = boxprompt::cmd_synth(cfg);
    } else if (cmd == "preprocess") {
      result = boxprompt::cmd_preprocess(cfg);
    } else if (cmd == "cache-embeddings") {
      result = boxprompt::cmd_cache_embeddings(cfg);
    } else if (cmd == "train") {
      result = boxprompt::cmd_train(cfg);
    } else if (cmd == "evaluate") {
      result = boxprompt::cmd_evaluate(cfg);
    } else if (cmd == "predict") {
      result = boxprompt::cmd_predict(cfg);
    } else if (cmd == "experiment") {
      result = boxprompt::cmd_experiment(cfg);
    } else {
      boxprompt::fail(boxprompt::ErrorKind::InvalidConfig, "unknown command '" + cmd + "'");
    }
    if (result_json != nullptr) *result_json = dup_string(result.dump(2));
  });
}

}  // extern "C"

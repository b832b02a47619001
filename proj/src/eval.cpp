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

#include "boxprompt/eval.hpp"

#include <algorithm>
#include <cmath>

#include "boxprompt/imageops.hpp"

namespace boxprompt {

Mask binarize(const ProbabilityMap& f, double threshold) {
  Mask m(f.shape());
  for (std::size_t i = 0; i < f.size(); ++i) m[i] = f[i] >= threshold ? 1 : 0;
  return m;
}

double dice(const Mask& a, const Mask& b) {
  if (!(a.shape() == b.shape())) {
    fail(ErrorKind::ShapeMismatch, "dice: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
  long inter = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a[i] != 0, y = b[i] != 0;
    na += x;
    nb += y;
    inter += x && y;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

MetricsReport MetricsReport::from_scores(std::vector<SampleScore> scores, std::string fingerprint) {
  if (scores.empty()) fail(ErrorKind::EmptyInput, "cannot build a metrics report from zero samples");
  MetricsReport r;
  r.per_sample = std::move(scores);
  r.n = static_cast<int>(r.per_sample.size());
  double sum = 0.0;
  for (const auto& s : r.per_sample) sum += s.dice;
  r.mean = sum / r.n;
  double sq = 0.0;
  for (const auto& s : r.per_sample) sq += (s.dice - r.mean) * (s.dice - r.mean);
  r.std = std::sqrt(sq / r.n);
  r.config_fingerprint = std::move(fingerprint);
  return r;
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& s : per_sample) per.push_back({{"id", s.id}, {"dice", s.dice}});
  return {{"per_sample", per}, {"mean", mean}, {"std", std}, {"n", n}, {"config_fingerprint", config_fingerprint}};
}

MetricsReport MetricsReport::from_json(const nlohmann::json& j) {
  try {
    std::vector<SampleScore> scores;
    for (const auto& s : j.at("per_sample")) scores.push_back({s.at("id").get<std::string>(), s.at("dice").get<double>()});
    return from_scores(std::move(scores), j.value("config_fingerprint", std::string()));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::FormatError, std::string("bad metrics report: ") + e.what());
  }
}

ProbabilityMap predict(const PromptModule& module, const Backbone& backbone, const ImageEmbedding& emb) {
  const PromptEmbedding pe = module.forward(emb);
  return decode_mask(backbone, emb, pe, backbone.shape_spec().input_size);
}

namespace {

double score_prediction(const ProbabilityMap& model_grid_prob, const Sample& s, const EvalOptions& opts) {
  if (!s.mask) fail(ErrorKind::MissingMask, "test sample '" + s.id + "' has no ground-truth mask");
  if (opts.resolution == EvalResolution::Original) {
    const ProbabilityMap f = resize_bilinear(model_grid_prob, s.image.shape());
    return dice(binarize(f, opts.threshold), *s.mask);
  }
  const Mask gt = resize_nearest(*s.mask, model_grid_prob.shape());
  return dice(binarize(model_grid_prob, opts.threshold), gt);
}

void require_nonempty(std::span<const Sample> test) {
  if (test.empty()) fail(ErrorKind::EmptyInput, "evaluation set is empty");
  for (const auto& s : test) {
    if (!s.mask) fail(ErrorKind::MissingMask, "test sample '" + s.id + "' has no ground-truth mask");
  }
}

}  // namespace

MetricsReport evaluate(const PromptModule& module, std::span<const Sample> test, EmbeddingProvider& provider,
                       const EvalOptions& opts) {
  require_nonempty(test);
  std::vector<SampleScore> scores;
  scores.reserve(test.size());
  for (const auto& s : test) {
    const ImageEmbedding emb = provider.get(s);
    scores.push_back({s.id, score_prediction(predict(module, provider.backbone(), emb), s, opts)});
  }
  return MetricsReport::from_scores(std::move(scores), opts.config_fingerprint);
}

MetricsReport evaluate_prompted_baseline(std::span<const Sample> test, EmbeddingProvider& provider,
                                         const EvalOptions& opts) {
  require_nonempty(test);
  const Backbone& bb = provider.backbone();
  const Shape input = bb.shape_spec().input_size;
  std::vector<SampleScore> scores;
  scores.reserve(test.size());
  for (const auto& s : test) {
    const ImageEmbedding emb = provider.get(s);
    const TightBox box = map_box_to_grid(s.weak_box(), s.image.shape(), input);
    const ProbabilityMap f = decode_mask(bb, emb, bb.encode_box_prompt(box), input);
    scores.push_back({s.id, score_prediction(f, s, opts)});
  }
  return MetricsReport::from_scores(std::move(scores), opts.config_fingerprint);
}

RunAggregate aggregate_runs(std::span<const MetricsReport> reports) {
  if (reports.empty()) fail(ErrorKind::EmptyList, "aggregate_runs needs at least one report");
  std::vector<double> means;
  means.reserve(reports.size());
  for (const auto& r : reports) means.push_back(r.mean);
  std::sort(means.begin(), means.end());
  RunAggregate agg;
  agg.runs = static_cast<int>(means.size());
  double sum = 0.0;
  for (double m : means) sum += m;
  agg.mean = sum / agg.runs;
  double sq = 0.0;
  for (double m : means) sq += (m - agg.mean) * (m - agg.mean);
  agg.std = std::sqrt(sq / agg.runs);
  return agg;
}

}  // namespace boxprompt

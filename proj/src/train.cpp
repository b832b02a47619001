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

#include "boxprompt/train.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <numeric>
#include <thread>

#include "boxprompt/checkpoint.hpp"
#include "boxprompt/random.hpp"

namespace boxprompt {

namespace fs = std::filesystem;

namespace {

nlohmann::json loss_json(const LossBreakdown& l) {
  return {{"empty", l.empty}, {"tight", l.tight}, {"size", l.size}, {"total", l.total}};
}

void accumulate(LossBreakdown& acc, const LossBreakdown& x, double w) {
  acc.empty += w * x.empty;
  acc.tight += w * x.tight;
  acc.size += w * x.size;
  acc.total += w * x.total;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) fail(ErrorKind::IOFailure, "cannot open " + path.string() + " for writing");
  os << j.dump(2) << '\n';
}

class AdamW {
 public:
  AdamW(const ParameterSet& like, const TrainConfig& cfg)
      : m_(like.zeros_like()), v_(like.zeros_like()), cfg_(cfg) {}

  void step(ParameterSet& params, const ParameterSet& grads, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.adam_beta1, t_);
    const double bc2 = 1.0 - std::pow(cfg_.adam_beta2, t_);
    for (std::size_t a = 0; a < params.arrays.size(); ++a) {
      auto& p = params.arrays[a].values;
      const auto& g = grads.arrays[a].values;
      auto& m = m_.arrays[a].values;
      auto& v = v_.arrays[a].values;
      for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = cfg_.adam_beta1 * m[i] + (1.0 - cfg_.adam_beta1) * g[i];
        v[i] = cfg_.adam_beta2 * v[i] + (1.0 - cfg_.adam_beta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] -= lr * (mhat / (std::sqrt(vhat) + cfg_.adam_eps) + cfg_.weight_decay * p[i]);
      }
    }
  }

 private:
  ParameterSet m_;
  ParameterSet v_;
  const TrainConfig& cfg_;
  int t_ = 0;
};

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) fail(ErrorKind::InvalidConfig, "batch_size must be >= 1");
  if (epochs < 1) fail(ErrorKind::InvalidConfig, "epochs must be >= 1");
  if (!(lr >= 0.0) || !(weight_decay >= 0.0)) fail(ErrorKind::InvalidConfig, "lr and weight_decay must be >= 0");
  if (!(lr_drop_at > 0.0 && lr_drop_at < 1.0)) fail(ErrorKind::InvalidConfig, "lr_drop_at must be in (0, 1)");
  if (!(lr_drop_factor >= 0.0)) fail(ErrorKind::InvalidConfig, "lr_drop_factor must be >= 0");
  if (patience < 0) fail(ErrorKind::InvalidConfig, "patience must be >= 0");
  if (band_width < 1) fail(ErrorKind::InvalidWidth, "band_width must be >= 1");
  if (!(threshold > 0.0 && threshold < 1.0)) fail(ErrorKind::InvalidConfig, "threshold must be in (0, 1)");
  weights.validate();
  prior.validate();
  penalty.validate();
}

nlohmann::json TrainConfig::to_json() const {
  return {{"batch_size", batch_size},
          {"lr", lr},
          {"weight_decay", weight_decay},
          {"epochs", epochs},
          {"lr_drop_factor", lr_drop_factor},
          {"lr_drop_at", lr_drop_at},
          {"patience", patience},
          {"adam_beta1", adam_beta1},
          {"adam_beta2", adam_beta2},
          {"adam_eps", adam_eps},
          {"lambda_tight", weights.lambda_tight},
          {"lambda_size", weights.lambda_size},
          {"eps_lo", prior.eps_lo},
          {"eps_hi", prior.eps_hi},
          {"penalty", to_string(penalty.kind)},
          {"t", penalty.t},
          {"band_width", band_width},
          {"threshold", threshold},
          {"seed", seed},
          {"use_cache", use_cache}};
}

double lr_at(int epoch, const TrainConfig& cfg) {
  if (epoch < 0 || epoch >= cfg.epochs) {
    fail(ErrorKind::EpochOutOfRange,
         "epoch " + std::to_string(epoch) + " outside [0, " + std::to_string(cfg.epochs) + ")");
  }
  const int drop = static_cast<int>(std::ceil(cfg.epochs * cfg.lr_drop_at));
  return epoch < drop ? cfg.lr : cfg.lr * cfg.lr_drop_factor;
}

nlohmann::json RunRecord::to_json(bool include_timing) const {
  nlohmann::json ep = nlohmann::json::array();
  for (const auto& e : epochs) {
    nlohmann::json j = {{"epoch", e.epoch}, {"lr", e.lr}, {"loss", loss_json(e.loss)}};
    j["val_dice"] = e.val_dice ? nlohmann::json(*e.val_dice) : nlohmann::json(nullptr);
    ep.push_back(j);
  }
  nlohmann::json st = nlohmann::json::array();
  for (const auto& s : steps) st.push_back({{"epoch", s.epoch}, {"step", s.step}, {"loss", loss_json(s.loss)}});
  nlohmann::json j = {{"config", config},
                      {"epochs", ep},
                      {"steps", st},
                      {"best_epoch", best_epoch},
                      {"best_val_dice", best_val_dice ? nlohmann::json(*best_val_dice) : nlohmann::json(nullptr)},
                      {"checkpoint_path", checkpoint_path},
                      {"seed", seed},
                      {"subset_seed", subset_seed ? nlohmann::json(*subset_seed) : nlohmann::json(nullptr)},
                      {"train_ids", train_ids},
                      {"backbone_checksum", backbone_checksum}};
  if (include_timing) j["wall_seconds"] = wall_seconds;
  return j;
}

TrainResult train(const TrainConfig& cfg, std::span<const Sample> train_set, std::span<const Sample> val_set,
                  PromptModule& module, EmbeddingProvider& provider, const std::optional<fs::path>& run_dir,
                  const RunLabels& labels) {
  const auto started = std::chrono::steady_clock::now();
  cfg.validate();
  if (train_set.empty()) fail(ErrorKind::EmptyTrainSet, "training set is empty");
  const Backbone& bb = provider.backbone();
  module.config().validate_against(bb.shape_spec());
  const std::string checksum_before = bb.weights_checksum();
  const Shape grid = bb.shape_spec().input_size;

  std::vector<BoxConstraints> constraints;
  constraints.reserve(train_set.size());
  for (const auto& s : train_set) {
    const TightBox box = map_box_to_grid(s.weak_box(), s.image.shape(), grid);
    constraints.push_back(make_box_constraints(box, grid, cfg.band_width));
  }

  EmbeddingProvider recompute(bb, provider.input_scale(), EmbeddingProvider::Mode::Recompute);
  EmbeddingProvider& source = cfg.use_cache ? provider : recompute;
  const EvalOptions val_opts{cfg.threshold, EvalResolution::Original, {}};

  RunRecord rec;
  rec.config = {{"train", cfg.to_json()},
                {"module", module.config().to_json()},
                {"backbone", bb.id()},
                {"backbone_fingerprint", bb.fingerprint()}};
  if (!labels.config_echo.is_null()) rec.config["pipeline"] = labels.config_echo;
  rec.seed = cfg.seed;
  rec.subset_seed = labels.subset_seed;
  for (const auto& s : train_set) rec.train_ids.push_back(s.id);

  std::optional<std::ofstream> metrics;
  if (run_dir) {
    fs::create_directories(*run_dir);
    write_json(*run_dir / "config.json", rec.config);
    metrics.emplace(*run_dir / "metrics.jsonl", std::ios::trunc);
    if (!*metrics) fail(ErrorKind::IOFailure, "cannot write metrics in " + run_dir->string());
  }

  AdamW opt(module.parameters(), cfg);
  Rng shuffle(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(train_set.size());
  ParameterSet best_params = module.parameters();
  int since_best = 0;
  int global_step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at(epoch, cfg);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[shuffle.below(i)]);

    EpochRecord er{epoch, lr, {}, std::nullopt};
    int steps_this_epoch = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      ParameterSet grads = module.parameters().zeros_like();
      LossBreakdown step_loss;
      for (std::size_t b = start; b < end; ++b) {
        const Sample& s = train_set[order[b]];
        const BoxConstraints& bc = constraints[order[b]];
        const ImageEmbedding emb = source.get(s);
        PromptTrace ptrace;
        const PromptEmbedding pe = module.forward(emb, &ptrace);
        DecodeTrace dtrace;
        const ProbabilityMap f = decode_mask(bb, emb, pe, grid, &dtrace);
        Grid<double> grad_f(grid, 0.0);
        const LossBreakdown lb =
            total_loss(f, bc.partition, bc.segments, cfg.weights, cfg.prior, cfg.penalty, &grad_f, inv_batch);
        accumulate(step_loss, lb, inv_batch);
        module.backward(ptrace, decode_mask_backward(bb, emb, dtrace, grad_f), grads);
      }
      opt.step(module.parameters(), grads, lr);
      if (!module.parameters().all_finite()) {
        fail(ErrorKind::InternalInvariant, "non-finite prompt-module parameters at epoch " + std::to_string(epoch));
      }
      rec.steps.push_back({epoch, global_step++, step_loss});
      accumulate(er.loss, step_loss, 1.0);
      ++steps_this_epoch;
    }
    er.loss.empty /= steps_this_epoch;
    er.loss.tight /= steps_this_epoch;
    er.loss.size /= steps_this_epoch;
    er.loss.total /= steps_this_epoch;

    bool improved = false;
    if (!val_set.empty()) {
      er.val_dice = evaluate(module, val_set, provider, val_opts).mean;
      if (!rec.best_val_dice || *er.val_dice > *rec.best_val_dice) {
        rec.best_val_dice = er.val_dice;
        improved = true;
      }
    } else {
      improved = true;
    }
    if (improved) {
      rec.best_epoch = epoch;
      best_params = module.parameters();
      since_best = 0;
    } else {
      ++since_best;
    }
    if (metrics) {
      nlohmann::json line = {{"epoch", epoch}, {"lr", lr}, {"loss", loss_json(er.loss)}};
      line["val_dice"] = er.val_dice ? nlohmann::json(*er.val_dice) : nlohmann::json(nullptr);
      *metrics << line.dump() << '\n';
    }
    rec.epochs.push_back(er);
    if (cfg.patience > 0 && !val_set.empty() && since_best >= cfg.patience) break;
  }

  rec.backbone_checksum = bb.weights_checksum();
  if (rec.backbone_checksum != checksum_before) {
    fail(ErrorKind::InternalInvariant, "backbone weights changed during training");
  }

  PromptModule best(module.config(), best_params);
  if (run_dir) {
    const nlohmann::json meta = {{"backbone", bb.id()},
                                 {"backbone_fingerprint", bb.fingerprint()},
                                 {"input_scale", provider.input_scale()},
                                 {"threshold", cfg.threshold}};
    nlohmann::json best_meta = meta;
    best_meta["epoch"] = rec.best_epoch;
    nlohmann::json last_meta = meta;
    last_meta["epoch"] = rec.epochs.back().epoch;
    save_checkpoint(*run_dir / "checkpoint_best.bin", best, best_meta);
    save_checkpoint(*run_dir / "checkpoint_last.bin", module, last_meta);
    rec.checkpoint_path = (*run_dir / "checkpoint_best.bin").string();
  }
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  if (run_dir) write_json(*run_dir / "run_record.json", rec.to_json());
  return {std::move(rec), std::move(best)};
}

nlohmann::json ExperimentReport::to_json(bool include_timing) const {
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& r : runs) {
    rs.push_back({{"subset_seed", r.subset_seed},
                  {"init_seed", r.init_seed},
                  {"subset_ids", r.subset_ids},
                  {"best_epoch", r.record.best_epoch},
                  {"checkpoint_path", r.record.checkpoint_path},
                  {"test", r.test.to_json()}});
    if (include_timing) rs.back()["wall_seconds"] = r.record.wall_seconds;
  }
  return {{"runs", rs},
          {"mean", aggregate.mean},
          {"std", aggregate.std},
          {"n_runs", aggregate.runs},
          {"mean_sample_std", mean_sample_std}};
}

ExperimentReport repeated_experiment(const TrainConfig& base, std::span<const Sample> dataset,
                                     const ExperimentSpec& spec, const PromptModuleConfig& module_template,
                                     EmbeddingProvider& provider, const EvalOptions& eval_opts,
                                     const std::optional<fs::path>& out_dir, const nlohmann::json& config_echo) {
  base.validate();
  const std::vector<Sample> train_pool = filter_split(dataset, Split::Train);
  const std::vector<Sample> val = filter_split(dataset, Split::Val);
  const std::vector<Sample> test = filter_split(dataset, Split::Test);
  if (train_pool.empty()) fail(ErrorKind::EmptyTrainSet, "dataset has no train split");
  if (test.empty()) fail(ErrorKind::EmptyInput, "dataset has no test split");
  if (spec.subset_seeds.empty() || spec.init_seeds.empty()) {
    fail(ErrorKind::InvalidConfig, "repeated experiment needs at least one subset seed and one init seed");
  }
  // Fails early with KTooLarge before any run starts.
  few_shot_indices(train_pool.size(), {spec.k, spec.subset_seeds.front(), 0});

  struct Job {
    std::uint64_t subset_seed;
    std::uint64_t init_seed;
  };
  std::vector<Job> jobs;
  for (auto s : spec.subset_seeds) {
    for (auto i : spec.init_seeds) jobs.push_back({s, i});
  }
  std::vector<std::optional<ExperimentRun>> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());

  auto run_job = [&](std::size_t j) {
    const Job& job = jobs[j];
    ExperimentRun run;
    run.subset_seed = job.subset_seed;
    run.init_seed = job.init_seed;
    const std::vector<Sample> subset = sample_few_shot(train_pool, {spec.k, job.subset_seed, job.init_seed});
    for (const auto& s : subset) run.subset_ids.push_back(s.id);
    PromptModuleConfig mc = module_template;
    mc.init_seed = job.init_seed;
    PromptModule module(mc);
    TrainConfig cfg = base;
    cfg.seed = job.init_seed;
    std::optional<fs::path> run_dir;
    if (out_dir) {
      run_dir = *out_dir / ("run_s" + std::to_string(job.subset_seed) + "_i" + std::to_string(job.init_seed));
    }
    TrainResult tr = train(cfg, subset, val, module, provider, run_dir, {config_echo, job.subset_seed});
    run.record = std::move(tr.record);
    run.test = evaluate(tr.best, test, provider, eval_opts);
    results[j] = std::move(run);
  };

  unsigned threads = spec.threads != 0 ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(jobs.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      try {
        run_job(j);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  ExperimentReport report;
  std::vector<MetricsReport> tests;
  double sample_std = 0.0;
  for (auto& r : results) {
    tests.push_back(r->test);
    sample_std += r->test.std;
    report.runs.push_back(std::move(*r));
  }
  report.aggregate = aggregate_runs(tests);
  report.mean_sample_std = sample_std / static_cast<double>(tests.size());
  if (out_dir) write_json(*out_dir / "experiment_report.json", report.to_json());
  return report;
}

}  // namespace boxprompt

// Copyright 2026 The esimcse Authors.
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

#include "esimcse/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "esimcse/contrastive.hpp"
#include "esimcse/error.hpp"

namespace esimcse {
namespace {

enum Stream : std::uint64_t { kInitStream = 1, kShuffleStream = 2, kAugmentStream = 3, kDropoutStream = 4 };

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

Batch compose_batch(std::span<const std::string> sentences, const Vocab& vocab, const Augmenter& augmenter,
                    Rng& rng) {
  if (sentences.empty()) throw std::invalid_argument("compose_batch: no sentences");
  Batch batch;
  for (const auto& s : sentences) {
    batch.first.push_back(tokenize_subwords(s, vocab));
    batch.second.push_back(augmenter.apply(batch.first.back(), rng));
  }
  return batch;
}

std::string TrainLog::to_tsv() const {
  std::string out = "step\tloss\tqueue_fill\tdev_spearman\n";
  for (const auto& r : records) {
    out += std::to_string(r.step) + '\t' + format_real(r.loss) + '\t' + std::to_string(r.queue_fill) + '\t';
    if (r.dev_spearman) out += format_real(*r.dev_spearman);
    out += '\n';
  }
  return out;
}

Trainer::Trainer(const TrainConfig& config, const Vocab& vocab)
    : config_(config),
      encoder_config_(config.encoder_config(vocab.size())),
      adam_(AdamConfig{config.learning_rate}),
      dropout_rng_(Rng(config.seed).substream(kDropoutStream)) {
  config_.validate();
  Rng init_rng = Rng(config.seed).substream(kInitStream);
  params_ = init_params<float>(encoder_config_, init_rng);
  momentum_ = MomentumState<float>(params_, config.momentum);
  if (const std::size_t capacity = config.queue_capacity(); capacity > 0) {
    queue_.emplace(capacity, encoder_config_.width);
  }
}

StepRecord Trainer::train_step(const Batch& batch, StepTrace* trace) {
  if (batch.first.empty() || batch.first.size() != batch.second.size()) {
    throw std::invalid_argument("train_step: malformed batch");
  }
  const Matrix<float> queued = queue_ ? queue_->entries() : Matrix<float>(0, encoder_config_.width);

  Tape<float> tape;
  const auto vars = bind_parameters(tape, params_);
  const Var<float> first = encode(tape, vars, encoder_config_, std::span<const TokenSequence>(batch.first), true,
                                  dropout_rng_);
  const Var<float> second = encode(tape, vars, encoder_config_, std::span<const TokenSequence>(batch.second), true,
                                   dropout_rng_);
  const Var<float> loss = infonce_loss(first, second, queued, config_.temperature);
  const double loss_value = loss.value()(0, 0);
  if (trace) *trace = StepTrace{first.value(), second.value(), queued, config_.temperature};
  if (!std::isfinite(loss_value)) {
    throw NumericError("non-finite loss at step " + std::to_string(step_ + 1));
  }

  tape.backward(loss);
  adam_step(params_, gradients(tape, vars), adam_);
  ema_update(momentum_, params_);
  if (queue_) queue_->enqueue(momentum_encode(std::span<const TokenSequence>(batch.first), momentum_, encoder_config_));

  ++step_;
  StepRecord record;
  record.step = step_;
  record.loss = loss_value;
  record.queue_fill = queue_fill();
  return record;
}

std::vector<std::string> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read corpus " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") != std::string::npos) lines.push_back(line);
  }
  if (lines.empty()) throw DataError("corpus " + path + " is empty");
  return lines;
}

TrainResult train(const TrainConfig& config, std::span<const std::string> corpus, std::span<const StsPair> dev) {
  config.validate();
  if (corpus.empty()) throw DataError("corpus is empty");
  if (dev.size() < 2) throw DataError("dev set needs at least two pairs");
  {
    std::vector<double> gold;
    for (const auto& p : dev) gold.push_back(p.gold);
    if (std::adjacent_find(gold.begin(), gold.end(), std::not_equal_to<>()) == gold.end()) {
      throw DataError("dev set gold scores are constant; Spearman is undefined");
    }
  }

  const auto started = std::chrono::steady_clock::now();
  TrainResult result;
  result.vocab = build_vocab(corpus, config.vocab_size);
  const Vocab& vocab = result.vocab;

  AugmentationConfig aug = config.augmentation;
  if (aug.strategy == Strategy::kInsertStopword && aug.stopwords.empty() && !config.stopwords_path.empty()) {
    aug.stopwords = load_stopwords(config.stopwords_path);
  }
  const Augmenter augmenter(aug, vocab);
  Trainer trainer(config, vocab);

  auto snapshot = [&](std::int64_t step, double score) {
    result.best = Checkpoint{trainer.encoder_config(), vocab.hash(), trainer.params(), trainer.momentum()};
    result.best_step = step;
    result.best_dev_spearman = score;
  };
  result.initial_dev_spearman = evaluate_spearman(dev, trainer.params(), trainer.encoder_config(), vocab);

  const Rng base(config.seed);
  Rng shuffle_rng = base.substream(kShuffleStream);
  Rng augment_rng = base.substream(kAugmentStream);
  const auto batch = static_cast<std::size_t>(config.batch_size);
  const std::size_t steps_per_epoch = (corpus.size() + batch - 1) / batch;
  const auto total_steps = static_cast<std::int64_t>(steps_per_epoch) * config.epochs;

  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  bool have_best = false;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle_rng.uniform_int(i))]);
    }
    for (std::size_t start = 0; start < order.size(); start += batch) {
      std::vector<std::string> sentences;
      for (std::size_t k = start; k < std::min(start + batch, order.size()); ++k) sentences.push_back(corpus[order[k]]);
      StepRecord record = trainer.train_step(compose_batch(sentences, vocab, augmenter, augment_rng));
      if (record.step % config.eval_every == 0 || record.step == total_steps) {
        const double score = evaluate_spearman(dev, trainer.params(), trainer.encoder_config(), vocab);
        record.dev_spearman = score;
        if (!have_best || score > result.best_dev_spearman) {
          snapshot(record.step, score);
          have_best = true;
        }
      }
      record.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      result.log.records.push_back(record);
    }
  }
  return result;
}

TrainResult train(const TrainConfig& config) {
  if (config.corpus_path.empty()) throw std::invalid_argument("no corpus path given");
  if (config.dev_path.empty()) throw std::invalid_argument("no dev set path given");
  const auto corpus = load_corpus(config.corpus_path);
  const auto dev = load_sts(config.dev_path);
  TrainResult result = train(config, corpus, dev);
  if (!config.output_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(config.output_dir);
    const fs::path dir(config.output_dir);
    save_checkpoint((dir / "best.ckpt").string(), result.best);
    result.vocab.save((dir / "vocab.txt").string());
    std::ofstream log(dir / "train_log.tsv", std::ios::binary);
    if (!log) throw DataError("cannot write training log in " + config.output_dir);
    log << result.log.to_tsv();
  }
  return result;
}

}  // namespace esimcse

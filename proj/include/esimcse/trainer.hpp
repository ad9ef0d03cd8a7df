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

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "esimcse/adam.hpp"
#include "esimcse/augmentation.hpp"
#include "esimcse/checkpoint.hpp"
#include "esimcse/config.hpp"
#include "esimcse/encoder.hpp"
#include "esimcse/evaluation.hpp"
#include "esimcse/momentum.hpp"
#include "esimcse/tokenizer.hpp"

namespace esimcse {

// first[i] and second[i] form the positive pair of sentence i.
struct Batch {
  std::vector<TokenSequence> first;
  std::vector<TokenSequence> second;
};

Batch compose_batch(std::span<const std::string> sentences, const Vocab& vocab, const Augmenter& augmenter,
                    Rng& rng);

struct StepRecord {
  std::int64_t step = 0;
  double loss = 0.0;
  std::size_t queue_fill = 0;
  std::optional<double> dev_spearman;
  double elapsed_seconds = 0.0;  // not part of the written log
};

struct TrainLog {
  std::vector<StepRecord> records;

  // Header plus `step<TAB>loss<TAB>queue_fill<TAB>dev_spearman` rows; the last
  // column is empty on steps without evaluation.
  std::string to_tsv() const;
};

// Values a step fed into its loss.
struct StepTrace {
  Matrix<float> first;
  Matrix<float> second;
  Matrix<float> queue;
  double temperature = 0.0;
};

// Owns the mutable training state: encoder, shadow encoder, queue, optimizer.
class Trainer {
 public:
  Trainer(const TrainConfig& config, const Vocab& vocab);

  // Encode both views with dropout, take the queue-extended loss, update the
  // encoder with Adam, move the shadow encoder, then enqueue the shadow
  // encoding of the first views.
  StepRecord train_step(const Batch& batch, StepTrace* trace = nullptr);

  const EncoderParams<float>& params() const { return params_; }
  const MomentumState<float>& momentum() const { return momentum_; }
  const EncoderConfig& encoder_config() const { return encoder_config_; }
  std::size_t queue_fill() const { return queue_ ? queue_->size() : 0; }
  std::int64_t steps_taken() const { return step_; }

 private:
  TrainConfig config_;
  EncoderConfig encoder_config_;
  EncoderParams<float> params_;
  MomentumState<float> momentum_;
  std::optional<EmbeddingQueue<float>> queue_;
  AdamState<float> adam_;
  Rng dropout_rng_;
  std::int64_t step_ = 0;
};

struct TrainResult {
  Vocab vocab;
  TrainLog log;
  Checkpoint best;
  std::int64_t best_step = 0;
  double best_dev_spearman = 0.0;
  double initial_dev_spearman = 0.0;  // dev score of the untrained encoder
};

// Runs the configured epochs over `corpus`, evaluating on `dev` every
// eval_every steps and after the last step, and keeps the best checkpoint.
TrainResult train(const TrainConfig& config, std::span<const std::string> corpus, std::span<const StsPair> dev);

// Reads corpus and dev files from `config`; when output_dir is set, writes
// best.ckpt, vocab.txt and train_log.tsv there.
TrainResult train(const TrainConfig& config);

std::vector<std::string> load_corpus(const std::string& path);

}  // namespace esimcse

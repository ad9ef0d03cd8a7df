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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "esimcse/augmentation.hpp"
#include "esimcse/checkpoint.hpp"
#include "esimcse/cli.hpp"
#include "esimcse/contrastive.hpp"
#include "esimcse/evaluation.hpp"
#include "esimcse/grad_check.hpp"
#include "esimcse/momentum.hpp"
#include "esimcse/synthetic.hpp"
#include "esimcse/trainer.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace esimcse;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// 1. Full-model gradients against central differences.
Outcome gradient_suite() {
  const auto start = Clock::now();
  const Vocab vocab = fixture::sample_vocab();
  EncoderConfig config;
  config.vocab_size = vocab.size();
  config.layers = 2;
  config.width = 64;
  config.heads = 4;
  config.ffn_width = 256;
  config.max_length = 32;
  config.dropout = 0.1;
  Rng rng(2024);
  const auto params = init_params<double>(config, rng);
  const auto sentences = fixture::sample_sentences();
  const auto seqs = fixture::tokenize_all(sentences, vocab);
  const std::vector<TokenSequence> first(seqs.begin(), seqs.begin() + 4);
  const Augmenter aug(AugmentationConfig{}, vocab);
  std::vector<TokenSequence> second;
  for (const auto& s : first) second.push_back(aug.apply(s, rng));
  const Matrix<double> queue = oracle::random_matrix(8, config.width, 77);

  GradCheckOptions opt;
  opt.epsilon = 1e-5;
  opt.denominator_floor = 1e-5;
  opt.samples_per_array = 16;
  opt.seed = 5;
  const auto report = grad_check(fixture::flatten(params),
                                 fixture::model_loss(config, first, second, queue, 0.05, 11), opt);
  const double elapsed = seconds_since(start);
  return {report.ok(1e-4) && elapsed < 60.0,
          "max rel error " + fmt("%.3g", report.max_rel_error) + " over " + std::to_string(report.coordinates) +
              " coordinates, " + fmt("%.1f", elapsed) + " s"};
}

// 2. Loss against an explicit-loop oracle; zero-queue reduction bitwise.
Outcome loss_oracle() {
  Rng rng(7);
  double worst = 0.0;
  bool bitwise = true;
  for (int i = 0; i < 200; ++i) {
    const auto n = static_cast<Eigen::Index>(1 + rng.uniform_int(8));
    const auto m = static_cast<Eigen::Index>(rng.uniform_int(17));
    const auto d = static_cast<Eigen::Index>(2 + rng.uniform_int(31));
    const double tau = 0.02 + rng.uniform();
    const auto seed = static_cast<unsigned>(rng.next());
    LossBatch<double> b{oracle::random_matrix(n, d, seed), oracle::random_matrix(n, d, seed + 1),
                        oracle::random_matrix(m, d, seed + 2), tau};
    worst = std::max(worst, std::abs(esimcse_loss(b) - oracle::infonce(b.first, b.second, b.queue, tau)));
    b.queue = Matrix<double>(0, d);
    const double e = esimcse_loss(b), s = simcse_loss(b);
    bitwise &= std::memcmp(&e, &s, sizeof e) == 0;
  }
  return {worst < 1e-10 && bitwise,
          "max |loss - oracle| " + fmt("%.3g", worst) + ", M=0 bitwise " + (bitwise ? "yes" : "no")};
}

// 3. Spearman against the naive average-rank-then-Pearson oracle.
Outcome spearman_oracle() {
  Rng rng(8);
  double worst = 0.0;
  int checked = 0;
  while (checked < 100) {
    const std::size_t n = 2 + rng.uniform_int(49);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<double>(rng.uniform_int(1 + n / 3));  // plenty of ties
      y[i] = std::round(rng.uniform() * 10.0) / 2.0;
    }
    if (std::adjacent_find(x.begin(), x.end(), std::not_equal_to<>()) == x.end()) continue;
    if (std::adjacent_find(y.begin(), y.end(), std::not_equal_to<>()) == y.end()) continue;
    worst = std::max(worst, std::abs(spearman(x, y) - oracle::spearman(x, y)));
    ++checked;
  }
  bool analytic = true;
  for (int i = 0; i < 20; ++i) {
    const std::size_t n = 2 + rng.uniform_int(49);
    std::vector<double> x(n), rev(n);
    for (std::size_t k = 0; k < n; ++k) x[k] = static_cast<double>(k) + rng.uniform();
    for (std::size_t k = 0; k < n; ++k) rev[k] = -x[k];
    analytic &= spearman(x, x) == 1.0 && spearman(x, rev) == -1.0;
  }
  return {worst < 1e-12 && analytic,
          "max |rho - oracle| " + fmt("%.3g", worst) + ", analytic cases exact " + (analytic ? "yes" : "no")};
}

// 4. Augmentation laws over 10,000 seeded samples.
Outcome augmentation_laws() {
  std::vector<std::string> words;
  Rng corpus_rng(9);
  const auto corpus = synthetic_corpus(300, corpus_rng);
  const Vocab vocab = build_vocab(corpus, 150);  // small target keeps many words split into pieces
  const Augmenter aug(AugmentationConfig{}, vocab);
  int bound_fail = 0, length_fail = 0, subseq_fail = 0;
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    const TokenSequence seq = tokenize_subwords(corpus[seed % corpus.size()], vocab);
    Rng probe(seed), run(seed);
    const std::size_t n = seq.size();
    const std::size_t dup_len = sample_dup_len(n, 0.32, probe);
    const std::size_t bound = std::min<std::size_t>(n, std::max<std::size_t>(2, std::size_t(0.32 * double(n))));
    bound_fail += dup_len > bound;
    const TokenSequence out = aug.apply(seq, run);
    length_fail += out.size() != n + dup_len;
    subseq_fail += !oracle::is_subsequence(seq.ids, out.ids);
  }
  Rng rng(10);
  std::map<std::vector<std::size_t>, int> counts;
  for (int i = 0; i < 10000; ++i) ++counts[sample_dup_set(5, 2, rng)];
  double chi2 = 0.0;
  for (const auto& [subset, c] : counts) chi2 += (c - 1000.0) * (c - 1000.0) / 1000.0;
  const bool uniform = counts.size() == 10 && chi2 < 21.666;  // 9 dof, 1% level
  return {bound_fail == 0 && length_fail == 0 && subseq_fail == 0 && uniform,
          "bound/length/subsequence violations " + std::to_string(bound_fail) + "/" + std::to_string(length_fail) +
              "/" + std::to_string(subseq_fail) + ", chi2 " + fmt("%.2f", chi2) + " (< 21.67)"};
}

// 5. FIFO queue and EMA laws.
Outcome momentum_laws() {
  Rng rng(11);
  bool fifo = true;
  for (int schedule = 0; schedule < 1000 && fifo; ++schedule) {
    const std::size_t capacity = 1 + rng.uniform_int(40);
    EmbeddingQueue<double> q(capacity, 1);
    std::deque<double> ref;
    double next = 0.0;
    const auto steps = 1 + rng.uniform_int(20);
    for (std::uint64_t s = 0; s < steps && fifo; ++s) {
      Matrix<double> batch(static_cast<Eigen::Index>(rng.uniform_int(2 * capacity + 1)), 1);
      for (Eigen::Index r = 0; r < batch.rows(); ++r) {
        batch(r, 0) = next;
        ref.push_back(next++);
      }
      std::vector<double> evicted_ref;
      while (ref.size() > capacity) {
        evicted_ref.push_back(ref.front());
        ref.pop_front();
      }
      const Matrix<double> evicted = q.enqueue(batch);
      const Matrix<double> entries = q.entries();
      fifo &= static_cast<std::size_t>(evicted.rows()) == evicted_ref.size() && q.size() == ref.size();
      for (std::size_t i = 0; fifo && i < evicted_ref.size(); ++i) fifo &= evicted(Eigen::Index(i), 0) == evicted_ref[i];
      for (std::size_t i = 0; fifo && i < ref.size(); ++i) fifo &= entries(Eigen::Index(i), 0) == ref[i];
    }
  }

  const auto config = fixture::small_config(60, 32);
  Rng init(12);
  const auto target = init_params<double>(config, init);
  const auto start = init_params<double>(config, init);
  auto distance = [](const EncoderParams<double>& a, const EncoderParams<double>& b) {
    double s = 0.0;
    const auto pa = arrays(a), pb = arrays(b);
    for (std::size_t i = 0; i < pa.size(); ++i) s += (*pa[i] - *pb[i]).squaredNorm();
    return std::sqrt(s);
  };
  double worst_decay = 0.0;
  for (double lambda : {0.5, 0.9, 0.995}) {
    MomentumState<double> state(start, lambda);
    const double d0 = distance(start, target);
    for (int k = 0; k < 10; ++k) ema_update(state, target);
    worst_decay = std::max(worst_decay, std::abs(distance(state.params, target) - std::pow(lambda, 10) * d0));
  }
  MomentumState<double> zero(start, 0.0);
  ema_update(zero, target);
  const bool exact_copy = distance(zero.params, target) == 0.0;
  return {fifo && worst_decay < 1e-12 && exact_copy,
          std::string("FIFO ") + (fifo ? "ok" : "violated") + ", decay error at k=10 " + fmt("%.3g", worst_decay) +
              ", lambda=0 exact " + (exact_copy ? "yes" : "no")};
}

// 6. Pure-dropout configuration reproduces the in-batch loss at every step.
Outcome reduction() {
  Rng data(13);
  const auto corpus = synthetic_corpus(2000, data);
  TrainConfig config;
  config.augmentation.strategy = Strategy::kNone;
  config.queue_multiple = 0.0;
  const Vocab vocab = build_vocab(corpus, config.vocab_size);
  Trainer trainer(config, vocab);
  const Augmenter aug(config.augmentation, vocab);
  Rng rng(14);
  double worst = 0.0;
  bool identical_views = true, queue_empty = true;
  const int steps = 31;
  for (int s = 0; s < steps; ++s) {
    const auto batch_text = std::span<const std::string>(corpus).subspan(std::size_t(s) * 64, 64);
    const Batch batch = compose_batch(batch_text, vocab, aug, rng);
    identical_views &= batch.first == batch.second;
    StepTrace trace;
    const StepRecord r = trainer.train_step(batch, &trace);
    queue_empty &= trace.queue.rows() == 0 && r.queue_fill == 0;
    const double want = oracle::infonce(trace.first.cast<double>(), trace.second.cast<double>(),
                                        Matrix<double>(0, trace.first.cols()), config.temperature);
    worst = std::max(worst, std::abs(r.loss - want));
  }
  return {worst < 1e-6 && identical_views && queue_empty,
          std::to_string(steps) + " steps, max |loss - oracle| " + fmt("%.3g", worst)};
}

struct RunSummary {
  double best = 0.0;
  double initial = 0.0;
  std::string log;
  std::vector<std::uint8_t> checkpoint;
};

TrainConfig experiment_config(std::uint64_t seed, bool full) {
  TrainConfig c;
  c.seed = seed;
  c.eval_every = 4;
  if (!full) {
    c.augmentation.strategy = Strategy::kNone;
    c.queue_multiple = 0.0;
  }
  return c;
}

RunSummary run_experiment(const TrainConfig& config, std::span<const std::string> corpus,
                          std::span<const StsPair> dev) {
  const TrainResult r = train(config, corpus, dev);
  return {r.best_dev_spearman, r.initial_dev_spearman, r.log.to_tsv(), serialize_checkpoint(r.best)};
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct Experiment {
  std::vector<std::string> corpus;
  std::vector<StsPair> dev;
};

Experiment experiment_data() {
  Rng rng(2026);
  Rng corpus_rng = rng.substream(1), dev_rng = rng.substream(2);
  return {synthetic_corpus(2000, corpus_rng), synthetic_sts(200, dev_rng)};
}

// 7. Desk-scale run: learning beats the untrained encoder, and the full
// configuration is at least as good as pure dropout over five seeds.
Outcome end_to_end(const Experiment& data, std::ostream& log) {
  const auto start = Clock::now();
  std::vector<double> gains, full_best, plain_best;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const RunSummary full = run_experiment(experiment_config(seed, true), data.corpus, data.dev);
    const RunSummary plain = run_experiment(experiment_config(seed, false), data.corpus, data.dev);
    gains.push_back(full.best - full.initial);
    full_best.push_back(full.best);
    plain_best.push_back(plain.best);
    log << "  seed " << seed << ": untrained " << fmt("%.4f", full.initial) << ", full " << fmt("%.4f", full.best)
        << ", dropout-only " << fmt("%.4f", plain.best) << '\n';
  }
  const double elapsed = seconds_since(start);
  const double gain = median(gains);
  const double full_median = median(full_best), plain_median = median(plain_best);
  return {gain > 0.1 && full_median >= plain_median && elapsed < 600.0,
          "median gain over untrained " + fmt("%.4f", gain) + ", median best full " + fmt("%.4f", full_median) +
              " vs dropout-only " + fmt("%.4f", plain_median) + ", " + fmt("%.0f", elapsed) + " s"};
}

// 8. Same config and seed, same bytes.
Outcome determinism(const Experiment& data) {
  const TrainConfig config = experiment_config(1, true);
  const RunSummary a = run_experiment(config, data.corpus, data.dev);
  const RunSummary b = run_experiment(config, data.corpus, data.dev);
  const bool logs = a.log == b.log, ckpts = a.checkpoint == b.checkpoint;
  return {logs && ckpts, std::string("train log ") + (logs ? "identical" : "differs") + ", checkpoint " +
                             (ckpts ? "identical" : "differs") + " (" + std::to_string(a.checkpoint.size()) +
                             " bytes)"};
}

// 9. Audit on a constructed fixture, through the command-line tool.
Outcome audit_fidelity() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "esimcse_acceptance_audit";
  fs::create_directories(dir);
  Rng rng(15);
  std::ofstream data(dir / "fixture.tsv"), preds(dir / "predictions.txt");
  std::size_t small = 0, large = 0;
  for (int i = 0; i < 60; ++i) {
    const std::size_t base = 3 + rng.uniform_int(8);
    const bool near = i % 2 == 0;
    const std::size_t diff = near ? rng.uniform_int(4) : 4 + rng.uniform_int(6);
    std::string a, b;
    for (std::size_t k = 0; k < base; ++k) a += (k ? " w" : "w");
    for (std::size_t k = 0; k < base + diff; ++k) b += (k ? " v" : "v");
    const double gold = 0.05 * i + 0.5;  // distinct, within [0, 5]
    data << fmt("%.2f", gold) << '\t' << (rng.bernoulli(0.5) ? a + '\t' + b : b + '\t' + a) << '\n';
    preds << fmt("%.2f", near ? gold : -gold) << '\n';
    (near ? small : large)++;
  }
  data.close();
  preds.close();

  std::string a0 = "esimcse", a1 = "audit", a2 = "--predictions", a3 = (dir / "predictions.txt").string(),
              a4 = "--data", a5 = (dir / "fixture.tsv").string(), a6 = "--threshold", a7 = "3";
  char* argv[] = {a0.data(), a1.data(), a2.data(), a3.data(), a4.data(), a5.data(), a6.data(), a7.data()};
  std::ostringstream captured;
  auto* old = std::cout.rdbuf(captured.rdbuf());
  const int code = run(8, argv);
  std::cout.rdbuf(old);
  fs::remove_all(dir);

  const std::string expected = "Dataset\tlength diff <= 3\tlength diff > 3\nfixture\t1.0000\t-1.0000\npairs\t" +
                               std::to_string(small) + '\t' + std::to_string(large) + '\n';
  const bool ok = code == 0 && captured.str() == expected;
  std::string shown = captured.str();
  std::replace(shown.begin(), shown.end(), '\n', '|');
  return {ok, "report: " + shown};
}

}  // namespace

int main() {
  const Experiment data = experiment_data();
  std::ostringstream seed_log;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 gradient suite", gradient_suite},
      {"2 loss oracle", loss_oracle},
      {"3 spearman oracle", spearman_oracle},
      {"4 augmentation laws", augmentation_laws},
      {"5 momentum laws", momentum_laws},
      {"6 reduction to in-batch loss", reduction},
      {"7 end-to-end experiment", [&] { return end_to_end(data, seed_log); }},
      {"8 determinism", [&] { return determinism(data); }},
      {"9 audit fidelity", audit_fidelity},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << name << ": " << o.detail << std::endl;
    if (name.rfind("7", 0) == 0) std::cout << seed_log.str() << std::flush;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << '\n';
  return failures == 0 ? 0 : 1;
}

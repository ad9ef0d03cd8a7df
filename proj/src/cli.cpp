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

#include "esimcse/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "esimcse/augmentation.hpp"
#include "esimcse/checkpoint.hpp"
#include "esimcse/config.hpp"
#include "esimcse/encoder.hpp"
#include "esimcse/error.hpp"
#include "esimcse/evaluation.hpp"
#include "esimcse/rng.hpp"
#include "esimcse/synthetic.hpp"
#include "esimcse/tokenizer.hpp"
#include "esimcse/trainer.hpp"

namespace esimcse {
namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const std::map<std::string, std::string>& setting_help() {
  static const std::map<std::string, std::string> help = {
      {"corpus", "training corpus, one sentence per line"},
      {"dev", "dev set TSV: gold<TAB>sentence<TAB>sentence"},
      {"out", "output directory for best.ckpt, vocab.txt, train_log.tsv"},
      {"batch-size", "sentences per batch (default 64)"},
      {"temperature", "softmax temperature (default 0.05)"},
      {"epochs", "passes over the corpus (default 1)"},
      {"eval-every", "dev evaluation interval in steps (default 125)"},
      {"queue-multiple", "queue capacity as a multiple of batch size, 0 disables (default 2.5)"},
      {"momentum", "EMA coefficient of the momentum encoder (default 0.995)"},
      {"strategy", "none, subword-repetition, word-repetition, insert-stopword, insert-mask, "
                   "random-insert, random-delete"},
      {"dup-rate", "augmentation rate (default 0.32)"},
      {"stopwords", "stop-word list for insert-stopword"},
      {"dropout", "dropout probability (default 0.1)"},
      {"lr", "Adam learning rate (default 2e-3)"},
      {"seed", "run seed (default 42)"},
      {"vocab-size", "target sub-word vocabulary size (default 400)"},
      {"layers", "transformer layers (default 2)"},
      {"width", "hidden width (default 64)"},
      {"heads", "attention heads (default 4)"},
      {"ffn-width", "feed-forward width (default 256)"},
      {"max-length", "maximum tokens per sentence including [CLS] (default 64)"},
  };
  return help;
}

std::string default_vocab_path(const std::string& checkpoint_path) {
  return (fs::path(checkpoint_path).parent_path() / "vocab.txt").string();
}

struct LoadedModel {
  Checkpoint checkpoint;
  Vocab vocab;
};

LoadedModel load_model(const std::string& checkpoint_path, std::string vocab_path) {
  if (vocab_path.empty()) vocab_path = default_vocab_path(checkpoint_path);
  LoadedModel model{load_checkpoint(checkpoint_path), Vocab::load(vocab_path)};
  if (model.vocab.hash() != model.checkpoint.vocab_hash) {
    throw DataError("vocabulary " + vocab_path + " does not match checkpoint " + checkpoint_path);
  }
  return model;
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string format_correlation(const GroupCorrelation& g) { return g.spearman ? fixed4(*g.spearman) : "undefined"; }

std::vector<double> load_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read predictions " + path);
  std::vector<double> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(line, &used));
      if (line.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument("trailing text");
    } catch (const std::exception&) {
      throw DataError(path + ":" + std::to_string(line_no) + ": unparseable prediction");
    }
  }
  return out;
}

int cmd_train(const std::string& config_path, const std::map<std::string, std::string>& given) {
  TrainConfig config;
  if (!config_path.empty()) apply_config_file(config, config_path);
  for (const auto& [key, value] : given) apply_setting(config, key, value);
  if (config.corpus_path.empty()) throw UsageError("train: a corpus path is required (--corpus)");
  if (config.dev_path.empty()) throw UsageError("train: a dev set path is required (--dev)");
  if (config.output_dir.empty()) throw UsageError("train: an output directory is required (--out)");

  const TrainResult result = train(config);
  std::cout << "steps=" << (result.log.records.empty() ? 0 : result.log.records.back().step)
            << " best_step=" << result.best_step << " best_dev_spearman=" << fixed4(result.best_dev_spearman)
            << " initial_dev_spearman=" << fixed4(result.initial_dev_spearman) << '\n';
  std::cout << "checkpoint=" << (fs::path(config.output_dir) / "best.ckpt").string() << '\n';
  return kExitOk;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& vocab_path,
             const std::vector<std::string>& data_paths, bool json) {
  const LoadedModel model = load_model(checkpoint_path, vocab_path);
  nlohmann::json out = nlohmann::json::object();
  std::vector<std::pair<std::string, double>> rows;
  double total = 0.0;
  for (const auto& path : data_paths) {
    const auto pairs = load_sts(path);
    const double rho = evaluate_spearman<float>(pairs, model.checkpoint.params, model.checkpoint.config, model.vocab);
    rows.emplace_back(fs::path(path).stem().string(), rho);
    total += rho;
  }
  const double avg = total / static_cast<double>(rows.size());
  if (json) {
    for (const auto& [name, rho] : rows) out["datasets"][name] = rho;
    out["avg"] = avg;
    std::cout << out.dump(2) << '\n';
  } else {
    std::cout << "dataset\tspearman\n";
    for (const auto& [name, rho] : rows) std::cout << name << '\t' << fixed4(rho) << '\n';
    std::cout << "Avg.\t" << fixed4(avg) << '\n';
  }
  return kExitOk;
}

int cmd_audit(const std::string& checkpoint_path, const std::string& vocab_path,
              const std::string& predictions_path, const std::string& data_path, int threshold, bool json) {
  if (checkpoint_path.empty() == predictions_path.empty()) {
    throw UsageError("audit: give exactly one of --checkpoint or --predictions");
  }
  if (threshold < 0) throw UsageError("audit: --threshold must be non-negative");
  const auto pairs = load_sts(data_path);
  std::vector<double> predictions;
  if (!predictions_path.empty()) {
    predictions = load_predictions(predictions_path);
    if (predictions.size() != pairs.size()) {
      throw DataError("predictions file has " + std::to_string(predictions.size()) + " values for " +
                      std::to_string(pairs.size()) + " pairs");
    }
  } else {
    const LoadedModel model = load_model(checkpoint_path, vocab_path);
    predictions = score_pairs<float>(pairs, model.checkpoint.params, model.checkpoint.config, model.vocab);
  }
  const AuditReport report = length_bias_audit(pairs, predictions, threshold);
  const std::string name = fs::path(data_path).stem().string();
  if (json) {
    auto group = [](const GroupCorrelation& g) {
      nlohmann::json j;
      j["size"] = g.size;
      j["spearman"] = g.spearman ? nlohmann::json(*g.spearman) : nlohmann::json(nullptr);
      return j;
    };
    nlohmann::json out;
    out["dataset"] = name;
    out["threshold"] = report.threshold;
    out["small"] = group(report.small);
    out["large"] = group(report.large);
    std::cout << out.dump(2) << '\n';
  } else {
    const std::string t = std::to_string(report.threshold);
    std::cout << "Dataset\tlength diff <= " << t << "\tlength diff > " << t << '\n';
    std::cout << name << '\t' << format_correlation(report.small) << '\t' << format_correlation(report.large)
              << '\n';
    std::cout << "pairs\t" << report.small.size << '\t' << report.large.size << '\n';
  }
  return kExitOk;
}

int cmd_embed(const std::string& checkpoint_path, const std::string& vocab_path, const std::string& sentences_path,
              const std::string& out_path) {
  const LoadedModel model = load_model(checkpoint_path, vocab_path);
  const auto sentences = load_corpus(sentences_path);
  std::vector<TokenSequence> seqs;
  seqs.reserve(sentences.size());
  for (const auto& s : sentences) seqs.push_back(tokenize_subwords(s, model.vocab));
  const Matrix<float> emb = encode_each<float>(seqs, model.checkpoint.params, model.checkpoint.config);
  std::ofstream out(out_path);
  if (!out) throw DataError("cannot write embeddings " + out_path);
  char buf[32];
  for (Eigen::Index i = 0; i < emb.rows(); ++i) {
    for (Eigen::Index j = 0; j < emb.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(emb(i, j)));
      if (j > 0) out << ' ';
      out << buf;
    }
    out << '\n';
  }
  if (!out) throw DataError("failed writing embeddings " + out_path);
  std::cout << "rows=" << emb.rows() << " cols=" << emb.cols() << '\n';
  return kExitOk;
}

int cmd_augment_preview(const std::string& sentence, const std::string& strategy_name, std::uint64_t seed,
                        double dup_rate, const std::string& vocab_path, const std::string& stopwords_path) {
  AugmentationConfig config;
  config.strategy = parse_strategy(strategy_name);
  config.dup_rate = dup_rate;
  if (!stopwords_path.empty()) config.stopwords = load_stopwords(stopwords_path);
  config.validate();
  if (tokenize_words(sentence).empty()) throw UsageError("augment-preview: sentence has no words");
  if (config.strategy == Strategy::kNone) {
    std::cout << sentence << '\n';
  }
  // Without a vocabulary every word of the sentence becomes a single token.
  const std::vector<std::string> own{sentence};
  const Vocab vocab = vocab_path.empty() ? build_vocab(own, 1 << 20) : Vocab::load(vocab_path);
  const TokenSequence seq = tokenize_subwords(sentence, vocab);
  Rng rng(seed);
  const Augmenter augmenter(config, vocab);
  const TokenSequence augmented = augmenter.apply(seq, rng);
  if (config.strategy != Strategy::kNone) std::cout << detokenize(augmented, vocab) << '\n';
  std::cout << token_string(augmented, vocab) << '\n';
  return kExitOk;
}

int cmd_synth(const std::string& corpus_out, const std::string& dev_out, std::size_t sentences, std::size_t pairs,
              std::uint64_t seed) {
  Rng rng(seed);
  Rng corpus_rng = rng.substream(1);
  Rng dev_rng = rng.substream(2);
  const auto corpus = synthetic_corpus(sentences, corpus_rng);
  const auto dev = synthetic_sts(pairs, dev_rng);
  std::ofstream c(corpus_out);
  if (!c) throw DataError("cannot write " + corpus_out);
  for (const auto& s : corpus) c << s << '\n';
  std::ofstream d(dev_out);
  if (!d) throw DataError("cannot write " + dev_out);
  char buf[32];
  for (const auto& p : dev) {
    std::snprintf(buf, sizeof buf, "%.2f", p.gold);
    d << buf << '\t' << p.first << '\t' << p.second << '\n';
  }
  if (!c || !d) throw DataError("failed writing synthetic data");
  return kExitOk;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Contrastive sentence-embedding trainer with repetition augmentation and a momentum queue",
               "esimcse"};
  app.require_subcommand(1);

  auto* train_cmd = app.add_subcommand("train", "train an encoder; flags override --config values");
  std::string config_path;
  train_cmd->add_option("--config", config_path, "flat key = value config file")->check(CLI::ExistingFile);
  std::map<std::string, std::string> settings;
  for (const auto& key : config_keys()) {
    train_cmd->add_option("--" + key, settings[key], setting_help().at(key));
  }

  auto* eval_cmd = app.add_subcommand("eval", "Spearman correlation of a checkpoint on STS-style TSV files");
  std::string eval_ckpt, eval_vocab;
  std::vector<std::string> eval_data;
  bool eval_json = false;
  eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--vocab", eval_vocab, "vocabulary file (default: vocab.txt beside the checkpoint)")
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--data", eval_data, "dataset TSV files")->required()->check(CLI::ExistingFile);
  eval_cmd->add_flag("--json", eval_json, "print JSON");

  auto* audit_cmd = app.add_subcommand("audit", "Spearman split by sentence length difference");
  std::string audit_ckpt, audit_vocab, audit_preds, audit_data;
  int audit_threshold = 3;
  bool audit_json = false;
  audit_cmd->add_option("--checkpoint", audit_ckpt, "checkpoint to score the pairs with")
      ->check(CLI::ExistingFile);
  audit_cmd->add_option("--vocab", audit_vocab, "vocabulary file (default: vocab.txt beside the checkpoint)")
      ->check(CLI::ExistingFile);
  audit_cmd->add_option("--predictions", audit_preds, "precomputed scores, one per dataset line")
      ->check(CLI::ExistingFile);
  audit_cmd->add_option("--data", audit_data, "dataset TSV file")->required()->check(CLI::ExistingFile);
  audit_cmd->add_option("--threshold", audit_threshold, "word-count difference threshold")->capture_default_str();
  audit_cmd->add_flag("--json", audit_json, "print JSON");

  auto* embed_cmd = app.add_subcommand("embed", "write sentence embeddings, one row per line");
  std::string embed_ckpt, embed_vocab, embed_sentences, embed_out;
  embed_cmd->add_option("--checkpoint", embed_ckpt, "checkpoint file")->required()->check(CLI::ExistingFile);
  embed_cmd->add_option("--vocab", embed_vocab, "vocabulary file (default: vocab.txt beside the checkpoint)")
      ->check(CLI::ExistingFile);
  embed_cmd->add_option("--sentences", embed_sentences, "one sentence per line")
      ->required()
      ->check(CLI::ExistingFile);
  embed_cmd->add_option("--out", embed_out, "output text file")->required();

  auto* preview_cmd = app.add_subcommand("augment-preview", "show one augmented positive for a sentence");
  std::string preview_sentence, preview_strategy = "subword-repetition", preview_vocab, preview_stopwords;
  std::uint64_t preview_seed = 0;
  double preview_rate = 0.32;
  preview_cmd->add_option("--sentence", preview_sentence, "input sentence")->required();
  preview_cmd->add_option("--strategy", preview_strategy, "augmentation strategy")->capture_default_str();
  preview_cmd->add_option("--seed", preview_seed, "random seed")->capture_default_str();
  preview_cmd->add_option("--dup-rate", preview_rate, "augmentation rate")->capture_default_str();
  preview_cmd->add_option("--vocab", preview_vocab, "vocabulary file (default: one token per word)")
      ->check(CLI::ExistingFile);
  preview_cmd->add_option("--stopwords", preview_stopwords, "stop-word list")->check(CLI::ExistingFile);

  auto* synth_cmd = app.add_subcommand("synth", "write a template corpus and a gold-scored pair set");
  std::string synth_corpus, synth_dev;
  std::size_t synth_sentences = 2000, synth_pairs = 200;
  std::uint64_t synth_seed = 42;
  synth_cmd->add_option("--corpus-out", synth_corpus, "corpus output path")->required();
  synth_cmd->add_option("--dev-out", synth_dev, "pair-set output path")->required();
  synth_cmd->add_option("--sentences", synth_sentences, "corpus size")->capture_default_str();
  synth_cmd->add_option("--pairs", synth_pairs, "number of pairs")->capture_default_str();
  synth_cmd->add_option("--seed", synth_seed, "random seed")->capture_default_str();

  auto active_help = [&]() {
    for (auto* sub : app.get_subcommands()) return sub->help();
    return app.help();
  };

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << active_help();
    return kExitUsage;
  }

  try {
    if (train_cmd->parsed()) {
      std::map<std::string, std::string> given;
      for (const auto& key : config_keys()) {
        if (train_cmd->count("--" + key) > 0) given[key] = settings[key];
      }
      return cmd_train(config_path, given);
    }
    if (eval_cmd->parsed()) return cmd_eval(eval_ckpt, eval_vocab, eval_data, eval_json);
    if (audit_cmd->parsed()) {
      return cmd_audit(audit_ckpt, audit_vocab, audit_preds, audit_data, audit_threshold, audit_json);
    }
    if (embed_cmd->parsed()) return cmd_embed(embed_ckpt, embed_vocab, embed_sentences, embed_out);
    if (preview_cmd->parsed()) {
      return cmd_augment_preview(preview_sentence, preview_strategy, preview_seed, preview_rate, preview_vocab,
                                 preview_stopwords);
    }
    if (synth_cmd->parsed()) return cmd_synth(synth_corpus, synth_dev, synth_sentences, synth_pairs, synth_seed);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << active_help();
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n\n" << active_help();
    return kExitUsage;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::domain_error& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace esimcse

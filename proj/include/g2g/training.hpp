#pragma once

// Teacher-forced training on oracle action sequences, AdamW updates and greedy
// corpus parsing. One sentence per update: state-model inputs change shape at
// every transition, so there is nothing to batch.

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "g2g/evaluation.hpp"
#include "g2g/model.hpp"

namespace g2g {

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-6;
  double weight_decay = 0.01;
  double clip_norm = 1.0;        // <= 0 disables clipping
  double warmup_fraction = 0.01; // of all updates, linear from 0
  int epochs = 12;
  std::uint64_t seed = 1;
  int patience = 0;              // epochs without dev improvement before stopping; 0 = never
  bool dropout = true;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double loss = 0.0;  // mean per sentence
  double dev_uas = 0.0;
  double dev_las = 0.0;
  double seconds = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;  // 1-based, 0 = none

  // "epoch<TAB>loss<TAB>dev_uas<TAB>dev_las" per epoch, after a header line.
  // Wall time is left out so the file is reproducible.
  std::string serialize() const;
};

// NaN or infinite loss during training.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(int epoch, int step, const std::string& what);
  int epoch() const { return epoch_; }
  int step() const { return step_; }

 private:
  int epoch_;
  int step_;
};

class AdamW {
 public:
  AdamW(ParameterStore& params, const TrainConfig& cfg);

  // Scales all gradients so their global L2 norm is at most `max_norm`.
  // Returns the norm before clipping.
  double clip_gradients(double max_norm);
  // One update at learning rate `lr`; decay is decoupled: theta -= lr * wd * theta.
  void step(double lr);
  std::size_t steps() const { return t_; }

 private:
  ParameterStore& params_;
  TrainConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  std::size_t t_ = 0;
};

// Linear warmup over the first warmup_fraction of `total_steps`, then constant.
double learning_rate_at(const TrainConfig& cfg, std::size_t step, std::size_t total_steps);

struct TrainingExample {
  EncodedSentence sentence;
  std::vector<Action> oracle;
};

std::vector<TrainingExample> prepare_examples(const std::vector<AnnotatedSentence>& sentences,
                                              const Vocabulary& vocab);

Tensor step_loss(const ParserModel& model, const TrainingExample& example, std::mt19937_64* rng = nullptr);

struct TrainResult {
  TrainReport report;
  Checkpoint best;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Trains in place. On return the model holds the best-dev-LAS parameters,
// rounded to f32 so that they equal what `best` reloads to.
TrainResult train(ParserModel& model, const std::vector<AnnotatedSentence>& train_set,
                  const std::vector<AnnotatedSentence>& dev_set, const TrainConfig& cfg,
                  const EvalConfig& eval = {}, const EpochCallback& on_epoch = {});

// Greedy parse of every sentence; forms, PoS and comments are copied from the input.
std::vector<AnnotatedSentence> parse_corpus(const ParserModel& model, const std::vector<AnnotatedSentence>& sentences);

// Fraction (percent) of oracle steps whose action and, on arcs, label the model
// predicts when fed gold states.
double teacher_forced_accuracy(const ParserModel& model, const std::vector<TrainingExample>& examples);

}  // namespace g2g

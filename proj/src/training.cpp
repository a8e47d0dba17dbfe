#include "g2g/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

namespace g2g {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning rate must be non-negative");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) throw std::invalid_argument("betas must be in [0, 1)");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (weight_decay < 0.0) throw std::invalid_argument("weight decay must be non-negative");
  if (warmup_fraction < 0.0 || warmup_fraction > 1.0) throw std::invalid_argument("warmup fraction must be in [0, 1]");
  if (epochs < 1) throw std::invalid_argument("epochs must be at least 1");
  if (patience < 0) throw std::invalid_argument("patience must be non-negative");
}

std::string TrainReport::serialize() const {
  std::ostringstream out;
  out << "epoch\tloss\tdev_uas\tdev_las\n";
  char buf[128];
  for (const auto& e : epochs) {
    std::snprintf(buf, sizeof(buf), "%d\t%.6f\t%.2f\t%.2f\n", e.epoch, e.loss, e.dev_uas, e.dev_las);
    out << buf;
  }
  out << "# best_epoch\t" << best_epoch << "\n";
  return out.str();
}

DivergenceError::DivergenceError(int epoch, int step, const std::string& what)
    : std::runtime_error("training diverged at epoch " + std::to_string(epoch) + ", step " + std::to_string(step) +
                         ": " + what),
      epoch_(epoch),
      step_(step) {}

// ---------------------------------------------------------------------------

AdamW::AdamW(ParameterStore& params, const TrainConfig& cfg) : params_(params), cfg_(cfg) {
  for (const auto& [name, t] : params_.entries()) {
    m_.emplace_back(t.size(), 0.0);
    v_.emplace_back(t.size(), 0.0);
  }
}

double AdamW::clip_gradients(double max_norm) {
  double sq = 0.0;
  for (auto& [name, t] : params_.entries()) {
    if (!t.has_grad()) continue;
    for (double g : t.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double factor = max_norm / norm;
    for (Tensor t : params_.tensors()) {
      if (!t.has_grad()) continue;
      for (double& g : t.mutable_grad()) g *= factor;
    }
  }
  return norm;
}

void AdamW::step(double lr) {
  ++t_;
  const double b1 = cfg_.beta1, b2 = cfg_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  std::size_t k = 0;
  for (Tensor t : params_.tensors()) {
    auto value = t.data();
    const bool has = t.has_grad();
    const auto grad = has ? t.grad() : std::span<const double>();
    auto& m = m_[k];
    auto& v = v_[k];
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = has ? grad[i] : 0.0;
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      value[i] -= lr * cfg_.weight_decay * value[i];
      value[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg_.epsilon);
    }
    ++k;
  }
}

double learning_rate_at(const TrainConfig& cfg, std::size_t step, std::size_t total_steps) {
  const double warmup = std::floor(cfg.warmup_fraction * static_cast<double>(total_steps));
  if (warmup <= 0.0 || static_cast<double>(step) >= warmup) return cfg.learning_rate;
  return cfg.learning_rate * static_cast<double>(step + 1) / warmup;
}

// ---------------------------------------------------------------------------

std::vector<TrainingExample> prepare_examples(const std::vector<AnnotatedSentence>& sentences,
                                              const Vocabulary& vocab) {
  std::vector<TrainingExample> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) {
    TrainingExample ex{encode_sentence(s, vocab, true), {}};
    ex.oracle = oracle_sequence(*ex.sentence.gold);
    out.push_back(std::move(ex));
  }
  return out;
}

Tensor step_loss(const ParserModel& model, const TrainingExample& example, std::mt19937_64* rng) {
  return model.loss(example.sentence, example.oracle, rng);
}

namespace {

Scores evaluate(const ParserModel& model, const std::vector<AnnotatedSentence>& dev, const EvalConfig& eval) {
  return score(dev, parse_corpus(model, dev), eval);
}

}  // namespace

TrainResult train(ParserModel& model, const std::vector<AnnotatedSentence>& train_set,
                  const std::vector<AnnotatedSentence>& dev_set, const TrainConfig& cfg, const EvalConfig& eval,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_set.empty()) throw std::invalid_argument("training set is empty");
  if (dev_set.empty()) throw std::invalid_argument("development set is empty");

  const auto examples = prepare_examples(train_set, model.vocab());
  auto& params = model.parameters();
  AdamW optimizer(params, cfg);
  std::mt19937_64 order_rng(cfg.seed);
  std::mt19937_64 dropout_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  const std::size_t total_steps = static_cast<std::size_t>(cfg.epochs) * examples.size();

  TrainResult result;
  double best_las = -1.0;
  int stale = 0;
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), order_rng);
    double total = 0.0;
    int step = 0;
    for (std::size_t idx : order) {
      ++step;
      params.zero_grad();
      Tensor loss = step_loss(model, examples[idx], cfg.dropout ? &dropout_rng : nullptr);
      const double value = loss.item();
      if (!std::isfinite(value)) throw DivergenceError(epoch, step, "loss is " + std::to_string(value));
      backward(loss);
      optimizer.clip_gradients(cfg.clip_norm);
      optimizer.step(learning_rate_at(cfg, optimizer.steps(), total_steps));
      total += value;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = total / static_cast<double>(examples.size());
    const Scores dev = evaluate(model, dev_set, eval);
    rec.dev_uas = dev.uas;
    rec.dev_las = dev.las;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.report.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (dev.las > best_las) {
      best_las = dev.las;
      result.report.best_epoch = epoch;
      result.best = model.to_checkpoint();
      stale = 0;
    } else if (cfg.patience > 0 && ++stale >= cfg.patience) {
      break;
    }
  }

  load_entries(params, result.best.tensors);
  return result;
}

std::vector<AnnotatedSentence> parse_corpus(const ParserModel& model, const std::vector<AnnotatedSentence>& sentences) {
  std::vector<AnnotatedSentence> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) {
    const ParseResult parsed = model.parse(encode_sentence(s, model.vocab(), false));
    std::vector<int> heads(parsed.heads.begin() + 1, parsed.heads.end());
    std::vector<std::string> labels;
    labels.reserve(s.size());
    for (std::size_t i = 1; i < parsed.labels.size(); ++i) {
      const int l = parsed.labels[i];
      labels.push_back(l >= 0 ? model.vocab().deprel_name(l) : std::string("_"));
    }
    out.push_back(with_predicted_tree(s, heads, labels));
  }
  return out;
}

double teacher_forced_accuracy(const ParserModel& model, const std::vector<TrainingExample>& examples) {
  NoGradGuard guard;
  std::size_t steps = 0, correct = 0;
  for (const auto& ex : examples) {
    Episode ep = model.start(ex.sentence);
    for (const auto& gold : ex.oracle) {
      StepScores s = model.score(ex.sentence, ep);
      const auto legal = ep.state.legal_mask();
      int best = -1;
      for (std::size_t k = 0; k < kActionKinds; ++k) {
        if (legal[k] && (best < 0 || s.action_scores.data()[k] > s.action_scores.data()[static_cast<std::size_t>(best)])) {
          best = static_cast<int>(k);
        }
      }
      bool ok = static_cast<ActionKind>(best) == gold.kind;
      if (ok && gold.is_arc()) {
        Tensor labels = model.predict_label(s.z, s.assembled, gold.kind);
        auto d = labels.data();
        ok = std::max_element(d.begin(), d.end()) - d.begin() == gold.label;
      }
      ++steps;
      if (ok) ++correct;
      model.advance(ep, gold);
    }
  }
  return steps == 0 ? 0.0 : 100.0 * static_cast<double>(correct) / static_cast<double>(steps);
}

}  // namespace g2g

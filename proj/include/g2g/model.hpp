#pragma once

// Transition-based parsers built on the graph-conditioned encoder.
//
// State models encode the parser configuration itself:
//   [CLS, stack bottom..top, SEP, buffer front..back, (SEP, deleted...)]
// with segment ids 0/1/2 for the three parts. Sentence models encode
// [CLS, ROOT, w_1..w_n, SEP] and read the stack/buffer through pointers.
// Graph input feeds the partial tree through the attention relation codes and
// adds the label embedding of each attached token; graph output classifies
// actions from the embeddings of s2, s1 and b1 (or from CLS alone).

#include <array>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "g2g/checkpoint.hpp"
#include "g2g/encoder.hpp"
#include "g2g/transition.hpp"
#include "g2g/treebank.hpp"

namespace g2g {

enum class ModelBase { State, Sentence };
enum class GraphOutput { TokenPair, Cls };

struct ModelVariant {
  ModelBase base = ModelBase::Sentence;
  bool graph_input = true;
  GraphOutput graph_output = GraphOutput::TokenPair;
  bool composition = false;
  bool history = false;

  // state-tr, state-tr-g2g, state-tr-g2g-c, state-cls-tr, state-tr-g2cls, sent-tr, sent-tr-g2g
  static ModelVariant from_name(const std::string& name);
  static const std::vector<std::string>& names();
  // Canonical name when the flags match a named variant, otherwise a flag string.
  std::string name() const;
  // Throws std::invalid_argument for contradictory flag sets.
  void validate() const;
  friend bool operator==(const ModelVariant&, const ModelVariant&) = default;
};

struct ModelConfig {
  ModelVariant variant;
  EncoderConfig encoder;
  std::size_t exist_hidden = 64;
  std::size_t relation_hidden = 32;
  std::uint64_t seed = 1;

  // Encoder settings implied by the variant (graph input, segment count).
  EncoderConfig resolved_encoder() const;
};

// Word and PoS ids of one sentence, with its gold tree when labels are known.
struct EncodedSentence {
  std::vector<int> forms;  // index 0 = ROOT symbol
  std::vector<int> upos;
  std::optional<GoldTree> gold;
  int size() const { return static_cast<int>(forms.size()) - 1; }
};

EncodedSentence encode_sentence(const AnnotatedSentence& sentence, const Vocabulary& vocab, bool with_gold = true);

// Partial dependency graph over ROOT + words.
RelationMatrix sentence_graph(const ParserState& state);

// Encoder input for one parser state, plus pointers back to the state.
struct AssembledInput {
  InputAssembly input;
  RelationMatrix relations;
  std::vector<int> source;  // token index per position, -1 for CLS/SEP
  // Sequence positions of s2, s1, b1 (-1 when the slot is empty) and CLS.
  int s2 = -1, s1 = -1, b1 = -1;
  int cls = 0;
};

struct CompositionState {
  std::vector<Tensor> vectors;     // C per token (index 0 = ROOT)
  std::vector<Tensor> dependents;  // most recent dependent vector; undefined = none yet
  std::vector<int> labels;         // composition label row of that dependent; -1 = none yet
};

struct HistoryState {
  Tensor h, c;
};

struct Episode {
  ParserState state;
  RelationMatrix graph;
  CompositionState composition;
  HistoryState history;
  std::optional<Tensor> cached_z;  // sentence models without graph input encode once
  explicit Episode(int n) : state(n) {}
};

struct StepScores {
  AssembledInput assembled;
  Tensor z;              // encoder output
  Tensor action_scores;  // 1 x 4 in ActionKind order, unmasked
};

struct ParseResult {
  std::vector<int> heads;   // per token 1..n (index 0 unused)
  std::vector<int> labels;
  std::vector<Action> actions;
};

class ParserModel {
 public:
  ParserModel(const ModelConfig& config, const Vocabulary& vocab);
  // Parameters are tensor handles; a copy would alias them.
  ParserModel(const ParserModel&) = delete;
  ParserModel& operator=(const ParserModel&) = delete;
  ParserModel(ParserModel&&) = default;

  const ModelConfig& config() const { return config_; }
  const ModelVariant& variant() const { return config_.variant; }
  const Vocabulary& vocab() const { return vocab_; }
  ParameterStore& parameters() { return params_; }
  const ParameterStore& parameters() const { return params_; }
  const Encoder& encoder() const { return encoder_; }
  std::size_t label_count() const { return labels_; }

  // Sentence models without graph input encode the sentence here, once.
  Episode start(const EncodedSentence& sentence, std::mt19937_64* rng = nullptr) const;
  AssembledInput assemble_input(const EncodedSentence& sentence, const Episode& episode) const;

  // Raw action scores; legality masking is the caller's job.
  StepScores score(const EncodedSentence& sentence, const Episode& episode, std::mt19937_64* rng = nullptr) const;
  Tensor predict_action(const Tensor& z, const AssembledInput& assembled, const HistoryState* history,
                        std::mt19937_64* rng = nullptr) const;
  // Scores over labels for the given arc direction.
  Tensor predict_label(const Tensor& z, const AssembledInput& assembled, ActionKind direction,
                       std::mt19937_64* rng = nullptr) const;

  CompositionState initial_composition(const EncodedSentence& sentence) const;
  CompositionState compose_step(const CompositionState& comp, const Action& action,
                                const ParserState& before) const;
  HistoryState initial_history() const;
  HistoryState history_step(const HistoryState& hist, const Action& action) const;
  // One LSTM cell update on an explicit input row.
  HistoryState lstm_cell(const HistoryState& hist, const Tensor& input) const;

  // Applies `action` and updates graph, composition and history.
  void advance(Episode& episode, const Action& action) const;
  // Greedy argmax step with illegal kinds masked out.
  Action parse_step(const EncodedSentence& sentence, Episode& episode) const;
  ParseResult parse(const EncodedSentence& sentence) const;

  // Teacher-forced loss: action cross-entropy over legal kinds plus label
  // cross-entropy on arc steps.
  Tensor loss(const EncodedSentence& sentence, const std::vector<Action>& oracle,
              std::mt19937_64* rng = nullptr) const;

  Checkpoint to_checkpoint() const;
  static ParserModel from_checkpoint(const Checkpoint& checkpoint,
                                     const std::optional<ModelVariant>& expected = std::nullopt);
  void save(const std::string& path) const;
  static ParserModel load(const std::string& path, const std::optional<ModelVariant>& expected = std::nullopt);

  // Composition label rows: direction-specific labels then the stack/buffer nulls.
  int composition_label(ActionKind direction, int label) const;
  int composition_null_label(bool on_stack) const;

 private:
  Tensor mlp(const std::string& prefix, const Tensor& input, std::mt19937_64* rng) const;
  Tensor slot_output(const Tensor& z, int position) const;

  ModelConfig config_;
  Vocabulary vocab_;
  std::size_t labels_;
  ParameterStore params_;
  Initializer init_;
  Encoder encoder_;
};

std::vector<std::pair<std::string, std::string>> manifest_for(const ModelConfig& config);
ModelConfig config_from_manifest(const Checkpoint& checkpoint);

}  // namespace g2g

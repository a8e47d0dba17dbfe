#include "g2g/model.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <limits>

namespace g2g {

namespace {

struct NamedVariant {
  const char* name;
  ModelVariant variant;
};

const std::vector<NamedVariant>& named_variants() {
  using B = ModelBase;
  using O = GraphOutput;
  static const std::vector<NamedVariant> table{
      {"state-tr", {B::State, false, O::TokenPair, true, true}},
      {"state-tr-g2g", {B::State, true, O::TokenPair, false, true}},
      {"state-tr-g2g-c", {B::State, true, O::TokenPair, true, true}},
      {"state-cls-tr", {B::State, false, O::Cls, true, true}},
      {"state-tr-g2cls", {B::State, true, O::Cls, false, true}},
      {"sent-tr", {B::Sentence, false, O::TokenPair, false, false}},
      {"sent-tr-g2g", {B::Sentence, true, O::TokenPair, false, false}},
  };
  return table;
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

std::string double_str(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

ModelVariant ModelVariant::from_name(const std::string& name) {
  for (const auto& nv : named_variants()) {
    if (name == nv.name) return nv.variant;
  }
  throw std::invalid_argument("unknown variant '" + name + "'");
}

const std::vector<std::string>& ModelVariant::names() {
  static const std::vector<std::string> out = [] {
    std::vector<std::string> v;
    for (const auto& nv : named_variants()) v.emplace_back(nv.name);
    return v;
  }();
  return out;
}

std::string ModelVariant::name() const {
  for (const auto& nv : named_variants()) {
    if (nv.variant == *this) return nv.name;
  }
  return std::string(base == ModelBase::State ? "state" : "sentence") + (graph_input ? "+graph" : "") +
         (graph_output == GraphOutput::Cls ? "+cls" : "") + (composition ? "+comp" : "") + (history ? "+hist" : "");
}

void ModelVariant::validate() const {
  if (base == ModelBase::Sentence && composition) {
    throw std::invalid_argument("sentence models have no composition model");
  }
  if (base == ModelBase::Sentence && history) {
    throw std::invalid_argument("sentence models have no history model");
  }
}

EncoderConfig ModelConfig::resolved_encoder() const {
  EncoderConfig e = encoder;
  e.graph_input = variant.graph_input;
  e.segment_count = variant.base == ModelBase::Sentence ? 0 : (variant.graph_input ? 3 : 2);
  return e;
}

EncodedSentence encode_sentence(const AnnotatedSentence& sentence, const Vocabulary& vocab, bool with_gold) {
  EncodedSentence out;
  out.forms.push_back(Vocabulary::kRoot);
  out.upos.push_back(Vocabulary::kRoot);
  for (const auto& t : sentence.tokens) {
    out.forms.push_back(vocab.form_id(t.form));
    out.upos.push_back(vocab.upos_id(t.upos));
  }
  if (with_gold) out.gold = gold_tree(sentence, vocab);
  return out;
}

RelationMatrix sentence_graph(const ParserState& state) {
  auto g = RelationMatrix::empty(static_cast<std::size_t>(state.sentence_length() + 1));
  for (const auto& arc : state.arcs()) {
    g.set_arc(static_cast<std::size_t>(arc.head), static_cast<std::size_t>(arc.dependent), arc.label);
  }
  return g;
}

// ---------------------------------------------------------------------------

ParserModel::ParserModel(const ModelConfig& config, const Vocabulary& vocab)
    : config_(config),
      vocab_(vocab),
      labels_(vocab.deprel_count()),
      init_(config.seed),
      encoder_(params_, (config.variant.validate(), config.resolved_encoder()),
               EmbeddingSizes{vocab.form_count(), vocab.upos_count(), vocab.deprel_count()}, init_) {
  config_.encoder = config_.resolved_encoder();
  if (labels_ == 0) throw std::invalid_argument("vocabulary has no dependency labels");
  const std::size_t m = config_.encoder.model_dim;
  const auto& v = config_.variant;

  if (v.composition) {
    params_.add("comp.w1", init_.xavier(3 * m, m));
    params_.add("comp.b1", init_.zeros(1, m));
    params_.add("comp.w2", init_.xavier(m, m));
    params_.add("comp.b2", init_.zeros(1, m));
    params_.add("comp.null_dependent", init_.uniform(1, m, 0.1));
    params_.add("comp.label", init_.uniform(2 * labels_ + 2, m, 0.1));
  }
  if (v.history) {
    params_.add("history.action", init_.uniform(kActionKinds, m, 0.1));
    params_.add("history.label", init_.uniform(labels_ + 1, m, 0.1));
    params_.add("history.wx", init_.xavier(m, 4 * m));
    params_.add("history.wh", init_.xavier(m, 4 * m));
    params_.add("history.b", init_.zeros(1, 4 * m));
  }
  const bool pair = v.graph_output == GraphOutput::TokenPair;
  const std::size_t exist_in = (pair ? 3 * m : m) + (v.history ? m : 0);
  const std::size_t relation_in = pair ? 2 * m : m;
  params_.add("exist.w1", init_.xavier(exist_in, config_.exist_hidden));
  params_.add("exist.b1", init_.zeros(1, config_.exist_hidden));
  params_.add("exist.w2", init_.xavier(config_.exist_hidden, kActionKinds));
  params_.add("exist.b2", init_.zeros(1, kActionKinds));
  params_.add("relation.w1", init_.xavier(relation_in, config_.relation_hidden));
  params_.add("relation.b1", init_.zeros(1, config_.relation_hidden));
  params_.add("relation.w2", init_.xavier(config_.relation_hidden, 2 * labels_));
  params_.add("relation.b2", init_.zeros(1, 2 * labels_));
  if (pair) params_.add("output.pad", init_.uniform(1, m, 0.1));
}

int ParserModel::composition_label(ActionKind direction, int label) const {
  return (direction == ActionKind::LeftArc ? 0 : static_cast<int>(labels_)) + label;
}

int ParserModel::composition_null_label(bool on_stack) const {
  return static_cast<int>(2 * labels_) + (on_stack ? 0 : 1);
}

Episode ParserModel::start(const EncodedSentence& sentence, std::mt19937_64* rng) const {
  const int n = sentence.size();
  Episode ep(n);
  ep.graph = RelationMatrix::empty(static_cast<std::size_t>(n + 1));
  if (variant().composition) ep.composition = initial_composition(sentence);
  if (variant().history) ep.history = initial_history();
  if (variant().base == ModelBase::Sentence && !variant().graph_input) {
    ep.cached_z = encoder_.encode(assemble_input(sentence, ep).input, RelationMatrix::empty(0), rng);
  }
  return ep;
}

AssembledInput ParserModel::assemble_input(const EncodedSentence& sentence, const Episode& episode) const {
  AssembledInput a;
  const auto& state = episode.state;
  const bool graph = variant().graph_input;
  auto& in = a.input;

  auto push = [&](int source, int form, int upos, int segment) {
    a.source.push_back(source);
    in.token_ids.push_back(form);
    in.pos_ids.push_back(upos);
    in.position_ids.push_back(static_cast<int>(in.position_ids.size()));
    if (variant().base == ModelBase::State) in.segment_ids.push_back(segment);
    in.dep_label_ids.push_back(graph && source >= 0 ? episode.graph.dep_label[static_cast<std::size_t>(source)] : -1);
  };
  auto push_token = [&](int t, int segment) {
    push(t, sentence.forms[static_cast<std::size_t>(t)], sentence.upos[static_cast<std::size_t>(t)], segment);
  };

  if (variant().base == ModelBase::State) {
    push(-1, Vocabulary::kCls, Vocabulary::kCls, 0);
    for (int t : state.stack()) push_token(t, 0);
    push(-1, Vocabulary::kSep, Vocabulary::kSep, 1);
    for (int t : state.buffer()) push_token(t, 1);
    if (graph) {
      push(-1, Vocabulary::kSep, Vocabulary::kSep, 2);
      for (int t : state.deleted()) push_token(t, 2);
    }
    const int stack_size = static_cast<int>(state.stack().size());
    a.s1 = stack_size;
    a.s2 = stack_size >= 2 ? stack_size - 1 : -1;
    a.b1 = state.buffer().empty() ? -1 : stack_size + 2;
  } else {
    push(-1, Vocabulary::kCls, Vocabulary::kCls, 0);
    for (int t = 0; t <= sentence.size(); ++t) push_token(t, 0);
    push(-1, Vocabulary::kSep, Vocabulary::kSep, 0);
    a.s1 = state.s(1) >= 0 ? state.s(1) + 1 : -1;
    a.s2 = state.s(2) >= 0 ? state.s(2) + 1 : -1;
    a.b1 = state.b(1) >= 0 ? state.b(1) + 1 : -1;
  }

  const std::size_t len = a.source.size();
  if (graph) {
    a.relations = RelationMatrix::empty(len);
    const std::size_t g = episode.graph.n;
    for (std::size_t p = 0; p < len; ++p) {
      if (a.source[p] < 0) continue;
      const auto sp = static_cast<std::size_t>(a.source[p]);
      a.relations.dep_label[p] = episode.graph.dep_label[sp];
      for (std::size_t q = 0; q < len; ++q) {
        if (a.source[q] < 0) continue;
        a.relations.codes[p * len + q] = episode.graph.codes[sp * g + static_cast<std::size_t>(a.source[q])];
      }
    }
  } else {
    a.relations = RelationMatrix::empty(len);
  }

  if (variant().composition) {
    std::vector<Tensor> rows;
    rows.reserve(len);
    for (std::size_t p = 0; p < len; ++p) {
      if (a.source[p] >= 0) {
        rows.push_back(episode.composition.vectors[static_cast<std::size_t>(a.source[p])]);
      } else {
        const int id = in.token_ids[p];
        rows.push_back(encoder_.embeddings().token_embedding(std::span<const int>(&id, 1),
                                                             std::span<const int>(&in.pos_ids[p], 1)));
      }
    }
    in.composition = concat_rows(rows);
  }
  return a;
}

Tensor ParserModel::mlp(const std::string& prefix, const Tensor& input, std::mt19937_64* rng) const {
  Tensor h = relu(add_row(matmul(input, params_.get(prefix + ".w1")), params_.get(prefix + ".b1")));
  const double p = config_.encoder.dropout;
  if (rng && p > 0.0) h = dropout(h, p, *rng);
  return add_row(matmul(h, params_.get(prefix + ".w2")), params_.get(prefix + ".b2"));
}

Tensor ParserModel::slot_output(const Tensor& z, int position) const {
  if (position < 0) return params_.get("output.pad");
  const auto p = static_cast<std::size_t>(position);
  return select_rows(z, std::span<const std::size_t>(&p, 1));
}

Tensor ParserModel::predict_action(const Tensor& z, const AssembledInput& assembled, const HistoryState* history,
                                   std::mt19937_64* rng) const {
  std::vector<Tensor> parts;
  if (variant().graph_output == GraphOutput::TokenPair) {
    parts = {slot_output(z, assembled.s2), slot_output(z, assembled.s1), slot_output(z, assembled.b1)};
  } else {
    const auto p = static_cast<std::size_t>(assembled.cls);
    parts = {select_rows(z, std::span<const std::size_t>(&p, 1))};
  }
  if (variant().history) {
    if (history == nullptr || !history->h.defined()) throw std::invalid_argument("history state required");
    parts.push_back(history->h);
  }
  return mlp("exist", concat_cols(parts), rng);
}

Tensor ParserModel::predict_label(const Tensor& z, const AssembledInput& assembled, ActionKind direction,
                                  std::mt19937_64* rng) const {
  if (direction != ActionKind::LeftArc && direction != ActionKind::RightArc) {
    throw std::invalid_argument("predict_label needs an arc direction");
  }
  Tensor features;
  if (variant().graph_output == GraphOutput::TokenPair) {
    std::vector<Tensor> parts{slot_output(z, assembled.s2), slot_output(z, assembled.s1)};
    features = concat_cols(parts);
  } else {
    const auto p = static_cast<std::size_t>(assembled.cls);
    features = select_rows(z, std::span<const std::size_t>(&p, 1));
  }
  Tensor all = mlp("relation", features, rng);
  const std::size_t block = direction == ActionKind::LeftArc ? 0 : 1;
  return slice_cols(all, block * labels_, (block + 1) * labels_);
}

StepScores ParserModel::score(const EncodedSentence& sentence, const Episode& episode, std::mt19937_64* rng) const {
  StepScores out;
  out.assembled = assemble_input(sentence, episode);
  if (episode.cached_z) {
    out.z = *episode.cached_z;
  } else {
    out.z = encoder_.encode(out.assembled.input, out.assembled.relations, rng);
  }
  out.action_scores = predict_action(out.z, out.assembled, variant().history ? &episode.history : nullptr, rng);
  return out;
}

// ---------------------------------------------------------------------------
// Composition and history

CompositionState ParserModel::initial_composition(const EncodedSentence& sentence) const {
  const std::size_t count = sentence.forms.size();
  Tensor initial = encoder_.embeddings().token_embedding(sentence.forms, sentence.upos);
  CompositionState comp;
  comp.vectors.reserve(count);
  for (std::size_t t = 0; t < count; ++t) comp.vectors.push_back(select_rows(initial, std::span<const std::size_t>(&t, 1)));
  comp.dependents.resize(count);
  comp.labels.assign(count, -1);
  return comp;
}

CompositionState ParserModel::compose_step(const CompositionState& comp, const Action& action,
                                           const ParserState& before) const {
  CompositionState next = comp;
  if (action.is_arc()) {
    const bool left = action.kind == ActionKind::LeftArc;
    const int head = left ? before.s(1) : before.s(2);
    const int dep = left ? before.s(2) : before.s(1);
    next.dependents[static_cast<std::size_t>(head)] = comp.vectors[static_cast<std::size_t>(dep)];
    next.labels[static_cast<std::size_t>(head)] = composition_label(action.kind, action.label);
  }
  const ParserState after = before.applied(action);
  std::vector<int> tokens;
  std::vector<bool> on_stack;
  for (int t : after.stack()) {
    tokens.push_back(t);
    on_stack.push_back(true);
  }
  for (int t : after.buffer()) {
    tokens.push_back(t);
    on_stack.push_back(false);
  }
  if (tokens.empty()) return next;

  const Tensor& null_dep = params_.get("comp.null_dependent");
  std::vector<Tensor> psi, omega;
  std::vector<int> label_ids;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto t = static_cast<std::size_t>(tokens[i]);
    psi.push_back(comp.vectors[t]);
    omega.push_back(next.dependents[t].defined() ? next.dependents[t] : null_dep);
    label_ids.push_back(next.labels[t] >= 0 ? next.labels[t] : composition_null_label(on_stack[i]));
  }
  Tensor psi_rows = concat_rows(psi);
  std::vector<Tensor> parts{psi_rows, concat_rows(omega), embedding(params_.get("comp.label"), label_ids)};
  Tensor hidden = tanh(add_row(matmul(concat_cols(parts), params_.get("comp.w1")), params_.get("comp.b1")));
  Tensor composed = add(add_row(matmul(hidden, params_.get("comp.w2")), params_.get("comp.b2")), psi_rows);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    next.vectors[static_cast<std::size_t>(tokens[i])] = select_rows(composed, std::span<const std::size_t>(&i, 1));
  }
  return next;
}

HistoryState ParserModel::initial_history() const {
  const std::size_t m = config_.encoder.model_dim;
  return {Tensor::zeros(1, m), Tensor::zeros(1, m)};
}

HistoryState ParserModel::lstm_cell(const HistoryState& hist, const Tensor& input) const {
  const std::size_t m = config_.encoder.model_dim;
  Tensor gates = add_row(add(matmul(input, params_.get("history.wx")), matmul(hist.h, params_.get("history.wh"))),
                         params_.get("history.b"));
  Tensor in_gate = sigmoid(slice_cols(gates, 0, m));
  Tensor forget = sigmoid(slice_cols(gates, m, 2 * m));
  Tensor candidate = tanh(slice_cols(gates, 2 * m, 3 * m));
  Tensor out_gate = sigmoid(slice_cols(gates, 3 * m, 4 * m));
  Tensor c = add(mul(forget, hist.c), mul(in_gate, candidate));
  return {mul(out_gate, tanh(c)), c};
}

HistoryState ParserModel::history_step(const HistoryState& hist, const Action& action) const {
  const int kind = static_cast<int>(action.kind);
  const int label = action.is_arc() ? action.label : static_cast<int>(labels_);
  Tensor x = add(embedding(params_.get("history.action"), std::span<const int>(&kind, 1)),
                 embedding(params_.get("history.label"), std::span<const int>(&label, 1)));
  return lstm_cell(hist, x);
}

// ---------------------------------------------------------------------------
// Decoding

void ParserModel::advance(Episode& episode, const Action& action) const {
  if (!episode.state.is_legal(action.kind)) {
    episode.state.apply(action);  // throws with the reason
  }
  if (variant().composition) episode.composition = compose_step(episode.composition, action, episode.state);
  if (variant().history) episode.history = history_step(episode.history, action);
  if (action.is_arc()) {
    const bool left = action.kind == ActionKind::LeftArc;
    const int head = left ? episode.state.s(1) : episode.state.s(2);
    const int dep = left ? episode.state.s(2) : episode.state.s(1);
    episode.graph.set_arc(static_cast<std::size_t>(head), static_cast<std::size_t>(dep), action.label);
  }
  episode.state.apply(action);
}

Action ParserModel::parse_step(const EncodedSentence& sentence, Episode& episode) const {
  StepScores s = score(sentence, episode);
  const auto legal = episode.state.legal_mask();
  int best = -1;
  for (std::size_t k = 0; k < kActionKinds; ++k) {
    if (!legal[k]) continue;
    if (best < 0 || s.action_scores.data()[k] > s.action_scores.data()[static_cast<std::size_t>(best)]) {
      best = static_cast<int>(k);
    }
  }
  Action action{static_cast<ActionKind>(best), -1};
  if (action.is_arc()) {
    Tensor labels = predict_label(s.z, s.assembled, action.kind);
    auto d = labels.data();
    action.label = static_cast<int>(std::max_element(d.begin(), d.end()) - d.begin());
  }
  advance(episode, action);
  return action;
}

ParseResult ParserModel::parse(const EncodedSentence& sentence) const {
  NoGradGuard guard;
  Episode ep = start(sentence);
  ParseResult result;
  const int n = sentence.size();
  const int limit = n * (n + 1) + 1;
  while (!ep.state.is_terminal()) {
    if (static_cast<int>(result.actions.size()) > limit) throw std::logic_error("parse exceeded step bound");
    result.actions.push_back(parse_step(sentence, ep));
  }
  result.heads.assign(static_cast<std::size_t>(n + 1), -1);
  result.labels.assign(static_cast<std::size_t>(n + 1), -1);
  for (int t = 1; t <= n; ++t) {
    result.heads[static_cast<std::size_t>(t)] = ep.state.head_of(t);
    result.labels[static_cast<std::size_t>(t)] = ep.state.label_of(t);
  }
  return result;
}

Tensor ParserModel::loss(const EncodedSentence& sentence, const std::vector<Action>& oracle,
                         std::mt19937_64* rng) const {
  Episode ep = start(sentence, rng);
  std::vector<Tensor> terms;
  for (const auto& action : oracle) {
    StepScores s = score(sentence, ep, rng);
    const auto legal = ep.state.legal_mask();
    std::array<std::uint8_t, kActionKinds> mask{};
    for (std::size_t k = 0; k < kActionKinds; ++k) mask[k] = legal[k] ? 1 : 0;
    terms.push_back(cross_entropy(s.action_scores, static_cast<std::size_t>(action.kind), mask));
    if (action.is_arc()) {
      terms.push_back(cross_entropy(predict_label(s.z, s.assembled, action.kind, rng),
                                    static_cast<std::size_t>(action.label)));
    }
    advance(ep, action);
  }
  if (!ep.state.is_terminal()) throw std::invalid_argument("oracle sequence does not reach a terminal state");
  if (terms.empty()) return Tensor::scalar(0.0);
  return sum(concat_cols(terms));
}

// ---------------------------------------------------------------------------
// Checkpoints

std::vector<std::pair<std::string, std::string>> manifest_for(const ModelConfig& config) {
  const auto& v = config.variant;
  const EncoderConfig e = config.resolved_encoder();
  std::vector<std::pair<std::string, std::string>> m{
      {"format", "g2g-parser-1"},
      {"variant", v.name()},
      {"variant.base", v.base == ModelBase::State ? "state" : "sentence"},
      {"variant.graph_input", bool_str(v.graph_input)},
      {"variant.graph_output", v.graph_output == GraphOutput::TokenPair ? "token_pair" : "cls"},
      {"variant.composition", bool_str(v.composition)},
      {"variant.history", bool_str(v.history)},
      {"encoder.layers", std::to_string(e.layers)},
      {"encoder.heads", std::to_string(e.heads)},
      {"encoder.model_dim", std::to_string(e.model_dim)},
      {"encoder.ff_dim", std::to_string(e.ff_dim)},
      {"encoder.max_positions", std::to_string(e.max_positions)},
      {"encoder.dropout", double_str(e.dropout)},
      {"encoder.layer_norm_eps", double_str(e.layer_norm_eps)},
      {"classifier.exist_hidden", std::to_string(config.exist_hidden)},
      {"classifier.relation_hidden", std::to_string(config.relation_hidden)},
      {"seed", std::to_string(config.seed)},
  };
  std::string canonical;
  for (const auto& [k, val] : m) canonical += k + "=" + val + "\n";
  char hash[17];
  std::snprintf(hash, sizeof(hash), "%016llx", static_cast<unsigned long long>(fnv1a64(canonical)));
  m.emplace_back("config_hash", hash);
  return m;
}

namespace {

const std::string& need(const Checkpoint& c, const std::string& key) {
  const std::string* v = c.manifest_value(key);
  if (v == nullptr) throw CheckpointError("checkpoint manifest lacks '" + key + "'");
  return *v;
}

bool parse_bool(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw CheckpointError("bad boolean '" + s + "' in manifest");
}

std::size_t parse_size(const std::string& s) { return static_cast<std::size_t>(std::stoull(s)); }

}  // namespace

ModelConfig config_from_manifest(const Checkpoint& c) {
  if (need(c, "format") != "g2g-parser-1") throw CheckpointError("unsupported checkpoint format");
  ModelConfig cfg;
  cfg.variant.base = need(c, "variant.base") == "state" ? ModelBase::State : ModelBase::Sentence;
  cfg.variant.graph_input = parse_bool(need(c, "variant.graph_input"));
  cfg.variant.graph_output = need(c, "variant.graph_output") == "cls" ? GraphOutput::Cls : GraphOutput::TokenPair;
  cfg.variant.composition = parse_bool(need(c, "variant.composition"));
  cfg.variant.history = parse_bool(need(c, "variant.history"));
  cfg.encoder.layers = parse_size(need(c, "encoder.layers"));
  cfg.encoder.heads = parse_size(need(c, "encoder.heads"));
  cfg.encoder.model_dim = parse_size(need(c, "encoder.model_dim"));
  cfg.encoder.ff_dim = parse_size(need(c, "encoder.ff_dim"));
  cfg.encoder.max_positions = parse_size(need(c, "encoder.max_positions"));
  cfg.encoder.dropout = std::stod(need(c, "encoder.dropout"));
  cfg.encoder.layer_norm_eps = std::stod(need(c, "encoder.layer_norm_eps"));
  cfg.exist_hidden = parse_size(need(c, "classifier.exist_hidden"));
  cfg.relation_hidden = parse_size(need(c, "classifier.relation_hidden"));
  cfg.seed = std::stoull(need(c, "seed"));
  const auto expected = manifest_for(cfg);
  if (expected.back().second != need(c, "config_hash")) throw CheckpointError("checkpoint config hash mismatch");
  return cfg;
}

Checkpoint ParserModel::to_checkpoint() const {
  Checkpoint c;
  c.manifest = manifest_for(config_);
  std::string names;
  for (const auto& n : params_.names()) names += (names.empty() ? "" : ",") + n;
  c.manifest.emplace_back("tensors", names);
  c.blobs.emplace_back("vocabulary", vocab_.serialize());
  c.tensors = to_entries(params_);
  return c;
}

ParserModel ParserModel::from_checkpoint(const Checkpoint& checkpoint, const std::optional<ModelVariant>& expected) {
  ModelConfig cfg = config_from_manifest(checkpoint);
  if (expected && !(*expected == cfg.variant)) {
    throw CheckpointError("checkpoint variant " + cfg.variant.name() + " does not match requested " +
                             expected->name());
  }
  const std::string* vocab = checkpoint.blob("vocabulary");
  if (vocab == nullptr) throw CheckpointError("checkpoint lacks a vocabulary");
  ParserModel model(cfg, Vocabulary::deserialize(*vocab));
  load_entries(model.params_, checkpoint.tensors);
  return model;
}

void ParserModel::save(const std::string& path) const { save_checkpoint(to_checkpoint(), path); }

ParserModel ParserModel::load(const std::string& path, const std::optional<ModelVariant>& expected) {
  return from_checkpoint(load_checkpoint(path), expected);
}

}  // namespace g2g

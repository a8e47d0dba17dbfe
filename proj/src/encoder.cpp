#include "g2g/encoder.hpp"

#include <cmath>

namespace g2g {

RelationMatrix RelationMatrix::empty(std::size_t n) {
  RelationMatrix r;
  r.n = n;
  r.codes.assign(n * n, static_cast<std::uint8_t>(Relation::None));
  r.dep_label.assign(n, -1);
  return r;
}

void RelationMatrix::set_arc(std::size_t head, std::size_t dependent, int label) {
  if (head >= n || dependent >= n || head == dependent) throw std::out_of_range("set_arc: bad positions");
  codes[head * n + dependent] = static_cast<std::uint8_t>(Relation::HeadOf);
  codes[dependent * n + head] = static_cast<std::uint8_t>(Relation::DependentOf);
  dep_label[dependent] = label;
}

bool RelationMatrix::consistent() const {
  if (codes.size() != n * n || dep_label.size() != n) return false;
  for (std::size_t i = 0; i < n; ++i) {
    if (at(i, i) != Relation::None) return false;
    bool has_head = false;
    for (std::size_t j = 0; j < n; ++j) {
      if ((at(i, j) == Relation::HeadOf) != (at(j, i) == Relation::DependentOf)) return false;
      if (codes[i * n + j] >= kRelationKinds) return false;
      has_head = has_head || at(j, i) == Relation::HeadOf;
    }
    if (has_head != (dep_label[i] >= 0)) return false;
  }
  return true;
}

void EncoderConfig::validate() const {
  if (heads == 0 || model_dim % heads != 0) {
    throw std::invalid_argument("model_dim " + std::to_string(model_dim) + " is not divisible by heads " +
                                std::to_string(heads));
  }
  if (max_positions == 0) throw std::invalid_argument("max_positions must be positive");
  if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("dropout must be in [0, 1)");
}

Tensor Initializer::xavier(std::size_t rows, std::size_t cols) {
  return uniform(rows, cols, std::sqrt(6.0 / static_cast<double>(rows + cols)));
}

Tensor Initializer::uniform(std::size_t rows, std::size_t cols, double bound) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t = Tensor::zeros(rows, cols);
  for (auto& v : t.data()) v = dist(rng_);
  return t;
}

// ---------------------------------------------------------------------------

Embeddings::Embeddings(ParameterStore& store, const EncoderConfig& config, const EmbeddingSizes& sizes,
                       Initializer& init)
    : config_(config) {
  const std::size_t m = config.model_dim;
  word_ = store.add("embed.word", init.uniform(sizes.words, m, 0.1));
  upos_ = store.add("embed.upos", init.uniform(sizes.upos, m, 0.1));
  position_ = store.add("embed.position", init.uniform(config.max_positions, m, 0.1));
  if (config.segment_count > 0) segment_ = store.add("embed.segment", init.uniform(config.segment_count, m, 0.1));
  if (config.graph_input) label_ = store.add("embed.dep_label", init.uniform(sizes.labels, m, 0.1));
}

Tensor Embeddings::token_embedding(std::span<const int> token_ids, std::span<const int> pos_ids) const {
  return add(embedding(word_, token_ids), embedding(upos_, pos_ids));
}

Tensor Embeddings::embed(const InputAssembly& input) const {
  const std::size_t n = input.size();
  if (input.pos_ids.size() != n || input.position_ids.size() != n) {
    throw ShapeError("input assembly sequences differ in length");
  }
  if (n > config_.max_positions) {
    throw std::length_error("sequence of " + std::to_string(n) + " exceeds max_positions " +
                            std::to_string(config_.max_positions));
  }
  Tensor x;
  if (input.composition) {
    if (input.composition->rows() != n || input.composition->cols() != config_.model_dim) {
      throw ShapeError("composition input " + to_string(input.composition->shape()) + " for sequence of " +
                       std::to_string(n));
    }
    x = *input.composition;
  } else {
    x = token_embedding(input.token_ids, input.pos_ids);
  }
  x = add(x, embedding(position_, input.position_ids));
  if (segment_.defined()) {
    if (input.segment_ids.size() != n) throw ShapeError("segment ids missing");
    x = add(x, embedding(segment_, input.segment_ids));
  }
  if (label_.defined() && !input.dep_label_ids.empty()) {
    if (input.dep_label_ids.size() != n) throw ShapeError("dep label ids differ in length");
    x = add(x, embedding(label_, input.dep_label_ids));
  }
  return x;
}

// ---------------------------------------------------------------------------

GraphAttentionLayer::GraphAttentionLayer(ParameterStore& store, const std::string& prefix,
                                         const EncoderConfig& config, Initializer& init)
    : config_(config) {
  const std::size_t m = config.model_dim, d = config.head_dim(), ff = config.ff_dim;
  wq_ = store.add(prefix + "wq", init.xavier(m, m));
  wk_ = store.add(prefix + "wk", init.xavier(m, m));
  wv_ = store.add(prefix + "wv", init.xavier(m, m));
  wo_ = store.add(prefix + "wo", init.xavier(m, m));
  bo_ = store.add(prefix + "bo", init.zeros(1, m));
  if (config.graph_input) {
    graph_key_ = store.add(prefix + "graph_key", init.xavier(kRelationKinds, d));
    graph_value_ = store.add(prefix + "graph_value", init.xavier(kRelationKinds, d));
  }
  ln1_gain_ = store.add(prefix + "ln1_gain", init.ones(1, m));
  ln1_bias_ = store.add(prefix + "ln1_bias", init.zeros(1, m));
  ff_w1_ = store.add(prefix + "ff_w1", init.xavier(m, ff));
  ff_b1_ = store.add(prefix + "ff_b1", init.zeros(1, ff));
  ff_w2_ = store.add(prefix + "ff_w2", init.xavier(ff, m));
  ff_b2_ = store.add(prefix + "ff_b2", init.zeros(1, m));
  ln2_gain_ = store.add(prefix + "ln2_gain", init.ones(1, m));
  ln2_bias_ = store.add(prefix + "ln2_bias", init.zeros(1, m));
}

Tensor GraphAttentionLayer::head_slice(const Tensor& projected, std::size_t head) const {
  if (head >= config_.heads) throw std::out_of_range("head " + std::to_string(head));
  const std::size_t d = config_.head_dim();
  return slice_cols(projected, head * d, (head + 1) * d);
}

Tensor GraphAttentionLayer::scores_from(const Tensor& q, const Tensor& k, const RelationMatrix& relations) const {
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(config_.head_dim()));
  Tensor e = matmul(q, transpose(k));
  if (config_.graph_input) {
    if (relations.n != q.rows()) {
      throw ShapeError("relation matrix of size " + std::to_string(relations.n) + " for sequence of " +
                       std::to_string(q.rows()));
    }
    // q_i . (p_ij W^L_1) picks column codes[i][j] of q W^L_1^T.
    e = add(e, relation_gather(matmul(q, transpose(graph_key_)), relations.codes));
  }
  return scale(e, inv_sqrt_d);
}

Tensor GraphAttentionLayer::values_from(const Tensor& alpha, const Tensor& v, const RelationMatrix& relations) const {
  Tensor z = matmul(alpha, v);
  if (config_.graph_input) {
    if (relations.n != alpha.rows()) throw ShapeError("relation matrix does not match attention weights");
    // sum_j alpha_ij p_ij W^L_2 = (per-code attention mass) W^L_2.
    z = add(z, matmul(relation_scatter(alpha, relations.codes, kRelationKinds), graph_value_));
  }
  return z;
}

Tensor GraphAttentionLayer::attention_scores(const Tensor& x, const RelationMatrix& relations,
                                             std::size_t head) const {
  return scores_from(head_slice(matmul(x, wq_), head), head_slice(matmul(x, wk_), head), relations);
}

Tensor GraphAttentionLayer::attention_values(const Tensor& alpha, const Tensor& x, const RelationMatrix& relations,
                                             std::size_t head) const {
  if (alpha.rows() != x.rows() || alpha.cols() != x.rows()) {
    throw ShapeError("attention weights " + to_string(alpha.shape()) + " for input " + to_string(x.shape()));
  }
  return values_from(alpha, head_slice(matmul(x, wv_), head), relations);
}

namespace {

std::vector<std::uint8_t> expand_key_mask(std::span<const std::uint8_t> key_mask, std::size_t n) {
  if (key_mask.empty()) return {};
  if (key_mask.size() != n) throw ShapeError("attention mask length mismatch");
  std::vector<std::uint8_t> full(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) full[i * n + j] = key_mask[j];
  return full;
}

}  // namespace

Tensor GraphAttentionLayer::attention_weights(const Tensor& x, const RelationMatrix& relations, std::size_t head,
                                              std::span<const std::uint8_t> key_mask) const {
  return softmax_rows(attention_scores(x, relations, head), expand_key_mask(key_mask, x.rows()));
}

Tensor GraphAttentionLayer::forward(const Tensor& x, const RelationMatrix& relations,
                                    std::span<const std::uint8_t> key_mask, std::mt19937_64* rng) const {
  const auto mask = expand_key_mask(key_mask, x.rows());
  const double p = rng ? config_.dropout : 0.0;
  Tensor q = matmul(x, wq_), k = matmul(x, wk_), v = matmul(x, wv_);
  std::vector<Tensor> heads;
  heads.reserve(config_.heads);
  for (std::size_t h = 0; h < config_.heads; ++h) {
    Tensor alpha = softmax_rows(scores_from(head_slice(q, h), head_slice(k, h), relations), mask);
    heads.push_back(values_from(alpha, head_slice(v, h), relations));
  }
  Tensor attended = add_row(matmul(concat_cols(heads), wo_), bo_);
  if (p > 0.0) attended = dropout(attended, p, *rng);
  Tensor h1 = layer_norm(add(x, attended), ln1_gain_, ln1_bias_, config_.layer_norm_eps);
  Tensor ff = add_row(matmul(relu(add_row(matmul(h1, ff_w1_), ff_b1_)), ff_w2_), ff_b2_);
  if (p > 0.0) ff = dropout(ff, p, *rng);
  return layer_norm(add(h1, ff), ln2_gain_, ln2_bias_, config_.layer_norm_eps);
}

// ---------------------------------------------------------------------------

namespace {
EncoderConfig checked(EncoderConfig c) {
  c.validate();
  return c;
}
}  // namespace

Encoder::Encoder(ParameterStore& store, const EncoderConfig& config, const EmbeddingSizes& sizes, Initializer& init)
    : config_(checked(config)), embeddings_(store, config_, sizes, init) {
  for (std::size_t l = 0; l < config_.layers; ++l) {
    layers_.emplace_back(store, "encoder.layer" + std::to_string(l) + ".", config_, init);
  }
}

Tensor Encoder::run_layers(const Tensor& x, const RelationMatrix& relations, std::span<const std::uint8_t> key_mask,
                           std::mt19937_64* rng) const {
  Tensor h = x;
  for (const auto& layer : layers_) h = layer.forward(h, relations, key_mask, rng);
  return h;
}

Tensor Encoder::encode(const InputAssembly& input, const RelationMatrix& relations, std::mt19937_64* rng) const {
  Tensor x = embeddings_.embed(input);
  if (rng && config_.dropout > 0.0) x = dropout(x, config_.dropout, *rng);
  return run_layers(x, relations, input.attention_mask, rng);
}

}  // namespace g2g

#pragma once

// Transformer encoder whose self-attention conditions on a dependency graph.
//
// For every head, with q_i = x_i W^Q, k_j = x_j W^K, v_j = x_j W^V and p_ij the
// one-hot relation code between positions i and j:
//
//   e_ij = q_i . (k_j + p_ij W^L_1) / sqrt(d)
//   z_i  = sum_j alpha_ij (v_j + p_ij W^L_2),   alpha = softmax_j(e)
//
// W^L_1 and W^L_2 are k x d (k = 3 relation codes) and shared by the heads of a
// layer. With the graph terms removed this is the plain transformer layer.
// Sublayers are post-norm: LayerNorm(x + Attention(x)), LayerNorm(h + FF(h)).

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "g2g/checkpoint.hpp"
#include "g2g/tensor.hpp"

namespace g2g {

enum class Relation : std::uint8_t { None = 0, HeadOf = 1, DependentOf = 2 };
inline constexpr std::size_t kRelationKinds = 3;

// Pairwise relation codes over an input sequence plus the label of each
// attached token (-1 when the token has no head yet).
struct RelationMatrix {
  std::size_t n = 0;
  std::vector<std::uint8_t> codes;
  std::vector<int> dep_label;

  static RelationMatrix empty(std::size_t n);
  Relation at(std::size_t row, std::size_t col) const { return static_cast<Relation>(codes[row * n + col]); }
  // Row `head` is head of column `dependent`; the mirror entry is filled too.
  void set_arc(std::size_t head, std::size_t dependent, int label);
  // Mirror invariant, zero diagonal, and labels present exactly for dependents.
  bool consistent() const;
  friend bool operator==(const RelationMatrix&, const RelationMatrix&) = default;
};

struct EncoderConfig {
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t model_dim = 64;
  std::size_t ff_dim = 128;
  std::size_t max_positions = 256;
  std::size_t segment_count = 3;  // 0 disables segment embeddings
  double dropout = 0.05;
  bool graph_input = true;
  double layer_norm_eps = 1e-12;

  std::size_t head_dim() const { return model_dim / heads; }
  void validate() const;
};

struct InputAssembly {
  std::vector<int> token_ids;
  std::vector<int> pos_ids;
  std::vector<int> position_ids;
  std::vector<int> segment_ids;    // empty when segments are disabled
  std::vector<int> dep_label_ids;  // -1 = no label term
  std::optional<Tensor> composition;  // n x m, replaces word + PoS embeddings
  std::vector<std::uint8_t> attention_mask;  // per position, 1 = visible; empty = all visible

  std::size_t size() const { return token_ids.size(); }
};

struct EmbeddingSizes {
  std::size_t words = 0;
  std::size_t upos = 0;
  std::size_t labels = 0;
};

// Parameter initialisation shared by all components.
class Initializer {
 public:
  explicit Initializer(std::uint64_t seed) : rng_(seed) {}
  Tensor xavier(std::size_t rows, std::size_t cols);
  Tensor uniform(std::size_t rows, std::size_t cols, double bound);
  Tensor zeros(std::size_t rows, std::size_t cols) { return Tensor::zeros(rows, cols); }
  Tensor ones(std::size_t rows, std::size_t cols) { return Tensor::filled(rows, cols, 1.0); }

 private:
  std::mt19937_64 rng_;
};

class Embeddings {
 public:
  Embeddings(ParameterStore& store, const EncoderConfig& config, const EmbeddingSizes& sizes, Initializer& init);

  // x_i = (C_i or Emb(w_i) + Emb(pos_i)) + segment_i + position_i + label_i.
  Tensor embed(const InputAssembly& input) const;
  // Emb(w) + Emb(pos) for single tokens; used to seed composition vectors.
  Tensor token_embedding(std::span<const int> token_ids, std::span<const int> pos_ids) const;

  const Tensor& word_table() const { return word_; }
  const Tensor& upos_table() const { return upos_; }

 private:
  EncoderConfig config_;
  Tensor word_, upos_, position_, segment_, label_;
};

class GraphAttentionLayer {
 public:
  GraphAttentionLayer(ParameterStore& store, const std::string& prefix, const EncoderConfig& config,
                      Initializer& init);

  // Pre-softmax scores of one head, n x n.
  Tensor attention_scores(const Tensor& x, const RelationMatrix& relations, std::size_t head) const;
  // Head output for given attention weights, n x d.
  Tensor attention_values(const Tensor& alpha, const Tensor& x, const RelationMatrix& relations,
                          std::size_t head) const;
  // Attention weights of one head (softmax of the scores over visible keys).
  Tensor attention_weights(const Tensor& x, const RelationMatrix& relations, std::size_t head,
                           std::span<const std::uint8_t> key_mask = {}) const;

  Tensor forward(const Tensor& x, const RelationMatrix& relations, std::span<const std::uint8_t> key_mask,
                 std::mt19937_64* rng) const;

  const Tensor& graph_key() const { return graph_key_; }
  const Tensor& graph_value() const { return graph_value_; }

 private:
  Tensor scores_from(const Tensor& q, const Tensor& k, const RelationMatrix& relations) const;
  Tensor values_from(const Tensor& alpha, const Tensor& v, const RelationMatrix& relations) const;
  Tensor head_slice(const Tensor& projected, std::size_t head) const;

  EncoderConfig config_;
  Tensor wq_, wk_, wv_, wo_, bo_;
  Tensor graph_key_, graph_value_;  // undefined when graph input is off
  Tensor ln1_gain_, ln1_bias_, ff_w1_, ff_b1_, ff_w2_, ff_b2_, ln2_gain_, ln2_bias_;
};

class Encoder {
 public:
  Encoder(ParameterStore& store, const EncoderConfig& config, const EmbeddingSizes& sizes, Initializer& init);

  // Final-layer output embeddings, n x m. `rng` enables dropout when non-null.
  Tensor encode(const InputAssembly& input, const RelationMatrix& relations, std::mt19937_64* rng = nullptr) const;
  // Runs only the layer stack on already embedded inputs.
  Tensor run_layers(const Tensor& x, const RelationMatrix& relations, std::span<const std::uint8_t> key_mask,
                    std::mt19937_64* rng = nullptr) const;

  const EncoderConfig& config() const { return config_; }
  const Embeddings& embeddings() const { return embeddings_; }
  const std::vector<GraphAttentionLayer>& layers() const { return layers_; }

 private:
  EncoderConfig config_;
  Embeddings embeddings_;
  std::vector<GraphAttentionLayer> layers_;
};

}  // namespace g2g

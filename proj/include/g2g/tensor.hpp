#pragma once

// Dense row-major float64 matrices with reverse-mode differentiation.
//
// Every value is a 2-D matrix; vectors are 1 x n rows and scalars are 1 x 1.
// Operations record their parents and a backward closure whenever at least one
// input requires a gradient. `backward()` orders the reachable graph
// topologically and runs each closure exactly once in reverse order.

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace g2g {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using Shape = std::array<std::size_t, 2>;
std::string to_string(const Shape& shape);

namespace detail {
struct Node {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> value;
  std::vector<double> grad;  // empty until first needed
  bool requires_grad = false;
  bool is_leaf = true;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  Node() = default;
  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;
  // Releases long parent chains without recursing.
  ~Node();

  std::vector<double>& ensure_grad() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    return grad;
  }
};
}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::size_t rows, std::size_t cols, bool requires_grad = false);
  static Tensor filled(std::size_t rows, std::size_t cols, double v, bool requires_grad = false);
  static Tensor from(std::size_t rows, std::size_t cols, std::vector<double> data, bool requires_grad = false);
  static Tensor scalar(double v, bool requires_grad = false) { return from(1, 1, {v}, requires_grad); }

  bool defined() const { return node_ != nullptr; }
  std::size_t rows() const { return node_->rows; }
  std::size_t cols() const { return node_->cols; }
  Shape shape() const { return {node_->rows, node_->cols}; }
  std::size_t size() const { return node_->value.size(); }

  std::span<double> data() { return node_->value; }
  std::span<const double> data() const { return node_->value; }
  double at(std::size_t r, std::size_t c) const { return node_->value[r * node_->cols + c]; }
  double& at(std::size_t r, std::size_t c) { return node_->value[r * node_->cols + c]; }
  double item() const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  bool has_grad() const { return !node_->grad.empty(); }
  // Zero-filled view when no gradient has been accumulated yet.
  std::span<const double> grad() const;
  std::span<double> mutable_grad() { return node_->ensure_grad(); }
  void zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), 0.0); }

  // Same storage, no history.
  Tensor detach() const;
  // Deep copy of the values, no history.
  Tensor clone() const;

  bool same(const Tensor& other) const { return node_ == other.node_; }
  const std::shared_ptr<detail::Node>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<detail::Node> node_;
};

// While alive on the current thread, new operations record no history.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};
bool grad_enabled();

// Accumulates d(loss)/d(t) into every reachable tensor that requires a gradient.
// Intermediate gradients are reset on every call; leaf gradients accumulate.
void backward(const Tensor& loss);

// ---- operations -----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
// a (n x m) plus a 1 x m row added to every row.
Tensor add_row(const Tensor& a, const Tensor& row);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor sum(const Tensor& a);

// Row-wise softmax. `mask` (row-major, same size as x, 1 = keep) is optional;
// masked entries are exactly zero. A row with no kept column throws.
Tensor softmax_rows(const Tensor& x, std::span<const std::uint8_t> mask = {});
// -log softmax(logits)[target] over the kept columns of a single row.
Tensor cross_entropy(const Tensor& logits, std::size_t target, std::span<const std::uint8_t> mask = {});

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-12);

// Rows of `table` selected by `ids`; id -1 yields a zero row.
Tensor embedding(const Tensor& table, std::span<const int> ids);
// Rows of `x` selected by `indices` (repetition allowed).
Tensor select_rows(const Tensor& x, std::span<const std::size_t> indices);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor concat_cols(std::span<const Tensor> parts);

// out[i][j] = x[i][codes[i*n + j]] for x of shape n x k and codes of n x n.
Tensor relation_gather(const Tensor& x, std::span<const std::uint8_t> codes);
// out[i][c] = sum_j w[i][j] * [codes[i*n + j] == c] for w of shape n x n.
Tensor relation_scatter(const Tensor& w, std::span<const std::uint8_t> codes, std::size_t k);

// Inverted dropout; identity when rate == 0.
Tensor dropout(const Tensor& x, double rate, std::mt19937_64& rng);

// ---- gradient checking ----------------------------------------------------

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
  std::string worst;  // "tensor[index]" of the worst coordinate
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Compares analytic gradients of `f` with central differences for up to
// `samples_per_tensor` coordinates of every tensor in `params`. Relative error
// is |a - n| / max(|a|, |n|, floor).
GradCheckResult finite_difference_check(const std::function<Tensor()>& f, std::span<Tensor> params,
                                        double eps = 1e-5, std::size_t samples_per_tensor = 32,
                                        std::uint64_t seed = 7, double floor = 1e-6,
                                        std::span<const std::string> names = {});

}  // namespace g2g

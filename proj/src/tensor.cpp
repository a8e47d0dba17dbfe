#include "g2g/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

namespace g2g {

std::string to_string(const Shape& shape) {
  return "[" + std::to_string(shape[0]) + "x" + std::to_string(shape[1]) + "]";
}

namespace {

thread_local bool g_grad_enabled = true;

using NodePtr = std::shared_ptr<detail::Node>;

NodePtr new_node(std::size_t rows, std::size_t cols) {
  auto n = std::make_shared<detail::Node>();
  n->rows = rows;
  n->cols = cols;
  n->value.assign(rows * cols, 0.0);
  return n;
}

// Attaches history to `out` when any parent needs a gradient.
Tensor finish(NodePtr out, std::vector<NodePtr> parents, std::function<void(detail::Node&)> fn) {
  bool needs = false;
  if (g_grad_enabled) {
    for (const auto& p : parents) needs = needs || p->requires_grad;
  }
  if (needs) {
    out->requires_grad = true;
    out->is_leaf = false;
    out->parents = std::move(parents);
    out->backward = std::move(fn);
  }
  return Tensor(std::move(out));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
}

std::vector<double>* grad_of(const NodePtr& p) { return p->requires_grad ? &p->ensure_grad() : nullptr; }

}  // namespace

// ---------------------------------------------------------------------------

Tensor Tensor::zeros(std::size_t rows, std::size_t cols, bool requires_grad) {
  auto n = new_node(rows, cols);
  n->requires_grad = requires_grad;
  return Tensor(n);
}

Tensor Tensor::filled(std::size_t rows, std::size_t cols, double v, bool requires_grad) {
  Tensor t = zeros(rows, cols, requires_grad);
  std::fill(t.data().begin(), t.data().end(), v);
  return t;
}

Tensor Tensor::from(std::size_t rows, std::size_t cols, std::vector<double> data, bool requires_grad) {
  if (data.size() != rows * cols) {
    throw ShapeError("data length " + std::to_string(data.size()) + " does not match " + to_string({rows, cols}));
  }
  auto n = std::make_shared<detail::Node>();
  n->rows = rows;
  n->cols = cols;
  n->value = std::move(data);
  n->requires_grad = requires_grad;
  return Tensor(n);
}

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item() on tensor of shape " + to_string(shape()));
  return node_->value[0];
}

std::span<const double> Tensor::grad() const {
  if (node_->grad.empty()) node_->grad.assign(node_->value.size(), 0.0);
  return node_->grad;
}

Tensor Tensor::detach() const {
  auto n = std::make_shared<detail::Node>();
  n->rows = rows();
  n->cols = cols();
  n->value = node_->value;
  return Tensor(n);
}

Tensor Tensor::clone() const { return detach(); }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

detail::Node::~Node() {
  std::vector<std::shared_ptr<Node>> pending = std::move(parents);
  backward = nullptr;
  while (!pending.empty()) {
    std::shared_ptr<Node> p = std::move(pending.back());
    pending.pop_back();
    if (p.use_count() == 1) {
      for (auto& q : p->parents) pending.push_back(std::move(q));
      p->parents.clear();
      p->backward = nullptr;
    }
  }
}

void backward(const Tensor& loss) {
  if (loss.size() != 1) throw ShapeError("backward() needs a scalar loss, got " + to_string(loss.shape()));
  const NodePtr& root = loss.node();
  if (!root->requires_grad) return;

  // Iterative post-order DFS gives a topological order (parents before children).
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, std::size_t>> work{{root.get(), 0}};
  seen.insert(root.get());
  while (!work.empty()) {
    auto& [node, next] = work.back();
    if (next < node->parents.size()) {
      detail::Node* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) work.emplace_back(p, 0);
    } else {
      order.push_back(node);
      work.pop_back();
    }
  }
  for (auto* n : order) {
    if (!n->is_leaf) n->grad.assign(n->value.size(), 0.0);
  }
  root->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward) (*it)->backward(**it);
  }
}

// ---------------------------------------------------------------------------
// Linear algebra

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ " + to_string(a.shape()) + " x " + to_string(b.shape()));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  auto out = new_node(m, n);
  const double* A = a.data().data();
  const double* B = b.data().data();
  double* C = out->value.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A[i * k + p];
      if (av == 0.0) continue;
      const double* brow = B + p * n;
      double* crow = C + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  auto an = a.node(), bn = b.node();
  return finish(out, {an, bn}, [an, bn, m, k, n](detail::Node& self) {
    const double* G = self.grad.data();
    if (auto* ga = grad_of(an)) {
      const double* B = bn->value.data();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += G[i * n + j] * B[p * n + j];
          (*ga)[i * k + p] += s;
        }
      }
    }
    if (auto* gb = grad_of(bn)) {
      const double* A = an->value.data();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double av = A[i * k + p];
          if (av == 0.0) continue;
          for (std::size_t j = 0; j < n; ++j) (*gb)[p * n + j] += av * G[i * n + j];
        }
      }
    }
  });
}

Tensor transpose(const Tensor& a) {
  const std::size_t r = a.rows(), c = a.cols();
  auto out = new_node(c, r);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out->value[j * r + i] = a.data()[i * c + j];
  auto an = a.node();
  return finish(out, {an}, [an, r, c](detail::Node& self) {
    auto& ga = an->ensure_grad();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += self.grad[j * r + i];
  });
}

namespace {

template <typename Fwd, typename DA, typename DB>
Tensor binary(const Tensor& a, const Tensor& b, const char* name, Fwd fwd, DA da, DB db) {
  require_same_shape(a, b, name);
  auto out = new_node(a.rows(), a.cols());
  for (std::size_t i = 0; i < out->value.size(); ++i) out->value[i] = fwd(a.data()[i], b.data()[i]);
  auto an = a.node(), bn = b.node();
  return finish(out, {an, bn}, [an, bn, da, db](detail::Node& self) {
    if (auto* ga = grad_of(an)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*ga)[i] += da(an->value[i], bn->value[i]) * self.grad[i];
    }
    if (auto* gb = grad_of(bn)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*gb)[i] += db(an->value[i], bn->value[i]) * self.grad[i];
    }
  });
}

// Elementwise op whose derivative is expressed through its own output.
template <typename Fwd, typename Deriv>
Tensor unary(const Tensor& a, Fwd fwd, Deriv deriv) {
  auto out = new_node(a.rows(), a.cols());
  for (std::size_t i = 0; i < out->value.size(); ++i) out->value[i] = fwd(a.data()[i]);
  auto an = a.node();
  return finish(out, {an}, [an, deriv](detail::Node& self) {
    auto& ga = an->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) ga[i] += deriv(an->value[i], self.value[i]) * self.grad[i];
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "add", [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "sub", [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Tensor scale(const Tensor& a, double s) {
  return unary(a, [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Tensor add_row(const Tensor& a, const Tensor& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw ShapeError("add_row: " + to_string(row.shape()) + " cannot broadcast over " + to_string(a.shape()));
  }
  const std::size_t r = a.rows(), c = a.cols();
  auto out = new_node(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out->value[i * c + j] = a.data()[i * c + j] + row.data()[j];
  auto an = a.node(), rn = row.node();
  return finish(out, {an, rn}, [an, rn, r, c](detail::Node& self) {
    if (auto* ga = grad_of(an)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) (*ga)[i] += self.grad[i];
    }
    if (auto* gr = grad_of(rn)) {
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) (*gr)[j] += self.grad[i * c + j];
    }
  });
}

Tensor tanh(const Tensor& a) {
  return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); }, [](double, double y) { return y * (1.0 - y); });
}

Tensor relu(const Tensor& a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sum(const Tensor& a) {
  auto out = new_node(1, 1);
  // Neumaier compensated summation
  double total = 0.0, carry = 0.0;
  for (double v : a.data()) {
    const double t = total + v;
    carry += std::abs(total) >= std::abs(v) ? (total - t) + v : (v - t) + total;
    total = t;
  }
  out->value[0] = total + carry;
  auto an = a.node();
  return finish(out, {an}, [an](detail::Node& self) {
    auto& ga = an->ensure_grad();
    for (auto& g : ga) g += self.grad[0];
  });
}

// ---------------------------------------------------------------------------
// Normalisation and losses

Tensor softmax_rows(const Tensor& x, std::span<const std::uint8_t> mask) {
  const std::size_t r = x.rows(), c = x.cols();
  if (!mask.empty() && mask.size() != x.size()) {
    throw ShapeError("softmax_rows: mask size " + std::to_string(mask.size()) + " for " + to_string(x.shape()));
  }
  auto keep = [&](std::size_t idx) { return mask.empty() || mask[idx] != 0; };
  auto out = new_node(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c; ++j)
      if (keep(i * c + j)) mx = std::max(mx, x.data()[i * c + j]);
    if (mx == -std::numeric_limits<double>::infinity()) {
      throw std::invalid_argument("softmax_rows: row " + std::to_string(i) + " is fully masked");
    }
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      if (!keep(i * c + j)) continue;
      double e = std::exp(x.data()[i * c + j] - mx);
      out->value[i * c + j] = e;
      z += e;
    }
    for (std::size_t j = 0; j < c; ++j) out->value[i * c + j] /= z;
  }
  auto xn = x.node();
  return finish(out, {xn}, [xn, r, c](detail::Node& self) {
    auto& gx = xn->ensure_grad();
    for (std::size_t i = 0; i < r; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += self.grad[i * c + j] * self.value[i * c + j];
      for (std::size_t j = 0; j < c; ++j) {
        gx[i * c + j] += self.value[i * c + j] * (self.grad[i * c + j] - dot);
      }
    }
  });
}

Tensor cross_entropy(const Tensor& logits, std::size_t target, std::span<const std::uint8_t> mask) {
  if (logits.rows() != 1) throw ShapeError("cross_entropy expects a single row, got " + to_string(logits.shape()));
  const std::size_t c = logits.cols();
  if (target >= c) throw std::out_of_range("cross_entropy: target out of range");
  if (!mask.empty() && mask.size() != c) throw ShapeError("cross_entropy: mask size mismatch");
  auto keep = [&](std::size_t j) { return mask.empty() || mask[j] != 0; };
  if (!keep(target)) throw std::invalid_argument("cross_entropy: target is masked out");
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < c; ++j)
    if (keep(j)) mx = std::max(mx, logits.data()[j]);
  std::vector<double> probs(c, 0.0);
  double z = 0.0;
  for (std::size_t j = 0; j < c; ++j) {
    if (!keep(j)) continue;
    probs[j] = std::exp(logits.data()[j] - mx);
    z += probs[j];
  }
  for (auto& p : probs) p /= z;
  auto out = new_node(1, 1);
  out->value[0] = -(logits.data()[target] - mx - std::log(z));
  auto ln = logits.node();
  return finish(out, {ln}, [ln, probs = std::move(probs), target](detail::Node& self) {
    auto& g = ln->ensure_grad();
    for (std::size_t j = 0; j < probs.size(); ++j) g[j] += self.grad[0] * (probs[j] - (j == target ? 1.0 : 0.0));
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  const std::size_t r = x.rows(), c = x.cols();
  if (gain.shape() != Shape{1, c} || bias.shape() != Shape{1, c}) {
    throw ShapeError("layer_norm: gain/bias must be " + to_string({1, c}));
  }
  auto out = new_node(r, c);
  std::vector<double> xhat(r * c), inv_std(r);
  for (std::size_t i = 0; i < r; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < c; ++j) mean += x.data()[i * c + j];
    mean /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      double d = x.data()[i * c + j] - mean;
      var += d * d;
    }
    var /= static_cast<double>(c);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < c; ++j) {
      xhat[i * c + j] = (x.data()[i * c + j] - mean) * inv_std[i];
      out->value[i * c + j] = xhat[i * c + j] * gain.data()[j] + bias.data()[j];
    }
  }
  auto xn = x.node(), gn = gain.node(), bn = bias.node();
  return finish(out, {xn, gn, bn},
                [xn, gn, bn, r, c, xhat = std::move(xhat), inv_std = std::move(inv_std)](detail::Node& self) {
                  const double* G = self.grad.data();
                  if (auto* gg = grad_of(gn)) {
                    for (std::size_t i = 0; i < r; ++i)
                      for (std::size_t j = 0; j < c; ++j) (*gg)[j] += G[i * c + j] * xhat[i * c + j];
                  }
                  if (auto* gb = grad_of(bn)) {
                    for (std::size_t i = 0; i < r; ++i)
                      for (std::size_t j = 0; j < c; ++j) (*gb)[j] += G[i * c + j];
                  }
                  if (auto* gx = grad_of(xn)) {
                    const double inv_c = 1.0 / static_cast<double>(c);
                    for (std::size_t i = 0; i < r; ++i) {
                      double mean_dy = 0.0, mean_dy_xhat = 0.0;
                      for (std::size_t j = 0; j < c; ++j) {
                        double dy = G[i * c + j] * gn->value[j];
                        mean_dy += dy;
                        mean_dy_xhat += dy * xhat[i * c + j];
                      }
                      mean_dy *= inv_c;
                      mean_dy_xhat *= inv_c;
                      for (std::size_t j = 0; j < c; ++j) {
                        double dy = G[i * c + j] * gn->value[j];
                        (*gx)[i * c + j] += inv_std[i] * (dy - mean_dy - xhat[i * c + j] * mean_dy_xhat);
                      }
                    }
                  }
                });
}

// ---------------------------------------------------------------------------
// Indexing

Tensor embedding(const Tensor& table, std::span<const int> ids) {
  const std::size_t c = table.cols();
  auto out = new_node(ids.size(), c);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < -1 || ids[i] >= static_cast<int>(table.rows())) {
      throw std::out_of_range("embedding: id " + std::to_string(ids[i]) + " outside table of " +
                              std::to_string(table.rows()) + " rows");
    }
    if (ids[i] < 0) continue;
    std::copy_n(table.data().begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(ids[i]) * c), c,
                out->value.begin() + static_cast<std::ptrdiff_t>(i * c));
  }
  auto tn = table.node();
  std::vector<int> idv(ids.begin(), ids.end());
  return finish(out, {tn}, [tn, c, idv = std::move(idv)](detail::Node& self) {
    auto& g = tn->ensure_grad();
    for (std::size_t i = 0; i < idv.size(); ++i) {
      if (idv[i] < 0) continue;
      for (std::size_t j = 0; j < c; ++j) g[static_cast<std::size_t>(idv[i]) * c + j] += self.grad[i * c + j];
    }
  });
}

Tensor select_rows(const Tensor& x, std::span<const std::size_t> indices) {
  const std::size_t c = x.cols();
  auto out = new_node(indices.size(), c);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= x.rows()) throw std::out_of_range("select_rows: row " + std::to_string(indices[i]));
    std::copy_n(x.data().begin() + static_cast<std::ptrdiff_t>(indices[i] * c), c,
                out->value.begin() + static_cast<std::ptrdiff_t>(i * c));
  }
  auto xn = x.node();
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  return finish(out, {xn}, [xn, c, idx = std::move(idx)](detail::Node& self) {
    auto& g = xn->ensure_grad();
    for (std::size_t i = 0; i < idx.size(); ++i)
      for (std::size_t j = 0; j < c; ++j) g[idx[i] * c + j] += self.grad[i * c + j];
  });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end) {
  if (begin > end || end > x.cols()) throw ShapeError("slice_cols: bad range for " + to_string(x.shape()));
  const std::size_t r = x.rows(), c = x.cols(), w = end - begin;
  auto out = new_node(r, w);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < w; ++j) out->value[i * w + j] = x.data()[i * c + begin + j];
  auto xn = x.node();
  return finish(out, {xn}, [xn, r, c, w, begin](detail::Node& self) {
    auto& g = xn->ensure_grad();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < w; ++j) g[i * c + begin + j] += self.grad[i * w + j];
  });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: nothing to concatenate");
  const std::size_t c = parts[0].cols();
  std::size_t r = 0;
  for (const auto& p : parts) {
    if (p.cols() != c) throw ShapeError("concat_rows: column mismatch " + to_string(p.shape()));
    r += p.rows();
  }
  auto out = new_node(r, c);
  std::vector<NodePtr> parents;
  std::size_t offset = 0;
  for (const auto& p : parts) {
    std::copy(p.data().begin(), p.data().end(), out->value.begin() + static_cast<std::ptrdiff_t>(offset));
    offset += p.size();
    parents.push_back(p.node());
  }
  return finish(out, parents, [](detail::Node& self) {
    std::size_t off = 0;
    for (auto& p : self.parents) {
      if (p->requires_grad) {
        auto& g = p->ensure_grad();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[off + i];
      }
      off += p->value.size();
    }
  });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: nothing to concatenate");
  const std::size_t r = parts[0].rows();
  std::size_t c = 0;
  for (const auto& p : parts) {
    if (p.rows() != r) throw ShapeError("concat_cols: row mismatch " + to_string(p.shape()));
    c += p.cols();
  }
  auto out = new_node(r, c);
  std::vector<NodePtr> parents;
  std::size_t col = 0;
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < p.cols(); ++j) out->value[i * c + col + j] = p.data()[i * p.cols() + j];
    col += p.cols();
    parents.push_back(p.node());
  }
  return finish(out, parents, [r, c](detail::Node& self) {
    std::size_t col0 = 0;
    for (auto& p : self.parents) {
      if (p->requires_grad) {
        auto& g = p->ensure_grad();
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < p->cols; ++j) g[i * p->cols + j] += self.grad[i * c + col0 + j];
      }
      col0 += p->cols;
    }
  });
}

Tensor relation_gather(const Tensor& x, std::span<const std::uint8_t> codes) {
  const std::size_t n = x.rows(), k = x.cols();
  if (codes.size() != n * n) throw ShapeError("relation_gather: codes do not cover " + to_string({n, n}));
  auto out = new_node(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      std::size_t code = codes[i * n + j];
      if (code >= k) throw std::out_of_range("relation_gather: code " + std::to_string(code));
      out->value[i * n + j] = x.data()[i * k + code];
    }
  }
  auto xn = x.node();
  std::vector<std::uint8_t> cv(codes.begin(), codes.end());
  return finish(out, {xn}, [xn, n, k, cv = std::move(cv)](detail::Node& self) {
    auto& g = xn->ensure_grad();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) g[i * k + cv[i * n + j]] += self.grad[i * n + j];
  });
}

Tensor relation_scatter(const Tensor& w, std::span<const std::uint8_t> codes, std::size_t k) {
  const std::size_t n = w.rows();
  if (w.cols() != n || codes.size() != n * n) {
    throw ShapeError("relation_scatter: weights " + to_string(w.shape()) + " and codes disagree");
  }
  auto out = new_node(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      std::size_t code = codes[i * n + j];
      if (code >= k) throw std::out_of_range("relation_scatter: code " + std::to_string(code));
      out->value[i * k + code] += w.data()[i * n + j];
    }
  }
  auto wn = w.node();
  std::vector<std::uint8_t> cv(codes.begin(), codes.end());
  return finish(out, {wn}, [wn, n, k, cv = std::move(cv)](detail::Node& self) {
    auto& g = wn->ensure_grad();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) g[i * n + j] += self.grad[i * k + cv[i * n + j]];
  });
}

Tensor dropout(const Tensor& x, double rate, std::mt19937_64& rng) {
  if (rate <= 0.0) return x;
  if (rate >= 1.0) throw std::invalid_argument("dropout rate must be < 1");
  std::bernoulli_distribution keep(1.0 - rate);
  const double s = 1.0 / (1.0 - rate);
  std::vector<double> mask(x.size());
  for (auto& m : mask) m = keep(rng) ? s : 0.0;
  auto out = new_node(x.rows(), x.cols());
  for (std::size_t i = 0; i < mask.size(); ++i) out->value[i] = x.data()[i] * mask[i];
  auto xn = x.node();
  return finish(out, {xn}, [xn, mask = std::move(mask)](detail::Node& self) {
    auto& g = xn->ensure_grad();
    for (std::size_t i = 0; i < mask.size(); ++i) g[i] += mask[i] * self.grad[i];
  });
}

// ---------------------------------------------------------------------------

GradCheckResult finite_difference_check(const std::function<Tensor()>& f, std::span<Tensor> params, double eps,
                                        std::size_t samples_per_tensor, std::uint64_t seed, double floor,
                                        std::span<const std::string> names) {
  for (auto& p : params) p.zero_grad();
  backward(f());
  std::vector<std::vector<double>> analytic;
  for (auto& p : params) analytic.emplace_back(p.grad().begin(), p.grad().end());

  std::mt19937_64 rng(seed);
  GradCheckResult result;
  NoGradGuard guard;
  for (std::size_t t = 0; t < params.size(); ++t) {
    auto values = params[t].data();
    std::vector<std::size_t> coords(values.size());
    std::iota(coords.begin(), coords.end(), 0);
    if (coords.size() > samples_per_tensor) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(samples_per_tensor);
    }
    for (std::size_t idx : coords) {
      const double saved = values[idx];
      values[idx] = saved + eps;
      const double up = f().item();
      values[idx] = saved - eps;
      const double down = f().item();
      values[idx] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic[t][idx];
      const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      ++result.coordinates;
      if (err > result.max_relative_error || result.worst.empty()) {
        result.max_relative_error = err;
        result.worst_analytic = a;
        result.worst_numeric = numeric;
        result.worst = (t < names.size() ? names[t] : "param" + std::to_string(t)) + "[" + std::to_string(idx) + "]";
      }
    }
  }
  return result;
}

}  // namespace g2g

#include "g2g/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace g2g {

Tensor& ParameterStore::add(const std::string& name, Tensor value) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  value.set_requires_grad(true);
  index_.emplace(name, entries_.size());
  entries_.emplace_back(name, std::move(value));
  return entries_.back().second;
}

Tensor& ParameterStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter '" + name + "'");
  return entries_[it->second].second;
}

const Tensor& ParameterStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter '" + name + "'");
  return entries_[it->second].second;
}

std::vector<Tensor> ParameterStore::tensors() const {
  std::vector<Tensor> out;
  for (const auto& e : entries_) out.push_back(e.second);
  return out;
}

std::vector<std::string> ParameterStore::names() const {
  std::vector<std::string> out;
  for (const auto& e : entries_) out.push_back(e.first);
  return out;
}

void ParameterStore::zero_grad() {
  for (auto& e : entries_) e.second.zero_grad();
}

void ParameterStore::round_to_f32() {
  for (auto& e : entries_) {
    for (auto& v : e.second.data()) v = static_cast<double>(static_cast<float>(v));
  }
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.second.size();
  return n;
}

// ---------------------------------------------------------------------------

const std::string* Checkpoint::manifest_value(const std::string& key) const {
  for (const auto& [k, v] : manifest) {
    if (k == key) return &v;
  }
  return nullptr;
}

const std::string* Checkpoint::blob(const std::string& name) const {
  for (const auto& [k, v] : blobs) {
    if (k == name) return &v;
  }
  return nullptr;
}

const Checkpoint::Entry* Checkpoint::tensor(const std::string& name) const {
  for (const auto& e : tensors) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

namespace {

constexpr char kMagic[8] = {'G', '2', 'G', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint8_t kDtypeF32 = 1;

class Writer {
 public:
  void bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  template <typename T>
  void le(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void str(const std::string& s) {
    le<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    out_ += s;
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {}
  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw CheckpointError("checkpoint truncated at byte " + std::to_string(pos_));
  }
  template <typename T>
  T le() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<T>(static_cast<T>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i));
    }
    pos_ += sizeof(T);
    return v;
  }
  std::string str() {
    auto n = le<std::uint32_t>();
    need(n);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string raw(std::size_t n) {
    need(n);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  const std::string& in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_checkpoint(const Checkpoint& checkpoint) {
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  std::string manifest;
  for (const auto& [k, v] : checkpoint.manifest) {
    if (k.find('=') != std::string::npos || k.find('\n') != std::string::npos || v.find('\n') != std::string::npos) {
      throw std::invalid_argument("manifest entry '" + k + "' is not a single key=value line");
    }
    manifest += k + "=" + v + "\n";
  }
  w.str(manifest);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(checkpoint.blobs.size()));
  for (const auto& [name, data] : checkpoint.blobs) {
    w.str(name);
    w.str(data);
  }
  w.le<std::uint32_t>(static_cast<std::uint32_t>(checkpoint.tensors.size()));
  for (const auto& e : checkpoint.tensors) {
    w.str(e.name);
    w.le<std::uint8_t>(kDtypeF32);
    w.le<std::uint32_t>(static_cast<std::uint32_t>(e.shape.size()));
    std::uint64_t count = 1;
    for (auto d : e.shape) {
      w.le<std::uint64_t>(d);
      count *= d;
    }
    if (count != e.values.size()) throw std::invalid_argument("tensor '" + e.name + "' payload does not match shape");
    for (float f : e.values) w.le<std::uint32_t>(std::bit_cast<std::uint32_t>(f));
  }
  return w.take();
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (r.raw(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) throw CheckpointError("not a checkpoint file");
  Checkpoint c;
  std::istringstream manifest(r.str());
  for (std::string line; std::getline(manifest, line);) {
    auto eq = line.find('=');
    if (eq == std::string::npos) throw CheckpointError("bad manifest line '" + line + "'");
    c.manifest.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  for (auto n = r.le<std::uint32_t>(); n > 0; --n) {
    std::string name = r.str();
    c.blobs.emplace_back(std::move(name), r.str());
  }
  for (auto n = r.le<std::uint32_t>(); n > 0; --n) {
    Checkpoint::Entry e;
    e.name = r.str();
    if (r.le<std::uint8_t>() != kDtypeF32) throw CheckpointError("tensor '" + e.name + "' has unsupported dtype");
    std::uint64_t count = 1;
    for (auto rank = r.le<std::uint32_t>(); rank > 0; --rank) {
      e.shape.push_back(r.le<std::uint64_t>());
      count *= e.shape.back();
    }
    r.need(count * 4);
    e.values.resize(count);
    for (auto& f : e.values) f = std::bit_cast<float>(r.le<std::uint32_t>());
    c.tensors.push_back(std::move(e));
  }
  if (!r.done()) throw CheckpointError("trailing bytes after checkpoint");
  return c;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << encode_checkpoint(checkpoint);
  if (!out) throw IoError("write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return decode_checkpoint(buffer.str());
}

std::vector<Checkpoint::Entry> to_entries(const ParameterStore& params) {
  std::vector<Checkpoint::Entry> out;
  for (const auto& [name, t] : params.entries()) {
    Checkpoint::Entry e;
    e.name = name;
    e.shape = {t.rows(), t.cols()};
    e.values.reserve(t.size());
    for (double v : t.data()) e.values.push_back(static_cast<float>(v));
    out.push_back(std::move(e));
  }
  return out;
}

void load_entries(ParameterStore& params, const std::vector<Checkpoint::Entry>& entries) {
  if (entries.size() != params.size()) {
    throw CheckpointError("checkpoint has " + std::to_string(entries.size()) + " tensors, model expects " +
                             std::to_string(params.size()));
  }
  for (const auto& e : entries) {
    if (!params.contains(e.name)) throw CheckpointError("checkpoint tensor '" + e.name + "' unknown to model");
    Tensor& t = params.get(e.name);
    if (e.shape != std::vector<std::uint64_t>{t.rows(), t.cols()}) {
      throw CheckpointError("checkpoint tensor '" + e.name + "' has the wrong shape");
    }
    auto dst = t.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<double>(e.values[i]);
  }
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace g2g

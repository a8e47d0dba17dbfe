#pragma once

// Named parameter collections and their on-disk container.
//
// Container layout (all integers little-endian):
//
//   magic      8 bytes   "G2GCKPT1"
//   manifest   u32 length, then UTF-8 "key=value\n" lines
//   blobs      u32 count, then per blob: u32 name length, name, u32 size, bytes
//   tensors    u32 count, then per tensor:
//                u32 name length, name,
//                u8 dtype (1 = f32), u32 rank, rank x u64 dims,
//                row-major IEEE-754 binary32 payload
//
// Values are float64 in memory and rounded to float32 on save.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "g2g/tensor.hpp"
#include "g2g/treebank.hpp"

namespace g2g {

// Malformed or incompatible checkpoint.
class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParameterStore {
 public:
  // Registers a new trainable tensor; names must be unique.
  Tensor& add(const std::string& name, Tensor value);
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;

  std::size_t size() const { return entries_.size(); }
  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  std::vector<Tensor> tensors() const;
  std::vector<std::string> names() const;

  void zero_grad();
  // Rounds every value to the nearest float32, matching what a checkpoint stores.
  void round_to_f32();
  std::size_t scalar_count() const;

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
  std::map<std::string, std::size_t> index_;
};

struct Checkpoint {
  std::vector<std::pair<std::string, std::string>> manifest;
  std::vector<std::pair<std::string, std::string>> blobs;
  struct Entry {
    std::string name;
    std::vector<std::uint64_t> shape;
    std::vector<float> values;
  };
  std::vector<Entry> tensors;

  const std::string* manifest_value(const std::string& key) const;
  const std::string* blob(const std::string& name) const;
  const Entry* tensor(const std::string& name) const;
};

std::string encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(const std::string& bytes);
void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Converts a parameter store to checkpoint entries and back. Loading checks that
// names and shapes agree exactly.
std::vector<Checkpoint::Entry> to_entries(const ParameterStore& params);
void load_entries(ParameterStore& params, const std::vector<Checkpoint::Entry>& entries);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace g2g

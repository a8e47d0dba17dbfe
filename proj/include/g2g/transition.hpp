#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "g2g/treebank.hpp"

namespace g2g {

// Output order of the action classifier: SHIFT, SWAP, RIGHT-ARC, LEFT-ARC.
enum class ActionKind : std::uint8_t { Shift = 0, Swap = 1, RightArc = 2, LeftArc = 3 };
inline constexpr std::size_t kActionKinds = 4;

const char* to_string(ActionKind kind);
ActionKind action_kind_from_string(const std::string& name);

struct Action {
  ActionKind kind = ActionKind::Shift;
  int label = -1;  // deprel id for arcs, -1 otherwise

  static Action shift() { return {ActionKind::Shift, -1}; }
  static Action swap() { return {ActionKind::Swap, -1}; }
  static Action left_arc(int label) { return {ActionKind::LeftArc, label}; }
  static Action right_arc(int label) { return {ActionKind::RightArc, label}; }

  bool is_arc() const { return kind == ActionKind::LeftArc || kind == ActionKind::RightArc; }
  friend bool operator==(const Action&, const Action&) = default;
};

struct Arc {
  int head = 0;
  int dependent = 0;
  int label = -1;
  friend auto operator<=>(const Arc&, const Arc&) = default;
};

class IllegalAction : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Token indices: 0 is ROOT, 1..n are words.
class ParserState {
 public:
  explicit ParserState(int sentence_length);

  int sentence_length() const { return n_; }
  const std::vector<int>& stack() const { return stack_; }    // bottom first
  const std::vector<int>& buffer() const { return buffer_; }  // front first
  const std::vector<int>& deleted() const { return deleted_; }  // sentence order
  int step() const { return step_; }

  // s(1) is the stack top; returns -1 when the slot is empty.
  int s(std::size_t depth) const;
  // b(1) is the buffer front; returns -1 when the slot is empty.
  int b(std::size_t depth) const;

  int head_of(int token) const { return heads_[static_cast<std::size_t>(token)]; }
  int label_of(int token) const { return labels_[static_cast<std::size_t>(token)]; }
  bool attached(int token) const { return heads_[static_cast<std::size_t>(token)] >= 0; }
  // Sorted by dependent.
  std::vector<Arc> arcs() const;
  std::size_t arc_count() const { return arc_count_; }

  bool is_terminal() const { return buffer_.empty() && stack_.size() == 1; }
  bool is_legal(ActionKind kind) const;
  // Legal kinds in classifier order.
  std::array<bool, kActionKinds> legal_mask() const;
  std::vector<ActionKind> legal_actions() const;

  // Throws IllegalAction naming the violated precondition.
  void apply(const Action& action);
  ParserState applied(const Action& action) const {
    ParserState next = *this;
    next.apply(action);
    return next;
  }

  friend bool operator==(const ParserState&, const ParserState&) = default;

 private:
  std::string why_illegal(ActionKind kind) const;

  int n_;
  std::vector<int> stack_;
  std::vector<int> buffer_;
  std::vector<int> deleted_;
  std::vector<int> heads_;   // -1 = unattached; index 0 unused
  std::vector<int> labels_;
  std::size_t arc_count_ = 0;
  int step_ = 0;
};

inline ParserState initial_state(const AnnotatedSentence& sentence) {
  return ParserState(static_cast<int>(sentence.size()));
}

// Gold tree in index form: heads[i], labels[i] for i in 1..n (index 0 unused).
struct GoldTree {
  std::vector<int> heads;
  std::vector<int> labels;
  int size() const { return static_cast<int>(heads.size()) - 1; }
  std::vector<Arc> arcs() const;
};

// Labels are mapped through `vocab`; unknown labels throw.
GoldTree gold_tree(const AnnotatedSentence& sentence, const Vocabulary& vocab);
// Label ids are ignored (set to 0); useful for unlabelled experiments and tests.
GoldTree gold_tree_from_heads(const std::vector<int>& heads_one_based, const std::vector<int>& labels = {});

// In-order traversal rank for ROOT and every token; rank[0] == 0.
std::vector<int> projective_order(const GoldTree& tree);
bool is_projective(const GoldTree& tree);

// Static eager-SWAP oracle.
std::vector<Action> oracle_sequence(const GoldTree& tree);

// Replays `actions` from the initial state; throws IllegalAction on the first illegal step.
ParserState replay(int sentence_length, const std::vector<Action>& actions);

}  // namespace g2g

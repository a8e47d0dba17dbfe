#include "g2g/transition.hpp"

#include <algorithm>
#include <functional>

namespace g2g {

const char* to_string(ActionKind kind) {
  switch (kind) {
    case ActionKind::Shift:
      return "SHIFT";
    case ActionKind::Swap:
      return "SWAP";
    case ActionKind::RightArc:
      return "RIGHT-ARC";
    case ActionKind::LeftArc:
      return "LEFT-ARC";
  }
  return "?";
}

ActionKind action_kind_from_string(const std::string& name) {
  for (std::size_t k = 0; k < kActionKinds; ++k) {
    auto kind = static_cast<ActionKind>(k);
    if (name == to_string(kind)) return kind;
  }
  throw std::invalid_argument("unknown action '" + name + "'");
}

ParserState::ParserState(int sentence_length)
    : n_(sentence_length),
      stack_{0},
      heads_(static_cast<std::size_t>(sentence_length + 1), -1),
      labels_(static_cast<std::size_t>(sentence_length + 1), -1) {
  if (sentence_length < 0) throw std::invalid_argument("negative sentence length");
  buffer_.reserve(static_cast<std::size_t>(sentence_length));
  for (int i = 1; i <= sentence_length; ++i) buffer_.push_back(i);
}

int ParserState::s(std::size_t depth) const {
  if (depth == 0 || depth > stack_.size()) return -1;
  return stack_[stack_.size() - depth];
}

int ParserState::b(std::size_t depth) const {
  if (depth == 0 || depth > buffer_.size()) return -1;
  return buffer_[depth - 1];
}

std::vector<Arc> ParserState::arcs() const {
  std::vector<Arc> out;
  out.reserve(arc_count_);
  for (int d = 1; d <= n_; ++d) {
    if (attached(d)) out.push_back({head_of(d), d, label_of(d)});
  }
  return out;
}

std::string ParserState::why_illegal(ActionKind kind) const {
  const bool two = stack_.size() >= 2;
  switch (kind) {
    case ActionKind::Shift:
      return buffer_.empty() ? "SHIFT requires a non-empty buffer" : "";
    case ActionKind::LeftArc:
      if (!two) return "LEFT-ARC requires two stack items";
      if (s(2) == 0) return "LEFT-ARC cannot make ROOT a dependent";
      return "";
    case ActionKind::RightArc:
      if (!two) return "RIGHT-ARC requires two stack items";
      if (s(2) == 0 && !(buffer_.empty() && stack_.size() == 2)) {
        return "RIGHT-ARC from ROOT requires an empty buffer and a single word on the stack";
      }
      return "";
    case ActionKind::Swap:
      if (!two) return "SWAP requires two stack items";
      if (s(2) == 0) return "SWAP cannot move ROOT";
      if (s(2) > s(1)) return "SWAP requires the second stack item to precede the top in the sentence";
      return "";
  }
  return "unknown action";
}

bool ParserState::is_legal(ActionKind kind) const { return why_illegal(kind).empty(); }

std::array<bool, kActionKinds> ParserState::legal_mask() const {
  std::array<bool, kActionKinds> mask{};
  for (std::size_t k = 0; k < kActionKinds; ++k) mask[k] = is_legal(static_cast<ActionKind>(k));
  return mask;
}

std::vector<ActionKind> ParserState::legal_actions() const {
  std::vector<ActionKind> out;
  for (std::size_t k = 0; k < kActionKinds; ++k) {
    if (is_legal(static_cast<ActionKind>(k))) out.push_back(static_cast<ActionKind>(k));
  }
  return out;
}

void ParserState::apply(const Action& action) {
  if (std::string why = why_illegal(action.kind); !why.empty()) throw IllegalAction(why);
  if (action.is_arc() != (action.label >= 0)) {
    throw IllegalAction(std::string(to_string(action.kind)) + (action.is_arc() ? " requires a label" : " takes no label"));
  }
  auto remove_to_deleted = [this](int token) {
    deleted_.insert(std::lower_bound(deleted_.begin(), deleted_.end(), token), token);
  };
  switch (action.kind) {
    case ActionKind::Shift:
      stack_.push_back(buffer_.front());
      buffer_.erase(buffer_.begin());
      break;
    case ActionKind::Swap: {
      int second = stack_[stack_.size() - 2];
      stack_.erase(stack_.end() - 2);
      buffer_.insert(buffer_.begin(), second);
      break;
    }
    case ActionKind::LeftArc: {
      int head = s(1), dep = s(2);
      heads_[static_cast<std::size_t>(dep)] = head;
      labels_[static_cast<std::size_t>(dep)] = action.label;
      stack_.erase(stack_.end() - 2);
      remove_to_deleted(dep);
      ++arc_count_;
      break;
    }
    case ActionKind::RightArc: {
      int head = s(2), dep = s(1);
      heads_[static_cast<std::size_t>(dep)] = head;
      labels_[static_cast<std::size_t>(dep)] = action.label;
      stack_.pop_back();
      remove_to_deleted(dep);
      ++arc_count_;
      break;
    }
  }
  ++step_;
}

std::vector<Arc> GoldTree::arcs() const {
  std::vector<Arc> out;
  for (int d = 1; d <= size(); ++d) {
    out.push_back({heads[static_cast<std::size_t>(d)], d, labels[static_cast<std::size_t>(d)]});
  }
  return out;
}

GoldTree gold_tree(const AnnotatedSentence& sentence, const Vocabulary& vocab) {
  GoldTree tree;
  tree.heads.assign(sentence.size() + 1, -1);
  tree.labels.assign(sentence.size() + 1, -1);
  for (std::size_t i = 0; i < sentence.size(); ++i) {
    const auto& t = sentence.tokens[i];
    int label = vocab.deprel_id(t.deprel);
    if (label < 0) throw std::invalid_argument("label '" + t.deprel + "' not in vocabulary");
    tree.heads[i + 1] = t.head;
    tree.labels[i + 1] = label;
  }
  return tree;
}

GoldTree gold_tree_from_heads(const std::vector<int>& heads_one_based, const std::vector<int>& labels) {
  GoldTree tree;
  tree.heads.push_back(-1);
  tree.labels.push_back(-1);
  for (std::size_t i = 0; i < heads_one_based.size(); ++i) {
    tree.heads.push_back(heads_one_based[i]);
    tree.labels.push_back(labels.empty() ? 0 : labels[i]);
  }
  return tree;
}

std::vector<int> projective_order(const GoldTree& tree) {
  const int n = tree.size();
  std::vector<std::vector<int>> children(static_cast<std::size_t>(n + 1));
  for (int d = 1; d <= n; ++d) children[static_cast<std::size_t>(tree.heads[static_cast<std::size_t>(d)])].push_back(d);
  std::vector<int> rank(static_cast<std::size_t>(n + 1), -1);
  int next = 0;
  std::function<void(int)> visit = [&](int node) {
    const auto& kids = children[static_cast<std::size_t>(node)];
    for (int c : kids) {
      if (c < node) visit(c);
    }
    rank[static_cast<std::size_t>(node)] = next++;
    for (int c : kids) {
      if (c > node) visit(c);
    }
  };
  visit(0);
  return rank;
}

bool is_projective(const GoldTree& tree) {
  auto rank = projective_order(tree);
  for (std::size_t i = 0; i < rank.size(); ++i) {
    if (rank[i] != static_cast<int>(i)) return false;
  }
  return true;
}

std::vector<Action> oracle_sequence(const GoldTree& tree) {
  const int n = tree.size();
  const auto order = projective_order(tree);
  std::vector<int> missing(static_cast<std::size_t>(n + 1), 0);  // gold dependents not yet attached
  for (int d = 1; d <= n; ++d) ++missing[static_cast<std::size_t>(tree.heads[static_cast<std::size_t>(d)])];

  ParserState state(n);
  std::vector<Action> out;
  auto gold_head = [&](int t) { return tree.heads[static_cast<std::size_t>(t)]; };
  auto gold_label = [&](int t) { return tree.labels[static_cast<std::size_t>(t)]; };
  while (!state.is_terminal()) {
    Action next = Action::shift();
    if (state.stack().size() >= 2) {
      int s1 = state.s(1), s2 = state.s(2);
      if (s2 != 0 && gold_head(s2) == s1 && missing[static_cast<std::size_t>(s2)] == 0) {
        next = Action::left_arc(gold_label(s2));
      } else if (gold_head(s1) == s2 && missing[static_cast<std::size_t>(s1)] == 0) {
        next = Action::right_arc(gold_label(s1));
      } else if (s2 != 0 && order[static_cast<std::size_t>(s2)] > order[static_cast<std::size_t>(s1)]) {
        next = Action::swap();
      }
    }
    if (next.kind == ActionKind::LeftArc) --missing[static_cast<std::size_t>(state.s(1))];
    if (next.kind == ActionKind::RightArc) --missing[static_cast<std::size_t>(state.s(2))];
    state.apply(next);
    out.push_back(next);
  }
  return out;
}

ParserState replay(int sentence_length, const std::vector<Action>& actions) {
  ParserState state(sentence_length);
  for (const auto& a : actions) state.apply(a);
  return state;
}

}  // namespace g2g

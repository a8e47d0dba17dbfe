#include "g2g/treebank.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace g2g {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

bool parse_int(std::string_view s, int& value) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace

std::string AnnotatedSentence::name(std::size_t ordinal) const {
  for (const auto& c : comments) {
    constexpr std::string_view key = "# sent_id = ";
    if (c.rfind(key, 0) == 0) return c.substr(key.size());
  }
  return "sentence " + std::to_string(ordinal);
}

bool is_punctuation(const TokenRecord& token, PunctRule rule) {
  switch (rule) {
    case PunctRule::Upos:
      return token.upos == "PUNCT";
    case PunctRule::Deprel:
      return token.deprel == "punct";
  }
  return false;
}

void flag_punctuation(AnnotatedSentence& sentence, PunctRule rule) {
  for (auto& t : sentence.tokens) t.is_punct = is_punctuation(t, rule);
}

void validate_tree(const AnnotatedSentence& sentence, const std::string& name) {
  const int n = static_cast<int>(sentence.size());
  std::vector<std::vector<int>> children(static_cast<std::size_t>(n + 1));
  int roots = 0;
  for (int i = 1; i <= n; ++i) {
    const auto& t = sentence.tokens[static_cast<std::size_t>(i - 1)];
    if (t.id != i) throw ValidationError(name + ": token ids are not consecutive at " + std::to_string(i));
    if (t.head < 0 || t.head > n) throw ValidationError(name + ": head out of range for token " + std::to_string(i));
    if (t.head == i) throw ValidationError(name + ": token " + std::to_string(i) + " is its own head");
    if (t.head == 0) ++roots;
    children[static_cast<std::size_t>(t.head)].push_back(i);
  }
  if (n == 0) return;
  if (roots != 1) throw ValidationError(name + ": expected exactly one root, found " + std::to_string(roots));
  std::vector<char> seen(static_cast<std::size_t>(n + 1), 0);
  std::vector<int> todo{0};
  seen[0] = 1;
  int reached = 0;
  while (!todo.empty()) {
    int node = todo.back();
    todo.pop_back();
    for (int c : children[static_cast<std::size_t>(node)]) {
      if (seen[static_cast<std::size_t>(c)]) continue;
      seen[static_cast<std::size_t>(c)] = 1;
      ++reached;
      todo.push_back(c);
    }
  }
  if (reached != n) throw ValidationError(name + ": heads contain a cycle");
}

std::vector<AnnotatedSentence> parse_conllu(std::string_view text, const std::string& source, PunctRule rule) {
  std::vector<AnnotatedSentence> out;
  AnnotatedSentence current;
  bool open = false;
  std::size_t line_no = 0;

  auto finish = [&] {
    if (!open) return;
    flag_punctuation(current, rule);
    validate_tree(current, source + ": " + current.name(out.size() + 1));
    out.push_back(std::move(current));
    current = AnnotatedSentence{};
    open = false;
  };

  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (line.empty()) {
      finish();
      continue;
    }
    open = true;
    if (line.front() == '#') {
      current.comments.emplace_back(line);
      continue;
    }
    auto cols = split_tabs(line);
    if (cols.size() != 10) {
      throw ParseError(source, line_no, "expected 10 tab-separated columns, found " + std::to_string(cols.size()));
    }
    if (cols[0].find('-') != std::string_view::npos || cols[0].find('.') != std::string_view::npos) continue;

    TokenRecord t;
    if (!parse_int(cols[0], t.id) || t.id < 1) throw ParseError(source, line_no, "bad token id '" + std::string(cols[0]) + "'");
    if (!parse_int(cols[6], t.head) || t.head < 0) throw ParseError(source, line_no, "bad head '" + std::string(cols[6]) + "'");
    if (t.id != static_cast<int>(current.tokens.size()) + 1) {
      throw ParseError(source, line_no, "token id " + std::to_string(t.id) + " out of sequence");
    }
    t.form = cols[1];
    t.lemma = cols[2];
    t.upos = cols[3];
    t.xpos = cols[4];
    t.feats = cols[5];
    t.deprel = cols[7];
    t.deps = cols[8];
    t.misc = cols[9];
    current.tokens.push_back(std::move(t));
  }
  finish();
  return out;
}

std::vector<AnnotatedSentence> read_conllu(const std::string& path, PunctRule rule) {
  return parse_conllu(read_file(path), path, rule);
}

std::string format_conllu(const std::vector<AnnotatedSentence>& sentences) {
  std::string out;
  for (const auto& s : sentences) {
    for (const auto& c : s.comments) {
      out += c;
      out += '\n';
    }
    for (const auto& t : s.tokens) {
      out += std::to_string(t.id);
      for (const std::string* field : {&t.form, &t.lemma, &t.upos, &t.xpos, &t.feats}) {
        out += '\t';
        out += *field;
      }
      out += '\t';
      out += std::to_string(t.head);
      for (const std::string* field : {&t.deprel, &t.deps, &t.misc}) {
        out += '\t';
        out += *field;
      }
      out += '\n';
    }
    out += '\n';
  }
  return out;
}

void write_conllu(const std::vector<AnnotatedSentence>& sentences, const std::string& path) {
  write_file(path, format_conllu(sentences));
}

AnnotatedSentence with_predicted_tree(const AnnotatedSentence& gold, const std::vector<int>& heads,
                                      const std::vector<std::string>& labels) {
  if (heads.size() != gold.size() || labels.size() != gold.size()) {
    throw std::invalid_argument("predicted tree size does not match sentence");
  }
  AnnotatedSentence out = gold;
  for (std::size_t i = 0; i < out.tokens.size(); ++i) {
    out.tokens[i].head = heads[i];
    out.tokens[i].deprel = labels[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Vocabulary

const std::vector<std::string>& Vocabulary::reserved_symbols() {
  static const std::vector<std::string> symbols{"<ROOT>", "<CLS>", "<SEP>", "<PAD>", "<UNK>", "<NULL>"};
  return symbols;
}

int Vocabulary::form_id(const std::string& form) const {
  auto it = form_ids_.find(form);
  return it == form_ids_.end() ? kUnk : it->second;
}

int Vocabulary::upos_id(const std::string& upos) const {
  auto it = upos_ids_.find(upos);
  return it == upos_ids_.end() ? kUnk : it->second;
}

int Vocabulary::deprel_id(const std::string& deprel) const {
  auto it = deprel_ids_.find(deprel);
  return it == deprel_ids_.end() ? -1 : it->second;
}

void Vocabulary::index() {
  form_ids_.clear();
  upos_ids_.clear();
  deprel_ids_.clear();
  for (std::size_t i = 0; i < forms_.size(); ++i) form_ids_.emplace(forms_[i], static_cast<int>(i));
  for (std::size_t i = 0; i < upos_.size(); ++i) upos_ids_.emplace(upos_[i], static_cast<int>(i));
  for (std::size_t i = 0; i < deprels_.size(); ++i) deprel_ids_.emplace(deprels_[i], static_cast<int>(i));
}

namespace {

// Frequency descending, then lexicographic.
std::vector<std::string> ranked(const std::unordered_map<std::string, int>& counts, int min_freq) {
  std::vector<std::pair<std::string, int>> items;
  for (const auto& [k, v] : counts) {
    if (v >= min_freq) items.emplace_back(k, v);
  }
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> out;
  out.reserve(items.size());
  for (auto& it : items) out.push_back(std::move(it.first));
  return out;
}

}  // namespace

Vocabulary build_vocab(const std::vector<AnnotatedSentence>& sentences, int min_freq) {
  if (min_freq < 1) throw std::invalid_argument("min_freq must be >= 1");
  std::unordered_map<std::string, int> forms, upos, deprels;
  for (const auto& s : sentences) {
    for (const auto& t : s.tokens) {
      ++forms[t.form];
      ++upos[t.upos];
      ++deprels[t.deprel];
    }
  }
  Vocabulary v;
  v.forms_ = Vocabulary::reserved_symbols();
  v.upos_ = Vocabulary::reserved_symbols();
  for (auto& f : ranked(forms, min_freq)) v.forms_.push_back(std::move(f));
  for (auto& p : ranked(upos, 1)) v.upos_.push_back(std::move(p));
  v.deprels_ = ranked(deprels, 1);
  // Surface strings that collide with a reserved symbol keep the reserved id.
  auto dedupe = [](std::vector<std::string>& list) {
    std::vector<std::string> out;
    std::map<std::string, int, std::less<>> seen;
    for (auto& s : list) {
      if (seen.emplace(s, 0).second) out.push_back(std::move(s));
    }
    list = std::move(out);
  };
  dedupe(v.forms_);
  dedupe(v.upos_);
  v.index();
  return v;
}

std::string Vocabulary::serialize() const {
  std::string out;
  auto section = [&](const char* title, const std::vector<std::string>& items) {
    out += title;
    out += '\n';
    for (std::size_t i = 0; i < items.size(); ++i) {
      out += items[i];
      out += '\t';
      out += std::to_string(i);
      out += '\n';
    }
  };
  section("[forms]", forms_);
  section("[upos]", upos_);
  section("[deprels]", deprels_);
  return out;
}

Vocabulary Vocabulary::deserialize(std::string_view text) {
  Vocabulary v;
  std::vector<std::string>* target = nullptr;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (line.empty()) continue;
    std::size_t tab = line.rfind('\t');
    if (tab == std::string_view::npos) {
      if (line == "[forms]") target = &v.forms_;
      else if (line == "[upos]") target = &v.upos_;
      else if (line == "[deprels]") target = &v.deprels_;
      else throw ParseError("<vocabulary>", line_no, "unknown section '" + std::string(line) + "'");
      continue;
    }
    int id = -1;
    if (target == nullptr || !parse_int(line.substr(tab + 1), id) || id != static_cast<int>(target->size())) {
      throw ParseError("<vocabulary>", line_no, "bad vocabulary entry");
    }
    target->emplace_back(line.substr(0, tab));
  }
  if (v.forms_.size() < kReserved || v.upos_.size() < kReserved) {
    throw ParseError("<vocabulary>", line_no, "missing reserved symbols");
  }
  v.index();
  return v;
}

void Vocabulary::save(const std::string& path) const { write_file(path, serialize()); }

Vocabulary Vocabulary::load(const std::string& path) { return deserialize(read_file(path)); }

}  // namespace g2g

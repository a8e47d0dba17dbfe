#pragma once

#include <cstddef>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace g2g {

// Thrown for lines that are not well-formed CoNLL-U.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : std::runtime_error(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A file could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown for sentences whose heads do not form a single-rooted tree.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// How punctuation tokens are recognised.
enum class PunctRule {
  Upos,    // UD style: upos == "PUNCT"
  Deprel,  // Stanford style: deprel == "punct"
};

struct TokenRecord {
  int id = 0;    // 1-based
  std::string form;
  std::string lemma = "_";
  std::string upos;
  std::string xpos = "_";
  std::string feats = "_";
  int head = 0;  // 0 = ROOT
  std::string deprel;
  std::string deps = "_";
  std::string misc = "_";
  bool is_punct = false;
};

struct AnnotatedSentence {
  std::vector<std::string> comments;  // verbatim, including the leading '#'
  std::vector<TokenRecord> tokens;

  std::size_t size() const { return tokens.size(); }
  // Head of token i (1-based); head(0) is undefined.
  int head(int i) const { return tokens[static_cast<std::size_t>(i - 1)].head; }
  const std::string& deprel(int i) const { return tokens[static_cast<std::size_t>(i - 1)].deprel; }
  // Short identifier used in error messages: the sent_id comment or the ordinal.
  std::string name(std::size_t ordinal) const;
};

bool is_punctuation(const TokenRecord& token, PunctRule rule);
void flag_punctuation(AnnotatedSentence& sentence, PunctRule rule);

// Checks that heads form one tree rooted at 0 with exactly one root attachment.
void validate_tree(const AnnotatedSentence& sentence, const std::string& name);

std::vector<AnnotatedSentence> parse_conllu(std::string_view text, const std::string& source = "<memory>",
                                            PunctRule rule = PunctRule::Upos);
std::vector<AnnotatedSentence> read_conllu(const std::string& path, PunctRule rule = PunctRule::Upos);

std::string format_conllu(const std::vector<AnnotatedSentence>& sentences);
void write_conllu(const std::vector<AnnotatedSentence>& sentences, const std::string& path);

// Copies of `gold` with heads and labels taken from `heads`/`labels` (one entry per token).
AnnotatedSentence with_predicted_tree(const AnnotatedSentence& gold, const std::vector<int>& heads,
                                      const std::vector<std::string>& labels);

// Symbol table with deterministic ids. Forms and PoS tags share the reserved prefix.
class Vocabulary {
 public:
  static constexpr int kRoot = 0;
  static constexpr int kCls = 1;
  static constexpr int kSep = 2;
  static constexpr int kPad = 3;
  static constexpr int kUnk = 4;
  static constexpr int kNull = 5;
  static constexpr int kReserved = 6;
  static const std::vector<std::string>& reserved_symbols();

  int form_id(const std::string& form) const;
  int upos_id(const std::string& upos) const;
  // Returns -1 for unknown labels.
  int deprel_id(const std::string& deprel) const;
  const std::string& deprel_name(int id) const { return deprels_.at(static_cast<std::size_t>(id)); }

  std::size_t form_count() const { return forms_.size(); }
  std::size_t upos_count() const { return upos_.size(); }
  std::size_t deprel_count() const { return deprels_.size(); }
  const std::vector<std::string>& forms() const { return forms_; }
  const std::vector<std::string>& upos_tags() const { return upos_; }
  const std::vector<std::string>& deprels() const { return deprels_; }

  std::string serialize() const;
  static Vocabulary deserialize(std::string_view text);
  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

  friend Vocabulary build_vocab(const std::vector<AnnotatedSentence>& sentences, int min_freq);
  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;

 private:
  void index();

  std::vector<std::string> forms_;
  std::vector<std::string> upos_;
  std::vector<std::string> deprels_;
  std::map<std::string, int, std::less<>> form_ids_;
  std::map<std::string, int, std::less<>> upos_ids_;
  std::map<std::string, int, std::less<>> deprel_ids_;
};

Vocabulary build_vocab(const std::vector<AnnotatedSentence>& sentences, int min_freq = 2);

}  // namespace g2g

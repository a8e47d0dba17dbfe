#pragma once

// Attachment scores and error analysis over gold/predicted treebanks.
//
// Punctuation is identified when the treebank is read (TokenRecord::is_punct,
// set from the gold side). In Exclude mode those tokens leave every
// population: the UAS/LAS denominators and all bins alike.

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "g2g/treebank.hpp"

namespace g2g {

enum class PunctuationMode { Include, Exclude };

struct EvalConfig {
  PunctuationMode punctuation = PunctuationMode::Include;
};

// Gold and predicted corpora do not line up.
class AlignmentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Scores {
  std::size_t scored = 0;
  std::size_t head_correct = 0;
  std::size_t labelled_correct = 0;
  double uas = 0.0;  // percent
  double las = 0.0;
};

Scores score(const std::vector<AnnotatedSentence>& gold, const std::vector<AnnotatedSentence>& predicted,
             const EvalConfig& cfg = {});

// Labelled precision/recall in one bin. A scored token contributes its gold arc
// to the bin of the gold tree and its predicted arc to the bin of the predicted
// tree; "correct" means head and label both match gold.
struct BinStat {
  std::string name;
  std::size_t gold = 0;
  std::size_t predicted = 0;
  std::size_t correct_gold = 0;       // gold arcs in this bin predicted correctly
  std::size_t correct_predicted = 0;  // predicted arcs in this bin that are correct

  double precision() const;  // percent, 0 for an empty bin
  double recall() const;
  double f_score() const;    // harmonic mean, 0 when both are 0
};

// Bins "ROOT", "1".."9", ">=10".
std::vector<BinStat> bin_dependency_length(const std::vector<AnnotatedSentence>& gold,
                                           const std::vector<AnnotatedSentence>& predicted,
                                           const EvalConfig& cfg = {});
// Root attachments go to "ROOT"; otherwise the number of arcs from the token to
// the root word, measured on each side's own tree.
std::vector<BinStat> bin_root_distance(const std::vector<AnnotatedSentence>& gold,
                                       const std::vector<AnnotatedSentence>& predicted,
                                       const EvalConfig& cfg = {});

// Arc-length or distance bin index: 0 = ROOT, 1..9, 10 = ">=10".
std::size_t distance_bin(int distance);
const std::vector<std::string>& distance_bin_names();

// Depth of every token (index 1..n) in a head vector: children of the root word have depth 1.
// Root attachments and index 0 get 0.
std::vector<int> root_distances(const std::vector<int>& heads);

struct LengthBin {
  std::string name;
  std::size_t sentences = 0;
  std::size_t scored = 0;
  std::size_t correct = 0;  // labelled
  double las() const;
};

// Sentences binned by token count: 1-9, 10-19, 20-29, 30-39, 40-49, >=50.
std::vector<LengthBin> bin_sentence_length(const std::vector<AnnotatedSentence>& gold,
                                           const std::vector<AnnotatedSentence>& predicted,
                                           const EvalConfig& cfg = {});

struct DeprelRow {
  BinStat stat;  // name = label
  std::optional<double> reference_f;
  std::optional<double> rer;  // relative error reduction of this system over the reference
};

// One row per label seen in gold or predicted, sorted by label. With a
// reference parse of the same gold, rows carry the reference F-score and the
// RER between the two and are ranked by RER, most negative first.
std::vector<DeprelRow> deprel_table(const std::vector<AnnotatedSentence>& gold,
                                    const std::vector<AnnotatedSentence>& predicted, const EvalConfig& cfg = {},
                                    const std::vector<AnnotatedSentence>* reference = nullptr);

struct ErrorReport {
  Scores overall;
  std::vector<BinStat> dependency_length;
  std::vector<BinStat> root_distance;
  std::vector<LengthBin> sentence_length;
  std::vector<DeprelRow> deprels;
};

ErrorReport analyze(const std::vector<AnnotatedSentence>& gold, const std::vector<AnnotatedSentence>& predicted,
                    const EvalConfig& cfg = {}, const std::vector<AnnotatedSentence>* reference = nullptr);

std::string format_report_text(const ErrorReport& report);
// Rows of "table<TAB>bin<TAB>..." with a header line per table.
std::string format_report_tsv(const ErrorReport& report);

// (new - old) / (100 - old) * 100. Throws std::domain_error when old is 100.
double relative_error_reduction(double old_score, double new_score);

}  // namespace g2g

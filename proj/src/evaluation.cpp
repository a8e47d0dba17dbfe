#include "g2g/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace g2g {

namespace {

double percent(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

void check_alignment(const std::vector<AnnotatedSentence>& gold, const std::vector<AnnotatedSentence>& predicted) {
  if (gold.size() != predicted.size()) {
    throw AlignmentError("gold has " + std::to_string(gold.size()) + " sentences, prediction has " +
                         std::to_string(predicted.size()));
  }
  for (std::size_t s = 0; s < gold.size(); ++s) {
    if (gold[s].size() != predicted[s].size()) {
      throw AlignmentError("sentence " + gold[s].name(s + 1) + ": gold has " + std::to_string(gold[s].size()) +
                           " tokens, prediction has " + std::to_string(predicted[s].size()));
    }
    for (std::size_t i = 0; i < gold[s].size(); ++i) {
      if (gold[s].tokens[i].form != predicted[s].tokens[i].form) {
        throw AlignmentError("sentence " + gold[s].name(s + 1) + ": token " + std::to_string(i + 1) + " is '" +
                             gold[s].tokens[i].form + "' in gold but '" + predicted[s].tokens[i].form +
                             "' in prediction");
      }
    }
  }
}

bool scored(const TokenRecord& gold_token, const EvalConfig& cfg) {
  return cfg.punctuation == PunctuationMode::Include || !gold_token.is_punct;
}

std::vector<int> heads_of(const AnnotatedSentence& s) {
  std::vector<int> heads(s.size() + 1, 0);
  for (std::size_t i = 0; i < s.size(); ++i) heads[i + 1] = s.tokens[i].head;
  return heads;
}

bool labelled_match(const TokenRecord& g, const TokenRecord& p) { return g.head == p.head && g.deprel == p.deprel; }

// Shared driver for the arc-level bin schemes: `bins_of(heads)` gives the bin
// of every token of one tree (index 0 unused).
template <typename BinsOf>
std::vector<BinStat> bin_arcs(const std::vector<AnnotatedSentence>& gold,
                              const std::vector<AnnotatedSentence>& predicted, const EvalConfig& cfg,
                              const std::vector<std::string>& names, BinsOf bins_of) {
  check_alignment(gold, predicted);
  std::vector<BinStat> bins(names.size());
  for (std::size_t b = 0; b < names.size(); ++b) bins[b].name = names[b];
  for (std::size_t s = 0; s < gold.size(); ++s) {
    const std::vector<std::size_t> gold_bins = bins_of(heads_of(gold[s]));
    const std::vector<std::size_t> pred_bins = bins_of(heads_of(predicted[s]));
    for (std::size_t i = 0; i < gold[s].size(); ++i) {
      const auto& g = gold[s].tokens[i];
      const auto& p = predicted[s].tokens[i];
      if (!scored(g, cfg)) continue;
      const bool correct = labelled_match(g, p);
      auto& gb = bins[gold_bins[i + 1]];
      auto& pb = bins[pred_bins[i + 1]];
      ++gb.gold;
      ++pb.predicted;
      if (correct) {
        ++gb.correct_gold;
        ++pb.correct_predicted;
      }
    }
  }
  return bins;
}

}  // namespace

Scores score(const std::vector<AnnotatedSentence>& gold, const std::vector<AnnotatedSentence>& predicted,
             const EvalConfig& cfg) {
  check_alignment(gold, predicted);
  Scores out;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    for (std::size_t i = 0; i < gold[s].size(); ++i) {
      const auto& g = gold[s].tokens[i];
      const auto& p = predicted[s].tokens[i];
      if (!scored(g, cfg)) continue;
      ++out.scored;
      if (g.head == p.head) {
        ++out.head_correct;
        if (g.deprel == p.deprel) ++out.labelled_correct;
      }
    }
  }
  out.uas = percent(out.head_correct, out.scored);
  out.las = percent(out.labelled_correct, out.scored);
  return out;
}

double BinStat::precision() const { return percent(correct_predicted, predicted); }
double BinStat::recall() const { return percent(correct_gold, gold); }
double BinStat::f_score() const {
  const double p = precision(), r = recall();
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

std::size_t distance_bin(int distance) {
  if (distance <= 0) return 0;
  return static_cast<std::size_t>(std::min(distance, 10));
}

const std::vector<std::string>& distance_bin_names() {
  static const std::vector<std::string> names{"ROOT", "1", "2", "3", "4", "5", "6", "7", "8", "9", ">=10"};
  return names;
}

std::vector<int> root_distances(const std::vector<int>& heads) {
  const std::size_t n = heads.size();
  std::vector<int> depth(n, -1);
  if (n > 0) depth[0] = 0;
  for (std::size_t i = 1; i < n; ++i) {
    // Walk up until a token of known depth, then unwind.
    std::vector<std::size_t> path;
    std::size_t t = i;
    while (depth[t] < 0) {
      path.push_back(t);
      if (path.size() > n) throw std::invalid_argument("head vector contains a cycle");
      const int h = heads[t];
      if (h < 0 || static_cast<std::size_t>(h) >= n) throw std::invalid_argument("head out of range");
      if (h == 0) {
        depth[t] = 0;
        path.pop_back();
        break;
      }
      t = static_cast<std::size_t>(h);
    }
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
      depth[*it] = depth[static_cast<std::size_t>(heads[*it])] + 1;
    }
  }
  return depth;
}

std::vector<BinStat> bin_dependency_length(const std::vector<AnnotatedSentence>& gold,
                                           const std::vector<AnnotatedSentence>& predicted, const EvalConfig& cfg) {
  return bin_arcs(gold, predicted, cfg, distance_bin_names(), [](const std::vector<int>& heads) {
    std::vector<std::size_t> bins(heads.size(), 0);
    for (std::size_t i = 1; i < heads.size(); ++i) {
      bins[i] = heads[i] == 0 ? 0 : distance_bin(std::abs(heads[i] - static_cast<int>(i)));
    }
    return bins;
  });
}

std::vector<BinStat> bin_root_distance(const std::vector<AnnotatedSentence>& gold,
                                       const std::vector<AnnotatedSentence>& predicted, const EvalConfig& cfg) {
  return bin_arcs(gold, predicted, cfg, distance_bin_names(), [](const std::vector<int>& heads) {
    const auto depth = root_distances(heads);
    std::vector<std::size_t> bins(heads.size(), 0);
    for (std::size_t i = 1; i < heads.size(); ++i) bins[i] = distance_bin(depth[i]);
    return bins;
  });
}

double LengthBin::las() const { return percent(correct, scored); }

std::vector<LengthBin> bin_sentence_length(const std::vector<AnnotatedSentence>& gold,
                                           const std::vector<AnnotatedSentence>& predicted, const EvalConfig& cfg) {
  check_alignment(gold, predicted);
  std::vector<LengthBin> bins{{"1-9"}, {"10-19"}, {"20-29"}, {"30-39"}, {"40-49"}, {">=50"}};
  for (std::size_t s = 0; s < gold.size(); ++s) {
    if (gold[s].size() == 0) continue;
    auto& bin = bins[std::min<std::size_t>(gold[s].size() / 10, 5)];
    ++bin.sentences;
    for (std::size_t i = 0; i < gold[s].size(); ++i) {
      const auto& g = gold[s].tokens[i];
      if (!scored(g, cfg)) continue;
      ++bin.scored;
      if (labelled_match(g, predicted[s].tokens[i])) ++bin.correct;
    }
  }
  return bins;
}

namespace {

std::map<std::string, BinStat> per_label(const std::vector<AnnotatedSentence>& gold,
                                         const std::vector<AnnotatedSentence>& predicted, const EvalConfig& cfg) {
  check_alignment(gold, predicted);
  std::map<std::string, BinStat> rows;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    for (std::size_t i = 0; i < gold[s].size(); ++i) {
      const auto& g = gold[s].tokens[i];
      const auto& p = predicted[s].tokens[i];
      if (!scored(g, cfg)) continue;
      const bool correct = labelled_match(g, p);
      auto& gr = rows[g.deprel];
      auto& pr = rows[p.deprel];
      ++gr.gold;
      ++pr.predicted;
      if (correct) {
        ++gr.correct_gold;
        ++pr.correct_predicted;
      }
    }
  }
  for (auto& [label, row] : rows) row.name = label;
  return rows;
}

}  // namespace

std::vector<DeprelRow> deprel_table(const std::vector<AnnotatedSentence>& gold,
                                    const std::vector<AnnotatedSentence>& predicted, const EvalConfig& cfg,
                                    const std::vector<AnnotatedSentence>* reference) {
  const auto rows = per_label(gold, predicted, cfg);
  std::map<std::string, BinStat> ref_rows;
  if (reference) ref_rows = per_label(gold, *reference, cfg);

  std::vector<DeprelRow> out;
  for (const auto& [label, stat] : rows) {
    DeprelRow row{stat, std::nullopt, std::nullopt};
    if (reference) {
      auto it = ref_rows.find(label);
      const double ref_f = it == ref_rows.end() ? 0.0 : it->second.f_score();
      row.reference_f = ref_f;
      if (ref_f < 100.0) row.rer = relative_error_reduction(ref_f, stat.f_score());
    }
    out.push_back(std::move(row));
  }
  if (reference) {
    // Labels only the reference produced still belong in a comparison.
    for (const auto& [label, stat] : ref_rows) {
      if (rows.count(label)) continue;
      BinStat empty;
      empty.name = label;
      out.push_back({empty, stat.f_score(),
                     stat.f_score() < 100.0 ? std::optional<double>(relative_error_reduction(stat.f_score(), 0.0))
                                            : std::nullopt});
    }
    std::stable_sort(out.begin(), out.end(), [](const DeprelRow& a, const DeprelRow& b) {
      const double ra = a.rer.value_or(0.0), rb = b.rer.value_or(0.0);
      if (ra != rb) return ra < rb;
      return a.stat.name < b.stat.name;
    });
  }
  return out;
}

ErrorReport analyze(const std::vector<AnnotatedSentence>& gold, const std::vector<AnnotatedSentence>& predicted,
                    const EvalConfig& cfg, const std::vector<AnnotatedSentence>* reference) {
  ErrorReport r;
  r.overall = score(gold, predicted, cfg);
  r.dependency_length = bin_dependency_length(gold, predicted, cfg);
  r.root_distance = bin_root_distance(gold, predicted, cfg);
  r.sentence_length = bin_sentence_length(gold, predicted, cfg);
  r.deprels = deprel_table(gold, predicted, cfg, reference);
  return r;
}

namespace {

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

void text_bins(std::ostringstream& out, const std::string& title, const std::vector<BinStat>& bins) {
  out << title << "\n";
  out << pad("bin", 8) << pad("gold", 8) << pad("pred", 8) << pad("P", 8) << pad("R", 8) << "F\n";
  for (const auto& b : bins) {
    out << pad(b.name, 8) << pad(std::to_string(b.gold), 8) << pad(std::to_string(b.predicted), 8)
        << pad(fixed2(b.precision()), 8) << pad(fixed2(b.recall()), 8) << fixed2(b.f_score()) << "\n";
  }
  out << "\n";
}

void tsv_bins(std::ostringstream& out, const std::string& table, const std::vector<BinStat>& bins) {
  for (const auto& b : bins) {
    out << table << "\t" << b.name << "\t" << b.gold << "\t" << b.predicted << "\t" << b.correct_gold << "\t"
        << b.correct_predicted << "\t" << fixed2(b.precision()) << "\t" << fixed2(b.recall()) << "\t"
        << fixed2(b.f_score()) << "\n";
  }
}

}  // namespace

std::string format_report_text(const ErrorReport& report) {
  std::ostringstream out;
  out << "UAS " << fixed2(report.overall.uas) << "  LAS " << fixed2(report.overall.las) << "  scored tokens "
      << report.overall.scored << "\n\n";
  text_bins(out, "Labelled F-score vs dependency length", report.dependency_length);
  text_bins(out, "Labelled F-score vs distance to root", report.root_distance);

  out << "LAS vs sentence length\n";
  out << pad("bin", 8) << pad("sents", 8) << pad("tokens", 8) << "LAS\n";
  for (const auto& b : report.sentence_length) {
    out << pad(b.name, 8) << pad(std::to_string(b.sentences), 8) << pad(std::to_string(b.scored), 8)
        << fixed2(b.las()) << "\n";
  }
  out << "\n";

  out << "Labelled F-score by dependency type\n";
  std::size_t width = 8;
  for (const auto& r : report.deprels) width = std::max(width, r.stat.name.size() + 2);
  const bool compare = !report.deprels.empty() && report.deprels.front().reference_f.has_value();
  out << pad("label", width) << pad("gold", 8) << pad("pred", 8) << "F";
  if (compare) out << "       ref F   RER";
  out << "\n";
  for (const auto& r : report.deprels) {
    out << pad(r.stat.name, width) << pad(std::to_string(r.stat.gold), 8) << pad(std::to_string(r.stat.predicted), 8)
        << (compare ? pad(fixed2(r.stat.f_score()), 12) : fixed2(r.stat.f_score()));
    if (compare) {
      out << pad(fixed2(*r.reference_f), 8) << (r.rer ? fixed2(*r.rer) + "%" : std::string("-"));
    }
    out << "\n";
  }
  return out.str();
}

std::string format_report_tsv(const ErrorReport& report) {
  std::ostringstream out;
  out << "table\tbin\tgold\tpredicted\tcorrect_gold\tcorrect_predicted\tprecision\trecall\tf\n";
  out << "overall\tall\t" << report.overall.scored << "\t" << report.overall.scored << "\t"
      << report.overall.labelled_correct << "\t" << report.overall.labelled_correct << "\t"
      << fixed2(report.overall.uas) << "\t" << fixed2(report.overall.las) << "\t" << fixed2(report.overall.las) << "\n";
  tsv_bins(out, "dependency_length", report.dependency_length);
  tsv_bins(out, "root_distance", report.root_distance);
  std::vector<BinStat> deprel_stats;
  for (const auto& r : report.deprels) deprel_stats.push_back(r.stat);
  tsv_bins(out, "deprel", deprel_stats);
  out << "\ntable\tbin\tsentences\ttokens\tcorrect\tlas\n";
  for (const auto& b : report.sentence_length) {
    out << "sentence_length\t" << b.name << "\t" << b.sentences << "\t" << b.scored << "\t" << b.correct << "\t"
        << fixed2(b.las()) << "\n";
  }
  if (!report.deprels.empty() && report.deprels.front().reference_f) {
    out << "\ntable\tlabel\tf\treference_f\trer\n";
    for (const auto& r : report.deprels) {
      out << "deprel_rer\t" << r.stat.name << "\t" << fixed2(r.stat.f_score()) << "\t" << fixed2(*r.reference_f) << "\t"
          << (r.rer ? fixed2(*r.rer) : std::string("NA")) << "\n";
    }
  }
  return out.str();
}

double relative_error_reduction(double old_score, double new_score) {
  if (old_score < 0.0 || old_score > 100.0 || new_score < 0.0 || new_score > 100.0) {
    throw std::domain_error("scores must lie in [0, 100]");
  }
  if (old_score == 100.0) throw std::domain_error("relative error reduction is undefined when the old score is 100");
  return (new_score - old_score) / (100.0 - old_score) * 100.0;
}

}  // namespace g2g

#include <gtest/gtest.h>

#include <random>

#include "g2g/evaluation.hpp"
#include "oracles.hpp"

using namespace g2g;

namespace {

const std::vector<std::string> kLabels{"nsubj", "obj", "det", "amod", "punct"};

AnnotatedSentence hand_gold() {
  return parse_conllu(
      "1\tthe\tthe\tDET\t_\t_\t2\tdet\t_\t_\n"
      "2\tdog\tdog\tNOUN\t_\t_\t3\tnsubj\t_\t_\n"
      "3\tbarks\tbark\tVERB\t_\t_\t0\troot\t_\t_\n"
      "4\t.\t.\tPUNCT\t_\t_\t3\tpunct\t_\t_\n\n")[0];
}

AnnotatedSentence hand_pred() {
  // token 1 wrong head, token 2 wrong label, token 4 wrong head
  return with_predicted_tree(hand_gold(), {3, 3, 0, 2}, {"det", "obj", "root", "punct"});
}

// Random prediction for a gold sentence: some heads and labels perturbed,
// predicted tree still a tree.
AnnotatedSentence perturb(const AnnotatedSentence& gold, std::mt19937_64& rng) {
  const int n = static_cast<int>(gold.size());
  std::vector<int> heads;
  std::vector<std::string> labels;
  const bool new_tree = rng() % 2 == 0;
  const auto fresh = oracle::random_tree(rng, n, rng() % 2 == 0);
  for (int i = 1; i <= n; ++i) {
    heads.push_back(new_tree ? fresh[static_cast<std::size_t>(i)] : gold.head(i));
    const bool relabel = rng() % 4 == 0;
    labels.push_back(relabel ? kLabels[rng() % kLabels.size()] : gold.deprel(i));
  }
  return with_predicted_tree(gold, heads, labels);
}

void random_pair(std::mt19937_64& rng, std::vector<AnnotatedSentence>& gold, std::vector<AnnotatedSentence>& pred) {
  const int sentences = 1 + static_cast<int>(rng() % 6);
  for (int s = 0; s < sentences; ++s) {
    const int n = 1 + static_cast<int>(rng() % 25);
    gold.push_back(oracle::make_sentence(oracle::random_tree(rng, n, rng() % 2 == 0), kLabels, rng, 0.15));
    pred.push_back(perturb(gold.back(), rng));
  }
}

std::vector<int> heads_of(const AnnotatedSentence& s) {
  std::vector<int> h{-1};
  for (const auto& t : s.tokens) h.push_back(t.head);
  return h;
}

}  // namespace

TEST(Score, HandExample) {
  const std::vector<AnnotatedSentence> gold{hand_gold()}, pred{hand_pred()};
  const Scores inc = score(gold, pred);
  EXPECT_EQ(inc.scored, 4u);
  EXPECT_DOUBLE_EQ(inc.uas, 50.0);
  EXPECT_DOUBLE_EQ(inc.las, 25.0);
  const Scores exc = score(gold, pred, {PunctuationMode::Exclude});
  EXPECT_EQ(exc.scored, 3u);
  EXPECT_NEAR(exc.uas, 200.0 / 3.0, 1e-12);
  EXPECT_NEAR(exc.las, 100.0 / 3.0, 1e-12);
}

TEST(Score, IdenticalCorporaScorePerfect) {
  const std::vector<AnnotatedSentence> gold{hand_gold()};
  const Scores s = score(gold, gold);
  EXPECT_DOUBLE_EQ(s.uas, 100.0);
  EXPECT_DOUBLE_EQ(s.las, 100.0);
}

TEST(Score, MisalignedCorporaAreRejected) {
  const std::vector<AnnotatedSentence> gold{hand_gold()};
  EXPECT_THROW(score(gold, {}), AlignmentError);
  AnnotatedSentence shorter = hand_gold();
  shorter.tokens.pop_back();
  EXPECT_THROW(score(gold, {shorter}), AlignmentError);
  AnnotatedSentence renamed = hand_gold();
  renamed.tokens[1].form = "cat";
  EXPECT_THROW(score(gold, {renamed}), AlignmentError);
}

TEST(Score, MatchesNaiveDoubleLoop) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<AnnotatedSentence> gold, pred;
    random_pair(rng, gold, pred);
    for (bool exclude : {false, true}) {
      const auto naive = oracle::naive_score(gold, pred, exclude);
      const Scores s = score(gold, pred, {exclude ? PunctuationMode::Exclude : PunctuationMode::Include});
      ASSERT_EQ(s.scored, naive.total);
      ASSERT_EQ(s.head_correct, naive.heads);
      ASSERT_EQ(s.labelled_correct, naive.labelled);
      ASSERT_LE(s.las, s.uas);
      if (naive.total > 0) {
        ASSERT_DOUBLE_EQ(s.uas, 100.0 * static_cast<double>(naive.heads) / static_cast<double>(naive.total));
      }
    }
  }
}

TEST(Bins, DistanceBinBoundaries) {
  EXPECT_EQ(distance_bin(0), 0u);
  EXPECT_EQ(distance_bin(1), 1u);
  EXPECT_EQ(distance_bin(9), 9u);
  EXPECT_EQ(distance_bin(10), 10u);
  EXPECT_EQ(distance_bin(57), 10u);
  EXPECT_EQ(distance_bin_names().size(), 11u);
}

TEST(Bins, HandExampleDependencyLength) {
  const auto bins = bin_dependency_length({hand_gold()}, {hand_pred()});
  EXPECT_EQ(bins[0].gold, 1u);
  EXPECT_EQ(bins[0].correct_gold, 1u);
  EXPECT_EQ(bins[1].gold, 3u);
  EXPECT_EQ(bins[1].predicted, 1u);
  EXPECT_EQ(bins[1].correct_gold, 0u);
  EXPECT_EQ(bins[2].gold, 0u);
  EXPECT_EQ(bins[2].predicted, 2u);
  EXPECT_DOUBLE_EQ(bins[0].f_score(), 100.0);
  EXPECT_DOUBLE_EQ(bins[1].f_score(), 0.0);
}

TEST(Bins, HandExampleRootDistance) {
  const auto bins = bin_root_distance({hand_gold()}, {hand_pred()});
  EXPECT_EQ(bins[0].gold, 1u);
  EXPECT_EQ(bins[0].predicted, 1u);
  EXPECT_EQ(bins[1].gold, 2u);       // dog, .
  EXPECT_EQ(bins[1].predicted, 2u);  // the, dog
  EXPECT_EQ(bins[2].gold, 1u);       // the
  EXPECT_EQ(bins[2].predicted, 1u);  // .
  EXPECT_EQ(bins[1].correct_gold + bins[2].correct_gold, 0u);
}

TEST(Bins, RootDistanceMatchesBreadthFirstDepth) {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 30);
    const auto heads = oracle::random_tree(rng, n, trial % 2 == 0);
    const auto depth = oracle::bfs_depth(heads);
    const auto got = root_distances(heads);
    for (int t = 1; t <= n; ++t) EXPECT_EQ(got[static_cast<std::size_t>(t)], depth[static_cast<std::size_t>(t)] - 1);
  }
}

TEST(Bins, CountsAreConservedAndConsistent) {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<AnnotatedSentence> gold, pred;
    random_pair(rng, gold, pred);
    for (auto mode : {PunctuationMode::Include, PunctuationMode::Exclude}) {
      const Scores s = score(gold, pred, {mode});
      for (const auto& bins : {bin_dependency_length(gold, pred, {mode}), bin_root_distance(gold, pred, {mode})}) {
        std::size_t g = 0, p = 0, cg = 0, cp = 0;
        for (const auto& b : bins) {
          g += b.gold;
          p += b.predicted;
          cg += b.correct_gold;
          cp += b.correct_predicted;
          ASSERT_LE(b.correct_gold, b.gold);
          ASSERT_LE(b.correct_predicted, b.predicted);
        }
        ASSERT_EQ(g, s.scored);
        ASSERT_EQ(p, s.scored);
        ASSERT_EQ(cg, s.labelled_correct);
        ASSERT_EQ(cp, s.labelled_correct);
      }
      // a correct arc has the same length on both sides
      for (const auto& b : bin_dependency_length(gold, pred, {mode})) ASSERT_EQ(b.correct_gold, b.correct_predicted);
    }
  }
}

TEST(Bins, RootDistanceCountsFromEachSidesOwnTree) {
  std::mt19937_64 rng(34);
  std::vector<AnnotatedSentence> gold, pred;
  random_pair(rng, gold, pred);
  std::vector<std::size_t> g(11, 0), p(11, 0);
  for (std::size_t s = 0; s < gold.size(); ++s) {
    const auto gd = oracle::bfs_depth(heads_of(gold[s]));
    const auto pd = oracle::bfs_depth(heads_of(pred[s]));
    for (std::size_t t = 1; t < gd.size(); ++t) {
      ++g[distance_bin(gd[t] - 1)];
      ++p[distance_bin(pd[t] - 1)];
    }
  }
  const auto bins = bin_root_distance(gold, pred);
  for (std::size_t b = 0; b < 11; ++b) {
    EXPECT_EQ(bins[b].gold, g[b]);
    EXPECT_EQ(bins[b].predicted, p[b]);
  }
}

TEST(Bins, SentenceLength) {
  std::mt19937_64 rng(35);
  std::vector<AnnotatedSentence> gold;
  for (int n : {3, 9, 10, 25, 60}) gold.push_back(oracle::make_sentence(oracle::random_tree(rng, n, true), kLabels, rng));
  const auto bins = bin_sentence_length(gold, gold);
  ASSERT_EQ(bins.size(), 6u);
  EXPECT_EQ(bins[0].sentences, 2u);
  EXPECT_EQ(bins[0].scored, 12u);
  EXPECT_EQ(bins[1].sentences, 1u);
  EXPECT_EQ(bins[2].sentences, 1u);
  EXPECT_EQ(bins[3].sentences, 0u);
  EXPECT_EQ(bins[5].sentences, 1u);
  EXPECT_DOUBLE_EQ(bins[5].las(), 100.0);
  EXPECT_DOUBLE_EQ(bins[3].las(), 0.0);
}

TEST(Deprel, PrecisionRecallRecomputed) {
  std::mt19937_64 rng(36);
  std::vector<AnnotatedSentence> gold, pred;
  for (int k = 0; k < 5; ++k) random_pair(rng, gold, pred);
  const auto rows = deprel_table(gold, pred);
  for (const auto& row : rows) {
    std::size_t g = 0, p = 0, c = 0;
    for (std::size_t s = 0; s < gold.size(); ++s) {
      for (std::size_t i = 0; i < gold[s].tokens.size(); ++i) {
        const auto& gt = gold[s].tokens[i];
        const auto& pt = pred[s].tokens[i];
        g += gt.deprel == row.stat.name;
        p += pt.deprel == row.stat.name;
        c += gt.deprel == row.stat.name && pt.deprel == gt.deprel && pt.head == gt.head;
      }
    }
    EXPECT_EQ(row.stat.gold, g) << row.stat.name;
    EXPECT_EQ(row.stat.predicted, p);
    EXPECT_EQ(row.stat.correct_gold, c);
    if (p > 0) EXPECT_NEAR(row.stat.precision(), 100.0 * static_cast<double>(c) / static_cast<double>(p), 1e-12);
    if (g > 0) EXPECT_NEAR(row.stat.recall(), 100.0 * static_cast<double>(c) / static_cast<double>(g), 1e-12);
    EXPECT_FALSE(row.rer.has_value());
  }
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LT(rows[i - 1].stat.name, rows[i].stat.name);
}

TEST(Deprel, ReferenceColumnAndRanking) {
  std::mt19937_64 rng(37);
  std::vector<AnnotatedSentence> gold, pred, ref;
  for (int k = 0; k < 5; ++k) random_pair(rng, gold, pred);
  for (const auto& g : gold) ref.push_back(perturb(g, rng));
  const auto rows = deprel_table(gold, pred, {}, &ref);
  const auto ref_rows = deprel_table(gold, ref);
  for (const auto& row : rows) {
    ASSERT_TRUE(row.reference_f.has_value());
    for (const auto& r : ref_rows) {
      if (r.stat.name == row.stat.name) EXPECT_DOUBLE_EQ(*row.reference_f, r.stat.f_score());
    }
    if (*row.reference_f < 100.0) {
      ASSERT_TRUE(row.rer.has_value());
      EXPECT_NEAR(*row.rer, relative_error_reduction(*row.reference_f, row.stat.f_score()), 1e-12);
    }
  }
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i - 1].rer && rows[i].rer) EXPECT_LE(*rows[i - 1].rer, *rows[i].rer);
  }
}

TEST(Report, TextAndTsvContainEveryTable) {
  const auto report = analyze({hand_gold()}, {hand_pred()});
  EXPECT_DOUBLE_EQ(report.overall.las, 25.0);
  const std::string tsv = format_report_tsv(report);
  for (const char* table : {"dependency_length", "root_distance", "sentence_length", "deprel"}) {
    EXPECT_NE(tsv.find(table), std::string::npos) << table;
  }
  EXPECT_FALSE(format_report_text(report).empty());
}

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "g2g/config.hpp"
#include "g2g/evaluation.hpp"
#include "g2g/model.hpp"
#include "g2g/training.hpp"
#include "g2g/transition.hpp"
#include "g2g/treebank.hpp"
#include "oracles.hpp"

using namespace g2g;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr int kOracleTrees = 600;
constexpr int kOracleMaxLength = 15;
constexpr double kOracleSeconds = 10.0;
constexpr double kReductionTolerance = 1e-12;
constexpr int kReductionInputs = 20;
constexpr int kRelationSentences = 100;
constexpr double kGradTolerance = 1e-4;
constexpr std::size_t kGradSamples = 32;
constexpr double kGradSeconds = 60.0;
constexpr double kOverfitLas = 95.0;
constexpr int kOverfitEpochs = 30;
constexpr double kOverfitSeconds = 600.0;
constexpr double kRerTolerance = 0.01;
constexpr int kMetricPairs = 200;
constexpr int kValidityInits = 10;
constexpr int kValiditySentences = 100;

const std::vector<std::string> kLabels{"nsubj", "obj", "det", "amod", "case", "obl", "punct"};

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string data(const std::string& name) { return std::string(G2G_TEST_DATA) + "/" + name; }

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int id, const char* title, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, a, b, c);
  return buf;
}

std::vector<AnnotatedSentence> random_corpus(std::mt19937_64& rng, int count, int max_len) {
  std::vector<AnnotatedSentence> out;
  for (int i = 0; i < count; ++i) {
    const int n = 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(max_len));
    out.push_back(oracle::make_sentence(oracle::random_tree(rng, n, i % 2 == 0), kLabels, rng, 0.1));
  }
  return out;
}

bool valid_tree(const std::vector<int>& heads, int n) {
  if (static_cast<int>(heads.size()) != n + 1) return false;
  int roots = 0;
  for (int t = 1; t <= n; ++t) {
    const int h = heads[static_cast<std::size_t>(t)];
    if (h < 0 || h > n || h == t) return false;
    roots += h == 0;
    int cur = t, hops = 0;
    while (cur != 0 && hops++ <= n) cur = heads[static_cast<std::size_t>(cur)];
    if (cur != 0) return false;
  }
  return roots == 1;
}

// ---------------------------------------------------------------------------

Outcome oracle_soundness() {
  const auto start = Clock::now();
  std::mt19937_64 rng(101);
  std::vector<GoldTree> trees;
  int nonprojective = 0;
  for (int i = 0; i < kOracleTrees; ++i) {
    const int n = 1 + static_cast<int>(rng() % kOracleMaxLength);
    const auto heads = oracle::random_tree(rng, n, i % 2 == 0);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (auto& l : labels) l = static_cast<int>(rng() % 5);
    trees.push_back(gold_tree_from_heads(std::vector<int>(heads.begin() + 1, heads.end()), labels));
    nonprojective += oracle::has_crossing_arcs(heads);
  }
  for (const char* file : {"toy_train.conllu", "toy_dev.conllu"}) {
    const auto sents = read_conllu(data(file));
    const Vocabulary v = build_vocab(sents, 1);
    for (const auto& s : sents) trees.push_back(gold_tree(s, v));
  }
  int ok = 0;
  for (const auto& t : trees) {
    const auto actions = oracle_sequence(t);
    const ParserState end = replay(static_cast<int>(t.heads.size()) - 1, actions);
    ok += end.is_terminal() && end.arcs() == t.arcs();
  }
  const double secs = since(start);
  const bool pass = ok == static_cast<int>(trees.size()) && secs < kOracleSeconds && nonprojective > 0;
  return {pass, std::to_string(ok) + "/" + std::to_string(trees.size()) + " trees reproduced (" +
                    std::to_string(nonprojective) + " non-projective), " + fmt("%.2fs", secs)};
}

Outcome swap_coverage() {
  const GoldTree tree = gold_tree_from_heads({2, 0, 1});
  const auto actions = oracle_sequence(tree);
  int swaps = 0;
  for (const auto& a : actions) swaps += a.kind == ActionKind::Swap;
  const ParserState end = replay(3, actions);
  const bool pass = swaps >= 1 && end.is_terminal() && end.arcs() == tree.arcs();
  return {pass, std::to_string(swaps) + " SWAP, " + std::to_string(actions.size()) + " actions, arcs " +
                    (end.arcs() == tree.arcs() ? "match" : "differ")};
}

Outcome reduction_law() {
  EncoderConfig cfg;
  cfg.layers = 2;
  cfg.heads = 4;
  cfg.model_dim = 16;
  cfg.ff_dim = 32;
  cfg.max_positions = 32;
  cfg.graph_input = true;
  ParameterStore store;
  Initializer init(202);
  Encoder enc(store, cfg, {12, 6, 5}, init);
  for (const auto& layer : enc.layers()) {
    for (Tensor t : {layer.graph_key(), layer.graph_value()}) {
      for (double& v : t.data()) v = 0.0;
    }
  }
  std::mt19937_64 rng(203);
  std::normal_distribution<double> normal(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < kReductionInputs; ++trial) {
    const std::size_t n = 2 + rng() % 12;
    RelationMatrix rel = RelationMatrix::empty(n);
    const auto heads = oracle::random_tree(rng, static_cast<int>(n) - 1, false);
    for (std::size_t d = 1; d < n; ++d) rel.set_arc(static_cast<std::size_t>(heads[d]), d, static_cast<int>(rng() % 5));
    std::vector<double> values(n * cfg.model_dim);
    for (auto& v : values) v = normal(rng);
    const Tensor x = Tensor::from(n, cfg.model_dim, values);
    const auto got = oracle::to_matrix(enc.run_layers(x, rel, {}));
    auto expected = oracle::to_matrix(x);
    for (std::size_t l = 0; l < cfg.layers; ++l) {
      expected = oracle::reference_layer(store, "encoder.layer" + std::to_string(l) + ".", cfg, expected, {});
    }
    worst = std::max(worst, oracle::max_abs_diff(got, expected));
  }
  return {worst < kReductionTolerance, fmt("max abs err %.3e over 20 inputs", worst)};
}

Outcome relation_equivalence() {
  auto sentences = read_conllu(data("toy_train.conllu"));
  std::mt19937_64 rng(303);
  for (auto& s : random_corpus(rng, kRelationSentences - static_cast<int>(sentences.size()), 15)) sentences.push_back(s);
  const Vocabulary vocab = build_vocab(sentences, 1);
  std::size_t steps = 0, mismatches = 0;
  for (const std::string name : {"state-tr-g2g", "sent-tr-g2g"}) {
    ModelConfig cfg;
    cfg.variant = ModelVariant::from_name(name);
    cfg.encoder.layers = 1;
    cfg.encoder.heads = 2;
    cfg.encoder.model_dim = 8;
    cfg.encoder.ff_dim = 8;
    cfg.exist_hidden = 4;
    cfg.relation_hidden = 4;
    ParserModel model(cfg, vocab);
    const bool state = cfg.variant.base == ModelBase::State;
    for (const auto& s : sentences) {
      const EncodedSentence sent = encode_sentence(s, vocab);
      Episode ep = model.start(sent);
      const auto actions = oracle_sequence(*sent.gold);
      for (std::size_t k = 0; k <= actions.size(); ++k) {
        const AssembledInput in = model.assemble_input(sent, ep);
        const auto want = state ? oracle::state_graph(ep.state, true) : oracle::sentence_graph(ep.state);
        bool same = in.source == want.tokens && in.relations.n == want.tokens.size();
        for (std::size_t p = 0; same && p < in.relations.n; ++p) {
          same = in.relations.dep_label[p] == want.labels[p] && in.input.dep_label_ids[p] == want.labels[p];
          for (std::size_t q = 0; same && q < in.relations.n; ++q) {
            same = in.relations.codes[p * in.relations.n + q] == want.codes[p][q];
          }
        }
        ++steps;
        mismatches += !same;
        if (k < actions.size()) model.advance(ep, actions[k]);
      }
    }
  }
  return {mismatches == 0, std::to_string(steps - mismatches) + "/" + std::to_string(steps) + " steps over " +
                               std::to_string(sentences.size()) + " sentences x 2 layouts"};
}

Outcome gradient_check() {
  std::mt19937_64 rng(404);
  // six words with one crossing arc so the oracle uses SWAP
  const AnnotatedSentence s = oracle::make_sentence({-1, 3, 0, 2, 1, 2, 4}, kLabels, rng);
  const Vocabulary vocab = build_vocab({s}, 1);
  ModelConfig cfg;
  cfg.variant = ModelVariant::from_name("state-tr-g2g-c");
  cfg.encoder.layers = 2;
  cfg.encoder.heads = 4;
  cfg.encoder.model_dim = 32;
  cfg.encoder.ff_dim = 64;
  cfg.encoder.max_positions = 32;
  cfg.exist_hidden = 32;
  cfg.relation_hidden = 32;
  cfg.seed = 405;
  ParserModel model(cfg, vocab);
  const EncodedSentence sent = encode_sentence(s, vocab);
  const auto actions = oracle_sequence(*sent.gold);
  int swaps = 0;
  for (const auto& a : actions) swaps += a.kind == ActionKind::Swap;
  auto params = model.parameters().tensors();
  const auto names = model.parameters().names();
  bool covers = true;
  for (const char* want : {"encoder.layer0.graph_key", "encoder.layer1.graph_value", "comp.w1", "comp.label",
                           "history.wx", "history.wh"}) {
    covers = covers && model.parameters().contains(want);
  }
  const auto start = Clock::now();
  const auto r = finite_difference_check([&] { return model.loss(sent, actions); }, params, 1e-5, kGradSamples,
                                         406, 1e-6, names);
  const double secs = since(start);
  const bool pass = covers && swaps > 0 && r.max_relative_error < kGradTolerance && secs < kGradSeconds;
  return {pass, fmt("max rel err %.3e", r.max_relative_error) + " at " + r.worst +
                    fmt(" (analytic %.6e, numeric %.6e), ", r.worst_analytic, r.worst_numeric) +
                    std::to_string(r.coordinates) + " coordinates in " + std::to_string(params.size()) +
                    " tensors, " + fmt("%.1fs", secs)};
}

Outcome overfit() {
  const auto train_set = read_conllu(data("toy_train.conllu"));
  const auto start = Clock::now();
  std::string detail;
  bool pass = true;
  for (const std::string name : {"sent-tr-g2g", "sent-tr"}) {
    RunConfig rc;
    rc.set("model.variant", name);
    rc.train.epochs = kOverfitEpochs;
    rc.finalize();
    ParserModel model(rc.model, build_vocab(train_set, 1));
    const auto t0 = Clock::now();
    const TrainResult result = train(model, train_set, train_set, rc.train);
    const Scores s = score(train_set, parse_corpus(model, train_set));
    int reached = 0;
    for (const auto& e : result.report.epochs) {
      if (e.dev_las >= kOverfitLas) {
        reached = e.epoch;
        break;
      }
    }
    if (name == "sent-tr-g2g") pass = pass && s.las >= kOverfitLas && reached > 0;
    detail += name + fmt(" train LAS %.2f", s.las) +
              (reached ? " (>=95 at epoch " + std::to_string(reached) + ")" : std::string(" (never >=95)")) +
              fmt(" %.0fs; ", since(t0));
  }
  const double secs = since(start);
  pass = pass && secs < kOverfitSeconds;
  return {pass, detail + fmt("total %.0fs", secs)};
}

Outcome rer_arithmetic() {
  const double a = relative_error_reduction(89.07, 90.16);
  const double b = relative_error_reduction(91.94, 92.88);
  const bool pass = std::abs(a - 9.97) <= kRerTolerance && std::abs(b - 11.66) <= kRerTolerance;
  return {pass, fmt("%.4f and %.4f", a, b)};
}

Outcome metric_oracle() {
  std::mt19937_64 rng(808);
  int exact = 0, ordered = 0, consistent = 0;
  for (int trial = 0; trial < kMetricPairs; ++trial) {
    const auto gold = random_corpus(rng, 1 + static_cast<int>(rng() % 5), 25);
    std::vector<AnnotatedSentence> pred;
    for (const auto& g : gold) {
      const int n = static_cast<int>(g.size());
      const auto alt = oracle::random_tree(rng, n, false);
      std::vector<int> heads;
      std::vector<std::string> labels;
      for (int i = 1; i <= n; ++i) {
        heads.push_back(rng() % 3 == 0 ? alt[static_cast<std::size_t>(i)] : g.head(i));
        labels.push_back(rng() % 4 == 0 ? kLabels[rng() % kLabels.size()] : g.deprel(i));
      }
      pred.push_back(with_predicted_tree(g, heads, labels));
    }
    const Scores inc = score(gold, pred, {PunctuationMode::Include});
    const Scores exc = score(gold, pred, {PunctuationMode::Exclude});
    const auto ni = oracle::naive_score(gold, pred, false);
    const auto ne = oracle::naive_score(gold, pred, true);
    exact += inc.scored == ni.total && inc.head_correct == ni.heads && inc.labelled_correct == ni.labelled &&
             exc.scored == ne.total && exc.head_correct == ne.heads && exc.labelled_correct == ne.labelled;
    ordered += inc.las <= inc.uas && exc.las <= exc.uas;
    consistent += exc.scored <= inc.scored && inc.head_correct - exc.head_correct <= inc.scored - exc.scored &&
                  inc.labelled_correct - exc.labelled_correct <= inc.head_correct - exc.head_correct;
  }
  const bool pass = exact == kMetricPairs && ordered == kMetricPairs && consistent == kMetricPairs;
  return {pass, std::to_string(exact) + "/" + std::to_string(kMetricPairs) + " exact, LAS<=UAS in " +
                    std::to_string(ordered) + ", punctuation populations consistent in " + std::to_string(consistent)};
}

Outcome tree_validity() {
  std::mt19937_64 rng(909);
  const auto sentences = random_corpus(rng, kValiditySentences, 15);
  const Vocabulary vocab = build_vocab(sentences, 1);
  int valid = 0, total = 0;
  for (int init = 0; init < kValidityInits; ++init) {
    ModelConfig cfg;
    cfg.variant = ModelVariant::from_name(ModelVariant::names()[static_cast<std::size_t>(init) % 7]);
    cfg.encoder.layers = 1;
    cfg.encoder.heads = 2;
    cfg.encoder.model_dim = 16;
    cfg.encoder.ff_dim = 16;
    cfg.exist_hidden = 16;
    cfg.relation_hidden = 16;
    cfg.seed = 1000 + static_cast<std::uint64_t>(init);
    ParserModel model(cfg, vocab);
    // widen the weights so the classifiers are far from uniform
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Tensor t : model.parameters().tensors()) {
      for (double& v : t.data()) v += normal(rng);
    }
    for (const auto& s : sentences) {
      const EncodedSentence sent = encode_sentence(s, vocab, false);
      ++total;
      valid += valid_tree(model.parse(sent).heads, sent.size());
    }
  }
  return {valid == total, std::to_string(valid) + "/" + std::to_string(total) + " parses are trees"};
}

// ---------------------------------------------------------------------------

int run(const std::string& args) {
  const std::string cmd = std::string(G2G_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "g2g_acceptance_determinism";
  fs::remove_all(root);
  const std::string train = data("toy_train.conllu"), dev = data("toy_dev.conllu");
  std::vector<std::vector<std::string>> runs;
  for (int r = 0; r < 2; ++r) {
    const fs::path dir = root / std::to_string(r);
    fs::create_directories(dir);
    const std::string model = (dir / "m.ckpt").string(), parsed = (dir / "p.conllu").string();
    const std::string common = "--variant state-tr-g2g-c --seed 11 --set model.layers=1 --set model.dim=16 "
                               "--set model.ff_dim=32 --set model.heads=2 --set train.epochs=2 ";
    if (run(common + "train --train " + train + " --dev " + dev + " -m " + model) != 0) return {false, "train failed"};
    if (run(common + "parse -m " + model + " -i " + dev + " -o " + parsed) != 0) return {false, "parse failed"};
    if (run("analyze -g " + dev + " -p " + parsed + " -o " + (dir / "a").string()) != 0) {
      return {false, "analyze failed"};
    }
    runs.push_back({slurp(model), slurp(parsed), slurp(model + ".report.tsv"), slurp(dir / "a.tsv"),
                    slurp(dir / "a.txt")});
  }
  const char* what[] = {"checkpoint", "parse", "training report", "analysis tsv", "analysis text"};
  std::string detail;
  bool pass = true;
  for (std::size_t i = 0; i < runs[0].size(); ++i) {
    const bool same = !runs[0][i].empty() && runs[0][i] == runs[1][i];
    pass = pass && same;
    detail += std::string(i ? ", " : "") + what[i] + (same ? " identical" : " DIFFERENT");
  }
  fs::remove_all(root);
  return {pass, detail};
}

}  // namespace

int main() {
  report(1, "oracle soundness", oracle_soundness);
  report(2, "swap coverage", swap_coverage);
  report(3, "reduction law", reduction_law);
  report(4, "relation-matrix equivalence", relation_equivalence);
  report(5, "gradient correctness", gradient_check);
  report(6, "overfit sanity", overfit);
  report(7, "RER arithmetic", rer_arithmetic);
  report(8, "metric oracle equivalence", metric_oracle);
  report(9, "tree validity", tree_validity);
  report(10, "determinism", determinism);
  return failures == 0 ? 0 : 1;
}

// g2g: oracle extraction, training, parsing, scoring and error analysis.
//
// Exit codes: 0 ok, 1 user error (bad flags, config, input or checkpoint),
// 2 internal error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "g2g/config.hpp"
#include "g2g/evaluation.hpp"
#include "g2g/model.hpp"
#include "g2g/training.hpp"
#include "g2g/transition.hpp"
#include "g2g/treebank.hpp"

namespace {

using namespace g2g;

// User-facing failure with exit code 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Broken invariant with exit code 2.
struct InternalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string variant;
};

RunConfig resolve(const Globals& g) {
  RunConfig cfg = g.config_path.empty() ? RunConfig() : load_run_config(g.config_path);
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!g.variant.empty()) cfg.set("model.variant", g.variant);
  if (g.seed) cfg.seed = *g.seed;
  cfg.finalize();
  return cfg;
}

std::string pick(const std::string& flag, const std::string& fallback, const char* what) {
  const std::string& v = flag.empty() ? fallback : flag;
  if (v.empty()) throw UsageError(std::string("no ") + what + " given");
  return v;
}

std::vector<AnnotatedSentence> read_treebank(const std::string& path, const RunConfig& cfg) {
  if (!std::filesystem::exists(path)) throw UsageError("no such file: " + path);
  return read_conllu(path, cfg.punct_rule);
}

void write_text(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path);
  out << text;
}

std::optional<ModelVariant> expected_variant(const Globals& g, const RunConfig& cfg) {
  if (g.variant.empty()) return std::nullopt;
  return cfg.model.variant;
}

ParserModel load_model(const std::string& path, const std::optional<ModelVariant>& expected) {
  if (!std::filesystem::exists(path)) throw UsageError("no such checkpoint: " + path);
  return ParserModel::load(path, expected);
}

// ---------------------------------------------------------------------------

struct OracleArgs {
  std::string input, output = "-";
  bool verify = false;
  bool relations = false;
};

std::string relation_rows(const RelationMatrix& g) {
  std::string out;
  for (std::size_t i = 0; i < g.n; ++i) {
    if (i) out += '/';
    for (std::size_t j = 0; j < g.n; ++j) out += static_cast<char>('0' + g.codes[i * g.n + j]);
  }
  return out;
}

void cmd_oracle(const Globals& g, const OracleArgs& a) {
  const RunConfig cfg = resolve(g);
  const auto sentences = read_treebank(pick(a.input, cfg.paths.train, "input treebank"), cfg);
  const Vocabulary vocab = build_vocab(sentences, 1);
  std::ostringstream out;
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    const auto& sent = sentences[s];
    const GoldTree gold = gold_tree(sent, vocab);
    const auto actions = oracle_sequence(gold);
    if (a.verify) {
      const ParserState end = replay(sent.size() == 0 ? 0 : gold.size(), actions);
      const auto got = end.arcs();
      if (!end.is_terminal() || got != gold.arcs()) {
        throw InternalError("oracle verification failed for sentence " + sent.name(s + 1));
      }
    }
    if (s) out << "\n";
    for (const auto& c : sent.comments) out << c << "\n";
    ParserState state(gold.size());
    for (std::size_t t = 0; t < actions.size(); ++t) {
      const Action& act = actions[t];
      out << t << "\t" << to_string(act.kind) << "\t" << (act.is_arc() ? vocab.deprel_name(act.label) : "_") << "\n";
      state.apply(act);
      if (a.relations) out << "#G\t" << t << "\t" << relation_rows(sentence_graph(state)) << "\n";
    }
  }
  write_text(a.output, out.str());
}

struct TrainArgs {
  std::string train, dev, model, report;
};

void cmd_train(const Globals& g, const TrainArgs& a) {
  const RunConfig cfg = resolve(g);
  const auto train_set = read_treebank(pick(a.train, cfg.paths.train, "training treebank"), cfg);
  const auto dev_set = read_treebank(pick(a.dev, cfg.paths.dev, "development treebank"), cfg);
  if (train_set.empty() || dev_set.empty()) throw UsageError("training and development treebanks must be non-empty");
  const std::string model_path = pick(a.model, cfg.paths.model, "model path");

  ParserModel model(cfg.model, build_vocab(train_set, static_cast<int>(cfg.min_freq)));
  const TrainResult result = train(model, train_set, dev_set, cfg.train, cfg.eval, [](const EpochRecord& e) {
    std::fprintf(stderr, "epoch %d  loss %.4f  dev UAS %.2f  LAS %.2f  (%.1fs)\n", e.epoch, e.loss, e.dev_uas,
                 e.dev_las, e.seconds);
  });
  save_checkpoint(result.best, model_path);
  write_text(a.report.empty() ? model_path + ".report.tsv" : a.report, result.report.serialize());
}

struct ParseArgs {
  std::string input, output = "-", model;
};

void cmd_parse(const Globals& g, const ParseArgs& a) {
  const RunConfig cfg = resolve(g);
  const ParserModel model = load_model(pick(a.model, cfg.paths.model, "model path"), expected_variant(g, cfg));
  const auto sentences = read_treebank(pick(a.input, cfg.paths.test, "input treebank"), cfg);
  write_text(a.output, format_conllu(parse_corpus(model, sentences)));
}

struct EvalArgs {
  std::string gold, predicted;
};

void cmd_eval(const Globals& g, const EvalArgs& a) {
  const RunConfig cfg = resolve(g);
  const auto gold = read_treebank(pick(a.gold, cfg.paths.test, "gold treebank"), cfg);
  const auto predicted = read_treebank(a.predicted, cfg);
  const Scores s = score(gold, predicted, cfg.eval);
  std::printf("%.2f\t%.2f\n", s.uas, s.las);
}

struct AnalyzeArgs {
  std::string gold, predicted, reference, output;
};

void cmd_analyze(const Globals& g, const AnalyzeArgs& a) {
  const RunConfig cfg = resolve(g);
  const auto gold = read_treebank(pick(a.gold, cfg.paths.test, "gold treebank"), cfg);
  const auto predicted = read_treebank(a.predicted, cfg);
  std::optional<std::vector<AnnotatedSentence>> reference;
  if (!a.reference.empty()) reference = read_treebank(a.reference, cfg);
  const ErrorReport report = analyze(gold, predicted, cfg.eval, reference ? &*reference : nullptr);
  const std::string prefix = pick(a.output, cfg.paths.output, "output prefix");
  write_text(prefix + ".txt", format_report_text(report));
  write_text(prefix + ".tsv", format_report_tsv(report));
}

void cmd_config(const Globals& g, bool defaults) {
  if (defaults) {
    for (const auto& k : config_keys()) std::cout << "# " << k.help << "\n" << k.key << "=" << k.default_value << "\n";
    return;
  }
  std::cout << resolve(g).dump();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph-to-graph transformer dependency parser"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "key=value configuration file");
  app.add_option("--set", g.overrides, "override one config key (key=value), repeatable");
  app.add_option("--seed", g.seed, "random seed");
  app.add_option("--variant", g.variant, "model variant");

  OracleArgs oracle;
  auto* c_oracle = app.add_subcommand("oracle", "write gold transition sequences");
  c_oracle->add_option("-i,--input", oracle.input, "treebank (default paths.train)");
  c_oracle->add_option("-o,--output", oracle.output, "output file, - for stdout");
  c_oracle->add_flag("--verify", oracle.verify, "replay every sequence and check the arcs");
  c_oracle->add_flag("--relations", oracle.relations, "dump the relation matrix after each step");

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "train a parser");
  c_train->add_option("--train", tr.train, "training treebank (default paths.train)");
  c_train->add_option("--dev", tr.dev, "development treebank (default paths.dev)");
  c_train->add_option("-m,--model", tr.model, "checkpoint to write (default paths.model)");
  c_train->add_option("--report", tr.report, "training report (default <model>.report.tsv)");

  ParseArgs pa;
  auto* c_parse = app.add_subcommand("parse", "parse a treebank with a trained model");
  c_parse->add_option("-i,--input", pa.input, "treebank (default paths.test)");
  c_parse->add_option("-o,--output", pa.output, "CoNLL-U output, - for stdout");
  c_parse->add_option("-m,--model", pa.model, "checkpoint (default paths.model)");

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "print UAS and LAS");
  c_eval->add_option("-g,--gold", ev.gold, "gold treebank (default paths.test)");
  c_eval->add_option("-p,--predicted", ev.predicted, "predicted treebank")->required();

  AnalyzeArgs an;
  auto* c_analyze = app.add_subcommand("analyze", "error analysis by length, depth and label");
  c_analyze->add_option("-g,--gold", an.gold, "gold treebank (default paths.test)");
  c_analyze->add_option("-p,--predicted", an.predicted, "predicted treebank")->required();
  c_analyze->add_option("-r,--reference", an.reference, "second system for the per-label comparison");
  c_analyze->add_option("-o,--output", an.output, "report prefix; writes .txt and .tsv (default paths.output)");

  bool defaults = false;
  auto* c_config = app.add_subcommand("config", "print the resolved configuration");
  c_config->add_flag("--defaults", defaults, "list every key with its default and meaning");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (c_oracle->parsed()) cmd_oracle(g, oracle);
    if (c_train->parsed()) cmd_train(g, tr);
    if (c_parse->parsed()) cmd_parse(g, pa);
    if (c_eval->parsed()) cmd_eval(g, ev);
    if (c_analyze->parsed()) cmd_analyze(g, an);
    if (c_config->parsed()) cmd_config(g, defaults);
  } catch (const InternalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const AlignmentError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const CheckpointError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

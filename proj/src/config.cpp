#include "g2g/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace g2g {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ConfigError(key + ": expected a number, got '" + value + "'");
  return out;
}

bool parse_flag(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + value + "'");
}

std::string show(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

struct Field {
  const char* key;
  const char* help;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T, typename Get>
Field number(const char* key, const char* help, Get member) {
  return {key, help,
          [key, member](RunConfig& c, const std::string& v) { member(c) = parse_number<T>(key, v); },
          [member](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) {
              return show(member(c));
            } else {
              return std::to_string(member(c));
            }
          }};
}

template <typename Get>
Field text(const char* key, const char* help, Get member) {
  return {key, help, [member](RunConfig& c, const std::string& v) { member(c) = v; },
          [member](const RunConfig& c) { return member(c); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table{
      text("paths.train", "training treebank (CoNLL-U)", [](auto& c) -> auto& { return c.paths.train; }),
      text("paths.dev", "development treebank for early stopping", [](auto& c) -> auto& { return c.paths.dev; }),
      text("paths.test", "treebank to parse, evaluate or analyse", [](auto& c) -> auto& { return c.paths.test; }),
      text("paths.model", "checkpoint file", [](auto& c) -> auto& { return c.paths.model; }),
      text("paths.output", "output file or directory prefix", [](auto& c) -> auto& { return c.paths.output; }),
      {"model.variant", "one of state-tr, state-tr-g2g, state-tr-g2g-c, state-cls-tr, state-tr-g2cls, sent-tr, sent-tr-g2g",
       [](RunConfig& c, const std::string& v) {
         try {
           c.model.variant = ModelVariant::from_name(v);
         } catch (const std::invalid_argument& e) {
           throw ConfigError(std::string("model.variant: ") + e.what());
         }
       },
       [](const RunConfig& c) { return c.model.variant.name(); }},
      {"model.composition", "override the variant's composition model",
       [](RunConfig& c, const std::string& v) { c.model.variant.composition = parse_flag("model.composition", v); },
       [](const RunConfig& c) { return std::string(c.model.variant.composition ? "true" : "false"); }},
      {"model.history", "override the variant's history model",
       [](RunConfig& c, const std::string& v) { c.model.variant.history = parse_flag("model.history", v); },
       [](const RunConfig& c) { return std::string(c.model.variant.history ? "true" : "false"); }},
      number<std::size_t>("model.layers", "encoder layers", [](auto& c) -> auto& { return c.model.encoder.layers; }),
      number<std::size_t>("model.heads", "attention heads", [](auto& c) -> auto& { return c.model.encoder.heads; }),
      number<std::size_t>("model.dim", "model width m", [](auto& c) -> auto& { return c.model.encoder.model_dim; }),
      number<std::size_t>("model.ff_dim", "feed-forward width", [](auto& c) -> auto& { return c.model.encoder.ff_dim; }),
      number<std::size_t>("model.max_positions", "longest encoder input",
                          [](auto& c) -> auto& { return c.model.encoder.max_positions; }),
      number<double>("model.dropout", "dropout rate", [](auto& c) -> auto& { return c.model.encoder.dropout; }),
      number<std::size_t>("model.exist_hidden", "hidden width of the action classifier",
                          [](auto& c) -> auto& { return c.model.exist_hidden; }),
      number<std::size_t>("model.relation_hidden", "hidden width of the label classifier",
                          [](auto& c) -> auto& { return c.model.relation_hidden; }),
      number<double>("train.lr", "peak learning rate", [](auto& c) -> auto& { return c.train.learning_rate; }),
      number<double>("train.beta1", "Adam beta1", [](auto& c) -> auto& { return c.train.beta1; }),
      number<double>("train.beta2", "Adam beta2", [](auto& c) -> auto& { return c.train.beta2; }),
      number<double>("train.epsilon", "Adam epsilon", [](auto& c) -> auto& { return c.train.epsilon; }),
      number<double>("train.weight_decay", "decoupled weight decay", [](auto& c) -> auto& { return c.train.weight_decay; }),
      number<double>("train.clip", "global gradient-norm clip, 0 disables", [](auto& c) -> auto& { return c.train.clip_norm; }),
      number<double>("train.warmup", "warmup fraction of all updates", [](auto& c) -> auto& { return c.train.warmup_fraction; }),
      number<int>("train.epochs", "training epochs", [](auto& c) -> auto& { return c.train.epochs; }),
      number<int>("train.patience", "early-stopping patience in epochs, 0 disables",
                  [](auto& c) -> auto& { return c.train.patience; }),
      {"train.dropout", "apply dropout while training",
       [](RunConfig& c, const std::string& v) { c.train.dropout = parse_flag("train.dropout", v); },
       [](const RunConfig& c) { return std::string(c.train.dropout ? "true" : "false"); }},
      number<std::size_t>("train.min_freq", "words rarer than this map to UNK", [](auto& c) -> auto& { return c.min_freq; }),
      {"eval.punctuation", "include (UD convention) or exclude (WSJ convention)",
       [](RunConfig& c, const std::string& v) {
         if (v == "include") {
           c.eval.punctuation = PunctuationMode::Include;
         } else if (v == "exclude") {
           c.eval.punctuation = PunctuationMode::Exclude;
         } else {
           throw ConfigError("eval.punctuation: expected include or exclude, got '" + v + "'");
         }
       },
       [](const RunConfig& c) {
         return std::string(c.eval.punctuation == PunctuationMode::Include ? "include" : "exclude");
       }},
      {"eval.punct_rule", "upos (PUNCT tag) or deprel (punct label)",
       [](RunConfig& c, const std::string& v) {
         if (v == "upos") {
           c.punct_rule = PunctRule::Upos;
         } else if (v == "deprel") {
           c.punct_rule = PunctRule::Deprel;
         } else {
           throw ConfigError("eval.punct_rule: expected upos or deprel, got '" + v + "'");
         }
       },
       [](const RunConfig& c) { return std::string(c.punct_rule == PunctRule::Upos ? "upos" : "deprel"); }},
      number<std::uint64_t>("seed", "seed for initialisation, shuffling and dropout",
                            [](auto& c) -> auto& { return c.seed; }),
  };
  return table;
}

}  // namespace

RunConfig::RunConfig() { model.variant = ModelVariant::from_name("sent-tr-g2g"); }

void RunConfig::set(const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (key == f.key) {
      f.set(*this, value);
      return;
    }
  }
  throw ConfigError("unknown key '" + key + "'");
}

void RunConfig::finalize() {
  model.seed = seed;
  train.seed = seed;
  try {
    model.variant.validate();
    model.resolved_encoder().validate();
    train.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (model.exist_hidden == 0 || model.relation_hidden == 0) throw ConfigError("classifier widths must be positive");
  if (model.encoder.layers == 0) throw ConfigError("model.layers must be positive");
}

std::string RunConfig::dump() const {
  std::string out;
  for (const auto& f : fields()) out += std::string(f.key) + "=" + f.get(*this) + "\n";
  return out;
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    const RunConfig defaults;
    std::vector<ConfigKey> out;
    for (const auto& f : fields()) out.push_back({f.key, f.get(defaults), f.help});
    return out;
  }();
  return keys;
}

RunConfig parse_run_config(std::string_view text, const std::string& source) {
  RunConfig cfg;
  std::istringstream in{std::string(text)};
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected key=value");
    }
    try {
      cfg.set(trim(std::string_view(t).substr(0, eq)), trim(std::string_view(t).substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), path);
}

}  // namespace g2g

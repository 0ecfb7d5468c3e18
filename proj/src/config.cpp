#include "temporec/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "temporec/error.hpp"
#include "temporec/rng.hpp"

namespace temporec {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool is_key_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
}

// Cursor over the text of one value.
class ValueParser {
 public:
  ValueParser(std::string_view text, std::size_t line) : text_(text), line_(line) {}

  ConfigValue parse() {
    ConfigValue v = value(true);
    skip_space();
    if (pos_ != text_.size()) fail("unexpected text after value");
    return v;
  }

 private:
  ConfigValue value(bool allow_array) {
    skip_space();
    if (pos_ >= text_.size()) fail("missing value");
    ConfigValue v;
    v.line = line_;
    const char c = text_[pos_];
    if (c == '[') {
      if (!allow_array) fail("nested arrays are not supported");
      ++pos_;
      v.kind = ConfigValue::Kind::array;
      skip_space();
      while (pos_ < text_.size() && text_[pos_] != ']') {
        v.items.push_back(value(false));
        skip_space();
        if (pos_ < text_.size() && text_[pos_] == ',') {
          ++pos_;
          skip_space();
        } else {
          break;
        }
      }
      if (pos_ >= text_.size() || text_[pos_] != ']') fail("unterminated array");
      ++pos_;
      return v;
    }
    if (c == '"') {
      v.kind = ConfigValue::Kind::string;
      v.string = quoted();
      return v;
    }
    const auto end = text_.find_first_of(", \t]", pos_);
    const std::string_view token =
        text_.substr(pos_, end == std::string_view::npos ? text_.size() - pos_ : end - pos_);
    pos_ += token.size();
    if (token == "true" || token == "false") {
      v.kind = ConfigValue::Kind::boolean;
      v.boolean = token == "true";
      return v;
    }
    const char* first = token.data();
    const char* last = token.data() + token.size();
    if (!token.empty() && token.front() == '+') ++first;
    if (auto [p, ec] = std::from_chars(first, last, v.integer); ec == std::errc() && p == last) {
      v.kind = ConfigValue::Kind::integer;
      return v;
    }
    if (auto [p, ec] = std::from_chars(first, last, v.real); ec == std::errc() && p == last) {
      v.kind = ConfigValue::Kind::real;
      return v;
    }
    fail("cannot read value '" + std::string(token) + "'");
  }

  std::string quoted() {
    std::string out;
    ++pos_;
    while (pos_ < text_.size()) {
      const char c = text_[pos_++];
      if (c == '"') return out;
      if (c != '\\') {
        out += c;
        continue;
      }
      if (pos_ >= text_.size()) break;
      switch (text_[pos_++]) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        default: fail("unknown escape in string");
      }
    }
    fail("unterminated string");
  }

  void skip_space() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(line_, what); }

  std::string_view text_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

// Drops a trailing comment, leaving '#' inside strings alone.
std::string_view strip_comment(std::string_view line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_string && c == '\\') {
      ++i;
    } else if (c == '"') {
      in_string = !in_string;
    } else if (c == '#' && !in_string) {
      return line.substr(0, i);
    }
  }
  return line;
}

// Typed access to one section; remembers which keys were read so that the
// rest can be reported as unknown.
class Section {
 public:
  Section(const ConfigDocument& doc, const std::string& name) : name_(name) {
    if (const auto it = doc.find(name); it != doc.end()) values_ = &it->second;
  }

  const ConfigValue* find(const std::string& key) {
    used_.insert(key);
    if (!values_) return nullptr;
    const auto it = values_->find(key);
    return it == values_->end() ? nullptr : &it->second;
  }

  void read(const std::string& key, std::string& out) {
    if (const auto* v = find(key)) out = expect(*v, ConfigValue::Kind::string, key).string;
  }
  void read(const std::string& key, bool& out) {
    if (const auto* v = find(key)) out = expect(*v, ConfigValue::Kind::boolean, key).boolean;
  }
  void read(const std::string& key, double& out) {
    if (const auto* v = find(key)) out = real(*v, key);
  }
  void read(const std::string& key, std::int64_t& out) {
    if (const auto* v = find(key)) out = expect(*v, ConfigValue::Kind::integer, key).integer;
  }
  void read(const std::string& key, std::size_t& out) {
    if (const auto* v = find(key)) out = count(*v, key);
  }
  void read(const std::string& key, int& out) {
    if (const auto* v = find(key)) out = static_cast<int>(count(*v, key));
  }
  void read(const std::string& key, std::uint64_t& out, int) {
    if (const auto* v = find(key)) out = static_cast<std::uint64_t>(count(*v, key));
  }
  void read(const std::string& key, std::optional<double>& out) {
    if (const auto* v = find(key)) out = real(*v, key);
  }
  void read(const std::string& key, std::optional<Timestamp>& out) {
    if (const auto* v = find(key)) out = expect(*v, ConfigValue::Kind::integer, key).integer;
  }
  std::vector<std::string> strings(const std::string& key) {
    std::vector<std::string> out;
    if (const auto* v = find(key)) {
      for (const auto& item : expect(*v, ConfigValue::Kind::array, key).items) {
        out.push_back(expect(item, ConfigValue::Kind::string, key).string);
      }
    }
    return out;
  }
  std::optional<std::vector<std::size_t>> counts(const std::string& key) {
    const auto* v = find(key);
    if (!v) return std::nullopt;
    std::vector<std::size_t> out;
    for (const auto& item : expect(*v, ConfigValue::Kind::array, key).items) {
      out.push_back(count(item, key));
    }
    return out;
  }

  // Wraps parse_* helpers so that bad enum names report the line.
  template <typename F>
  void read_enum(const std::string& key, F&& assign) {
    if (const auto* v = find(key)) {
      const auto& text = expect(*v, ConfigValue::Kind::string, key).string;
      try {
        assign(text);
      } catch (const Error& e) {
        throw ParseError(v->line, name_ + "." + key + ": " + e.what());
      }
    }
  }

  void reject_unknown() const {
    if (!values_) return;
    for (const auto& [key, v] : *values_) {
      if (!used_.count(key)) {
        throw ParseError(v.line, "unknown key '" + key + "' in " +
                                     (name_.empty() ? std::string("top level")
                                                    : "[" + name_ + "]"));
      }
    }
  }

 private:
  const ConfigValue& expect(const ConfigValue& v, ConfigValue::Kind kind,
                            const std::string& key) const {
    if (v.kind != kind) {
      static const char* names[] = {"a boolean", "an integer", "a number", "a string",
                                    "an array"};
      throw ParseError(v.line, key + " must be " + names[static_cast<int>(kind)]);
    }
    return v;
  }
  double real(const ConfigValue& v, const std::string& key) const {
    if (v.kind == ConfigValue::Kind::integer) return static_cast<double>(v.integer);
    return expect(v, ConfigValue::Kind::real, key).real;
  }
  std::size_t count(const ConfigValue& v, const std::string& key) const {
    const auto i = expect(v, ConfigValue::Kind::integer, key).integer;
    if (i < 0) throw ParseError(v.line, key + " must not be negative");
    return static_cast<std::size_t>(i);
  }

  std::string name_;
  const std::map<std::string, ConfigValue>* values_ = nullptr;
  std::set<std::string> used_;
};

std::string number(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  std::string s(buf, r.ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (const char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

}  // namespace

ConfigDocument parse_config_document(std::istream& in) {
  ConfigDocument doc;
  doc[""];
  std::string current;
  std::set<std::string> seen_sections;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(line_no, "malformed section header");
      const std::string name(trim(line.substr(1, line.size() - 2)));
      if (name.empty() || !std::all_of(name.begin(), name.end(), is_key_char)) {
        throw ParseError(line_no, "invalid section name '" + name + "'");
      }
      if (!seen_sections.insert(name).second) {
        throw ParseError(line_no, "section [" + name + "] appears twice");
      }
      current = name;
      doc[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty() || !std::all_of(key.begin(), key.end(), is_key_char)) {
      throw ParseError(line_no, "invalid key '" + key + "'");
    }
    ConfigValue value = ValueParser(trim(line.substr(eq + 1)), line_no).parse();
    if (!doc[current].emplace(key, std::move(value)).second) {
      throw ParseError(line_no, "duplicate key '" + key + "'");
    }
  }
  return doc;
}

std::string_view to_string(CorpusSource s) {
  return s == CorpusSource::csv ? "csv" : "synthetic";
}

std::string_view to_string(ModelKind m) {
  switch (m) {
    case ModelKind::popularity: return "popularity";
    case ModelKind::svd: return "svd";
    case ModelKind::vae: return "vae";
  }
  return "";
}

ModelKind parse_model_kind(std::string_view s) {
  if (s == "popularity") return ModelKind::popularity;
  if (s == "svd") return ModelKind::svd;
  if (s == "vae") return ModelKind::vae;
  throw ContractError("unknown model '" + std::string(s) + "'");
}

void ExperimentConfig::derive_stage_seeds() {
  split.seed = derive_seed(seed, "split");
  svd.seed = derive_seed(seed, "svd");
  train.seed = derive_seed(seed, "train");
  synthetic.seed = synthetic_seed ? *synthetic_seed : derive_seed(seed, "synthetic");
}

std::uint64_t ExperimentConfig::init_seed() const { return derive_seed(seed, "init"); }

ExperimentConfig parse_experiment_config(std::istream& in) {
  const ConfigDocument doc = parse_config_document(in);
  for (const auto& [name, values] : doc) {
    static const std::set<std::string> known{"",      "corpus", "synthetic", "split",
                                             "recency", "model", "train",     "eval"};
    if (!known.count(name)) {
      const std::size_t line = values.empty() ? 0 : values.begin()->second.line;
      throw ParseError(line, "unknown section [" + name + "]");
    }
  }

  ExperimentConfig c;
  {
    Section top(doc, "");
    top.read("name", c.name);
    top.read("seed", c.seed, 0);
    std::string out = c.output_dir.string();
    top.read("output_dir", out);
    c.output_dir = out;
    top.reject_unknown();
  }
  {
    Section s(doc, "corpus");
    s.read_enum("source", [&](const std::string& v) {
      if (v == "csv") {
        c.source = CorpusSource::csv;
      } else if (v == "synthetic") {
        c.source = CorpusSource::synthetic;
      } else {
        throw ContractError("source must be \"csv\" or \"synthetic\"");
      }
    });
    std::string path;
    s.read("path", path);
    c.corpus_path = path;
    s.read("user_column", c.schema.user_column);
    s.read("item_column", c.schema.item_column);
    s.read("rating_column", c.schema.rating_column);
    s.read("timestamp_column", c.schema.timestamp_column);
    std::optional<double> rmin, rmax;
    s.read("rating_min", rmin);
    s.read("rating_max", rmax);
    if (rmin || rmax) c.schema.scale = RatingScale{rmin.value_or(1.0), rmax.value_or(5.0)};
    bool lenient = false;
    s.read("lenient", lenient);
    c.parse_mode = lenient ? ParseMode::lenient : ParseMode::strict;
    s.read("binarize_threshold", c.preprocess.binarize_threshold);
    s.read("min_user_degree", c.preprocess.min_user_degree);
    s.read("min_item_degree", c.preprocess.min_item_degree);
    std::optional<Timestamp> ws, we;
    s.read("window_start", ws);
    s.read("window_end", we);
    if (ws.has_value() != we.has_value()) {
      throw ContractError("window_start and window_end must be given together");
    }
    if (ws) c.preprocess.window = TimeWindow{*ws, *we};
    s.reject_unknown();
  }
  {
    Section s(doc, "synthetic");
    auto& d = c.synthetic;
    s.read("users", d.users);
    s.read("items", d.items);
    std::optional<Timestamp> horizon;
    s.read("horizon", horizon);
    if (horizon) d.horizon = *horizon;
    s.read("initial_item_fraction", d.initial_item_fraction);
    s.read("popularity_decay", d.popularity_decay);
    s.read("recency_affinity", d.recency_affinity);
    s.read("activity_span", d.activity_span);
    s.read("min_events", d.min_events);
    s.read("max_events", d.max_events);
    s.read("taste_clusters", d.taste_clusters);
    s.read("taste_boost", d.taste_boost);
    if (s.find("seed")) {
      std::uint64_t seed = 0;
      s.read("seed", seed, 0);
      c.synthetic_seed = seed;
    }
    s.reject_unknown();
  }
  {
    Section s(doc, "split");
    s.read_enum("protocol", [&](const std::string& v) { c.split.protocol = parse_protocol(v); });
    s.read_enum("phase", [&](const std::string& v) { c.split.phase = parse_phase(v); });
    s.read_enum("test_design",
                [&](const std::string& v) { c.split.test_design = parse_test_design(v); });
    s.read("holdout_fraction", c.split.holdout_fraction);
    s.read("validation_user_fraction", c.split.validation_user_fraction);
    s.read("cutoff_quantile", c.split.cutoff_quantile);
    s.read("cutoff_time", c.split.cutoff_time);
    s.read("validation_cutoff_time", c.split.validation_cutoff_time);
    s.reject_unknown();
  }
  {
    Section s(doc, "recency");
    s.read("threshold", c.recency.threshold);
    s.read("base", c.recency.base);
    s.read("slope", c.recency.slope);
    s.reject_unknown();
  }
  {
    Section s(doc, "model");
    s.read_enum("kind", [&](const std::string& v) { c.model = parse_model_kind(v); });
    s.read("hidden", c.vae.hidden);
    s.read("latent", c.vae.latent);
    s.read("dropout", c.vae.dropout);
    s.read("svd_dims", c.svd.dims);
    s.read("power_iters", c.svd.power_iters);
    s.read("oversample", c.svd.oversample);
    s.reject_unknown();
  }
  {
    Section s(doc, "train");
    auto& t = c.train;
    s.read("epochs", t.epochs);
    s.read("batch_size", t.batch_size);
    s.read("learning_rate", t.learning_rate);
    if (s.find("objectives")) {
      t.objectives.clear();
      const auto* v = s.find("objectives");
      for (const auto& name : s.strings("objectives")) {
        try {
          t.objectives.push_back(parse_objective(name));
        } catch (const Error& e) {
          throw ParseError(v->line, std::string("train.objectives: ") + e.what());
        }
      }
    }
    s.read_enum("optimizer", [&](const std::string& v) {
      if (v == "adam") {
        t.optimizer = OptimizerKind::adam;
      } else if (v == "sgd") {
        t.optimizer = OptimizerKind::sgd;
      } else {
        throw ContractError("optimizer must be \"adam\" or \"sgd\"");
      }
    });
    s.read("beta_max", t.beta_max);
    s.read("anneal_fraction", t.anneal_fraction);
    s.read("recency_includes_kl", t.recency_includes_kl);
    s.read("empirical_batches", t.empirical_batches);
    s.read("pareto_k", t.pareto_k);
    s.reject_unknown();
  }
  {
    Section s(doc, "eval");
    if (auto ks = s.counts("ks")) c.ks = *ks;
    s.reject_unknown();
  }
  c.train.ks = c.ks;
  c.derive_stage_seeds();
  validate(c);
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  return parse_experiment_config(in);
}

void validate(const ExperimentConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ContractError("config: " + what);
  };
  if (c.source == CorpusSource::csv) {
    require(!c.corpus_path.empty(), "corpus.path is required for a csv source");
    const bool timed = !c.schema.timestamp_column.empty();
    const bool needs_time = c.split.protocol != Protocol::traditional ||
                            (c.split.phase == Phase::development &&
                             c.split.test_design == TestDesign::temporal);
    require(timed || !needs_time,
            "temporal protocols and the temporal test design need a timestamp column");
    for (const auto o : c.train.objectives) {
      require(timed || o != Objective::recency,
              "the recency objective needs timestamps to weight items");
    }
    if (c.preprocess.binarize_threshold) {
      require(!c.schema.rating_column.empty(), "binarize_threshold needs a rating column");
    }
  } else {
    validate(c.synthetic);
  }
  if (c.preprocess.window) {
    require(c.preprocess.window->start <= c.preprocess.window->end,
            "window_start must not exceed window_end");
  }
  require(c.split.holdout_fraction > 0.0 && c.split.holdout_fraction < 1.0,
          "split.holdout_fraction must lie in (0, 1)");
  require(c.split.validation_user_fraction > 0.0 && c.split.validation_user_fraction < 1.0,
          "split.validation_user_fraction must lie in (0, 1)");
  require(c.split.cutoff_quantile > 0.0 && c.split.cutoff_quantile < 1.0,
          "split.cutoff_quantile must lie in (0, 1)");
  require(c.recency.base > 0.0 && c.recency.base <= 1.0, "recency.base must lie in (0, 1]");
  require(c.recency.slope >= 0.0, "recency.slope must be >= 0");
  require(!c.ks.empty(), "eval.ks must not be empty");
  for (const auto k : c.ks) require(k > 0, "eval.ks entries must be positive");

  if (c.model == ModelKind::vae) {
    require(c.vae.hidden > 0 && c.vae.latent > 0, "model.hidden and model.latent must be > 0");
    require(c.vae.dropout >= 0.0 && c.vae.dropout < 1.0, "model.dropout must lie in [0, 1)");
    require(c.train.epochs >= 1, "train.epochs must be >= 1");
    require(c.train.batch_size >= 1, "train.batch_size must be >= 1");
    require(c.train.learning_rate > 0.0, "train.learning_rate must be positive");
    require(!c.train.objectives.empty(), "train.objectives must not be empty");
    require(c.train.empirical_batches >= 1, "train.empirical_batches must be >= 1");
    require(c.train.beta_max >= 0.0, "train.beta_max must be >= 0");
    require(c.train.anneal_fraction >= 0.0 && c.train.anneal_fraction <= 1.0,
            "train.anneal_fraction must lie in [0, 1]");
    require(c.train.pareto_k > 0, "train.pareto_k must be positive");
  } else {
    require(c.train.objectives == std::vector<Objective>{Objective::relevance},
            "training objectives apply to the vae model only");
  }
  if (c.model == ModelKind::svd) require(c.svd.dims >= 1, "model.svd_dims must be >= 1");
}

std::string to_toml(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "name = " << quote(c.name) << "\n";
  o << "seed = " << c.seed << "\n";
  o << "output_dir = " << quote(c.output_dir.string()) << "\n";

  o << "\n[corpus]\n";
  o << "source = " << quote(std::string(to_string(c.source))) << "\n";
  o << "path = " << quote(c.corpus_path.string()) << "\n";
  o << "user_column = " << quote(c.schema.user_column) << "\n";
  o << "item_column = " << quote(c.schema.item_column) << "\n";
  o << "rating_column = " << quote(c.schema.rating_column) << "\n";
  o << "timestamp_column = " << quote(c.schema.timestamp_column) << "\n";
  if (c.schema.scale) {
    o << "rating_min = " << number(c.schema.scale->min) << "\n";
    o << "rating_max = " << number(c.schema.scale->max) << "\n";
  }
  o << "lenient = " << (c.parse_mode == ParseMode::lenient ? "true" : "false") << "\n";
  if (c.preprocess.binarize_threshold) {
    o << "binarize_threshold = " << number(*c.preprocess.binarize_threshold) << "\n";
  }
  o << "min_user_degree = " << c.preprocess.min_user_degree << "\n";
  o << "min_item_degree = " << c.preprocess.min_item_degree << "\n";
  if (c.preprocess.window) {
    o << "window_start = " << c.preprocess.window->start << "\n";
    o << "window_end = " << c.preprocess.window->end << "\n";
  }

  const auto& d = c.synthetic;
  o << "\n[synthetic]\n";
  o << "users = " << d.users << "\n";
  o << "items = " << d.items << "\n";
  o << "horizon = " << d.horizon << "\n";
  o << "initial_item_fraction = " << number(d.initial_item_fraction) << "\n";
  o << "popularity_decay = " << number(d.popularity_decay) << "\n";
  o << "recency_affinity = " << number(d.recency_affinity) << "\n";
  o << "activity_span = " << number(d.activity_span) << "\n";
  o << "min_events = " << d.min_events << "\n";
  o << "max_events = " << d.max_events << "\n";
  o << "taste_clusters = " << d.taste_clusters << "\n";
  o << "taste_boost = " << number(d.taste_boost) << "\n";
  if (c.synthetic_seed) o << "seed = " << *c.synthetic_seed << "\n";

  o << "\n[split]\n";
  o << "protocol = " << quote(std::string(to_string(c.split.protocol))) << "\n";
  o << "phase = " << quote(std::string(to_string(c.split.phase))) << "\n";
  o << "test_design = " << quote(std::string(to_string(c.split.test_design))) << "\n";
  o << "holdout_fraction = " << number(c.split.holdout_fraction) << "\n";
  o << "validation_user_fraction = " << number(c.split.validation_user_fraction) << "\n";
  o << "cutoff_quantile = " << number(c.split.cutoff_quantile) << "\n";
  if (c.split.cutoff_time) o << "cutoff_time = " << *c.split.cutoff_time << "\n";
  if (c.split.validation_cutoff_time) {
    o << "validation_cutoff_time = " << *c.split.validation_cutoff_time << "\n";
  }

  o << "\n[recency]\n";
  o << "threshold = " << number(c.recency.threshold) << "\n";
  o << "base = " << number(c.recency.base) << "\n";
  o << "slope = " << number(c.recency.slope) << "\n";

  o << "\n[model]\n";
  o << "kind = " << quote(std::string(to_string(c.model))) << "\n";
  o << "hidden = " << c.vae.hidden << "\n";
  o << "latent = " << c.vae.latent << "\n";
  o << "dropout = " << number(c.vae.dropout) << "\n";
  o << "svd_dims = " << c.svd.dims << "\n";
  o << "power_iters = " << c.svd.power_iters << "\n";
  o << "oversample = " << c.svd.oversample << "\n";

  const auto& t = c.train;
  o << "\n[train]\n";
  o << "epochs = " << t.epochs << "\n";
  o << "batch_size = " << t.batch_size << "\n";
  o << "learning_rate = " << number(t.learning_rate) << "\n";
  o << "objectives = [";
  for (std::size_t i = 0; i < t.objectives.size(); ++i) {
    o << (i ? ", " : "") << quote(std::string(to_string(t.objectives[i])));
  }
  o << "]\n";
  o << "optimizer = " << (t.optimizer == OptimizerKind::adam ? "\"adam\"" : "\"sgd\"") << "\n";
  o << "beta_max = " << number(t.beta_max) << "\n";
  o << "anneal_fraction = " << number(t.anneal_fraction) << "\n";
  o << "recency_includes_kl = " << (t.recency_includes_kl ? "true" : "false") << "\n";
  o << "empirical_batches = " << t.empirical_batches << "\n";
  o << "pareto_k = " << t.pareto_k << "\n";

  o << "\n[eval]\n";
  o << "ks = [";
  for (std::size_t i = 0; i < c.ks.size(); ++i) o << (i ? ", " : "") << c.ks[i];
  o << "]\n";
  return o.str();
}

}  // namespace temporec

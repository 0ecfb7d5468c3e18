#pragma once

// Experiment configuration: a small TOML subset reader and the validated
// experiment schema built on it.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "temporec/corpus.hpp"
#include "temporec/metrics.hpp"
#include "temporec/models.hpp"
#include "temporec/moo.hpp"
#include "temporec/protocols.hpp"
#include "temporec/synthetic.hpp"
#include "temporec/vae.hpp"

namespace temporec {

// Supported syntax: [section] headers, `key = value` lines, '#' comments,
// values that are double-quoted strings, integers, floats, true/false or
// single-line arrays of those.
struct ConfigValue {
  enum class Kind { boolean, integer, real, string, array };

  Kind kind = Kind::integer;
  bool boolean = false;
  std::int64_t integer = 0;
  double real = 0.0;
  std::string string;
  std::vector<ConfigValue> items;
  std::size_t line = 0;
};

// Section name -> key -> value. Keys before the first header live under "".
using ConfigDocument = std::map<std::string, std::map<std::string, ConfigValue>>;

ConfigDocument parse_config_document(std::istream& in);

enum class CorpusSource { csv, synthetic };
enum class ModelKind { popularity, svd, vae };

std::string_view to_string(CorpusSource s);
std::string_view to_string(ModelKind m);
ModelKind parse_model_kind(std::string_view s);

struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";

  CorpusSource source = CorpusSource::synthetic;
  std::filesystem::path corpus_path;
  CsvSchema schema;
  ParseMode parse_mode = ParseMode::strict;
  PreprocessOptions preprocess;
  DriftCorpusSpec synthetic;
  std::optional<std::uint64_t> synthetic_seed;  // defaults to one derived from seed

  SplitParams split;
  RecencyParams recency;

  ModelKind model = ModelKind::vae;
  VaeArchitecture vae;  // items is taken from the corpus
  SvdOptions svd;
  TrainConfig train;
  std::vector<std::size_t> ks{20};

  // Copies the root seed into every stage (split, synthetic corpus, SVD,
  // training) as an independent derived seed.
  void derive_stage_seeds();
  std::uint64_t init_seed() const;
};

// Parses and validates. Unknown sections or keys and wrongly typed values
// are ParseErrors carrying the line; inconsistent settings are ContractErrors.
ExperimentConfig parse_experiment_config(std::istream& in);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// Throws ContractError describing the first inconsistency, for example a
// recency objective or temporal protocol on data without timestamps.
void validate(const ExperimentConfig& config);

// Canonical text form listing every setting; parsing it gives back an equal
// configuration.
std::string to_toml(const ExperimentConfig& config);

}  // namespace temporec
